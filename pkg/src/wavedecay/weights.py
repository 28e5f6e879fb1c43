"""Japanese bracket weights, the discrete weighted sup-norm and the explicit
decay constants.

Every constant is evaluated in exact rational arithmetic (``fractions``) and
rounded once at the end, so rational inputs reproduce the closed formulas to
within one ulp.  The only irrational ingredient is ``6**(q-1)`` for
non-integer ``q``.
"""
from __future__ import annotations

import math
from dataclasses import dataclass, field
from fractions import Fraction

import numpy as np

__all__ = [
    "WeightedNormParams",
    "ConstantSet",
    "SpacetimeSampleSet",
    "bracket",
    "little_c",
    "big_c1",
    "big_c2",
    "big_cm",
    "c_pq",
    "theorem_constants",
    "corollary_source_constant",
    "weight",
    "log_weight",
    "weighted_sup",
]

OUTSIDE_REGIME = "outside contraction regime"
INSIDE_REGIME = "contraction regime"


def _frac(x) -> Fraction:
    if isinstance(x, Fraction):
        return x
    return Fraction(x)


def bracket(s):
    """Return ``1 + |s|`` (works elementwise on arrays)."""
    if np.ndim(s) == 0 and not isinstance(s, np.ndarray):
        return 1.0 + abs(float(s))
    return 1.0 + np.abs(np.asarray(s, dtype=float))


def little_c(p) -> float:
    """``c_p = 1 / (2 (p - 2))``, defined for ``p > 2``."""
    p = _frac(p)
    if p <= 2:
        raise ValueError(f"c_p needs p > 2, got p={float(p)}")
    return float(1 / (2 * (p - 2)))


def big_c1(p) -> float:
    """``C1_p = max(9 / (2 (p - 2)), 4)`` for ``p > 2``."""
    p = _frac(p)
    if p <= 2:
        raise ValueError(f"C1_p needs p > 2, got p={float(p)}")
    return float(max(Fraction(9) / (2 * (p - 2)), Fraction(4)))


def big_c2(p) -> float:
    """``C2_p = max(3 / (p - 1), 5)`` for ``p > 1``."""
    p = _frac(p)
    if p <= 1:
        raise ValueError(f"C2_p needs p > 1, got p={float(p)}")
    return float(max(Fraction(3) / (p - 1), Fraction(5)))


def big_cm(m) -> float:
    """``C_m = max(9 / (2 (m - 2)), 5)`` for ``m > 2``."""
    m = _frac(m)
    if m <= 2:
        raise ValueError(f"C_m needs m > 2, got m={float(m)}")
    return float(max(Fraction(9) / (2 * (m - 2)), Fraction(5)))


def _six_power(e: Fraction) -> Fraction:
    if e.denominator == 1:
        return Fraction(6) ** int(e)
    return Fraction(math.pow(6.0, float(e)))


def c_pq(p, q) -> float:
    """Cone constant ``(3/2) 6**(q-1) / (q-2) * max(2/(p-1), 3)``.

    Requires ``q > 2`` and ``p > 1``.
    """
    p, q = _frac(p), _frac(q)
    if q <= 2:
        raise ValueError(f"C_pq needs q > 2, got q={float(q)}")
    if p <= 1:
        raise ValueError(f"C_pq needs p > 1, got p={float(p)}")
    value = Fraction(3, 2) * _six_power(q - 1) / (q - 2) * max(2 / (p - 1), Fraction(3))
    return float(value)


@dataclass(frozen=True)
class WeightedNormParams:
    """Exponents ``(r, p)`` of the weight ``<t+|x|>^r <t-|x|>^(p-r)``."""

    r: float
    p: float

    def __post_init__(self):
        if not (self.p >= self.r >= 0):
            raise ValueError(f"need p >= r >= 0, got r={self.r}, p={self.p}")


@dataclass(frozen=True)
class ConstantSet:
    """Constants entering one decay statement.

    ``p`` is the decay exponent the constants were evaluated at, ``C_pq`` the
    cone constant paired with the potential (``C_{p,k}``) and ``C_source`` the
    cone constant paired with a source term, when there is one.
    """

    p: float
    c_p: float
    C1_p: float
    C2_p: float
    C_m: float
    C_pq: float
    delta: float
    C_total: float
    contractive: bool
    C_source: float | None = None

    @property
    def status(self) -> str:
        return INSIDE_REGIME if self.contractive else OUTSIDE_REGIME

    def as_dict(self) -> dict:
        out = {
            "p": self.p,
            "c_p": self.c_p,
            "C1_p": self.C1_p,
            "C2_p": self.C2_p,
            "C_m": self.C_m,
            "C_pq": self.C_pq,
            "delta": self.delta,
            "C_total": self.C_total if math.isfinite(self.C_total) else None,
            "contractive": self.contractive,
            "status": self.status,
        }
        if self.C_source is not None:
            out["C_source"] = self.C_source
        return out


def _check_amplitudes(**amps):
    for name, val in amps.items():
        if val < 0:
            raise ValueError(f"{name} must be >= 0, got {val}")


def theorem_constants(f0, f1, g0, m, V0, k) -> ConstantSet:
    """Decay constant ``C = C_m (f0+f1+g0) / (1 - C_{p,k} V0)``, ``p = min(k, m-1)``.

    ``delta = C_{p,k} V0 >= 1`` is not an error: the returned set has
    ``contractive=False`` and ``C_total = inf``.
    """
    if not m > 3:
        raise ValueError(f"need m > 3, got m={m}")
    if not k > 2:
        raise ValueError(f"need k > 2, got k={k}")
    _check_amplitudes(f0=f0, f1=f1, g0=g0, V0=V0)
    mf, kf = _frac(m), _frac(k)
    p = min(kf, mf - 1)
    Cpk = _frac(c_pq(p, kf))
    delta = Cpk * _frac(V0)
    data_sum = _frac(f0) + _frac(f1) + _frac(g0)
    contractive = delta < 1
    C_total = float(_frac(big_cm(mf)) * data_sum / (1 - delta)) if contractive else math.inf
    return ConstantSet(
        p=float(p),
        c_p=little_c(p),
        C1_p=big_c1(p),
        C2_p=big_c2(p),
        C_m=big_cm(mf),
        C_pq=float(Cpk),
        delta=float(delta),
        C_total=C_total,
        contractive=contractive,
    )


def corollary_source_constant(f0, f1, g0, F0, m, k, q, r, V0) -> ConstantSet:
    """Constant for the sourced problem ``(C_m sum + C_{r,q} F0) / (1 - C_{p,k} V0)``.

    Here ``p = min(k, m-1, r)``; the value is returned as ``C_total`` and the
    source cone constant as ``C_source``.
    """
    if not m > 3:
        raise ValueError(f"need m > 3, got m={m}")
    if not k > 2:
        raise ValueError(f"need k > 2, got k={k}")
    if not q > 2:
        raise ValueError(f"need q > 2, got q={q}")
    if not (1 < r <= q):
        raise ValueError(f"need 1 < r <= q, got r={r}, q={q}")
    _check_amplitudes(f0=f0, f1=f1, g0=g0, F0=F0, V0=V0)
    mf, kf, qf, rf = _frac(m), _frac(k), _frac(q), _frac(r)
    p = min(kf, mf - 1, rf)
    Cpk = _frac(c_pq(p, kf))
    Crq = _frac(c_pq(rf, qf))
    delta = Cpk * _frac(V0)
    contractive = delta < 1
    numerator = _frac(big_cm(mf)) * (_frac(f0) + _frac(f1) + _frac(g0)) + Crq * _frac(F0)
    C_total = float(numerator / (1 - delta)) if contractive else math.inf
    return ConstantSet(
        p=float(p),
        c_p=little_c(p) if p > 2 else math.nan,
        C1_p=big_c1(p) if p > 2 else math.nan,
        C2_p=big_c2(p),
        C_m=big_cm(mf),
        C_pq=float(Cpk),
        delta=float(delta),
        C_total=C_total,
        contractive=contractive,
        C_source=float(Crq),
    )


def log_weight(t, x_norm, params: WeightedNormParams):
    """Natural log of :func:`weight`, safe for large exponents."""
    t = np.asarray(t, dtype=float)
    x = np.asarray(x_norm, dtype=float)
    return params.r * np.log1p(t + x) + (params.p - params.r) * np.log1p(np.abs(t - x))


def weight(t, x_norm, params: WeightedNormParams):
    """``<t+|x|>^r <t-|x|>^(p-r)``; scalar in, float out."""
    t_arr = np.asarray(t, dtype=float)
    x_arr = np.asarray(x_norm, dtype=float)
    if np.any(t_arr < 0) or np.any(x_arr < 0):
        raise ValueError("weight needs t >= 0 and x_norm >= 0")
    out = (1.0 + t_arr + x_arr) ** params.r * (1.0 + np.abs(t_arr - x_arr)) ** (params.p - params.r)
    if out.ndim == 0:
        return float(out)
    return out


@dataclass
class SpacetimeSampleSet:
    """Field values at a finite set of ``(t, |x|)`` points."""

    t: np.ndarray
    r: np.ndarray
    values: np.ndarray = field(default=None)

    def __post_init__(self):
        self.t = np.atleast_1d(np.asarray(self.t, dtype=float))
        self.r = np.atleast_1d(np.asarray(self.r, dtype=float))
        if self.values is None:
            self.values = np.zeros_like(self.t)
        self.values = np.atleast_1d(np.asarray(self.values, dtype=float))
        if not (self.t.shape == self.r.shape == self.values.shape) or self.t.ndim != 1:
            raise ValueError("t, r and values must be 1-d arrays of equal length")
        if np.any(self.t < 0) or np.any(self.r < 0):
            raise ValueError("sample points need t >= 0 and r >= 0")

    @classmethod
    def from_points(cls, points, values=None) -> "SpacetimeSampleSet":
        pts = np.asarray(points, dtype=float).reshape(-1, 2)
        return cls(pts[:, 0], pts[:, 1], values)

    @classmethod
    def tensor(cls, t_values, r_values) -> "SpacetimeSampleSet":
        tt, rr = np.meshgrid(np.asarray(t_values, float), np.asarray(r_values, float), indexing="ij")
        return cls(tt.ravel(), rr.ravel())

    @property
    def points(self) -> list[tuple[float, float]]:
        return list(zip(self.t.tolist(), self.r.tolist()))

    def __len__(self) -> int:
        return self.t.size

    def with_values(self, values) -> "SpacetimeSampleSet":
        return SpacetimeSampleSet(self.t.copy(), self.r.copy(), values)


def weighted_sup(samples: SpacetimeSampleSet, params: WeightedNormParams) -> float:
    """Max of ``weight * |value|`` over the samples.

    This is a lower bound for the continuum sup norm; it can only see the
    points it is given.
    """
    if len(samples) == 0:
        raise ValueError("weighted_sup of an empty sample set")
    w = np.atleast_1d(weight(samples.t, samples.r, params))
    return float(np.max(w * np.abs(samples.values)))

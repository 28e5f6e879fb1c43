"""Numerical certification of the sphere and cone bounds over parameter sweeps.

Each check evaluates a left-hand side (an exact or quadrature value of a
geometric integral) and a right-hand side (a weight times an explicit
constant) on a grid, and reports the worst ratio.  Ratios are formed in log
space.  A point passes when ``LHS (1 + err) <= RHS (1 + tolerance)``, where
``err`` is the relative numerical error of the left-hand side, so a bound is
never certified beyond what the numerics can resolve.
"""
from __future__ import annotations

import csv
import json
import math
from dataclasses import dataclass, field

import numpy as np

from .geometry import ConeKernelParams, cone_integral, sphere_integral_closed_form
from .parallel import chunked_map
from .weights import big_c1, big_c2, c_pq, little_c

__all__ = [
    "SweepSpec",
    "BoundReport",
    "verify_lemma1_basic",
    "verify_lemma1_boxed1",
    "verify_lemma1_boxed2",
    "verify_lemma2",
    "write_bound_csv",
]

# relative rounding budget of the closed-form sphere integral
CLOSED_FORM_REL_ERR = 1e-14


@dataclass
class SweepSpec:
    """Parameter grid for a bound check.

    ``t_values`` x ``x_values`` is swept as a tensor product.  With
    ``boundary_lines`` the ratios ``x/t`` in ``{1/4, 1/2, 1, 2}`` are added for
    every ``t`` together with the row ``t = 1``; these are where the case
    analysis behind the constants switches regime.
    """

    p_values: list
    t_values: list
    x_values: list
    q_values: list = field(default_factory=list)
    tolerance: float = 1e-9
    boundary_lines: bool = True
    include_origin: bool = False
    pairs: list | None = None

    def pq_pairs(self) -> list:
        """Explicit ``pairs`` if given, else every ``(p, q)`` with ``q >= p``."""
        if self.pairs is not None:
            return [(float(p), float(q)) for p, q in self.pairs]
        return [(p, q) for p in self.p_values for q in self.q_values if q >= p]

    @classmethod
    def default(cls, p_values, q_values=(), *, t_range=(1e-2, 1e2), n=25, **kw) -> "SweepSpec":
        grid = np.geomspace(t_range[0], t_range[1], n).tolist()
        return cls(p_values=list(p_values), q_values=list(q_values), t_values=grid, x_values=list(grid), **kw)

    def points(self, allow_origin: bool = True) -> np.ndarray:
        """Unique ``(t, x)`` pairs, sorted, as an ``(n, 2)`` array."""
        t = np.asarray(self.t_values, dtype=float)
        x = np.asarray(self.x_values, dtype=float)
        if t.size == 0 or (x.size == 0 and not self.include_origin):
            raise ValueError("empty sweep")
        pts = [np.stack(np.meshgrid(t, x, indexing="ij"), axis=-1).reshape(-1, 2)] if x.size else []
        if self.boundary_lines:
            for ratio in (0.25, 0.5, 1.0, 2.0):
                pts.append(np.stack([t, ratio * t], axis=1))
            if x.size:
                pts.append(np.stack([np.ones_like(x), x], axis=1))
        if self.include_origin and allow_origin:
            pts.append(np.stack([t, np.zeros_like(t)], axis=1))
        out = np.unique(np.concatenate(pts), axis=0)
        if np.any(out[:, 0] <= 0) or np.any(out[:, 1] < 0):
            raise ValueError("sweep needs t > 0 and x >= 0")
        return out


@dataclass
class BoundReport:
    """Worst-case outcome of one bound check."""

    name: str
    worst_ratio: float
    worst_point: dict
    passed: bool
    n_points: int
    tolerance: float
    rows: list = field(default_factory=list, repr=False)

    def as_dict(self) -> dict:
        return {
            "name": self.name,
            "worst_ratio": self.worst_ratio,
            "worst_point": self.worst_point,
            "pass": self.passed,
            "n_points": self.n_points,
            "tolerance": self.tolerance,
        }

    def to_json(self) -> str:
        return json.dumps(self.as_dict(), sort_keys=True, indent=2)


def write_bound_csv(report: BoundReport, path) -> None:
    """Per-point rows with columns ``t, x, p, q, lhs, rhs, ratio``."""
    with open(path, "w", newline="") as fh:
        w = csv.writer(fh)
        w.writerow(["t", "x", "p", "q", "lhs", "rhs", "ratio"])
        for row in report.rows:
            w.writerow(["" if v is None else repr(float(v)) for v in row])


def _log_bracket(s):
    return np.log1p(np.abs(s))


def _collect(name, tolerance, blocks) -> BoundReport:
    """Blocks of ``(t, x, p, q, lhs, log_lhs, log_rhs, rel_err)`` arrays."""
    rows = []
    worst = -math.inf
    worst_point = {}
    passed = True
    n = 0
    log_tol = math.log1p(tolerance)
    for t, x, p, q, lhs, log_lhs, log_rhs, rel_err in blocks:
        log_ratio = log_lhs - log_rhs
        margin = log_ratio + np.log1p(rel_err) - log_tol
        ratio = np.exp(log_ratio)
        rhs = np.exp(log_rhs)
        n += t.size
        if np.any(margin > 0) or not np.all(np.isfinite(log_ratio) | (lhs == 0)):
            passed = False
        if t.size:
            k = int(np.argmax(np.where(np.isfinite(log_ratio), log_ratio, -np.inf)))
            if log_ratio[k] > worst or worst == -math.inf:
                worst = float(log_ratio[k])
                worst_point = {"t": float(t[k]), "x": float(x[k]), "p": float(p)}
                if q is not None:
                    worst_point["q"] = float(q)
        for i in range(t.size):
            rows.append((t[i], x[i], p, q, lhs[i], rhs[i], ratio[i]))
    if n == 0:
        raise ValueError("empty sweep")
    return BoundReport(
        name=name,
        worst_ratio=math.exp(worst) if worst > -math.inf else 0.0,
        worst_point=worst_point,
        passed=passed,
        n_points=n,
        tolerance=tolerance,
        rows=rows,
    )


def _check_p(spec: SweepSpec, lower: float, what: str):
    if not spec.p_values:
        raise ValueError("empty sweep: no p values")
    for p in spec.p_values:
        if not p > lower:
            raise ValueError(f"{what} needs p > {lower:g}, got p={p}")


def verify_lemma1_basic(spec: SweepSpec) -> BoundReport:
    """Sphere average of ``<y>^-p`` against ``c_p t / (|x| <t-|x|>^(p-2))``."""
    _check_p(spec, 2, "sphere bound")
    pts = spec.points(allow_origin=False)
    pts = pts[pts[:, 1] > 0]
    if pts.size == 0:
        raise ValueError("sphere bound needs x > 0 points")
    t, x = pts[:, 0], pts[:, 1]
    blocks = []
    for p in spec.p_values:
        lhs = sphere_integral_closed_form(x, t, p)
        log_rhs = math.log(little_c(p)) + np.log(t) - np.log(x) - (p - 2) * _log_bracket(t - x)
        blocks.append((t, x, float(p), None, lhs, np.log(lhs), log_rhs, np.full(t.size, CLOSED_FORM_REL_ERR)))
    return _collect("sphere_basic", spec.tolerance, blocks)


def _sphere_lhs(x, t, p):
    """Sphere average of ``<y>^-p`` including the centre ``x = 0``."""
    out = np.empty_like(t)
    centre = x == 0
    out[centre] = t[centre] ** 2 * (1.0 + t[centre]) ** (-p)
    if np.any(~centre):
        out[~centre] = sphere_integral_closed_form(x[~centre], t[~centre], p)
    return out


def verify_lemma1_boxed1(spec: SweepSpec) -> BoundReport:
    """``I_p / t`` against ``C1_p / (<t+x> <t-x>^(p-2))``."""
    _check_p(spec, 2, "first weighted sphere bound")
    pts = spec.points()
    t, x = pts[:, 0], pts[:, 1]
    blocks = []
    for p in spec.p_values:
        lhs = _sphere_lhs(x, t, p) / t
        log_rhs = math.log(big_c1(p)) - _log_bracket(t + x) - (p - 2) * _log_bracket(t - x)
        blocks.append((t, x, float(p), None, lhs, np.log(lhs), log_rhs, np.full(t.size, CLOSED_FORM_REL_ERR)))
    return _collect("sphere_weighted_1", spec.tolerance, blocks)


def verify_lemma1_boxed2(spec: SweepSpec) -> BoundReport:
    """``I_{p-1} / t^2`` against ``C2_p / (<t+x> <t-x>^(p-2))``, ``p > 3``."""
    _check_p(spec, 3, "second weighted sphere bound")
    pts = spec.points()
    t, x = pts[:, 0], pts[:, 1]
    blocks = []
    for p in spec.p_values:
        lhs = _sphere_lhs(x, t, p - 1) / t**2
        log_rhs = math.log(big_c2(p)) - _log_bracket(t + x) - (p - 2) * _log_bracket(t - x)
        blocks.append((t, x, float(p), None, lhs, np.log(lhs), log_rhs, np.full(t.size, CLOSED_FORM_REL_ERR)))
    return _collect("sphere_weighted_2", spec.tolerance, blocks)


def verify_lemma2(spec: SweepSpec, *, rtol: float = 1e-6, threads: int = 1) -> BoundReport:
    """Source cone integral against ``C_pq / (<t+x> <t-x>^(p-1))``.

    The pairs come from :meth:`SweepSpec.pq_pairs`; the cone integral's own
    error estimate enters the pass test.
    """
    pairs = spec.pq_pairs()
    if not pairs:
        raise ValueError("empty sweep: cone bound needs at least one (p, q) pair with q >= p")
    for p, q in pairs:
        ConeKernelParams(p, q)
    pts = spec.points()
    t, x = pts[:, 0], pts[:, 1]
    blocks = []
    for p, q in pairs:
        params = ConeKernelParams(p, q)

        def run(a, b, params=params):
            est = cone_integral(x[a:b], t[a:b], params, rtol=rtol)
            return est.value, est.error

        parts = chunked_map(run, t.size, threads)
        lhs = np.concatenate([v for v, _ in parts])
        err = np.concatenate([e for _, e in parts])
        rel = np.where(lhs > 0, err / np.where(lhs > 0, lhs, 1.0), 0.0)
        log_rhs = math.log(c_pq(p, q)) - _log_bracket(t + x) - (p - 1) * _log_bracket(t - x)
        with np.errstate(divide="ignore"):
            log_lhs = np.log(lhs)
        blocks.append((t, x, float(p), float(q), lhs, log_lhs, log_rhs, rel))
    return _collect("cone_source", spec.tolerance, blocks)

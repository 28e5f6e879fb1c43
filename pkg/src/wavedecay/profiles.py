"""Named data, potential and source profiles used by the CLI and the demos."""
from __future__ import annotations

import numpy as np

from .duhamel import InitialDataSpec, RadialPotential, SourceSpec

__all__ = [
    "model_data",
    "gaussian_data",
    "bump_data",
    "model_potential",
    "model_source",
    "DATA_PROFILES",
    "POTENTIAL_PROFILES",
    "SOURCE_PROFILES",
    "make_data",
    "make_potential",
    "make_source",
]


def _arr(r):
    return np.asarray(r, dtype=float)


def model_data(f0: float = 1.0, f1: float = 1.0, g0: float = 1.0, m: float = 4.0) -> InitialDataSpec:
    """``f = a <r>^-(m-1)`` with ``a = min(f0, f1/(m-1))`` and ``g = g0 <r>^-m``.

    These saturate the decay assumptions.  ``f`` has a corner at the origin
    (``f'(0) != 0``), so the derived time-derivative data do not exist.
    """
    a = min(f0, f1 / (m - 1))
    return InitialDataSpec(
        f=lambda r: a * (1 + _arr(r)) ** (1 - m),
        f_prime=lambda r: -(m - 1) * a * (1 + _arr(r)) ** (-m),
        g=lambda r: g0 * (1 + _arr(r)) ** (-m),
        m=m,
        f0=f0,
        f1=f1,
        g0=g0,
        f_second=lambda r: m * (m - 1) * a * (1 + _arr(r)) ** (-m - 1),
        g_prime=lambda r: -m * g0 * (1 + _arr(r)) ** (-m - 1),
        name="model",
    )


def gaussian_data(amp_f: float = 1.0, amp_g: float = 0.0, width: float = 1.0, m: float = 4.0) -> InitialDataSpec:
    """Smooth data ``f = A e^{-(r/w)^2}``, ``g = B e^{-(r/w)^2}``."""
    s2 = width**2

    def e(r):
        return np.exp(-(_arr(r) ** 2) / s2)

    return InitialDataSpec.tight(
        lambda r: amp_f * e(r),
        lambda r: -2 * _arr(r) / s2 * amp_f * e(r),
        lambda r: amp_g * e(r),
        m,
        f_second=lambda r: (4 * _arr(r) ** 2 / s2**2 - 2 / s2) * amp_f * e(r),
        g_prime=lambda r: -2 * _arr(r) / s2 * amp_g * e(r),
        name="gaussian",
    )


def _bump(radius):
    """``b(r) = exp(-1/(1 - (r/R)^2))`` on ``r < R`` and its first two derivatives."""

    def parts(r):
        s = _arr(r) / radius
        inside = np.abs(s) < 1
        q = np.where(inside, 1 - s**2, 1.0)
        b = np.where(inside, np.exp(-1 / q), 0.0)
        d1 = -2 * s / (radius * q**2)
        d2 = -(2 / radius**2) * (1 / q**2 + 4 * s**2 / q**3)
        return b, np.where(inside, b * d1, 0.0), np.where(inside, b * (d1**2 + d2), 0.0)

    return parts


def bump_data(amp_f: float = 1.0, amp_g: float = 0.0, radius: float = 2.0, m: float = 4.0) -> InitialDataSpec:
    """Compactly supported C-infinity data centred at the origin."""
    parts = _bump(radius)
    return InitialDataSpec.tight(
        lambda r: amp_f * parts(r)[0],
        lambda r: amp_f * parts(r)[1],
        lambda r: amp_g * parts(r)[0],
        m,
        f_second=lambda r: amp_f * parts(r)[2],
        g_prime=lambda r: amp_g * parts(r)[1],
        name="bump",
    )


def model_potential(V0: float = 0.003, k: float = 3.0, sign: float = 1.0) -> RadialPotential:
    """``V = sign * V0 <r>^-k``."""
    s = float(np.sign(sign)) or 1.0
    return RadialPotential(lambda r: s * V0 * (1 + _arr(r)) ** (-k), V0, k, name="model" if s > 0 else "-model")


def model_source(F0: float = 1.0, q: float = 3.0, r_exp: float = 3.0) -> SourceSpec:
    """``F = F0 / (<r>^q <t+r> <t-r>^(r_exp-1))``, the extremal source shape."""

    def F(t, r):
        t, r = _arr(t), _arr(r)
        return F0 * (1 + r) ** (-q) / (1 + t + r) * (1 + np.abs(t - r)) ** (1 - r_exp)

    return SourceSpec(F, F0, q, r_exp, name="model")


DATA_PROFILES = {
    "model": model_data,
    "gaussian": gaussian_data,
    "bump": bump_data,
    "zero": lambda m=4.0: InitialDataSpec.zero(m),
}
POTENTIAL_PROFILES = {
    "model": model_potential,
    "zero": lambda k=3.0: RadialPotential.zero(k),
}
SOURCE_PROFILES = {
    "model": model_source,
    "zero": lambda q=3.0, r_exp=3.0: SourceSpec.zero(q, r_exp),
}


def _make(registry, kind, name, params):
    if name not in registry:
        raise KeyError(f"unknown {kind} profile {name!r}; choose from {sorted(registry)}")
    try:
        return registry[name](**params)
    except TypeError as exc:
        raise ValueError(f"bad parameters for {kind} profile {name!r}: {exc}") from None


def make_data(name: str, **params) -> InitialDataSpec:
    return _make(DATA_PROFILES, "data", name, params)


def make_potential(name: str, **params) -> RadialPotential:
    return _make(POTENTIAL_PROFILES, "potential", name, params)


def make_source(name: str, **params) -> SourceSpec:
    return _make(SOURCE_PROFILES, "source", name, params)

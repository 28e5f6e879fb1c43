"""Sphere averages and backward light-cone integrals of radial integrands.

For a radial profile ``h`` the average over the sphere of radius ``t``
centred at ``x`` reduces, with ``lambda = |y|``, to

    (1/4pi) int_{S(x,t)} h(|y|) dsigma = t/(2|x|) int_{|t-|x||}^{t+|x|} lambda h(lambda) dlambda,

and the solid backward cone ``K(x,t)`` (measure ``dkappa = ds dy``) gives

    (1/4pi) int_K G(s,|y|)/(t-s) dkappa = 1/(2|x|) int_0^t ds int_{|t-s-|x||}^{t-s+|x|} lambda G(s,lambda) dlambda.

Both collapse to one-dimensional integrals at ``|x| = 0``.
"""
from __future__ import annotations

from dataclasses import dataclass
from typing import Callable

import numpy as np

from .quadrature import QuadratureError, composite_nodes, integrate_batch

__all__ = [
    "RadialKernel",
    "ConeKernelParams",
    "ConeEstimate",
    "power_kernel",
    "sphere_average_radial",
    "sphere_integral_closed_form",
    "cone_integral",
    "cone_rule",
    "cone_kernel",
    "cone_nodes",
    "CONCENTRIC_THRESHOLD",
]

CONCENTRIC_THRESHOLD = 1e-12


@dataclass(frozen=True)
class RadialKernel:
    """A radial profile ``radius -> value`` with a short tag for reports."""

    evaluate: Callable[[np.ndarray], np.ndarray]
    description: str = ""

    def __call__(self, radius):
        return self.evaluate(radius)


def power_kernel(p: float) -> RadialKernel:
    """The profile ``(1 + r)^(-p)``."""
    return RadialKernel(lambda r: (1.0 + np.asarray(r, dtype=float)) ** (-p), f"<r>^-{p:g}")


@dataclass(frozen=True)
class ConeKernelParams:
    """Exponents of the source-type cone kernel; needs ``q > 2`` and ``q >= p > 1``."""

    p: float
    q: float

    def __post_init__(self):
        if not self.p > 1:
            raise ValueError(f"cone kernel needs p > 1, got p={self.p}")
        if not self.q > 2:
            raise ValueError(f"cone kernel needs q > 2, got q={self.q}")
        if not self.q >= self.p:
            raise ValueError(f"cone kernel needs q >= p, got p={self.p}, q={self.q}")


@dataclass
class ConeEstimate:
    value: np.ndarray | float
    error: np.ndarray | float


def cone_kernel(params: ConeKernelParams) -> Callable[[np.ndarray, np.ndarray], np.ndarray]:
    """``G(s, lam) = <lam>^-q <s+lam>^-1 <s-lam>^-(p-1)``."""
    p, q = params.p, params.q

    def G(s, lam):
        return (1.0 + lam) ** (-q) / (1.0 + s + lam) * (1.0 + np.abs(s - lam)) ** (1.0 - p)

    return G


def _as_pair(x_norm, t):
    x = np.asarray(x_norm, dtype=float)
    tt = np.asarray(t, dtype=float)
    scalar = x.ndim == 0 and tt.ndim == 0
    x, tt = np.broadcast_arrays(np.atleast_1d(x), np.atleast_1d(tt))
    return x.ravel().astype(float), tt.ravel().astype(float), scalar, np.broadcast_shapes(np.shape(x_norm), np.shape(t))


def _concentric(x, t):
    return x < CONCENTRIC_THRESHOLD * np.maximum(1.0, t)


def sphere_average_radial(x_norm, t, kernel, *, rtol: float = 1e-10, order: int = 10):
    """``(1/4pi) int_{S(x,t)} kernel(|y|) dsigma(y)``.

    Parameters
    ----------
    x_norm, t : float or array_like
        Centre distance from the origin and sphere radius (``t > 0``).
    kernel : RadialKernel or callable
        Radial profile; must be finite on ``[0, inf)``.

    Raises
    ------
    ValueError
        If any ``t <= 0``.
    QuadratureError
        If the adaptive rule cannot reach ``rtol``.
    """
    x, tt, scalar, shape = _as_pair(x_norm, t)
    if np.any(tt <= 0):
        raise ValueError("sphere average needs t > 0")
    if np.any(x < 0):
        raise ValueError("x_norm must be >= 0")
    h = kernel
    out = np.empty_like(x)
    conc = _concentric(x, tt)
    if np.any(conc):
        out[conc] = tt[conc] ** 2 * np.asarray(h(tt[conc]), dtype=float)
    gen = np.flatnonzero(~conc)
    if gen.size:
        xg, tg = x[gen], tt[gen]
        # lam = |t - x| + d v, v in [0, 2]: the shell width 2d stays exact and
        # nodes near the lower limit keep full relative accuracy
        lo, d = np.abs(tg - xg), np.minimum(tg, xg)

        def integrand(v, i):
            lam = lo[i] + d[i] * v
            return lam * h(lam)

        res = integrate_batch(integrand, np.zeros_like(lo), np.full_like(lo, 2.0), rtol=rtol, order=order)
        res.raise_if_failed("sphere average")
        out[gen] = tg * d / (2.0 * xg) * res.value
    if scalar:
        return float(out[0])
    return out.reshape(shape)


def _power_diff(u_a, gap, s):
    """``u_a^-s - (u_a + gap)^-s`` for ``gap >= 0``, ``u_a > 0``, without cancellation."""
    return -(u_a ** (-s)) * np.expm1(-s * np.log1p(gap / u_a))


def sphere_integral_closed_form(x_norm, t, p):
    """Exact sphere average of ``<y>^-p``, ``p > 2``.

    Uses the antiderivative ``-(1+l)^(2-p)/(p-2) + (1+l)^(1-p)/(p-1)`` of
    ``l (1+l)^-p``, with differences formed through ``expm1``/``log1p`` so that
    thin shells keep full relative accuracy.
    """
    x, tt, scalar, shape = _as_pair(x_norm, t)
    p = float(p)
    if not p > 2:
        raise ValueError(f"closed form needs p > 2, got p={p}")
    if np.any(tt <= 0):
        raise ValueError("sphere average needs t > 0")
    if np.any(x <= 0):
        raise ValueError("closed form needs x_norm > 0")
    ua = 1.0 + np.abs(tt - x)
    gap = 2.0 * np.minimum(tt, x)  # exact shell width, not a difference of rounded limits
    integral = _power_diff(ua, gap, p - 2.0) / (p - 2.0) - _power_diff(ua, gap, p - 1.0) / (p - 1.0)
    out = tt / (2.0 * x) * integral
    if scalar:
        return float(out[0])
    return out.reshape(shape)


def _concentric_cone(t, G, rtol, order):
    # kernel kink at s = t - s
    return integrate_batch(
        lambda s, i: (t[i] - s) * G(s, t[i] - s), np.zeros_like(t), t, breaks=0.5 * t[:, None], rtol=rtol, order=order
    )


def cone_integral(x_norm, t, kernel, *, rtol: float = 1e-6, order: int = 8):
    """``(1/4pi) int_{K(x,t)} G(s,|y|)/(t-s) dkappa`` by nested adaptive quadrature.

    Parameters
    ----------
    kernel : ConeKernelParams or callable
        Either the exponents of the source-type kernel or any ``G(s, lam)``.

    Returns
    -------
    ConeEstimate
        Value and a combined outer-plus-inner error estimate.

    Notes
    -----
    The outer ``s`` range is split at ``t - |x|`` where the inner lower limit
    has a kink, and each inner range is split at ``lam = s`` where the kernel
    has one.
    """
    G = cone_kernel(kernel) if isinstance(kernel, ConeKernelParams) else kernel
    x, tt, scalar, shape = _as_pair(x_norm, t)
    if np.any(tt <= 0):
        raise ValueError("cone integral needs t > 0")
    if np.any(x < 0):
        raise ValueError("x_norm must be >= 0")
    value = np.zeros_like(x)
    error = np.zeros_like(x)
    conc = _concentric(x, tt)
    if np.any(conc):
        res = _concentric_cone(tt[conc], G, rtol, order)
        res.raise_if_failed("cone integral (centre)")
        value[conc], error[conc] = res.value, res.error
    gen = np.flatnonzero(~conc)
    if gen.size:
        xg, tg = x[gen], tt[gen]
        inner_rtol = 0.1 * rtol

        def outer(s, i):
            X = xg[i]
            T = tg[i] - s
            lo = np.abs(T - X)
            hi = T + X
            brk = s[:, None]
            inner = integrate_batch(lambda lam, j: lam * G(s[j], lam), lo, hi, breaks=brk, rtol=inner_rtol, order=order)
            if not np.all(inner.converged):
                j = int(np.flatnonzero(~inner.converged)[0])
                raise QuadratureError(
                    f"cone integral: inner integral failed at s={s[j]:.6g} "
                    f"(x={X[j]:.6g}, t={tg[i][j]:.6g}); achieved error {inner.error[j]:.3g}",
                    achieved=float(inner.error[j]),
                )
            return inner.value / (2.0 * X), inner.error / (2.0 * X)

        split = np.where((tg - xg > 0) & (tg - xg < tg), tg - xg, np.nan)
        res = integrate_batch(outer, np.zeros_like(tg), tg, breaks=split[:, None], rtol=rtol, order=order)
        if not np.all(res.converged):
            j = int(np.flatnonzero(~res.converged)[0])
            raise QuadratureError(
                f"cone integral did not converge at x={xg[j]:.6g}, t={tg[j]:.6g}; "
                f"achieved error {res.error[j]:.3g}",
                achieved=float(res.error[j]),
                index=int(gen[j]),
            )
        value[gen], error[gen] = res.value, res.error
    if scalar:
        return ConeEstimate(float(value[0]), float(error[0]))
    return ConeEstimate(value.reshape(shape), error.reshape(shape))


def cone_rule(x_norm, t, G, *, panel_width: float = 1.0, order: int = 6, return_nodes: bool = False):
    """Fixed composite rule for the cone integral in characteristic coordinates.

    With ``a = lam + s`` and ``b = lam - s`` the cone becomes the triangle
    ``|t-x| <= a <= t+x``, ``x-t <= b <= a`` (Jacobian 1/2) and the kernel's
    ``|s - lam|`` kink sits on the line ``b = 0``, which is used as a panel
    edge.  Every panel gets an ``order x order`` Gauss tensor rule, so
    smooth pieces converge spectrally as ``panel_width`` shrinks.

    ``G(s, lam)`` is evaluated once on all nodes of all points.  Per-point
    sums are formed in node order, which makes the result independent of
    batch composition.

    Returns
    -------
    numpy.ndarray
        Cone integrals for every point (``t = 0`` gives 0).  With
        ``return_nodes=True`` a tuple ``(values, (s, lam, w, owner))`` where
        ``values = bincount(owner, w * G(s, lam))``.
    """
    x, tt, scalar, shape = _as_pair(x_norm, t)
    n = x.size
    s_all, lam_all, w_all, own_all = cone_nodes(x, tt, panel_width, order)
    vals = np.asarray(G(s_all, lam_all), dtype=float) if s_all.size else np.zeros(0)
    out = np.bincount(own_all, weights=w_all * vals, minlength=n)
    out = float(out[0]) if scalar else out.reshape(shape)
    if return_nodes:
        return out, (s_all, lam_all, w_all, own_all)
    return out


def cone_nodes(x, t, panel_width, order):
    """Nodes ``(s, lam)``, weights and owning point for :func:`cone_rule`."""
    live = t > 0
    idx = np.flatnonzero(live)
    if idx.size == 0:
        z = np.zeros(0)
        return z, z, z, np.zeros(0, dtype=int)
    xs, ts = x[idx], t[idx]
    conc = _concentric(xs, ts)

    pieces = []
    # centre points: int_0^t (t-s) G(s, t-s) ds
    ci = np.flatnonzero(conc)
    if ci.size:
        tc = ts[ci]
        sn, sw, seg = composite_nodes(
            np.concatenate([np.zeros(ci.size), 0.5 * tc]), np.concatenate([0.5 * tc, tc]), panel_width, order
        )
        seg = np.concatenate([np.arange(ci.size)] * 2)[seg]
        owner = idx[ci][seg]
        lam = tc[seg] - sn
        pieces.append((sn, lam, sw * lam, owner))
    gi = np.flatnonzero(~conc)
    if gi.size:
        X, T = xs[gi], ts[gi]
        a_n, a_w, a_seg = composite_nodes(np.abs(T - X), T + X, panel_width, order)
        Xa, Ta = X[a_seg], T[a_seg]
        b_lo = Xa - Ta
        # b ranges split at 0 when the lower end is negative
        two = b_lo < 0
        lo1 = b_lo
        hi1 = np.where(two, 0.0, a_n)
        seg_lo = np.concatenate([lo1, np.zeros(int(two.sum()))])
        seg_hi = np.concatenate([hi1, a_n[two]])
        seg_parent = np.concatenate([np.arange(a_n.size), np.flatnonzero(two)])
        order_seg = np.lexsort((seg_lo, seg_parent))
        seg_lo, seg_hi, seg_parent = seg_lo[order_seg], seg_hi[order_seg], seg_parent[order_seg]
        b_n, b_w, b_seg = composite_nodes(seg_lo, seg_hi, panel_width, order)
        parent = seg_parent[b_seg]
        a = a_n[parent]
        s = 0.5 * (a - b_n)
        lam = 0.5 * (a + b_n)
        w = 0.5 * a_w[parent] * b_w * lam / (2.0 * Xa[parent])
        owner = idx[gi][a_seg[parent]]
        pieces.append((s, lam, w, owner))
    s = np.concatenate([p[0] for p in pieces])
    lam = np.concatenate([p[1] for p in pieces])
    w = np.concatenate([p[2] for p in pieces])
    owner = np.concatenate([p[3] for p in pieces])
    perm = np.argsort(owner, kind="stable")
    return s[perm], lam[perm], w[perm], owner[perm]

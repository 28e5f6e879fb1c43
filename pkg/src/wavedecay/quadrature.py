"""Vectorised adaptive Gauss-Legendre quadrature for batches of 1-d integrals.

One call integrates many independent integrals ``int_{a_i}^{b_i} f`` at once.
Each panel is estimated with an ``order``-point Gauss rule on the whole panel
and on its two halves; the difference is the error estimate and the halves'
sum is kept.  Refinement decisions for integral ``i`` only ever look at the
panels of integral ``i``, and the final per-integral sums run over panels in
a canonical order, so a result does not depend on which other integrals were
in the batch.  That is what makes threaded sweeps bit-reproducible.
"""
from __future__ import annotations

from dataclasses import dataclass
from functools import lru_cache

import numpy as np

__all__ = ["QuadratureError", "BatchResult", "gauss_legendre", "integrate_batch", "composite_nodes"]

_ROUNDOFF = 50 * np.finfo(float).eps


class QuadratureError(RuntimeError):
    """Adaptive quadrature did not reach its tolerance (or met a non-finite value)."""

    def __init__(self, message, achieved=None, index=None):
        super().__init__(message)
        self.achieved = achieved
        self.index = index


@lru_cache(maxsize=None)
def gauss_legendre(order: int) -> tuple[np.ndarray, np.ndarray]:
    """Nodes and weights on [-1, 1] (read-only arrays)."""
    x, w = np.polynomial.legendre.leggauss(order)
    x.setflags(write=False)
    w.setflags(write=False)
    return x, w


@dataclass
class BatchResult:
    value: np.ndarray
    error: np.ndarray
    converged: np.ndarray
    n_panels: np.ndarray

    def raise_if_failed(self, what: str = "integral"):
        bad = np.flatnonzero(~self.converged)
        if bad.size:
            i = int(bad[0])
            raise QuadratureError(
                f"{what}: adaptive quadrature did not converge for {bad.size} integral(s); "
                f"first index {i}, value {self.value[i]:.6g}, achieved error {self.error[i]:.3g}",
                achieved=float(self.error[i]),
                index=i,
            )


def _apply_rule(func, lo, hi, owner, order):
    xi, wi = gauss_legendre(order)
    half = 0.5 * (hi - lo)
    mid = 0.5 * (hi + lo)
    nodes = mid[:, None] + half[:, None] * xi[None, :]
    out = func(nodes.ravel(), np.repeat(owner, order))
    if isinstance(out, tuple):
        vals, errs = out
        errs = np.abs(np.asarray(errs, dtype=float)).reshape(nodes.shape)
        inner = half * np.sum(wi * errs, axis=1)
    else:
        vals = out
        inner = np.zeros_like(half)
    vals = np.asarray(vals, dtype=float).reshape(nodes.shape)
    if not np.all(np.isfinite(vals)):
        bad = owner[np.flatnonzero(~np.all(np.isfinite(vals), axis=1))[0]]
        raise QuadratureError(f"non-finite integrand value (integral index {int(bad)})", index=int(bad))
    val = half * np.sum(wi * vals, axis=1)
    absval = half * np.sum(wi * np.abs(vals), axis=1)
    return val, absval, inner


def integrate_batch(
    func,
    a,
    b,
    *,
    breaks=None,
    rtol: float = 1e-10,
    atol: float = 0.0,
    order: int = 10,
    max_depth: int = 40,
    max_active: int = 2000,
) -> BatchResult:
    """Integrate ``func`` over ``[a_i, b_i]`` for every ``i``.

    Parameters
    ----------
    func : callable
        ``func(x, idx)`` gets flat arrays of nodes and the integral index of
        each node and returns the integrand values, or a pair
        ``(values, abs_errors)`` when the integrand is itself computed with
        an error (nested quadrature); those errors are integrated into the
        panel error.
    a, b : array_like
        Limits, ``a <= b``.
    breaks : array_like, optional
        ``(n, k)`` interior break points (NaN for unused slots); panels are
        split there before any refinement.
    rtol, atol : float
        Panel ``j`` of integral ``i`` is accepted when its error is below
        ``max(atol, rtol * int|f|) * width_j / (b_i - a_i)``.
    max_depth, max_active : int
        Refinement stops for a panel at ``max_depth`` bisections, and for a
        whole integral once it has more than ``max_active`` unfinished panels
        (which happens near non-integrable singularities, where rounding of
        the nodes keeps the error estimates from settling).  Either way the
        integral is reported as not converged unless its total error still
        meets the tolerance.
    """
    a = np.atleast_1d(np.asarray(a, dtype=float))
    b = np.atleast_1d(np.asarray(b, dtype=float))
    a, b = np.broadcast_arrays(a, b)
    a = a.ravel().copy()
    b = b.ravel().copy()
    n = a.size
    if np.any(b < a):
        raise ValueError("integrate_batch needs a <= b")
    width = b - a

    # initial panels, split at the break points
    if breaks is None:
        edges = np.stack([a, b], axis=1)
    else:
        br = np.asarray(breaks, dtype=float).reshape(n, -1)
        inside = (br > a[:, None]) & (br < b[:, None])
        br = np.where(inside, br, np.nan)
        edges = np.concatenate([a[:, None], np.sort(br, axis=1), b[:, None]], axis=1)
    lo_list, hi_list, own_list = [], [], []
    for j in range(edges.shape[1] - 1):
        lo_e = edges[:, j]
        # next finite edge to the right
        hi_e = np.full(n, np.nan)
        for kk in range(j + 1, edges.shape[1]):
            cand = edges[:, kk]
            take = np.isnan(hi_e) & ~np.isnan(cand)
            hi_e[take] = cand[take]
        ok = ~np.isnan(lo_e) & (hi_e > lo_e)
        lo_list.append(lo_e[ok])
        hi_list.append(hi_e[ok])
        own_list.append(np.flatnonzero(ok))
    lo = np.concatenate(lo_list)
    hi = np.concatenate(hi_list)
    owner = np.concatenate(own_list)
    # canonical order: by owner, then position
    perm = np.lexsort((lo, owner))
    lo, hi, owner = lo[perm], hi[perm], owner[perm]
    depth = np.zeros(lo.size, dtype=int)
    whole = _apply_rule(func, lo, hi, owner, order)[0] if lo.size else lo

    acc_owner, acc_lo, acc_val, acc_err, acc_bad = [], [], [], [], []
    acc_abs = np.zeros(n)
    while lo.size:
        mid = 0.5 * (lo + hi)
        lv, la, li = _apply_rule(func, lo, mid, owner, order)
        rv, ra, ri = _apply_rule(func, mid, hi, owner, order)
        fine = lv + rv
        fine_abs = la + ra
        err = np.abs(whole - fine) + li + ri
        scale = acc_abs + np.bincount(owner, weights=fine_abs, minlength=n)
        tol = np.maximum(atol, rtol * scale[owner]) * (hi - lo) / np.where(width[owner] > 0, width[owner], 1.0)
        # an error at the rounding floor of the panel cannot be reduced by splitting
        done = (err <= tol) | (err <= _ROUNDOFF * fine_abs)
        stuck = ~done & ((depth >= max_depth) | (mid <= lo) | (mid >= hi))
        accept = done | stuck
        if np.any(accept):
            acc_owner.append(owner[accept])
            acc_lo.append(lo[accept])
            acc_val.append(fine[accept])
            acc_err.append(err[accept])
            acc_bad.append(owner[stuck])
            acc_abs += np.bincount(owner[accept], weights=fine_abs[accept], minlength=n)
        keep = ~accept
        if not np.any(keep):
            break
        over = np.bincount(owner[keep], minlength=n)[owner] > max_active // 2
        if np.any(over & keep):
            cut = over & keep
            acc_owner.append(owner[cut])
            acc_lo.append(lo[cut])
            acc_val.append(fine[cut])
            acc_err.append(err[cut])
            acc_bad.append(owner[cut])
            acc_abs += np.bincount(owner[cut], weights=fine_abs[cut], minlength=n)
            keep &= ~cut
            if not np.any(keep):
                break
        k_lo, k_mid, k_hi, k_own, k_dep = lo[keep], mid[keep], hi[keep], owner[keep], depth[keep] + 1
        lo = np.concatenate([k_lo, k_mid])
        hi = np.concatenate([k_mid, k_hi])
        owner = np.concatenate([k_own, k_own])
        depth = np.concatenate([k_dep, k_dep])
        whole = np.concatenate([lv[keep], rv[keep]])
        perm = np.lexsort((lo, owner))
        lo, hi, owner, depth, whole = lo[perm], hi[perm], owner[perm], depth[perm], whole[perm]

    value = np.zeros(n)
    error = np.zeros(n)
    n_panels = np.zeros(n, dtype=int)
    converged = np.ones(n, dtype=bool)
    if acc_owner:
        o = np.concatenate(acc_owner)
        pl = np.concatenate(acc_lo)
        v = np.concatenate(acc_val)
        e = np.concatenate(acc_err)
        perm = np.lexsort((pl, o))
        o, v, e = o[perm], v[perm], e[perm]
        value = np.bincount(o, weights=v, minlength=n)
        error = np.bincount(o, weights=e, minlength=n)
        n_panels = np.bincount(o, minlength=n)
        # panels stuck at the depth cap are fine as long as the total
        # error estimate still meets the requested tolerance
        bad = np.unique(np.concatenate(acc_bad))
        tol_total = np.maximum(atol, rtol * acc_abs)
        converged[bad] = error[bad] <= tol_total[bad]
    return BatchResult(value=value, error=error, converged=converged, n_panels=n_panels)


def composite_nodes(lo, hi, panel_width: float, order: int, min_panels: int = 1):
    """Fixed composite Gauss rule on many segments at once.

    Segment ``j`` is cut into ``max(min_panels, ceil((hi_j-lo_j)/panel_width))``
    equal panels with ``order`` nodes each.  Returns flat ``(nodes, weights,
    segment_index)`` ordered segment by segment.
    """
    lo = np.asarray(lo, dtype=float)
    hi = np.asarray(hi, dtype=float)
    length = np.maximum(hi - lo, 0.0)
    n_pan = np.maximum(min_panels, np.ceil(length / panel_width).astype(int))
    seg_of_panel = np.repeat(np.arange(lo.size), n_pan)
    first = np.cumsum(n_pan) - n_pan
    k = np.arange(seg_of_panel.size) - np.repeat(first, n_pan)
    h = length[seg_of_panel] / n_pan[seg_of_panel]
    p_lo = lo[seg_of_panel] + k * h
    xi, wi = gauss_legendre(order)
    nodes = (p_lo[:, None] + 0.5 * h[:, None] * (xi[None, :] + 1.0)).ravel()
    weights = (0.5 * h[:, None] * wi[None, :]).ravel()
    seg = np.repeat(seg_of_panel, order)
    return nodes, weights, seg

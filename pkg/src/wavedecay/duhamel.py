"""Retarded-integral solver for the radial wave equation with a potential.

The solution of ``u_tt - Lap u + V u = F`` with data ``(f, g)`` is the fixed
point of

    u = I0(f, g) + L0(F - V u),

where ``I0`` is the free evolution written through sphere averages and
``L0`` the retarded cone integral.  ``I0`` and ``L0(F)`` are evaluated
directly from the data.  ``L0(V u)`` needs ``u`` on whole backward cones, so
the iterate lives on a uniform ``(t, r)`` grid covering the triangle
``t + r <= T`` plus a thin margin, and is read at cone quadrature nodes by
piecewise-linear interpolation in ``t`` and four-point cubic Lagrange
interpolation in ``r`` (even reflection across ``r = 0``).  That read-out is
linear in the grid values, so the whole map ``u -> L0(V u)`` is assembled
once as a sparse matrix and each iteration is a single product.
"""
from __future__ import annotations

import csv
import json
import math
from dataclasses import dataclass, field, replace
from typing import Callable

import numpy as np
from scipy import sparse

from .geometry import cone_integral, cone_nodes, cone_rule
from .parallel import chunked_map
from .quadrature import integrate_batch
from .weights import (
    SpacetimeSampleSet,
    WeightedNormParams,
    corollary_source_constant,
    theorem_constants,
    weight,
)

__all__ = [
    "SolverError",
    "InitialDataSpec",
    "RadialPotential",
    "SourceSpec",
    "SolverOptions",
    "IterationReport",
    "free_solution",
    "source_solution",
    "solve_fixed_point",
    "solve_with_source",
    "time_derivative_data",
    "write_field_csv",
    "SAMPLE_RADII",
]

# radii used to check amplitude bounds of profiles
SAMPLE_RADII = np.concatenate([[0.0], np.geomspace(1e-6, 1e4, 4001)])
_AMPLITUDE_SLACK = 1e-9


class SolverError(RuntimeError):
    """The fixed-point iteration failed inside the contraction regime."""


def _sup_weighted(profile, exponent, radii=SAMPLE_RADII) -> float:
    vals = np.abs(np.asarray(profile(radii), dtype=float))
    if not np.all(np.isfinite(vals)):
        return math.inf
    return float(np.max(vals * (1.0 + radii) ** exponent))


def _check_bound(name, profile, exponent, amplitude):
    found = _sup_weighted(profile, exponent)
    if found > amplitude * (1.0 + _AMPLITUDE_SLACK) + 1e-300:
        raise ValueError(
            f"{name} violates its decay bound: sup <r>^{exponent:g} |{name}| = {found:.6g} > {amplitude:.6g}"
        )


def _check_derivative(name, profile, derivative):
    r = np.geomspace(1e-2, 50.0, 200)
    h = 1e-5 * np.maximum(1.0, r)
    fd = (profile(r + h) - profile(r - h)) / (2 * h)
    given = derivative(r)
    scale = max(float(np.max(np.abs(given))), float(np.max(np.abs(fd))), 1e-300)
    if np.max(np.abs(fd - given)) > 1e-5 * scale:
        raise ValueError(f"{name} does not match the numerical derivative of its profile")


def _zero(r):
    return np.zeros_like(np.asarray(r, dtype=float))


@dataclass
class InitialDataSpec:
    """Radial data ``u(0) = f``, ``u_t(0) = g`` with decay exponent ``m``.

    The bounds ``|f| <= f0 <r>^-(m-1)``, ``|f'| <= f1 <r>^-m`` and
    ``|g| <= g0 <r>^-m`` are checked on :data:`SAMPLE_RADII` when the object
    is built, and ``f_prime`` is compared against a central difference of
    ``f``.  ``f_second`` and ``g_prime`` are only needed for
    :func:`time_derivative_data`.
    """

    f: Callable
    f_prime: Callable
    g: Callable
    m: float
    f0: float
    f1: float
    g0: float
    f_second: Callable | None = None
    g_prime: Callable | None = None
    name: str = "custom"
    check: bool = field(default=True, repr=False)

    def __post_init__(self):
        if not self.m > 3:
            raise ValueError(f"data decay exponent needs m > 3, got m={self.m}")
        for nm in ("f0", "f1", "g0"):
            if getattr(self, nm) < 0:
                raise ValueError(f"{nm} must be >= 0")
        if self.check:
            _check_bound("f", self.f, self.m - 1, self.f0)
            _check_bound("f'", self.f_prime, self.m, self.f1)
            _check_bound("g", self.g, self.m, self.g0)
            _check_derivative("f'", self.f, self.f_prime)
            if self.f_second is not None:
                _check_derivative("f''", self.f_prime, self.f_second)
            if self.g_prime is not None:
                _check_derivative("g'", self.g, self.g_prime)

    @classmethod
    def tight(cls, f, f_prime, g, m, **kw) -> "InitialDataSpec":
        """Build with the smallest amplitudes seen on the sample radii."""
        amps = {
            "f0": _sup_weighted(f, m - 1) * (1 + _AMPLITUDE_SLACK / 10),
            "f1": _sup_weighted(f_prime, m) * (1 + _AMPLITUDE_SLACK / 10),
            "g0": _sup_weighted(g, m) * (1 + _AMPLITUDE_SLACK / 10),
        }
        for nm, v in amps.items():
            if not math.isfinite(v):
                raise ValueError(f"{nm}: profile is not bounded")
        return cls(f=f, f_prime=f_prime, g=g, m=m, **amps, **kw)

    @classmethod
    def zero(cls, m: float = 4.0) -> "InitialDataSpec":
        return cls(_zero, _zero, _zero, m, 0.0, 0.0, 0.0, f_second=_zero, g_prime=_zero, name="zero")

    def scaled(self, alpha: float) -> "InitialDataSpec":
        """Data ``(alpha f, alpha g)`` with amplitudes scaled by ``|alpha|``."""
        a = float(alpha)
        sc = (lambda h: None if h is None else (lambda r: a * h(r)))
        return replace(
            self,
            f=sc(self.f),
            f_prime=sc(self.f_prime),
            g=sc(self.g),
            f_second=sc(self.f_second),
            g_prime=sc(self.g_prime),
            f0=abs(a) * self.f0,
            f1=abs(a) * self.f1,
            g0=abs(a) * self.g0,
            name=f"{a:g}*{self.name}",
            check=False,
        )


@dataclass
class RadialPotential:
    """``V(r)`` with ``|V| <= V0 <r>^-k``, ``k > 2`` (checked by sampling)."""

    V: Callable
    V0: float
    k: float
    name: str = "custom"
    check: bool = field(default=True, repr=False)

    def __post_init__(self):
        if not self.k > 2:
            raise ValueError(f"potential decay exponent needs k > 2, got k={self.k}")
        if self.V0 < 0:
            raise ValueError("V0 must be >= 0")
        if self.check:
            _check_bound("V", self.V, self.k, self.V0)

    def __call__(self, r):
        return np.asarray(self.V(r), dtype=float)

    @classmethod
    def zero(cls, k: float = 3.0) -> "RadialPotential":
        return cls(_zero, 0.0, k, name="zero")

    def negated(self) -> "RadialPotential":
        V = self.V
        return replace(self, V=lambda r: -np.asarray(V(r), dtype=float), name=f"-{self.name}", check=False)

    @property
    def is_zero(self) -> bool:
        return self.V0 == 0.0


@dataclass
class SourceSpec:
    """Source ``F(t, r)`` with ``|F| <= F0 / (<r>^q <t+r> <t-r>^(r_exp-1))``."""

    F: Callable
    F0: float
    q: float
    r_exp: float
    name: str = "custom"
    check: bool = field(default=True, repr=False)

    def __post_init__(self):
        if not self.q > 2:
            raise ValueError(f"source needs q > 2, got q={self.q}")
        if not (1 < self.r_exp <= self.q):
            raise ValueError(f"source needs 1 < r_exp <= q, got r_exp={self.r_exp}, q={self.q}")
        if self.F0 < 0:
            raise ValueError("F0 must be >= 0")
        if self.check:
            axis = np.concatenate([[0.0], np.geomspace(1e-3, 1e3, 61)])
            tt, rr = np.meshgrid(axis, axis, indexing="ij")
            vals = np.abs(np.asarray(self.F(tt, rr), dtype=float))
            w = (1 + rr) ** self.q * (1 + tt + rr) * (1 + np.abs(tt - rr)) ** (self.r_exp - 1)
            found = float(np.max(vals * w))
            if not found <= self.F0 * (1 + _AMPLITUDE_SLACK) + 1e-300:
                raise ValueError(f"F violates its decay bound: sampled weighted sup {found:.6g} > F0={self.F0:.6g}")

    @classmethod
    def zero(cls, q: float = 3.0, r_exp: float = 3.0) -> "SourceSpec":
        return cls(lambda t, r: np.zeros(np.broadcast(t, r).shape), 0.0, q, r_exp, name="zero")

    @property
    def is_zero(self) -> bool:
        return self.F0 == 0.0


@dataclass(frozen=True)
class SolverOptions:
    """Discretisation and stopping parameters.

    ``density`` scales the quadrature: the iterate grid step and the cone
    panel width are both divided by it.
    """

    grid_step: float = 0.5
    panel_width: float = 1.0
    order: int = 6
    density: float = 1.0
    stop_tol: float = 1e-8
    n_max: int = 50
    t_max: float | None = None
    free_rtol: float = 1e-10
    interp_budget: float = 1e-3
    threads: int = 1

    def __post_init__(self):
        if self.grid_step <= 0 or self.panel_width <= 0 or self.density <= 0:
            raise ValueError("grid_step, panel_width and density must be positive")
        if self.order < 1 or self.n_max < 1:
            raise ValueError("order and n_max must be >= 1")

    @property
    def h(self) -> float:
        return self.grid_step / self.density

    @property
    def panel(self) -> float:
        return self.panel_width / self.density

    def refined(self, factor: float = 2.0) -> "SolverOptions":
        return replace(self, density=self.density * factor)


@dataclass
class IterationReport:
    """Convergence history and decay-constant comparison of one solve."""

    diffs: list
    measured_ratio: float
    delta_theoretical: float
    converged: bool
    n_iters: int
    C_empirical: float
    C_theoretical: float
    status: str
    norm_p: float
    bound_holds: bool
    contraction_holds: bool
    grid_points: int
    options: dict = field(default_factory=dict)

    def as_dict(self) -> dict:
        def clean(v):
            if isinstance(v, float) and not math.isfinite(v):
                return None
            return v

        return {
            "diffs": [clean(float(d)) for d in self.diffs],
            "measured_ratio": clean(self.measured_ratio),
            "delta_theoretical": self.delta_theoretical,
            "converged": self.converged,
            "n_iters": self.n_iters,
            "C_empirical": clean(self.C_empirical),
            "C_theoretical": clean(self.C_theoretical),
            "status": self.status,
            "norm_p": self.norm_p,
            "bound_holds": self.bound_holds,
            "contraction_holds": self.contraction_holds,
            "grid_points": self.grid_points,
            "options": self.options,
        }

    def to_json(self) -> str:
        return json.dumps(self.as_dict(), sort_keys=True, indent=2)


def _broadcast_tx(t, x_norm):
    t = np.asarray(t, dtype=float)
    x = np.asarray(x_norm, dtype=float)
    scalar = t.ndim == 0 and x.ndim == 0
    shape = np.broadcast_shapes(t.shape, x.shape)
    tt, xx = np.broadcast_arrays(np.atleast_1d(t), np.atleast_1d(x))
    tt, xx = tt.ravel().astype(float), xx.ravel().astype(float)
    if np.any(tt < 0) or np.any(xx < 0):
        raise ValueError("need t >= 0 and x_norm >= 0")
    return tt, xx, scalar, shape


def _free_values(data: InitialDataSpec, t, x, rtol):
    out = np.empty_like(t)
    start = t == 0
    out[start] = data.f(x[start])
    centre = ~start & (x < 1e-12 * np.maximum(1.0, t))
    if np.any(centre):
        tc = t[centre]
        out[centre] = tc * data.g(tc) + data.f(tc) + tc * data.f_prime(tc)
    gen = np.flatnonzero(~start & ~centre)
    if gen.size:
        X, T = x[gen], t[gen]

        def integrand(lam, i):
            xi, ti = X[i], T[i]
            return lam * data.g(lam) + (0.5 * data.f_prime(lam) * (lam**2 - xi**2 + ti**2) + lam * data.f(lam)) / ti

        res = integrate_batch(integrand, np.abs(T - X), T + X, breaks=None, rtol=rtol)
        res.raise_if_failed("free solution")
        out[gen] = res.value / (2.0 * X)
    return out


def free_solution(data: InitialDataSpec, t, x_norm, *, rtol: float = 1e-10, threads: int = 1):
    """Free wave ``I0(f, g)`` at ``(t, |x|)``.

    The gradient term of the sphere-average formula is folded into a single
    radial integrand, ``lam g + (f'(lam) (lam^2 - x^2 + t^2)/2 + lam f) / t``,
    integrated over ``[|t - x|, t + x]`` and divided by ``2 x``.  At ``t = 0``
    it returns ``f``; at ``x = 0`` it uses ``t g(t) + f(t) + t f'(t)``.
    """
    t, x, scalar, shape = _broadcast_tx(t, x_norm)
    parts = chunked_map(lambda a, b: _free_values(data, t[a:b], x[a:b], rtol), t.size, threads)
    out = np.concatenate(parts) if parts else np.zeros(0)
    return float(out[0]) if scalar else out.reshape(shape)


def source_solution(src: SourceSpec, t, x_norm, *, rtol: float = 1e-8):
    """Retarded integral ``L0(F)`` by adaptive cone quadrature (0 at ``t = 0``)."""
    t, x, scalar, shape = _broadcast_tx(t, x_norm)
    out = np.zeros_like(t)
    live = t > 0
    if np.any(live):
        out[live] = cone_integral(x[live], t[live], src.F, rtol=rtol).value
    return float(out[0]) if scalar else out.reshape(shape)


# -- iterate grid -----------------------------------------------------------


@dataclass
class _Grid:
    h: float
    n: int
    L: int  # stored nodes satisfy i + j <= L
    T: float
    band: np.ndarray  # flat indices of stored nodes
    t: np.ndarray  # coordinates of stored nodes
    r: np.ndarray
    domain: np.ndarray  # boolean over band: t + r <= T

    # levels kept beyond t + r = T; domain cones read up to 3 levels out and
    # those nodes read 3 more, so 6 keeps every stencil they touch centred
    MARGIN = 6

    @classmethod
    def build(cls, T: float, h: float) -> "_Grid":
        L = int(math.ceil(T / h - 1e-9)) + cls.MARGIN
        n = L + 1
        ij = np.indices((n, n)).reshape(2, -1)
        keep = ij[0] + ij[1] <= L
        band = np.flatnonzero(keep)
        t, r = ij[0][band] * h, ij[1][band] * h
        return cls(h=h, n=n, L=L, T=T, band=band, t=t, r=r, domain=t + r <= T * (1 + 1e-12))


def _lagrange(mu, start, size):
    """Lagrange weights at ``mu`` for nodes ``start, ..., start + size - 1``."""
    xs = [start + k for k in range(size)]
    out = []
    for k in range(size):
        w = np.ones_like(mu)
        for m in range(size):
            if m != k:
                w = w * (mu - xs[m]) / (xs[k] - xs[m])
        out.append(w)
    return out


# (rows, first column offset, stencil size), most accurate first
_STENCILS = (
    (2, -1, 4), (2, -2, 4), (2, -3, 4),
    (1, -1, 4), (1, -2, 4), (1, -3, 4),
    (2, 0, 2), (1, 0, 2), (1, 0, 1),
)


def _interp_matrix(grid: _Grid, s, lam, coef, owner, n_rows):
    """Sparse matrix mapping full-grid values to ``sum coef * u(s, lam)`` per owner.

    Linear in ``t`` between rows ``i, i+1``; cubic in ``r`` on columns
    ``j-1 .. j+2``, reflected evenly across ``r = 0``.  Near the outer edge
    of the band the stencil shifts inwards, then drops to one row and lower
    order, so nothing is read outside it.  Nodes whose cones lie inside
    ``t + r <= T`` and the margin nodes they read always get the full stencil.
    """
    h, n, L = grid.h, grid.n, grid.L
    i = np.clip(np.floor(s / h).astype(np.int64), 0, n - 1)
    th = s / h - i
    j = np.clip(np.floor(lam / h).astype(np.int64), 0, n - 1)
    mu = lam / h - j
    if np.any(i + j > L):
        raise SolverError("cone nodes reach outside the iterate grid band")
    choice = np.full(j.shape, -1)
    for c, (nrow, o, size) in enumerate(_STENCILS):
        top = i + (nrow - 1) + np.maximum(np.abs(j + o), j + o + size - 1)
        take = (choice < 0) & (top <= L)
        choice[take] = c
    rows, cols, vals = [np.zeros(0, np.int64)], [np.zeros(0, np.int64)], [np.zeros(0)]
    for c, (nrow, o, size) in enumerate(_STENCILS):
        sel = np.flatnonzero(choice == c)
        if sel.size == 0:
            continue
        lag = _lagrange(mu[sel], o, size)
        row_w = ((0, 1.0 - th[sel]), (1, th[sel])) if nrow == 2 else ((0, 1.0),)
        for di, tw in row_w:
            for k in range(size):
                rows.append(owner[sel])
                cols.append((i[sel] + di) * n + np.abs(j[sel] + o + k))  # even reflection
                vals.append(coef[sel] * tw * lag[k])
    m = sparse.coo_matrix(
        (np.concatenate(vals), (np.concatenate(rows), np.concatenate(cols))), shape=(n_rows, n * n)
    ).tocsr()
    m.sum_duplicates()
    m.eliminate_zeros()
    return m


_OWNERS_PER_BUILD = 8


def _potential_operator(grid: _Grid, t, x, potential: RadialPotential, opts: SolverOptions):
    """Sparse ``K`` with ``(K u)_a = L0(V u)(t_a, x_a)``."""

    def rows(a, b):
        s, lam, w, owner = cone_nodes(x[a:b], t[a:b], opts.panel, opts.order)
        coef = w * potential(lam)
        return _interp_matrix(grid, s, lam, coef, owner, b - a)

    def block(a, b):
        # a few owners at a time bounds the stencil arrays at fine densities
        parts = [rows(c, min(c + _OWNERS_PER_BUILD, b)) for c in range(a, b, _OWNERS_PER_BUILD)]
        return sparse.vstack(parts, format="csr")

    blocks = chunked_map(block, t.size, opts.threads)
    if not blocks:
        return sparse.csr_matrix((0, grid.n * grid.n))
    K = sparse.vstack(blocks, format="csr")
    used = np.unique(K.indices)
    inband = np.zeros(grid.n * grid.n, dtype=bool)
    inband[grid.band] = True
    if not np.all(inband[used]):
        raise SolverError("cone nodes reach outside the iterate grid band")
    return K


def _source_values(src: SourceSpec | None, t, x, opts: SolverOptions):
    if src is None or src.is_zero:
        return np.zeros_like(t)
    parts = chunked_map(
        lambda a, b: np.atleast_1d(cone_rule(x[a:b], t[a:b], src.F, panel_width=opts.panel / 2, order=opts.order)),
        t.size,
        opts.threads,
    )
    return np.concatenate(parts)


def _run(data, potential, src, samples, opts, constants):
    if len(samples) == 0:
        raise ValueError("empty sample set")
    params = WeightedNormParams(1.0, constants.p)
    T = opts.t_max if opts.t_max is not None else float(np.max(samples.t + samples.r))
    if np.any(samples.t + samples.r > T * (1 + 1e-12)):
        raise ValueError(f"samples must satisfy t + r <= t_max = {T}")
    T = max(T, opts.h)
    grid = _Grid.build(T, opts.h)
    delta = constants.delta

    base_grid = free_solution(data, grid.t, grid.r, rtol=opts.free_rtol, threads=opts.threads)
    base_grid = base_grid + _source_values(src, grid.t, grid.r, opts)
    w_dom = weight(grid.t[grid.domain], grid.r[grid.domain], params)

    def norm(v):
        return float(np.max(w_dom * np.abs(v[grid.domain]))) if v.size else 0.0

    K = None if potential.is_zero else _potential_operator(grid, grid.t, grid.r, potential, opts)
    full = np.zeros(grid.n * grid.n)

    def apply(u_band):
        if K is None:
            return base_grid.copy()
        full[grid.band] = u_band
        return base_grid - K @ full

    u = base_grid.copy()  # u_0 = I0 + L0(F), from u_{-1} = 0
    diffs = [norm(u)]
    converged = False
    n_iters = 0
    for n_iters in range(1, opts.n_max + 1):
        u_next = apply(u)
        d = norm(u_next - u)
        diffs.append(d)
        u = u_next
        scale = norm(u)
        if not math.isfinite(d):
            break
        if d <= opts.stop_tol * max(scale, 1e-300) or scale == 0.0:
            converged = True
            break

    # one more map application reads the converged iterate at the samples
    st, sr = samples.t, samples.r
    values = free_solution(data, st, sr, rtol=opts.free_rtol, threads=opts.threads)
    values = values + _source_values(src, st, sr, opts)
    if K is not None:
        Ks = _potential_operator(grid, st, sr, potential, opts)
        full[grid.band] = u
        values = values - Ks @ full
    out = samples.with_values(values)

    # consecutive quotients above the round-off floor
    floor = 1e-13 * max(max(diffs), 1e-300)
    ratios = [b / a for a, b in zip(diffs[1:], diffs[2:]) if a > floor and b > floor]
    measured = max(ratios) if ratios else 0.0
    slack = 0.1 * delta + opts.interp_budget
    C_emp = float(np.max(weight(st, sr, params) * np.abs(values)))
    C_th = constants.C_total
    report = IterationReport(
        diffs=diffs,
        measured_ratio=measured,
        delta_theoretical=delta,
        converged=converged,
        n_iters=n_iters,
        C_empirical=C_emp,
        C_theoretical=C_th,
        status=constants.status,
        norm_p=constants.p,
        bound_holds=bool(C_emp <= C_th * (1 + 1e-6)) if math.isfinite(C_th) else False,
        contraction_holds=bool(measured <= delta + slack),
        grid_points=int(grid.band.size),
        options={
            "grid_step": opts.h,
            "panel_width": opts.panel,
            "order": opts.order,
            "stop_tol": opts.stop_tol,
            "n_max": opts.n_max,
            "t_max": T,
        },
    )
    if not converged and constants.contractive:
        raise SolverError(
            f"iteration did not converge in {opts.n_max} steps although delta={delta:.4g} < 1 "
            f"(last diff {diffs[-1]:.3g})"
        )
    return out, report


def solve_fixed_point(
    data: InitialDataSpec,
    potential: RadialPotential,
    samples: SpacetimeSampleSet,
    opts: SolverOptions | None = None,
):
    """Solve ``u = I0(f, g) - L0(V u)`` and return the field at ``samples``.

    Outside the contraction regime (``delta >= 1``) the iteration still runs
    up to ``n_max`` steps and the report is flagged instead of raising.

    Raises
    ------
    SolverError
        If ``delta < 1`` and the stopping tolerance is not reached.
    """
    opts = opts or SolverOptions()
    constants = theorem_constants(data.f0, data.f1, data.g0, data.m, potential.V0, potential.k)
    return _run(data, potential, None, samples, opts, constants)


def solve_with_source(
    data: InitialDataSpec,
    potential: RadialPotential,
    src: SourceSpec,
    samples: SpacetimeSampleSet,
    opts: SolverOptions | None = None,
):
    """Solve ``u = I0(f, g) + L0(F - V u)``; constants include the source term."""
    opts = opts or SolverOptions()
    constants = corollary_source_constant(
        data.f0, data.f1, data.g0, src.F0, data.m, potential.k, src.q, src.r_exp, potential.V0
    )
    return _run(data, potential, src, samples, opts, constants)


def time_derivative_data(data: InitialDataSpec, potential: RadialPotential, m: float | None = None) -> InitialDataSpec:
    """Data ``(g, Lap f - V f)`` whose solution is ``u_t``.

    ``Lap f = f'' + 2 f'/r``, with the value ``3 f''(0)`` at the origin, which
    needs ``f'(0) = 0``.  The decay exponent stays ``m`` unless given.

    Raises
    ------
    ValueError
        If ``f''`` or ``g'`` is missing, or ``f'(0) != 0`` so that ``Lap f`` is
        unbounded at the origin.
    """
    if data.f_second is None or data.g_prime is None:
        raise ValueError("time_derivative_data needs the profiles f_second and g_prime")
    f_p, f_pp, V = data.f_prime, data.f_second, potential
    fp0 = float(np.asarray(f_p(np.array([0.0])))[0])
    if abs(fp0) > 1e-12 * max(data.f1, 1e-300):
        raise ValueError(f"f'(0) = {fp0:.3g} != 0: the Laplacian of f is unbounded at the origin")
    f = data.f

    def lap_minus_vf(r):
        r = np.asarray(r, dtype=float)
        safe = np.where(r > 0, r, 1.0)
        lap = np.where(r > 0, f_pp(r) + 2.0 * f_p(r) / safe, 3.0 * f_pp(r))
        return lap - V(r) * f(r)

    m_new = data.m if m is None else m
    return InitialDataSpec.tight(
        data.g, data.g_prime, lap_minus_vf, m_new, name=f"d/dt {data.name}"
    )


def write_field_csv(samples: SpacetimeSampleSet, p: float, path) -> None:
    """Columns ``t, r, u, weight, weighted_abs`` with weight exponents ``(1, p)``."""
    params = WeightedNormParams(1.0, p)
    w = np.atleast_1d(weight(samples.t, samples.r, params))
    with open(path, "w", newline="") as fh:
        wr = csv.writer(fh)
        wr.writerow(["t", "r", "u", "weight", "weighted_abs"])
        for t, r, u, wi in zip(samples.t, samples.r, samples.values, w):
            wr.writerow([repr(float(t)), repr(float(r)), repr(float(u)), repr(float(wi)), repr(float(wi * abs(u)))])

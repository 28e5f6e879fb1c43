"""Finite-difference oracle for radial waves.

For radial ``u`` the function ``v = r u`` solves the half-line problem

    v_tt = v_rr - V(r) v,    v(t, 0) = 0,

which is integrated with the standard three-level leapfrog scheme.  The
outer boundary is a Dirichlet wall placed so far out that nothing reflected
from it can reach an observer before the final time.  The module also holds
the diagnostics that go with an evolution: energy, the free-energy majorant,
bound-state integrals, Hardy/positivity checks and late-time tail fits.
"""
from __future__ import annotations

import csv
import math
from dataclasses import dataclass, field

import numpy as np
from scipy import integrate

from .duhamel import InitialDataSpec, RadialPotential

__all__ = [
    "RadialGrid",
    "EvolutionState",
    "Evolution",
    "initial_state",
    "step",
    "evolve",
    "energy",
    "data_energy",
    "dalembert_solution",
    "free_energy_growth_check",
    "BoundStateEstimate",
    "bargmann_bound",
    "calogero_bound",
    "PositivityReport",
    "positivity_checks",
    "TailFit",
    "tail_exponent_fit",
    "write_observer_csv",
    "write_energy_csv",
    "max_stable_cfl",
    "roundoff_growth_exponent",
]


def max_stable_cfl(dr: float, V_max: float) -> float:
    """Largest Courant number keeping leapfrog strictly stable with ``V <= V_max``."""
    return 1.0 / math.sqrt(1.0 + max(V_max, 0.0) * dr**2 / 4.0)


# round-off may grow by at most exp(this) over a run
MAX_GROWTH_EXPONENT = 20.0


def roundoff_growth_exponent(grid: "RadialGrid", V_max: float, t_final: float) -> float:
    """Worst-case log-growth of the grid-scale mode over ``t_final``.

    Above :func:`max_stable_cfl` (for instance at ``cfl = 1`` with ``V > 0``)
    the sawtooth mode has ``|z| ~ 1 + sqrt(eps)`` per step with
    ``eps = dt^2 (4/dr^2 + V_max) - 4``.  Seeded only by round-off this stays
    harmless for moderate horizons, and ``cfl = 1`` removes the dispersion
    that otherwise swamps late-time tails.
    """
    eps = grid.dt**2 * (4.0 / grid.dr**2 + max(V_max, 0.0)) - 4.0
    if eps <= 0:
        return 0.0
    return math.sqrt(eps) * t_final / grid.dt


@dataclass(frozen=True)
class RadialGrid:
    """Uniform grid ``r_i = i dr``, ``i = 0 .. n_r``, with ``dt = cfl dr``."""

    dr: float
    n_r: int
    cfl: float = 0.5

    def __post_init__(self):
        if not self.dr > 0:
            raise ValueError("dr must be positive")
        if self.n_r < 4:
            raise ValueError("need at least 4 grid cells")
        if not (0 < self.cfl <= 1):
            raise ValueError(f"CFL violation: need 0 < dt/dr <= 1, got {self.cfl}")

    @property
    def dt(self) -> float:
        return self.cfl * self.dr

    @property
    def r_max(self) -> float:
        return self.dr * self.n_r

    @property
    def r(self) -> np.ndarray:
        return self.dr * np.arange(self.n_r + 1)

    @classmethod
    def for_horizon(cls, dr: float, t_final: float, r_obs_max: float, cfl: float = 0.5, margin: float | None = None):
        """Smallest grid whose wall stays causally disconnected from observers."""
        margin = 5 * dr if margin is None else margin
        n_r = int(math.ceil((t_final + r_obs_max + margin) / dr)) + 1
        return cls(dr=dr, n_r=n_r, cfl=cfl)

    def check_causal(self, t_final: float, r_obs_max: float, margin: float | None = None):
        margin = 2 * self.dr if margin is None else margin
        if self.r_max < t_final + r_obs_max + margin:
            raise ValueError(
                f"observer at r={r_obs_max:g} is beyond the causal safety margin: "
                f"r_max={self.r_max:g} < t_final + r_obs + margin = {t_final + r_obs_max + margin:g}"
            )


@dataclass
class EvolutionState:
    """``v = r u`` at the two latest time levels, ``t`` being that of ``v_curr``."""

    v_prev: np.ndarray
    v_curr: np.ndarray
    t: float
    steps: int = 0

    def reversed(self) -> "EvolutionState":
        """Same field with the velocity negated (leapfrog is time-symmetric)."""
        return EvolutionState(self.v_curr.copy(), self.v_prev.copy(), self.t, self.steps)


def _laplacian_1d(v, dr):
    out = np.zeros_like(v)
    out[1:-1] = (v[2:] - 2 * v[1:-1] + v[:-2]) / dr**2
    return out


def initial_state(data: InitialDataSpec, potential: RadialPotential, grid: RadialGrid) -> EvolutionState:
    """Levels ``t = 0`` and ``t = dt`` from a second-order Taylor start."""
    r = grid.r
    v0 = r * data.f(r)
    w0 = r * data.g(r)
    V = potential(r)
    v0[0] = w0[0] = 0.0
    v0[-1] = w0[-1] = 0.0
    dt = grid.dt
    acc = _laplacian_1d(v0, grid.dr) - V * v0
    v1 = v0 + dt * w0 + 0.5 * dt**2 * acc
    v1[0] = v1[-1] = 0.0
    # start one level back so (v_prev, v_curr) = (v(0), v(dt))
    return EvolutionState(v0, v1, dt, 1)


def step(state: EvolutionState, V: np.ndarray, grid: RadialGrid) -> EvolutionState:
    """One leapfrog step, ``v^{n+1} = 2 v^n - v^{n-1} + dt^2 (v_rr - V v)^n``."""
    dt2 = grid.dt**2
    c = state.v_curr
    nxt = np.empty_like(c)
    nxt[1:-1] = (
        2 * c[1:-1]
        - state.v_prev[1:-1]
        + dt2 * ((c[2:] - 2 * c[1:-1] + c[:-2]) / grid.dr**2 - V[1:-1] * c[1:-1])
    )
    nxt[0] = 0.0
    nxt[-1] = 0.0
    return EvolutionState(c, nxt, state.t + grid.dt, state.steps + 1)


def _u_at(v, grid: RadialGrid, radii):
    """``u = v / r`` at arbitrary radii by cubic Lagrange interpolation of ``v``.

    At ``r = 0`` the one-sided estimate ``(8 v_1 - v_2) / (6 dr)`` of ``v_r(0)``
    is used (``v`` is odd in ``r``).
    """
    dr = grid.dr
    radii = np.asarray(radii, dtype=float)
    out = np.empty_like(radii)
    zero = radii == 0
    out[zero] = (8 * v[1] - v[2]) / (6 * dr)
    rr = radii[~zero]
    x = rr / dr
    j = np.clip(np.floor(x).astype(int), 1, v.size - 3)
    mu = x - j
    vm1 = np.where(j - 1 >= 0, v[j - 1], -v[1])
    val = (
        -mu * (mu - 1) * (mu - 2) / 6 * vm1
        + (mu + 1) * (mu - 1) * (mu - 2) / 2 * v[j]
        - (mu + 1) * mu * (mu - 2) / 2 * v[j + 1]
        + (mu + 1) * mu * (mu - 1) / 6 * v[j + 2]
    )
    out[~zero] = val / rr
    return out


def _energy_parts(v_prev, v_curr, V, grid: RadialGrid):
    """Kinetic, gradient and potential parts at the half level, each times 4 pi.

    ``v_r`` is differenced at cell midpoints and ``v_t`` between the two
    levels, both centred; squares of the two levels are averaged.
    """
    dr, dt = grid.dr, grid.dt
    vt = (v_curr - v_prev) / dt
    kin = dr * np.sum(vt**2)  # v vanishes at both ends, so this is the trapezoid rule
    grad = 0.5 * dr * (np.sum((np.diff(v_prev) / dr) ** 2) + np.sum((np.diff(v_curr) / dr) ** 2))
    pot = 0.5 * dr * (np.sum(V * v_prev**2) + np.sum(V * v_curr**2))
    return 4 * math.pi * kin, 4 * math.pi * grad, 4 * math.pi * pot


def energy(state: EvolutionState, potential: RadialPotential, grid: RadialGrid) -> float:
    """Discrete ``E = 4 pi int (u_r^2 + V u^2 + u_t^2) r^2 dr``.

    Written in ``v = r u`` (the two forms differ by the boundary term
    ``v^2/r`` at the wall, which vanishes here) and evaluated half-way
    between the two stored levels with centred differences.  The error is
    ``O(dt^2 + dr^2)``; it is not the scheme's exactly conserved quantity.
    """
    V = potential(grid.r)
    return float(sum(_energy_parts(state.v_prev, state.v_curr, V, grid)))


def free_energy(state: EvolutionState, grid: RadialGrid) -> float:
    """``E0 = 4 pi int (u_r^2 + u_t^2) r^2 dr`` (no potential term)."""
    kin, grad, _ = _energy_parts(state.v_prev, state.v_curr, np.zeros(grid.n_r + 1), grid)
    return kin + grad


def data_energy(data: InitialDataSpec, potential: RadialPotential, r_max: float = np.inf) -> float:
    """``4 pi int (f'^2 + V f^2 + g^2) r^2 dr`` straight from the data."""

    def integrand(r):
        r = np.array([r])
        return float(((data.f_prime(r) ** 2 + potential(r) * data.f(r) ** 2 + data.g(r) ** 2) * r**2)[0])

    val, _ = integrate.quad(integrand, 0, r_max, limit=500, epsabs=0, epsrel=1e-12)
    return 4 * math.pi * val


@dataclass
class Evolution:
    """Observer series and, optionally, energy history of one run."""

    times: np.ndarray
    observers: np.ndarray
    u: np.ndarray  # (n_times, n_observers)
    state: EvolutionState
    energy_times: np.ndarray = field(default_factory=lambda: np.zeros(0))
    E: np.ndarray = field(default_factory=lambda: np.zeros(0))
    E0: np.ndarray = field(default_factory=lambda: np.zeros(0))


def evolve(
    data: InitialDataSpec,
    potential: RadialPotential,
    grid: RadialGrid,
    t_final: float,
    observers,
    *,
    record_every: int = 1,
    track_energy: bool = False,
    energy_every: int = 1,
    state: EvolutionState | None = None,
) -> Evolution:
    """Leapfrog evolution up to ``t_final``, sampling ``u`` at ``observers``.

    Raises
    ------
    ValueError
        On a CFL violation or if an observer can see the outer wall.
    """
    observers = np.atleast_1d(np.asarray(observers, dtype=float))
    if np.any(observers < 0):
        raise ValueError("observer radii must be >= 0")
    if not (0 < grid.cfl <= 1):
        raise ValueError("CFL violation")
    grid.check_causal(t_final, float(observers.max()) if observers.size else 0.0)
    V = potential(grid.r)
    growth = roundoff_growth_exponent(grid, float(np.max(V)), t_final)
    if growth > MAX_GROWTH_EXPONENT:
        raise ValueError(
            f"time step too large for this potential: round-off could grow by exp({growth:.1f}); "
            f"use cfl <= {max_stable_cfl(grid.dr, float(np.max(V))):.9f} or a shorter run"
        )
    n_steps = int(round(t_final / grid.dt))
    if state is None:
        start = initial_state(data, potential, grid)
        times = [0.0]
        series = [_u_at(start.v_prev, grid, observers)]
    else:
        start = state
        times, series = [], []
    st = start
    e_t, e_E, e_E0 = [], [], []
    if st.steps % record_every == 0:
        times.append(st.t)
        series.append(_u_at(st.v_curr, grid, observers))
    if track_energy:
        e_t.append(st.t - 0.5 * grid.dt)
        e_E.append(energy(st, potential, grid))
        e_E0.append(free_energy(st, grid))
    while st.steps < n_steps:
        st = step(st, V, grid)
        if st.steps % record_every == 0 or st.steps == n_steps:
            times.append(st.t)
            series.append(_u_at(st.v_curr, grid, observers))
        if track_energy and (st.steps % energy_every == 0 or st.steps == n_steps):
            e_t.append(st.t - 0.5 * grid.dt)
            e_E.append(energy(st, potential, grid))
            e_E0.append(free_energy(st, grid))
    return Evolution(
        times=np.asarray(times),
        observers=observers,
        u=np.asarray(series).reshape(len(times), observers.size),
        state=st,
        energy_times=np.asarray(e_t),
        E=np.asarray(e_E),
        E0=np.asarray(e_E0),
    )


def evolve_state(state: EvolutionState, potential: RadialPotential, grid: RadialGrid, n_steps: int) -> EvolutionState:
    """Advance a state by ``n_steps`` without recording anything."""
    V = potential(grid.r)
    for _ in range(n_steps):
        state = step(state, V, grid)
    return state


def dalembert_solution(data: InitialDataSpec, t, r, *, rtol: float = 1e-12):
    """Exact free radial solution from the odd extension of ``v = r u``.

    ``r v(t, r) = [F(r+t) + F(r-t)]/2 + (1/2) int_{|r-t|}^{r+t} s g(s) ds`` with
    ``F(s) = s f(|s|)``; at ``r = 0`` the limit ``f(t) + t f'(t) + t g(t)``.
    """
    t = np.asarray(t, dtype=float)
    r = np.asarray(r, dtype=float)
    t, r = np.broadcast_arrays(t, r)
    out = np.empty(t.shape)
    for idx in np.ndindex(t.shape):
        ti, ri = float(t[idx]), float(r[idx])
        if ri == 0.0:
            one = np.array([ti])
            out[idx] = float((data.f(one) + ti * data.f_prime(one) + ti * data.g(one))[0])
            continue
        a, b = abs(ri - ti), ri + ti

        def F(s):
            return s * float(data.f(np.array([abs(s)]))[0])

        gi = 0.0
        if b > a:
            gi, _ = integrate.quad(
                lambda s: s * float(data.g(np.array([s]))[0]), a, b, epsabs=0, epsrel=rtol, limit=200
            )
        out[idx] = (0.5 * (F(ri + ti) + F(ri - ti)) + 0.5 * gi) / ri
    return out if out.ndim else float(out)


def free_energy_growth_check(times, E0, V0: float, rtol: float = 1e-12) -> bool:
    """``E0(t) <= E0(0) exp(2 V0 t)`` at every recorded step."""
    times = np.asarray(times, dtype=float)
    E0 = np.asarray(E0, dtype=float)
    if E0.size == 0:
        return True
    bound = E0[0] * np.exp(2 * V0 * (times - times[0]))
    return bool(np.all(E0 <= bound * (1 + rtol) + 1e-300))


@dataclass(frozen=True)
class BoundStateEstimate:
    """A bound-state integral for the actual profile and the model majorant."""

    integral: float
    majorant: float

    @property
    def excludes_bound_states(self) -> bool:
        return self.integral < 1.0


def _half_line_integral(fn, what):
    val, err, info = integrate.quad(fn, 0, np.inf, limit=500, epsabs=1e-15, epsrel=1e-13, full_output=1)[:3]
    if not math.isfinite(val) or err > 1e-8 * max(abs(val), 1e-300) + 1e-14:
        raise ValueError(f"{what} integral does not converge (estimate {val:.6g}, error {err:.3g})")
    return val


def bargmann_bound(potential: RadialPotential) -> BoundStateEstimate:
    """``int_0^inf r |V| dr`` and its majorant ``V0 / ((k-1)(k-2))``."""
    if potential.V0 == 0:
        return BoundStateEstimate(0.0, 0.0)
    if not potential.k > 2:
        raise ValueError("Bargmann integral diverges for k <= 2")
    val = _half_line_integral(lambda r: r * abs(float(potential(np.array([r]))[0])), "Bargmann")
    return BoundStateEstimate(val, potential.V0 / ((potential.k - 1) * (potential.k - 2)))


def calogero_bound(potential: RadialPotential) -> BoundStateEstimate:
    """``(2/pi) int_0^inf sqrt|V| dr`` and the majorant ``(2/pi) sqrt(V0) / (k-2)``.

    For ``V = V0 <r>^-k`` the integral itself is ``(2/pi) 2 sqrt(V0)/(k-2)``,
    twice the majorant; both are reported.
    """
    if potential.V0 == 0:
        return BoundStateEstimate(0.0, 0.0)
    if not potential.k > 2:
        raise ValueError("Calogero integral diverges for k <= 2")
    val = _half_line_integral(lambda r: math.sqrt(abs(float(potential(np.array([r]))[0]))), "Calogero")
    return BoundStateEstimate(2 / math.pi * val, 2 / math.pi * math.sqrt(potential.V0) / (potential.k - 2))


@dataclass(frozen=True)
class PositivityReport:
    V0: float
    positive_definite: bool
    energy_factor: float
    fVf: float
    grad_f_sq: float
    hardy_ratio: float
    hardy_holds: bool

    def as_dict(self) -> dict:
        return {k: (None if isinstance(v, float) and not math.isfinite(v) else v) for k, v in self.__dict__.items()}


POSITIVITY_THRESHOLD = 0.25


def positivity_checks(data: InitialDataSpec, potential: RadialPotential) -> PositivityReport:
    """Energy positivity for ``V0 < 1/4`` and the Hardy consequence
    ``|<f, V f>| <= 4 V0 ||grad f||^2``, both sides by quadrature."""

    def quad(fn):
        return 4 * math.pi * integrate.quad(fn, 0, np.inf, limit=500, epsabs=0, epsrel=1e-11)[0]

    fVf = quad(lambda r: float((potential(np.array([r])) * data.f(np.array([r])) ** 2)[0]) * r * r)
    grad = quad(lambda r: float(data.f_prime(np.array([r]))[0]) ** 2 * r * r)
    V0 = potential.V0
    ratio = abs(fVf) / (4 * V0 * grad) if V0 > 0 and grad > 0 else math.nan
    return PositivityReport(
        V0=V0,
        positive_definite=bool(V0 < POSITIVITY_THRESHOLD),
        energy_factor=float(1 - 4 * V0),
        fVf=fVf,
        grad_f_sq=grad,
        hardy_ratio=ratio,
        hardy_holds=bool(not (ratio > 1 + 1e-9)),
    )


@dataclass(frozen=True)
class TailFit:
    exponent: float
    residual: float
    n_points: int
    used_envelope: bool


def tail_exponent_fit(times, values, window=(50.0, 200.0), min_peaks: int = 4) -> TailFit:
    """Fit ``|u| ~ C t^-a`` on ``window`` and return ``a``.

    A series of one sign is fitted directly.  If the sign changes, the local
    maxima of ``|u|`` are fitted instead; fewer than ``min_peaks`` of them
    raises.
    """
    times = np.asarray(times, dtype=float)
    values = np.asarray(values, dtype=float)
    sel = (times >= window[0]) & (times <= window[1])
    t, u = times[sel], values[sel]
    if t.size < 3:
        raise ValueError("tail window holds fewer than 3 samples")
    used_env = False
    if np.all(u > 0) or np.all(u < 0):
        tt, aa = t, np.abs(u)
    else:
        a = np.abs(u)
        peak = np.flatnonzero((a[1:-1] > a[:-2]) & (a[1:-1] >= a[2:])) + 1
        if peak.size < min_peaks:
            raise ValueError(
                "series changes sign in the tail window without a stable envelope; try a later window"
            )
        tt, aa = t[peak], a[peak]
        used_env = True
    if np.any(aa <= 0):
        raise ValueError("zero values in the tail window")
    X = np.log(tt)
    Y = np.log(aa)
    A = np.stack([np.ones_like(X), X], axis=1)
    coef, res, *_ = np.linalg.lstsq(A, Y, rcond=None)
    resid = float(np.sqrt(np.mean((A @ coef - Y) ** 2)))
    return TailFit(exponent=float(-coef[1]), residual=resid, n_points=int(tt.size), used_envelope=used_env)


def write_observer_csv(evo: Evolution, path) -> None:
    """Columns ``t, r_obs, u``."""
    with open(path, "w", newline="") as fh:
        w = csv.writer(fh)
        w.writerow(["t", "r_obs", "u"])
        for i, t in enumerate(evo.times):
            for j, r in enumerate(evo.observers):
                w.writerow([repr(float(t)), repr(float(r)), repr(float(evo.u[i, j]))])


def write_energy_csv(evo: Evolution, path) -> None:
    """Columns ``t, E, E0``."""
    with open(path, "w", newline="") as fh:
        w = csv.writer(fh)
        w.writerow(["t", "E", "E0"])
        for t, E, E0 in zip(evo.energy_times, evo.E, evo.E0):
            w.writerow([repr(float(t)), repr(float(E)), repr(float(E0))])

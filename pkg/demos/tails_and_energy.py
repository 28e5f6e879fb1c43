"""Late-time behaviour of a compactly supported pulse.

Runs the finite-difference oracle to t = 200 and fits the power law of the
field at r = 1, then tracks the energy of a shorter run.

    python demos/tails_and_energy.py
"""
from __future__ import annotations

import numpy as np

from wavedecay.fd import RadialGrid, evolve, free_energy_growth_check, tail_exponent_fit
from wavedecay.profiles import bump_data, gaussian_data, model_potential


def main():
    pot = model_potential(V0=0.003, k=3.0)

    data = bump_data(amp_f=0.0, amp_g=1.0, radius=2.0)
    grid = RadialGrid.for_horizon(0.05, 200.0, 1.0, cfl=1.0)
    evo = evolve(data, pot, grid, 200.0, [1.0])
    fit = tail_exponent_fit(evo.times, evo.u[:, 0], window=(50.0, 200.0))
    print(f"u(t, r=1) ~ t^-{fit.exponent:.3f} on [50, 200] (potential falls off like r^-{pot.k:g})")
    for t in (25, 50, 100, 200):
        i = np.argmin(abs(evo.times - t))
        print(f"  t = {t:4d}: u = {evo.u[i, 0]: .4e}")

    data = gaussian_data(1.0, 0.5)
    for dr in (0.02, 0.01):
        grid = RadialGrid.for_horizon(dr, 50.0, 1.0)
        run = evolve(data, pot, grid, 50.0, [1.0], record_every=10**9, track_energy=True, energy_every=50)
        drift = np.max(np.abs(run.E - run.E[0])) / run.E[0]
        ok = free_energy_growth_check(run.energy_times, run.E0, pot.V0)
        print(f"dr = {dr}: energy drift {drift:.2e}, free-energy majorant holds: {ok}")


if __name__ == "__main__":
    main()

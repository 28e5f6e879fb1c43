"""Walk through the kernel bounds behind the decay estimate.

Prints the constants for the model problem, shows where the sphere-average
bound is tightest, and compares one cone integral with its bound.

    python demos/sphere_and_cone_bounds.py
"""
from __future__ import annotations

import numpy as np

from wavedecay.geometry import ConeKernelParams, cone_integral, sphere_integral_closed_form
from wavedecay.lemmas import SweepSpec, verify_lemma1_basic
from wavedecay.weights import c_pq, little_c, theorem_constants


def main():
    cs = theorem_constants(1, 1, 1, 4, 0.003, 3)
    print(f"model problem: p = {cs.p:g}, contraction factor {cs.delta:.4g}, decay constant {cs.C_total:.4g}")

    for p in (2.5, 4.0, 6.0):
        rep = verify_lemma1_basic(SweepSpec.default([p], t_range=(1e-2, 1e3), n=31))
        pt = rep.worst_point
        print(f"sphere average, p = {p:g}: worst ratio {rep.worst_ratio:.4f} at t = {pt['t']:g}, x = {pt['x']:g}")

    # along x = 2t the average behaves like t^(2-p); the bound has the same rate
    p = 6.0
    t = np.geomspace(1, 1e3, 4)
    avg = sphere_integral_closed_form(2 * t, t, p)
    bound = little_c(p) * t / (2 * t * (1 + t) ** (p - 2))
    for ti, a, b in zip(t, avg, bound):
        print(f"  t = {ti:7.1f}: average {a:.3e}, bound {b:.3e}, ratio {a / b:.3f}")

    prm = ConeKernelParams(3.0, 3.0)
    x, tt = 5.0, 8.0
    est = cone_integral(x, tt, prm)
    rhs = c_pq(3, 3) / ((1 + tt + x) * (1 + abs(tt - x)) ** 2)
    print(f"cone integral at (t, x) = ({tt:g}, {x:g}): {est.value:.4e} +- {est.error:.1e}, bound {rhs:.4e}")


if __name__ == "__main__":
    main()

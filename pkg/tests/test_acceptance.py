"""End-to-end acceptance criteria, each at its stated tolerance and time budget.

Every test logs one PASS/FAIL line before asserting; the lines are repeated
in the terminal summary.
"""
from __future__ import annotations

import math
import time
from fractions import Fraction

import numpy as np
import pytest

from wavedecay.cli import run
from wavedecay.config import load_config
from wavedecay.fd import bargmann_bound, calogero_bound, positivity_checks
from wavedecay.profiles import model_data, model_potential
from wavedecay.weights import big_c1, big_c2, big_cm, c_pq, little_c, theorem_constants

GRID = [Fraction(5, 2), Fraction(3), Fraction(4), Fraction(6)]


class Timed:
    def __init__(self, mode, threads=1):
        self.mode, self.threads = mode, threads

    def __call__(self, out_root):
        t0 = time.perf_counter()
        report, code = run(load_config(mode=self.mode), out_root / f"{self.mode}-t{self.threads}", self.threads)
        self.seconds = time.perf_counter() - t0
        self.report, self.code = report, code
        self.bytes = (out_root / f"{self.mode}-t{self.threads}" / "report.json").read_bytes()
        return self


@pytest.fixture(scope="module")
def out_root(tmp_path_factory):
    return tmp_path_factory.mktemp("acceptance")


@pytest.fixture(scope="module")
def lemma1_run(out_root):
    return Timed("lemma1")(out_root)


@pytest.fixture(scope="module")
def solve_run(out_root):
    return Timed("solve")(out_root)


@pytest.fixture(scope="module")
def compare_run(out_root):
    return Timed("compare")(out_root)


def _checks(report):
    return {c["name"]: c for c in report["checks"]}


def _rational_cone(p, q):
    six = Fraction(6) ** int(q - 1) if (q - 1).denominator == 1 else None
    factor = Fraction(3, 2) / (q - 2) * max(2 / (p - 1), Fraction(3))
    return float(factor * six) if six is not None else float(factor) * 6.0 ** float(q - 1)


def test_criterion_01_constants(acceptance_log):
    t0 = time.perf_counter()
    ulp_ok = True
    for p in GRID:
        pairs = [
            (little_c(p), 1 / (2 * (p - 2))),
            (big_c1(p), max(Fraction(9) / (2 * (p - 2)), Fraction(4))),
            (big_c2(p), max(Fraction(3) / (p - 1), Fraction(5))),
            (big_cm(p), max(Fraction(9) / (2 * (p - 2)), Fraction(5))),
        ]
        pairs += [(c_pq(p, q), _rational_cone(p, q)) for q in GRID if q >= p]
        for got, exact in pairs:
            ulp_ok &= abs(got - float(exact)) <= math.ulp(float(exact))
    cs = theorem_constants(1, 1, 1, 4, 0.003, 3)
    seconds = time.perf_counter() - t0
    ok = ulp_ok and abs(cs.delta - 0.486) < 1e-15 and round(cs.C_total, 2) == 29.18 and seconds < 1
    acceptance_log(1, ok, f"constants within 1 ulp: {ulp_ok}; delta {cs.delta:.6g}, C {cs.C_total:.4f}; {seconds:.3f} s")
    assert ok


def test_criterion_02_sphere_bounds(lemma1_run, acceptance_log):
    ch = _checks(lemma1_run.report)
    names = ["sphere_basic", "sphere_weighted_1", "sphere_weighted_2"]
    worst = {n: ch[n]["value"] for n in names}
    ok = all(ch[n]["pass"] and ch[f"{n}_all_points"]["pass"] and worst[n] <= 1 + 1e-9 for n in names)
    ok &= lemma1_run.seconds < 10
    text = ", ".join(f"{n} {v:.6f}" for n, v in worst.items())
    acceptance_log(2, ok, f"worst ratios {text}; {lemma1_run.seconds:.1f} s")
    assert ok


def test_criterion_03_cone_bound(out_root, acceptance_log):
    r = Timed("lemma2")(out_root)
    cfg = r.report["config"]["sections"]
    ch = _checks(r.report)["cone_source"]
    ok = (
        ch["pass"]
        and _checks(r.report)["cone_source_all_points"]["pass"]
        and ch["value"] <= 1
        and r.report["tolerances"]["cone_bound"] == 1e-4
        and sorted(map(tuple, cfg["sweep"]["pairs"])) == [(2.5, 2.5), (2.5, 4.0), (3.0, 3.0), (3.0, 4.0)]
        and cfg["sweep"]["t_min"] == 0.01
        and cfg["sweep"]["t_max"] == 20.0
        and r.seconds < 600
    )
    acceptance_log(3, ok, f"worst cone ratio {ch['value']:.4g}; {r.seconds:.1f} s")
    assert ok


def test_criterion_04_closed_form(lemma1_run, acceptance_log):
    ch = _checks(lemma1_run.report)["closed_form_vs_quadrature"]
    n = lemma1_run.report["results"]["closed_form_vs_quadrature"]["n"]
    ok = ch["pass"] and ch["value"] <= 1e-10 and n == 1000 and lemma1_run.seconds < 10
    acceptance_log(4, ok, f"max relative difference {ch['value']:.3g} over {n} triples")
    assert ok


def test_criterion_05_contraction(solve_run, acceptance_log):
    rep = solve_run.report
    it = rep["results"]["iteration"]
    ch = _checks(rep)
    diffs = it["diffs"]
    decreasing = all(b < a for a, b in zip(diffs, diffs[1:]))
    ok = (
        solve_run.code == 0
        and it["converged"]
        and it["n_iters"] <= 50
        and it["options"]["stop_tol"] == 1e-8
        and decreasing
        and ch["contraction_ratio"]["pass"]
        and ch["decay_constant"]["pass"]
        and solve_run.seconds < 1800
    )
    acceptance_log(
        5,
        ok,
        f"{it['n_iters']} iterations, ratio {it['measured_ratio']:.3g} vs delta {it['delta_theoretical']:.3g}, "
        f"C {it['C_empirical']:.4g} <= {it['C_theoretical']:.4g}; {solve_run.seconds:.1f} s",
    )
    assert ok


def test_criterion_06_oracle_equivalence(compare_run, acceptance_log):
    res = compare_run.report["results"]
    errs = [lv["rel_linf"] for lv in res["levels"]]
    cfg = compare_run.report["config"]["sections"]["solver"]
    ok = (
        len(errs) == 2
        and errs[0] <= 1e-2
        and res["refinement_factor"] >= 2
        and min(cfg["sample_t"]) == 0
        and max(cfg["sample_t"]) == 20
        and min(cfg["sample_r"]) == 0.1
        and max(cfg["sample_r"]) == 10
        and compare_run.seconds < 1800
    )
    acceptance_log(
        6,
        ok,
        f"relative sup {errs[0]:.3g} -> {errs[-1]:.3g}, factor {res.get('refinement_factor', float('nan')):.3f}; "
        f"{compare_run.seconds:.0f} s",
    )
    assert ok


def test_criterion_07_energy(out_root, acceptance_log):
    r = Timed("energy")(out_root)
    res, fd = r.report["results"], r.report["config"]["sections"]["fd"]
    ok = (
        res["drift"] <= 1e-4
        and res["refinement_ratio"] <= r.report["tolerances"]["energy_refine"]
        and res["free_energy_majorant"]
        and fd["dr"] == 0.01
        and fd["t_final"] == 50
        and r.seconds < 300
    )
    acceptance_log(
        7,
        ok,
        f"drift {res['drift']:.3g}, refinement ratio {res['refinement_ratio']:.3f}, "
        f"majorant {res['free_energy_majorant']}; {r.seconds:.1f} s",
    )
    assert ok


def test_criterion_08_tail(out_root, acceptance_log):
    r = Timed("tail")(out_root)
    res, cfg = r.report["results"], r.report["config"]["sections"]
    ok = (
        2.5 <= res["exponent"] <= 3.5
        and res["observer"] == 1.0
        and cfg["fd"]["window"] == [50.0, 200.0]
        and cfg["potential"]["V0"] == 0.003
        and cfg["potential"]["k"] == 3.0
        and r.seconds < 600
    )
    acceptance_log(8, ok, f"fitted exponent {res['exponent']:.3f}; {r.seconds:.1f} s")
    assert ok


def test_criterion_09_bound_states_and_positivity(acceptance_log):
    t0 = time.perf_counter()
    pot = model_potential(V0=1.0, k=3.0)
    b, c = bargmann_bound(pot), calogero_bound(pot)
    maj_ok = abs(b.majorant - 0.5) <= 1e-12 and abs(c.majorant - 2 / math.pi) <= 1e-12
    below = positivity_checks(model_data(), model_potential(V0=float(np.nextafter(0.25, 0.0))))
    at = positivity_checks(model_data(), model_potential(V0=0.25))
    flip_ok = below.positive_definite and not at.positive_definite
    seconds = time.perf_counter() - t0
    ok = maj_ok and flip_ok and seconds < 1
    acceptance_log(
        9,
        ok,
        f"Bargmann {b.majorant:.15g}, Calogero {c.majorant:.15g}, flip at 1/4: {flip_ok}; {seconds:.3f} s",
    )
    assert ok


def test_criterion_10_determinism(out_root, lemma1_run, solve_run, compare_run, acceptance_log):
    same = {}
    for base in (lemma1_run, solve_run, compare_run):
        other = Timed(base.mode, threads=2)(out_root)
        again = Timed(base.mode, threads=1)
        same[base.mode] = other.bytes == base.bytes
        if base.mode != "compare":
            same[base.mode] &= again(out_root / "repeat").bytes == base.bytes
    ok = all(same.values())
    acceptance_log(10, ok, "byte-identical reports: " + ", ".join(f"{m} {v}" for m, v in same.items()))
    assert ok

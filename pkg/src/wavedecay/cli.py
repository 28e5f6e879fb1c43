"""Command-line runner: one subcommand per experiment mode, plus ``render``.

Each run writes ``report.json`` and plot-ready CSVs into the output
directory and exits with 0 if every check passed, 1 if a check failed (the
report is still written) and 2 on a configuration error.
"""
from __future__ import annotations

import argparse
import json
import math
import os
import sys
from dataclasses import dataclass, replace
from pathlib import Path

import numpy as np

from .config import MODES, ConfigError, ExperimentConfig, load_config
from .duhamel import SolverError, SolverOptions, solve_fixed_point, solve_with_source, write_field_csv
from .fd import (
    RadialGrid,
    bargmann_bound,
    calogero_bound,
    dalembert_solution,
    evolve,
    free_energy_growth_check,
    positivity_checks,
    tail_exponent_fit,
    write_energy_csv,
    write_observer_csv,
)
from .geometry import power_kernel, sphere_average_radial, sphere_integral_closed_form
from .lemmas import (
    SweepSpec,
    verify_lemma1_basic,
    verify_lemma1_boxed1,
    verify_lemma1_boxed2,
    verify_lemma2,
    write_bound_csv,
)
from .weights import SpacetimeSampleSet, theorem_constants

__all__ = ["SCHEMA", "OUT_ENV", "Check", "light_cone_samples", "run", "render", "main"]

SCHEMA = "wavedecay-report/1"
OUT_ENV = "WAVEDECAY_OUT"
DEFAULT_OUT = "wavedecay-out"

EXIT_PASS, EXIT_FAIL, EXIT_CONFIG = 0, 1, 2


@dataclass
class Check:
    """One pass/fail verdict: ``value <relation> limit``."""

    name: str
    value: float | None
    limit: float
    relation: str  # "<=" or ">="
    description: str = ""

    @property
    def passed(self) -> bool:
        if self.value is None or not math.isfinite(self.value):
            return False
        return self.value <= self.limit if self.relation == "<=" else self.value >= self.limit

    def as_dict(self) -> dict:
        return {
            "name": self.name,
            "value": _clean(self.value),
            "limit": _clean(self.limit),
            "relation": self.relation,
            "description": self.description,
            "pass": self.passed,
        }


def _flag(name, ok, description=""):
    """A boolean verdict as a check ``value >= 1``."""
    return Check(name, 1.0 if ok else 0.0, 1.0, ">=", description)


def _clean(v):
    """JSON-safe copy: numpy scalars to Python, non-finite floats to None."""
    if isinstance(v, dict):
        return {str(k): _clean(x) for k, x in v.items()}
    if isinstance(v, (list, tuple)):
        return [_clean(x) for x in v]
    if isinstance(v, np.ndarray):
        return [_clean(x) for x in v.tolist()]
    if isinstance(v, (bool, np.bool_)):
        return bool(v)
    if isinstance(v, (int, np.integer)):
        return int(v)
    if isinstance(v, (float, np.floating)):
        v = float(v)
        return v if math.isfinite(v) else None
    return v


def light_cone_samples(t_values, r_values, horizon: float) -> SpacetimeSampleSet:
    """Tensor samples inside ``t + r <= horizon`` plus the outgoing cone ``r = t``.

    Points on ``r = t`` are where the two weight factors differ most, so they
    are always included for every ``t`` that fits.
    """
    t = np.asarray(sorted(set(float(v) for v in t_values)))
    r = np.asarray(sorted(set(float(v) for v in r_values)))
    tt, rr = np.meshgrid(t, r, indexing="ij")
    pts = np.stack([tt.ravel(), rr.ravel()], axis=1)
    cone = np.stack([t, t], axis=1)
    pts = np.unique(np.concatenate([pts, cone]), axis=0)
    pts = pts[pts[:, 0] + pts[:, 1] <= horizon * (1 + 1e-12)]
    if pts.size == 0:
        raise ConfigError("solver.sample_t, solver.sample_r: no sample inside t + r <= horizon")
    return SpacetimeSampleSet(pts[:, 0].copy(), pts[:, 1].copy())


# mode runners return (results, checks, artifacts)


def _run_constants(cfg: ExperimentConfig, out: Path, threads: int):
    data, pot = cfg.build_data(), cfg.build_potential()
    tol = cfg.tolerances
    cs = theorem_constants(data.f0, data.f1, data.g0, data.m, pot.V0, pot.k)
    results = {"constants": cs.as_dict()}
    checks = [Check("contraction_factor", cs.delta, 1.0, "<=", "delta = C_{p,k} V0 below 1")]
    if pot.k > 2:
        barg, calo = bargmann_bound(pot), calogero_bound(pot)
        pos = positivity_checks(data, pot)
        results["bound_states"] = {
            "bargmann_integral": barg.integral,
            "bargmann_majorant": barg.majorant,
            "calogero_integral": calo.integral,
            "calogero_majorant": calo.majorant,
        }
        results["positivity"] = pos.as_dict()
        if pos.positive_definite and not math.isnan(pos.hardy_ratio):
            checks.append(Check("hardy_ratio", pos.hardy_ratio, 1.0, "<=", "|<f,Vf>| <= 4 V0 |grad f|^2"))
    return results, checks, []


def _sweep(cfg, pairs=None, tolerance=None):
    sw = cfg.section("sweep")
    return SweepSpec.default(
        sw["p_values"],
        t_range=(sw["t_min"], sw["t_max"]),
        n=sw["n"],
        tolerance=tolerance,
        pairs=pairs,
    )


def _closed_form_check(cfg, n: int):
    """Closed-form sphere integral against adaptive quadrature at random points."""
    sw = cfg.section("sweep")
    rng = np.random.default_rng(cfg.seed)
    lo, hi = math.log(sw["t_min"]), math.log(sw["t_max"])
    t = np.exp(rng.uniform(lo, hi, n))
    x = np.exp(rng.uniform(lo, hi, n))
    p = rng.uniform(min(sw["p_values"]), max(sw["p_values"]), n)
    rel = np.empty(n)
    for i in range(n):
        exact = float(sphere_integral_closed_form(x[i], t[i], p[i]))
        quad = float(sphere_average_radial(x[i], t[i], power_kernel(p[i]), rtol=1e-12))
        rel[i] = abs(quad - exact) / abs(exact)
    k = int(np.argmax(rel)) if n else 0
    worst = {"t": t[k], "x": x[k], "p": p[k]} if n else {}
    return (float(rel.max()) if n else 0.0), worst


def _run_lemma1(cfg, out: Path, threads: int):
    tol = cfg.tolerances
    spec = _sweep(cfg, tolerance=tol["sphere_bound"])
    reports = [verify_lemma1_basic(spec), verify_lemma1_boxed1(spec)]
    high = [p for p in spec.p_values if p > 3]
    if high:
        spec2 = _sweep(cfg, tolerance=tol["sphere_bound"])
        spec2.p_values = high
        reports.append(verify_lemma1_boxed2(spec2))
    results, checks, files = {}, [], []
    for rep in reports:
        results[rep.name] = rep.as_dict()
        checks.append(Check(rep.name, rep.worst_ratio, 1 + tol["sphere_bound"], "<=", _DESCRIPTIONS[rep.name]))
        checks.append(_flag(rep.name + "_all_points", rep.passed, "every point passes after the error budget"))
        name = f"{rep.name}.csv"
        write_bound_csv(rep, out / name)
        files.append(name)
    n = cfg.section("sweep")["random_samples"]
    if n:
        worst, where = _closed_form_check(cfg, n)
        results["closed_form_vs_quadrature"] = {"max_rel_diff": worst, "worst_point": where, "n": n}
        checks.append(Check("closed_form_vs_quadrature", worst, tol["closed_form"], "<=", _DESCRIPTIONS["closed_form"]))
    return results, checks, files


def _run_lemma2(cfg, out: Path, threads: int):
    tol = cfg.tolerances
    sw = cfg.section("sweep")
    spec = _sweep(cfg, pairs=sw["pairs"], tolerance=tol["cone_bound"])
    rep = verify_lemma2(spec, rtol=sw["quad_rtol"], threads=threads)
    write_bound_csv(rep, out / "cone_source.csv")
    checks = [
        Check("cone_source", rep.worst_ratio, 1.0, "<=", _DESCRIPTIONS["cone_source"]),
        _flag("cone_source_all_points", rep.passed, "every point passes after the quadrature error budget"),
    ]
    return {"cone_source": rep.as_dict()}, checks, ["cone_source.csv"]


def _solver_options(cfg, threads, density_factor=1.0):
    so = cfg.section("solver")
    return SolverOptions(
        grid_step=so["grid_step"],
        panel_width=so["panel_width"],
        order=so["order"],
        density=so["density"] * density_factor,
        stop_tol=so["stop_tol"],
        n_max=so["n_max"],
        interp_budget=cfg.tolerances["interp_budget"],
        threads=threads,
    )


def _run_solve(cfg, out: Path, threads: int, with_source: bool = False):
    so, tol = cfg.section("solver"), cfg.tolerances
    data, pot = cfg.build_data(), cfg.build_potential()
    samples = light_cone_samples(so["sample_t"], so["sample_r"], so["horizon"])
    opts = _solver_options(cfg, threads)
    if with_source:
        field, rep = solve_with_source(data, pot, cfg.build_source(), samples, opts)
    else:
        field, rep = solve_fixed_point(data, pot, samples, opts)
    write_field_csv(field, rep.norm_p, out / "field.csv")
    limit = rep.delta_theoretical * 1.1 + tol["interp_budget"]
    checks = [
        _flag("converged", rep.converged, f"weighted iterate difference below {so['stop_tol']:g}"),
        Check("contraction_ratio", rep.measured_ratio, limit, "<=", "measured ratio <= 1.1 delta + interpolation budget"),
        Check("decay_constant", rep.C_empirical, rep.C_theoretical * (1 + tol["decay_bound"]), "<=",
              "weighted sup of u against the theoretical constant"),
    ]
    return {"iteration": rep.as_dict(), "n_samples": len(field)}, checks, ["field.csv"]


def _run_solve_source(cfg, out, threads):
    return _run_solve(cfg, out, threads, with_source=True)


def _fd_grid(cfg, dr, t_final, observers):
    return RadialGrid.for_horizon(dr, t_final, max(observers), cfl=cfg.section("fd")["cfl"])


def _run_oracle(cfg, out: Path, threads: int):
    fd, tol = cfg.section("fd"), cfg.tolerances
    data, pot = cfg.build_data(), cfg.build_potential()
    grid = _fd_grid(cfg, fd["dr"], fd["t_final"], fd["observers"])
    evo = evolve(data, pot, grid, fd["t_final"], fd["observers"], record_every=fd["record_every"])
    write_observer_csv(evo, out / "observers.csv")
    results = {"grid": {"dr": grid.dr, "dt": grid.dt, "r_max": grid.r_max}, "max_abs_u": float(np.max(np.abs(evo.u)))}
    checks = [_flag("finite", bool(np.all(np.isfinite(evo.u))), "observer series stay finite")]
    if pot.is_zero:
        T, R = np.meshgrid(evo.times, evo.observers, indexing="ij")
        exact = dalembert_solution(data, T.ravel(), R.ravel()).reshape(T.shape)
        scale = max(float(np.max(np.abs(exact))), 1e-300)
        err = float(np.max(np.abs(evo.u - exact))) / scale
        results["free_exact_rel_linf"] = err
        checks.append(Check("free_exact", err, tol["oracle_free"], "<=", "FD against the exact free radial solution"))
    return results, checks, ["observers.csv"]


def _fd_at(evo, t_values):
    idx = np.rint(np.asarray(t_values) / (evo.times[1] - evo.times[0])).astype(int)
    if np.any(idx >= evo.times.size) or np.any(np.abs(evo.times[idx] - t_values) > 1e-9 * np.maximum(1, t_values)):
        raise ConfigError("solver.sample_t: sample times must be multiples of the FD time step")
    return evo.u[idx]


def _run_compare(cfg, out: Path, threads: int):
    so, fd, tol = cfg.section("solver"), cfg.section("fd"), cfg.tolerances
    data, pot = cfg.build_data(), cfg.build_potential()
    ts = np.asarray(sorted(set(so["sample_t"])))
    rs = np.asarray(sorted(set(so["sample_r"])))
    samples = SpacetimeSampleSet.tensor(ts, rs)
    if np.any(samples.t + samples.r > so["horizon"] * (1 + 1e-12)):
        raise ConfigError("solver.horizon: must cover max(sample_t) + max(sample_r)")
    levels = [1.0, 2.0] if so["refine"] or fd["refine"] else [1.0]
    results, rel, files = {"levels": []}, [], []
    for k, factor in enumerate(levels):
        opts = replace(_solver_options(cfg, threads, factor), t_max=so["horizon"])
        field, rep = solve_fixed_point(data, pot, samples, opts)
        u_d = field.values.reshape(ts.size, rs.size)
        dr = fd["dr"] / factor
        grid = _fd_grid(cfg, dr, float(ts.max()), rs)
        evo = evolve(data, pot, grid, float(ts.max()), rs)
        u_f = _fd_at(evo, ts)
        err = float(np.max(np.abs(u_d - u_f)) / max(np.max(np.abs(u_f)), 1e-300))
        rel.append(err)
        results["levels"].append(
            {"density": opts.density, "dr": dr, "rel_linf": err, "n_iters": rep.n_iters, "converged": rep.converged}
        )
        name = f"compare_level{k}.csv"
        _write_compare_csv(out / name, ts, rs, u_d, u_f)
        files.append(name)
    checks = [Check(f"rel_linf_level{k}", e, tol["compare"], "<=", "Duhamel vs FD, relative sup") for k, e in enumerate(rel)]
    if len(rel) > 1:
        gain = rel[0] / rel[1] if rel[1] > 0 else math.inf
        results["refinement_factor"] = gain
        checks.append(Check("refinement_factor", gain, tol["refine_gain"], ">=", "discrepancy reduction on refinement"))
    return results, checks, files


def _write_compare_csv(path, ts, rs, u_d, u_f):
    with open(path, "w") as fh:
        fh.write("t,r,u_duhamel,u_fd\n")
        for i, t in enumerate(ts):
            for j, r in enumerate(rs):
                fh.write(f"{float(t)!r},{float(r)!r},{float(u_d[i, j])!r},{float(u_f[i, j])!r}\n")


def _energy_run(cfg, data, pot, dr):
    fd = cfg.section("fd")
    grid = _fd_grid(cfg, dr, fd["t_final"], fd["observers"])
    evo = evolve(
        data, pot, grid, fd["t_final"], fd["observers"],
        record_every=fd["record_every"], track_energy=True, energy_every=fd["energy_every"],
    )
    drift = float(np.max(np.abs(evo.E - evo.E[0])) / abs(evo.E[0])) if evo.E[0] != 0 else 0.0
    return evo, drift


def _run_energy(cfg, out: Path, threads: int):
    fd, tol = cfg.section("fd"), cfg.tolerances
    data, pot = cfg.build_data(), cfg.build_potential()
    evo, drift = _energy_run(cfg, data, pot, fd["dr"])
    write_energy_csv(evo, out / "energy.csv")
    majorant = free_energy_growth_check(evo.energy_times, evo.E0, pot.V0)
    results = {"drift": drift, "E_initial": float(evo.E[0]), "free_energy_majorant": majorant}
    checks = [
        Check("energy_drift", drift, tol["energy_drift"], "<=", f"max relative energy change over [0, {fd['t_final']:g}]"),
        _flag("free_energy_majorant", majorant, "E0(t) <= E0(0) exp(2 V0 t) at every step"),
    ]
    if fd["refine"]:
        _, coarse = _energy_run(cfg, data, pot, 2 * fd["dr"])
        ratio = drift / coarse if coarse > 0 else 0.0
        results["drift_coarse"] = coarse
        results["refinement_ratio"] = ratio
        checks.append(Check("energy_refinement", ratio, tol["energy_refine"], "<=", "drift(dr) / drift(2 dr)"))
    return results, checks, ["energy.csv"]


def _run_tail(cfg, out: Path, threads: int):
    fd, tol = cfg.section("fd"), cfg.tolerances
    data, pot = cfg.build_data(), cfg.build_potential()
    grid = _fd_grid(cfg, fd["dr"], fd["t_final"], fd["observers"])
    evo = evolve(data, pot, grid, fd["t_final"], fd["observers"], record_every=fd["record_every"])
    write_observer_csv(evo, out / "observers.csv")
    fit = tail_exponent_fit(evo.times, evo.u[:, 0], window=tuple(fd["window"]))
    results = {
        "exponent": fit.exponent,
        "k": pot.k,
        "residual": fit.residual,
        "n_points": fit.n_points,
        "used_envelope": fit.used_envelope,
        "observer": float(evo.observers[0]),
    }
    checks = [Check("tail_exponent_error", abs(fit.exponent - pot.k), tol["tail"], "<=", "|fitted exponent - k|")]
    return results, checks, ["observers.csv"]


_RUNNERS = {
    "constants": _run_constants,
    "lemma1": _run_lemma1,
    "lemma2": _run_lemma2,
    "solve": _run_solve,
    "solve-source": _run_solve_source,
    "oracle": _run_oracle,
    "compare": _run_compare,
    "tail": _run_tail,
    "energy": _run_energy,
}

_DESCRIPTIONS = {
    "sphere_basic": "sphere average of <y>^-p <= c_p t / (x <t-x>^(p-2))",
    "sphere_weighted_1": "I_p / t <= C1_p / (<t+x> <t-x>^(p-2))",
    "sphere_weighted_2": "I_(p-1) / t^2 <= C2_p / (<t+x> <t-x>^(p-2))",
    "closed_form": "closed-form sphere integral vs adaptive quadrature",
    "cone_source": "cone integral <= C_pq / (<t+x> <t-x>^(p-1))",
}


def run(cfg: ExperimentConfig, out_dir, threads: int = 1) -> tuple[dict, int]:
    """Execute one experiment, write its artifacts and return ``(report, exit_code)``."""
    out = Path(out_dir)
    out.mkdir(parents=True, exist_ok=True)
    error = None
    try:
        results, checks, files = _RUNNERS[cfg.mode](cfg, out, threads)
    except (SolverError, ValueError, ArithmeticError) as exc:
        if isinstance(exc, ConfigError):
            raise
        results, checks, files = {}, [], []
        error = f"{type(exc).__name__}: {exc}"
    passed = error is None and all(c.passed for c in checks)
    report = {
        "schema": SCHEMA,
        "mode": cfg.mode,
        "config": cfg.canonical(),
        "config_hash": cfg.hash(),
        "tolerances": dict(cfg.tolerances),
        "checks": [c.as_dict() for c in checks],
        "results": results,
        "artifacts": sorted(files),
        "error": error,
        "pass": passed,
    }
    report = _clean(report)
    (out / "report.json").write_text(json.dumps(report, sort_keys=True, indent=2) + "\n")
    return report, EXIT_PASS if passed else EXIT_FAIL


def _fmt(v):
    if v is None:
        return "n/a"
    if isinstance(v, bool):
        return str(v)
    if isinstance(v, (int, float)):
        return f"{v:.6g}"
    return str(v)


def render(report: dict) -> str:
    """One-screen text summary of a report.

    Raises
    ------
    ValueError
        If ``report`` does not follow the report schema.
    """
    required = ("schema", "mode", "checks", "results", "pass", "config_hash")
    if not isinstance(report, dict) or any(k not in report for k in required) or report["schema"] != SCHEMA:
        raise ValueError(f"not a {SCHEMA} report")
    lines = [f"mode: {report['mode']}    config {report['config_hash'][:12]}    {'PASS' if report['pass'] else 'FAIL'}"]
    if report.get("error"):
        lines.append(f"error: {report['error']}")
    res = report["results"]
    mode = report["mode"]
    if mode == "constants" and "constants" in res:
        c = res["constants"]
        lines.append(f"p = {_fmt(c['p'])}   delta = {_fmt(c['delta'])}   C = {_fmt(c['C_total'])}   ({c['status']})")
    elif mode == "compare" and res.get("levels"):
        for lv in res["levels"]:
            lines.append(f"density {_fmt(lv['density'])}, dr {_fmt(lv['dr'])}: max relative difference {_fmt(lv['rel_linf'])}")
        if "refinement_factor" in res:
            lines.append(f"refinement factor {_fmt(res['refinement_factor'])}")
    elif mode == "tail" and "exponent" in res:
        lines.append(f"fitted exponent {_fmt(res['exponent'])} vs k = {_fmt(res['k'])} (observer r = {_fmt(res['observer'])})")
    elif mode in ("solve", "solve-source") and "iteration" in res:
        it = res["iteration"]
        lines.append(
            f"iterations {it['n_iters']}, measured ratio {_fmt(it['measured_ratio'])} vs delta {_fmt(it['delta_theoretical'])}, "
            f"C {_fmt(it['C_empirical'])} vs {_fmt(it['C_theoretical'])}"
        )
    width = max([len(c["name"]) for c in report["checks"]] + [5])
    for c in report["checks"]:
        mark = "pass" if c["pass"] else "FAIL"
        line = f"  [{mark}] {c['name']:<{width}}  {_fmt(c['value'])} {c['relation']} {_fmt(c['limit'])}"
        if c.get("description"):
            line += f"   {c['description']}"
        lines.append(line)
    return "\n".join(lines)


def _parser() -> argparse.ArgumentParser:
    ap = argparse.ArgumentParser(prog="wavedecay", description="Decay-estimate verification experiments.")
    sub = ap.add_subparsers(dest="command", required=True)

    def common(p):
        p.add_argument("--config", help="INI experiment config")
        p.add_argument("--out", help=f"output directory (default ${OUT_ENV} or ./{DEFAULT_OUT}/<mode>)")
        p.add_argument("--threads", type=int, default=1, help="worker threads; results do not depend on it")
        p.add_argument("--tolerance", action="append", default=[], metavar="KEY=VALUE", help="override a tolerance")
        p.add_argument("--quiet", action="store_true", help="do not print the summary")

    for mode in MODES:
        common(sub.add_parser(mode, help=f"run the {mode} experiment"))
    common(sub.add_parser("run", help="run the mode named in the config file"))
    rp = sub.add_parser("render", help="summarise a report.json")
    rp.add_argument("report")
    return ap


def main(argv=None) -> int:
    args = _parser().parse_args(argv)
    if args.command == "render":
        try:
            report = json.loads(Path(args.report).read_text())
            print(render(report))
        except (OSError, json.JSONDecodeError, ValueError) as exc:
            print(f"error: {exc}", file=sys.stderr)
            return EXIT_CONFIG
        return EXIT_PASS if report["pass"] else EXIT_FAIL
    try:
        if args.threads < 1:
            raise ConfigError("--threads: must be >= 1")
        mode = None if args.command == "run" else args.command
        cfg = load_config(args.config, mode=mode, tolerance_overrides=args.tolerance)
        out = args.out or cfg.section("experiment").get("out")
        if not out:
            out = os.path.join(os.environ.get(OUT_ENV, DEFAULT_OUT), cfg.mode)
        report, code = run(cfg, out, threads=args.threads)
    except ConfigError as exc:
        print(f"config error: {exc}", file=sys.stderr)
        return EXIT_CONFIG
    if not args.quiet:
        print(render(report))
    return code


if __name__ == "__main__":
    sys.exit(main())

from __future__ import annotations

import csv

import numpy as np
import pytest

from wavedecay.duhamel import (
    InitialDataSpec,
    RadialPotential,
    SolverError,
    SolverOptions,
    SourceSpec,
    free_solution,
    solve_fixed_point,
    solve_with_source,
    source_solution,
    time_derivative_data,
    write_field_csv,
)
from wavedecay.fd import dalembert_solution
from wavedecay.profiles import gaussian_data, model_data, model_potential, model_source
from wavedecay.weights import SpacetimeSampleSet

SMALL = SolverOptions(t_max=8.0)


def _samples(T=8.0):
    pts = [(t, r) for t in (0.0, 1.0, 3.0, 5.0) for r in (0.1, 1.0, 3.0) if t + r <= T]
    return SpacetimeSampleSet.from_points(pts)


@pytest.mark.parametrize("t", [0.5, 2.0, 5.0])
def test_free_solution_matches_dalembert(t):
    data = gaussian_data(1.0, 0.5)
    r = np.array([0.05, 0.3, 1.0, 2.0, 4.0, 7.5])
    np.testing.assert_allclose(free_solution(data, t, r), dalembert_solution(data, t, r), rtol=1e-9, atol=1e-14)


def test_free_solution_at_start_and_centre():
    data = gaussian_data(1.0, 0.5)
    r = np.array([0.0, 0.5, 3.0])
    np.testing.assert_array_equal(free_solution(data, 0.0, r), data.f(r))
    centre = free_solution(data, 2.0, 0.0)
    assert centre == pytest.approx(dalembert_solution(data, 2.0, 0.0), rel=1e-12)
    assert free_solution(data, 2.0, 1e-6) == pytest.approx(centre, rel=1e-5)


def test_free_solution_shape_and_domain():
    data = model_data()
    assert free_solution(data, np.ones((2, 3)), 1.0).shape == (2, 3)
    assert isinstance(free_solution(data, 1.0, 1.0), float)
    with pytest.raises(ValueError):
        free_solution(data, -1.0, 1.0)


def test_zero_data_gives_zero_field():
    out, rep = solve_fixed_point(InitialDataSpec.zero(), model_potential(), _samples(), SMALL)
    np.testing.assert_array_equal(out.values, 0.0)
    assert rep.converged and rep.C_empirical == 0.0


def test_zero_potential_returns_free_wave():
    data = model_data()
    s = _samples()
    out, rep = solve_fixed_point(data, RadialPotential.zero(), s, SMALL)
    np.testing.assert_allclose(out.values, free_solution(data, s.t, s.r), rtol=1e-14)
    assert rep.delta_theoretical == 0.0 and rep.n_iters == 1


def test_solution_is_linear_in_data():
    data, pot, s = model_data(), model_potential(), _samples()
    a, _ = solve_fixed_point(data, pot, s, SMALL)
    b, _ = solve_fixed_point(data.scaled(-2.5), pot, s, SMALL)
    np.testing.assert_allclose(b.values, -2.5 * a.values, rtol=1e-10, atol=1e-14)


def test_model_solve_contracts_and_meets_bound():
    out, rep = solve_fixed_point(model_data(), model_potential(), _samples(), SMALL)
    assert rep.converged and rep.contraction_holds and rep.bound_holds
    assert rep.measured_ratio <= rep.delta_theoretical
    assert rep.C_theoretical == pytest.approx(15 / 0.514, rel=1e-12)
    assert np.all(np.isfinite(out.values))
    # the potential is repulsive, so the field sits below the free wave near the origin
    assert out.values[out.t > 0][0] < free_solution(model_data(), out.t[out.t > 0][0], out.r[out.t > 0][0])


def test_solve_refinement_is_small():
    data, pot, s = model_data(), model_potential(), _samples()
    a, _ = solve_fixed_point(data, pot, s, SMALL)
    b, _ = solve_fixed_point(data, pot, s, SMALL.refined())
    assert np.max(np.abs(a.values - b.values)) < 1e-3 * np.max(np.abs(b.values))


def test_outside_regime_is_flagged():
    pot = model_potential(V0=0.01)
    out, rep = solve_fixed_point(model_data(), pot, _samples(), SMALL)
    assert rep.status == "outside contraction regime"
    assert not rep.bound_holds
    assert rep.as_dict()["C_theoretical"] is None


def test_non_convergence_raises_inside_regime():
    with pytest.raises(SolverError):
        solve_fixed_point(model_data(), model_potential(), _samples(), SolverOptions(t_max=8.0, n_max=1))


def test_samples_outside_horizon_rejected():
    s = SpacetimeSampleSet.from_points([(5.0, 5.0)])
    with pytest.raises(ValueError):
        solve_fixed_point(model_data(), model_potential(), s, SMALL)


def test_source_solution_matches_solver_without_potential():
    src, s = model_source(), _samples()
    out, rep = solve_with_source(InitialDataSpec.zero(), RadialPotential.zero(), src, s, SMALL)
    ref = source_solution(src, s.t, s.r)
    np.testing.assert_allclose(out.values, ref, rtol=1e-4, atol=1e-10)
    assert rep.bound_holds
    assert source_solution(src, 0.0, 1.0) == 0.0


def test_time_derivative_data_solves_for_u_t():
    data = gaussian_data(1.0, 0.5)
    dd = time_derivative_data(data, RadialPotential.zero())
    t, r, h = 2.0, np.array([0.5, 1.5, 3.0]), 1e-4
    fd = (free_solution(data, t + h, r) - free_solution(data, t - h, r)) / (2 * h)
    np.testing.assert_allclose(free_solution(dd, t, r), fd, rtol=1e-6)


def test_time_derivative_needs_smooth_centre():
    with pytest.raises(ValueError):
        time_derivative_data(model_data(), model_potential())
    bare = gaussian_data(1.0, 0.5)
    with pytest.raises(ValueError):
        time_derivative_data(InitialDataSpec(bare.f, bare.f_prime, bare.g, 4.0, bare.f0, bare.f1, bare.g0), RadialPotential.zero())


def test_initial_data_validation():
    d = model_data()
    with pytest.raises(ValueError):
        InitialDataSpec(d.f, d.f_prime, d.g, 3.0, 1.0, 1.0, 1.0)
    with pytest.raises(ValueError, match="decay bound"):
        InitialDataSpec(d.f, d.f_prime, d.g, 4.0, 0.2, 1.0, 1.0)
    with pytest.raises(ValueError, match="numerical derivative"):
        InitialDataSpec(d.f, lambda r: 0.5 * d.f_prime(r), d.g, 4.0, 1.0, 1.0, 1.0)
    with pytest.raises(ValueError):
        InitialDataSpec(d.f, d.f_prime, d.g, 4.0, -1.0, 1.0, 1.0)


def test_potential_and_source_validation():
    with pytest.raises(ValueError):
        RadialPotential(lambda r: 0 * r, 0.0, 2.0)
    with pytest.raises(ValueError, match="decay bound"):
        RadialPotential(lambda r: 0.01 * (1 + r) ** -3, 0.003, 3.0)
    with pytest.raises(ValueError):
        SourceSpec(lambda t, r: 0 * r, 0.0, 3.0, 4.0)
    with pytest.raises(ValueError, match="decay bound"):
        SourceSpec(lambda t, r: np.ones(np.broadcast(t, r).shape), 1.0, 3.0, 3.0)
    assert RadialPotential.zero().is_zero and SourceSpec.zero().is_zero


def test_solver_options_validation():
    with pytest.raises(ValueError):
        SolverOptions(grid_step=0.0)
    with pytest.raises(ValueError):
        SolverOptions(n_max=0)
    assert SolverOptions().refined(4).h == 0.125


def test_field_csv(tmp_path):
    out, _ = solve_fixed_point(model_data(), model_potential(), _samples(), SMALL)
    path = tmp_path / "field.csv"
    write_field_csv(out, 3.0, path)
    with open(path) as fh:
        rows = list(csv.reader(fh))
    assert rows[0] == ["t", "r", "u", "weight", "weighted_abs"]
    assert len(rows) == len(out) + 1
    assert float(rows[1][3]) * abs(float(rows[1][2])) == pytest.approx(float(rows[1][4]), rel=1e-15)

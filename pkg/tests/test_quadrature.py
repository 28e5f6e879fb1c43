from __future__ import annotations

import math
from concurrent.futures import ThreadPoolExecutor

import numpy as np
import pytest
from hypothesis import given, settings
from hypothesis import strategies as st

from wavedecay.parallel import CHUNK, chunked_map
from wavedecay.quadrature import QuadratureError, composite_nodes, gauss_legendre, integrate_batch


@pytest.mark.parametrize("order", [1, 4, 10])
def test_gauss_legendre_exact_for_polynomials(order):
    x, w = gauss_legendre(order)
    for deg in range(2 * order):
        exact = 0.0 if deg % 2 else 2.0 / (deg + 1)
        assert np.dot(w, x**deg) == pytest.approx(exact, abs=1e-14)


def test_gauss_legendre_is_read_only():
    x, _ = gauss_legendre(5)
    with pytest.raises(ValueError):
        x[0] = 0.0


def test_batch_of_known_integrals():
    a = np.array([0.0, 0.0, 1.0])
    b = np.array([1.0, math.pi, 2.0])
    funcs = [np.exp, np.sin, lambda x: 1 / x]

    def f(x, idx):
        out = np.empty_like(x)
        for k, fn in enumerate(funcs):
            sel = idx == k
            out[sel] = fn(x[sel])
        return out

    res = integrate_batch(f, a, b, rtol=1e-13)
    np.testing.assert_allclose(res.value, [math.e - 1, 2.0, math.log(2)], rtol=1e-13)
    assert np.all(res.converged)
    assert np.all(res.error <= 1e-12)


def test_break_points_resolve_kink():
    # |x - c| with the kink passed as a break is integrated on the first pass
    c = np.array([0.3, 0.7])
    res = integrate_batch(lambda x, i: np.abs(x - c[i]), np.zeros(2), np.ones(2), breaks=c[:, None], rtol=1e-14)
    np.testing.assert_allclose(res.value, (c**2 + (1 - c) ** 2) / 2, rtol=1e-14)
    np.testing.assert_array_equal(res.n_panels, [2, 2])


def test_nan_break_slots_are_ignored():
    res = integrate_batch(lambda x, i: x, [0.0], [1.0], breaks=[[np.nan, 0.5]])
    assert res.value[0] == pytest.approx(0.5, rel=1e-15)


def test_integrable_singularity_converges():
    # the panel touching 0 stops at the depth cap; its leftover is ~5e-8
    res = integrate_batch(lambda x, i: 1 / np.sqrt(x), [0.0], [1.0], rtol=1e-6)
    assert res.converged[0]
    assert res.value[0] == pytest.approx(2.0, rel=1e-6)


def test_failure_is_reported_with_diagnostics():
    res = integrate_batch(lambda x, i: 1 / x, [0.0], [1.0], rtol=1e-10, max_depth=8)
    assert not res.converged[0]
    with pytest.raises(QuadratureError) as info:
        res.raise_if_failed("test")
    assert info.value.index == 0
    assert info.value.achieved > 0


def test_non_finite_integrand_raises():
    with pytest.raises(QuadratureError):
        integrate_batch(lambda x, i: np.full_like(x, np.nan), [0.0], [1.0])


def test_reversed_limits_rejected():
    with pytest.raises(ValueError):
        integrate_batch(lambda x, i: x, [1.0], [0.0])


def test_zero_width_interval():
    res = integrate_batch(lambda x, i: x, [1.0, 0.0], [1.0, 1.0])
    assert res.value[0] == 0.0 and res.value[1] == pytest.approx(0.5)


def test_nested_error_is_propagated():
    res = integrate_batch(lambda x, i: (x, np.full_like(x, 1e-3)), [0.0], [2.0], rtol=1e-3)
    assert res.error[0] >= 2e-3 * 0.999


@settings(max_examples=30, deadline=None)
@given(st.lists(st.floats(0.1, 5.0), min_size=1, max_size=6), st.integers(0, 5))
def test_result_independent_of_batch_companions(ks, pick):
    ks = np.array(ks)
    pick = pick % ks.size

    def f(x, i):
        return np.cos(ks[i] * x) * np.exp(-x)

    full = integrate_batch(f, np.zeros(ks.size), np.full(ks.size, 10.0))
    alone = integrate_batch(lambda x, i: np.cos(ks[pick] * x) * np.exp(-x), [0.0], [10.0])
    assert full.value[pick] == alone.value[0]


def test_composite_nodes():
    nodes, weights, seg = composite_nodes(np.array([0.0, 1.0]), np.array([2.5, 1.5]), 1.0, 4)
    for k, (lo, hi) in enumerate([(0.0, 2.5), (1.0, 1.5)]):
        sel = seg == k
        assert np.sum(weights[sel] * nodes[sel] ** 3) == pytest.approx((hi**4 - lo**4) / 4, rel=1e-14)
        assert np.all((nodes[sel] > lo) & (nodes[sel] < hi))
    assert np.sum(seg == 0) == 3 * 4  # ceil(2.5 / 1) panels


def test_chunked_map_order_and_threads():
    def fn(a, b):
        return list(range(a, b))

    n = 3 * CHUNK + 5
    one = chunked_map(fn, n, threads=1)
    four = chunked_map(fn, n, threads=4)
    assert one == four
    assert sum(one, []) == list(range(n))
    assert chunked_map(fn, 0) == []


def test_chunked_map_runs_concurrently_safely():
    with ThreadPoolExecutor(2) as ex:
        outs = list(ex.map(lambda _: chunked_map(lambda a, b: b - a, 200, threads=3), range(4)))
    assert all(o == outs[0] for o in outs)

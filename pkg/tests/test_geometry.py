from __future__ import annotations

import math

import numpy as np
import pytest
from hypothesis import given, settings
from hypothesis import strategies as st
from scipy import integrate

from wavedecay.geometry import (
    ConeKernelParams,
    cone_integral,
    cone_kernel,
    cone_rule,
    power_kernel,
    sphere_average_radial,
    sphere_integral_closed_form,
)
from wavedecay.quadrature import QuadratureError


def _cone_scipy(x, t, G):
    """Independent nested scipy.quad evaluation of the radial cone integral."""

    def inner(s):
        T = t - s
        lo, hi = abs(T - x), T + x
        pts = [s] if lo < s < hi else None
        return integrate.quad(lambda lam: lam * G(s, lam), lo, hi, points=pts, epsabs=0, epsrel=1e-12, limit=200)[0]

    pts = [t - x] if 0 < t - x < t else None
    return integrate.quad(inner, 0, t, points=pts, epsabs=0, epsrel=1e-11, limit=200)[0] / (2 * x)


def test_sphere_average_of_constant_is_area():
    # (1/4pi) |S(x,t)| = t^2 for a unit integrand
    for x, t in [(0.0, 2.0), (0.5, 2.0), (3.0, 1.0)]:
        assert sphere_average_radial(x, t, lambda r: np.ones_like(r)) == pytest.approx(t * t, rel=1e-13)


def test_sphere_average_centre_value():
    h = power_kernel(3.0)
    assert sphere_average_radial(0.0, 2.0, h) == pytest.approx(4.0 / 27.0, rel=1e-15)
    # continuity into the centre branch
    near = sphere_average_radial(1e-9, 2.0, h)
    assert near == pytest.approx(4.0 / 27.0, rel=1e-8)


def test_sphere_average_rejects_nonpositive_radius():
    with pytest.raises(ValueError):
        sphere_average_radial(1.0, 0.0, power_kernel(3.0))
    with pytest.raises(ValueError):
        sphere_average_radial(-1.0, 1.0, power_kernel(3.0))


def test_closed_form_frozen_value():
    # p = 3, x = t = 1: (1/2) int_0^2 l (1+l)^-3 dl = (1/2)(2/9)
    assert sphere_integral_closed_form(1.0, 1.0, 3.0) == pytest.approx(1.0 / 9.0, rel=1e-15)


@settings(max_examples=150, deadline=None)
@given(
    st.floats(-4, 4),
    st.floats(-4, 4),
    st.floats(2.05, 8.0),
)
def test_closed_form_matches_quadrature(logt, logx, p):
    t, x = 10.0**logt, 10.0**logx
    exact = sphere_integral_closed_form(x, t, p)
    quad = sphere_average_radial(x, t, power_kernel(p), rtol=1e-12)
    assert quad == pytest.approx(exact, rel=1e-10)


def test_closed_form_thin_shell_accuracy():
    # t >> x: the shell is thin; compare with a mid-point series for the average
    t, x, p = 1e4, 1e-6, 4.0
    exact = t**2 * (1 + t) ** (-p)
    assert sphere_integral_closed_form(x, t, p) == pytest.approx(exact, rel=1e-9)


def test_closed_form_domain():
    with pytest.raises(ValueError):
        sphere_integral_closed_form(1.0, 1.0, 2.0)
    with pytest.raises(ValueError):
        sphere_integral_closed_form(0.0, 1.0, 3.0)


def test_closed_form_vectorised_shape():
    out = sphere_integral_closed_form(np.ones((2, 3)), 2.0, 3.5)
    assert out.shape == (2, 3)


def test_cone_integral_of_unit_kernel():
    # int_0^t (t - s) ds = t^2 / 2 for G = 1
    one = lambda s, lam: np.ones_like(lam)  # noqa: E731
    for x, t in [(0.0, 3.0), (0.5, 3.0), (4.0, 2.0)]:
        est = cone_integral(x, t, one, rtol=1e-12)
        assert est.value == pytest.approx(t * t / 2, rel=1e-11)
        assert cone_rule(x, t, one, panel_width=0.5) == pytest.approx(t * t / 2, rel=1e-12)


@pytest.mark.parametrize("x, t", [(0.3, 2.0), (2.0, 2.0), (5.0, 1.0), (1.0, 7.0), (0.01, 0.02)])
@pytest.mark.parametrize("pq", [(2.5, 2.5), (3.0, 4.0)])
def test_cone_integral_matches_scipy(x, t, pq):
    G = cone_kernel(ConeKernelParams(*pq))
    ref = _cone_scipy(x, t, G)
    est = cone_integral(x, t, ConeKernelParams(*pq), rtol=1e-9)
    assert est.value == pytest.approx(ref, rel=1e-8)
    assert est.error <= 1e-8 * est.value


def test_cone_integral_continuous_at_centre():
    prm = ConeKernelParams(3.0, 3.0)
    centre = cone_integral(0.0, 2.0, prm, rtol=1e-10).value
    near = cone_integral(1e-7, 2.0, prm, rtol=1e-10).value
    assert near == pytest.approx(centre, rel=1e-6)


def test_cone_rule_converges_to_adaptive():
    prm = ConeKernelParams(2.5, 4.0)
    G = cone_kernel(prm)
    x = np.array([0.0, 0.5, 3.0, 6.0])
    t = np.array([4.0, 4.0, 2.0, 8.0])
    ref = cone_integral(x, t, prm, rtol=1e-10).value
    errs = [np.max(np.abs(cone_rule(x, t, G, panel_width=w) - ref) / ref) for w in (1.0, 0.5, 0.25)]
    assert errs[-1] < 1e-6
    assert errs[2] < errs[0]


def test_cone_rule_zero_time_and_nodes():
    G = cone_kernel(ConeKernelParams(3.0, 3.0))
    vals, (s, lam, w, owner) = cone_rule(np.array([1.0, 1.0]), np.array([0.0, 2.0]), G, return_nodes=True)
    assert vals[0] == 0.0
    assert np.all(owner == 1)
    assert np.all((s >= 0) & (s <= 2.0) & (lam >= 0))
    assert vals[1] == pytest.approx(np.sum(w * G(s, lam)), rel=1e-15)


def test_cone_kernel_parameter_checks():
    with pytest.raises(ValueError):
        ConeKernelParams(1.0, 3.0)
    with pytest.raises(ValueError):
        ConeKernelParams(2.5, 2.0)
    with pytest.raises(ValueError):
        ConeKernelParams(4.0, 3.0)


def test_cone_integral_reports_failure():
    bad = lambda s, lam: 1.0 / np.abs(lam - 1.0)  # noqa: E731  non-integrable ridge
    with pytest.raises(QuadratureError):
        cone_integral(0.5, 2.0, bad, rtol=1e-10)


def test_cone_integral_is_batch_independent():
    prm = ConeKernelParams(3.0, 4.0)
    x = np.array([0.2, 1.0, 3.0])
    t = np.array([1.0, 5.0, 2.0])
    batch = cone_integral(x, t, prm).value
    for i in range(3):
        assert cone_integral(x[i], t[i], prm).value == batch[i]


def test_sphere_average_huge_exponent_is_finite():
    v = sphere_average_radial(10.0, 10.0, power_kernel(40.0))
    assert math.isfinite(v) and v > 0

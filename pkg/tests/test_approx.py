import math

import numpy as np
import pytest
from scipy import integrate

from shotnoise_sbd import approx
from shotnoise_sbd.response import ResponseFunction


def test_beta1_examples():
    assert approx.beta1(1.0, math.pi) == pytest.approx(1 / math.sqrt(math.pi), rel=1e-15)
    assert approx.beta1(4.0, 1.0) == 2.0
    with pytest.raises(ValueError):
        approx.beta1(0.0, 1.0)


@pytest.mark.parametrize("K", np.linspace(0.2, 5.0, 10))
@pytest.mark.parametrize("R", np.linspace(0.3, 2.5, 10))
def test_mu2_matches_closed_form_for_indicator(K, R):
    rf = ResponseFunction.indicator(K, R, 2)
    sol = approx.mu2_solve(rf, 1.0)
    ref = approx.mu2_indicator_closed_form(K, 1.0, math.pi * R * R * K)
    assert sol.mu == pytest.approx(ref, rel=1e-8)


def test_desk_scale_values():
    rf = ResponseFunction.indicator(1.0, 1.0, 2)
    assert approx.beta1(1.0, math.pi) == pytest.approx(0.5641895835, rel=1e-9)
    res = approx.approximate(rf, 1.0, 2)
    assert res.mu_hat == pytest.approx(1.3416277, rel=1e-7)
    assert res.beta_hat == pytest.approx(0.745363, rel=1e-6)


def test_mu2_small_lambda_and_certificate():
    rf = ResponseFunction.truncated_power(1.0, 1.0, 2.0, 2)
    sol = approx.mu2_solve(rf, 1e-8)
    assert sol.mu < 1e-6
    sol = approx.mu2_solve(rf, 1.0)
    assert sol.certified
    assert sol.bracket[1] - sol.bracket[0] < 1e-11
    assert abs(sol.residual) < 1e-10


def test_g2_shape_and_self_consistency():
    rf = ResponseFunction.indicator(1.0, 1.0, 2)
    res = approx.second_order(rf, 1.0)
    beta2 = res.beta_hat
    outside = res.r > 1.0
    np.testing.assert_allclose(res.g[outside], beta2, rtol=1e-14)
    # r = 0 is the coincident pair, where f(0) = 0 by the self-exclusion convention
    g = res.g[res.r > 0]
    assert len(np.unique(np.round(g, 12))) == 2
    assert np.all(np.diff(g) >= 0)
    for rf in (ResponseFunction.truncated_power(1.5, 1.2, 2.0, 2), ResponseFunction.exponential(1.0, 2.0, 2)):
        res = approx.second_order(rf, 1.0)
        val = rf.radial_integral(lambda r, fr: fr * 1.0 / (fr + res.mu_hat), epsrel=1e-11)
        assert val * res.beta_hat == pytest.approx(1.0, abs=1e-6)


def test_exponential_self_consistency_by_direct_quadrature():
    rf = ResponseFunction.exponential(2.0, 1.5, 2)
    res = approx.second_order(rf, 1.0)
    f = lambda r: 2.0 * math.exp(-1.5 * r)
    val, _ = integrate.quad(lambda r: 2 * math.pi * r * f(r) / (f(r) + res.mu_hat), 0, 60, limit=200)
    assert val * res.beta_hat == pytest.approx(1.0, abs=1e-6)


def test_second_order_exceeds_first_for_indicators():
    for K in (0.5, 1.0, 3.0):
        for R in (0.5, 1.0, 2.0):
            rf = ResponseFunction.indicator(K, R, 2)
            b1 = approx.approximate(rf, 1.0, 1).beta_hat
            assert approx.approximate(rf, 1.0, 2).beta_hat >= b1


def test_volterra_tail_and_diagnostics():
    rf = ResponseFunction.indicator(1.0, 1.0, 2)
    res = approx.volterra3_solve(rf, 1.0, n_rad=80, n_ang=48)
    beta2 = 1.0 / res.mu_hat
    assert abs(res.g[-1] / beta2 - 1.0) < 0.10
    for key in ("converged", "iterations", "final_update", "contraction_norm", "tail_over_beta2"):
        assert key in res.diagnostics
    assert res.diagnostics["converged"]
    assert res.g[1] < res.g[-1]


def test_volterra_rejects_short_grid():
    rf = ResponseFunction.indicator(1.0, 1.0, 2)
    with pytest.raises(approx.GridTooSmallError):
        approx.volterra3_solve(rf, 1.0, np.linspace(0, 2.0, 20))
    with pytest.raises(ValueError):
        approx.approximate(rf, 1.0, 4)


def test_result_serializes():
    rf = ResponseFunction.indicator(1.0, 1.0, 2)
    d = approx.approximate(rf, 1.0, 2).to_dict()
    assert d["order"] == 2 and len(d["r"]) == len(d["g_hat"])
    assert d["diagnostics"]["certified"]

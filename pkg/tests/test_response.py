import math

import numpy as np
import pytest
from hypothesis import given
from hypothesis import strategies as st
from scipy import integrate

from shotnoise_sbd.response import ResponseFunction, integral_a, shell_volume, unit_ball_volume, validate


def test_indicator_values(rf):
    assert rf.eval(0.0) == 0.0
    assert rf.eval(0.5) == 1.0
    assert rf.eval(1.5) == 0.0
    assert rf.eval(1.0) == 1.0  # closed ball
    np.testing.assert_array_equal(rf.eval(np.array([0.0, 0.3, 2.0])), [0.0, 1.0, 0.0])


def test_integral_indicator_examples():
    assert integral_a(ResponseFunction.indicator(1.0, 1.0, 2)) == pytest.approx(math.pi, abs=1e-12)
    assert integral_a(ResponseFunction.indicator(1.0, 1.0, 1)) == pytest.approx(2.0, abs=1e-12)
    assert integral_a(ResponseFunction.indicator(2.5, 0.7, 3)) == pytest.approx(2.5 * 4 / 3 * math.pi * 0.7**3,
                                                                                 rel=1e-12)


@pytest.mark.parametrize("d", [1, 2, 3])
def test_indicator_integral_matches_quadrature(d):
    rf = ResponseFunction.indicator(1.3, 0.8, d)
    quad, _ = integrate.quad(lambda r: d * unit_ball_volume(d) * 1.3 * r ** (d - 1), 0, 0.8)
    assert integral_a(rf) == pytest.approx(quad, rel=1e-10)


def test_closed_forms_match_quadrature():
    ex = ResponseFunction.exponential(2.0, 1.5, 2)
    assert ex.integral_a == pytest.approx(ex.radial_integral(lambda r, f: f), rel=1e-8)
    tp = ResponseFunction.truncated_power(1.0, 2.0, 2.0, 2)
    # 2 pi int_0^2 (1 - r/2)^2 r dr = pi * 2^2 / 6 * 2
    assert tp.integral_a == pytest.approx(2 * math.pi * 4 / 12, rel=1e-9)


@given(kind=st.sampled_from(["indicator", "truncated-power", "exponential", "tabulated"]),
       scale=st.floats(0.1, 10.0), p1=st.floats(0.3, 3.0), d=st.sampled_from([1, 2, 3]))
def test_integral_is_linear_in_scale(kind, scale, p1, d):
    if kind == "indicator":
        rf = ResponseFunction.indicator(1.0, p1, d)
    elif kind == "truncated-power":
        rf = ResponseFunction.truncated_power(1.0, p1, 1.5, d)
    elif kind == "exponential":
        rf = ResponseFunction.exponential(1.0, p1, d)
    else:
        rf = ResponseFunction.tabulated([0.0, p1 / 2, p1], [1.0, 0.5, 0.0], d)
    assert integral_a(rf.scaled(scale)) == pytest.approx(scale * integral_a(rf), rel=1e-8)


def test_validate_examples(rf):
    assert validate(rf) == []
    assert "Assumption0" in validate(ResponseFunction.tabulated([0.0, 1.0], [0.3, 0.3]))
    assert "Assumption2" in validate(ResponseFunction.tabulated([0.0, 0.5, 1.0], [0.0, 0.5, 1.0]))
    assert validate(ResponseFunction.exponential(1.0, 2.0)) == []


def test_tabulated_interpolation_and_clamp(tmp_path):
    p = tmp_path / "f.csv"
    p.write_text("r,f\n0,1\n1,0.5\n2,0\n")
    rf = ResponseFunction.from_csv(p)
    assert rf.eval(0.5) == pytest.approx(0.75)
    assert rf.eval(3.0) == 0.0
    assert rf.support_radius == 2.0


def test_eval_is_pure(rf):
    r = np.linspace(0, 2, 101)
    np.testing.assert_array_equal(rf.eval(r), rf.eval(r.copy()))


def test_shell_volume_sums_to_ball():
    e = np.linspace(0, 2, 11)
    for d in (1, 2, 3):
        assert shell_volume(e[:-1], e[1:], d).sum() == pytest.approx(unit_ball_volume(d) * 2**d)


def test_rejects_bad_parameters():
    with pytest.raises(ValueError):
        ResponseFunction.indicator(1.0, 1.0, 4)
    with pytest.raises(ValueError):
        ResponseFunction.exponential(1.0, -1.0)
    with pytest.raises(ValueError):
        ResponseFunction.tabulated([1.0, 0.5], [1.0, 0.0])

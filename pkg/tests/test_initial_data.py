import numpy as np
import pytest
from hypothesis import given, settings
from hypothesis import strategies as st

from kzstring.errors import ConfigError, DegenerateCurveError, SpaceLikeError
from kzstring.initial_data import (characteristic_data, lambda_init, make_curve, rotated,
                                   validate_timelike)
from kzstring.metric import eigen_speeds, induced_metric


def test_circle_preset():
    c = make_curve("circle")
    th = np.linspace(0, 2 * np.pi, 9)
    p, q, dp = c.sample(th)
    assert np.allclose(p, np.c_[np.cos(th), np.sin(th)], atol=1e-15)
    assert np.all(q == 0)
    assert np.allclose(dp, np.c_[-np.sin(th), np.cos(th)], atol=1e-15)


def test_ellipse_speed():
    c = make_curve("ellipse", a=2.0, b=1.0)
    th = np.random.default_rng(1).uniform(0, 2 * np.pi, 50)
    dp = c.position_deriv(th)
    assert np.allclose(np.sum(dp**2, -1), 4 * np.sin(th)**2 + np.cos(th)**2, rtol=1e-14)


def test_fourier_derivative_matches_difference_quotient():
    c = make_curve("fourier", cos=[[0.0, 1.0, 0.2], [0.0, 0.0, 0.1]], sin=[[0.0, 0.0, 0.0], [0.0, 1.3, 0.0]])
    th = np.linspace(0.1, 6.0, 40)
    h = 1e-6
    fd = (c.position(th + h) - c.position(th - h)) / (2 * h)
    assert np.allclose(c.position_deriv(th), fd, atol=1e-8)


@pytest.mark.parametrize("kwargs, key", [
    (dict(preset="hexagon"), "curve.preset"),
    (dict(preset="circle", period=-1.0), "period"),
    (dict(preset="circle", period=0.0), "period"),
    (dict(preset="fourier", cos=[[], []], sin=[[], []]), "curve.cos"),
    (dict(preset="circle", colour=3), "curve"),
])
def test_make_curve_rejects(kwargs, key):
    with pytest.raises(ConfigError) as exc:
        make_curve(**kwargs)
    assert exc.value.key == key


def test_closed_curves_are_periodic():
    c = make_curve("fourier", cos=[[0.5, 1.0], [0.0, 0.3]], sin=[[0.0, 0.2], [0.0, 1.0]],
                   velocity_cos=[[0.0, 0.1], [0.0, 0.0]], velocity_sin=[[0.0, 0.0], [0.0, 0.2]], period=3.0)
    a, b = c.sample([0.0]), c.sample([3.0])
    for u, v in zip(a, b):
        assert np.allclose(u, v, atol=1e-14)


def test_circle_lambda():
    f = lambda_init(make_curve("circle"), make_curve("circle").grid(64))
    assert np.allclose(f.lambda_plus, 1.0) and np.allclose(f.lambda_minus, -1.0)
    assert f.gap_min == pytest.approx(2.0)


def test_line_lambda():
    v = 0.6
    c = make_curve("line", velocity=[0.0, v])
    f = lambda_init(c, c.grid(33))
    assert np.allclose(f.lambda_plus, np.sqrt(1 - v * v), rtol=1e-15)
    assert np.allclose(f.lambda_minus, -np.sqrt(1 - v * v), rtol=1e-15)


def test_ellipse_lambda_against_scalar_formula():
    c = make_curve("ellipse", a=2.0, b=1.0)
    th = np.random.default_rng(3).uniform(0, 2 * np.pi, 64)
    f = lambda_init(c, th)
    expected = 1.0 / np.sqrt(4 * np.sin(th)**2 + np.cos(th)**2)
    assert np.allclose(f.lambda_plus, expected, rtol=1e-14)
    assert np.allclose(f.lambda_minus, -expected, rtol=1e-14)


def test_validate_reports():
    rep = validate_timelike(make_curve("circle"))
    assert rep.passed and rep.min_disc == pytest.approx(1.0)
    rep = validate_timelike(make_curve("ellipse", a=2.0, b=1.0))
    assert rep.passed and rep.min_speed == pytest.approx(1.0)


def test_unit_speed_tangent_velocity_is_rejected():
    # |q| = 1 with q tangent to p' gives a vanishing discriminant where q is orthogonal to p'
    c = make_curve("circle", velocity=[1.0, 0.0])
    assert not validate_timelike(c).passed
    with pytest.raises(SpaceLikeError) as exc:
        lambda_init(c)
    assert exc.value.theta is not None


def test_constant_curve_is_degenerate():
    c = make_curve("fourier", cos=[[1.0, 0.0], [0.0, 0.0]], sin=[[0.0, 0.0], [0.0, 0.0]])
    assert not validate_timelike(c).passed
    with pytest.raises(DegenerateCurveError):
        lambda_init(c)


def test_default_grid_is_power_of_two_without_closing_node():
    g = make_curve("circle").grid()
    assert g.size == 1024 and g[-1] < 2 * np.pi


velocities = st.tuples(st.floats(-0.6, 0.6), st.floats(-0.6, 0.6))


@settings(max_examples=40, deadline=None)
@given(v=velocities, a=st.floats(0.3, 3.0), b=st.floats(0.3, 3.0), angle=st.floats(0, 2 * np.pi))
def test_lambda_matches_eigen_speeds_and_is_rotation_invariant(v, a, b, angle):
    c = make_curve("ellipse", a=a, b=b, velocity=list(v))
    th = c.grid(128)
    f = lambda_init(c, th)
    lp, lm = eigen_speeds(induced_metric(c.velocity(th), c.position_deriv(th)))
    assert np.allclose(lp, f.lambda_plus, rtol=1e-12, atol=1e-15)
    assert np.allclose(lm, f.lambda_minus, rtol=1e-12, atol=1e-15)
    R = np.array([[np.cos(angle), -np.sin(angle)], [np.sin(angle), np.cos(angle)]])
    g = lambda_init(rotated(c, R), th)
    assert np.allclose(g.lambda_plus, f.lambda_plus, rtol=1e-12)
    assert np.allclose(g.lambda_minus, f.lambda_minus, rtol=1e-12)
    ends = characteristic_data(c, [0.0, c.period])
    assert abs(ends[0][0] - ends[0][1]) <= 1e-12 and abs(ends[1][0] - ends[1][1]) <= 1e-12

import numpy as np
import pytest

from kzstring.evolution import (Trajectory, dalembert_eval, dalembert_state, energy, exact_trajectory,
                                gauge_check, harmonic_check, lambda_solution, periodicity_check, pullback,
                                pulled_back_tangents)
from kzstring.kz_map import build_kz_map
from kzstring.initial_data import make_curve
from kzstring.metric import eigen_speeds, induced_metric


@pytest.mark.parametrize("t", [0.0, 0.4, 1.1, 2.9])
def test_circle_closed_form(circle_map, t):
    st = dalembert_state(circle_map, t, nodes=256)
    s = st.sigma_grid
    assert np.allclose(st.x_tilde, np.c_[np.cos(s), np.sin(s)] * np.cos(t), atol=1e-13)
    assert np.allclose(st.x_tilde_t, -np.c_[np.cos(s), np.sin(s)] * np.sin(t), atol=1e-13)


def test_circle_antiperiod(circle_map):
    s = circle_map.sigma_grid_for(128)
    for t in (0.0, 0.9):
        assert np.allclose(dalembert_eval(circle_map, t + np.pi, s)[0], -dalembert_eval(circle_map, t, s)[0],
                           atol=1e-13)


def test_translating_line(line_map):
    v = 0.6
    for t in (0.0, 0.5, 1.0):
        st = dalembert_state(line_map, t, nodes=64)
        expected = np.c_[st.sigma_grid * np.sqrt(1 - v * v), np.full(64, v * t)]
        assert np.allclose(st.x_tilde, expected, atol=1e-13)
        rep = gauge_check(st)
        assert rep["gauge.orthogonality.max"] <= 1e-15 and rep["gauge.normalization.max"] <= 1e-15


def test_gauge_and_energy(wavy_map):
    for t in (0.0, 0.3, 1.7):
        st = dalembert_state(wavy_map, t, nodes=512)
        rep = gauge_check(st, tol=1e-8)
        assert rep.passed
        # conserved energy of the gauge-fixed string equals its sigma period
        assert energy(st) == pytest.approx(wavy_map.Sigma, rel=1e-12)


def test_corrupted_map_violates_gauge(ellipse):
    bad = build_kz_map(ellipse, 256, corrupt_lambda_minus=True)
    rep = gauge_check(dalembert_state(bad, 0.5), tol=1e-8)
    assert not rep.passed


def test_pullback_agrees_with_spline_composition(wavy_map):
    theta = np.linspace(0, 2 * np.pi, 37)
    t = 0.6
    direct = pullback(wavy_map, t, theta)
    spline = pullback(wavy_map, t, theta, state=dalembert_state(wavy_map, t, nodes=1024))
    assert np.allclose(direct, spline, atol=1e-9)
    assert np.allclose(direct, pulled_back_tangents(wavy_map, t, theta)[0], atol=0)


def test_lambda_solution_matches_eigen_speeds_of_evolved_state(ellipse_map):
    theta = np.array([1.1])
    lp, lm = lambda_solution(ellipse_map, 0.2, theta)
    _, x_t, x_th = pulled_back_tangents(ellipse_map, 0.2, theta)
    ep, em = eigen_speeds(induced_metric(x_t, x_th))
    assert abs(lp[0] - ep[0]) <= 1e-6 and abs(lm[0] - em[0]) <= 1e-6


def test_lambda_solution_is_constant_for_circle(circle_map):
    theta = np.linspace(0, 6, 13)
    lp, lm = lambda_solution(circle_map, 0.8, theta)
    assert np.allclose(lp, 1.0, atol=1e-14) and np.allclose(lm, -1.0, atol=1e-14)


def test_periodicity_with_fourier_velocity(wavy_map):
    rep = periodicity_check(wavy_map)
    assert rep["periodicity.drift_mismatch"] <= 1e-10
    assert np.allclose(rep.metadata["measured_drift"], rep.metadata["drift"], atol=1e-10)


def test_periodicity_at_rest_has_no_drift(ellipse_map):
    rep = periodicity_check(ellipse_map, tol=1e-10)
    assert rep.passed and np.allclose(rep.metadata["drift"], 0.0, atol=1e-14)


def test_periodicity_rejects_line(line_map):
    with pytest.raises(ValueError):
        periodicity_check(line_map)


def test_harmonic_check_preconditions(circle_map):
    traj = exact_trajectory(circle_map, [0.1, 0.2], nodes=32)
    with pytest.raises(ValueError):
        harmonic_check(traj)
    traj = exact_trajectory(circle_map, [0.1, 0.2, 0.4], nodes=32)
    with pytest.raises(ValueError):
        harmonic_check(traj)


def test_harmonic_residual_is_roundoff_for_circle(circle_map):
    sigma = circle_map.sigma_grid_for(128)
    h = sigma[1] - sigma[0]
    traj = exact_trajectory(circle_map, [0.7 - h, 0.7, 0.7 + h], sigma=sigma)
    assert harmonic_check(traj)["harmonic.max"] <= 1e-11


def test_trajectory_times_must_increase():
    with pytest.raises(ValueError):
        Trajectory(times=np.array([0.0, 0.0]), grid=np.zeros(3), x=np.zeros((2, 3, 2)), x_t=np.zeros((2, 3, 2)),
                   provenance="exact_dalembert", coordinate="sigma")


def test_three_dimensional_string():
    curve = make_curve("fourier", dim=3, cos=[[0.0, 1.0], [0.0, 0.0], [0.0, 0.3]],
                       sin=[[0.0, 0.0], [0.0, 1.0], [0.0, 0.0]], velocity=[0.0, 0.0, 0.2])
    kzmap = build_kz_map(curve, 512)
    for t in (0.3, 1.2):
        assert gauge_check(dalembert_state(kzmap, t), tol=1e-8).passed

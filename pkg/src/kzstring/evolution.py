"""Exact string evolution in the characteristic (t, sigma) coordinates.

In the ``(t, sigma)`` chart the embedding solves the 1+1 linear wave
equation, so it is given in closed form by d'Alembert's formula with
``F = p o varrho`` and ``G`` the transformed initial velocity.  Every
derivative of the state is obtained by differentiating that formula; finite
differences only appear inside the residual checks below.
"""
from __future__ import annotations

from dataclasses import dataclass, field

import numpy as np
from scipy.interpolate import CubicSpline

from .kz_map import phi_map, theta_derivatives
from .report import ResidualReport


@dataclass(frozen=True)
class StringState:
    t: float
    sigma_grid: np.ndarray
    x_tilde: np.ndarray
    x_tilde_t: np.ndarray
    x_tilde_sigma: np.ndarray
    theta: np.ndarray  # varrho(sigma), kept for traceability


@dataclass(frozen=True)
class Trajectory:
    """Samples ``x[k, j]`` and ``x_t[k, j]`` at ``times[k]`` and ``grid[j]``.

    ``coordinate`` names the grid variable (``"sigma"`` or ``"theta"``);
    ``provenance`` is ``"exact_dalembert"`` or ``"oracle_nonlinear"``.
    """

    times: np.ndarray
    grid: np.ndarray
    x: np.ndarray
    x_t: np.ndarray
    provenance: str
    coordinate: str
    closed: bool = True
    metadata: dict = field(default_factory=dict)

    def __post_init__(self):
        if np.any(np.diff(self.times) <= 0):
            raise ValueError("trajectory times must be strictly increasing")

    @property
    def grid_period(self):
        """Length of the periodic parameter domain (closed strings only)."""
        return self.metadata.get("grid_period")

    @classmethod
    def from_states(cls, states, closed=True, grid_period=None):
        grid = states[0].sigma_grid
        for s in states[1:]:
            if s.sigma_grid.shape != grid.shape or not np.allclose(s.sigma_grid, grid, rtol=0, atol=1e-14):
                raise ValueError("states do not share one sigma grid")
        return cls(times=np.array([s.t for s in states]), grid=grid,
                   x=np.stack([s.x_tilde for s in states]),
                   x_t=np.stack([s.x_tilde_t for s in states]),
                   provenance="exact_dalembert", coordinate="sigma", closed=closed,
                   metadata={"grid_period": grid_period})


def dalembert_eval(kzmap, t, sigma):
    """``(x~, x~_t, x~_sigma)`` at ``(t, sigma)`` as ``(N, dim)`` arrays."""
    sigma = np.atleast_1d(np.asarray(sigma, dtype=float))
    th_p = kzmap.varrho(sigma + t)
    th_m = kzmap.varrho(sigma - t)
    curve = kzmap.curve
    # F' = p'(varrho) varrho' and varrho' = 1 / rho'(varrho)
    dF_p = curve.position_deriv(th_p) / kzmap.rho.integrand(th_p)[:, None]
    dF_m = curve.position_deriv(th_m) / kzmap.rho.integrand(th_m)[:, None]
    G_p = kzmap.normal_velocity(th_p)
    G_m = kzmap.normal_velocity(th_m)
    x = 0.5 * (curve.position(th_p) + curve.position(th_m))
    x += 0.5 * (kzmap.velocity_integral(th_p) - kzmap.velocity_integral(th_m))
    x_t = 0.5 * (dF_p - dF_m) + 0.5 * (G_p + G_m)
    x_s = 0.5 * (dF_p + dF_m) + 0.5 * (G_p - G_m)
    return x, x_t, x_s


def dalembert_state(kzmap, t, sigma=None, nodes=None):
    """The transformed embedding at time ``t`` on a sigma grid.

    Without ``sigma`` a uniform grid of ``nodes`` points (default: the map's
    table size) is used; for line strings it covers the domain of dependence.
    """
    t = float(t)
    if sigma is None:
        sigma = kzmap.sigma_grid_for(nodes or kzmap.nodes, t)
    sigma = np.asarray(sigma, dtype=float)
    x, x_t, x_s = dalembert_eval(kzmap, t, sigma)
    return StringState(t=t, sigma_grid=sigma, x_tilde=x, x_tilde_t=x_t, x_tilde_sigma=x_s,
                       theta=kzmap.varrho(sigma))


def exact_trajectory(kzmap, times, nodes=None, sigma=None):
    times = np.asarray(times, dtype=float)
    if sigma is None:
        sigma = kzmap.sigma_grid_for(nodes or kzmap.nodes, np.max(np.abs(times)))
    states = [dalembert_state(kzmap, t, sigma) for t in times]
    return Trajectory.from_states(states, closed=kzmap.closed, grid_period=kzmap.Sigma)


def lambda_solution(kzmap, t, theta):
    """Characteristic speeds at ``(t, theta)`` from the exact solution formula."""
    sigma = phi_map(kzmap, t, theta)
    shape = sigma.shape
    s = sigma.ravel()
    lp = kzmap.lam_plus(kzmap.varrho(s + t))
    lm = kzmap.lam_minus(kzmap.varrho(s - t))
    return lp.reshape(shape), lm.reshape(shape)


def pullback(kzmap, t, theta, state=None):
    """``x(t, theta) = x~(t, Phi(t, theta))`` in the original chart.

    With a sampled ``state`` the composition interpolates its sigma samples
    by a cubic spline (periodic for closed strings); otherwise the d'Alembert
    formula is evaluated directly at ``Phi(t, theta)``.
    """
    theta = np.atleast_1d(np.asarray(theta, dtype=float))
    sigma = phi_map(kzmap, t, theta)
    if state is None:
        return dalembert_eval(kzmap, t, sigma)[0]
    if kzmap.closed:
        period = kzmap.Sigma
        grid = np.append(state.sigma_grid, state.sigma_grid[0] + period)
        vals = np.vstack([state.x_tilde, state.x_tilde[:1]])
        spline = CubicSpline(grid, vals, axis=0, bc_type="periodic")
        s0 = state.sigma_grid[0]
        return spline(s0 + np.mod(sigma - s0, period))
    spline = CubicSpline(state.sigma_grid, state.x_tilde, axis=0)
    return spline(sigma)


def pulled_back_tangents(kzmap, t, theta):
    """``(x, x_t, x_theta)`` of the evolved string in the ``(t, theta)`` chart.

    Chain rule through ``theta = Theta(t, sigma)``:
    ``x_theta = x~_sigma / Theta_sigma`` and
    ``x_t = x~_t - x~_sigma Theta_t / Theta_sigma``.
    """
    theta = np.atleast_1d(np.asarray(theta, dtype=float))
    sigma = phi_map(kzmap, t, theta)
    x, xt, xs = dalembert_eval(kzmap, t, sigma)
    th_t, th_s = theta_derivatives(kzmap, t, sigma)
    x_theta = xs / th_s[:, None]
    return x, xt - x_theta * th_t[:, None], x_theta


def pullback_trajectory(kzmap, times, theta_grid):
    times = np.asarray(times, dtype=float)
    xs, vs = [], []
    for t in times:
        x, x_t, _ = pulled_back_tangents(kzmap, t, theta_grid)
        xs.append(x)
        vs.append(x_t)
    return Trajectory(times=times, grid=np.asarray(theta_grid, dtype=float), x=np.stack(xs),
                      x_t=np.stack(vs), provenance="exact_dalembert", coordinate="theta",
                      closed=kzmap.closed, metadata={"grid_period": kzmap.curve.period if kzmap.closed else None})


def gauge_check(state, tol=None):
    """Max-norms of ``<x~_t, x~_sigma>`` and ``|x~_t|^2 + |x~_sigma|^2 - 1``."""
    xt, xs = state.x_tilde_t, state.x_tilde_sigma
    ortho = float(np.max(np.abs(np.sum(xt * xs, axis=-1))))
    norm = float(np.max(np.abs(np.sum(xt * xt, axis=-1) + np.sum(xs * xs, axis=-1) - 1.0)))
    tols = {} if tol is None else {"gauge.orthogonality.max": tol, "gauge.normalization.max": tol}
    return ResidualReport(residuals={"gauge.orthogonality.max": ortho, "gauge.normalization.max": norm},
                          metadata={"t": state.t, "nodes": int(state.sigma_grid.size)}, tolerances=tols)


def energy(state):
    """Periodic trapezoid sum of ``|x~_t|^2 + |x~_sigma|^2`` over the sigma grid."""
    dens = np.sum(state.x_tilde_t**2, axis=-1) + np.sum(state.x_tilde_sigma**2, axis=-1)
    h = state.sigma_grid[1] - state.sigma_grid[0]
    return float(np.sum(dens) * h)


def _sigma_diff(f, h, periodic):
    if periodic:
        return (np.roll(f, -1, axis=1) - np.roll(f, 1, axis=1)) / (2 * h)
    out = np.full_like(f, np.nan)
    out[:, 1:-1] = (f[:, 2:] - f[:, :-2]) / (2 * h)
    return out


def _uniform_step(values, what):
    steps = np.diff(values)
    if not np.allclose(steps, steps[0], rtol=1e-9, atol=0):
        raise ValueError(f"non-uniform {what} spacing")
    return float(steps[0])


def harmonic_check(traj):
    """Contracted Christoffel symbols ``g^{mu nu} Gamma^rho_{mu nu}`` of the worldsheet.

    The induced metric is assembled at every state from the stored velocity
    ``x~_t`` and a central difference of the positions along sigma; its
    derivatives are central differences in t (across neighbouring states)
    and in sigma.  The report holds the max-norm over interior samples.
    In the orthogonal gauge the exact metric is conformal, so differencing
    the positions is what leaves a measurable truncation error.
    """
    if traj.times.size < 3:
        raise ValueError("harmonic_check needs at least three states")
    tau = _uniform_step(traj.times, "time")
    hs = _uniform_step(traj.grid, "sigma")
    periodic = traj.closed
    xs = np.stack([_sigma_diff(traj.x[..., c], hs, periodic) for c in range(traj.x.shape[-1])], -1)
    xt = traj.x_t
    g = np.empty((2, 2) + xs.shape[:2])
    g[0, 0] = np.sum(xt * xt, axis=-1) - 1.0
    g[0, 1] = g[1, 0] = np.sum(xt * xs, axis=-1)
    g[1, 1] = np.sum(xs * xs, axis=-1)
    dg = np.empty((2,) + g.shape)
    dg[:] = np.nan
    dg[0][..., 1:-1, :] = (g[..., 2:, :] - g[..., :-2, :]) / (2 * tau)
    for a in range(2):
        for b in range(2):
            dg[1, a, b] = _sigma_diff(g[a, b], hs, periodic)
    det = g[0, 0] * g[1, 1] - g[0, 1] ** 2
    gi = np.empty_like(g)
    gi[0, 0], gi[0, 1], gi[1, 0], gi[1, 1] = g[1, 1] / det, -g[0, 1] / det, -g[0, 1] / det, g[0, 0] / det
    # lowered symbols Gamma_{l m n} = (d_m g_{ln} + d_n g_{lm} - d_l g_{mn}) / 2
    low = 0.5 * (np.einsum("mlnij->lmnij", dg) + np.einsum("nlmij->lmnij", dg) - dg)
    contracted = np.einsum("mnij,lmnij->lij", gi, low)
    gamma = np.einsum("rlij,lij->rij", gi, contracted)
    interior = gamma[:, 1:-1]
    if not periodic:
        # g_sigma differences differenced positions: two samples lost per end
        interior = interior[:, :, 2:-2]
    resid = float(np.max(np.abs(interior)))
    return ResidualReport(residuals={"harmonic.max": resid},
                          metadata={"time_step": tau, "sigma_step": hs, "states": int(traj.times.size)})


def periodicity_check(kzmap, times=(0.0, 0.7, 1.9), nodes=256, tol=None):
    """Compare ``x~(t + Sigma)`` with ``x~(t) + d`` for the rigid drift ``d = int_0^Sigma G``."""
    if not kzmap.closed:
        raise ValueError("periodicity is defined for closed strings only")
    Sigma = kzmap.Sigma
    drift = np.asarray(kzmap.velocity_integral.increment, dtype=float)
    sigma = kzmap.sigma_grid_for(nodes)
    worst, measured = 0.0, []
    for t in np.atleast_1d(times):
        a = dalembert_eval(kzmap, t, sigma)[0]
        b = dalembert_eval(kzmap, t + Sigma, sigma)[0]
        measured.append(np.mean(b - a, axis=0))
        worst = max(worst, float(np.max(np.abs(b - a - drift))))
    report = ResidualReport(residuals={"periodicity.drift_mismatch": worst},
                            metadata={"period": Sigma, "drift": drift,
                                      "measured_drift": np.mean(measured, axis=0)})
    if tol is not None:
        report.tolerances["periodicity.drift_mismatch"] = tol
    return report

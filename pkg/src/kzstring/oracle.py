"""Brute-force reference solvers, independent of the exact d'Alembert pipeline.

``solve_nonlinear`` integrates the quasilinear string equations

    g11 x_tt - 2 g01 x_ttheta + g00 x_thetatheta = 0

with second-order central differences and a leapfrog step in time.
``solve_characteristic`` transports the characteristic speeds with a
first-order upwind scheme.
"""
from __future__ import annotations

import logging
import math
from dataclasses import dataclass

import numpy as np
from scipy.interpolate import CubicSpline

from .errors import CFLError, GapCollapseError, NumericalError, SpaceLikeError
from .evolution import Trajectory
from .initial_data import characteristic_data, validate_timelike
from .metric import characteristic_speeds, metric_components, projection_audit, string_operator
from .report import ResidualReport

log = logging.getLogger(__name__)

NONLINEAR_CFL = 0.5
CHARACTERISTIC_CFL = 0.9
GAP_TOL = 1e-10


@dataclass(frozen=True)
class FDGrid:
    theta: np.ndarray
    h: float
    dt: float
    cfl: float
    shift: np.ndarray  # p(theta_min + L) - p(theta_min); zero for closed curves

    def neighbours(self, x, shift=True):
        """``(x_{j+1}, x_{j-1})`` with periodic wrap (plus the winding shift)."""
        xp = np.roll(x, -1, axis=0)
        xm = np.roll(x, 1, axis=0)
        if shift:
            xp[-1] += self.shift
            xm[0] -= self.shift
        return xp, xm

    def d1(self, x, shift=True):
        xp, xm = self.neighbours(x, shift)
        return (xp - xm) / (2 * self.h)

    def d2(self, x):
        xp, xm = self.neighbours(x)
        return (xp - 2 * x + xm) / self.h**2


def _shifted_roll(a, j, shift):
    """``a[:, i + j]`` along axis 1 with periodic wrap, adding the winding shift."""
    out = np.roll(a, -j, axis=1)
    if j > 0:
        out[:, -j:] += shift
    elif j < 0:
        out[:, :-j] -= shift
    return out


def _periodic_grid(curve, nodes):
    theta = curve.theta_min + curve.period * np.arange(nodes) / nodes
    ends = np.array([curve.theta_min, curve.theta_max])
    shift = np.diff(curve.position(ends), axis=0)[0]
    q_ends = curve.velocity(ends)
    if not np.allclose(q_ends[0], q_ends[1], atol=1e-12):
        raise ValueError("the oracle needs a periodic velocity field")
    if curve.closed:
        shift = np.zeros_like(shift)
    return theta, curve.period / nodes, shift


def _acceleration(grid, x, v):
    """``x_tt`` from the string equations, plus the local characteristic speeds."""
    x_th = grid.d1(x)
    x_thth = grid.d2(x)
    v_th = grid.d1(v, shift=False)
    g00, g01, g11 = metric_components(v, x_th)
    disc = g01 * g01 - g00 * g11
    if not np.all(disc > 0):
        j = int(np.argmin(disc))
        raise SpaceLikeError(f"space-like degeneration: discriminant {disc[j]:.3e} at theta = {grid.theta[j]:.17g}",
                             theta=float(grid.theta[j]))
    acc = (2 * g01[:, None] * v_th - g00[:, None] * x_thth) / g11[:, None]
    lp, lm = characteristic_speeds(g00, g01, g11)
    return acc, max(float(np.max(np.abs(lp))), float(np.max(np.abs(lm))))


def _march(curve, grid, nsteps, cfl_limit, tol=1e-14, max_iter=30):
    """Leapfrog layers ``x^0..x^nsteps``; raises _CFLExceeded when the speeds grow."""
    theta, dt = grid.theta, grid.dt
    x0 = curve.position(theta)
    v0 = curve.velocity(theta)
    a0, _ = _acceleration(grid, x0, v0)
    layers = [x0, x0 + dt * v0 + 0.5 * dt**2 * a0]
    v_guess = v0 + dt * a0
    for n in range(1, nsteps):
        x_prev, x_now = layers[n - 1], layers[n]
        if n >= 2:
            v_guess = (3 * x_now - 4 * x_prev + layers[n - 2]) / (2 * dt)
        # centred velocity makes the step implicit; resolve by fixed-point iteration
        x_next = None
        for _ in range(max_iter):
            acc, speed = _acceleration(grid, x_now, v_guess)
            cand = 2 * x_now - x_prev + dt**2 * acc
            if x_next is not None and np.max(np.abs(cand - x_next)) <= tol * (1 + np.max(np.abs(cand))):
                x_next = cand
                break
            x_next = cand
            v_guess = (x_next - x_prev) / (2 * dt)
        if speed * dt / grid.h > cfl_limit:
            raise _CFLExceeded(speed)
        if not np.all(np.isfinite(x_next)):
            raise NumericalError(f"NaN in nonlinear solver at t = {(n + 1) * dt:.6g}")
        layers.append(x_next)
    return np.stack(layers)


class _CFLExceeded(Exception):
    def __init__(self, speed):
        self.speed = speed


def solve_nonlinear(curve, nodes=512, t_end=None, times=None, cfl=NONLINEAR_CFL, max_restarts=6,
                    all_layers=False):
    """Leapfrog solution of the string equations for a closed (or periodicised) curve.

    Output states at ``times`` (default ``[t_end]``) come from a cubic spline
    through the stored layers; a time that falls on a step is reproduced
    exactly.  With ``all_layers=True`` every step is returned instead.
    The time step is uniform: if the measured CFL number exceeds ``cfl``
    the whole run restarts with a proportionally smaller step.
    """
    if times is None:
        if t_end is None:
            raise ValueError("give t_end or times")
        times = [t_end]
    times = np.asarray(times, dtype=float)
    t_end = float(times[-1])
    if np.any(np.diff(times) <= 0) or times[0] < 0:
        raise ValueError("output times must be non-negative and increasing")
    theta, h, shift = _periodic_grid(curve, nodes)
    report = validate_timelike(curve, theta)
    if not report.passed:
        raise SpaceLikeError(f"initial data not time-like/immersed (min disc {report.min_disc:.3e})",
                             theta=report.worst_theta)
    lp, lm, _, _ = characteristic_data(curve, theta)
    speed = max(float(np.max(np.abs(lp))), float(np.max(np.abs(lm))), 1e-12)
    target = 0.8 * cfl
    for attempt in range(max_restarts + 1):
        nsteps = max(2, math.ceil(t_end * speed / (target * h))) if t_end > 0 else 2
        dt = t_end / nsteps if t_end > 0 else target * h / speed
        grid = FDGrid(theta=theta, h=h, dt=dt, cfl=dt * speed / h, shift=shift)
        try:
            layers = _march(curve, grid, nsteps, cfl)
            break
        except _CFLExceeded as exc:
            log.info("CFL exceeded (speed %.3g); restarting with a smaller step", exc.speed)
            speed = max(exc.speed, 1.25 * speed)
    else:
        raise CFLError(f"CFL bound {cfl} not restored after {max_restarts} restarts")
    step_times = dt * np.arange(layers.shape[0])
    meta = {"dt": dt, "h": h, "steps": nsteps, "cfl": dt * speed / h, "restarts": attempt,
            "grid_period": curve.period, "shift": shift}
    if all_layers:
        v = np.gradient(layers, dt, axis=0, edge_order=2)
        v[0] = curve.velocity(theta)
        return Trajectory(times=step_times, grid=theta, x=layers, x_t=v, provenance="oracle_nonlinear",
                          coordinate="theta", closed=True, metadata=meta)
    spline = CubicSpline(step_times, layers, axis=0)
    x = spline(times)
    v = spline(times, 1)
    on_step = np.abs(times / dt - np.round(times / dt)) < 1e-9
    for k in np.where(on_step)[0]:
        x[k] = layers[int(round(times[k] / dt))]
    v[times == 0] = curve.velocity(theta)
    return Trajectory(times=times, grid=theta, x=x, x_t=v, provenance="oracle_nonlinear",
                      coordinate="theta", closed=True, metadata=meta)


def projection_residual(traj, stride=2):
    """Max of ``|M E|`` over interior samples of an all-layers oracle trajectory.

    ``E`` is evaluated with central differences of width ``stride`` in both
    t and theta, so it differs from the scheme's own stencil and measures the
    truncation error of the discrete solution.
    """
    x = traj.x
    dt = traj.metadata["dt"]
    h = traj.metadata["h"]
    shift = np.asarray(traj.metadata.get("shift", 0.0))
    s = stride
    k = np.arange(s, x.shape[0] - s)
    xc = x[k]
    ht, hh = s * dt, s * h

    def roll(a, j):
        return _shifted_roll(a, j, shift)

    x_t = (x[k + s] - x[k - s]) / (2 * ht)
    x_tt = (x[k + s] - 2 * xc + x[k - s]) / ht**2
    x_th = (roll(xc, s) - roll(xc, -s)) / (2 * hh)
    x_thth = (roll(xc, s) - 2 * xc + roll(xc, -s)) / hh**2
    x_tth = (roll(x[k + s], s) - roll(x[k + s], -s) - roll(x[k - s], s) + roll(x[k - s], -s)) / (4 * ht * hh)
    E = string_operator(x_t, x_th, x_tt, x_tth, x_thth)
    audit = projection_audit(x_t, x_th)
    ME = audit.apply(E)
    return ResidualReport(residuals={"projection.ME.max": float(np.max(np.linalg.norm(ME, axis=-1))),
                                     "projection.idempotence.max": float(np.max(audit.idempotence))},
                          metadata={"h": h, "dt": dt, "stride": s})


@dataclass(frozen=True)
class CharacteristicSolution:
    times: np.ndarray
    grid: np.ndarray
    lambda_plus: np.ndarray
    lambda_minus: np.ndarray
    steps: int


def _upwind(f, speed, h):
    back = (f - np.roll(f, 1)) / h
    fwd = (np.roll(f, -1) - f) / h
    return np.where(speed > 0, back, fwd)


def solve_characteristic(field, times, cfl=CHARACTERISTIC_CFL, gap_tol=GAP_TOL, max_steps=10**7):
    """Upwind transport ``d_t l_+ + l_- d_theta l_+ = 0`` and ``d_t l_- + l_+ d_theta l_- = 0``.

    ``field`` is an :class:`~kzstring.initial_data.EigenvalueField` on a
    uniform periodic grid.  Each family is upwinded by the sign of the other
    family's speed at every node and step.
    """
    theta = np.asarray(field.grid, dtype=float)
    n = theta.size
    h = field.curve.period / n
    if not np.allclose(np.diff(theta), h, rtol=1e-9):
        raise ValueError("characteristic solver needs the uniform periodic grid without its closing node")
    times = np.atleast_1d(np.asarray(times, dtype=float))
    if np.any(np.diff(times) <= 0) or times[0] < 0:
        raise ValueError("output times must be non-negative and increasing")
    lp = np.array(field.lambda_plus, dtype=float)
    lm = np.array(field.lambda_minus, dtype=float)
    out_p, out_m = [], []
    t, steps = 0.0, 0
    for t_out in times:
        while t < t_out - 1e-14 * max(1.0, t_out):
            speed = max(float(np.max(np.abs(lp))), float(np.max(np.abs(lm))))
            dt = min(cfl * h / speed if speed > 0 else t_out - t, t_out - t)
            if dt * speed / h > cfl * (1 + 1e-12):
                raise CFLError(f"CFL {dt * speed / h:.3g} exceeds {cfl}")
            lp, lm = lp - dt * lm * _upwind(lp, lm, h), lm - dt * lp * _upwind(lm, lp, h)
            t += dt
            steps += 1
            gap = lp - lm
            if not np.all(gap > gap_tol):
                j = int(np.argmin(gap))
                raise GapCollapseError(f"characteristic gap collapsed to {gap[j]:.3e} at theta = "
                                       f"{theta[j]:.17g}, t = {t:.17g}", theta=float(theta[j]), time=t)
            if not np.all(np.isfinite(gap)):
                raise NumericalError("NaN in characteristic solver")
            if steps > max_steps:
                raise CFLError("step budget exhausted")
        out_p.append(lp.copy())
        out_m.append(lm.copy())
    return CharacteristicSolution(times=times, grid=theta, lambda_plus=np.stack(out_p),
                                  lambda_minus=np.stack(out_m), steps=steps)


def trajectory_speeds(traj):
    """Characteristic speeds of a theta-chart trajectory via the induced metric."""
    h = traj.grid[1] - traj.grid[0]
    shift = np.asarray(traj.metadata.get("shift", 0.0))
    x_th = (_shifted_roll(traj.x, 1, shift) - _shifted_roll(traj.x, -1, shift)) / (2 * h)
    g00, g01, g11 = metric_components(traj.x_t, x_th)
    return characteristic_speeds(g00, g01, g11)


def _curve_distance(points, curve_pts, closed):
    """Distance from each point to the cubic-spline curve through ``curve_pts``."""
    m = curve_pts.shape[0]
    if closed:
        knots = np.arange(m + 1, dtype=float)
        spline = CubicSpline(knots, np.vstack([curve_pts, curve_pts[:1]]), axis=0, bc_type="periodic")
        upper = float(m)
    else:
        knots = np.arange(m, dtype=float)
        spline = CubicSpline(knots, curve_pts, axis=0)
        upper = float(m - 1)
    d2 = np.sum((points[:, None, :] - curve_pts[None, :, :]) ** 2, axis=-1)
    j = np.argmin(d2, axis=1).astype(float)
    lo, hi = j - 1.0, j + 1.0
    if not closed:
        lo, hi = np.maximum(lo, 0.0), np.minimum(hi, upper)
    s = j.copy()
    for _ in range(20):
        diff = spline(s) - points
        d1 = spline(s, 1)
        dd = spline(s, 2)
        f1 = np.sum(diff * d1, axis=-1)
        f2 = np.sum(d1 * d1, axis=-1) + np.sum(diff * dd, axis=-1)
        step = np.where(f2 > 0, f1 / np.where(f2 > 0, f2, 1.0), 0.0)
        s = np.clip(s - step, lo, hi)
    return np.linalg.norm(spline(s) - points, axis=-1)


def compare_trajectories(a, b, matching="same_parametrization"):
    """Distance between two trajectories sampled at the same times.

    ``same_parametrization``: sup over times and nodes of ``|x_a - x_b|``
    (grids must coincide).  ``geometric``: symmetric Hausdorff-type distance
    between the curve images, each image represented by a cubic spline
    through its samples.
    """
    if a.times.shape != b.times.shape or not np.allclose(a.times, b.times, rtol=0, atol=1e-12):
        raise ValueError("trajectories are sampled at different times")
    per_time = []
    if matching == "same_parametrization":
        if a.grid.shape != b.grid.shape or not np.allclose(a.grid, b.grid, rtol=0, atol=1e-12):
            raise ValueError("same_parametrization needs a common grid")
        per_time = [float(np.max(np.linalg.norm(xa - xb, axis=-1))) for xa, xb in zip(a.x, b.x)]
    elif matching == "geometric":
        closed = a.closed and b.closed
        for xa, xb in zip(a.x, b.x):
            per_time.append(max(float(np.max(_curve_distance(xa, xb, closed))),
                                float(np.max(_curve_distance(xb, xa, closed)))))
    else:
        raise ValueError(f"unknown matching {matching!r}")
    return ResidualReport(residuals={f"compare.{matching}.max": max(per_time)},
                          metadata={"per_time": per_time, "times": a.times.tolist()})

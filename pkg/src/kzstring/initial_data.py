"""Cauchy data for the string: the curve p(theta), its velocity q(theta),
and the characteristic fields Lambda_+/- they induce at t = 0."""
from __future__ import annotations

from dataclasses import dataclass, field

import numpy as np

from .errors import ConfigError, DegenerateCurveError, SpaceLikeError
from .metric import IMMERSION_TOL, characteristic_speeds, metric_components

DISC_TOL = 1e-12
DEFAULT_NODES = 1024
PRESETS = ("circle", "ellipse", "line", "fourier")


@dataclass(frozen=True)
class InitialCurve:
    """Initial position/velocity of a string, with the analytic derivative p'.

    ``position``, ``velocity`` and ``position_deriv`` map a 1-D array of
    parameters to an ``(N, dim)`` array.  For ``topology == "closed"`` the
    parameter domain is ``[0, period)``; for ``"line"`` it is the window
    ``[theta_min, theta_min + period]``.
    """

    dim: int
    topology: str
    period: float
    position: object = field(repr=False)
    velocity: object = field(repr=False)
    position_deriv: object = field(repr=False)
    presentation: tuple = ()
    theta_min: float = 0.0

    @property
    def closed(self):
        return self.topology == "closed"

    @property
    def theta_max(self):
        return self.theta_min + self.period

    def sample(self, theta):
        theta = np.atleast_1d(np.asarray(theta, dtype=float))
        return self.position(theta), self.velocity(theta), self.position_deriv(theta)

    def grid(self, nodes=DEFAULT_NODES):
        """Uniform parameter grid; the closing node is dropped for closed curves."""
        return np.linspace(self.theta_min, self.theta_max, nodes, endpoint=not self.closed)


def _as_vector(values, dim, key):
    vec = np.zeros(dim)
    values = np.atleast_1d(np.asarray(values, dtype=float))
    if values.size > dim:
        raise ConfigError(f"expected at most {dim} components, got {values.size}", key)
    vec[: values.size] = values
    return vec


def _fourier_maps(cos, sin, dim, omega, key):
    """Evaluators for sum_k a_k cos(k w s) + b_k sin(k w s) and its derivative."""
    cos = [np.atleast_1d(np.asarray(c, dtype=float)) for c in cos]
    sin = [np.atleast_1d(np.asarray(s, dtype=float)) for s in sin]
    if len(cos) != dim or len(sin) != dim:
        raise ConfigError(f"need cosine and sine coefficients for all {dim} components", key)
    lengths = {c.size for c in cos} | {s.size for s in sin}
    if len(lengths) != 1:
        raise ConfigError("coefficient arrays must share one length", key)
    K = lengths.pop()
    if K == 0:
        raise ConfigError("zero-length coefficient arrays", key)
    A = np.stack(cos, axis=1)  # (K, dim)
    B = np.stack(sin, axis=1)
    k = np.arange(K) * omega

    def value(theta):
        ph = np.outer(theta, k)
        return np.cos(ph) @ A + np.sin(ph) @ B

    def deriv(theta):
        ph = np.outer(theta, k)
        return (np.cos(ph) * k) @ B - (np.sin(ph) * k) @ A

    return value, deriv


def make_curve(preset, dim=2, topology="closed", period=2 * np.pi, velocity=None, **params):
    """Build an :class:`InitialCurve` from a preset name and its parameters.

    Presets:

    ``circle``  radius ``radius`` (default 1);
    ``ellipse`` semi-axes ``a`` and ``b``;
    ``line``    p = (theta, 0, ...) on ``[-half_length, half_length]``;
    ``fourier`` per-component coefficient lists ``cos`` and ``sin``.

    ``velocity`` is a constant vector; alternatively ``velocity_cos`` and
    ``velocity_sin`` give a Fourier velocity with the same conventions as the
    ``fourier`` preset.
    """
    if preset not in PRESETS:
        raise ConfigError(f"unknown preset {preset!r}; expected one of {PRESETS}", "curve.preset")
    if dim < 2:
        raise ConfigError("ambient dimension must be >= 2", "dim")
    if topology not in ("closed", "line"):
        raise ConfigError(f"unknown topology {topology!r}", "topology")
    if preset == "line":
        topology = "line"
        half = float(params.pop("half_length", np.pi))
        if not half > 0:
            raise ConfigError("half_length must be positive", "curve.half_length")
        period = 2.0 * half
    if not period > 0:
        raise ConfigError(f"non-positive period {period}", "period")
    period = float(period)
    omega = 2.0 * np.pi / period
    vel_cos = params.pop("velocity_cos", None)
    vel_sin = params.pop("velocity_sin", None)
    theta_min = 0.0

    if preset in ("circle", "ellipse"):
        if preset == "circle":
            a = b = float(params.pop("radius", 1.0))
        else:
            a, b = float(params.pop("a", 2.0)), float(params.pop("b", 1.0))

        def position(theta):
            out = np.zeros((theta.size, dim))
            out[:, 0] = a * np.cos(omega * theta)
            out[:, 1] = b * np.sin(omega * theta)
            return out

        def position_deriv(theta):
            out = np.zeros((theta.size, dim))
            out[:, 0] = -a * omega * np.sin(omega * theta)
            out[:, 1] = b * omega * np.cos(omega * theta)
            return out

        pres = (preset, (("a", a), ("b", b)))
    elif preset == "line":
        theta_min = -half

        def position(theta):
            out = np.zeros((theta.size, dim))
            out[:, 0] = theta
            return out

        def position_deriv(theta):
            out = np.zeros((theta.size, dim))
            out[:, 0] = 1.0
            return out

        pres = (preset, (("half_length", half),))
    else:
        cos, sin = params.pop("cos", None), params.pop("sin", None)
        if cos is None or sin is None:
            raise ConfigError("fourier preset needs 'cos' and 'sin' coefficients", "curve.cos")
        position, position_deriv = _fourier_maps(cos, sin, dim, omega, "curve.cos")
        pres = ("fourier", (("cos", tuple(map(tuple, np.atleast_2d(cos)))),
                            ("sin", tuple(map(tuple, np.atleast_2d(sin))))))
    if params:
        raise ConfigError(f"unexpected parameters {sorted(params)} for preset {preset!r}", "curve")

    if vel_cos is not None or vel_sin is not None:
        if vel_cos is None or vel_sin is None:
            raise ConfigError("Fourier velocity needs both cosine and sine coefficients", "velocity.cos")
        velocity_fn, _ = _fourier_maps(vel_cos, vel_sin, dim, omega, "velocity.cos")
    else:
        q0 = _as_vector(0.0 if velocity is None else velocity, dim, "curve.velocity")

        def velocity_fn(theta):
            return np.broadcast_to(q0, (theta.size, dim)).copy()

    def _wrap(fn):
        return lambda theta: fn(np.atleast_1d(np.asarray(theta, dtype=float)))

    return InitialCurve(dim=dim, topology=topology, period=period, position=_wrap(position),
                        velocity=_wrap(velocity_fn), position_deriv=_wrap(position_deriv),
                        presentation=pres, theta_min=theta_min)


def rotated(curve, rotation):
    """The same curve with an orthogonal map applied to p, q and p'."""
    R = np.asarray(rotation, dtype=float)
    return InitialCurve(dim=curve.dim, topology=curve.topology, period=curve.period,
                        position=lambda th: curve.position(th) @ R.T,
                        velocity=lambda th: curve.velocity(th) @ R.T,
                        position_deriv=lambda th: curve.position_deriv(th) @ R.T,
                        presentation=curve.presentation + (("rotation", R.tolist()),),
                        theta_min=curve.theta_min)


def characteristic_data(curve, theta):
    """Lambda_+, Lambda_-, discriminant and |p'|^2 at arbitrary parameters.

    No validation is done here; NaN marks space-like samples.
    """
    theta = np.atleast_1d(np.asarray(theta, dtype=float))
    g00, g01, g11 = metric_components(curve.velocity(theta), curve.position_deriv(theta))
    lp, lm = characteristic_speeds(g00, g01, g11)
    return lp, lm, g01 * g01 - g00 * g11, g11


@dataclass(frozen=True)
class EigenvalueField:
    grid: np.ndarray
    lambda_plus: np.ndarray
    lambda_minus: np.ndarray
    gap_min: float
    curve: InitialCurve = field(repr=False)


@dataclass(frozen=True)
class ValidationReport:
    min_speed: float
    min_disc: float
    min_gap: float
    worst_theta: float
    passed: bool
    immersion_tol: float = IMMERSION_TOL
    disc_tol: float = DISC_TOL


def validate_timelike(curve, grid=None, immersion_tol=IMMERSION_TOL, disc_tol=DISC_TOL):
    """Check immersion and the no-space-like-point condition on ``grid``."""
    grid = curve.grid() if grid is None else np.asarray(grid, dtype=float)
    lp, lm, disc, g11 = characteristic_data(curve, grid)
    speed = np.sqrt(g11)
    gap = np.where(disc >= 0, lp - lm, -np.inf)
    margin = np.minimum(speed / immersion_tol, np.where(disc >= 0, disc / disc_tol, -np.inf))
    worst = int(np.argmin(margin))
    min_gap = float(np.min(gap)) if np.all(np.isfinite(gap)) else float("-inf")
    passed = bool(np.min(speed) >= immersion_tol and np.min(disc) >= disc_tol and min_gap > 0)
    return ValidationReport(min_speed=float(np.min(speed)), min_disc=float(np.min(disc)),
                            min_gap=min_gap, worst_theta=float(grid[worst]), passed=passed,
                            immersion_tol=immersion_tol, disc_tol=disc_tol)


def lambda_init(curve, grid=None, immersion_tol=IMMERSION_TOL, disc_tol=DISC_TOL):
    """Initial characteristic speeds Lambda_+/- sampled on ``grid``."""
    grid = curve.grid() if grid is None else np.asarray(grid, dtype=float)
    lp, lm, disc, g11 = characteristic_data(curve, grid)
    bad = np.sqrt(g11) < immersion_tol
    if np.any(bad):
        th = grid[np.argmax(bad)]
        raise DegenerateCurveError(f"|p'| below {immersion_tol:g} at theta = {th:.17g}")
    bad = disc < disc_tol
    if np.any(bad):
        i = int(np.argmin(disc))
        raise SpaceLikeError(f"discriminant {disc[i]:.3e} < {disc_tol:g} at theta = {grid[i]:.17g}",
                             theta=float(grid[i]))
    return EigenvalueField(grid=grid, lambda_plus=lp, lambda_minus=lm,
                           gap_min=float(np.min(lp - lm)), curve=curve)

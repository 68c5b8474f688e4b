"""The characteristic change of variables theta = Theta(t, sigma).

``rho`` maps the curve parameter to the new coordinate sigma,
``varrho`` is its inverse, and ``Theta`` is assembled from two
antiderivatives of the initial characteristic speeds.  The integrals over
``Lambda_+/- o varrho`` in sigma are computed after substituting
``xi = rho(theta)``::

    int_0^s Lambda(varrho(xi)) dxi = int_0^{varrho(s)} Lambda rho' dtheta,

so every table integrates an analytic function of theta and only ``varrho``
needs a root-find.
"""
from __future__ import annotations

from dataclasses import dataclass, field

import numpy as np

from .errors import BracketError, DomainOfDependenceError, GapCollapseError
from .initial_data import DEFAULT_NODES, characteristic_data, lambda_init
from .metric import induced_metric
from .quadrature import AntiderivativeTable, MonotoneTable, invert_monotone
from .report import ResidualReport

GAP_TOL = 1e-12


def _lambda_functions(curve):
    def lam_plus(theta):
        return characteristic_data(curve, theta)[0]

    def lam_minus(theta):
        return characteristic_data(curve, theta)[1]

    return lam_plus, lam_minus


def build_rho(field, nodes=None, gap_tol=GAP_TOL):
    """Tabulate ``rho(theta) = int_0^theta 2 / (Lambda_+ - Lambda_-)``.

    ``nodes`` defaults to the number of samples in ``field.grid``.
    """
    curve = field.curve
    if not field.gap_min > gap_tol:
        i = int(np.argmin(field.lambda_plus - field.lambda_minus))
        raise GapCollapseError(f"characteristic gap {field.gap_min:.3e} at theta = {field.grid[i]:.17g}",
                               theta=float(field.grid[i]))
    nodes = field.grid.size if nodes is None else int(nodes)

    def integrand(theta):
        lp, lm, _, _ = characteristic_data(curve, theta)
        gap = lp - lm
        if not np.all(gap > gap_tol):
            bad = np.where(~(gap > gap_tol))[0][0]
            raise GapCollapseError(f"characteristic gap {gap[bad]:.3e} at theta = {theta[bad]:.17g}",
                                   theta=float(theta[bad]))
        return 2.0 / gap

    if not curve.closed and not curve.theta_min <= 0.0 <= curve.theta_max:
        raise DomainOfDependenceError("line window must contain the base point theta = 0")
    return MonotoneTable(integrand, curve.theta_min, curve.period, nodes, periodic=curve.closed)


def invert_table(table):
    """Inverse evaluator of a monotone table (``varrho`` from ``rho``)."""
    return table.inverse()


@dataclass(frozen=True)
class KZMap:
    curve: object = field(repr=False)
    rho: MonotoneTable = field(repr=False)
    varrho: object = field(repr=False)
    lam_plus: object = field(repr=False)
    lam_minus: object = field(repr=False)
    int_plus: AntiderivativeTable = field(repr=False)
    int_minus: AntiderivativeTable = field(repr=False)
    velocity_integral: AntiderivativeTable = field(repr=False)
    sigma_grid: np.ndarray = field(repr=False)
    lambda_tables: tuple = field(repr=False)
    nodes: int = DEFAULT_NODES
    corrupted: bool = False

    @property
    def closed(self):
        return self.curve.closed

    @property
    def Sigma(self):
        """sigma-period ``rho(L)`` of a closed string (``None`` for lines)."""
        return float(self.rho.increment) if self.closed else None

    @property
    def sigma_bounds(self):
        return float(self.rho.values[0]), float(self.rho.values[-1])

    def speed_bound(self):
        lp, lm = self.lambda_tables
        return float(max(np.max(np.abs(lp)), np.max(np.abs(lm))))

    def normal_velocity(self, theta):
        return normal_velocity(self.curve, self.lam_plus, self.lam_minus, theta)

    def sigma_grid_for(self, nodes, t=0.0):
        """Uniform sigma samples: ``[0, Sigma)`` when closed, the domain of
        dependence of the data at time ``t`` for lines."""
        if self.closed:
            return np.linspace(0.0, self.Sigma, nodes, endpoint=False)
        lo, hi = self.sigma_bounds
        t = abs(float(t))
        if hi - lo <= 2 * t:
            raise DomainOfDependenceError(f"no sigma has a domain of dependence inside the data at t = {t}")
        return np.linspace(lo + t, hi - t, nodes)


def normal_velocity(curve, lam_plus, lam_minus, theta):
    """Initial velocity of the transformed embedding, ``q + p' Theta_t(0)``.

    ``Theta_t(0) = (Lambda_+ + Lambda_-)/2 = -<q,p'>/|p'|^2``, so this is the
    component of q normal to the curve; it equals q whenever q is normal.
    """
    _, q, dp = curve.sample(theta)
    return q + dp * (0.5 * (lam_plus(theta) + lam_minus(theta)))[:, None]


def build_kz_map(curve, nodes=DEFAULT_NODES, corrupt_lambda_minus=False, gap_tol=GAP_TOL):
    """Build rho, varrho and the Theta tables for ``curve`` on ``nodes`` cells.

    ``corrupt_lambda_minus`` flips the sign of Lambda_- everywhere except in
    rho (which needs the true gap).  It exists to exercise failure paths.
    """
    field_ = lambda_init(curve, curve.grid(nodes))
    rho = build_rho(field_, nodes, gap_tol)
    varrho = invert_table(rho)
    lam_plus, lam_minus_true = _lambda_functions(curve)
    lam_minus = (lambda th: -lam_minus_true(th)) if corrupt_lambda_minus else lam_minus_true

    def half_drho(theta):
        return 0.5 * rho.integrand(theta)

    args = (curve.theta_min, curve.period, nodes, curve.closed)
    int_plus = AntiderivativeTable(lambda th: lam_plus(th) * half_drho(th), *args)
    int_minus = AntiderivativeTable(lambda th: lam_minus(th) * half_drho(th), *args)

    def vel_density(theta):
        return normal_velocity(curve, lam_plus, lam_minus, theta) * rho.integrand(theta)[:, None]

    vel_int = AntiderivativeTable(vel_density, *args)
    if curve.closed:
        sig = np.linspace(0.0, float(rho.increment), nodes, endpoint=False)
    else:
        sig = np.linspace(rho.values[0], rho.values[-1], nodes + 1)
    th = varrho(sig)
    tables = (lam_plus(th), lam_minus(th))
    return KZMap(curve=curve, rho=rho, varrho=varrho, lam_plus=lam_plus, lam_minus=lam_minus,
                 int_plus=int_plus, int_minus=int_minus, velocity_integral=vel_int,
                 sigma_grid=sig, lambda_tables=tables, nodes=int(nodes),
                 corrupted=bool(corrupt_lambda_minus))


def theta_map(kzmap, t, sigma):
    """``Theta(t, sigma)``; broadcasts ``t`` against ``sigma``."""
    t, sigma = np.broadcast_arrays(np.asarray(t, dtype=float), np.asarray(sigma, dtype=float))
    return kzmap.int_plus(kzmap.varrho(sigma + t)) - kzmap.int_minus(kzmap.varrho(sigma - t))


def theta_derivatives(kzmap, t, sigma):
    """Analytic ``(dTheta/dt, dTheta/dsigma)``."""
    t, sigma = np.broadcast_arrays(np.asarray(t, dtype=float), np.asarray(sigma, dtype=float))
    lp = kzmap.lam_plus(kzmap.varrho(sigma + t).ravel()).reshape(sigma.shape)
    lm = kzmap.lam_minus(kzmap.varrho(sigma - t).ravel()).reshape(sigma.shape)
    return 0.5 * (lp + lm), 0.5 * (lp - lm)


def phi_map(kzmap, t, theta, max_expansions=60):
    """``sigma = Phi(t, theta)``, the inverse of ``Theta(t, .)`` at fixed t."""
    t, theta = np.broadcast_arrays(np.asarray(t, dtype=float), np.asarray(theta, dtype=float))
    shape = theta.shape
    t, theta = t.ravel(), theta.ravel()
    guess = kzmap.rho(theta)
    width = np.abs(t) * kzmap.speed_bound() * kzmap.rho.integrand(theta) + 4.0 * kzmap.rho.h
    if kzmap.closed:
        limit = 4.0 * kzmap.Sigma
        clip_lo, clip_hi = -np.inf, np.inf
    else:
        s_lo, s_hi = kzmap.sigma_bounds
        clip_lo, clip_hi = s_lo + np.abs(t), s_hi - np.abs(t)
        if np.any(clip_lo > clip_hi):
            raise DomainOfDependenceError("time exceeds the domain of dependence of the line data")
        limit = 4.0 * (s_hi - s_lo)

    def fn(s):
        return theta_map(kzmap, t, s)

    lo = np.clip(guess - width, clip_lo, clip_hi)
    hi = np.clip(guess + width, clip_lo, clip_hi)
    for _ in range(max_expansions):
        bad_lo = fn(lo) > theta
        bad_hi = fn(hi) < theta
        if not (np.any(bad_lo) or np.any(bad_hi)):
            break
        width = np.where(bad_lo | bad_hi, 2.0 * width, width)
        if np.any(width > limit):
            raise BracketError("Phi root not bracketed within one period extension")
        new_lo = np.clip(guess - width, clip_lo, clip_hi)
        new_hi = np.clip(guess + width, clip_lo, clip_hi)
        if not kzmap.closed and np.any((bad_lo & (new_lo == lo)) | (bad_hi & (new_hi == hi))):
            raise DomainOfDependenceError("theta not reached inside the domain of dependence")
        lo, hi = np.where(bad_lo, new_lo, lo), np.where(bad_hi, new_hi, hi)
    else:
        raise BracketError("Phi root not bracketed")

    def dfn(s):
        return theta_derivatives(kzmap, t, s)[1]

    return invert_monotone(fn, dfn, theta, lo, hi).reshape(shape)


def kz_identity_residuals(kzmap, tangent_provider, times, sigma, step, sigma_step_ratio=0.5):
    """Finite-difference checks of the Theta derivative identities and wave equation.

    ``tangent_provider(t, theta)`` returns ``(x_t, x_theta)`` of the evolved
    string in the original ``(t, theta)`` chart.  The report holds max-norms:

    ``theta_t``      |FD dTheta/dt + g01/g11|
    ``theta_sigma``  |FD dTheta/dsigma - sqrt(g01^2 - g00 g11)/g11|
    ``theta_wave``   |FD Theta_tt - FD Theta_sigmasigma|

    The sigma step of the wave residual is ``sigma_step_ratio * step``; with
    equal steps the five-point stencil is exact on any d'Alembert solution and
    the residual would only measure rounding.
    """
    h = float(step)
    hs = sigma_step_ratio * h
    res15, res16, res17 = 0.0, 0.0, 0.0
    for t in np.atleast_1d(times):
        s = np.asarray(sigma, dtype=float)
        th = theta_map(kzmap, t, s)
        th_tp, th_tm = theta_map(kzmap, t + h, s), theta_map(kzmap, t - h, s)
        th_sp, th_sm = theta_map(kzmap, t, s + h), theta_map(kzmap, t, s - h)
        fd_t = (th_tp - th_tm) / (2 * h)
        fd_s = (th_sp - th_sm) / (2 * h)
        x_t, x_th = tangent_provider(t, th)
        m = induced_metric(x_t, x_th)
        res15 = max(res15, float(np.max(np.abs(fd_t + m.g01 / m.g11))))
        res16 = max(res16, float(np.max(np.abs(fd_s - np.sqrt(m.disc) / m.g11))))
        tt = (th_tp - 2 * th + th_tm) / h**2
        ss = (theta_map(kzmap, t, s + hs) - 2 * th + theta_map(kzmap, t, s - hs)) / hs**2
        res17 = max(res17, float(np.max(np.abs(tt - ss))))
    return ResidualReport(residuals={"theta_t": res15, "theta_sigma": res16, "theta_wave": res17},
                          metadata={"step": h, "sigma_step": hs, "points": int(np.size(sigma))})

"""Induced worldsheet metric, characteristic speeds and the normal projector.

The worldsheet is parametrised by ``(t, theta)`` with the time coordinate of
Minkowski space identified with ``t``.  Tangent vectors in R^{1+n} are
therefore ``X0 = (1, x_t)`` and ``X1 = (0, x_theta)`` and the ambient metric
is ``diag(-1, 1, ..., 1)``.

All functions accept a single point (vectors of shape ``(n,)``) or a batch
(arrays of shape ``(..., n)``) and broadcast over the leading axes.
"""
from __future__ import annotations

from dataclasses import dataclass

import numpy as np

from .errors import DegenerateCurveError, SpaceLikeError

IMMERSION_TOL = 1e-8
SINGULAR_TOL = 1e-12


@dataclass(frozen=True)
class MetricSample:
    g00: np.ndarray
    g01: np.ndarray
    g11: np.ndarray
    disc: np.ndarray
    lambda_plus: np.ndarray
    lambda_minus: np.ndarray

    @property
    def spacelike(self):
        """Boolean mask of samples with negative discriminant."""
        return np.asarray(self.disc) < 0.0

    @property
    def det(self):
        return self.g00 * self.g11 - self.g01**2


def metric_components(x_t, x_theta):
    """Return ``(g00, g01, g11)`` for tangent data ``x_t``, ``x_theta``."""
    x_t = np.asarray(x_t, dtype=float)
    x_theta = np.asarray(x_theta, dtype=float)
    g00 = np.sum(x_t * x_t, axis=-1) - 1.0
    g01 = np.sum(x_t * x_theta, axis=-1)
    g11 = np.sum(x_theta * x_theta, axis=-1)
    return g00, g01, g11


def characteristic_speeds(g00, g01, g11):
    """Roots ``(lambda_plus, lambda_minus)`` of ``g11 l^2 + 2 g01 l + g00 = 0``.

    Samples with negative discriminant yield NaN; callers decide what to do
    with them.  Nothing is clamped.
    """
    g00, g01, g11 = (np.asarray(a, dtype=float) for a in (g00, g01, g11))
    disc = g01 * g01 - g00 * g11
    with np.errstate(invalid="ignore", divide="ignore"):
        root = np.sqrt(disc)
        return (-g01 + root) / g11, (-g01 - root) / g11


def induced_metric(x_t, x_theta, immersion_tol=IMMERSION_TOL):
    """Induced metric and characteristic speeds at one point or a batch."""
    g00, g01, g11 = metric_components(x_t, x_theta)
    if np.any(np.sqrt(g11) < immersion_tol):
        raise DegenerateCurveError(
            f"|x_theta| = {float(np.sqrt(np.min(g11))):.3e} below immersion threshold {immersion_tol:g}"
        )
    disc = g01 * g01 - g00 * g11
    lp, lm = characteristic_speeds(g00, g01, g11)
    return MetricSample(g00=g00, g01=g01, g11=g11, disc=disc, lambda_plus=lp, lambda_minus=lm)


def eigen_speeds(sample):
    """``(lambda_plus, lambda_minus)`` of a sample; raises on space-like points."""
    if np.any(sample.disc < 0.0):
        raise SpaceLikeError(f"negative discriminant {float(np.min(sample.disc)):.3e} (space-like point)")
    return characteristic_speeds(sample.g00, sample.g01, sample.g11)


def ambient_metric(n):
    return np.diag(np.concatenate([[-1.0], np.ones(n)]))


def inverse_2x2(g00, g01, g11):
    """Closed-form inverse of the symmetric 2x2 metric, returned as components."""
    det = g00 * g11 - g01 * g01
    return g11 / det, -g01 / det, g00 / det


@dataclass(frozen=True)
class ProjectionCheck:
    X0: np.ndarray
    X1: np.ndarray
    g: np.ndarray
    g_inv: np.ndarray
    G: np.ndarray
    M: np.ndarray
    residual_x0: np.ndarray
    residual_x1: np.ndarray
    idempotence: np.ndarray

    def apply(self, vec):
        """``M @ vec`` broadcast over the batch axes."""
        return np.einsum("...ab,...b->...a", self.M, vec)


def tangent_vectors(x_t, x_theta):
    x_t = np.asarray(x_t, dtype=float)
    x_theta = np.asarray(x_theta, dtype=float)
    one = np.ones(x_t.shape[:-1] + (1,))
    X0 = np.concatenate([one, x_t], axis=-1)
    X1 = np.concatenate([np.zeros_like(one), x_theta], axis=-1)
    return X0, X1


def projection_audit(x_t, x_theta):
    """Build ``M = I - Q g^{-1} Q^T g~`` and measure how well it projects.

    Residuals are ``|M X0| / |X0|``, ``|M X1| / |X1|`` and the max-entry norm of
    ``M^2 - M``.
    """
    X0, X1 = tangent_vectors(x_t, x_theta)
    n1 = X0.shape[-1]
    amb = ambient_metric(n1 - 1)
    Q = np.stack([X0, X1], axis=-1)  # (..., 1+n, 2)
    g = np.einsum("...ai,ab,...bj->...ij", Q, amb, Q)
    det = g[..., 0, 0] * g[..., 1, 1] - g[..., 0, 1] ** 2
    if np.any(np.abs(det) <= SINGULAR_TOL):
        raise SpaceLikeError(f"singular induced metric, |det g| = {float(np.min(np.abs(det))):.3e}")
    i00, i01, i11 = inverse_2x2(g[..., 0, 0], g[..., 0, 1], g[..., 1, 1])
    g_inv = np.stack([np.stack([i00, i01], -1), np.stack([i01, i11], -1)], -2)
    G = np.einsum("...ai,...ij,...bj->...ab", Q, g_inv, Q)
    M = np.eye(n1) - G @ amb
    r0 = np.linalg.norm(np.einsum("...ab,...b->...a", M, X0), axis=-1) / np.linalg.norm(X0, axis=-1)
    r1 = np.linalg.norm(np.einsum("...ab,...b->...a", M, X1), axis=-1) / np.linalg.norm(X1, axis=-1)
    idem = np.max(np.abs(M @ M - M), axis=(-2, -1))
    return ProjectionCheck(X0=X0, X1=X1, g=g, g_inv=g_inv, G=G, M=M,
                           residual_x0=r0, residual_x1=r1, idempotence=idem)


def string_operator(x_t, x_theta, x_tt, x_ttheta, x_thetatheta):
    """Left-hand side ``E`` of the Minkowski string equations in R^{1+n}.

    ``E^C = g^{mu nu} x^C_{mu nu}``; the time component vanishes because
    ``x^0 = t`` is linear.
    """
    g00, g01, g11 = metric_components(x_t, x_theta)
    i00, i01, i11 = inverse_2x2(g00, g01, g11)
    space = (i00[..., None] * x_tt + 2.0 * i01[..., None] * x_ttheta
             + i11[..., None] * x_thetatheta)
    return np.concatenate([np.zeros(space.shape[:-1] + (1,)), space], axis=-1)

"""Prefix-sum antiderivative tables and their monotone inverses.

An :class:`AntiderivativeTable` stores composite-Simpson prefix sums of an
integrand that can be evaluated anywhere.  Between nodes the table adds one
Simpson panel over the partial cell, so the evaluator is continuous and the
per-call cost is O(1) regardless of the table size.
"""
from __future__ import annotations

import math

import numpy as np

from .errors import BracketError, DomainOfDependenceError

BISECTION_WIDTH = 1e-8
NEWTON_STEPS = 3


def _flat(x):
    x = np.asarray(x, dtype=float)
    return x.reshape(-1), x.shape


class AntiderivativeTable:
    """``A(x) = int_base^x f``, tabulated on ``nodes`` uniform cells.

    ``f`` maps a 1-D array to an array of shape ``(N,)`` or ``(N, k)``.  With
    ``periodic=True`` the integrand is assumed ``length``-periodic and
    ``A(x + length) = A(x) + increment``.
    """

    def __init__(self, integrand, start, length, nodes, periodic, base=0.0):
        if nodes < 2:
            raise ValueError("need at least two cells")
        self.integrand = integrand
        self.start = float(start)
        self.length = float(length)
        self.periodic = bool(periodic)
        self.h = self.length / nodes
        self.nodes = self.start + self.h * np.arange(nodes + 1)
        self._f_nodes = np.asarray(integrand(self.nodes), dtype=float)
        f_mid = np.asarray(integrand(self.nodes[:-1] + 0.5 * self.h), dtype=float)
        cells = self.h / 6.0 * (self._f_nodes[:-1] + 4.0 * f_mid + self._f_nodes[1:])
        # extended-precision accumulation keeps the running sum at a few ulps
        running = np.cumsum(cells.astype(np.longdouble), axis=0).astype(float)
        prefix = np.concatenate([np.zeros((1,) + cells.shape[1:]), running])
        self.values = prefix
        self.values = prefix - self._raw(np.array([float(base)]))[0]
        self.increment = prefix[-1] - prefix[0]

    @property
    def cells(self):
        return self.nodes.size - 1

    def _reduce(self, x):
        if self.periodic:
            k = np.floor((x - self.start) / self.length)
            return x - k * self.length, k
        lo, hi = self.nodes[0], self.nodes[-1]
        slack = 1e-12 * max(1.0, abs(lo), abs(hi))
        if np.any((x < lo - slack) | (x > hi + slack)):
            bad = x[(x < lo - slack) | (x > hi + slack)][0]
            raise DomainOfDependenceError(
                f"argument {bad:.17g} outside tabulated range [{lo:.17g}, {hi:.17g}]")
        return np.clip(x, lo, hi), np.zeros_like(x)

    def _raw(self, r):
        i = np.clip(np.floor((r - self.start) / self.h).astype(int), 0, self.cells - 1)
        a = self.nodes[i]
        d = r - a
        fa = self._f_nodes[i]
        fm = np.asarray(self.integrand(a + 0.5 * d), dtype=float)
        fr = np.asarray(self.integrand(r), dtype=float)
        if fa.ndim > 1:
            d = d[:, None]
        return self.values[i] + d / 6.0 * (fa + 4.0 * fm + fr)

    def __call__(self, x):
        flat, shape = _flat(x)
        r, k = self._reduce(flat)
        out = self._raw(r)
        if self.periodic:
            out = out + (k[:, None] * self.increment if out.ndim > 1 else k * self.increment)
        return out.reshape(shape + out.shape[1:])

    def derivative(self, x):
        flat, shape = _flat(x)
        out = np.asarray(self.integrand(flat), dtype=float)
        return out.reshape(shape + out.shape[1:])


class MonotoneTable(AntiderivativeTable):
    """Antiderivative of a strictly positive scalar integrand.

    The tabulated values are strictly increasing, so the table is invertible.
    For periodic tables ``f(x + period_in) = f(x) + period_out``.
    """

    def __init__(self, integrand, start, length, nodes, periodic, base=0.0):
        super().__init__(integrand, start, length, nodes, periodic, base)
        if self._f_nodes.ndim != 1:
            raise ValueError("monotone tables need a scalar integrand")
        steps = np.diff(self.values)
        if not np.all(steps > 0):
            raise ValueError(f"table not strictly increasing (min step {steps.min():.3e})")

    @property
    def period_in(self):
        return self.length if self.periodic else None

    @property
    def period_out(self):
        return float(self.increment) if self.periodic else None

    def inverse(self):
        return InverseTable(self)


class InverseTable:
    """Evaluator for the inverse of a :class:`MonotoneTable`.

    The node/value roles are swapped with respect to the forward table.
    Each evaluation locates the containing cell from the tabulated values,
    bisects to ``BISECTION_WIDTH`` and polishes with at most ``NEWTON_STEPS``
    Newton steps using the analytic integrand as derivative.
    """

    def __init__(self, forward):
        steps = np.diff(forward.values)
        if not np.all(steps > 0):
            raise ValueError("cannot invert a table that is not strictly increasing")
        self.forward = forward
        self.nodes = forward.values
        self.values = forward.nodes
        self.periodic = forward.periodic
        self.period_in = forward.period_out
        self.period_out = forward.period_in
        self._iters = max(1, math.ceil(math.log2(forward.h / BISECTION_WIDTH)))

    def __call__(self, y):
        flat, shape = _flat(y)
        fwd = self.forward
        y0 = self.nodes[0]
        if self.periodic:
            k = np.floor((flat - y0) / self.period_in)
            r = flat - k * self.period_in
        else:
            lo, hi = self.nodes[0], self.nodes[-1]
            slack = 1e-12 * max(1.0, abs(lo), abs(hi))
            outside = (flat < lo - slack) | (flat > hi + slack)
            if np.any(outside):
                raise DomainOfDependenceError(
                    f"value {flat[outside][0]:.17g} outside inverse range [{lo:.17g}, {hi:.17g}]")
            r, k = np.clip(flat, lo, hi), np.zeros_like(flat)
        i = np.clip(np.searchsorted(self.nodes, r, side="right") - 1, 0, fwd.cells - 1)
        lo = fwd.nodes[i].copy()
        hi = fwd.nodes[i + 1].copy()
        for _ in range(self._iters):
            mid = 0.5 * (lo + hi)
            below = fwd._raw(mid) < r
            lo = np.where(below, mid, lo)
            hi = np.where(below, hi, mid)
        x = 0.5 * (lo + hi)
        for _ in range(NEWTON_STEPS):
            step = (fwd._raw(x) - r) / fwd.integrand(x)
            x = np.clip(x - step, lo - BISECTION_WIDTH, hi + BISECTION_WIDTH)
        if self.periodic:
            x = x + k * self.period_out
        return x.reshape(shape)

    def derivative(self, y):
        return 1.0 / self.forward.derivative(self(y))


def invert_monotone(fn, dfn, target, lo, hi, width=BISECTION_WIDTH, newton_steps=NEWTON_STEPS):
    """Vectorised bracketed inversion of an increasing function.

    ``fn(x)`` must be increasing on every bracket ``[lo, hi]`` and
    ``fn(lo) <= target <= fn(hi)``.  Bisection to ``width`` then Newton polish.
    """
    lo = np.array(lo, dtype=float)
    hi = np.array(hi, dtype=float)
    iters = max(1, math.ceil(math.log2(max(float(np.max(hi - lo)), width) / width)))
    for _ in range(iters):
        mid = 0.5 * (lo + hi)
        below = fn(mid) < target
        lo = np.where(below, mid, lo)
        hi = np.where(below, hi, mid)
    x = 0.5 * (lo + hi)
    for _ in range(newton_steps):
        d = dfn(x)
        if not np.all(d > 0):
            raise BracketError("non-positive derivative during Newton polishing")
        x = np.clip(x - (fn(x) - target) / d, lo - width, hi + width)
    return x

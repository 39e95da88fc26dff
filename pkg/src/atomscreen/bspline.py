"""Clamped B-spline radial basis and per-interval Gauss-Legendre quadrature.

All radii are in bohr.  A basis of ``n_splines`` functions of order ``k``
(polynomial degree ``k - 1``) lives on ``n_splines - k + 1`` knot intervals
between 0 and ``r_max``.  Interior breakpoints follow either a uniform law
or the exponential law::

    r(t) = r_max * (exp(gamma * t) - 1) / (exp(gamma) - 1),   t uniform in [0, 1]

which packs breakpoints close to the nucleus.
"""

from __future__ import annotations

from dataclasses import dataclass, field
from functools import cached_property

import numpy as np
from scipy.optimize import brentq

from .errors import ConfigError

DEFAULT_FIRST_INTERVAL = 1.0e-4


@dataclass(frozen=True, eq=False)
class KnotSequence:
    """Breakpoints plus spline order; the clamped knot vector is derived."""

    breakpoints: np.ndarray
    order: int
    r_max: float
    gamma: float | None = None  # None means a uniform grid

    def __post_init__(self):
        bp = np.asarray(self.breakpoints, dtype=float)
        if bp.ndim != 1 or bp.size < 2:
            raise ConfigError("need at least two breakpoints")
        if np.any(np.diff(bp) <= 0.0):
            raise ConfigError("breakpoints must be strictly increasing")
        if bp[0] != 0.0 or bp[-1] != self.r_max:
            raise ConfigError("breakpoints must run from 0 to r_max")
        bp.setflags(write=False)
        object.__setattr__(self, "breakpoints", bp)

    @property
    def n_intervals(self) -> int:
        return self.breakpoints.size - 1

    @property
    def n_splines(self) -> int:
        return self.n_intervals + self.order - 1

    @cached_property
    def knots(self) -> np.ndarray:
        """Full knot vector with ``order``-fold repeated end points."""
        k = self.order
        t = np.concatenate([np.zeros(k - 1), self.breakpoints, np.full(k - 1, self.r_max)])
        t.setflags(write=False)
        return t

    def widths(self) -> np.ndarray:
        return np.diff(self.breakpoints)


def exponential_breakpoints(n_intervals: int, r_max: float, gamma: float) -> np.ndarray:
    t = np.linspace(0.0, 1.0, n_intervals + 1)
    bp = r_max * np.expm1(gamma * t) / np.expm1(gamma)
    bp[0] = 0.0
    bp[-1] = r_max
    return bp


def gamma_for_first_interval(n_splines: int, r_max: float, order: int,
                             first_interval: float = DEFAULT_FIRST_INTERVAL) -> float:
    """Clustering parameter giving a first knot interval of ``first_interval`` bohr."""
    if order < 1 or n_splines < 2 * order:
        raise ConfigError(f"invalid basis size: need n_splines >= 2k = {2 * order}, got {n_splines}")
    if not r_max > 0.0 or not first_interval > 0.0:
        raise ConfigError("r_max and first_interval must be positive")
    m = n_splines - order + 1
    uniform = r_max / m
    if first_interval >= uniform:
        raise ConfigError(
            f"first interval {first_interval} is not smaller than the uniform width {uniform}")

    def excess(g):
        return r_max * np.expm1(g / m) / np.expm1(g) - first_interval

    hi = 1.0
    while excess(hi) > 0.0:
        hi *= 2.0
        if hi > 512.0:  # expm1 overflows beyond ~709
            raise ConfigError(f"first interval {first_interval} needs excessive knot clustering")
    return float(brentq(excess, 1.0e-12, hi, xtol=1e-14, rtol=1e-14))


def build_knots(n_splines: int, r_max: float, order: int, gamma: float | None = None) -> KnotSequence:
    """Clamped knot sequence for ``n_splines`` B-splines of order ``order``.

    Parameters
    ----------
    n_splines : int
        Basis size before any boundary trimming; at least ``2 * order``.
    r_max : float
        Box radius in bohr.
    order : int
        Spline order ``k`` (degree ``k - 1``).
    gamma : float or None
        Exponential clustering parameter.  ``None`` gives uniform breakpoints.
    """
    if order < 1:
        raise ConfigError(f"spline order must be positive, got {order}")
    if n_splines < 2 * order:
        raise ConfigError(f"invalid basis size: need n_splines >= 2k = {2 * order}, got {n_splines}")
    if not r_max > 0.0:
        raise ConfigError(f"r_max must be positive, got {r_max}")
    m = n_splines - order + 1
    if gamma is None:
        bp = np.linspace(0.0, r_max, m + 1)
        bp[-1] = r_max
    else:
        if not gamma > 0.0:
            raise ConfigError(f"clustering parameter must be positive, got {gamma}")
        bp = exponential_breakpoints(m, r_max, gamma)
    return KnotSequence(bp, order, float(r_max), None if gamma is None else float(gamma))


def _span_index(knots: KnotSequence, r: np.ndarray) -> np.ndarray:
    """Interval index j with breakpoints[j] <= r < breakpoints[j+1]; r_max maps to the last one."""
    j = np.searchsorted(knots.breakpoints, r, side="right") - 1
    return np.clip(j, 0, knots.n_intervals - 1)


def _de_boor(t: np.ndarray, degree: int, mu: np.ndarray, x: np.ndarray) -> np.ndarray:
    """Nonzero B-spline values of ``degree`` at ``x`` in knot span ``mu``.

    Returns shape ``(len(x), degree + 1)``; column ``a`` belongs to spline
    ``mu - degree + a``.
    """
    m = x.size
    vals = np.zeros((m, degree + 1))
    vals[:, 0] = 1.0
    left = np.empty((m, degree + 1))
    right = np.empty((m, degree + 1))
    for j in range(1, degree + 1):
        left[:, j] = x - t[mu + 1 - j]
        right[:, j] = t[mu + j] - x
        saved = np.zeros(m)
        for r in range(j):
            temp = vals[:, r] / (right[:, r + 1] + left[:, j - r])
            vals[:, r] = saved + right[:, r + 1] * temp
            saved = left[:, j - r] * temp
        vals[:, j] = saved
    return vals


def _de_boor_derivative(t: np.ndarray, degree: int, mu: np.ndarray, x: np.ndarray) -> np.ndarray:
    """First derivatives of the nonzero splines, laid out like :func:`_de_boor`."""
    out = np.zeros((x.size, degree + 1))
    if degree == 0:
        return out
    p = degree
    low = _de_boor(t, p - 1, mu, x)  # splines mu-p+1 .. mu of degree p-1
    for a in range(p + 1):
        i = mu - p + a
        if a >= 1:
            out[:, a] += p * low[:, a - 1] / (t[i + p] - t[i])
        if a <= p - 1:
            out[:, a] -= p * low[:, a] / (t[i + p + 1] - t[i + 1])
    return out


@dataclass(frozen=True, eq=False)
class BSplineBasis:
    """B-spline basis on a knot sequence.

    ``drop_first``/``drop_last`` remove the only splines that are nonzero at
    r = 0 and r = r_max, which imposes u(0) = u(r_max) = 0 on the expansion.
    """

    knots: KnotSequence
    drop_first: bool = True
    drop_last: bool = True

    @property
    def order(self) -> int:
        return self.knots.order

    @property
    def n_splines(self) -> int:
        return self.knots.n_splines

    @property
    def first_active(self) -> int:
        return 1 if self.drop_first else 0

    @property
    def size(self) -> int:
        """Dimension after boundary trimming."""
        return self.n_splines - int(self.drop_first) - int(self.drop_last)

    def _check(self, r: np.ndarray):
        if np.any(~np.isfinite(r)) or np.any(r < 0.0) or np.any(r > self.knots.r_max):
            raise ConfigError(f"radius outside the box [0, {self.knots.r_max}]")

    def values(self, r) -> tuple[np.ndarray, np.ndarray]:
        """Vectorized evaluation over the full (untrimmed) basis.

        Returns ``(first, vals)`` where ``vals[p, a]`` is spline
        ``first[p] + a`` at ``r[p]``.
        """
        r = np.atleast_1d(np.asarray(r, dtype=float))
        self._check(r)
        j = _span_index(self.knots, r)
        p = self.order - 1
        return j, _de_boor(self.knots.knots, p, j + p, r)

    def derivatives(self, r) -> tuple[np.ndarray, np.ndarray]:
        """First derivatives, laid out like :meth:`values`."""
        r = np.atleast_1d(np.asarray(r, dtype=float))
        self._check(r)
        j = _span_index(self.knots, r)
        return j, _de_boor_derivative(self.knots.knots, self.order - 1, j + self.order - 1, r)


def eval_basis(basis: BSplineBasis, r: float) -> list[tuple[int, float]]:
    """Nonzero splines at a single radius as ``(index, value)`` pairs (untrimmed indexing)."""
    first, vals = basis.values(r)
    return [(int(first[0] + a), float(v)) for a, v in enumerate(vals[0]) if v != 0.0]


def eval_basis_derivative(basis: BSplineBasis, r: float) -> list[tuple[int, float]]:
    first, vals = basis.derivatives(r)
    return [(int(first[0] + a), float(v)) for a, v in enumerate(vals[0])]


@dataclass(frozen=True, eq=False)
class QuadratureRule:
    """Gauss-Legendre nodes and weights mapped onto every knot interval.

    ``nodes`` and ``weights`` have shape ``(n_intervals, nodes_per_interval)``.
    """

    nodes: np.ndarray
    weights: np.ndarray
    nodes_per_interval: int = field(default=0)

    @property
    def points(self) -> np.ndarray:
        return self.nodes.ravel()

    @property
    def flat_weights(self) -> np.ndarray:
        return self.weights.ravel()

    def integrate(self, f) -> float:
        """Integral of a vectorized callable over [0, r_max]."""
        return float(np.sum(self.weights * f(self.nodes)))


def build_quadrature(knots: KnotSequence, nodes_per_interval: int | None = None) -> QuadratureRule:
    q = knots.order if nodes_per_interval is None else int(nodes_per_interval)
    if q < knots.order:
        raise ConfigError(f"need at least k={knots.order} nodes per interval, got {q}")
    x, w = np.polynomial.legendre.leggauss(q)
    a = knots.breakpoints[:-1, None]
    h = np.diff(knots.breakpoints)[:, None]
    nodes = a + 0.5 * h * (x + 1.0)
    weights = 0.5 * h * w
    nodes.setflags(write=False)
    weights.setflags(write=False)
    return QuadratureRule(nodes, weights, q)


@dataclass(frozen=True, eq=False)
class BasisTable:
    """Spline values and derivatives at every quadrature node.

    ``values[e, q, a]`` is spline ``e + a`` (untrimmed indexing) at node ``q``
    of interval ``e``; ``derivs`` likewise.
    """

    basis: BSplineBasis
    rule: QuadratureRule
    values: np.ndarray
    derivs: np.ndarray


def tabulate(basis: BSplineBasis, rule: QuadratureRule) -> BasisTable:
    m, q = rule.nodes.shape
    # span taken from the interval index, never from searchsorted on the node
    k = basis.order
    p = k - 1
    r = rule.nodes.ravel()
    j = np.repeat(np.arange(m), q)
    t = basis.knots.knots
    vals = _de_boor(t, p, j + p, r)
    ders = _de_boor_derivative(t, p, j + p, r)
    return BasisTable(basis, rule, vals.reshape(m, q, k), ders.reshape(m, q, k))

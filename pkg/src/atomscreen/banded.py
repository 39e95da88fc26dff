"""Symmetric band matrices and the definite generalized eigenproblem H c = E S c.

Eigenvalues are located by Sturm counts of the pencil: by Sylvester's law of
inertia the number of negative pivots in the LDL^T factorization of
``H - sigma S`` equals the number of eigenvalues below ``sigma`` when S is
positive definite.  Counts at many shifts are evaluated together
(multisection) until every wanted eigenvalue sits alone in a narrow bracket;
eigenvectors then come from shifted inverse iteration and the eigenvalue is
taken as the Rayleigh quotient of the converged vector.
"""

from __future__ import annotations

from dataclasses import dataclass

import numpy as np
from scipy.linalg import lapack

from .errors import ConfigError, ConvergenceError, NotPositiveDefiniteError

MAX_INVERSE_ITERATIONS = 100
RESIDUAL_TOLERANCE = 1.0e-8


@dataclass(frozen=True, eq=False)
class SymmetricBandMatrix:
    """Upper band of a symmetric matrix in LAPACK ``ab`` layout.

    ``ab[bandwidth + i - j, j] == A[i, j]`` for ``max(0, j - bandwidth) <= i <= j``.
    """

    ab: np.ndarray

    def __post_init__(self):
        ab = np.asarray(self.ab, dtype=float)
        if ab.ndim != 2:
            raise ConfigError("band storage must be two-dimensional")
        object.__setattr__(self, "ab", ab)

    @property
    def dimension(self) -> int:
        return self.ab.shape[1]

    @property
    def bandwidth(self) -> int:
        return self.ab.shape[0] - 1

    @classmethod
    def zeros(cls, dimension: int, bandwidth: int) -> SymmetricBandMatrix:
        return cls(np.zeros((bandwidth + 1, dimension)))

    @classmethod
    def from_dense(cls, a: np.ndarray, bandwidth: int) -> SymmetricBandMatrix:
        a = np.asarray(a, dtype=float)
        n = a.shape[0]
        ab = np.zeros((bandwidth + 1, n))
        for d in range(bandwidth + 1):
            ab[bandwidth - d, d:] = np.diagonal(a, d)
        return cls(ab)

    def to_dense(self) -> np.ndarray:
        n, b = self.dimension, self.bandwidth
        a = np.zeros((n, n))
        for d in range(b + 1):
            diag = self.ab[b - d, d:]
            a += np.diag(diag, d)
            if d:
                a += np.diag(diag, -d)
        return a

    def diagonal(self) -> np.ndarray:
        return self.ab[self.bandwidth].copy()

    def matvec(self, x: np.ndarray) -> np.ndarray:
        n, b = self.dimension, self.bandwidth
        y = self.ab[b] * x
        for d in range(1, b + 1):
            upper = self.ab[b - d, d:]
            y[:-d] += upper * x[d:]
            y[d:] += upper * x[:-d]
        return y

    def combine(self, other: SymmetricBandMatrix, sigma: float) -> SymmetricBandMatrix:
        """``self - sigma * other`` with the wider of the two bandwidths."""
        if other.dimension != self.dimension:
            raise ConfigError("dimension mismatch")
        b = max(self.bandwidth, other.bandwidth)
        return SymmetricBandMatrix(_widen(self.ab, b) - sigma * _widen(other.ab, b))

    def general_band(self) -> np.ndarray:
        """Full band (``kl = ku = bandwidth``) laid out for LAPACK ``gbtrf``."""
        n, b = self.dimension, self.bandwidth
        out = np.zeros((3 * b + 1, n))
        # rows 0..b-1 are fill-in workspace for gbtrf
        out[b:2 * b + 1] = self.ab
        for d in range(1, b + 1):
            out[2 * b + d, :n - d] = self.ab[b - d, d:]
        return out


def _widen(ab: np.ndarray, bandwidth: int) -> np.ndarray:
    extra = bandwidth + 1 - ab.shape[0]
    if extra == 0:
        return ab
    return np.vstack([np.zeros((extra, ab.shape[1])), ab])


@dataclass(frozen=True, eq=False)
class BandCholesky:
    """Lower band Cholesky factor: ``lb[i - j, j] == L[i, j]``."""

    lb: np.ndarray

    @property
    def dimension(self) -> int:
        return self.lb.shape[1]

    @property
    def bandwidth(self) -> int:
        return self.lb.shape[0] - 1

    def to_dense(self) -> np.ndarray:
        n = self.dimension
        out = np.zeros((n, n))
        for d in range(self.bandwidth + 1):
            out += np.diag(self.lb[d, :n - d], -d)
        return out


def _windows(a: SymmetricBandMatrix) -> np.ndarray:
    """Band columns padded with ``bandwidth + 1`` identity columns at the end."""
    b = a.bandwidth
    pad = np.zeros((b + 1, b + 1))
    pad[b] = 1.0
    return np.hstack([a.ab, pad])


def cholesky_banded(s: SymmetricBandMatrix) -> BandCholesky:
    """Band Cholesky factor of a symmetric positive definite matrix.

    Raises
    ------
    NotPositiveDefiniteError
        On the first pivot that is not strictly positive.
    """
    n, b = s.dimension, s.bandwidth
    cols = _windows(s)
    lb = np.zeros((b + 1, n))
    w = np.zeros((b + 1, b + 1))
    for c in range(b + 1):
        w[: c + 1, c] = cols[b - c:, c]
        w[c, : c + 1] = cols[b - c:, c]
    for j in range(n):
        piv = w[0, 0]
        if not piv > 0.0:
            raise NotPositiveDefiniteError(f"non-positive pivot {piv:.3e} at index {j}")
        col = w[:, 0] / np.sqrt(piv)
        lb[:, j] = col
        nxt = np.empty_like(w)
        nxt[:b, :b] = w[1:, 1:] - np.outer(col[1:], col[1:])
        new = cols[:, j + b + 1]
        nxt[:, b] = new
        nxt[b, :] = new
        w = nxt
    # entries below the bottom row belong to padding
    for d in range(1, b + 1):
        lb[d, n - d:] = 0.0
    return BandCholesky(lb)


def inertia_counts(h: SymmetricBandMatrix, s: SymmetricBandMatrix, shifts) -> np.ndarray:
    """Number of pencil eigenvalues strictly below each shift.

    Counts the negative pivots of an unpivoted LDL^T factorization of
    ``H - sigma S`` for all shifts at once.
    """
    shifts = np.atleast_1d(np.asarray(shifts, dtype=float))
    b = max(h.bandwidth, s.bandwidth)
    n = h.dimension
    hc = _windows(SymmetricBandMatrix(_widen(h.ab, b)))
    sc = _windows(SymmetricBandMatrix(_widen(s.ab, b)))
    sc[b, n:] = 0.0  # padding must stay the identity after the shift
    scale = max(np.max(np.abs(h.ab)), np.max(np.abs(s.ab)) * np.max(np.abs(shifts)), 1.0)
    pivmin = np.finfo(float).tiny / np.finfo(float).eps * scale * scale

    m = shifts.size
    w = np.zeros((m, b + 1, b + 1))
    for c in range(b + 1):
        col = hc[b - c:, c][None, :] - shifts[:, None] * sc[b - c:, c][None, :]
        w[:, : c + 1, c] = col
        w[:, c, : c + 1] = col
    neg = np.zeros(m, dtype=np.int64)
    nxt = np.empty_like(w)
    for j in range(n):
        d = w[:, 0, 0]
        small = np.abs(d) < pivmin
        if np.any(small):
            d = np.where(small, -pivmin, d)
        neg += d < 0.0
        col = w[:, 1:, 0]
        nxt[:, :b, :b] = w[:, 1:, 1:] - col[:, :, None] * (col / d[:, None])[:, None, :]
        c = j + b + 1
        new = hc[:, c][None, :] - shifts[:, None] * sc[:, c][None, :]
        nxt[:, :, b] = new
        nxt[:, b, :] = new
        w, nxt = nxt, w
    return neg


def sturm_count(h: SymmetricBandMatrix, s: SymmetricBandMatrix, sigma: float) -> int:
    return int(inertia_counts(h, s, [sigma])[0])


@dataclass(frozen=True, eq=False)
class GeneralizedEigenSolution:
    """Lowest eigenpairs; ``eigenvectors[:, i]`` pairs with ``eigenvalues[i]``."""

    eigenvalues: np.ndarray
    eigenvectors: np.ndarray
    residuals: np.ndarray
    iterations: np.ndarray


class _Counter:
    """Memo of (shift, count) pairs for one pencil."""

    def __init__(self, h, s):
        self.h, self.s = h, s
        self.shifts = np.empty(0)
        self.counts = np.empty(0, dtype=np.int64)

    def evaluate(self, shifts):
        shifts = np.unique(np.asarray(shifts, dtype=float))
        shifts = shifts[~np.isin(shifts, self.shifts)]
        if shifts.size:
            counts = inertia_counts(self.h, self.s, shifts)
            self.shifts = np.concatenate([self.shifts, shifts])
            self.counts = np.concatenate([self.counts, counts])
            order = np.argsort(self.shifts)
            self.shifts, self.counts = self.shifts[order], self.counts[order]

    def bracket(self, i):
        """Tightest known ``[a, b)`` with count(a) <= i < count(b)."""
        below = self.counts <= i
        a_idx = np.nonzero(below)[0][-1]
        b_idx = np.nonzero(~below)[0][0]
        return (self.shifts[a_idx], self.shifts[b_idx],
                int(self.counts[a_idx]), int(self.counts[b_idx]))


def _initial_bounds(counter: _Counter, top: int):
    """Shifts with count 0 and count >= top."""
    lo, hi = -1.0, 1.0
    for _ in range(200):
        counter.evaluate([lo, hi])
        c_lo = counter.counts[counter.shifts == lo][0]
        c_hi = counter.counts[counter.shifts == hi][0]
        if c_lo == 0 and c_hi >= top:
            return
        if c_lo > 0:
            lo *= 4.0
        if c_hi < top:
            hi *= 4.0
    raise ConvergenceError("could not bracket the spectrum")


def locate_eigenvalues(h: SymmetricBandMatrix, s: SymmetricBandMatrix, count: int,
                       sections: int = 8, isolation: float = 0.05) -> list[tuple[float, float, int, int]]:
    """Brackets ``(a, b, count(a), count(b))`` for the ``count`` lowest eigenvalues.

    Each bracket is refined until it holds one eigenvalue and is narrower
    than ``isolation`` times the distance to the neighbouring brackets, or
    until it reaches roundoff width (a numerically degenerate cluster).
    """
    n = h.dimension
    top = min(count + 1, n)
    counter = _Counter(h, s)
    _initial_bounds(counter, top)
    targets = range(top)
    for _ in range(400):
        brackets = [counter.bracket(i) for i in targets]
        pending = []
        for i, (a, b, ca, cb) in enumerate(brackets):
            floor = 4.0 * np.finfo(float).eps * max(abs(a), abs(b), 1.0)
            if b - a <= floor:
                continue
            if ca != i or cb != i + 1:
                pending.append((a, b))
                continue
            gap = np.inf
            if i > 0:
                gap = min(gap, a - brackets[i - 1][1])
            if i + 1 < len(brackets):
                gap = min(gap, brackets[i + 1][0] - b)
            if i + 1 == n:
                gap = min(gap, max(abs(a), abs(b), 1.0))
            if b - a > isolation * gap:
                pending.append((a, b))
        if not pending:
            return [counter.bracket(i) for i in range(count)]
        shifts = [a + (b - a) * f for a, b in set(pending)
                  for f in np.arange(1, sections + 1) / (sections + 1)]
        counter.evaluate(shifts)
    raise ConvergenceError("eigenvalue isolation did not converge")


def _s_norm(s: SymmetricBandMatrix, x: np.ndarray) -> float:
    return float(np.sqrt(x @ s.matvec(x)))


def _first_significant(x: np.ndarray) -> int:
    big = np.abs(x) > 1e-8 * np.max(np.abs(x))
    return int(np.argmax(big))


def _tie_broken_order(values: np.ndarray, vecs: np.ndarray) -> list[int]:
    """Ascending order; numerically equal values sorted by first significant coefficient."""
    order = list(np.argsort(values, kind="stable"))
    out, run = [], [order[0]]
    for j in order[1:]:
        if values[j] - values[run[-1]] <= 1e-12 * max(abs(values[j]), 1.0):
            run.append(j)
        else:
            out += sorted(run, key=lambda c: _first_significant(vecs[:, c]))
            run = [j]
    return out + sorted(run, key=lambda c: _first_significant(vecs[:, c]))


def eigs_lowest(h: SymmetricBandMatrix, s: SymmetricBandMatrix, count: int,
                tol: float = RESIDUAL_TOLERANCE,
                max_iterations: int = MAX_INVERSE_ITERATIONS) -> GeneralizedEigenSolution:
    """The ``count`` algebraically smallest eigenpairs of ``H c = E S c``.

    Eigenvectors are S-orthonormal and their first significant coefficient
    is positive.

    Raises
    ------
    NotPositiveDefiniteError
        If S is not positive definite.
    ConvergenceError
        If a residual ``|H c - E S c| / |c|`` stays above ``tol``.
    """
    n = h.dimension
    if s.dimension != n:
        raise ConfigError("H and S differ in dimension")
    if not 1 <= count <= n:
        raise ConfigError(f"count must lie in [1, {n}], got {count}")
    cholesky_banded(s)

    brackets = locate_eigenvalues(h, s, count)
    gb_h = h.combine(s, 0.0)  # shared bandwidth
    b = gb_h.bandwidth
    rng = np.random.default_rng(12345)
    vectors: list[np.ndarray] = []
    values, residuals, iterations = [], [], []
    for i, (a, bb, ca, cb) in enumerate(brackets):
        sigma = 0.5 * (a + bb)
        lu, piv, info = lapack.dgbtrf(h.combine(s, sigma).general_band(), b, b)
        if info < 0:
            raise ConvergenceError(f"dgbtrf argument error {info}")
        if info > 0:
            # shift hit an eigenvalue exactly; nudge it inside the bracket
            sigma = a + 0.25 * (bb - a)
            lu, piv, info = lapack.dgbtrf(h.combine(s, sigma).general_band(), b, b)
        x = rng.standard_normal(n)
        res = np.inf
        best = None
        stalled = 0
        for it in range(1, max_iterations + 1):
            y, info = lapack.dgbtrs(lu, b, b, s.matvec(x), piv)
            if info != 0:
                raise ConvergenceError(f"dgbtrs failed with info={info}")
            for v in vectors:
                y -= v * (v @ s.matvec(y))
            x = y / _s_norm(s, y)
            rq = float(x @ h.matvec(x))
            r = np.linalg.norm(h.matvec(x) - rq * s.matvec(x)) / np.linalg.norm(x)
            if best is None or r < 0.5 * res:
                stalled = 0
            else:
                stalled += 1
            if best is None or r < res:
                res, best = r, (x.copy(), rq, it)
            if res <= 1e-3 * tol or stalled >= 3:
                break
        x, rq, it = best
        if res > tol:
            raise ConvergenceError(
                f"eigenpair {i}: residual {res:.3e} above {tol:.1e} after {it} iterations")
        slack = 1e-10 * max(abs(a), abs(bb), 1.0)
        if not (a - slack <= rq <= bb + slack) and cb - ca == 1:
            raise ConvergenceError(f"eigenpair {i}: Rayleigh quotient {rq} left its bracket [{a}, {bb}]")
        if x[_first_significant(x)] < 0.0:
            x = -x
        vectors.append(x)
        values.append(rq)
        residuals.append(res)
        iterations.append(it)

    values = np.array(values)
    vecs = np.column_stack(vectors)
    order = _tie_broken_order(values, vecs)
    return GeneralizedEigenSolution(values[order], vecs[:, order],
                                    np.array(residuals)[order], np.array(iterations)[order])

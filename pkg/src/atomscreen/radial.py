"""Radial one-electron Hamiltonian in a B-spline box and its bound states.

With u(r) = r R(r) expanded in B-splines, the matrix elements are

    S_ij = int B_i B_j dr
    H_ij = 1/2 int B_i' B_j' dr + int B_i [V(r) + l(l+1)/(2 r^2)] B_j dr

so only first derivatives are ever integrated and H stays symmetric.
"""

from __future__ import annotations

from dataclasses import asdict, dataclass, field
from functools import lru_cache

import numpy as np

from .banded import SymmetricBandMatrix, cholesky_banded, eigs_lowest, sturm_count
from .bspline import (
    DEFAULT_FIRST_INTERVAL,
    BasisTable,
    BSplineBasis,
    QuadratureRule,
    build_knots,
    build_quadrature,
    gamma_for_first_interval,
    tabulate,
)
from .errors import ConfigError, LabelError, MissingOrbitalError, NotPositiveDefiniteError
from .potentials import PotentialModel, potential_value

BOUND_CUTOFF = -1.0e-6  # hartree; states above are box/continuum artifacts
NODE_THRESHOLD = 1.0e-7


@dataclass(frozen=True)
class SolverConfig:
    """Radial box and basis settings.

    ``gamma=None`` derives the clustering parameter from ``first_interval``;
    ``grid="uniform"`` ignores both.
    """

    n_splines: int = 600
    r_max: float = 200.0
    order: int = 10
    gamma: float | None = None
    first_interval: float = DEFAULT_FIRST_INTERVAL
    quad_nodes: int | None = None
    grid: str = "exponential"

    def __post_init__(self):
        if self.grid not in ("exponential", "uniform"):
            raise ConfigError(f"unknown grid law {self.grid!r}")
        if self.quad_nodes is not None and self.quad_nodes < self.order:
            raise ConfigError(f"quad_nodes must be >= order ({self.order})")

    def resolved_gamma(self) -> float | None:
        if self.grid == "uniform":
            return None
        if self.gamma is not None:
            return float(self.gamma)
        return gamma_for_first_interval(self.n_splines, self.r_max, self.order, self.first_interval)

    def snapshot(self) -> dict:
        d = asdict(self)
        d["gamma_resolved"] = self.resolved_gamma()
        d["quad_nodes_resolved"] = self.quad_nodes or self.order
        return d


@dataclass(frozen=True, eq=False)
class BoundState:
    principal_n: int
    l: int
    energy_raw: float  # hartree, before occupancy scaling
    nodes: int
    coefficients: np.ndarray = field(repr=False)
    norm_check: float = 0.0
    residual: float = 0.0


@dataclass(frozen=True, eq=False)
class Spectrum:
    """Bound states keyed by ``(principal_n, l)`` plus the solver settings used."""

    model: PotentialModel
    states: dict
    config: dict

    def energy(self, principal_n: int, l: int) -> float:
        return self.states[(principal_n, l)].energy_raw

    def merged(self, other: Spectrum) -> Spectrum:
        if other.model != self.model:
            raise ConfigError("cannot merge spectra of different models")
        dup = set(self.states) & set(other.states)
        if dup:
            raise ConfigError(f"duplicate states {sorted(dup)}")
        return Spectrum(self.model, {**self.states, **other.states}, self.config)


def _band_assemble(table: BasisTable, left: np.ndarray, right: np.ndarray, weight: np.ndarray) -> np.ndarray:
    """Upper band of int left_i * weight * right_j over the untrimmed basis."""
    m, q, k = table.values.shape
    bw = k - 1
    blocks = np.einsum("eq,eqa,eqb->eab", weight, left, right)
    ab = np.zeros((k, m + k - 1))
    for a in range(k):
        for b in range(a, k):
            ab[bw + a - b, b:b + m] += blocks[:, a, b]
    return ab


def _trim(basis: BSplineBasis, ab: np.ndarray) -> SymmetricBandMatrix:
    lo = basis.first_active
    hi = lo + basis.size
    sub = ab[:, lo:hi].copy()
    bw = ab.shape[0] - 1
    for d in range(1, bw + 1):
        sub[bw - d, :d] = 0.0
    return SymmetricBandMatrix(sub)


def assemble(model: PotentialModel, l: int, basis: BSplineBasis, rule: QuadratureRule,
             table: BasisTable | None = None) -> tuple[SymmetricBandMatrix, SymmetricBandMatrix]:
    """Hamiltonian and overlap band matrices for angular momentum ``l``.

    Raises ``NotPositiveDefiniteError`` if the overlap is not SPD, which
    points at a broken knot sequence or order.
    """
    if l < 0:
        raise ConfigError(f"angular momentum must be >= 0, got {l}")
    if table is None:
        table = tabulate(basis, rule)
    w = rule.weights
    s_ab = _band_assemble(table, table.values, table.values, w)
    t_ab = _band_assemble(table, table.derivs, table.derivs, 0.5 * w)
    v = potential_value(model, l, rule.nodes)
    v_ab = _band_assemble(table, table.values, table.values, w * v)
    S = _trim(basis, s_ab)
    try:
        cholesky_banded(S)
    except NotPositiveDefiniteError as exc:
        raise NotPositiveDefiniteError(f"overlap matrix is singular: {exc}") from exc
    return _trim(basis, t_ab + v_ab), S


def count_nodes(u: np.ndarray, threshold: float = NODE_THRESHOLD) -> int:
    """Sign changes of ``u`` ignoring samples below ``threshold * max|u|``."""
    big = np.abs(u) > threshold * np.max(np.abs(u))
    signs = np.sign(u[big])
    return int(np.count_nonzero(signs[1:] != signs[:-1]))


def _radial_samples(table: BasisTable, basis: BSplineBasis, coef: np.ndarray) -> np.ndarray:
    m, q, k = table.values.shape
    full = np.zeros(basis.n_splines)
    full[basis.first_active:basis.first_active + basis.size] = coef
    idx = np.arange(m)[:, None] + np.arange(k)[None, :]
    return np.einsum("eqa,ea->eq", table.values, full[idx]).ravel()


class RadialSolver:
    """Basis, quadrature and tabulated splines for one :class:`SolverConfig`.

    Solved l-blocks are memoized; a request for fewer states than already
    computed is served from the larger solve.
    """

    def __init__(self, config: SolverConfig = SolverConfig()):
        self.config = config
        knots = build_knots(config.n_splines, config.r_max, config.order, config.resolved_gamma())
        self.basis = BSplineBasis(knots)
        self.rule = build_quadrature(knots, config.quad_nodes)
        self.table = tabulate(self.basis, self.rule)
        self._cache: dict = {}

    def assemble(self, model: PotentialModel, l: int):
        return assemble(model, l, self.basis, self.rule, self.table)

    def solve(self, model: PotentialModel, l: int, count: int) -> Spectrum:
        key = (model, l)
        cached = self._cache.get(key)
        if cached is None or cached[0] < count:
            spec = solve_spectrum(model, l, count, self.basis, self.rule,
                                  table=self.table, config=self.config)
            cached = self._cache[key] = (count, spec)
        spec = cached[1]
        if cached[0] == count:
            return spec
        keep = {k: v for k, v in spec.states.items() if v.nodes < count}
        return Spectrum(model, keep, spec.config)

    def spectrum(self, model: PotentialModel, n_max: int, l_max: int) -> Spectrum:
        """All bound states with principal number <= ``n_max`` and l <= ``l_max``."""
        if n_max < l_max + 1:
            raise ConfigError(f"n_max={n_max} must be at least l_max + 1 = {l_max + 1}")
        out = None
        for l in range(l_max + 1):
            part = self.solve(model, l, n_max - l)
            out = part if out is None else out.merged(part)
        return out

    def state(self, model: PotentialModel, principal_n: int, l: int) -> BoundState:
        spec = self.solve(model, l, principal_n - l)
        try:
            return spec.states[(principal_n, l)]
        except KeyError:
            raise MissingOrbitalError(
                f"state n={principal_n}, l={l} is not bound for {model.label()}") from None


@lru_cache(maxsize=8)
def get_solver(config: SolverConfig = SolverConfig()) -> RadialSolver:
    return RadialSolver(config)


def solve_spectrum(model: PotentialModel, l: int, count: int, basis: BSplineBasis,
                   rule: QuadratureRule, table: BasisTable | None = None,
                   config: SolverConfig | None = None) -> Spectrum:
    """Lowest ``count`` bound states of angular momentum ``l``, labelled by node count.

    Fewer states are returned when fewer lie below the bound-state cutoff.
    """
    if count < 1:
        raise ConfigError(f"count must be >= 1, got {count}")
    if table is None:
        table = tabulate(basis, rule)
    H, S = assemble(model, l, basis, rule, table)
    bound = sturm_count(H, S, BOUND_CUTOFF)
    wanted = min(count, bound)
    snapshot = config.snapshot() if config is not None else {
        "n_splines": basis.n_splines, "r_max": basis.knots.r_max,
        "order": basis.order, "gamma_resolved": basis.knots.gamma,
        "quad_nodes_resolved": rule.nodes_per_interval}
    states = {}
    if wanted == 0:
        return Spectrum(model, states, snapshot)
    sol = eigs_lowest(H, S, wanted)
    for i in range(wanted):
        c = sol.eigenvectors[:, i]
        nodes = count_nodes(_radial_samples(table, basis, c))
        if nodes != i:
            raise LabelError(
                f"{model.label()}, l={l}: state {i} (E={sol.eigenvalues[i]:.10f}) has {nodes} nodes")
        n = nodes + l + 1
        norm = abs(float(c @ S.matvec(c)) - 1.0)
        states[(n, l)] = BoundState(n, l, float(sol.eigenvalues[i]), nodes, c, norm,
                                    float(sol.residuals[i]))
    return Spectrum(model, states, snapshot)

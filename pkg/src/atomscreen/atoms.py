"""Element data, occupancy scaling and derived observables.

A raw one-electron eigenvalue is scaled by m/n, where n is the electron
count and m the number of non-vanishing permutation integrals of the ground
configuration.  The ionization potential is minus the scaled energy of the
outermost orbital.
"""

from __future__ import annotations

import csv
import io
from dataclasses import dataclass, replace
from fractions import Fraction

from .errors import ConfigError
from .potentials import ModelKind, PotentialModel
from .radial import RadialSolver, SolverConfig, get_solver

HARTREE_EV = 27.211386245988
HARTREE_EV_ROUNDED = 27.2  # older tables often convert with this value

L_LETTERS = "spdfghik"


def orbital_label(n: int, l: int) -> str:
    return f"{n}{L_LETTERS[l]}"


def parse_orbital(label: str) -> tuple[int, int]:
    label = label.strip().lower()
    try:
        return int(label[:-1]), L_LETTERS.index(label[-1])
    except (ValueError, IndexError):
        raise ConfigError(f"bad orbital label {label!r}") from None


@dataclass(frozen=True)
class ElementRecord:
    symbol: str
    Z: int
    n_electrons: int
    m: int
    outermost: tuple[int, int]  # (principal n, l)
    reference_ip_eV: float | None = None

    def __post_init__(self):
        if not 1 <= self.m <= self.n_electrons:
            raise ConfigError(f"{self.symbol}: m={self.m} outside [1, {self.n_electrons}]")
        n, l = self.outermost
        if not 0 <= l < n:
            raise ConfigError(f"{self.symbol}: bad outermost orbital {self.outermost}")

    @property
    def occupancy(self) -> Fraction:
        return Fraction(self.m, self.n_electrons)

    @property
    def occupancy_label(self) -> str:
        # unreduced, e.g. 5/10
        return f"{self.m}/{self.n_electrons}"

    @property
    def outermost_label(self) -> str:
        return orbital_label(*self.outermost)

    def with_m(self, m: int) -> ElementRecord:
        return replace(self, m=m)

    def model(self, kind) -> PotentialModel:
        return PotentialModel(ModelKind.parse(kind), self.Z, self.n_electrons)


_TABLE = (
    # symbol, Z, m, outermost, reference IP (eV)
    ("H", 1, 1, (1, 0), None),
    ("He", 2, 2, (1, 0), 24.60),
    ("Li", 3, 2, (2, 0), 5.39),
    ("Be", 4, 3, (2, 0), 9.32),
    ("B", 5, 3, (2, 1), 8.30),
    ("C", 6, 4, (2, 1), 11.26),
    ("N", 7, 4, (2, 1), 14.53),
    ("O", 8, 4, (2, 1), 13.62),
    ("F", 9, 5, (2, 1), 17.42),
    ("Ne", 10, 5, (2, 1), 21.56),
    ("Na", 11, 2, (3, 0), 5.14),
    ("Mg", 12, 2, (3, 0), 7.65),
)


def builtin_elements() -> tuple[ElementRecord, ...]:
    """Neutral atoms H through Mg with their occupancy integers."""
    return tuple(ElementRecord(sym, z, z, m, orb, ref) for sym, z, m, orb, ref in _TABLE)


def element(symbol: str, m_override: dict | None = None) -> ElementRecord:
    for rec in builtin_elements():
        if rec.symbol.lower() == symbol.strip().lower():
            if m_override and rec.symbol in m_override:
                return rec.with_m(int(m_override[rec.symbol]))
            return rec
    raise ConfigError(f"unknown element {symbol!r}")


def catalog_csv(records=None) -> str:
    records = builtin_elements() if records is None else records
    buf = io.StringIO()
    w = csv.writer(buf, lineterminator="\n")
    w.writerow(["symbol", "Z", "n", "m", "outermost", "ref_ip_eV"])
    for r in records:
        ref = "" if r.reference_ip_eV is None else repr(r.reference_ip_eV)
        w.writerow([r.symbol, r.Z, r.n_electrons, r.m, r.outermost_label, ref])
    return buf.getvalue()


def scale_energy(raw: float, rec: ElementRecord) -> float:
    """Occupancy-scaled energy (m/n) * raw, in the units of ``raw``."""
    return raw * rec.m / rec.n_electrons


def _solver(solver) -> RadialSolver:
    if isinstance(solver, RadialSolver):
        return solver
    return get_solver(solver if solver is not None else SolverConfig())


@dataclass(frozen=True)
class IonizationResult:
    element: ElementRecord
    model: ModelKind
    energy_raw: float       # hartree
    energy_scaled: float    # hartree
    energy_scaled_eV: float
    ip_eV: float
    hartree_ev: float
    config: dict

    @property
    def reference_ip_eV(self) -> float | None:
        return self.element.reference_ip_eV


def ionization_potential(rec: ElementRecord, model_kind, solver=None,
                         hartree_ev: float = HARTREE_EV) -> IonizationResult:
    """IP of the outermost orbital of ``rec`` under the chosen potential model."""
    s = _solver(solver)
    kind = ModelKind.parse(model_kind)
    state = s.state(rec.model(kind), *rec.outermost)
    scaled = scale_energy(state.energy_raw, rec)
    ev = scaled * hartree_ev
    return IonizationResult(rec, kind, state.energy_raw, scaled, ev, -ev, hartree_ev, s.config.snapshot())


@dataclass(frozen=True)
class LevelRow:
    label: str
    principal_n: int
    l: int
    energy_raw: float
    energy_scaled: float
    energy_scaled_eV: float


def excited_spectrum(rec: ElementRecord, model_kind, n_max: int, l_max: int, solver=None,
                     hartree_ev: float = HARTREE_EV, n_min: int | None = None) -> list[LevelRow]:
    """Scaled levels from the outermost shell (or ``n_min``) up to ``n_max``.

    Rows are ordered by principal number, then l.
    """
    if n_max < l_max + 1:
        raise ConfigError(f"n_max={n_max} must be at least l_max + 1")
    s = _solver(solver)
    n_min = rec.outermost[0] if n_min is None else n_min
    spec = s.spectrum(rec.model(model_kind), n_max, l_max)
    rows = []
    for (n, l), st in sorted(spec.states.items()):
        if n < n_min:
            continue
        scaled = scale_energy(st.energy_raw, rec)
        rows.append(LevelRow(orbital_label(n, l), n, l, st.energy_raw, scaled, scaled * hartree_ev))
    return rows

"""Screened one-electron potentials for n-electron atoms and ions.

Three models share the form V(r) = -Z/r + screening(r)/r (Hartree atomic units):

``coulomb``
    no screening.
``v1`` (constant screening)
    screening = (n-1)/2 * [2Z/(n-1)]^(1/3), i.e. pure Coulomb with a reduced
    charge Z_eff.
``v2`` (varying screening)
    screening(r) = (n-1) [Z/(2(n-1))]^(3/5) * zeta(r), where zeta approximates
    the expectation value of the pair partition weight raised to 3/5 over a
    hydrogenic density.

The pair interaction is shared with weight 1/2 between the two electrons.
"""

from __future__ import annotations

import enum
import math
import warnings
from dataclasses import dataclass

import numpy as np
from scipy import integrate
from scipy.special import binom

from .errors import ConfigError, ConvergenceError, NonPhysicalError

PAIR_SHARE = 0.5
ZETA_EXPONENT = 0.6
DIVERGENT_ZR = 0.05  # below this Z*r the closed-form zeta leaves its small-r validity


class ModelKind(str, enum.Enum):
    COULOMB = "coulomb"
    CONSTANT = "v1"
    VARYING = "v2"

    @classmethod
    def parse(cls, value) -> ModelKind:
        if isinstance(value, cls):
            return value
        aliases = {"bare": cls.COULOMB, "constant": cls.CONSTANT, "varying": cls.VARYING}
        key = str(value).strip().lower()
        if key in aliases:
            return aliases[key]
        try:
            return cls(key)
        except ValueError:
            raise ConfigError(f"unknown model {value!r}; expected one of v1, v2, coulomb") from None


def v1_effective_charge(Z: float, n: int) -> float:
    """Reduced nuclear charge of the constant-screening model.

    Raises ``NonPhysicalError`` if the screening cancels the nucleus.
    """
    if n < 1:
        raise ConfigError(f"electron count must be >= 1, got {n}")
    if n == 1:
        return float(Z)
    zeff = Z - (n - 1) * PAIR_SHARE * (2.0 * Z / (n - 1)) ** (1.0 / 3.0)
    if not zeff > 0.0:
        raise NonPhysicalError(f"constant screening leaves Z_eff = {zeff:.6f} <= 0 for Z={Z}, n={n}")
    return zeff


def v2_screening_amplitude(Z: float, n: int) -> float:
    """Prefactor (n-1) [Z/(2(n-1))]^(3/5) multiplying zeta(r)/r."""
    if n < 1:
        raise ConfigError(f"electron count must be >= 1, got {n}")
    if n == 1:
        return 0.0
    return (n - 1) * (Z / (2.0 * (n - 1))) ** ZETA_EXPONENT


def v2_asymptotic_charge(Z: float, n: int) -> float:
    return Z - v2_screening_amplitude(Z, n)


def v1_eigenvalue_analytic(Z: float, n: int, principal: int) -> float:
    """Hydrogenic level -Z_eff^2 / (2 principal^2) of the constant-screening model, any l."""
    if principal < 1:
        raise ConfigError(f"principal quantum number must be >= 1, got {principal}")
    return -v1_effective_charge(Z, n) ** 2 / (2.0 * principal**2)


def _positive_radius(r) -> np.ndarray:
    r = np.asarray(r, dtype=float)
    if np.any(~(r > 0.0)):
        raise ConfigError("radius must be positive")
    return r


def zeta(Z: float, r):
    """Closed-form screening factor.

    zeta(r) = 1 - [27/25 + (6/5) Z r - 6/(125 Z r)] exp(-2 Z r)

    Tends to 1 at large r and diverges like 6/(125 Z r) as r -> 0.
    """
    r = _positive_radius(r)
    x = Z * r
    out = 1.0 - (27.0 / 25.0 + 1.2 * x - 6.0 / (125.0 * x)) * np.exp(-2.0 * x)
    return out if out.ndim else float(out)


def partition_f(r_i: float, r_j: float) -> float:
    """Share r_i^2 / (r_i^2 + r_j^2) of a pair interaction given to electron i."""
    if r_i < 0.0 or r_j < 0.0:
        raise ConfigError("radii must be non-negative")
    denom = r_i * r_i + r_j * r_j
    if denom == 0.0:
        raise ConfigError("partition weight undefined for r_i = r_j = 0")
    return r_i * r_i / denom


@dataclass(frozen=True)
class PotentialModel:
    """Tagged potential with nuclear charge ``Z`` and electron count ``n_electrons``."""

    kind: ModelKind
    Z: float
    n_electrons: int
    alpha: float = PAIR_SHARE

    def __post_init__(self):
        object.__setattr__(self, "kind", ModelKind.parse(self.kind))
        if not self.Z > 0:
            raise ConfigError(f"nuclear charge must be positive, got {self.Z}")
        if self.n_electrons < 1:
            raise ConfigError(f"electron count must be >= 1, got {self.n_electrons}")
        if self.alpha != PAIR_SHARE:
            raise ConfigError("only equal sharing (alpha = 1/2) of the pair interaction is supported")
        if self.kind is ModelKind.CONSTANT:
            v1_effective_charge(self.Z, self.n_electrons)
        elif self.kind is ModelKind.VARYING:
            zinf = v2_asymptotic_charge(self.Z, self.n_electrons)
            if not zinf > 0.0:
                raise NonPhysicalError(
                    f"varying screening leaves asymptotic charge {zinf:.6f} <= 0 "
                    f"for Z={self.Z}, n={self.n_electrons}")

    @property
    def screened(self) -> bool:
        return self.kind is not ModelKind.COULOMB and self.n_electrons > 1

    @property
    def asymptotic_charge(self) -> float:
        if not self.screened:
            return float(self.Z)
        if self.kind is ModelKind.CONSTANT:
            return v1_effective_charge(self.Z, self.n_electrons)
        return v2_asymptotic_charge(self.Z, self.n_electrons)

    def radial(self, r):
        """V(r) without the centrifugal term; ``r`` must be positive."""
        r = _positive_radius(r)
        if not self.screened:
            return -self.Z / r
        if self.kind is ModelKind.CONSTANT:
            return -v1_effective_charge(self.Z, self.n_electrons) / r
        amp = v2_screening_amplitude(self.Z, self.n_electrons)
        return (-self.Z + amp * zeta(self.Z, r)) / r

    def label(self) -> str:
        return f"{self.kind.value}(Z={self.Z:g}, n={self.n_electrons})"


def potential_value(model: PotentialModel, l: int, r):
    """Effective radial potential including l(l+1)/(2 r^2), in hartree."""
    if l < 0:
        raise ConfigError(f"angular momentum must be >= 0, got {l}")
    r = _positive_radius(r)
    out = model.radial(r) + l * (l + 1) / (2.0 * r * r)
    return out if np.ndim(out) else float(out)


class Orientation(str, enum.Enum):
    """Which radius sits in the numerator of the partition weight being averaged."""

    ACTIVE = "active"    # r_i^2 / (r_i^2 + r_j^2)
    PASSIVE = "passive"  # r_j^2 / (r_i^2 + r_j^2)


@dataclass(frozen=True)
class ZetaTruncation:
    """Binomial truncation of (1 + t^2)^(-3/5); ``k_max=None`` keeps the exact factor."""

    k_max: int | None = 1
    epsabs: float = 1e-12
    epsrel: float = 1e-10
    limit: int = 200

    def __post_init__(self):
        if self.k_max is not None and self.k_max < 0:
            raise ConfigError(f"k_max must be >= 0, got {self.k_max}")


def _damping(t, trunc: ZetaTruncation):
    if trunc.k_max is None:
        return (1.0 + t * t) ** (-ZETA_EXPONENT)
    t2 = t * t
    return sum(binom(-ZETA_EXPONENT, k) * t2**k for k in range(trunc.k_max + 1))


def zeta_quadrature_oracle(Z: float, r_i: float, trunc: ZetaTruncation = ZetaTruncation(),
                           orientation: Orientation | str = Orientation.ACTIVE) -> float:
    """Average of the partition weight to the 3/5 over the density r^2 exp(-2 Z r).

    The integral is split at r_j = r_i with t = r_< / r_>.  The weight is
    t^(6/5) (1 + t^2)^(-3/5) on the side where the numerator radius is the
    smaller one and (1 + t^2)^(-3/5) on the other; the second factor is
    optionally replaced by its truncated binomial series.  The density is
    normalized by its integral 1/(4 Z^3).
    """
    orientation = Orientation(orientation)
    if not r_i > 0.0:
        raise ConfigError("r_i must be positive")
    if not Z > 0.0:
        raise ConfigError("Z must be positive")

    def weight(r_j, inner):
        t = r_j / r_i if inner else r_i / r_j
        # inner piece (r_j < r_i): numerator r_j is the smaller radius for PASSIVE
        small_numerator = inner == (orientation is Orientation.PASSIVE)
        g = _damping(t, trunc)
        if small_numerator:
            g = t ** (2.0 * ZETA_EXPONENT) * g
        return g * r_j * r_j * math.exp(-2.0 * Z * r_j)

    opts = dict(epsabs=trunc.epsabs * 0.25 / Z**3, epsrel=trunc.epsrel, limit=trunc.limit)
    with warnings.catch_warnings():
        warnings.simplefilter("error", integrate.IntegrationWarning)
        try:
            a, err_a = integrate.quad(weight, 0.0, r_i, args=(True,), **opts)
            b, err_b = integrate.quad(weight, r_i, np.inf, args=(False,), **opts)
        except integrate.IntegrationWarning as exc:
            raise ConvergenceError(f"oracle quadrature failed at Z={Z}, r={r_i}: {exc}") from exc
    return 4.0 * Z**3 * (a + b)

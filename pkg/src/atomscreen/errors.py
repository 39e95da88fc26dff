"""Exception types raised across the package."""

from __future__ import annotations


class AtomScreenError(Exception):
    """Base class for all package errors."""


class ConfigError(AtomScreenError, ValueError):
    """Invalid solver, basis or model configuration."""


class NonPhysicalError(AtomScreenError, ValueError):
    """A potential model whose effective charge is not positive."""


class NotPositiveDefiniteError(AtomScreenError, ArithmeticError):
    """A non-positive pivot during a Cholesky factorization."""


class ConvergenceError(AtomScreenError, RuntimeError):
    """An iterative procedure failed to meet its tolerance."""


class LabelError(AtomScreenError, RuntimeError):
    """Node counts of computed states disagree with their energy ordering."""


class MissingOrbitalError(AtomScreenError, LookupError):
    """A requested (n, l) state is not bound in the computed spectrum."""


class ReferenceParseError(AtomScreenError, ValueError):
    """Malformed reference table."""

    def __init__(self, reason: str, line: int | None = None, column: str | None = None, path=None):
        self.reason = reason
        self.line = line
        self.column = column
        self.path = path
        where = []
        if path is not None:
            where.append(str(path))
        if line is not None:
            where.append(f"line {line}")
        if column is not None:
            where.append(f"column {column!r}")
        prefix = ", ".join(where)
        super().__init__(f"{prefix}: {reason}" if prefix else reason)


class NoOverlapError(AtomScreenError, ValueError):
    """Computed results share no label with the reference table."""

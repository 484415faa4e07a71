"""Exception hierarchy shared by all modules.

Input problems derive from ``ValueError`` (the CLI maps them to exit code 2),
numerical failures from ``ArithmeticError`` (exit code 1).
"""


class TwoCrystalError(Exception):
    """Base class for every error raised by this package."""


class DomainError(TwoCrystalError, ValueError):
    """An argument lies outside the mathematical domain of an operation."""


class RangeError(DomainError):
    """A wavelength or temperature lies outside a model's validity range."""

    def __init__(self, message, bound=None, value=None):
        super().__init__(message)
        self.bound = bound
        self.value = value


class RegistryError(TwoCrystalError, KeyError):
    """Lookup of an unknown (material, axis) pair."""

    def __str__(self):
        return str(self.args[0]) if self.args else ""


class DataFileError(TwoCrystalError, ValueError):
    """A data file could not be parsed or failed its schema check."""


class DuplicateKeyError(DataFileError):
    """Two entries of a material file share the same (name, axis) key."""


class ValidationError(DomainError):
    """An object violates its invariants (e.g. a non-physical density matrix)."""


class DegeneracyError(DomainError):
    """A linear system is singular (e.g. tomography settings not complete)."""


class SolverError(TwoCrystalError, ArithmeticError):
    """A root finder found no admissible solution."""


class QuadratureError(TwoCrystalError, ArithmeticError):
    """Adaptive quadrature did not reach the requested tolerance."""

    def __init__(self, message, estimate=None):
        super().__init__(message)
        self.estimate = estimate

"""Numerical model of a two-crystal quasi-phase-matched polarization-entanglement source."""

from .errors import (
    DataFileError,
    DegeneracyError,
    DomainError,
    DuplicateKeyError,
    QuadratureError,
    RangeError,
    RegistryError,
    SolverError,
    TwoCrystalError,
    ValidationError,
)

__version__ = "0.1.0"

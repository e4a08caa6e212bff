"""Transition densities of iterated-logarithm Lévy processes."""

from .errors import (
    BranchError,
    Divergence,
    DomainError,
    GridTooCoarse,
    InsufficientCoverage,
    LevyDensError,
    NoConvergence,
    NotSymmetric,
    SingularityError,
    ToleranceNotMet,
)
from .symbol import IterLogParams, Kind, LevySymbol, parse_symbol

__version__ = "0.1.0"

"""Combinatorics and dynamics of outer automorphisms of free groups via train track maps."""

from .errors import (CapExhausted, DomainError, NumericError, OutdynError,
                     ParseFailure, StructuralError, ValidationError)
from .graph import Circuit, MarkedGraph, inverse
from .graphmap import GraphMap

__all__ = [
    "CapExhausted", "Circuit", "DomainError", "GraphMap", "MarkedGraph",
    "NumericError", "OutdynError", "ParseFailure", "StructuralError",
    "ValidationError", "inverse",
]

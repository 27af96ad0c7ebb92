"""Coherence graph toolkit: synthesis, solving, and reconstruction scoring."""

__version__ = "0.1.0"

from .errors import (CapacityError, CohbenchError, ConfigError,
                     FormulaParseError, InputError, TransportError,
                     UsageError)
from .graphs import (Cut, SignedCoherenceGraph, coherence, convergence_curve,
                     l1_distance, median_consensus)

__all__ = [
    "__version__",
    "CapacityError", "CohbenchError", "ConfigError", "FormulaParseError",
    "InputError", "TransportError", "UsageError",
    "Cut", "SignedCoherenceGraph", "coherence", "convergence_curve",
    "l1_distance", "median_consensus",
]

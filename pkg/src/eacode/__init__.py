"""Entanglement-assisted transmission of one bit over the butterfly channel.

The package computes exact success probabilities for classical and
entanglement-assisted codes, simulates the protocol trial by trial,
improves measurement strategies by seesaw iteration and reconstructs
two-qubit states from simulated tomography counts.
"""

from eacode.errors import (
    ConvergenceError,
    DomainError,
    InvariantError,
    NotApplicableError,
    ResourceError,
    SeesawError,
    UnsupportedDimensionError,
)

__version__ = "0.1.0"

__all__ = [
    "ConvergenceError",
    "DomainError",
    "InvariantError",
    "NotApplicableError",
    "ResourceError",
    "SeesawError",
    "UnsupportedDimensionError",
    "__version__",
]

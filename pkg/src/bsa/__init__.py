"""Deterministic bit-stream arithmetic: exact and rounding stream units, a
stochastic baseline, a pulse-timing fault model and stream-domain NN inference."""

from .stream import BitStream, StreamError, StreamValue, UnitKind, canonical_stream, value
from .units import UNITS, get_unit

__version__ = "0.1.0"

__all__ = [
    "BitStream",
    "StreamError",
    "StreamValue",
    "UnitKind",
    "UNITS",
    "canonical_stream",
    "get_unit",
    "value",
    "__version__",
]

"""Lattice Package"""

from .geometry import (
    Boundary,
    Configuration,
    Geometry,
    Site,
    Window,
    box_sites,
    hamming_distance,
    symbol_values,
)
from .patterns import Pattern, pattern_code, pattern_decode, shift_window

__all__ = [
    "Boundary",
    "Configuration",
    "Geometry",
    "Pattern",
    "Site",
    "Window",
    "box_sites",
    "hamming_distance",
    "pattern_code",
    "pattern_decode",
    "shift_window",
    "symbol_values",
]

"""Patterns on centered cubes, their canonical codes, and the configuration text format."""

import logging
from dataclasses import dataclass
from pathlib import Path
from typing import Hashable, List, Optional, Sequence, Tuple, Union

import numpy as np
from numpy.lib.stride_tricks import sliding_window_view

from ..exceptions import GeometryError, PatternCodeError
from .geometry import Boundary, Configuration, Geometry, Site, Window, box_sites, translate

logger = logging.getLogger(__name__)

MAX_CODE = 2**63 - 1

PatternKey = Hashable


def pattern_space_size(alphabet_size: int, n_sites: int) -> int:
    return alphabet_size**n_sites


def code_fits(alphabet_size: int, n_sites: int) -> bool:
    return pattern_space_size(alphabet_size, n_sites) - 1 <= MAX_CODE


def code_powers(alphabet_size: int, n_sites: int) -> np.ndarray:
    """Positional weights; the first site is the most significant digit."""
    return alphabet_size ** np.arange(n_sites - 1, -1, -1, dtype=np.int64)


def encode_rows(symbols: np.ndarray, alphabet_size: int) -> np.ndarray:
    """Codes of each row of a (..., m) symbol array (m small enough to fit int64)."""
    symbols = np.asarray(symbols, dtype=np.int64)
    return symbols @ code_powers(alphabet_size, symbols.shape[-1])


def decode_codes(codes: np.ndarray, alphabet_size: int, n_sites: int) -> np.ndarray:
    """Inverse of encode_rows: (M,) codes -> (M, n_sites) int8 symbols."""
    codes = np.asarray(codes, dtype=np.int64)
    return ((codes[..., None] // code_powers(alphabet_size, n_sites)) % alphabet_size).astype(np.int8)


def pattern_key(symbols: Sequence[int], alphabet_size: int) -> PatternKey:
    """Integer code when it fits in 63 bits, else the symbol tuple (sparse key)."""
    symbols = tuple(int(s) for s in symbols)
    if code_fits(alphabet_size, len(symbols)):
        code = 0
        for s in symbols:
            code = code * alphabet_size + s
        return code
    return symbols


@dataclass(frozen=True)
class Pattern:
    """Symbols on Lambda_k, listed in lexicographic site order."""

    shape_radius: int
    symbols: Tuple[int, ...]
    alphabet_size: int = 2
    d: int = 1

    def __post_init__(self):
        expected = (2 * self.shape_radius + 1) ** self.d
        if len(self.symbols) != expected:
            raise PatternCodeError(f"pattern on Lambda_{self.shape_radius} needs {expected} symbols")
        if any(not 0 <= s < self.alphabet_size for s in self.symbols):
            raise PatternCodeError("pattern symbols must lie in [0, |S|)")
        object.__setattr__(self, "symbols", tuple(int(s) for s in self.symbols))

    @property
    def code(self) -> int:
        return pattern_code(self)

    @property
    def sites(self) -> List[Site]:
        return box_sites(self.d, self.shape_radius)


def pattern_code(p: Pattern) -> int:
    """Base-|S| positional code of a pattern.

    Raises:
        PatternCodeError: If the pattern space exceeds 63-bit codes
    """
    if not code_fits(p.alphabet_size, len(p.symbols)):
        raise PatternCodeError("pattern space too large for integer codes; use pattern_key")
    key = pattern_key(p.symbols, p.alphabet_size)
    return int(key)


def pattern_decode(code: int, k: int, alphabet_size: int, d: int = 1) -> Pattern:
    """Pattern on Lambda_k with the given code.

    Raises:
        PatternCodeError: If the code is outside [0, |S|^((2k+1)^d))
    """
    m = (2 * k + 1) ** d
    size = pattern_space_size(alphabet_size, m)
    if not 0 <= code < size:
        raise PatternCodeError(f"code {code} outside [0, {size})")
    symbols = []
    for _ in range(m):
        code, s = divmod(code, alphabet_size)
        symbols.append(s)
    return Pattern(k, tuple(reversed(symbols)), alphabet_size, d)


def shift_window(omega: Configuration, x: Site, k: int) -> Pattern:
    """Pattern read off Lambda_k + x (the view of theta_{-x} omega on Lambda_k).

    Raises:
        GeometryError: If Lambda_k + x leaves a non-torus window
    """
    window = omega.window
    sites = [translate(y, x) for y in box_sites(window.d, k)]
    if not window.is_torus and not all(window.contains(s) for s in sites):
        raise GeometryError(f"Lambda_{k} + {x} is not inside the window")
    idx = window.indices(sites)
    return Pattern(k, tuple(int(s) for s in omega.spins[idx]), window.alphabet_size, window.d)


def anchor_patterns(spins: np.ndarray, window: Window, k: int) -> np.ndarray:
    """Symbols of every Lambda_k translate fully inside the box (no wraparound).

    Args:
        spins: (N,) or (M, N) spin array in window order
        window: The window
        k: Pattern radius

    Returns:
        Array (..., A, (2k+1)^d) with anchors in lexicographic order
    """
    width = 2 * k + 1
    if width > window.side:
        raise GeometryError(f"Lambda_{k} does not fit a box of side {window.side}")
    spins = np.asarray(spins)
    lead = spins.shape[:-1]
    grid = spins.reshape(lead + window.grid_shape)
    axes = tuple(range(len(lead), len(lead) + window.d))
    views = sliding_window_view(grid, (width,) * window.d, axis=axes)
    n_anchor = (window.side - 2 * k) ** window.d
    return views.reshape(lead + (n_anchor, width**window.d))


def anchor_codes(spins: np.ndarray, window: Window, k: int) -> np.ndarray:
    """Integer codes of the Lambda_k patterns at every interior anchor."""
    return encode_rows(anchor_patterns(spins, window, k), window.alphabet_size)


def format_configuration(omega: Configuration) -> str:
    """Flat text form: header ``d n geometry |S| [side]``, spins, optional boundary line."""
    w = omega.window
    header = f"{w.d} {w.n} {w.geometry.value} {w.alphabet_size}"
    if w.side != 2 * w.n + 1:
        header += f" {w.side}"
    lines = [header, " ".join(str(int(s)) for s in omega.spins)]
    if omega.boundary is not None:
        b = omega.boundary
        parts = ["boundary", "-" if b.uniform is None else str(b.uniform)]
        parts += [",".join(str(c) for c in site) + ":" + str(v) for site, v in b.exterior]
        lines.append(" ".join(parts))
    return "\n".join(lines) + "\n"


def parse_configuration(text: str) -> Configuration:
    """Inverse of format_configuration."""
    lines = [line for line in text.strip().splitlines() if line.strip()]
    if len(lines) < 2:
        raise GeometryError("configuration text needs a header and a spin line")
    head = lines[0].split()
    d, n, geometry, q = int(head[0]), int(head[1]), Geometry(head[2]), int(head[3])
    side = int(head[4]) if len(head) > 4 else None
    window = Window(d=d, n=n, geometry=geometry, alphabet_size=q, side=side)
    spins = np.array([int(t) for t in lines[1].split()], dtype=np.int8)
    boundary: Optional[Boundary] = None
    if len(lines) > 2 and lines[2].startswith("boundary"):
        tokens = lines[2].split()[1:]
        uniform = None if tokens[0] == "-" else int(tokens[0])
        exterior = {}
        for token in tokens[1:]:
            site_text, value = token.split(":")
            exterior[tuple(int(c) for c in site_text.split(","))] = int(value)
        boundary = Boundary.explicit(exterior, uniform=uniform)
    return Configuration(window, spins, boundary)


def write_configuration(omega: Configuration, path: Union[str, Path]) -> None:
    with open(path, "w", encoding="utf-8") as f:
        f.write(format_configuration(omega))


def read_configuration(path: Union[str, Path]) -> Configuration:
    with open(path, "r", encoding="utf-8") as f:
        return parse_configuration(f.read())

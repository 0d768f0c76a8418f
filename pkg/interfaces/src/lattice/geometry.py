"""Finite windows of Z^d: cubes, tori, boundary conditions and configurations."""

import itertools
import logging
from dataclasses import dataclass, field
from enum import Enum
from functools import cached_property
from typing import Dict, Iterable, List, Mapping, Optional, Sequence, Tuple

import numpy as np

from ..exceptions import GeometryError, MissingBoundaryError, WindowMismatchError

logger = logging.getLogger(__name__)

Site = Tuple[int, ...]


class Geometry(str, Enum):
    """Finite surrogates for the infinite lattice."""

    FIXED = "cube-with-fixed-boundary"
    FREE = "cube-free"
    TORUS = "torus"

    @classmethod
    def parse(cls, value: "str | Geometry") -> "Geometry":
        aliases = {"fixed": cls.FIXED, "free": cls.FREE, "periodic": cls.TORUS}
        if isinstance(value, Geometry):
            return value
        return aliases.get(value, None) or cls(value)


# spins are stored as int8
MAX_ALPHABET_SIZE = 127


def symbol_values(alphabet_size: int) -> np.ndarray:
    """Physical value of each symbol index: {-1, +1} for |S| = 2, else 0..|S|-1."""
    if alphabet_size == 2:
        return np.array([-1.0, 1.0])
    return np.arange(alphabet_size, dtype=float)


def box_sites(d: int, n: int, side: Optional[int] = None) -> List[Site]:
    """Sites of the cube Lambda_n in lexicographic order.

    Args:
        d: Lattice dimension (>= 1)
        n: Radius; coordinates start at -n
        side: Optional side length (defaults to 2n+1)

    Returns:
        List of (side)^d sites, lexicographically ordered
    """
    if d < 1 or n < 0:
        raise GeometryError(f"invalid box: d={d}, n={n}")
    side = 2 * n + 1 if side is None else side
    axis = range(-n, -n + side)
    return [tuple(site) for site in itertools.product(axis, repeat=d)]


def translate(site: Site, x: Site) -> Site:
    return tuple(a + b for a, b in zip(site, x))


def linf_norm(site: Site) -> int:
    return max((abs(c) for c in site), default=0)


@dataclass(frozen=True)
class Window:
    """A finite box of Z^d with its geometry and alphabet size.

    ``side`` defaults to 2n+1 (the centered cube Lambda_n); an explicit
    side gives the box with coordinates -n .. -n+side-1 on each axis.
    """

    d: int
    n: int
    geometry: Geometry = Geometry.FIXED
    alphabet_size: int = 2
    side: Optional[int] = None

    def __post_init__(self):
        if self.d < 1:
            raise GeometryError(f"dimension must be >= 1, got {self.d}")
        if self.n < 0:
            raise GeometryError(f"radius must be >= 0, got {self.n}")
        if not 2 <= self.alphabet_size <= MAX_ALPHABET_SIZE:
            raise GeometryError(f"alphabet size must lie in [2, {MAX_ALPHABET_SIZE}], got {self.alphabet_size}")
        object.__setattr__(self, "geometry", Geometry.parse(self.geometry))
        if self.side is None:
            object.__setattr__(self, "side", 2 * self.n + 1)
        if self.side < 1 or self.side > 2 * self.n + 1 or -self.n + self.side - 1 < 0:
            raise GeometryError(f"side {self.side} incompatible with radius {self.n}")

    @classmethod
    def cube(cls, d: int, n: int, geometry="fixed", alphabet_size: int = 2) -> "Window":
        return cls(d=d, n=n, geometry=Geometry.parse(geometry), alphabet_size=alphabet_size)

    @classmethod
    def with_side(cls, d: int, side: int, geometry="fixed", alphabet_size: int = 2) -> "Window":
        """Box of the given side, containing the origin (coordinates -side//2 ..)."""
        return cls(d=d, n=side // 2, geometry=Geometry.parse(geometry), alphabet_size=alphabet_size, side=side)

    @property
    def lower(self) -> int:
        return -self.n

    @property
    def upper(self) -> int:
        return -self.n + self.side - 1

    @property
    def size(self) -> int:
        return self.side**self.d

    @property
    def is_torus(self) -> bool:
        return self.geometry is Geometry.TORUS

    @cached_property
    def sites(self) -> Tuple[Site, ...]:
        return tuple(box_sites(self.d, self.n, self.side))

    @cached_property
    def coords(self) -> np.ndarray:
        return np.array(self.sites, dtype=np.int64).reshape(self.size, self.d)

    @cached_property
    def _index(self) -> Dict[Site, int]:
        return {site: i for i, site in enumerate(self.sites)}

    @property
    def grid_shape(self) -> Tuple[int, ...]:
        return (self.side,) * self.d

    def contains(self, site: Site) -> bool:
        return all(self.lower <= c <= self.upper for c in site)

    def wrap(self, site: Site) -> Site:
        """Reduce a site onto the window modulo the side (torus only)."""
        return tuple((c - self.lower) % self.side + self.lower for c in site)

    def index(self, site: Site) -> int:
        """Position of a site in the window's site order.

        Raises:
            GeometryError: If the site is outside a non-torus window
        """
        if len(site) != self.d:
            raise GeometryError(f"site {site} has dimension {len(site)}, window has {self.d}")
        if self.is_torus:
            site = self.wrap(site)
        try:
            return self._index[tuple(site)]
        except KeyError:
            raise GeometryError(f"site {site} lies outside the window") from None

    def indices(self, sites: Iterable[Site]) -> np.ndarray:
        return np.array([self.index(s) for s in sites], dtype=np.int64)

    def describe(self) -> Dict[str, object]:
        return {
            "d": self.d,
            "n": self.n,
            "side": self.side,
            "geometry": self.geometry.value,
            "alphabet_size": self.alphabet_size,
        }


@dataclass(frozen=True)
class Boundary:
    """Frozen exterior spins of a fixed-boundary window.

    Either a uniform symbol for every exterior site, an explicit
    site -> symbol assignment, or both (explicit entries override).
    """

    uniform: Optional[int] = None
    exterior: Tuple[Tuple[Site, int], ...] = field(default=())

    @classmethod
    def plus(cls, alphabet_size: int = 2) -> "Boundary":
        return cls(uniform=alphabet_size - 1)

    @classmethod
    def minus(cls) -> "Boundary":
        return cls(uniform=0)

    @classmethod
    def explicit(cls, assignment: Mapping[Site, int], uniform: Optional[int] = None) -> "Boundary":
        return cls(uniform=uniform, exterior=tuple(sorted((tuple(k), int(v)) for k, v in assignment.items())))

    @cached_property
    def _lookup(self) -> Dict[Site, int]:
        return dict(self.exterior)

    def spin_at(self, site: Site) -> int:
        site = tuple(site)
        if site in self._lookup:
            return self._lookup[site]
        if self.uniform is not None:
            return self.uniform
        raise MissingBoundaryError(f"no boundary spin supplied at exterior site {site}")

    def flipped(self, alphabet_size: int) -> "Boundary":
        """Global flip s -> |S|-1-s (the Ising spin flip for |S| = 2)."""
        uniform = None if self.uniform is None else alphabet_size - 1 - self.uniform
        return Boundary(uniform=uniform, exterior=tuple((s, alphabet_size - 1 - v) for s, v in self.exterior))

    def permuted(self, permutation: Sequence[int]) -> "Boundary":
        uniform = None if self.uniform is None else int(permutation[self.uniform])
        return Boundary(uniform=uniform, exterior=tuple((s, int(permutation[v])) for s, v in self.exterior))

    def describe(self) -> Dict[str, object]:
        return {"uniform": self.uniform, "exterior": [[list(s), v] for s, v in self.exterior]}


@dataclass(frozen=True, eq=False)
class Configuration:
    """Spin assignment on a window, in the window's site order."""

    window: Window
    spins: np.ndarray
    boundary: Optional[Boundary] = None

    def __post_init__(self):
        raw = np.asarray(self.spins)
        if raw.shape != (self.window.size,):
            raise GeometryError(f"expected {self.window.size} spins, got shape {raw.shape}")
        if raw.size and (raw.min() < 0 or raw.max() >= self.window.alphabet_size):
            raise GeometryError("spin symbols must lie in [0, |S|)")
        spins = raw.astype(np.int8)
        has_fixed = self.window.geometry is Geometry.FIXED
        if has_fixed != (self.boundary is not None):
            raise GeometryError("boundary spins are required iff the geometry is cube-with-fixed-boundary")
        spins.setflags(write=False)
        object.__setattr__(self, "spins", spins)

    def __eq__(self, other: object) -> bool:
        if not isinstance(other, Configuration):
            return NotImplemented
        return (
            self.window == other.window
            and self.boundary == other.boundary
            and np.array_equal(self.spins, other.spins)
        )

    def __hash__(self) -> int:
        return hash((self.window, self.boundary, self.spins.tobytes()))

    def at(self, site: Site) -> int:
        return int(self.spins[self.window.index(site)])

    def grid(self) -> np.ndarray:
        return self.spins.reshape(self.window.grid_shape)

    def values(self) -> np.ndarray:
        return symbol_values(self.window.alphabet_size)[self.spins]

    def with_spins(self, spins: np.ndarray) -> "Configuration":
        return Configuration(self.window, spins, self.boundary)


def hamming_distance(omega: Configuration, eta: Configuration) -> int:
    """Number of sites of the window where the two configurations differ.

    Raises:
        WindowMismatchError: If the configurations live on different windows
    """
    if omega.window != eta.window:
        raise WindowMismatchError(f"windows differ: {omega.window} vs {eta.window}")
    return int(np.count_nonzero(omega.spins != eta.spins))


def hamming_matrix(a: np.ndarray, b: np.ndarray) -> np.ndarray:
    """Pairwise Hamming distances between rows of two spin matrices."""
    a = np.atleast_2d(a)
    b = np.atleast_2d(b)
    return (a[:, None, :] != b[None, :, :]).sum(axis=-1)

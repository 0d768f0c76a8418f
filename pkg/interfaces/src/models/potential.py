"""Shift-invariant finite-range interaction potentials."""

import logging
from dataclasses import dataclass, field
from functools import cached_property
from typing import Dict, Optional, Sequence, Tuple

import numpy as np
from scipy.special import zeta

from ..exceptions import GeometryError
from ..lattice.geometry import Site, symbol_values

logger = logging.getLogger(__name__)

Offsets = Tuple[Site, ...]


def normalize_shape(sites: Sequence[Site]) -> Tuple[Offsets, Site, Tuple[int, ...]]:
    """Canonical form of a finite site set.

    Returns:
        (offsets relative to the lexicographically smallest site, that site,
        permutation mapping sorted position -> input position)
    """
    order = sorted(range(len(sites)), key=lambda i: tuple(sites[i]))
    ordered = [tuple(sites[i]) for i in order]
    anchor = ordered[0]
    offsets = tuple(tuple(c - a for c, a in zip(s, anchor)) for s in ordered)
    return offsets, anchor, tuple(order)


@dataclass(frozen=True, eq=False)
class TermShape:
    """One translation class of interaction terms.

    ``offsets`` are sorted lexicographically and start at the origin; the
    energy table has one axis per offset, indexed by symbols.
    """

    offsets: Offsets
    table: np.ndarray

    def __post_init__(self):
        table = np.array(self.table, dtype=float)
        if table.ndim != len(self.offsets):
            raise ValueError(f"table has {table.ndim} axes for {len(self.offsets)} sites")
        if len(set(self.offsets)) != len(self.offsets) or self.offsets[0] != (0,) * len(self.offsets[0]):
            raise ValueError(f"offsets {self.offsets} are not a canonical shape")
        table.setflags(write=False)
        object.__setattr__(self, "table", table)

    @property
    def k(self) -> int:
        return len(self.offsets)

    @property
    def extent(self) -> int:
        """Largest sup-norm distance between two sites of the shape."""
        pts = np.array(self.offsets)
        return int((pts.max(axis=0) - pts.min(axis=0)).max())

    @property
    def sup_norm(self) -> float:
        return float(np.abs(self.table).max())

    def flat_table(self) -> np.ndarray:
        return self.table.reshape(-1)


@dataclass(frozen=True)
class ModelTag:
    """Parameters a potential was built from (echoed into reports)."""

    model: str
    beta: float
    h: float = 0.0
    J: float = 1.0
    N: int = 2
    alpha: Optional[float] = None
    R: int = 1

    def describe(self) -> Dict[str, object]:
        return {k: v for k, v in self.__dict__.items() if v is not None}


@dataclass(frozen=True, eq=False)
class Potential:
    """Finite-range, shift-invariant potential given by its term shapes.

    Phi(Lambda', omega) is non-zero only when Lambda' is a translate of one
    of the shapes; beta is already folded into the tables.
    """

    name: str
    d: int
    alphabet_size: int
    shapes: Tuple[TermShape, ...]
    tag: ModelTag
    notes: Dict[str, float] = field(default_factory=dict)

    def __post_init__(self):
        for shape in self.shapes:
            if any(len(o) != self.d for o in shape.offsets):
                raise GeometryError(f"shape {shape.offsets} is not {self.d}-dimensional")
            if shape.table.shape != (self.alphabet_size,) * shape.k:
                raise ValueError(f"table for {shape.offsets} must have shape {(self.alphabet_size,) * shape.k}")

    @cached_property
    def _by_offsets(self) -> Dict[Offsets, TermShape]:
        return {shape.offsets: shape for shape in self.shapes}

    @cached_property
    def range(self) -> int:
        """Interaction radius R: every term fits in a sup-norm ball of that radius around any of its sites."""
        return max((shape.extent for shape in self.shapes), default=0)

    @property
    def beta(self) -> float:
        return self.tag.beta

    def term(self, sites: Sequence[Site], restricted: Sequence[int]) -> float:
        """Energy Phi(Lambda', omega) of one finite site set.

        Args:
            sites: The finite set Lambda'
            restricted: Symbols of omega on those sites, same order

        Returns:
            The term energy (0 for sets that are not a translate of a shape)
        """
        if len(sites) == 0 or len(set(map(tuple, sites))) != len(sites):
            return 0.0
        offsets, _, order = normalize_shape(sites)
        shape = self._by_offsets.get(offsets)
        if shape is None:
            return 0.0
        return float(shape.table[tuple(int(restricted[i]) for i in order)])

    def terms_containing_origin(self):
        """Yield (sites, shape) for every term translate that contains the origin."""
        for shape in self.shapes:
            for offset in shape.offsets:
                sites = tuple(tuple(c - o for c, o in zip(s, offset)) for s in shape.offsets)
                yield sites, shape

    def describe(self) -> Dict[str, object]:
        info = {"name": self.name, "d": self.d, "alphabet_size": self.alphabet_size, "range": self.range}
        info.update(self.tag.describe())
        info.update(self.notes)
        return info


def _unit(d: int, axis: int, length: int = 1) -> Site:
    return tuple(length if i == axis else 0 for i in range(d))


def ising_potential(beta: float, h: float = 0.0, d: int = 2, J: float = 1.0) -> Potential:
    """Nearest-neighbour Ising potential with field.

    Pair energy -beta*J*w_x*w_y for ||x-y||_1 = 1, singleton energy
    -beta*h*w_x (only present when h != 0). J = 0 gives a product measure.
    """
    if beta < 0:
        raise ValueError(f"beta must be >= 0, got {beta}")
    v = symbol_values(2)
    origin = (0,) * d
    shapes = [TermShape((origin, _unit(d, axis)), -beta * J * np.outer(v, v)) for axis in range(d) if J != 0]
    if h != 0:
        shapes.append(TermShape((origin,), -beta * h * v))
    return Potential("ising", d, 2, tuple(shapes), ModelTag("ising", beta, h=h, J=J))


def potts_potential(beta: float, N: int, d: int = 2) -> Potential:
    """Ferromagnetic N-state Potts potential, pair energy -beta*1{w_x = w_y}."""
    if N < 2:
        raise ValueError(f"Potts needs N >= 2 colors, got {N}")
    if beta < 0:
        raise ValueError(f"beta must be >= 0, got {beta}")
    origin = (0,) * d
    table = -beta * np.eye(N)
    shapes = tuple(TermShape((origin, _unit(d, axis)), table) for axis in range(d))
    return Potential("potts", d, N, shapes, ModelTag("potts", beta, N=N))


def dyson_truncation_tail(alpha: float, R: int) -> float:
    """Neglected coupling mass sum_{r > R} r^(-alpha)."""
    return float(zeta(alpha, R + 1))


def dyson_truncated_potential(beta: float, alpha: float, R: int, d: int = 1) -> Potential:
    """Dyson long-range Ising chain truncated at distance R.

    Raises:
        GeometryError: If d != 1
    """
    if d != 1:
        raise GeometryError(f"the Dyson model is one-dimensional, got d={d}")
    if alpha <= 1:
        raise ValueError(f"alpha must be > 1, got {alpha}")
    if R < 1:
        raise ValueError(f"truncation radius must be >= 1, got {R}")
    v = symbol_values(2)
    shapes = tuple(TermShape(((0,), (r,)), -beta * np.outer(v, v) / r**alpha) for r in range(1, R + 1))
    tail = dyson_truncation_tail(alpha, R)
    logger.info(f"Dyson potential truncated at R={R}; neglected tail sum = {tail:.6g}")
    return Potential(
        "dyson", 1, 2, shapes, ModelTag("dyson", beta, alpha=alpha, R=R), notes={"truncation_tail": tail}
    )


def summability_norm(potential: Potential) -> float:
    """Sum over terms containing the origin of the sup-norm of the term.

    Each shape has one translate through the origin per site of the shape.
    """
    return float(sum(shape.k * shape.sup_norm for shape in potential.shapes))

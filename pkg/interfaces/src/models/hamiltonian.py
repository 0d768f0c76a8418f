"""Finite-volume Hamiltonians: compiled term lists over a window with a boundary condition."""

import itertools
import logging
from dataclasses import dataclass
from functools import cached_property
from typing import Dict, List, Optional, Sequence, Tuple

import numpy as np

from ..exceptions import GeometryError, MissingBoundaryError
from ..lattice.geometry import Boundary, Configuration, Geometry, Site, Window, translate
from .potential import Potential, TermShape, normalize_shape

logger = logging.getLogger(__name__)


@dataclass(frozen=True)
class KernelArrays:
    """Flat term arrays consumed by the compiled single-site kernels."""

    term_sites: np.ndarray  # (T, kmax) positions in the extended vector, -1 padded
    term_k: np.ndarray  # (T,)
    term_offset: np.ndarray  # (T,) start of each term's table in ``tables``
    tables: np.ndarray  # concatenated flat energy tables
    site_ptr: np.ndarray  # (n_region + 1,) CSR pointers into site_term/site_pos
    site_term: np.ndarray
    site_pos: np.ndarray


@dataclass(frozen=True, eq=False)
class TermSet:
    """All terms of a potential that touch a region of a window.

    Spins live in an extended vector: the region's sites first (in the
    order of ``region``), then collar sites inside the window, then
    exterior sites whose values come from the boundary condition.
    """

    potential: Potential
    window: Window
    region: np.ndarray
    collar_window: np.ndarray
    collar_exterior: Tuple[Site, ...]
    groups: Tuple[Tuple[TermShape, np.ndarray], ...]

    @property
    def n_region(self) -> int:
        return int(self.region.size)

    @property
    def n_ext(self) -> int:
        return self.n_region + int(self.collar_window.size) + len(self.collar_exterior)

    @property
    def n_terms(self) -> int:
        return int(sum(idx.shape[0] for _, idx in self.groups))

    def exterior_values(self, boundary: Optional[Boundary]) -> np.ndarray:
        """Boundary symbols on the exterior collar.

        Raises:
            MissingBoundaryError: If a needed exterior spin is not supplied
        """
        if not self.collar_exterior:
            return np.zeros(0, dtype=np.int64)
        if boundary is None:
            raise MissingBoundaryError("fixed-boundary window needs boundary spins within interaction range")
        return np.array([boundary.spin_at(site) for site in self.collar_exterior], dtype=np.int64)

    def extend(self, spins: np.ndarray, boundary: Optional[Boundary] = None) -> np.ndarray:
        """Extended vectors from full-window spins of shape (..., N)."""
        spins = np.asarray(spins, dtype=np.int64)
        lead = spins.shape[:-1]
        parts = [spins[..., self.region], spins[..., self.collar_window]]
        exterior = self.exterior_values(boundary)
        parts.append(np.broadcast_to(exterior, lead + exterior.shape))
        return np.concatenate(parts, axis=-1)

    def assemble(self, region_spins: np.ndarray, collar_spins: np.ndarray, boundary: Optional[Boundary]) -> np.ndarray:
        """Extended vectors from separate region and in-window collar symbol arrays."""
        region_spins = np.asarray(region_spins, dtype=np.int64)
        collar_spins = np.asarray(collar_spins, dtype=np.int64)
        lead = np.broadcast_shapes(region_spins.shape[:-1], collar_spins.shape[:-1])
        exterior = self.exterior_values(boundary)
        return np.concatenate(
            [
                np.broadcast_to(region_spins, lead + region_spins.shape[-1:]),
                np.broadcast_to(collar_spins, lead + collar_spins.shape[-1:]),
                np.broadcast_to(exterior, lead + exterior.shape),
            ],
            axis=-1,
        )

    def energy(self, ext: np.ndarray) -> np.ndarray:
        """Sum of all compiled terms for extended vectors of shape (..., n_ext)."""
        ext = np.asarray(ext, dtype=np.int64)
        total = np.zeros(ext.shape[:-1])
        for shape, idx in self.groups:
            if idx.shape[0] == 0:
                continue
            lookup = tuple(ext[..., idx[:, j]] for j in range(shape.k))
            total = total + shape.table[lookup].sum(axis=-1)
        return total

    def terms(self) -> List[Tuple[TermShape, Tuple[int, ...]]]:
        """Explicit (shape, extended positions) list, one entry per term."""
        return [(shape, tuple(int(i) for i in row)) for shape, idx in self.groups for row in idx]

    @cached_property
    def kernel_arrays(self) -> KernelArrays:
        terms = self.terms()
        kmax = max((shape.k for shape, _ in terms), default=1)
        term_sites = np.full((len(terms), kmax), -1, dtype=np.int64)
        term_k = np.zeros(len(terms), dtype=np.int64)
        term_offset = np.zeros(len(terms), dtype=np.int64)
        table_start: Dict[int, int] = {}
        flat_tables: List[np.ndarray] = []
        cursor = 0
        per_site: List[List[Tuple[int, int]]] = [[] for _ in range(self.n_region)]
        for t, (shape, positions) in enumerate(terms):
            if id(shape) not in table_start:
                table_start[id(shape)] = cursor
                flat_tables.append(shape.flat_table())
                cursor += shape.table.size
            term_sites[t, : shape.k] = positions
            term_k[t] = shape.k
            term_offset[t] = table_start[id(shape)]
            for pos, e in enumerate(positions):
                if e < self.n_region:
                    per_site[e].append((t, pos))
        site_ptr = np.zeros(self.n_region + 1, dtype=np.int64)
        site_ptr[1:] = np.cumsum([len(entries) for entries in per_site])
        flat = [entry for entries in per_site for entry in entries]
        return KernelArrays(
            term_sites=term_sites,
            term_k=term_k,
            term_offset=term_offset,
            tables=np.concatenate(flat_tables) if flat_tables else np.zeros(1),
            site_ptr=site_ptr,
            site_term=np.array([t for t, _ in flat], dtype=np.int64),
            site_pos=np.array([p for _, p in flat], dtype=np.int64),
        )


def compile_terms(potential: Potential, window: Window, region: Optional[Sequence[int]] = None) -> TermSet:
    """Collect every term that intersects ``region`` (default: the whole window).

    Free windows drop terms leaving the window, tori wrap, fixed windows
    route outside sites to the exterior collar.

    Raises:
        GeometryError: On dimension mismatch or a torus too small for the range
    """
    if potential.d != window.d:
        raise GeometryError(f"potential is {potential.d}-dimensional, window is {window.d}-dimensional")
    if window.is_torus and window.side < 2 * potential.range + 1:
        raise GeometryError(f"torus side {window.side} must be >= 2R+1 = {2 * potential.range + 1}")

    region_idx = np.arange(window.size, dtype=np.int64) if region is None else np.asarray(region, dtype=np.int64)
    region_pos = {int(i): p for p, i in enumerate(region_idx)}
    region_sites = [window.sites[i] for i in region_idx]

    collar_window: Dict[int, int] = {}
    collar_exterior: Dict[Site, int] = {}
    pending: List[Tuple[TermShape, List[Tuple[str, object]]]] = []

    for shape in potential.shapes:
        anchors = set()
        for y in region_sites:
            for offset in shape.offsets:
                anchor = tuple(c - o for c, o in zip(y, offset))
                anchors.add(window.wrap(anchor) if window.is_torus else anchor)
        rows = []
        for anchor in sorted(anchors):
            sites = [translate(anchor, o) for o in shape.offsets]
            if window.is_torus:
                sites = [window.wrap(s) for s in sites]
                if len(set(sites)) != len(sites):
                    raise GeometryError("term wraps onto itself; enlarge the torus")
            inside = [window.contains(s) for s in sites]
            if window.geometry is Geometry.FREE and not all(inside):
                continue
            row = []
            for s, ok in zip(sites, inside):
                if ok:
                    i = window.index(s)
                    row.append(("region", region_pos[i]) if i in region_pos else ("window", i))
                else:
                    row.append(("exterior", s))
            if not any(kind == "region" for kind, _ in row):
                continue
            rows.append(row)
        pending.append((shape, rows))

    for _, rows in pending:
        for row in rows:
            for kind, ref in row:
                if kind == "window" and ref not in collar_window:
                    collar_window[ref] = len(collar_window)
                elif kind == "exterior" and ref not in collar_exterior:
                    collar_exterior[ref] = len(collar_exterior)

    n_region = region_idx.size
    n_window_collar = len(collar_window)
    groups = []
    for shape, rows in pending:
        idx = np.zeros((len(rows), shape.k), dtype=np.int64)
        for r, row in enumerate(rows):
            for j, (kind, ref) in enumerate(row):
                if kind == "region":
                    idx[r, j] = ref
                elif kind == "window":
                    idx[r, j] = n_region + collar_window[ref]
                else:
                    idx[r, j] = n_region + n_window_collar + collar_exterior[ref]
        groups.append((shape, idx))

    term_set = TermSet(
        potential=potential,
        window=window,
        region=region_idx,
        collar_window=np.array(sorted(collar_window, key=collar_window.get), dtype=np.int64),
        collar_exterior=tuple(sorted(collar_exterior, key=collar_exterior.get)),
        groups=tuple(groups),
    )
    logger.debug(f"Compiled {term_set.n_terms} terms for {potential.name} on {window.describe()}")
    return term_set


def hamiltonian(
    potential: Potential,
    window: Window,
    omega: Configuration,
    boundary: Optional[Boundary] = None,
) -> float:
    """H_Lambda(omega | eta): energy of every term meeting the window.

    Args:
        potential: The interaction
        window: The window Lambda
        omega: Configuration on the window
        boundary: Exterior spins; defaults to the configuration's own boundary

    Returns:
        The energy
    """
    if omega.window != window:
        raise GeometryError("configuration does not live on the given window")
    boundary = boundary if boundary is not None else omega.boundary
    term_set = compile_terms(potential, window)
    return float(term_set.energy(term_set.extend(omega.spins, boundary)))


def hamiltonian_by_subsets(
    potential: Potential,
    window: Window,
    omega: Configuration,
    boundary: Optional[Boundary] = None,
) -> float:
    """Reference energy from a literal sum over finite site sets.

    Enumerates every subset (up to the largest term size) of the window
    plus its range-R collar and evaluates Phi through ``Potential.term``.
    Only meant for tiny windows; tori are not supported.
    """
    if window.is_torus:
        raise GeometryError("subset enumeration does not handle wraparound")
    boundary = boundary if boundary is not None else omega.boundary
    R = potential.range
    kmax = max((shape.k for shape in potential.shapes), default=0)
    offsets = {shape.offsets for shape in potential.shapes}
    lo, hi = window.lower, window.upper
    if window.geometry is Geometry.FIXED:
        axis = range(lo - R, hi + R + 1)
        candidates = [tuple(s) for s in itertools.product(axis, repeat=window.d)]
    else:
        candidates = list(window.sites)

    def symbol(site: Site) -> int:
        if window.contains(site):
            return omega.at(site)
        if boundary is None:
            raise MissingBoundaryError(f"no boundary spin at {site}")
        return boundary.spin_at(site)

    total = 0.0
    for size in range(1, kmax + 1):
        for subset in itertools.combinations(candidates, size):
            if not any(window.contains(s) for s in subset):
                continue
            if normalize_shape(subset)[0] not in offsets:
                continue
            total += potential.term(subset, [symbol(s) for s in subset])
    return total

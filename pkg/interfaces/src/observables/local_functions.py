"""Local functions as dense tables, their oscillation vectors, and block sums."""

import itertools
import logging
import math
from dataclasses import dataclass
from functools import cached_property
from typing import Callable, Dict, List, Optional, Sequence, Tuple

import numpy as np

from ..config import get_config
from ..exceptions import EnumerationCapError, GeometryError
from ..lattice.geometry import Boundary, Configuration, Site, Window, box_sites, symbol_values, translate
from ..lattice.patterns import code_powers, decode_codes, encode_rows

logger = logging.getLogger(__name__)

# configurations enumerated when computing one oscillation entry of a block sum
OSCILLATION_ENUMERATION_CAP = 2**22


def _symbols_at(omega: Configuration, site: Site) -> int:
    window = omega.window
    if window.is_torus or window.contains(site):
        return omega.at(site)
    if omega.boundary is None:
        raise GeometryError(f"site {site} lies outside a window without boundary spins")
    return omega.boundary.spin_at(site)


def _host_indices(window: Window, sites: Sequence[Site]) -> np.ndarray:
    if not window.is_torus and not all(window.contains(s) for s in sites):
        raise GeometryError("dependence set leaves the window; enlarge it or use a torus")
    return window.indices(sites)


@dataclass(frozen=True)
class OscillationVector:
    """delta_x(F) for every site x of the dependence set (zero elsewhere)."""

    entries: Dict[Site, float]

    @property
    def l1(self) -> float:
        return math.fsum(self.entries.values())

    @property
    def l2sq(self) -> float:
        return math.fsum(v * v for v in self.entries.values())

    @property
    def l2(self) -> float:
        return math.sqrt(self.l2sq)

    def at(self, site: Site) -> float:
        return self.entries.get(tuple(site), 0.0)


@dataclass(frozen=True, eq=False)
class LocalFunction:
    """F(omega) = table[omega restricted to the dependence set].

    The table has one axis per dependence site, indexed by symbols.
    """

    dependence: Tuple[Site, ...]
    table: np.ndarray
    alphabet_size: int = 2
    name: str = "f"

    def __post_init__(self):
        dependence = tuple(tuple(int(c) for c in s) for s in self.dependence)
        if len(set(dependence)) != len(dependence):
            raise GeometryError("dependence sites must be distinct")
        cap = get_config().local_function_max_sites
        if len(dependence) > cap:
            raise EnumerationCapError(f"dependence set of {len(dependence)} sites exceeds the limit of {cap}")
        table = np.array(self.table, dtype=float)
        if table.shape != (self.alphabet_size,) * len(dependence):
            raise ValueError(f"table shape {table.shape} does not match {len(dependence)} sites over |S|={self.alphabet_size}")
        table.setflags(write=False)
        object.__setattr__(self, "dependence", dependence)
        object.__setattr__(self, "table", table)

    @property
    def n_sites(self) -> int:
        return len(self.dependence)

    @property
    def radius(self) -> int:
        return max((max(abs(c) for c in s) for s in self.dependence), default=0)

    @property
    def flat(self) -> np.ndarray:
        return self.table.reshape(-1)

    def __call__(self, omega: Configuration) -> float:
        return self.evaluate(omega)

    def evaluate(self, omega: Configuration) -> float:
        symbols = tuple(_symbols_at(omega, s) for s in self.dependence)
        return float(self.table[symbols])

    def evaluate_symbols(self, symbols: np.ndarray) -> np.ndarray:
        """Values for rows of dependence-set symbols, shape (..., m)."""
        symbols = np.asarray(symbols, dtype=np.int64)
        if self.n_sites == 0:
            return np.full(symbols.shape[:-1], float(self.table))
        return self.flat[encode_rows(symbols, self.alphabet_size)]

    def evaluate_spins(self, spins: np.ndarray, window: Window, shift: Optional[Site] = None) -> np.ndarray:
        """Vectorized F (or F o theta_shift) over rows of window spins."""
        sites = self.dependence if shift is None else [translate(s, shift) for s in self.dependence]
        spins = np.atleast_2d(spins)
        return self.evaluate_symbols(spins[:, _host_indices(window, sites)])

    def translate(self, x: Site) -> "LocalFunction":
        """f o theta_x, whose dependence set is dep(f) + x."""
        return LocalFunction(tuple(translate(s, x) for s in self.dependence), self.table, self.alphabet_size, self.name)

    def oscillation_vector(self) -> OscillationVector:
        return oscillation_vector(self)

    def describe(self) -> Dict[str, object]:
        return {"name": self.name, "dependence": [list(s) for s in self.dependence], "alphabet_size": self.alphabet_size}


def oscillation_vector(F) -> OscillationVector:
    """Exact delta_x(F) = sup |F(omega) - F(omega')| over pairs differing only at x.

    Accepts a LocalFunction (brute force over its table) or a BlockSum.
    """
    if isinstance(F, BlockSum):
        return F.oscillation_vector()
    entries = {}
    for axis, site in enumerate(F.dependence):
        moved = np.moveaxis(F.table, axis, 0).reshape(F.alphabet_size, -1)
        entries[site] = float(np.ptp(moved, axis=0).max())
    return OscillationVector(entries)


def spin_at(site: Optional[Site] = None, d: int = 1, alphabet_size: int = 2) -> LocalFunction:
    """omega_x as a real number (+-1 for two symbols)."""
    site = tuple(site) if site is not None else (0,) * d
    return LocalFunction((site,), symbol_values(alphabet_size), alphabet_size, name=f"spin{list(site)}")


def spin_product(sites: Sequence[Site], alphabet_size: int = 2) -> LocalFunction:
    """prod_x omega_x over the given sites."""
    sites = tuple(tuple(s) for s in sites)
    values = symbol_values(alphabet_size)
    table = np.ones((alphabet_size,) * len(sites))
    for axis in range(len(sites)):
        shape = [1] * len(sites)
        shape[axis] = alphabet_size
        table = table * values.reshape(shape)
    return LocalFunction(sites, table, alphabet_size, name="product" + "".join(str(list(s)) for s in sites))


def indicator(assignment: Dict[Site, int], alphabet_size: int = 2) -> LocalFunction:
    """1 when omega matches every (site, symbol) pair, else 0."""
    sites = tuple(sorted(tuple(s) for s in assignment))
    table = np.zeros((alphabet_size,) * len(sites))
    table[tuple(assignment[s] for s in sites)] = 1.0
    return LocalFunction(sites, table, alphabet_size, name="indicator")


def constant(value: float, alphabet_size: int = 2) -> LocalFunction:
    return LocalFunction((), np.array(float(value)), alphabet_size, name=f"const{value}")


def from_callable(
    sites: Sequence[Site],
    fn: Callable[[Tuple[int, ...]], float],
    alphabet_size: int = 2,
    name: str = "f",
) -> LocalFunction:
    """Tabulate ``fn(symbols)`` over every assignment of the given sites."""
    sites = tuple(tuple(s) for s in sites)
    table = np.empty((alphabet_size,) * len(sites))
    for symbols in itertools.product(range(alphabet_size), repeat=len(sites)):
        table[symbols] = fn(symbols)
    return LocalFunction(sites, table, alphabet_size, name=name)


def random_local_function(
    rng: np.random.Generator,
    d: int,
    alphabet_size: int = 2,
    max_sites: int = 3,
    radius: int = 1,
) -> LocalFunction:
    """Random table on a random nonempty subset of Lambda_radius."""
    candidates = box_sites(d, radius)
    m = int(rng.integers(1, min(max_sites, len(candidates)) + 1))
    chosen = sorted(candidates[i] for i in rng.choice(len(candidates), size=m, replace=False))
    table = rng.normal(size=(alphabet_size,) * m)
    return LocalFunction(tuple(chosen), table, alphabet_size, name="random")


@dataclass(frozen=True, eq=False)
class BlockSum:
    """S_Lambda f = sum over x in Lambda of f o theta_x.

    On a torus translates wrap; otherwise they live in Z^d and the
    dependence set is the Minkowski sum Lambda + dep(f).
    """

    f: LocalFunction
    window: Window

    def __post_init__(self):
        self.translates

    @cached_property
    def translates(self) -> List[Tuple[Site, Tuple[Site, ...]]]:
        out = []
        for x in self.window.sites:
            sites = tuple(translate(s, x) for s in self.f.dependence)
            if self.window.is_torus:
                sites = tuple(self.window.wrap(s) for s in sites)
                if len(set(sites)) != len(sites):
                    raise GeometryError("translate of the dependence set wraps onto itself; enlarge the torus")
            out.append((x, sites))
        return out

    @cached_property
    def dependence(self) -> Tuple[Site, ...]:
        return tuple(sorted({s for _, sites in self.translates for s in sites}))

    @property
    def alphabet_size(self) -> int:
        return self.f.alphabet_size

    @property
    def name(self) -> str:
        return f"S[{self.f.name}]"

    @property
    def volume(self) -> int:
        return self.window.size

    def __call__(self, omega: Configuration) -> float:
        return self.evaluate(omega)

    def evaluate(self, omega: Configuration) -> float:
        return math.fsum(
            float(self.f.table[tuple(_symbols_at(omega, s) for s in sites)]) for _, sites in self.translates
        )

    def evaluate_spins(
        self,
        spins: np.ndarray,
        host: Optional[Window] = None,
        boundary: Optional[Boundary] = None,
    ) -> np.ndarray:
        """Vectorized S_Lambda f over rows of spins living on ``host`` (default: the block's own window).

        Translates reaching outside a non-torus host read ``boundary`` spins.
        """
        host = host or self.window
        spins = np.atleast_2d(spins)
        if self.f.n_sites == 0:
            return np.full(spins.shape[0], float(self.f.table) * self.volume)
        outside = [] if host.is_torus else sorted({s for _, sites in self.translates for s in sites if not host.contains(s)})
        if outside:
            if boundary is None:
                raise GeometryError("block translates leave the window and no boundary spins were given")
            column = {s: host.size + j for j, s in enumerate(outside)}
            exterior = np.array([boundary.spin_at(s) for s in outside], dtype=spins.dtype)
            spins = np.concatenate([spins, np.broadcast_to(exterior, (spins.shape[0], exterior.size))], axis=1)
            index = np.array(
                [[column[s] if s in column else host.index(s) for s in sites] for _, sites in self.translates],
                dtype=np.int64,
            )
        else:
            index = np.array([_host_indices(host, sites) for _, sites in self.translates], dtype=np.int64)
        codes = spins[:, index].astype(np.int64) @ code_powers(self.alphabet_size, self.f.n_sites)
        return self.f.flat[codes].sum(axis=1)

    def site_oscillation(self, x: Site) -> float:
        """Exact delta_x(S f) by enumerating the union of the translates through x."""
        through = [sites for _, sites in self.translates if x in sites]
        if not through:
            return 0.0
        union = sorted({s for sites in through for s in sites})
        q, m = self.alphabet_size, len(union)
        if q**m > OSCILLATION_ENUMERATION_CAP:
            raise EnumerationCapError(f"oscillation at {x} needs {q}^{m} configurations")
        position = {s: i for i, s in enumerate(union)}
        symbols = decode_codes(np.arange(q**m, dtype=np.int64), q, m)
        g = np.zeros(q**m)
        for sites in through:
            g += self.f.evaluate_symbols(symbols[:, [position[s] for s in sites]])
        moved = np.moveaxis(g.reshape((q,) * m), position[x], 0).reshape(q, -1)
        return float(np.ptp(moved, axis=0).max())

    def oscillation_vector(self) -> OscillationVector:
        return OscillationVector({x: self.site_oscillation(x) for x in self.dependence})

    def describe(self) -> Dict[str, object]:
        return {"name": self.name, "f": self.f.describe(), "window": self.window.describe()}


def block_sum(f: LocalFunction, window: Window) -> BlockSum:
    """S_Lambda f for the sites of ``window``.

    Raises:
        GeometryError: If a translate wraps onto itself on a torus
    """
    return BlockSum(f, window)


def magnetization(window: Window) -> BlockSum:
    """Sum of spin values over the window."""
    return BlockSum(spin_at(d=window.d, alphabet_size=window.alphabet_size), window)


def young_bound_check(f: LocalFunction, window: Window, tolerance: float = 1e-12) -> Tuple[float, float, bool]:
    """Compare ||delta(S_Lambda f)||_2^2 with |Lambda| * ||delta(f)||_1^2.

    Returns:
        (lhs, rhs, ok)
    """
    lhs = block_sum(f, window).oscillation_vector().l2sq
    rhs = window.size * oscillation_vector(f).l1 ** 2
    return lhs, rhs, bool(lhs <= rhs * (1.0 + tolerance))

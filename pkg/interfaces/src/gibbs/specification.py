"""Gibbsian specification kernels and exact finite-volume Gibbs measures.

Everything here enumerates the full configuration space of a window, in
chunks of pattern codes, and works in log space with max-subtraction.
"""

import json
import logging
import sys
from concurrent.futures import ThreadPoolExecutor
from dataclasses import dataclass, replace
from pathlib import Path
from typing import Callable, List, Optional, Sequence, Union

import numpy as np
from scipy.special import logsumexp
from tqdm import tqdm

from ..config import LabConfig, get_config
from ..exceptions import EnumerationCapError, GeometryError
from ..lattice.geometry import Boundary, Configuration, Geometry, Site, Window, box_sites
from ..lattice.patterns import decode_codes, pattern_space_size
from ..models.hamiltonian import TermSet, compile_terms
from ..models.potential import Potential
from .distributions import PatternDistribution

logger = logging.getLogger(__name__)


def _check_cap(window: Window, cap: int) -> int:
    n_states = pattern_space_size(window.alphabet_size, window.size)
    if n_states > cap:
        raise EnumerationCapError(
            f"|S|^|Lambda| = {window.alphabet_size}^{window.size} exceeds the enumeration cap {cap}; use the sampler"
        )
    return n_states


def _chunks(n_states: int, chunk_size: int) -> List[range]:
    return [range(start, min(start + chunk_size, n_states)) for start in range(0, n_states, chunk_size)]


def _log_weights(
    term_set: TermSet,
    window: Window,
    boundary: Optional[Boundary],
    config: LabConfig,
) -> np.ndarray:
    """-H(omega | eta) for every configuration, indexed by pattern code."""
    n_states = _check_cap(window, config.enumeration_cap)
    term_set.exterior_values(boundary)

    def evaluate(block: range) -> np.ndarray:
        spins = decode_codes(np.arange(block.start, block.stop, dtype=np.int64), window.alphabet_size, window.size)
        return -term_set.energy(term_set.extend(spins, boundary))

    blocks = _chunks(n_states, config.chunk_size)
    show = len(blocks) > 8 and sys.stderr.isatty()
    with ThreadPoolExecutor(max_workers=config.threads) as pool:
        parts = list(tqdm(pool.map(evaluate, blocks), total=len(blocks), disable=not show, desc="enumerating"))
    return np.concatenate(parts)


@dataclass(frozen=True, eq=False)
class FiniteGibbsMeasure:
    """Exact gamma_Lambda(. | eta) as a probability table over all configurations.

    ``probs[code]`` is the probability of the configuration whose window
    spins decode from ``code`` (first site most significant).
    """

    window: Window
    boundary: Optional[Boundary]
    potential: Potential
    probs: np.ndarray
    logZ: float

    def __post_init__(self):
        probs = np.array(self.probs, dtype=float)
        expected = pattern_space_size(self.window.alphabet_size, self.window.size)
        if probs.shape != (expected,):
            raise GeometryError(f"expected {expected} probabilities, got shape {probs.shape}")
        probs.setflags(write=False)
        object.__setattr__(self, "probs", probs)

    @property
    def n_states(self) -> int:
        return int(self.probs.size)

    def with_probs(self, probs: np.ndarray) -> "FiniteGibbsMeasure":
        """Same window and model with a replaced (renormalized) table."""
        probs = np.asarray(probs, dtype=float)
        return replace(self, probs=probs / probs.sum())

    def spins(self, codes: Optional[np.ndarray] = None) -> np.ndarray:
        """Symbol rows for the given codes (all configurations by default)."""
        codes = np.arange(self.n_states, dtype=np.int64) if codes is None else np.asarray(codes, dtype=np.int64)
        return decode_codes(codes, self.window.alphabet_size, self.window.size)

    def configuration(self, code: int) -> Configuration:
        return Configuration(self.window, self.spins(np.array([code]))[0], self.boundary)

    def evaluate(self, fn: Callable[[np.ndarray], np.ndarray], chunk_size: int = 2**16) -> np.ndarray:
        """Apply a vectorized ``spins (M, N) -> values (M,)`` map to every configuration."""
        out = np.empty(self.n_states)
        for block in _chunks(self.n_states, chunk_size):
            out[block.start : block.stop] = fn(self.spins(np.arange(block.start, block.stop, dtype=np.int64)))
        return out

    def expectation(self, values: np.ndarray) -> float:
        return float(np.dot(self.probs, values))

    def observable_law(self, values: np.ndarray):
        """Distinct values of an observable and their probabilities."""
        support, inverse = np.unique(np.asarray(values, dtype=float), return_inverse=True)
        return support, np.bincount(inverse, weights=self.probs, minlength=support.size)

    def marginal(self, indices: Sequence[int]) -> np.ndarray:
        """Joint law of the spins at the given window positions.

        Returns:
            Dense vector over |S|^m codes, digits in the order of ``indices``
        """
        indices = [int(i) for i in indices]
        if len(set(indices)) != len(indices):
            raise GeometryError("marginal sites must be distinct")
        q, N = self.window.alphabet_size, self.window.size
        table = self.probs.reshape((q,) * N)
        others = tuple(i for i in range(N) if i not in indices)
        reduced = table.sum(axis=others) if others else table
        kept = sorted(indices)
        reduced = np.transpose(reduced, [kept.index(i) for i in indices])
        return np.ascontiguousarray(reduced).reshape(-1)

    def site_marginal(self, sites: Sequence[Site]) -> np.ndarray:
        return self.marginal(self.window.indices(sites))

    def to_text(self) -> str:
        """Header JSON line echoing the model, then ``code probability`` rows."""
        header = {
            "window": self.window.describe(),
            "boundary": None if self.boundary is None else self.boundary.describe(),
            "potential": self.potential.describe(),
            "logZ": repr(self.logZ),
        }
        lines = [json.dumps(header, sort_keys=True)]
        lines += [f"{code} {p!r}" for code, p in enumerate(self.probs.tolist())]
        return "\n".join(lines) + "\n"

    def write(self, path: Union[str, Path]) -> None:
        with open(path, "w", encoding="utf-8") as f:
            f.write(self.to_text())

    @classmethod
    def from_text(cls, text: str, potential: Potential) -> "FiniteGibbsMeasure":
        """Rebuild a measure from ``to_text`` output; the potential is supplied by the caller."""
        lines = text.strip().splitlines()
        header = json.loads(lines[0])
        w = header["window"]
        window = Window(d=w["d"], n=w["n"], geometry=Geometry(w["geometry"]), alphabet_size=w["alphabet_size"], side=w["side"])
        boundary = None
        if header["boundary"] is not None:
            b = header["boundary"]
            boundary = Boundary.explicit({tuple(s): v for s, v in b["exterior"]}, uniform=b["uniform"])
        probs = np.zeros(len(lines) - 1)
        for line in lines[1:]:
            code, p = line.split()
            probs[int(code)] = float(p)
        return cls(window, boundary, potential, probs, float(header["logZ"]))

    @classmethod
    def read(cls, path: Union[str, Path], potential: Potential) -> "FiniteGibbsMeasure":
        with open(path, "r", encoding="utf-8") as f:
            return cls.from_text(f.read(), potential)


def _require_boundary(window: Window, boundary: Optional[Boundary]) -> Optional[Boundary]:
    if window.geometry is Geometry.FIXED and boundary is None:
        raise GeometryError("a cube-with-fixed-boundary window needs boundary spins")
    return boundary if window.geometry is Geometry.FIXED else None


def partition_function(
    potential: Potential,
    window: Window,
    boundary: Optional[Boundary] = None,
    config: Optional[LabConfig] = None,
) -> float:
    """log Z_Lambda(eta) by exhaustive enumeration.

    Raises:
        EnumerationCapError: If |S|^|Lambda| exceeds the enumeration cap
    """
    config = config or get_config()
    boundary = _require_boundary(window, boundary)
    term_set = compile_terms(potential, window)
    return float(logsumexp(_log_weights(term_set, window, boundary, config)))


def gibbs_kernel(
    potential: Potential,
    window: Window,
    boundary: Optional[Boundary] = None,
    config: Optional[LabConfig] = None,
) -> FiniteGibbsMeasure:
    """Exact gamma_Lambda^Phi(. | eta) = exp(-H) / Z on every configuration of the window."""
    config = config or get_config()
    boundary = _require_boundary(window, boundary)
    term_set = compile_terms(potential, window)
    log_weights = _log_weights(term_set, window, boundary, config)
    logZ = float(logsumexp(log_weights))
    probs = np.exp(log_weights - logZ)
    logger.info(f"Enumerated {probs.size} configurations of {potential.name} on side-{window.side} window, logZ={logZ:.6f}")
    return FiniteGibbsMeasure(window, boundary, potential, probs, logZ)


def conditional_table(term_set: TermSet, boundary: Optional[Boundary]) -> np.ndarray:
    """gamma_{Lambda'}(a | c) for every region pattern a and in-window collar pattern c.

    Returns:
        Array (|S|^|Lambda'|, |S|^|collar|), columns summing to 1
    """
    q = term_set.window.alphabet_size
    region = decode_codes(np.arange(q**term_set.n_region), q, term_set.n_region)
    n_collar = int(term_set.collar_window.size)
    collar = decode_codes(np.arange(q**n_collar), q, n_collar)
    ext = term_set.assemble(region[:, None, :], collar[None, :, :], boundary)
    log_w = -term_set.energy(ext)
    return np.exp(log_w - logsumexp(log_w, axis=0, keepdims=True))


def dlr_check(measure: FiniteGibbsMeasure, sub_window: Union[Window, Sequence[Site]]) -> float:
    """Largest violation of the DLR equations over all cylinder events on Lambda'.

    For every pattern A on Lambda' and collar pattern eta compares
    mu(A, eta) with gamma_{Lambda'}(A | eta) mu(eta), where eta ranges
    over the collar of Lambda' inside the window and gamma is built from
    the potential independently of the measure's table.

    Raises:
        GeometryError: If the collar of Lambda' of width range(Phi) leaves the window
    """
    sites = sub_window.sites if isinstance(sub_window, Window) else [tuple(s) for s in sub_window]
    window = measure.window
    if not all(window.contains(s) for s in sites):
        raise GeometryError("Lambda' must lie inside the window")
    region = window.indices(sites)
    term_set = compile_terms(measure.potential, window, region)
    if term_set.collar_exterior:
        raise GeometryError(f"collar of width {measure.potential.range} around Lambda' leaves the window")

    joint = measure.marginal(list(term_set.region) + list(term_set.collar_window))
    n_region_patterns = window.alphabet_size**term_set.n_region
    joint = joint.reshape(n_region_patterns, -1)
    collar_law = joint.sum(axis=0)
    gamma = conditional_table(term_set, None)
    violation = float(np.max(np.abs(joint - gamma * collar_law[None, :])))
    logger.debug(f"DLR violation on {len(sites)}-site sub-window: {violation:.3e}")
    return violation


def exact_marginal(measure: FiniteGibbsMeasure, k: int) -> PatternDistribution:
    """Law of the Lambda_k pattern under an exact measure.

    Raises:
        GeometryError: If Lambda_k does not fit inside the window
    """
    window = measure.window
    if k < 0 or not all(window.contains(s) for s in box_sites(window.d, k)):
        raise GeometryError(f"Lambda_{k} does not fit inside the window")
    probs = measure.site_marginal(box_sites(window.d, k))
    return PatternDistribution(k, window.d, window.alphabet_size, probs=probs, tolerance=1e-9)

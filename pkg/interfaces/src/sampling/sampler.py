"""Single-site MCMC for finite-volume Gibbs measures with reproducible parallel chains."""

import json
import logging
import math
import sys
from concurrent.futures import ThreadPoolExecutor
from dataclasses import dataclass, field
from enum import Enum
from functools import cached_property
from pathlib import Path
from typing import Callable, Dict, List, Optional, Union

import numpy as np
from tqdm import tqdm

from ..config import LabConfig, get_config
from ..exceptions import EnumerationCapError, GeometryError
from ..lattice.geometry import Boundary, Configuration, Geometry, Window, symbol_values
from ..lattice.patterns import format_configuration
from ..models.hamiltonian import TermSet, compile_terms
from ..models.model_config import ModelParams, build_potential
from ..models.potential import Potential
from . import rng as streams
from .diagnostics import batch_means
from .kernels import heat_bath_pass, heat_bath_probabilities, metropolis_pass

logger = logging.getLogger(__name__)


class KernelKind(str, Enum):
    HEAT_BATH = "heat-bath"
    METROPOLIS = "metropolis"


_PASSES = {KernelKind.HEAT_BATH: heat_bath_pass, KernelKind.METROPOLIS: metropolis_pass}


@dataclass(frozen=True, eq=False)
class ChainConfig:
    """Everything that determines a set of chains, seed included."""

    window: Window
    boundary: Optional[Boundary]
    potential: Potential
    kernel: KernelKind = KernelKind.HEAT_BATH
    sweeps_burnin: int = 1000
    sweeps_between_samples: int = 1
    n_samples: int = 1000
    n_chains: int = 1
    seed: int = 0
    random_order: bool = False

    def __post_init__(self):
        object.__setattr__(self, "kernel", KernelKind(self.kernel))
        for name in ("sweeps_burnin", "sweeps_between_samples", "n_samples", "n_chains"):
            if getattr(self, name) < 1:
                raise ValueError(f"{name} must be >= 1, got {getattr(self, name)}")
        if not 0 <= self.seed < 2**64:
            raise ValueError(f"seed must be a 64-bit unsigned integer, got {self.seed}")
        if (self.window.geometry is Geometry.FIXED) != (self.boundary is not None):
            raise GeometryError("boundary spins are required iff the geometry is cube-with-fixed-boundary")

    @property
    def total_sweeps(self) -> int:
        return self.sweeps_burnin + self.sweeps_between_samples * self.n_samples

    @property
    def site_updates(self) -> float:
        return float(self.window.size) * self.total_sweeps * self.n_chains

    def chain_keys(self) -> List[int]:
        return [streams.chain_key(self.seed, chain) for chain in range(self.n_chains)]

    @cached_property
    def term_set(self) -> TermSet:
        return compile_terms(self.potential, self.window)

    def describe(self) -> Dict[str, object]:
        return {
            "window": self.window.describe(),
            "boundary": None if self.boundary is None else self.boundary.describe(),
            "potential": self.potential.describe(),
            "kernel": self.kernel.value,
            "sweeps_burnin": self.sweeps_burnin,
            "sweeps_between_samples": self.sweeps_between_samples,
            "n_samples": self.n_samples,
            "n_chains": self.n_chains,
            "seed": self.seed,
            "random_order": self.random_order,
        }


@dataclass(frozen=True, eq=False)
class SampleSet:
    """Samples of all chains, chain-major, with the chain index of each row."""

    config: ChainConfig
    spins: np.ndarray
    chain_index: np.ndarray
    metadata: Dict[str, object] = field(default_factory=dict)

    def __post_init__(self):
        expected = (self.config.n_samples * self.config.n_chains, self.config.window.size)
        if self.spins.shape != expected:
            raise GeometryError(f"sample array has shape {self.spins.shape}, expected {expected}")

    def __len__(self) -> int:
        return int(self.spins.shape[0])

    @property
    def window(self) -> Window:
        return self.config.window

    @property
    def samples(self) -> List[Configuration]:
        return [Configuration(self.window, row, self.config.boundary) for row in self.spins]

    def per_chain(self, values: np.ndarray) -> np.ndarray:
        """Reshape a per-sample vector to (chains, samples per chain)."""
        return np.asarray(values).reshape(self.config.n_chains, self.config.n_samples)

    def values(self) -> np.ndarray:
        """Physical spin values (+-1 for two-state models, 0..|S|-1 otherwise)."""
        return symbol_values(self.window.alphabet_size)[self.spins]

    def magnetization(self) -> np.ndarray:
        return self.values().sum(axis=1)

    def to_text(self) -> str:
        lines = [json.dumps(self.config.describe(), sort_keys=True)]
        for chain, row in zip(self.chain_index.tolist(), self.spins):
            omega = Configuration(self.window, row, self.config.boundary)
            lines.append(f"{chain} " + format_configuration(omega).splitlines()[1])
        return "\n".join(lines) + "\n"

    def write(self, path: Union[str, Path]) -> None:
        with open(path, "w", encoding="utf-8") as f:
            f.write(self.to_text())

    @classmethod
    def from_text(cls, text: str) -> "SampleSet":
        lines = text.strip().splitlines()
        header = json.loads(lines[0])
        w = header["window"]
        window = Window(d=w["d"], n=w["n"], geometry=Geometry(w["geometry"]), alphabet_size=w["alphabet_size"], side=w["side"])
        boundary = None
        if header["boundary"] is not None:
            b = header["boundary"]
            boundary = Boundary.explicit({tuple(s): v for s, v in b["exterior"]}, uniform=b["uniform"])
        p = header["potential"]
        params = {key: p[key] for key in ("model", "beta", "h", "J", "N", "alpha", "R") if p.get(key) is not None}
        potential = build_potential(ModelParams(d=p["d"], **params))
        config = ChainConfig(
            window=window,
            boundary=boundary,
            potential=potential,
            kernel=KernelKind(header["kernel"]),
            sweeps_burnin=header["sweeps_burnin"],
            sweeps_between_samples=header["sweeps_between_samples"],
            n_samples=header["n_samples"],
            n_chains=header["n_chains"],
            seed=header["seed"],
            random_order=header["random_order"],
        )
        rows = [line.split() for line in lines[1:]]
        chain_index = np.array([int(r[0]) for r in rows], dtype=np.int64)
        spins = np.array([[int(t) for t in r[1:]] for r in rows], dtype=np.int8)
        return cls(config, spins, chain_index)

    @classmethod
    def read(cls, path: Union[str, Path]) -> "SampleSet":
        with open(path, "r", encoding="utf-8") as f:
            return cls.from_text(f.read())


def _sweep(ext: np.ndarray, term_set: TermSet, kernel: KernelKind, uniforms: np.ndarray, order: np.ndarray) -> None:
    arrays = term_set.kernel_arrays
    _PASSES[kernel](
        ext,
        order,
        uniforms,
        arrays.term_sites,
        arrays.term_k,
        arrays.term_offset,
        arrays.tables,
        arrays.site_ptr,
        arrays.site_term,
        arrays.site_pos,
        term_set.window.alphabet_size,
    )


def sweep_rows(
    spins: np.ndarray,
    window: Window,
    boundary: Optional[Boundary],
    potential: Potential,
    rng: np.random.Generator,
    kernel: KernelKind = KernelKind.HEAT_BATH,
) -> np.ndarray:
    """Advance every row of an (M, N) symbol array by one independent lexicographic sweep."""
    spins = np.atleast_2d(np.asarray(spins))
    term_set = compile_terms(potential, window)
    order = np.arange(window.size, dtype=np.int64)
    out = np.empty_like(spins)
    for i, row in enumerate(spins):
        ext = term_set.extend(row, boundary).astype(np.int64).copy()
        _sweep(ext, term_set, KernelKind(kernel), rng.random((window.size, 2)), order)
        out[i] = ext[: window.size]
    return out


def _single_sweep(omega: Configuration, potential: Potential, rng: np.random.Generator, kernel: KernelKind) -> Configuration:
    return omega.with_spins(sweep_rows(omega.spins, omega.window, omega.boundary, potential, rng, kernel)[0])


def heat_bath_sweep(omega: Configuration, potential: Potential, rng: np.random.Generator) -> Configuration:
    """One lexicographic pass resampling every site from gamma_{x}(. | rest)."""
    return _single_sweep(omega, potential, rng, KernelKind.HEAT_BATH)


def metropolis_sweep(omega: Configuration, potential: Potential, rng: np.random.Generator) -> Configuration:
    """One lexicographic pass of single-site Metropolis updates."""
    return _single_sweep(omega, potential, rng, KernelKind.METROPOLIS)


def site_conditional(omega: Configuration, potential: Potential, site_index: int) -> np.ndarray:
    """The heat-bath law at one site given the rest of omega (and its boundary)."""
    term_set = compile_terms(potential, omega.window)
    ext = term_set.extend(omega.spins, omega.boundary).astype(np.int64)
    arrays = term_set.kernel_arrays
    return heat_bath_probabilities(
        ext,
        site_index,
        arrays.term_sites,
        arrays.term_k,
        arrays.term_offset,
        arrays.tables,
        arrays.site_ptr,
        arrays.site_term,
        arrays.site_pos,
        omega.window.alphabet_size,
    )


def _run_chain(cfg: ChainConfig, chain: int) -> np.ndarray:
    window, term_set = cfg.window, cfg.term_set
    uniform_symbol = cfg.boundary.uniform if cfg.boundary is not None and not cfg.boundary.exterior else None
    start = streams.initial_spins(cfg.seed, chain, window.size, window.alphabet_size, uniform_symbol)
    ext = term_set.extend(start, cfg.boundary).astype(np.int64).copy()
    out = np.empty((cfg.n_samples, window.size), dtype=np.int8)

    sweep = 0

    def advance(n: int) -> None:
        nonlocal sweep
        for _ in range(n):
            uniforms = streams.sweep_uniforms(cfg.seed, chain, sweep, window.size)
            order = streams.sweep_order(cfg.seed, chain, sweep, window.size, cfg.random_order)
            _sweep(ext, term_set, cfg.kernel, uniforms, order)
            sweep += 1

    advance(cfg.sweeps_burnin)
    for i in range(cfg.n_samples):
        advance(cfg.sweeps_between_samples)
        out[i] = ext[: window.size]
    return out


def run_chains(cfg: ChainConfig, config: Optional[LabConfig] = None) -> SampleSet:
    """Run ``n_chains`` independent chains; output is independent of the thread count.

    Raises:
        EnumerationCapError: If sites * sweeps * chains exceeds the chain budget
    """
    config = config or get_config()
    if cfg.site_updates > config.chain_budget:
        raise EnumerationCapError(f"{cfg.site_updates:.3g} site updates exceed the chain budget {config.chain_budget:.3g}")
    # compile once before threads share it
    cfg.term_set.kernel_arrays
    try:
        show = cfg.n_chains > 1 and sys.stderr.isatty()
        with ThreadPoolExecutor(max_workers=min(config.threads, cfg.n_chains)) as pool:
            blocks = list(
                tqdm(pool.map(lambda c: _run_chain(cfg, c), range(cfg.n_chains)), total=cfg.n_chains, disable=not show, desc="chains")
            )
    except Exception as e:
        logger.error(f"Chain run failed for {cfg.potential.name}: {str(e)}")
        raise
    spins = np.concatenate(blocks, axis=0)
    chain_index = np.repeat(np.arange(cfg.n_chains, dtype=np.int64), cfg.n_samples)
    logger.info(
        f"Sampled {cfg.n_chains} x {cfg.n_samples} configurations of {cfg.potential.name} "
        f"(beta={cfg.potential.beta}) on side-{cfg.window.side} {cfg.window.geometry.value}"
    )
    return SampleSet(cfg, spins, chain_index)


@dataclass(frozen=True)
class EventEstimate:
    """Probability estimate of an event from chain output."""

    p: float
    stderr: float
    ess: float
    n: int
    hits: int
    upper_bound: Optional[float] = None

    def to_dict(self) -> Dict[str, object]:
        return dict(self.__dict__)


def event_indicators(samples: SampleSet, event: Callable, vectorized: bool = False) -> np.ndarray:
    if vectorized:
        return np.asarray(event(samples.spins), dtype=float)
    return np.array([bool(event(omega)) for omega in samples.samples], dtype=float)


def estimate_event_probability(
    source: Union[ChainConfig, SampleSet],
    event: Callable,
    vectorized: bool = False,
    config: Optional[LabConfig] = None,
) -> EventEstimate:
    """Batch-means estimate of mu(event).

    Args:
        source: Chains to run, or samples already drawn
        event: Predicate on a Configuration, or on the (M, N) spin matrix when ``vectorized``
        vectorized: Whether ``event`` takes the spin matrix

    Returns:
        EventEstimate; with no hits, p = 0 and ``upper_bound`` = 3/n (one-sided 95%)
    """
    samples = source if isinstance(source, SampleSet) else run_chains(source, config)
    hits = event_indicators(samples, event, vectorized)
    n = int(hits.size)
    n_hits = int(hits.sum())
    if n_hits == 0:
        return EventEstimate(p=0.0, stderr=0.0, ess=float(n), n=n, hits=0, upper_bound=3.0 / n)
    if n_hits == n:
        return EventEstimate(p=1.0, stderr=0.0, ess=float(n), n=n, hits=n)
    stats = batch_means(samples.per_chain(hits))
    return EventEstimate(p=stats.mean, stderr=stats.stderr, ess=stats.ess, n=n, hits=n_hits)


ISING_CRITICAL_BETA = 0.5 * math.log(1.0 + math.sqrt(2.0))

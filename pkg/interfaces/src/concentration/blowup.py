"""Hamming blow-ups of cylinder sets and the concentration bound on their mass."""

import json
import logging
import math
from dataclasses import dataclass, field
from typing import Dict, Iterable, Optional, Tuple, Union

import numpy as np

from ..config import LabConfig, get_config, load_defaults
from ..exceptions import EnumerationCapError, GeometryError
from ..gibbs.specification import FiniteGibbsMeasure
from ..lattice.geometry import Window
from ..lattice.patterns import code_powers, decode_codes, encode_rows, pattern_space_size
from ..sampling.diagnostics import batch_means
from ..sampling.sampler import SampleSet
from .gcb import Verdict, judge

logger = logging.getLogger(__name__)


def hamming_radius(eps: float, volume: int) -> int:
    """Largest Hamming distance r with r < eps * |Lambda| (-1 when eps <= 0)."""
    if eps <= 0:
        return -1
    x = eps * volume
    nearest = round(x)
    # snap float noise onto positive integers only; any eps > 0 keeps C itself
    if nearest >= 1 and abs(x - nearest) < 1e-9 * max(1.0, x):
        x = float(nearest)
    return max(math.ceil(x) - 1, 0)


def _as_codes(C: Iterable[int]) -> np.ndarray:
    codes = np.unique(np.asarray(list(C) if not isinstance(C, np.ndarray) else C, dtype=np.int64))
    if codes.size == 0:
        raise ValueError("the cylinder set C must be nonempty")
    return codes


def blowup_set(C: Iterable[int], eps: float, window: Window, config: Optional[LabConfig] = None) -> np.ndarray:
    """<C>_eps = {omega : Hamming(omega, C) < eps |Lambda|} as sorted configuration codes.

    Breadth-first expansion one site change at a time.

    Raises:
        ValueError: If C is empty
        EnumerationCapError: If |S|^|Lambda| exceeds the exact blow-up cap
    """
    config = config or get_config()
    codes = _as_codes(C)
    q, N = window.alphabet_size, window.size
    n_states = pattern_space_size(q, N)
    if n_states > config.blowup_cap:
        raise EnumerationCapError(f"{q}^{N} configurations exceed the exact blow-up cap {config.blowup_cap}")
    if codes.min() < 0 or codes.max() >= n_states:
        raise ValueError("cylinder codes outside the configuration space")
    radius = hamming_radius(eps, N)
    if radius < 0:
        return np.zeros(0, dtype=np.int64)

    visited = np.zeros(n_states, dtype=bool)
    visited[codes] = True
    frontier = codes
    weights = code_powers(q, N)
    for _ in range(radius):
        if frontier.size == 0:
            break
        reached = []
        for start in range(0, frontier.size, config.chunk_size):
            block = frontier[start : start + config.chunk_size]
            digits = (block[:, None] // weights[None, :]) % q
            for shift in range(1, q):
                changed = (digits + shift) % q
                reached.append((block[:, None] + (changed - digits) * weights[None, :]).reshape(-1))
        neighbours = np.unique(np.concatenate(reached))
        frontier = neighbours[~visited[neighbours]]
        visited[frontier] = True
    return np.flatnonzero(visited).astype(np.int64)


def distance_to_set(spins: np.ndarray, C_spins: np.ndarray, block_elements: int = 2**24) -> np.ndarray:
    """min over c in C of the Hamming distance, for every row of ``spins``."""
    spins = np.atleast_2d(spins)
    C_spins = np.atleast_2d(C_spins)
    N = spins.shape[1]
    best = np.full(spins.shape[0], N + 1, dtype=np.int64)
    c_block = max(1, min(C_spins.shape[0], block_elements // max(1, N * spins.shape[0])))
    for start in range(0, C_spins.shape[0], c_block):
        part = C_spins[start : start + c_block]
        d = (spins[:, None, :] != part[None, :, :]).sum(axis=-1)
        best = np.minimum(best, d.min(axis=1))
    return best


def blowup_membership(spins: np.ndarray, C: Iterable[int], eps: float, window: Window, config: Optional[LabConfig] = None) -> np.ndarray:
    """Whether each sampled configuration lies in <C>_eps, by scanning C."""
    config = config or get_config()
    codes = _as_codes(C)
    if codes.size > config.blowup_sampled_set_cap:
        raise EnumerationCapError(f"|C| = {codes.size} exceeds the sampled-mode cap {config.blowup_sampled_set_cap}")
    C_spins = decode_codes(codes, window.alphabet_size, window.size)
    return distance_to_set(spins, C_spins) <= hamming_radius(eps, window.size)


def concentration_lower_bound(volume: int, eps: float, D: float, mass_C: float) -> Tuple[float, bool]:
    """1 - exp(-(|Lambda|/4D) (eps - 2 sqrt(D log(1/mu[C]) / |Lambda|))^2) and whether eps exceeds the threshold."""
    threshold = 2.0 * math.sqrt(D * math.log(1.0 / mass_C) / volume)
    applicable = eps > threshold
    bound = 1.0 - math.exp(-(volume / (4.0 * D)) * (eps - threshold) ** 2) if applicable else 0.0
    return bound, applicable


@dataclass(frozen=True)
class BlowupReport:
    window: Dict[str, object]
    C_size: int
    eps: float
    D: float
    mass_C: float
    mass_blowup: float
    bound: float
    applicable: bool
    ok: bool
    mode: str = "exact"
    stderr: float = 0.0
    verdict: Verdict = Verdict.PASS
    notes: Dict[str, object] = field(default_factory=dict)

    def to_dict(self) -> Dict[str, object]:
        out = dict(self.__dict__)
        out["verdict"] = self.verdict.value
        return out

    def to_json(self) -> str:
        return json.dumps(self.to_dict(), sort_keys=True)


def blowup_bound_check(
    source: Union[FiniteGibbsMeasure, SampleSet],
    C: Iterable[int],
    eps: float,
    D: float,
    config: Optional[LabConfig] = None,
) -> BlowupReport:
    """Compare mu(<C>_eps) with the concentration lower bound.

    Raises:
        ValueError: If C is empty or mu([C]) = 0
    """
    config = config or get_config()
    defaults = load_defaults()
    codes = _as_codes(C)
    window: Window = source.window
    if isinstance(source, FiniteGibbsMeasure):
        mass_C = float(source.probs[codes].sum())
        if mass_C <= 0.0:
            raise ValueError("mu([C]) must be positive")
        mass_blowup = float(source.probs[blowup_set(codes, eps, window, config)].sum())
        stderr, mode = 0.0, "exact"
    else:
        sample_codes = encode_rows(source.spins, window.alphabet_size)
        in_C = np.isin(sample_codes, codes).astype(float)
        mass_C = float(in_C.mean())
        if mass_C <= 0.0:
            raise ValueError("no sample falls in C; mu([C]) cannot be estimated")
        inside = blowup_membership(source.spins, codes, eps, window, config).astype(float)
        stats = batch_means(source.per_chain(inside))
        mass_blowup, stderr, mode = stats.mean, stats.stderr, "empirical"

    bound, applicable = concentration_lower_bound(window.size, eps, D, mass_C)
    # mass_blowup >= bound  <=>  -mass_blowup <= -bound
    verdict = judge(-mass_blowup, -bound, stderr, defaults.sigma_threshold, defaults.exact_tolerance) if applicable else Verdict.PASS
    return BlowupReport(
        window=window.describe(),
        C_size=int(codes.size),
        eps=eps,
        D=D,
        mass_C=mass_C,
        mass_blowup=mass_blowup,
        bound=bound,
        applicable=applicable,
        ok=verdict is not Verdict.FAIL,
        mode=mode,
        stderr=stderr,
        verdict=verdict,
    )


def blowup_property_parameters(D: float, eps: float, d: int) -> Tuple[float, float]:
    """(delta, N) of the blowing-up property.

    delta = eps^2 / (9D) and N = floor((36 D eps^-2 log(1/eps))^(1/d)) / 2:
    on windows with n >= N every C with mu([C]) >= exp(-|Lambda| delta)
    has mu(<C>_eps) >= 1 - eps.
    """
    if not 0 < eps < 1:
        raise ValueError(f"eps must lie in (0, 1), got {eps}")
    defaults = load_defaults()
    delta = eps * eps / (defaults.event_margin_divisor**2 * D)
    N = math.floor((defaults.deviation_constant * D * math.log(1.0 / eps) / (eps * eps)) ** (1.0 / d)) / 2.0
    return delta, N


@dataclass(frozen=True)
class BlowupPropertyCheck:
    delta: float
    N: float
    mass_C: float
    mass_blowup: float
    applicable: bool
    ok: bool

    def to_dict(self) -> Dict[str, object]:
        return dict(self.__dict__)


def blowup_property_check(measure: FiniteGibbsMeasure, C: Iterable[int], eps: float, D: float) -> BlowupPropertyCheck:
    """mu(<C>_eps) >= 1 - eps whenever the window and mu([C]) clear the property's thresholds."""
    window = measure.window
    if window.is_torus:
        raise GeometryError("the blowing-up property is stated on cubes")
    delta, N = blowup_property_parameters(D, eps, window.d)
    codes = _as_codes(C)
    mass_C = float(measure.probs[codes].sum())
    mass_blowup = float(measure.probs[blowup_set(codes, eps, window)].sum())
    applicable = window.n >= N and mass_C >= math.exp(-window.size * delta)
    ok = (not applicable) or mass_blowup >= 1.0 - eps - load_defaults().exact_tolerance
    return BlowupPropertyCheck(delta, N, mass_C, mass_blowup, applicable, bool(ok))

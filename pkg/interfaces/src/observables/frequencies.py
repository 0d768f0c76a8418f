"""Empirical pattern frequencies, total variation, and the frequency perturbation bound."""

import logging
import math
from collections import Counter
from dataclasses import dataclass
from typing import Dict, List, Optional, Sequence

import numpy as np
import pandas as pd

from ..config import get_config, load_defaults
from ..exceptions import GeometryError
from ..gibbs.distributions import PatternDistribution, aligned_masses
from ..lattice.geometry import Configuration, Window, hamming_distance
from ..lattice.patterns import anchor_codes, anchor_patterns, code_fits, pattern_key, pattern_space_size

logger = logging.getLogger(__name__)

FREQUENCY_COLUMNS = ["n", "k", "pattern_code", "freq"]
PROBE_COLUMNS = ["n", "side", "volume", "samples", "hits", "exceed_fraction", "upper_bound", "rate"]


def anchor_count(window: Window, k: int) -> int:
    """Number of Lambda_k translates fully inside the window: (side - 2k)^d."""
    return (window.side - 2 * k) ** window.d


def _check_radius(window: Window, k: int) -> None:
    if k < 0 or 2 * k + 1 >= window.side:
        raise GeometryError(f"pattern radius k={k} needs a window larger than side {window.side}")


def empirical_frequency(omega: Configuration, k: int) -> PatternDistribution:
    """f_{n,k}(omega; .): share of interior anchors showing each Lambda_k pattern.

    Raises:
        GeometryError: If k >= n
    """
    window = omega.window
    _check_radius(window, k)
    m = (2 * k + 1) ** window.d
    q = window.alphabet_size
    dense_cap = get_config().dense_table_cap
    if code_fits(q, m) and pattern_space_size(q, m) <= dense_cap:
        counts = np.bincount(anchor_codes(omega.spins, window, k), minlength=pattern_space_size(q, m))
        return PatternDistribution.from_counts(counts, k, window.d, q)
    counts = Counter(pattern_key(row, q) for row in anchor_patterns(omega.spins, window, k))
    return PatternDistribution.from_counts(counts, k, window.d, q, dense_cap=dense_cap)


def frequency_matrix(spins: np.ndarray, window: Window, k: int) -> np.ndarray:
    """Dense empirical frequencies for each row of a (M, N) spin matrix, shape (M, |S|^m)."""
    _check_radius(window, k)
    spins = np.atleast_2d(spins)
    n_patterns = pattern_space_size(window.alphabet_size, (2 * k + 1) ** window.d)
    codes = anchor_codes(spins, window, k)
    rows = spins.shape[0]
    flat = (codes + n_patterns * np.arange(rows)[:, None]).reshape(-1)
    counts = np.bincount(flat, minlength=rows * n_patterns).reshape(rows, n_patterns)
    return counts / codes.shape[1]


def tv_distance(p: PatternDistribution, q: PatternDistribution) -> float:
    """(1/2) * sum over patterns of |p - q|.

    Raises:
        ShapeMismatchError: If the laws live on different pattern spaces
    """
    a, b, _ = aligned_masses(p, q)
    return float(min(1.0, max(0.0, 0.5 * np.abs(a - b).sum())))


def frequency_table(distribution: PatternDistribution, n: int) -> pd.DataFrame:
    """CSV-ready rows (n, k, pattern_code, freq) over the patterns with positive frequency."""
    rows = [
        {"n": n, "k": distribution.k, "pattern_code": int(key) if not isinstance(key, tuple) else str(key), "freq": p}
        for key, p in distribution.items()
    ]
    return pd.DataFrame(rows, columns=FREQUENCY_COLUMNS)


def smallest_admissible_radius(k: int, d: int, ratio: Optional[float] = None) -> int:
    """Smallest n > k with ((2n+1) / (2(n-k)+1))^d <= ratio (5/4 by default)."""
    ratio = load_defaults().frequency_volume_ratio if ratio is None else ratio
    n = k + 1
    while ((2 * n + 1) / (2 * (n - k) + 1)) ** d > ratio:
        n += 1
    return n


def admissible_window(window: Window, k: int, ratio: Optional[float] = None) -> bool:
    """Whether |Lambda| / anchors <= ratio (5/4 by default), the volume condition of the eps claim."""
    ratio = load_defaults().frequency_volume_ratio if ratio is None else ratio
    return 2 * k + 1 < window.side and window.size / anchor_count(window, k) <= ratio


def hamming_tolerance(eps: float, k: int, d: int) -> float:
    """rho = 2 eps / (5 (2k+1)^d): admissible share of disagreeing sites."""
    defaults = load_defaults()
    return defaults.frequency_rho_numerator * eps / (defaults.frequency_rho_denominator * (2 * k + 1) ** d)


@dataclass(frozen=True)
class ShieldsCheck:
    """Both sides of the frequency perturbation bound for one pair of configurations."""

    tv: float
    bound: float
    ok: bool
    hamming: int
    eps: Optional[float] = None
    eps_applicable: bool = False
    eps_ok: Optional[bool] = None

    def __iter__(self):
        return iter((self.tv, self.bound, self.ok))


def shields_bound_check(
    omega: Configuration,
    eta: Configuration,
    k: int,
    eps: Optional[float] = None,
    tolerance: float = 1e-12,
) -> ShieldsCheck:
    """TV of the two Lambda_k frequency tables against (2k+1)^d / anchors * Hamming distance.

    With ``eps``, also checks the tv <= eps/2 claim whenever the window is
    at least the smallest admissible radius and the Hamming distance is at
    most rho * |Lambda|.
    """
    window = omega.window
    hamming = hamming_distance(omega, eta)
    tv = tv_distance(empirical_frequency(omega, k), empirical_frequency(eta, k))
    bound = (2 * k + 1) ** window.d / anchor_count(window, k) * hamming
    ok = bool(tv <= bound + tolerance)
    if eps is None:
        return ShieldsCheck(tv, bound, ok, hamming)
    applicable = admissible_window(window, k) and hamming <= hamming_tolerance(eps, k, window.d) * window.size
    eps_ok = bool(tv <= eps / 2 + tolerance) if applicable else None
    return ShieldsCheck(tv, bound, ok, hamming, eps=eps, eps_applicable=applicable, eps_ok=eps_ok)


def tv_to_reference(spins: np.ndarray, window: Window, reference: PatternDistribution) -> np.ndarray:
    """||f_{n,k}(omega; .) - reference||_TV for every row of a spin matrix."""
    if not reference.is_dense:
        raise GeometryError("reference law must be dense")
    freqs = frequency_matrix(spins, window, reference.k)
    return 0.5 * np.abs(freqs - reference.probs[None, :]).sum(axis=1)


def frequency_convergence_probe(
    samples_by_window: Sequence,
    reference: PatternDistribution,
    eps: float,
) -> pd.DataFrame:
    """Share of samples whose frequency table is eps-far from the reference, per window.

    Args:
        samples_by_window: Pairs (window, spin matrix) or SampleSet objects
        reference: Lambda_k law the frequencies should approach
        eps: TV threshold

    Returns:
        One row per window with the exceedance fraction and the per-site rate
        -log(fraction) / volume (inf when no sample exceeds; the one-sided
        bound 3/samples is reported alongside)
    """
    rows: List[Dict[str, object]] = []
    for item in samples_by_window:
        window, spins = (item.window, item.spins) if hasattr(item, "spins") else item
        distances = tv_to_reference(spins, window, reference)
        hits = int(np.count_nonzero(distances >= eps))
        fraction = hits / distances.size
        rows.append(
            {
                "n": window.n,
                "side": window.side,
                "volume": window.size,
                "samples": int(distances.size),
                "hits": hits,
                "exceed_fraction": fraction,
                "upper_bound": 3.0 / distances.size if hits == 0 else fraction,
                "rate": math.inf if hits == 0 else -math.log(fraction) / window.size,
            }
        )
        logger.info(f"side {window.side}: {hits}/{distances.size} samples at TV >= {eps}")
    return pd.DataFrame(rows, columns=PROBE_COLUMNS)

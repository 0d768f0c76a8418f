"""Per-site decay rates of block-average deviation events."""

import logging
import math
from dataclasses import dataclass, field
from typing import Dict, List, Optional, Sequence

import numpy as np
import pandas as pd

from ..config import LabConfig, get_config, load_defaults
from ..lattice.geometry import Boundary, Geometry, Window
from ..models.potential import Potential
from ..gibbs.specification import gibbs_kernel
from ..observables.local_functions import LocalFunction, block_sum, oscillation_vector
from ..sampling.sampler import ChainConfig, KernelKind, run_chains
from ..sampling.diagnostics import batch_means
from .gcb import Verdict, judge

logger = logging.getLogger(__name__)

UPPER = "upper"
INTERVAL = "interval"
AT_MOST = "at-most"

DEVIATION_COLUMNS = [
    "n",
    "side",
    "volume",
    "event",
    "mode",
    "mean",
    "block_mean_variance",
    "p",
    "stderr",
    "upper_bound",
    "rate",
    "floor",
    "verdict",
    "inclusion_ok",
]


@dataclass(frozen=True)
class SamplingPlan:
    """Chain settings used when a window is too large to enumerate."""

    sweeps_burnin: int = 1000
    sweeps_between_samples: int = 1
    n_samples: int = 10000
    n_chains: int = 4
    seed: int = 0
    kernel: KernelKind = KernelKind.HEAT_BATH


@dataclass(frozen=True)
class DeviationScan:
    rows: pd.DataFrame
    verdict: Verdict
    eps: float
    D: Optional[float]
    notes: Dict[str, object] = field(default_factory=dict)

    def rates(self, event: str = UPPER) -> List[float]:
        return self.rows.loc[self.rows["event"] == event, "rate"].tolist()


def rate_from_probability(p: float, volume: int) -> float:
    """-log(p) / |Lambda|, +inf for an empty event."""
    return math.inf if p <= 0.0 else -math.log(p) / volume


def deviation_floor(eps: float, D: float, f: LocalFunction) -> float:
    """eps^2 / (36 D ||delta f||_1^2): the guaranteed per-site rate of the upper event."""
    l1 = oscillation_vector(f).l1
    if l1 == 0.0:
        return math.inf
    return eps * eps / (load_defaults().deviation_constant * D * l1 * l1)


def event_indicators(block_means: np.ndarray, mean: float, eps: float, threshold: Optional[float] = None) -> Dict[str, np.ndarray]:
    """Membership of each configuration in the scanned events.

    ``upper``: block mean >= mean + eps/3; ``interval``: block mean strictly
    within eps/3 of mean + eps; ``at-most``: block mean <= threshold.
    """
    margin = eps / load_defaults().event_margin_divisor
    out = {
        UPPER: block_means >= mean + margin,
        INTERVAL: (block_means > mean + eps - margin) & (block_means < mean + eps + margin),
    }
    if threshold is not None:
        out[AT_MOST] = block_means <= threshold
    return out


def deviation_rate_scan(
    potential: Potential,
    f: LocalFunction,
    eps: float,
    n_list: Sequence[int] = (),
    boundary: Optional[Boundary] = None,
    geometry: Geometry = Geometry.FIXED,
    D: Optional[float] = None,
    threshold: Optional[float] = None,
    sides: Sequence[int] = (),
    reference_mean: Optional[float] = None,
    plan: Optional[SamplingPlan] = None,
    config: Optional[LabConfig] = None,
) -> DeviationScan:
    """Exact or sampled probabilities of block-mean deviation events and their per-site rates.

    Windows are the cubes Lambda_n for ``n_list`` plus boxes of the given
    ``sides``. Windows within the enumeration cap are done exactly, larger
    ones by sampling with ``plan``. With ``D`` the upper event's rate is
    checked against the guaranteed floor.

    Returns:
        DeviationScan with one row per (window, event)
    """
    config = config or get_config()
    defaults = load_defaults()
    geometry = Geometry.parse(geometry)
    q = potential.alphabet_size
    windows = [Window(d=potential.d, n=n, geometry=geometry, alphabet_size=q) for n in n_list]
    windows += [Window.with_side(potential.d, side, geometry, q) for side in sides]
    floor = deviation_floor(eps, D, f) if D is not None else None
    bnd = boundary if geometry is Geometry.FIXED else None

    rows: List[Dict[str, object]] = []
    verdicts: List[Verdict] = []
    for window in windows:
        S = block_sum(f, window)
        exact = q**window.size <= config.enumeration_cap
        if exact:
            measure = gibbs_kernel(potential, window, bnd, config)
            block_means = measure.evaluate(lambda spins: S.evaluate_spins(spins, window, bnd)) / window.size
            mean = measure.expectation(block_means) if reference_mean is None else reference_mean
            variance = measure.expectation((block_means - measure.expectation(block_means)) ** 2)
            events = event_indicators(block_means, mean, eps, threshold)
            inclusion_ok = bool(np.all(~events[INTERVAL] | events[UPPER]))
            estimates = {name: (float(np.dot(measure.probs, hit)), 0.0) for name, hit in events.items()}
            mode = "exact"
        else:
            plan = plan or SamplingPlan()
            cfg = ChainConfig(
                window=window,
                boundary=bnd,
                potential=potential,
                kernel=plan.kernel,
                sweeps_burnin=plan.sweeps_burnin,
                sweeps_between_samples=plan.sweeps_between_samples,
                n_samples=plan.n_samples,
                n_chains=plan.n_chains,
                seed=plan.seed,
            )
            samples = run_chains(cfg, config)
            block_means = S.evaluate_spins(samples.spins, window, bnd) / window.size
            mean = float(block_means.mean()) if reference_mean is None else reference_mean
            variance = float(block_means.var())
            events = event_indicators(block_means, mean, eps, threshold)
            inclusion_ok = bool(np.all(~events[INTERVAL] | events[UPPER]))
            estimates = {}
            for name, hit in events.items():
                stats = batch_means(samples.per_chain(hit.astype(float)))
                estimates[name] = (stats.mean, stats.stderr)
            mode = "sampled"

        for name, (p, err) in estimates.items():
            upper = 3.0 / len(block_means) if (not exact and p == 0.0) else p
            rate = rate_from_probability(p, window.size)
            verdict = Verdict.PASS
            if floor is not None and name == UPPER and math.isfinite(floor):
                # rate >= floor  <=>  p <= exp(-|Lambda| floor)
                verdict = judge(p, math.exp(-window.size * floor), err, defaults.sigma_threshold, defaults.exact_tolerance)
            if not inclusion_ok:
                verdict = Verdict.FAIL
            verdicts.append(verdict)
            rows.append(
                {
                    "n": window.n,
                    "side": window.side,
                    "volume": window.size,
                    "event": name,
                    "mode": mode,
                    "mean": mean,
                    "block_mean_variance": variance,
                    "p": p,
                    "stderr": err,
                    "upper_bound": upper,
                    "rate": rate,
                    "floor": floor if name == UPPER else None,
                    "verdict": verdict.value,
                    "inclusion_ok": inclusion_ok,
                }
            )
        logger.info(f"Deviation scan side {window.side} ({mode}) done")

    return DeviationScan(
        rows=pd.DataFrame(rows, columns=DEVIATION_COLUMNS),
        verdict=Verdict.combine(verdicts),
        eps=eps,
        D=D,
    )

"""Gaussian concentration bound tests: exponential moments, tails and variance."""

import json
import logging
import math
from dataclasses import dataclass, field
from enum import Enum
from typing import Dict, List, Optional, Sequence, Tuple, Union

import numpy as np
import pandas as pd
from scipy.special import logsumexp

from ..config import load_defaults
from ..exceptions import DegenerateFunctionError
from ..gibbs.specification import FiniteGibbsMeasure
from ..observables.local_functions import BlockSum, LocalFunction, OscillationVector, oscillation_vector
from ..sampling.diagnostics import batch_means
from ..sampling.sampler import SampleSet

logger = logging.getLogger(__name__)

Source = Union[FiniteGibbsMeasure, SampleSet]
Observable = Union[LocalFunction, BlockSum]

GCB_COLUMNS = ["lambda", "lhs", "stderr", "rhs", "verdict"]


class Verdict(str, Enum):
    PASS = "pass"
    FAIL = "fail"
    INCONCLUSIVE = "inconclusive"

    @classmethod
    def combine(cls, verdicts: Sequence["Verdict"]) -> "Verdict":
        if cls.FAIL in verdicts:
            return cls.FAIL
        if cls.INCONCLUSIVE in verdicts:
            return cls.INCONCLUSIVE
        return cls.PASS

    @property
    def exit_code(self) -> int:
        return {Verdict.PASS: 0, Verdict.FAIL: 1, Verdict.INCONCLUSIVE: 2}[self]


def judge(lhs: float, rhs: float, stderr: float, sigmas: float, tolerance: float = 1e-12) -> Verdict:
    """Three-valued comparison of an estimated left side against a bound.

    Exact inputs (stderr 0) pass or fail outright; estimated ones fail only
    when the excess is larger than ``sigmas`` standard errors.
    """
    if lhs <= rhs + tolerance * max(1.0, abs(rhs)):
        return Verdict.PASS
    if stderr == 0.0:
        return Verdict.FAIL
    if not math.isfinite(stderr) or lhs - rhs <= sigmas * stderr:
        return Verdict.INCONCLUSIVE
    return Verdict.FAIL


def observable_values(source: Source, F: Observable) -> np.ndarray:
    """F on every configuration (exact) or on every sample (empirical)."""
    if isinstance(source, FiniteGibbsMeasure):
        if isinstance(F, BlockSum):
            return source.evaluate(lambda spins: F.evaluate_spins(spins, source.window, source.boundary))
        return source.evaluate(lambda spins: F.evaluate_spins(spins, source.window))
    if isinstance(F, BlockSum):
        return F.evaluate_spins(source.spins, source.window, source.config.boundary)
    return F.evaluate_spins(source.spins, source.window)


def _oscillation(F: Union[Observable, OscillationVector, float]) -> float:
    if isinstance(F, OscillationVector):
        return F.l2sq
    if isinstance(F, (LocalFunction, BlockSum)):
        return oscillation_vector(F).l2sq
    return float(F)


@dataclass(frozen=True)
class GcbTestReport:
    """Exponential-moment inequality log E[exp(lambda(F - EF))] <= D lambda^2 ||delta F||_2^2 per lambda."""

    D_certified: Optional[float]
    lambda_grid: List[float]
    lhs: List[float]
    lhs_stderr: List[float]
    rhs: List[float]
    verdicts: List[Verdict]
    verdict: Verdict
    mode: str
    function: str
    l1: float
    l2sq: float
    mean: float
    ess: Optional[float] = None
    notes: Dict[str, object] = field(default_factory=dict)

    def to_frame(self) -> pd.DataFrame:
        return pd.DataFrame(
            {
                "lambda": self.lambda_grid,
                "lhs": self.lhs,
                "stderr": self.lhs_stderr,
                "rhs": self.rhs,
                "verdict": [v.value for v in self.verdicts],
            },
            columns=GCB_COLUMNS,
        )

    def to_dict(self) -> Dict[str, object]:
        return {
            "D": self.D_certified,
            "mode": self.mode,
            "function": self.function,
            "l1": self.l1,
            "l2sq": self.l2sq,
            "mean": self.mean,
            "ess": self.ess,
            "verdict": self.verdict.value,
            "rows": self.to_frame().to_dict(orient="records"),
            "notes": self.notes,
        }

    def to_json(self) -> str:
        return json.dumps(self.to_dict(), sort_keys=True)


def default_lambda_grid(oscillation: OscillationVector, magnitudes: Optional[Sequence[float]] = None) -> List[float]:
    """+-g / ||delta F||_2 for each magnitude g, dropping lambdas with |lambda| ||delta F||_1 above the cap."""
    defaults = load_defaults()
    magnitudes = defaults.lambda_grid if magnitudes is None else magnitudes
    if oscillation.l2sq == 0.0:
        return sorted([-g for g in magnitudes] + list(magnitudes))
    grid = []
    for g in magnitudes:
        lam = g / oscillation.l2
        if lam * oscillation.l1 <= defaults.lambda_oscillation_cap:
            grid += [-lam, lam]
    return sorted(grid)


def gcb_test(
    source: Source,
    F: Observable,
    D: float,
    lambda_grid: Optional[Sequence[float]] = None,
    n_batches: int = 20,
) -> GcbTestReport:
    """Check the Gaussian concentration inequality for lambda * F on a grid of lambdas.

    Args:
        source: Exact measure (enumeration) or SampleSet (batch-means errors)
        F: Local function or block sum
        D: The constant being tested
        lambda_grid: Explicit lambdas; defaults to the scaled grid from the defaults file
        n_batches: Batches per chain in empirical mode

    Returns:
        GcbTestReport with per-lambda and overall verdicts
    """
    defaults = load_defaults()
    osc = oscillation_vector(F)
    grid = sorted(lambda_grid) if lambda_grid is not None else default_lambda_grid(osc)
    values = observable_values(source, F)
    exact = isinstance(source, FiniteGibbsMeasure)

    lhs, errs, rhs, verdicts = [], [], [], []
    ess = None
    if exact:
        mean = source.expectation(values)
        centred = values - mean
        for lam in grid:
            lhs.append(float(logsumexp(lam * centred, b=source.probs)))
            errs.append(0.0)
    else:
        mean = float(values.mean())
        centred = values - mean
        per_chain = source.per_chain(centred)
        ess = batch_means(per_chain, n_batches).ess if values.size > 1 else float(values.size)
        for lam in grid:
            weights = np.exp(lam * per_chain)
            stats = batch_means(weights, n_batches)
            lhs.append(float(math.log(stats.mean)))
            errs.append(float(stats.stderr / stats.mean))
    for lam, value, err in zip(grid, lhs, errs):
        bound = D * lam * lam * osc.l2sq
        rhs.append(bound)
        # a constant F has lhs exactly 0
        verdicts.append(Verdict.PASS if osc.l2sq == 0.0 else judge(value, bound, err, defaults.sigma_threshold, defaults.exact_tolerance))

    verdict = Verdict.combine(verdicts)
    logger.info(f"GCB test ({'exact' if exact else 'empirical'}) of {F.name} with D={D:.6g}: {verdict.value}")
    return GcbTestReport(
        D_certified=D,
        lambda_grid=list(grid),
        lhs=lhs,
        lhs_stderr=errs,
        rhs=rhs,
        verdicts=verdicts,
        verdict=verdict,
        mode="exact" if exact else "empirical",
        function=F.name,
        l1=osc.l1,
        l2sq=osc.l2sq,
        mean=float(mean),
        ess=ess,
    )


def tail_bound(D: float, u: float, F: Union[Observable, OscillationVector, float], two_sided: bool = False) -> float:
    """Chernoff bound exp(-u^2 / (4 D ||delta F||_2^2)) on mu(F - EF >= u).

    Args:
        D: Concentration constant
        u: Deviation, > 0
        F: Function, its oscillation vector, or ||delta F||_2^2 directly
        two_sided: Bound mu(|F - EF| >= u) instead (twice the one-sided bound)

    Raises:
        ValueError: If u <= 0
        DegenerateFunctionError: If F has zero oscillation
    """
    if u <= 0:
        raise ValueError(f"deviation u must be positive, got {u}")
    l2sq = _oscillation(F)
    if l2sq <= 0.0:
        raise DegenerateFunctionError("tail bound needs ||delta F||_2^2 > 0")
    bound = math.exp(-(u * u) / (4.0 * D * l2sq))
    return 2.0 * bound if two_sided else bound


@dataclass(frozen=True)
class BoundCheck:
    """A measured quantity against its bound."""

    value: float
    bound: float
    ok: bool
    stderr: float = 0.0
    verdict: Verdict = Verdict.PASS

    def __iter__(self):
        return iter((self.value, self.bound, self.ok))

    def to_dict(self) -> Dict[str, object]:
        return {"value": self.value, "bound": self.bound, "ok": self.ok, "stderr": self.stderr, "verdict": self.verdict.value}


def _probability(source: Source, hits: np.ndarray, n_batches: int = 20) -> Tuple[float, float]:
    if isinstance(source, FiniteGibbsMeasure):
        return float(np.dot(source.probs, hits)), 0.0
    stats = batch_means(source.per_chain(hits), n_batches)
    return stats.mean, stats.stderr


def tail_bound_check(source: Source, F: Observable, D: float, u: float, two_sided: bool = False) -> BoundCheck:
    """Exceedance probability of F - EF >= u (or |F - EF| >= u) against the Chernoff bound."""
    defaults = load_defaults()
    bound = tail_bound(D, u, F, two_sided)
    values = observable_values(source, F)
    mean = source.expectation(values) if isinstance(source, FiniteGibbsMeasure) else float(values.mean())
    deviation = np.abs(values - mean) if two_sided else values - mean
    p, err = _probability(source, (deviation >= u).astype(float))
    verdict = judge(p, bound, err, defaults.sigma_threshold, defaults.exact_tolerance)
    return BoundCheck(p, bound, verdict is not Verdict.FAIL, err, verdict)


def variance_bound_check(source: Source, F: Observable, D: float) -> BoundCheck:
    """Var(F) against 2 D ||delta F||_2^2; empirical mode allows 3 standard errors."""
    defaults = load_defaults()
    bound = 2.0 * D * oscillation_vector(F).l2sq
    values = observable_values(source, F)
    if isinstance(source, FiniteGibbsMeasure):
        mean = source.expectation(values)
        var = max(0.0, source.expectation((values - mean) ** 2))
        err = 0.0
    else:
        squares = (values - values.mean()) ** 2
        stats = batch_means(source.per_chain(squares))
        var, err = stats.mean, stats.stderr
    verdict = judge(var, bound, err, defaults.sigma_threshold, defaults.exact_tolerance)
    return BoundCheck(float(var), bound, verdict is not Verdict.FAIL, err, verdict)

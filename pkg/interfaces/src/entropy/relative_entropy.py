"""Relative entropy of pattern laws and per-site entropy sequences of finite-volume measures."""

import json
import logging
import math
from dataclasses import dataclass, field
from typing import Dict, List, Optional, Sequence, Tuple, Union

import numpy as np
import pandas as pd

from ..config import LabConfig, load_defaults
from ..exceptions import AbsoluteContinuityError, GeometryError
from ..gibbs.distributions import PatternDistribution, aligned_masses
from ..gibbs.specification import FiniteGibbsMeasure, exact_marginal, gibbs_kernel
from ..lattice.geometry import Boundary, Geometry, Window
from ..models.potential import Potential

logger = logging.getLogger(__name__)

ENTROPY_COLUMNS = ["n", "volume", "H_n", "per_site"]


def relative_entropy_arrays(nu: np.ndarray, mu: np.ndarray, keys: Optional[Sequence] = None) -> float:
    """sum nu log(nu / mu) in natural log, with 0 log 0 = 0.

    Raises:
        AbsoluteContinuityError: If nu charges a point where mu vanishes
    """
    nu = np.asarray(nu, dtype=float)
    mu = np.asarray(mu, dtype=float)
    charged = nu > 0
    bad = np.flatnonzero(charged & (mu <= 0))
    if bad.size:
        key = keys[bad[0]] if keys is not None else int(bad[0])
        raise AbsoluteContinuityError(key)
    value = float(np.sum(nu[charged] * np.log(nu[charged] / mu[charged])))
    return max(0.0, value)


def relative_entropy(nu: PatternDistribution, mu: PatternDistribution) -> float:
    """H(nu | mu) between two laws on the same pattern space."""
    a, b, keys = aligned_masses(nu, mu)
    return relative_entropy_arrays(a, b, keys)


def abs_entropy_bound_check(nu: PatternDistribution, mu: PatternDistribution, tolerance: float = 1e-12) -> Tuple[float, float, bool]:
    """sum nu |log(nu / mu)| against H(nu | mu) + 2/e.

    Returns:
        (lhs, rhs, ok)
    """
    a, b, keys = aligned_masses(nu, mu)
    H = relative_entropy_arrays(a, b, keys)
    charged = a > 0
    lhs = float(np.sum(a[charged] * np.abs(np.log(a[charged] / b[charged]))))
    rhs = H + load_defaults().entropy_slack
    return lhs, rhs, bool(lhs <= rhs + tolerance)


def _trend(values: Sequence[float], tolerance: float = 1e-12) -> str:
    diffs = np.diff(np.asarray(values, dtype=float))
    if diffs.size == 0 or np.all(np.abs(diffs) <= tolerance):
        return "constant"
    if np.all(diffs < -tolerance):
        return "decreasing"
    if np.all(diffs > tolerance):
        return "increasing"
    return "mixed"


@dataclass(frozen=True)
class EntropyReport:
    """H_n(nu_n | mu_n) over a list of windows, with trend diagnostics.

    The fit regresses per-site entropy on 1/side; the intercept is an
    extrapolation reported without any claim about the limit.
    """

    n_list: List[int]
    sides: List[int]
    volumes: List[int]
    H: List[float]
    per_site: List[float]
    trend: str
    slope: Optional[float] = None
    intercept: Optional[float] = None
    notes: Dict[str, object] = field(default_factory=dict)

    @property
    def all_zero(self) -> bool:
        return all(abs(v) <= 1e-12 for v in self.per_site)

    @property
    def decreasing(self) -> bool:
        return self.trend == "decreasing"

    def to_frame(self) -> pd.DataFrame:
        return pd.DataFrame(
            {"n": self.n_list, "volume": self.volumes, "H_n": self.H, "per_site": self.per_site},
            columns=ENTROPY_COLUMNS,
        )

    def to_dict(self) -> Dict[str, object]:
        return {
            "rows": self.to_frame().to_dict(orient="records"),
            "sides": self.sides,
            "trend": self.trend,
            "slope": self.slope,
            "intercept": self.intercept,
            "notes": self.notes,
        }

    def to_json(self) -> str:
        return json.dumps(self.to_dict(), sort_keys=True)

    def write_csv(self, path) -> None:
        self.to_frame().to_csv(path, index=False)


def _windows(d: int, alphabet_size: int, n_list: Sequence[int], sides: Sequence[int], geometry: Geometry) -> List[Window]:
    windows = [Window(d=d, n=n, geometry=geometry, alphabet_size=alphabet_size) for n in n_list]
    windows += [Window.with_side(d, side, geometry, alphabet_size) for side in sides]
    return sorted(windows, key=lambda w: w.side)


def per_site_entropy_sequence(
    model_nu: Potential,
    model_mu: Potential,
    n_list: Sequence[int] = (),
    boundary_nu: Optional[Boundary] = None,
    boundary_mu: Optional[Boundary] = None,
    geometry: Union[str, Geometry] = Geometry.FIXED,
    sides: Sequence[int] = (),
    config: Optional[LabConfig] = None,
) -> EntropyReport:
    """H_n(nu_n | mu_n) / |Lambda_n| from exact finite-volume surrogate measures.

    The two measures may share a potential and differ in boundary (the
    phase-coexistence probe) or have different potentials.

    Raises:
        EnumerationCapError: If a window is too large to enumerate
    """
    if (model_nu.d, model_nu.alphabet_size) != (model_mu.d, model_mu.alphabet_size):
        raise GeometryError("both models must share dimension and alphabet")
    geometry = Geometry.parse(geometry)
    windows = _windows(model_nu.d, model_nu.alphabet_size, n_list, sides, geometry)
    H, per_site = [], []
    for window in windows:
        nu = gibbs_kernel(model_nu, window, boundary_nu, config)
        mu = gibbs_kernel(model_mu, window, boundary_mu, config)
        value = relative_entropy_arrays(nu.probs, mu.probs)
        H.append(value)
        per_site.append(value / window.size)
        logger.info(f"side {window.side}: H_n = {value:.6g}, per site {value / window.size:.6g}")

    slope = intercept = None
    if len(windows) >= 2:
        slope, intercept = (float(c) for c in np.polyfit([1.0 / w.side for w in windows], per_site, 1))
    return EntropyReport(
        n_list=[w.n for w in windows],
        sides=[w.side for w in windows],
        volumes=[w.size for w in windows],
        H=H,
        per_site=per_site,
        trend=_trend(per_site),
        slope=slope,
        intercept=intercept,
    )


@dataclass(frozen=True)
class ProjectiveEntropyCheck:
    k_list: List[int]
    H: List[float]
    H_full: float
    ok: bool

    def to_dict(self) -> Dict[str, object]:
        return dict(self.__dict__)


def projective_entropy_check(
    nu: FiniteGibbsMeasure,
    mu: FiniteGibbsMeasure,
    k_list: Sequence[int],
    tolerance: float = 1e-12,
) -> ProjectiveEntropyCheck:
    """H of Lambda_k marginals never exceeds H of a larger cube's (nor of the full window)."""
    if nu.window != mu.window:
        raise GeometryError("both measures must live on the same window")
    ks = sorted(k_list)
    H = [relative_entropy(exact_marginal(nu, k), exact_marginal(mu, k)) for k in ks]
    H_full = relative_entropy_arrays(nu.probs, mu.probs)
    chain = H + [H_full]
    ok = all(a <= b + tolerance for a, b in zip(chain, chain[1:]))
    return ProjectiveEntropyCheck(ks, H, H_full, bool(ok))


def product_kl(p: float, q: float) -> float:
    """KL(Bernoulli(p) || Bernoulli(q)), natural log."""
    terms = 0.0
    if p > 0:
        terms += p * math.log(p / q)
    if p < 1:
        terms += (1 - p) * math.log((1 - p) / (1 - q))
    return terms

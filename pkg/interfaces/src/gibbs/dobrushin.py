"""Dobrushin interdependence matrix, uniqueness constant and the certified GCB constant."""

import itertools
import json
import logging
import math
from concurrent.futures import ThreadPoolExecutor
from dataclasses import dataclass, field
from typing import Dict, List, Optional

import numpy as np
from scipy.special import logsumexp

from ..config import LabConfig, get_config
from ..exceptions import EnumerationCapError
from ..lattice.geometry import Geometry, Site, Window
from ..lattice.patterns import decode_codes
from ..models.hamiltonian import compile_terms
from ..models.potential import Potential

logger = logging.getLogger(__name__)


def gcb_constant(c: float) -> float:
    """D = 1 / (2 (1 - c)^2), valid for c < 1."""
    return 1.0 / (2.0 * (1.0 - c) ** 2)


@dataclass(frozen=True)
class DobrushinReport:
    """Outcome of the Dobrushin uniqueness check for one potential."""

    c: float
    row: Dict[Site, float]
    satisfied: bool
    D: Optional[float] = None
    potential: Dict[str, object] = field(default_factory=dict)

    def to_dict(self) -> Dict[str, object]:
        return {
            "c": self.c,
            "satisfied": self.satisfied,
            "D": self.D,
            "row": [{"y": list(y), "value": v} for y, v in sorted(self.row.items())],
            "potential": self.potential,
        }

    def to_json(self) -> str:
        return json.dumps(self.to_dict(), sort_keys=True)


def single_site_kernels(potential: Potential, config: Optional[LabConfig] = None):
    """gamma_{0}(. | eta) for every configuration eta of the origin's neighbourhood.

    Returns:
        (neighbour sites, kernel array of shape (|S|, |S|^m)) where column c
        is the law at the origin given neighbour symbols decoded from c
    """
    config = config or get_config()
    origin_window = Window(d=potential.d, n=0, geometry=Geometry.FIXED, alphabet_size=potential.alphabet_size)
    term_set = compile_terms(potential, origin_window)
    neighbours = list(term_set.collar_exterior)
    q, m = potential.alphabet_size, len(neighbours)
    if q**m > config.neighborhood_cap:
        raise EnumerationCapError(f"neighbourhood has {q}^{m} configurations, above the cap {config.neighborhood_cap}")
    eta = decode_codes(np.arange(q**m, dtype=np.int64), q, m).astype(np.int64)
    centre = np.arange(q, dtype=np.int64)
    ext = np.concatenate(
        [np.broadcast_to(centre[:, None, None], (q, q**m, 1)), np.broadcast_to(eta[None, :, :], (q, q**m, m))],
        axis=-1,
    )
    log_w = -term_set.energy(ext)
    return neighbours, np.exp(log_w - logsumexp(log_w, axis=0, keepdims=True))


def _row_entry(kernels: np.ndarray, position: int, q: int, m: int) -> float:
    """max TV between kernels whose boundaries differ only at one neighbour."""
    codes = np.arange(q**m, dtype=np.int64)
    weight = q ** (m - 1 - position)
    digit = (codes // weight) % q
    best = 0.0
    for b in range(q):
        partner = codes + (b - digit) * weight
        tv = 0.5 * np.abs(kernels - kernels[:, partner]).sum(axis=0)
        best = max(best, float(tv.max()))
    return best


def interdependence_row(potential: Potential, config: Optional[LabConfig] = None) -> Dict[Site, float]:
    """C(0, y) for every y != 0 with |y|_inf <= range(Phi).

    Each entry is the exhaustive maximum, over boundary pairs differing
    only at y, of the total variation between the two single-site kernels.

    Raises:
        EnumerationCapError: If the neighbourhood is too large to enumerate
    """
    config = config or get_config()
    neighbours, kernels = single_site_kernels(potential, config)
    q, m = potential.alphabet_size, len(neighbours)
    R = potential.range
    row = {
        y: 0.0
        for y in itertools.product(range(-R, R + 1), repeat=potential.d)
        if any(y)
    }
    with ThreadPoolExecutor(max_workers=config.threads) as pool:
        values = list(pool.map(lambda j: _row_entry(kernels, j, q, m), range(m)))
    for y, value in zip(neighbours, values):
        row[tuple(y)] = value
    return row


def dobrushin_constant(potential: Potential, config: Optional[LabConfig] = None) -> float:
    """c = sum_y C(0, y) (shift invariance reduces the sup over x to the origin)."""
    return math.fsum(interdependence_row(potential, config).values())


def gcb_certificate(potential: Potential, config: Optional[LabConfig] = None) -> DobrushinReport:
    """Certify a Gaussian concentration constant when Dobrushin's condition holds."""
    row = interdependence_row(potential, config)
    c = math.fsum(row.values())
    satisfied = c < 1.0
    D = gcb_constant(c) if satisfied else None
    if satisfied:
        logger.info(f"Dobrushin condition holds for {potential.name} (beta={potential.beta}): c={c:.6f}, D={D:.6f}")
    else:
        logger.info(f"Dobrushin condition fails for {potential.name} (beta={potential.beta}): c={c:.6f}")
    return DobrushinReport(c=c, row=row, satisfied=satisfied, D=D, potential=potential.describe())


def analytic_ising_constant(beta: float, d: int, J: float = 1.0) -> float:
    """Closed form of c for the zero-field nearest-neighbour Ising model: d * tanh(2 beta |J|)."""
    return d * math.tanh(2.0 * beta * abs(J))


def constant_table(potentials: List[Potential], config: Optional[LabConfig] = None) -> List[Dict[str, object]]:
    """One summary row per potential, for beta sweeps."""
    rows = []
    for potential in potentials:
        report = gcb_certificate(potential, config)
        rows.append({"beta": potential.beta, "c": report.c, "satisfied": report.satisfied, "D": report.D})
    return rows

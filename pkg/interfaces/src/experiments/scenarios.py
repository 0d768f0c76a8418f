"""Scenario implementations: each binds the library into one checkable experiment."""

import logging
import math
from dataclasses import dataclass, field
from typing import Callable, Dict, List, Optional, Tuple, Union

import numpy as np
import pandas as pd

from ..concentration.blowup import blowup_bound_check, blowup_property_check
from ..concentration.deviations import AT_MOST, SamplingPlan, deviation_rate_scan
from ..concentration.gcb import Verdict, gcb_test, judge, tail_bound_check, variance_bound_check
from ..config import LabConfig, load_defaults
from ..entropy.relative_entropy import (
    abs_entropy_bound_check,
    per_site_entropy_sequence,
    projective_entropy_check,
    relative_entropy,
)
from ..exceptions import EnumerationCapError, ScenarioError
from ..gibbs.distributions import EMPIRICAL, PatternDistribution
from ..gibbs.dobrushin import analytic_ising_constant, gcb_certificate
from ..gibbs.specification import FiniteGibbsMeasure, exact_marginal, gibbs_kernel
from ..lattice.geometry import Boundary, Geometry, Window, box_sites, symbol_values
from ..lattice.patterns import code_fits, decode_codes, encode_rows
from ..models.model_config import build_potential
from ..models.potential import Potential, dyson_truncation_tail, summability_norm
from ..observables.frequencies import (
    admissible_window,
    anchor_count,
    frequency_convergence_probe,
    frequency_matrix,
    frequency_table,
    hamming_tolerance,
    smallest_admissible_radius,
)
from ..observables.local_functions import BlockSum, LocalFunction, block_sum, magnetization, spin_at, spin_product
from ..sampling.diagnostics import batch_means
from ..sampling.rng import derive_seed
from ..sampling.sampler import ChainConfig, SampleSet, run_chains
from .spec import ExperimentSpec, make_boundary

logger = logging.getLogger(__name__)

TREND_NOTE = "finite-volume trend check; infinite-volume limits are not computed"


@dataclass
class ScenarioResult:
    """Verdict, JSON summary and CSV tables of one scenario run."""

    scenario: str
    verdict: Verdict
    summary: Dict[str, object]
    tables: Dict[str, pd.DataFrame] = field(default_factory=dict)
    notes: List[str] = field(default_factory=list)


def _use_exact(spec: ExperimentSpec, window: Window, config: LabConfig) -> bool:
    mode = spec.parameters.mode
    if mode == "exact":
        return True
    if mode == "empirical":
        return False
    return window.alphabet_size**window.size <= config.enumeration_cap


def _burnin(spec: ExperimentSpec, potential: Potential, config: LabConfig) -> int:
    """Explicit burn-in, else the short default inside the Dobrushin regime and the long one outside."""
    if spec.sampling.sweeps_burnin is not None:
        return spec.sampling.sweeps_burnin
    defaults = load_defaults()
    try:
        satisfied = gcb_certificate(potential, config).satisfied
    except EnumerationCapError:
        satisfied = False
    return defaults.burnin_high_temperature if satisfied else defaults.burnin_low_temperature


def _chain_config(
    spec: ExperimentSpec,
    potential: Potential,
    window: Window,
    boundary: Optional[Boundary],
    config: LabConfig,
    seed: Optional[int] = None,
) -> ChainConfig:
    sampling = spec.sampling
    return ChainConfig(
        window=window,
        boundary=boundary,
        potential=potential,
        kernel=sampling.kernel,
        sweeps_burnin=_burnin(spec, potential, config),
        sweeps_between_samples=sampling.sweeps_between_samples,
        n_samples=sampling.n_samples,
        n_chains=sampling.n_chains,
        seed=spec.seed if seed is None else seed,
        random_order=sampling.random_order,
    )


def _source(
    spec: ExperimentSpec,
    potential: Potential,
    window: Window,
    boundary: Optional[Boundary],
    config: LabConfig,
    seed: Optional[int] = None,
) -> Union[FiniteGibbsMeasure, SampleSet]:
    if _use_exact(spec, window, config):
        return gibbs_kernel(potential, window, boundary, config)
    return run_chains(_chain_config(spec, potential, window, boundary, config, seed), config)


def _plan(spec: ExperimentSpec, potential: Potential, config: LabConfig) -> SamplingPlan:
    return SamplingPlan(
        sweeps_burnin=_burnin(spec, potential, config),
        sweeps_between_samples=spec.sampling.sweeps_between_samples,
        n_samples=spec.sampling.n_samples,
        n_chains=spec.sampling.n_chains,
        seed=spec.seed,
        kernel=spec.sampling.kernel,
    )


def _certified_D(spec: ExperimentSpec, potential: Potential, config: LabConfig, notes: List[str]) -> Tuple[float, Dict[str, object]]:
    """D from the parameters when given, else from Dobrushin's condition.

    Raises:
        ScenarioError: If no D is given and the condition fails
    """
    if spec.parameters.D is not None:
        notes.append(f"D={spec.parameters.D} supplied by the experiment, not certified")
        return spec.parameters.D, {"D": spec.parameters.D, "certified": False}
    report = gcb_certificate(potential, config)
    if not report.satisfied:
        raise ScenarioError(f"Dobrushin's condition fails (c={report.c:.6g}); give parameters.D to test a constant")
    return report.D, {"D": report.D, "c": report.c, "certified": True}


def _local_function(spec: ExperimentSpec) -> LocalFunction:
    d, q = spec.model.d, spec.model.alphabet_size
    if spec.parameters.observable == "neighbour-product":
        origin = (0,) * d
        return spin_product([origin, (1,) + (0,) * (d - 1)], q)
    return spin_at(d=d, alphabet_size=q)


def _observable(spec: ExperimentSpec, window: Window) -> Union[LocalFunction, BlockSum]:
    observable = spec.parameters.observable
    if observable == "spin":
        return spin_at(d=window.d, alphabet_size=window.alphabet_size)
    if observable == "magnetization":
        return magnetization(window)
    if window.geometry is Geometry.FREE:
        raise ScenarioError("neighbour-product block sums leave a free cube; use a torus or fixed boundary")
    return block_sum(_local_function(spec), window)


def _flag(verdicts: List[Verdict], ok: bool, failure: Verdict = Verdict.FAIL) -> Verdict:
    verdict = Verdict.PASS if ok else failure
    verdicts.append(verdict)
    return verdict


def _trend_verdict(values: List[float], expect: str, tolerance: float = 1e-10) -> bool:
    diffs = np.diff(np.asarray(values, dtype=float))
    if expect == "zero":
        return bool(np.all(np.abs(values) <= tolerance))
    if expect == "constant":
        return bool(np.all(np.abs(diffs) <= tolerance * max(1.0, float(np.max(np.abs(values))))))
    if expect == "decreasing":
        return bool(np.all(diffs < -tolerance))
    if expect == "increasing":
        return bool(np.all(diffs > tolerance))
    return True


def certify(spec: ExperimentSpec, config: LabConfig) -> ScenarioResult:
    """Dobrushin constant by brute force, the certified D, and sanity checks on the row."""
    potential = build_potential(spec.model)
    report = gcb_certificate(potential, config)
    verdicts: List[Verdict] = []
    notes: List[str] = []
    summary = report.to_dict()
    summary["summability_norm"] = summability_norm(potential)

    in_range = all(-1e-12 <= v <= 1.0 + 1e-12 for v in report.row.values())
    _flag(verdicts, in_range)
    symmetric = all(abs(v - report.row.get(tuple(-c for c in y), v)) <= 1e-12 for y, v in report.row.items())
    _flag(verdicts, symmetric)
    if spec.model.model == "ising" and spec.model.h == 0.0:
        analytic = analytic_ising_constant(spec.model.beta, spec.model.d, spec.model.J)
        summary["analytic_c"] = analytic
        _flag(verdicts, abs(analytic - report.c) <= 1e-9)
    if spec.model.model == "dyson":
        summary["truncation_tail"] = dyson_truncation_tail(spec.model.alpha, spec.model.R)
        notes.append("interactions beyond R are dropped; truncation_tail bounds their total weight")
    summary.pop("row")
    table = pd.DataFrame(
        [{"y": " ".join(str(c) for c in y), "value": v} for y, v in sorted(report.row.items())],
        columns=["y", "value"],
    )
    return ScenarioResult("certify", Verdict.combine(verdicts), summary, {"row": table}, notes)


def gcb_scenario(spec: ExperimentSpec, config: LabConfig) -> ScenarioResult:
    """Exponential-moment, variance and (optionally) tail inequalities with a certified D."""
    potential = build_potential(spec.model)
    window, boundary = spec.window(), spec.boundary()
    notes: List[str] = []
    D, certificate = _certified_D(spec, potential, config, notes)
    F = _observable(spec, window)
    source = _source(spec, potential, window, boundary, config)

    report = gcb_test(source, F, D, spec.parameters.lambda_grid)
    verdicts = [report.verdict]
    summary = report.to_dict()
    summary.pop("rows")
    summary["certificate"] = certificate
    variance = variance_bound_check(source, F, D)
    verdicts.append(variance.verdict)
    summary["variance"] = variance.to_dict()
    if spec.parameters.u is not None:
        tail = tail_bound_check(source, F, D, spec.parameters.u, spec.parameters.two_sided)
        verdicts.append(tail.verdict)
        summary["tail"] = tail.to_dict()
    if isinstance(source, SampleSet):
        summary["n_samples"] = len(source)
    return ScenarioResult("gcb-test", Verdict.combine(verdicts), summary, {"gcb": report.to_frame()}, notes)


BLOWUP_COLUMNS = [
    "set_size",
    "eps",
    "mass_C",
    "mass_blowup",
    "bound",
    "applicable",
    "stderr",
    "verdict",
    "property_applicable",
    "property_ok",
]


def blowup_scenario(spec: ExperimentSpec, config: LabConfig) -> ScenarioResult:
    """Blow-up masses of random cylinder sets against the concentration lower bound."""
    params = spec.parameters
    potential = build_potential(spec.model)
    window, boundary = spec.window(), spec.boundary()
    notes: List[str] = []
    D, certificate = _certified_D(spec, potential, config, notes)
    set_seed = params.set_seed if params.set_seed is not None else derive_seed(spec.seed, "blowup-sets")
    rng = np.random.default_rng(set_seed)
    source = _source(spec, potential, window, boundary, config)
    exact = isinstance(source, FiniteGibbsMeasure)
    if exact:
        candidates = np.arange(source.n_states, dtype=np.int64)
    else:
        if not code_fits(window.alphabet_size, window.size):
            raise ScenarioError(f"side-{window.side} configurations do not fit integer codes")
        candidates = np.unique(encode_rows(source.spins, window.alphabet_size))

    rows, verdicts = [], []
    for _ in range(params.n_sets):
        size = int(min(rng.integers(1, params.max_set_size + 1), candidates.size))
        C = np.sort(rng.choice(candidates, size=size, replace=False))
        eps = params.eps if params.eps is not None else float(rng.uniform(0.02, 1.0))
        report = blowup_bound_check(source, C, eps, D, config)
        verdicts.append(report.verdict)
        property_applicable, property_ok = False, None
        if exact and not window.is_torus and eps < 1.0:
            check = blowup_property_check(source, C, eps, D)
            property_applicable, property_ok = check.applicable, check.ok
            _flag(verdicts, check.ok)
        rows.append(
            {
                "set_size": size,
                "eps": eps,
                "mass_C": report.mass_C,
                "mass_blowup": report.mass_blowup,
                "bound": report.bound,
                "applicable": report.applicable,
                "stderr": report.stderr,
                "verdict": report.verdict.value,
                "property_applicable": property_applicable,
                "property_ok": property_ok,
            }
        )
    table = pd.DataFrame(rows, columns=BLOWUP_COLUMNS)
    summary = {
        "mode": "exact" if exact else "empirical",
        "certificate": certificate,
        "n_sets": params.n_sets,
        "applicable": int(table["applicable"].sum()),
        "violations": int((table["verdict"] == Verdict.FAIL.value).sum()),
        "mean_mass_blowup": float(table["mass_blowup"].mean()),
        "set_seed": set_seed,
    }
    return ScenarioResult("blowup", Verdict.combine(verdicts), summary, {"blowup": table}, notes)


FREQUENCY_PAIR_COLUMNS = ["hamming", "pairs", "max_tv", "bound", "violations", "eps_applicable", "eps_violations"]


def _random_pairs(rng: np.random.Generator, n_pairs: int, n_sites: int, q: int) -> Tuple[np.ndarray, np.ndarray]:
    """Random configurations and copies with a uniformly chosen number of changed sites."""
    omega = rng.integers(0, q, size=(n_pairs, n_sites), dtype=np.int64)
    changes = rng.integers(0, n_sites + 1, size=n_pairs)
    ranks = np.argsort(np.argsort(rng.random((n_pairs, n_sites)), axis=1), axis=1)
    moved = (omega + rng.integers(1, q, size=omega.shape)) % q
    eta = np.where(ranks < changes[:, None], moved, omega)
    return omega, eta


def frequency_lemma(spec: ExperimentSpec, config: LabConfig) -> ScenarioResult:
    """Frequency perturbation bound on all (or sampled) configuration pairs, plus the convergence probe."""
    params = spec.parameters
    window = spec.window()
    q, N, k, d = window.alphabet_size, window.size, params.k, window.d
    factor = (2 * k + 1) ** d / anchor_count(window, k)
    eps_checked = params.eps is not None and admissible_window(window, k)
    rho = hamming_tolerance(params.eps, k, d) if params.eps is not None else 0.0
    notes: List[str] = []
    n_configs = q**N

    tv_parts, ham_parts = [], []
    exhaustive = n_configs * n_configs <= params.exhaustive_pair_cap
    if exhaustive:
        spins = decode_codes(np.arange(n_configs, dtype=np.int64), q, N)
        freqs = frequency_matrix(spins, window, k)
        for i in range(n_configs):
            tv_parts.append(0.5 * np.abs(freqs[i][None, :] - freqs).sum(axis=1))
            ham_parts.append((spins[i][None, :] != spins).sum(axis=1))
    else:
        rng = np.random.default_rng(derive_seed(spec.seed, "frequency-pairs"))
        omega, eta = _random_pairs(rng, params.n_pairs, N, q)
        for start in range(0, params.n_pairs, config.chunk_size):
            a, b = omega[start : start + config.chunk_size], eta[start : start + config.chunk_size]
            tv_parts.append(0.5 * np.abs(frequency_matrix(a, window, k) - frequency_matrix(b, window, k)).sum(axis=1))
            ham_parts.append((a != b).sum(axis=1))
    tv = np.concatenate(tv_parts)
    hamming = np.concatenate(ham_parts)
    bound = factor * hamming
    violated = tv > bound + 1e-12
    eps_applicable = eps_checked & (hamming <= rho * N) if eps_checked else np.zeros(tv.size, dtype=bool)
    eps_violated = eps_applicable & (tv > params.eps / 2 + 1e-12) if eps_checked else np.zeros(tv.size, dtype=bool)

    frame = pd.DataFrame({"hamming": hamming, "tv": tv, "bound": bound, "violated": violated, "eps_applicable": eps_applicable, "eps_violated": eps_violated})
    table = (
        frame.groupby("hamming")
        .agg(
            pairs=("tv", "size"),
            max_tv=("tv", "max"),
            bound=("bound", "first"),
            violations=("violated", "sum"),
            eps_applicable=("eps_applicable", "sum"),
            eps_violations=("eps_violated", "sum"),
        )
        .reset_index()[FREQUENCY_PAIR_COLUMNS]
    )
    verdicts: List[Verdict] = []
    _flag(verdicts, not violated.any())
    _flag(verdicts, not eps_violated.any())
    summary: Dict[str, object] = {
        "pairs": int(tv.size),
        "exhaustive": exhaustive,
        "k": k,
        "factor": factor,
        "violations": int(violated.sum()),
        "max_ratio": float(np.max(np.where(hamming > 0, tv / np.maximum(bound, 1e-300), 0.0))),
        "eps": params.eps,
        "eps_checked": bool(eps_checked),
        "admissible_n": smallest_admissible_radius(k, d),
        "eps_violations": int(eps_violated.sum()),
    }
    tables = {"pairs": table}

    if params.eps is not None and (params.n_list or params.sides):
        potential = build_potential(spec.model)
        reference_window = Window(d=d, n=k + potential.range, geometry=window.geometry, alphabet_size=q)
        reference = exact_marginal(gibbs_kernel(potential, reference_window, spec.boundary(), config), k)
        notes.append(f"frequency probe reference: Lambda_{k} marginal of the exact measure on Lambda_{reference_window.n}")
        windows = [Window(d=d, n=n, geometry=window.geometry, alphabet_size=q) for n in params.n_list]
        windows += [Window.with_side(d, side, window.geometry, q) for side in params.sides]
        samples = [
            run_chains(_chain_config(spec, potential, w, spec.boundary(), config, derive_seed(spec.seed, f"probe-side={w.side}")), config)
            for w in windows
        ]
        tables["probe"] = frequency_convergence_probe(samples, reference, params.eps)
        pooled = [
            PatternDistribution(k, d, q, probs=frequency_matrix(s.spins, w, k).mean(axis=0), kind=EMPIRICAL, sample_count=len(s))
            for w, s in zip(windows, samples)
        ]
        tables["frequencies"] = pd.concat([frequency_table(p, w.n) for p, w in zip(pooled, windows)], ignore_index=True)
    return ScenarioResult("frequency-lemma", Verdict.combine(verdicts), summary, tables, notes)


LEMMA_COLUMNS = ["k", "H", "abs_lhs", "abs_rhs", "abs_ok"]


def _fitting_radii(window: Window) -> List[int]:
    return [k for k in range(window.n + 1) if all(window.contains(s) for s in box_sites(window.d, k))]


def _entropy_lemmas(
    nu: FiniteGibbsMeasure, mu: FiniteGibbsMeasure, verdicts: List[Verdict]
) -> Tuple[pd.DataFrame, Dict[str, object]]:
    """Absolute-log bound on every fitting cube marginal and monotonicity in the cube."""
    ks = _fitting_radii(nu.window)
    rows = []
    for k in ks:
        a, b = exact_marginal(nu, k), exact_marginal(mu, k)
        lhs, rhs, ok = abs_entropy_bound_check(a, b)
        _flag(verdicts, ok)
        rows.append({"k": k, "H": relative_entropy(a, b), "abs_lhs": lhs, "abs_rhs": rhs, "abs_ok": ok})
    projective = projective_entropy_check(nu, mu, ks)
    _flag(verdicts, projective.ok)
    return pd.DataFrame(rows, columns=LEMMA_COLUMNS), projective.to_dict()


def entropy_probe(spec: ExperimentSpec, config: LabConfig) -> ScenarioResult:
    """Per-site relative entropy between two exact finite-volume measures over growing windows."""
    params = spec.parameters
    q = spec.model.alphabet_size
    model_mu = params.reference_model or spec.model
    if (model_mu.d, model_mu.alphabet_size) != (spec.model.d, q):
        raise ScenarioError("reference model must share dimension and alphabet")
    potential_nu, potential_mu = build_potential(spec.model), build_potential(model_mu)
    geometry = spec.geometry.geometry
    boundary_nu = spec.boundary()
    boundary_mu = None
    if geometry is Geometry.FIXED:
        boundary_mu = make_boundary(params.reference_boundary or spec.geometry.boundary, q)
    n_list = params.n_list or ([] if params.sides else [spec.geometry.n])
    report = per_site_entropy_sequence(
        potential_nu, potential_mu, n_list, boundary_nu, boundary_mu, geometry, params.sides, config
    )

    verdicts: List[Verdict] = []
    notes = [TREND_NOTE]
    expected = None
    if params.expect is not None:
        expected = _trend_verdict(report.per_site, params.expect)
        # exact claims (zero, constant) falsify; trends only suggest
        strict = params.expect in ("zero", "constant")
        _flag(verdicts, expected, Verdict.FAIL if strict else Verdict.INCONCLUSIVE)

    largest = Window.with_side(spec.model.d, report.sides[-1], geometry, q)
    nu = gibbs_kernel(potential_nu, largest, boundary_nu, config)
    mu = gibbs_kernel(potential_mu, largest, boundary_mu, config)
    lemmas, projective = _entropy_lemmas(nu, mu, verdicts)

    summary = report.to_dict()
    summary.pop("rows")
    summary.update(
        {
            "per_site_last": report.per_site[-1],
            "H_last": report.H[-1],
            "expect": params.expect,
            "expect_met": expected,
            "projective": projective,
        }
    )
    return ScenarioResult(
        "entropy-probe", Verdict.combine(verdicts), summary, {"entropy": report.to_frame(), "lemmas": lemmas}, notes
    )


VARIANCE_COLUMNS = ["side", "volume", "mode", "var_per_site", "stderr", "ess", "ceiling", "ceiling_verdict"]


def _variance_per_site(
    spec: ExperimentSpec, potential: Potential, window: Window, config: LabConfig
) -> Tuple[float, float, Optional[float], str]:
    boundary = spec.boundary()
    source = _source(spec, potential, window, boundary, config, derive_seed(spec.seed, f"side={window.side}"))
    if isinstance(source, FiniteGibbsMeasure):
        M = source.evaluate(lambda spins: symbol_values(window.alphabet_size)[spins].sum(axis=1))
        var = source.expectation((M - source.expectation(M)) ** 2)
        return var / window.size, 0.0, None, "exact"
    M = source.magnetization().astype(float)
    squares = (M - M.mean()) ** 2 / window.size
    stats = batch_means(source.per_chain(squares))
    return stats.mean, stats.stderr, batch_means(source.per_chain(M)).ess, "empirical"


def critical_variance(spec: ExperimentSpec, config: LabConfig) -> ScenarioResult:
    """Var(sum of spins) / |Lambda| across window sizes: growth near criticality, a ceiling of 8D below it."""
    params = spec.parameters
    defaults = load_defaults()
    potential = build_potential(spec.model)
    q, d, geometry = spec.model.alphabet_size, spec.model.d, spec.geometry.geometry
    sides = list(params.sides) or [2 * n + 1 for n in params.n_list] or [spec.window().side]
    report = gcb_certificate(potential, config)
    D = params.D if params.D is not None else report.D
    expect = params.expect or ("flat" if report.satisfied else "increasing")
    values = symbol_values(q)
    ceiling = None
    if D is not None:
        spread = float(values.max() - values.min())
        ceiling = defaults.variance_ceiling_factor * D * (spread / 2.0) ** 2

    verdicts: List[Verdict] = []
    rows = []
    for side in sorted(sides):
        window = Window.with_side(d, side, geometry, q)
        var, err, ess, mode = _variance_per_site(spec, potential, window, config)
        ceiling_verdict = judge(var, ceiling, err, defaults.sigma_threshold, defaults.exact_tolerance) if ceiling is not None else None
        if ceiling_verdict is not None and (report.satisfied or params.D is not None):
            verdicts.append(ceiling_verdict)
        rows.append(
            {
                "side": side,
                "volume": window.size,
                "mode": mode,
                "var_per_site": var,
                "stderr": err,
                "ess": ess,
                "ceiling": ceiling,
                "ceiling_verdict": None if ceiling_verdict is None else ceiling_verdict.value,
            }
        )
        logger.info(f"side {side}: Var/|Lambda| = {var:.6g} +- {err:.2g} ({mode})")

    steps = []
    sigmas = defaults.sigma_threshold
    for before, after in zip(rows, rows[1:]):
        diff = after["var_per_site"] - before["var_per_site"]
        spread = math.hypot(before["stderr"], after["stderr"])
        if expect == "flat":
            step = Verdict.PASS if abs(diff) <= max(sigmas * spread, defaults.exact_tolerance) else Verdict.INCONCLUSIVE
        else:
            signed = diff if expect == "increasing" else -diff
            if signed > sigmas * spread and signed > 0:
                step = Verdict.PASS
            elif signed < -sigmas * spread or spread == 0.0:
                step = Verdict.FAIL
            else:
                step = Verdict.INCONCLUSIVE
        steps.append(step)
    verdicts.extend(steps)
    summary = {
        "expect": expect,
        "c": report.c,
        "satisfied": report.satisfied,
        "D": D,
        "ceiling": ceiling,
        "steps": [s.value for s in steps],
    }
    return ScenarioResult(
        "critical-variance",
        Verdict.combine(verdicts),
        summary,
        {"variance": pd.DataFrame(rows, columns=VARIANCE_COLUMNS)},
        [TREND_NOTE],
    )


MAGNETIZATION_COLUMNS = ["boundary", "mode", "mean_per_site", "stderr", "ess"]


def _mean_magnetization(
    spec: ExperimentSpec, potential: Potential, window: Window, boundary: Boundary, label: str, config: LabConfig
) -> Dict[str, object]:
    source = _source(spec, potential, window, boundary, config, derive_seed(spec.seed, f"boundary={label}"))
    if isinstance(source, FiniteGibbsMeasure):
        m = source.evaluate(lambda spins: symbol_values(window.alphabet_size)[spins].mean(axis=1))
        return {"boundary": label, "mode": "exact", "mean_per_site": source.expectation(m), "stderr": 0.0, "ess": None}
    stats = batch_means(source.per_chain(source.magnetization() / window.size))
    return {"boundary": label, "mode": "empirical", "mean_per_site": stats.mean, "stderr": stats.stderr, "ess": stats.ess}


def phase_coexistence(spec: ExperimentSpec, config: LabConfig) -> ScenarioResult:
    """Plus and minus phases: opposite magnetizations, entropy and large-deviation trends."""
    params = spec.parameters
    defaults = load_defaults()
    if spec.geometry.geometry is not Geometry.FIXED:
        raise ScenarioError("phase coexistence compares fixed boundaries; use a fixed cube")
    potential = build_potential(spec.model)
    q = spec.model.alphabet_size
    window = spec.window()
    plus, minus = Boundary.plus(q), Boundary.minus()
    verdicts: List[Verdict] = []

    phases = [_mean_magnetization(spec, potential, window, b, name, config) for name, b in (("plus", plus), ("minus", minus))]
    m_plus, m_minus = phases[0]["mean_per_site"], phases[1]["mean_per_site"]
    se_plus, se_minus = phases[0]["stderr"], phases[1]["stderr"]
    sigmas = defaults.sigma_threshold
    spread = math.hypot(se_plus, se_minus)
    separation = math.inf if spread == 0.0 else (m_plus - m_minus) / spread
    threshold = params.min_abs_magnetization
    coexisting = (
        m_plus - sigmas * se_plus > threshold
        and m_minus + sigmas * se_minus < -threshold
        and separation > params.separation_sigmas
    )
    if coexisting:
        verdicts.append(Verdict.PASS)
    elif m_plus - m_minus < -sigmas * spread:
        # a plus boundary never lowers the magnetization of a ferromagnet
        verdicts.append(Verdict.FAIL)
    else:
        verdicts.append(Verdict.INCONCLUSIVE)

    sides = list(params.sides) or [3, 4]
    entropy = per_site_entropy_sequence(potential, potential, boundary_nu=minus, boundary_mu=plus, sides=sides, config=config)
    _flag(verdicts, entropy.decreasing, Verdict.INCONCLUSIVE)

    scan = deviation_rate_scan(
        potential,
        spin_at(d=spec.model.d, alphabet_size=q),
        params.eps or 0.1,
        boundary=plus,
        threshold=0.0 if params.threshold is None else params.threshold,
        sides=sides,
        plan=_plan(spec, potential, config),
        config=config,
    )
    rates = scan.rates(AT_MOST)
    rates_decreasing = _trend_verdict(rates, "decreasing")
    _flag(verdicts, rates_decreasing, Verdict.INCONCLUSIVE)

    summary = {
        "m_plus": m_plus,
        "m_minus": m_minus,
        "separation_sigmas": separation,
        "coexisting": coexisting,
        "entropy_per_site": entropy.per_site,
        "entropy_decreasing": entropy.decreasing,
        "at_most_rates": rates,
        "rates_decreasing": rates_decreasing,
    }
    tables = {
        "magnetization": pd.DataFrame(phases, columns=MAGNETIZATION_COLUMNS),
        "entropy": entropy.to_frame(),
        "deviations": scan.rows,
    }
    return ScenarioResult("phase-coexistence", Verdict.combine(verdicts), summary, tables, [TREND_NOTE])


def deviation_rates(spec: ExperimentSpec, config: LabConfig) -> ScenarioResult:
    """Per-site decay rates of block-mean deviations, checked against the guaranteed floor when D is known."""
    params = spec.parameters
    potential = build_potential(spec.model)
    notes: List[str] = [TREND_NOTE]
    D = params.D
    if D is None:
        report = gcb_certificate(potential, config)
        D = report.D
        if D is None:
            notes.append(f"Dobrushin's condition fails (c={report.c:.6g}); no rate floor is checked")
    plan = _plan(spec, potential, config)
    n_list = params.n_list or ([] if params.sides else [spec.geometry.n])
    scan = deviation_rate_scan(
        potential,
        _local_function(spec),
        params.eps or 0.1,
        n_list=n_list,
        boundary=spec.boundary(),
        geometry=spec.geometry.geometry,
        D=D,
        threshold=params.threshold,
        sides=params.sides,
        plan=plan,
        config=config,
    )
    summary = {"eps": scan.eps, "D": D, "windows": len(n_list) + len(params.sides), "rates": scan.rates()}
    return ScenarioResult("deviation-rates", scan.verdict, summary, {"deviations": scan.rows}, notes)


SCENARIOS: Dict[str, Callable[[ExperimentSpec, LabConfig], ScenarioResult]] = {
    "certify": certify,
    "gcb-test": gcb_scenario,
    "blowup": blowup_scenario,
    "frequency-lemma": frequency_lemma,
    "entropy-probe": entropy_probe,
    "critical-variance": critical_variance,
    "phase-coexistence": phase_coexistence,
    "deviation-rates": deviation_rates,
}

"""End-to-end acceptance runs over the bundled experiment specs."""

import json
import os
import sys
import tempfile
import unittest
from pathlib import Path

import numpy as np

# Add interfaces to path for testing
sys.path.insert(0, str(Path(__file__).parent.parent / "interfaces"))

from src.concentration.gcb import Verdict
from src.config import LabConfig
from src.entropy.relative_entropy import abs_entropy_bound_check
from src.experiments.runner import ExperimentRunner
from src.experiments.spec import load_spec
from src.gibbs.distributions import PatternDistribution
from src.lattice.geometry import Window
from src.observables.local_functions import random_local_function, young_bound_check

SPEC_DIR = Path(__file__).parent.parent / "data" / "specs"
SLOW = "set LAB_SLOW_TESTS=1 to run the long sampling runs"


class AcceptanceTestCase(unittest.TestCase):
    def setUp(self):
        self.temp_dir = tempfile.mkdtemp()
        self.runner = ExperimentRunner(LabConfig(output_dir=Path(self.temp_dir)))

    def tearDown(self):
        import shutil

        shutil.rmtree(self.temp_dir)

    def run_spec(self, name: str, **changes):
        spec = load_spec(SPEC_DIR / f"{name}.json")
        if changes:
            spec = spec.updated(**changes)
        return self.runner.run(spec, Path(self.temp_dir) / name)


class TestLemmaBattery(AcceptanceTestCase):
    """Test cases for the exact inequality battery."""

    def test_young_bound_on_random_functions(self):
        rng = np.random.default_rng(2024)
        for _ in range(1000):
            d = int(rng.integers(1, 3))
            f = random_local_function(rng, d, 2, max_sites=3, radius=1)
            window = Window(d=d, n=int(rng.integers(1, 3)))
            lhs, rhs, ok = young_bound_check(f, window)
            self.assertTrue(ok, f"{lhs} > {rhs}")

    def test_frequency_bound_all_pairs_and_sampled_pairs(self):
        exhaustive = self.run_spec("frequency-lemma")
        self.assertIs(exhaustive.verdict, Verdict.PASS)
        self.assertEqual(exhaustive.result.summary["pairs"], 2**14)
        sampled = self.run_spec("frequency-lemma-2d")
        self.assertIs(sampled.verdict, Verdict.PASS)
        self.assertEqual(sampled.result.summary["pairs"], 10**5)

    def test_abs_entropy_bound_on_random_pairs(self):
        rng = np.random.default_rng(7)
        for _ in range(10**4):
            q = int(rng.integers(2, 9))
            nu = PatternDistribution(0, 1, q, probs=rng.dirichlet(np.full(q, 0.5)))
            mu = PatternDistribution(0, 1, q, probs=rng.dirichlet(np.ones(q)))
            self.assertTrue(abs_entropy_bound_check(nu, mu)[2])


class TestCertificationAndBounds(AcceptanceTestCase):
    """Test cases for certificates, exact GCB checks and blow-ups."""

    def test_certify_exit_code(self):
        outcome = self.run_spec("certify")
        self.assertEqual(outcome.exit_code, 0)
        self.assertTrue(outcome.result.summary["satisfied"])

    def test_c_increases_along_beta_sweep(self):
        spec = load_spec(SPEC_DIR / "certify.json")
        sweep = self.runner.sweep(spec, "beta", [0.02, 0.05, 0.1, 0.15, 0.2], Path(self.temp_dir) / "sweep")
        c = sweep.table["c"].to_numpy()
        self.assertTrue(np.all(np.diff(c) > 0))

    def test_exact_gcb_on_certified_chains(self):
        for beta in (0.1, 0.2, 0.3):
            outcome = self.run_spec("gcb-test", **{"model.beta": beta})
            self.assertEqual(outcome.exit_code, 0, f"beta={beta}")
        self.assertEqual(self.run_spec("gcb-test-product").exit_code, 0)

    def test_blowup_bound_at_two_temperatures(self):
        for beta in (0.0, 0.2):
            outcome = self.run_spec("blowup", **{"model.beta": beta, "parameters.n_sets": 100})
            self.assertEqual(outcome.result.summary["violations"], 0, f"beta={beta}")
            self.assertIs(outcome.verdict, Verdict.PASS)

    def test_epsilon_sweep_blowup_mass_nondecreasing(self):
        spec = load_spec(SPEC_DIR / "blowup.json").updated(**{"parameters.n_sets": 10})
        sweep = self.runner.sweep(spec, "epsilon", [0.1, 0.3, 0.6, 0.9], Path(self.temp_dir) / "eps")
        masses = sweep.table["mean_mass_blowup"].to_numpy()
        self.assertTrue(np.all(np.diff(masses) >= -1e-12))


class TestReproducibility(AcceptanceTestCase):
    """Test cases for thread-count independence of report bodies."""

    def test_sampled_report_identical_across_threads(self):
        spec = load_spec(SPEC_DIR / "gcb-test.json").updated(
            **{"parameters.mode": "empirical", "sampling.n_samples": 500, "sampling.sweeps_burnin": 50}
        )
        bodies = []
        for threads in (1, 4):
            runner = ExperimentRunner(LabConfig(output_dir=Path(self.temp_dir), threads=threads))
            outcome = runner.run(spec, Path(self.temp_dir) / f"threads-{threads}")
            report = json.loads(outcome.report_path.read_text(encoding="utf-8"))
            bodies.append(json.dumps(report["body"], sort_keys=True))
        self.assertEqual(bodies[0], bodies[1])


@unittest.skipUnless(os.getenv("LAB_SLOW_TESTS"), SLOW)
class TestLongRuns(AcceptanceTestCase):
    """Test cases for the torus and phase-coexistence runs."""

    def test_empirical_gcb_on_torus(self):
        outcome = self.run_spec("gcb-test-torus")
        self.assertIsNot(outcome.verdict, Verdict.FAIL)
        self.assertGreaterEqual(outcome.result.summary["ess"], 10**4)

    def test_variance_grows_at_criticality(self):
        outcome = self.run_spec("critical-variance")
        self.assertEqual(outcome.exit_code, 0)
        values = outcome.result.tables["variance"]["var_per_site"].to_numpy()
        self.assertTrue(np.all(np.diff(values) > 0))

    def test_variance_flat_at_high_temperature(self):
        outcome = self.run_spec("critical-variance-high-temperature")
        self.assertEqual(outcome.exit_code, 0)
        self.assertTrue((outcome.result.tables["variance"]["ceiling_verdict"] == "pass").all())

    def test_phase_coexistence(self):
        outcome = self.run_spec("phase-coexistence")
        summary = outcome.result.summary
        self.assertTrue(summary["coexisting"])
        self.assertGreater(summary["m_plus"], 0.5)
        self.assertLess(summary["m_minus"], -0.5)
        self.assertTrue(summary["entropy_decreasing"])
        self.assertTrue(summary["rates_decreasing"])


if __name__ == "__main__":
    unittest.main()

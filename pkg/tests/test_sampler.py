"""Tests for random streams, chain diagnostics and the MCMC sampler."""

import os
import sys
import tempfile
import unittest
from pathlib import Path

import numpy as np
from scipy.stats import chisquare

# Add interfaces to path for testing
sys.path.insert(0, str(Path(__file__).parent.parent / "interfaces"))

from src.config import LabConfig
from src.exceptions import EnumerationCapError, GeometryError
from src.gibbs.specification import gibbs_kernel
from src.lattice.geometry import Boundary, Configuration, Window, symbol_values
from src.lattice.patterns import encode_rows
from src.models.potential import ising_potential, potts_potential
from src.sampling.diagnostics import autocorrelation, batch_means, integrated_autocorrelation_time
from src.sampling.rng import chain_key, derive_seed, initial_spins, sweep_order, sweep_uniforms
from src.sampling.sampler import (
    ChainConfig,
    KernelKind,
    SampleSet,
    estimate_event_probability,
    heat_bath_sweep,
    metropolis_sweep,
    run_chains,
    site_conditional,
    sweep_rows,
)


class TestStreams(unittest.TestCase):
    """Test cases for counter-based random streams."""

    def test_blocks_are_reproducible(self):
        np.testing.assert_array_equal(sweep_uniforms(7, 1, 3, 10), sweep_uniforms(7, 1, 3, 10))

    def test_blocks_are_distinct(self):
        base = sweep_uniforms(7, 0, 0, 10)
        self.assertFalse(np.array_equal(base, sweep_uniforms(7, 1, 0, 10)))
        self.assertFalse(np.array_equal(base, sweep_uniforms(7, 0, 1, 10)))
        self.assertFalse(np.array_equal(base, sweep_uniforms(8, 0, 0, 10)))

    def test_order(self):
        np.testing.assert_array_equal(sweep_order(1, 0, 0, 5), np.arange(5))
        self.assertEqual(sorted(sweep_order(1, 0, 0, 5, random_order=True)), list(range(5)))

    def test_initial_spins(self):
        np.testing.assert_array_equal(initial_spins(1, 0, 4, 2, uniform_symbol=1), [1, 1, 1, 1])
        spins = initial_spins(1, 0, 100, 3)
        self.assertTrue(set(spins.tolist()) <= {0, 1, 2})

    def test_seed_range(self):
        with self.assertRaises(ValueError):
            chain_key(-1, 0)
        with self.assertRaises(ValueError):
            chain_key(2**64, 0)

    def test_derived_seeds(self):
        self.assertEqual(derive_seed(5, "beta=0.1"), derive_seed(5, "beta=0.1"))
        self.assertNotEqual(derive_seed(5, "beta=0.1"), derive_seed(5, "beta=0.2"))
        self.assertLess(derive_seed(5, "x"), 2**64)


class TestDiagnostics(unittest.TestCase):
    """Test cases for autocorrelation and batch means."""

    def test_white_noise(self):
        rng = np.random.default_rng(0)
        series = rng.normal(size=(4, 4000))
        self.assertLess(integrated_autocorrelation_time(series), 1.5)
        stats = batch_means(series)
        self.assertEqual(stats.n_batches, 80)
        self.assertLess(abs(stats.mean), 4 * stats.stderr + 1e-3)

    def test_correlated_series(self):
        rng = np.random.default_rng(1)
        x = np.zeros(20000)
        for t in range(1, x.size):
            x[t] = 0.9 * x[t - 1] + rng.normal()
        # tau = (1 + rho) / (1 - rho) = 19
        self.assertGreater(integrated_autocorrelation_time(x), 10.0)

    def test_constant_series(self):
        acf = autocorrelation(np.ones(10))
        self.assertEqual(acf[0], 1.0)
        self.assertFalse(np.any(acf[1:]))
        self.assertEqual(batch_means(np.ones((2, 10))).stderr, 0.0)


class TestSweeps(unittest.TestCase):
    """Test cases for single sweeps and site conditionals."""

    def test_infinite_temperature_conditional_is_uniform(self):
        omega = Configuration(Window(d=2, n=1), np.ones(9, dtype=int), Boundary.plus())
        for i in range(9):
            np.testing.assert_allclose(site_conditional(omega, ising_potential(0.0, d=2), i), [0.5, 0.5])

    def test_conditional_matches_exact_measure(self):
        phi = ising_potential(0.6, h=0.1, d=1)
        window = Window(d=1, n=1)
        mu = gibbs_kernel(phi, window, Boundary.plus())
        omega = Configuration(window, np.array([0, 1, 0]), Boundary.plus())
        # codes 0b000 and 0b010 differ at the center only
        expected = mu.probs[[0b000, 0b010]] / mu.probs[[0b000, 0b010]].sum()
        np.testing.assert_allclose(site_conditional(omega, phi, 1), expected, atol=1e-12)

    def test_sweep_keeps_window_and_boundary(self):
        omega = Configuration(Window(d=1, n=2), np.zeros(5, dtype=int), Boundary.plus())
        out = heat_bath_sweep(omega, ising_potential(0.3, d=1), np.random.default_rng(0))
        self.assertEqual(out.window, omega.window)
        self.assertEqual(out.boundary, omega.boundary)


class TestRunChains(unittest.TestCase):
    """Test cases for reproducible parallel chains."""

    def setUp(self):
        self.temp_dir = tempfile.mkdtemp()

    def tearDown(self):
        import shutil

        shutil.rmtree(self.temp_dir)

    def _config(self, **kwargs):
        defaults = dict(
            window=Window(d=2, n=1),
            boundary=Boundary.plus(),
            potential=ising_potential(0.3, d=2),
            sweeps_burnin=50,
            n_samples=200,
            n_chains=3,
            seed=42,
        )
        defaults.update(kwargs)
        return ChainConfig(**defaults)

    def test_same_seed_same_samples(self):
        a = run_chains(self._config())
        b = run_chains(self._config())
        np.testing.assert_array_equal(a.spins, b.spins)

    def test_independent_of_thread_count(self):
        a = run_chains(self._config(), LabConfig(threads=1))
        b = run_chains(self._config(), LabConfig(threads=4))
        np.testing.assert_array_equal(a.spins, b.spins)

    def test_seed_changes_samples(self):
        a = run_chains(self._config())
        b = run_chains(self._config(seed=43))
        self.assertFalse(np.array_equal(a.spins, b.spins))

    def test_chain_index(self):
        samples = run_chains(self._config())
        self.assertEqual(len(samples), 600)
        np.testing.assert_array_equal(np.unique(samples.chain_index), [0, 1, 2])
        self.assertEqual(samples.per_chain(samples.magnetization()).shape, (3, 200))

    def test_boundary_required_iff_fixed(self):
        with self.assertRaises(GeometryError):
            self._config(boundary=None)
        with self.assertRaises(GeometryError):
            self._config(window=Window(d=2, n=1, geometry="torus"))
        with self.assertRaises(ValueError):
            self._config(n_samples=0)

    def test_chain_budget(self):
        with self.assertRaises(EnumerationCapError):
            run_chains(self._config(), LabConfig(chain_budget=100))

    def test_sample_file(self):
        samples = run_chains(self._config(potential=potts_potential(0.5, 3, d=2), boundary=Boundary.plus(3), window=Window(d=2, n=1, alphabet_size=3)))
        path = os.path.join(self.temp_dir, "samples.txt")
        samples.write(path)
        loaded = SampleSet.read(path)
        np.testing.assert_array_equal(loaded.spins, samples.spins)
        np.testing.assert_array_equal(loaded.chain_index, samples.chain_index)
        self.assertEqual(loaded.config.describe(), samples.config.describe())

    def test_infinite_temperature_magnetization(self):
        cfg = self._config(window=Window(d=1, n=2, geometry="free"), boundary=None, potential=ising_potential(0.0, d=1), n_samples=2500, n_chains=4)
        samples = run_chains(cfg)
        stats = batch_means(samples.per_chain(samples.magnetization()))
        self.assertLess(abs(stats.mean), 4 * stats.stderr)

    def test_one_sweep_preserves_exact_law(self):
        phi = ising_potential(0.4, h=0.2, d=1)
        n_draws = 20000
        for n in (1, 2):
            window = Window(d=1, n=n)
            mu = gibbs_kernel(phi, window, Boundary.minus())
            rng = np.random.default_rng(100 + n)
            start = mu.spins(rng.choice(mu.n_states, size=n_draws, p=mu.probs))
            for kernel in KernelKind:
                moved = sweep_rows(start, window, Boundary.minus(), phi, rng, kernel)
                observed = np.bincount(encode_rows(moved, 2), minlength=mu.n_states)
                expected = n_draws * mu.probs
                _, p_value = chisquare(observed, expected * observed.sum() / expected.sum())
                self.assertGreater(p_value, 1e-4, f"{kernel.value}, n={n}")

    def test_sweep_rows_matches_single_sweeps(self):
        phi = ising_potential(0.4, d=1)
        window = Window(d=1, n=2)
        omega = Configuration(window, np.array([0, 1, 0, 1, 1]), Boundary.plus())
        batch = sweep_rows(omega.spins, window, Boundary.plus(), phi, np.random.default_rng(5))
        single = heat_bath_sweep(omega, phi, np.random.default_rng(5))
        np.testing.assert_array_equal(batch[0], single.spins)
        moved = metropolis_sweep(omega, phi, np.random.default_rng(5))
        np.testing.assert_array_equal(
            sweep_rows(omega.spins, window, Boundary.plus(), phi, np.random.default_rng(5), KernelKind.METROPOLIS)[0], moved.spins
        )


class TestEventProbability(unittest.TestCase):
    """Test cases for event probability estimates."""

    def setUp(self):
        self.cfg = ChainConfig(
            window=Window(d=1, n=1, geometry="free"),
            boundary=None,
            potential=ising_potential(0.0, d=1),
            sweeps_burnin=10,
            n_samples=2000,
            n_chains=4,
            seed=3,
        )

    def test_sure_event(self):
        estimate = estimate_event_probability(self.cfg, lambda omega: True)
        self.assertEqual((estimate.p, estimate.stderr), (1.0, 0.0))

    def test_impossible_event(self):
        estimate = estimate_event_probability(self.cfg, lambda omega: False)
        self.assertEqual(estimate.p, 0.0)
        self.assertAlmostEqual(estimate.upper_bound, 3.0 / 8000)

    def test_fair_spin(self):
        estimate = estimate_event_probability(self.cfg, lambda omega: omega.at((0,)) == 1)
        self.assertLess(abs(estimate.p - 0.5), 4 * estimate.stderr)

    def test_block_magnetization_matches_enumeration(self):
        phi = ising_potential(0.5, d=2)
        window = Window(d=2, n=1)
        mu = gibbs_kernel(phi, window, Boundary.plus())
        magnetization = symbol_values(2)[mu.spins()].sum(axis=1)
        exact = float(mu.probs[magnetization <= 0].sum())

        cfg = ChainConfig(window, Boundary.plus(), phi, sweeps_burnin=200, n_samples=5000, n_chains=4, seed=11)
        estimate = estimate_event_probability(
            cfg, lambda spins: symbol_values(2)[spins].sum(axis=1) <= 0, vectorized=True
        )
        self.assertLess(abs(estimate.p - exact), 4 * estimate.stderr + 2e-3)


if __name__ == "__main__":
    unittest.main()

"""Tests for local functions, block sums and empirical pattern frequencies."""

import math
import sys
import unittest
from pathlib import Path

import numpy as np
from hypothesis import given, settings
from hypothesis import strategies as st

# Add interfaces to path for testing
sys.path.insert(0, str(Path(__file__).parent.parent / "interfaces"))

from src.exceptions import GeometryError, ShapeMismatchError
from src.gibbs.distributions import PatternDistribution
from src.lattice.geometry import Boundary, Configuration, Window
from src.lattice.patterns import decode_codes
from src.observables.frequencies import (
    FREQUENCY_COLUMNS,
    PROBE_COLUMNS,
    admissible_window,
    anchor_count,
    empirical_frequency,
    frequency_convergence_probe,
    frequency_matrix,
    frequency_table,
    hamming_tolerance,
    shields_bound_check,
    smallest_admissible_radius,
    tv_distance,
)
from src.observables.local_functions import (
    block_sum,
    constant,
    from_callable,
    indicator,
    magnetization,
    oscillation_vector,
    random_local_function,
    spin_at,
    spin_product,
    young_bound_check,
)


class TestOscillation(unittest.TestCase):
    """Test cases for oscillation vectors."""

    def test_single_spin(self):
        delta = oscillation_vector(spin_at(d=1))
        self.assertEqual(delta.entries, {(0,): 2.0})
        self.assertEqual(delta.at((5,)), 0.0)

    def test_pair_product(self):
        delta = oscillation_vector(spin_product([(0,), (1,)]))
        self.assertEqual(delta.entries, {(0,): 2.0, (1,): 2.0})
        self.assertEqual(delta.l1, 4.0)
        self.assertEqual(delta.l2sq, 8.0)

    def test_constant(self):
        self.assertEqual(oscillation_vector(constant(3.0)).l1, 0.0)

    def test_indicator(self):
        delta = oscillation_vector(indicator({(0, 0): 1, (0, 1): 0}))
        self.assertEqual(delta.entries, {(0, 0): 1.0, (0, 1): 1.0})

    def test_tabulated_callable(self):
        f = from_callable([(0,), (1,), (2,)], lambda s: float(sum(s)), alphabet_size=3)
        self.assertEqual(oscillation_vector(f).l1, 6.0)
        self.assertEqual(f.radius, 2)

    def test_duplicate_sites_rejected(self):
        with self.assertRaises(GeometryError):
            spin_product([(0,), (0,)])


class TestBlockSum(unittest.TestCase):
    """Test cases for S_Lambda f."""

    def test_sum_of_spins(self):
        window = Window(d=1, n=1)
        S = block_sum(spin_at(d=1), window)
        self.assertEqual(S.dependence, ((-1,), (0,), (1,)))
        omega = Configuration(window, np.array([1, 0, 1]), Boundary.plus())
        self.assertEqual(S(omega), 1.0)

    def test_constant_block(self):
        window = Window(d=2, n=2, geometry="free")
        S = block_sum(constant(1.5), window)
        omega = Configuration(window, np.zeros(25, dtype=int))
        self.assertEqual(S(omega), 25 * 1.5)
        np.testing.assert_array_equal(S.evaluate_spins(np.zeros((2, 25), dtype=int)), [37.5, 37.5])

    def test_vectorized_reads_boundary(self):
        window = Window(d=2, n=1)
        boundary = Boundary.explicit({(2, 0): 0}, uniform=1)
        S = block_sum(spin_product([(0, 0), (1, 0)]), window)
        rng = np.random.default_rng(5)
        spins = rng.integers(0, 2, size=(6, 9))
        expected = [S(Configuration(window, row, boundary)) for row in spins]
        np.testing.assert_allclose(S.evaluate_spins(spins, boundary=boundary), expected)

    def test_vectorized_needs_boundary(self):
        S = block_sum(spin_product([(0,), (1,)]), Window(d=1, n=1))
        with self.assertRaises(GeometryError):
            S.evaluate_spins(np.zeros((1, 3), dtype=int))

    def test_torus_wraps(self):
        window = Window(d=1, n=1, geometry="torus")
        S = block_sum(spin_product([(0,), (1,)]), window)
        self.assertEqual(len(S.dependence), 3)
        np.testing.assert_array_equal(S.evaluate_spins(np.ones((1, 3), dtype=int)), [3.0])
        with self.assertRaises(GeometryError):
            block_sum(spin_product([(0,), (3,)]), window)

    def test_magnetization_oscillation(self):
        delta = magnetization(Window(d=2, n=1)).oscillation_vector()
        self.assertEqual(len(delta.entries), 9)
        self.assertTrue(all(v == 2.0 for v in delta.entries.values()))


class TestYoungBound(unittest.TestCase):
    """Test cases for the block-sum oscillation inequality."""

    def test_equality_case(self):
        self.assertEqual(young_bound_check(spin_at(d=1), Window(d=1, n=1)), (12.0, 12.0, True))

    def test_strict_case(self):
        lhs, rhs, ok = young_bound_check(spin_product([(0,), (1,)]), Window(d=1, n=2))
        self.assertTrue(ok)
        self.assertLess(lhs, rhs)

    def test_constant(self):
        self.assertEqual(young_bound_check(constant(2.0), Window(d=1, n=2)), (0.0, 0.0, True))

    @settings(max_examples=25, deadline=None)
    @given(st.integers(min_value=0, max_value=2**32 - 1), st.integers(min_value=1, max_value=2), st.integers(min_value=2, max_value=3))
    def test_random_functions(self, seed, d, q):
        rng = np.random.default_rng(seed)
        f = random_local_function(rng, d, q, max_sites=3, radius=1)
        lhs, rhs, ok = young_bound_check(f, Window(d=d, n=1, alphabet_size=q))
        self.assertTrue(ok, f"{lhs} > {rhs}")


class TestEmpiricalFrequency(unittest.TestCase):
    """Test cases for f_{n,k}."""

    def setUp(self):
        self.free = Window(d=1, n=1, geometry="free")

    def test_single_site_counts(self):
        freq = empirical_frequency(Configuration(self.free, np.array([1, 0, 1])), 0)
        np.testing.assert_allclose(freq.probs, [1 / 3, 2 / 3])
        self.assertEqual(freq.sample_count, 3)

    def test_constant_configuration(self):
        freq = empirical_frequency(Configuration(Window(d=2, n=2), np.ones(25, dtype=int), Boundary.plus()), 1)
        self.assertEqual(dict(freq.items()), {511: 1.0})

    def test_sliding_window(self):
        window = Window(d=1, n=2, geometry="free")
        freq = empirical_frequency(Configuration(window, np.array([1, 1, 0, 1, 1])), 1)
        self.assertEqual(dict(freq.items()), {6: 1 / 3, 5: 1 / 3, 3: 1 / 3})

    def test_radius_must_fit(self):
        with self.assertRaises(GeometryError):
            empirical_frequency(Configuration(self.free, np.array([1, 0, 1])), 1)

    def test_matrix_rows_match(self):
        window = Window(d=2, n=2, geometry="torus")
        spins = np.random.default_rng(2).integers(0, 2, size=(4, 25))
        matrix = frequency_matrix(spins, window, 1)
        for row, probs in zip(spins, matrix):
            np.testing.assert_allclose(empirical_frequency(Configuration(window, row), 1).probs, probs)

    def test_table_schema(self):
        freq = empirical_frequency(Configuration(self.free, np.array([1, 0, 1])), 0)
        frame = frequency_table(freq, 1)
        self.assertEqual(list(frame.columns), FREQUENCY_COLUMNS)
        self.assertEqual(frame["pattern_code"].tolist(), [0, 1])


class TestTotalVariation(unittest.TestCase):
    """Test cases for tv_distance."""

    def test_identical(self):
        p = PatternDistribution.uniform(1, 1, 2)
        self.assertEqual(tv_distance(p, p), 0.0)

    def test_disjoint_point_masses(self):
        self.assertEqual(tv_distance(PatternDistribution.point_mass(0, 0, 1, 2), PatternDistribution.point_mass(1, 0, 1, 2)), 1.0)

    def test_two_point(self):
        p = PatternDistribution(0, 1, 2, probs=np.array([0.75, 0.25]))
        self.assertAlmostEqual(tv_distance(p, PatternDistribution.uniform(0, 1, 2)), 0.25)

    def test_mismatched_spaces(self):
        with self.assertRaises(ShapeMismatchError):
            tv_distance(PatternDistribution.uniform(0, 1, 2), PatternDistribution.uniform(0, 1, 3))


class TestShieldsBound(unittest.TestCase):
    """Test cases for the frequency perturbation bound."""

    def test_identical_configurations(self):
        window = Window(d=1, n=3, geometry="free")
        omega = Configuration(window, np.array([1, 0, 1, 1, 0, 0, 1]))
        self.assertEqual(tuple(shields_bound_check(omega, omega, 1)), (0.0, 0.0, True))

    def test_exhaustive_chain(self):
        window = Window(d=1, n=3, geometry="free")
        spins = decode_codes(np.arange(2**7), 2, 7)
        freqs = frequency_matrix(spins, window, 1)
        tv = 0.5 * np.abs(freqs[:, None, :] - freqs[None, :, :]).sum(axis=-1)
        hamming = (spins[:, None, :] != spins[None, :, :]).sum(axis=-1)
        factor = 3 / anchor_count(window, 1)
        self.assertTrue(np.all(tv <= factor * hamming + 1e-12))

    def test_sampled_square(self):
        window = Window(d=2, n=2, geometry="free")
        rng = np.random.default_rng(9)
        for _ in range(200):
            omega = Configuration(window, rng.integers(0, 2, size=25))
            flips = rng.random(25) < rng.random()
            eta = omega.with_spins(np.where(flips, 1 - omega.spins, omega.spins))
            self.assertTrue(shields_bound_check(omega, eta, 0).ok)

    def test_eps_claim(self):
        window = Window(d=1, n=5, geometry="free")
        omega = Configuration(window, np.zeros(11, dtype=int))
        eta = omega.with_spins(np.eye(11, dtype=int)[5])
        check = shields_bound_check(omega, eta, 0, eps=0.5)
        self.assertTrue(check.eps_applicable)
        self.assertTrue(check.eps_ok)
        self.assertAlmostEqual(check.tv, 1 / 11)

    def test_admissibility(self):
        self.assertEqual(smallest_admissible_radius(1, 1), 5)
        self.assertTrue(admissible_window(Window(d=1, n=5), 1))
        self.assertFalse(admissible_window(Window(d=1, n=4), 1))
        self.assertAlmostEqual(hamming_tolerance(0.5, 1, 1), 1 / 15)


class TestConvergenceProbe(unittest.TestCase):
    """Test cases for the frequency convergence probe."""

    def test_probe_rows(self):
        reference = PatternDistribution.uniform(0, 1, 2)
        window = Window(d=1, n=2, geometry="free")
        spins = np.array([[1, 1, 1, 1, 1], [1, 0, 1, 0, 1], [0, 0, 0, 0, 0]])
        frame = frequency_convergence_probe([(window, spins)], reference, eps=0.4)
        self.assertEqual(list(frame.columns), PROBE_COLUMNS)
        row = frame.iloc[0]
        self.assertEqual(row["hits"], 2)
        self.assertAlmostEqual(row["rate"], -math.log(2 / 3) / 5)

    def test_no_hits(self):
        reference = PatternDistribution.uniform(0, 1, 2)
        window = Window(d=1, n=2, geometry="free")
        frame = frequency_convergence_probe([(window, np.array([[1, 0, 1, 0, 0]]))], reference, eps=0.4)
        self.assertEqual(frame.iloc[0]["rate"], math.inf)
        self.assertEqual(frame.iloc[0]["upper_bound"], 3.0)


if __name__ == "__main__":
    unittest.main()

"""Tests for relative entropy and per-site entropy sequences."""

import math
import os
import sys
import tempfile
import unittest
from pathlib import Path

import numpy as np
import pandas as pd
from hypothesis import given, settings
from hypothesis import strategies as st

# Add interfaces to path for testing
sys.path.insert(0, str(Path(__file__).parent.parent / "interfaces"))

from src.entropy.relative_entropy import (
    ENTROPY_COLUMNS,
    abs_entropy_bound_check,
    per_site_entropy_sequence,
    product_kl,
    projective_entropy_check,
    relative_entropy,
    relative_entropy_arrays,
)
from src.exceptions import AbsoluteContinuityError, GeometryError
from src.gibbs.distributions import PatternDistribution
from src.gibbs.specification import gibbs_kernel
from src.lattice.geometry import Boundary, Window
from src.models.potential import ising_potential, potts_potential


def two_point(p: float) -> PatternDistribution:
    return PatternDistribution(0, 1, 2, probs=np.array([1 - p, p]))


class TestRelativeEntropy(unittest.TestCase):
    """Test cases for H(nu | mu)."""

    def test_self_entropy_is_zero(self):
        nu = PatternDistribution(1, 1, 2, probs=np.arange(1, 9) / 36)
        self.assertEqual(relative_entropy(nu, nu), 0.0)

    def test_point_mass_against_uniform(self):
        nu = PatternDistribution.point_mass(5, 1, 1, 2)
        self.assertAlmostEqual(relative_entropy(nu, PatternDistribution.uniform(1, 1, 2)), math.log(8))

    def test_two_point(self):
        expected = 0.75 * math.log(1.5) + 0.25 * math.log(0.5)
        self.assertAlmostEqual(relative_entropy(two_point(0.25), two_point(0.5)), expected)
        self.assertAlmostEqual(product_kl(0.25, 0.5), expected)

    def test_absolute_continuity(self):
        with self.assertRaises(AbsoluteContinuityError) as ctx:
            relative_entropy(two_point(0.5), PatternDistribution.point_mass(0, 0, 1, 2))
        self.assertEqual(ctx.exception.key, 1)
        with self.assertRaises(AbsoluteContinuityError) as ctx:
            relative_entropy_arrays([0.5, 0.5], [1.0, 0.0], keys=["a", "b"])
        self.assertEqual(ctx.exception.key, "b")

    def test_zero_mass_of_nu_is_ignored(self):
        self.assertAlmostEqual(relative_entropy_arrays([1.0, 0.0], [0.5, 0.5]), math.log(2))


class TestAbsEntropyBound(unittest.TestCase):
    """Test cases for sum nu |log(nu / mu)| <= H(nu | mu) + 2/e."""

    def test_equal_laws(self):
        p = two_point(0.3)
        lhs, rhs, ok = abs_entropy_bound_check(p, p)
        self.assertEqual(lhs, 0.0)
        self.assertAlmostEqual(rhs, 2 / math.e)
        self.assertTrue(ok)

    def test_point_mass(self):
        lhs, rhs, ok = abs_entropy_bound_check(PatternDistribution.point_mass(0, 0, 1, 2), two_point(0.5))
        self.assertAlmostEqual(lhs, math.log(2))
        self.assertAlmostEqual(rhs, math.log(2) + 2 / math.e)
        self.assertTrue(ok)

    @settings(max_examples=50, deadline=None)
    @given(st.integers(min_value=0, max_value=2**32 - 1), st.integers(min_value=2, max_value=3))
    def test_random_pairs(self, seed, q):
        rng = np.random.default_rng(seed)
        nu = PatternDistribution(0, 2, q, probs=rng.dirichlet(np.full(q, 0.3)))
        mu = PatternDistribution(0, 2, q, probs=rng.dirichlet(np.ones(q)))
        lhs, rhs, ok = abs_entropy_bound_check(nu, mu)
        self.assertTrue(ok, f"{lhs} > {rhs}")


class TestPerSiteEntropy(unittest.TestCase):
    """Test cases for per-site entropy sequences."""

    def setUp(self):
        self.temp_dir = tempfile.mkdtemp()

    def tearDown(self):
        import shutil

        shutil.rmtree(self.temp_dir)

    def test_same_model_is_zero(self):
        phi = ising_potential(0.3, d=2)
        report = per_site_entropy_sequence(phi, phi, n_list=[0, 1], boundary_nu=Boundary.plus(), boundary_mu=Boundary.plus())
        self.assertTrue(report.all_zero)
        self.assertEqual(report.trend, "constant")

    def test_product_measures_are_extensive(self):
        nu = ising_potential(1.0, h=math.atanh(0.5), d=1, J=0.0)
        mu = ising_potential(0.0, d=1)
        report = per_site_entropy_sequence(nu, mu, n_list=[0, 1, 2, 3], geometry="free")
        np.testing.assert_allclose(report.per_site, product_kl(0.75, 0.5), rtol=1e-10)
        self.assertEqual(report.volumes, [1, 3, 5, 7])

    def test_phase_coexistence_probe(self):
        phi = ising_potential(0.55, d=2)
        report = per_site_entropy_sequence(phi, phi, boundary_nu=Boundary.minus(), boundary_mu=Boundary.plus(), sides=[2, 3, 4])
        self.assertEqual(report.sides, [2, 3, 4])
        self.assertTrue(report.decreasing)
        self.assertGreater(report.per_site[-1], 0.0)
        self.assertIsNotNone(report.slope)

    def test_model_mismatch(self):
        with self.assertRaises(GeometryError):
            per_site_entropy_sequence(ising_potential(0.1, d=1), ising_potential(0.1, d=2), n_list=[1])
        with self.assertRaises(GeometryError):
            per_site_entropy_sequence(ising_potential(0.1, d=2), potts_potential(0.1, 3, d=2), n_list=[1])

    def test_csv_schema(self):
        phi = ising_potential(0.2, d=1)
        report = per_site_entropy_sequence(phi, phi, n_list=[1, 2], boundary_nu=Boundary.minus(), boundary_mu=Boundary.plus())
        path = os.path.join(self.temp_dir, "entropy.csv")
        report.write_csv(path)
        frame = pd.read_csv(path)
        self.assertEqual(list(frame.columns), ENTROPY_COLUMNS)
        self.assertEqual(frame["volume"].tolist(), [3, 5])


class TestProjectiveEntropy(unittest.TestCase):
    """Test cases for entropy of nested marginals."""

    def test_marginals_never_exceed_the_window(self):
        window = Window(d=1, n=3)
        phi = ising_potential(0.4, h=0.1, d=1)
        nu = gibbs_kernel(phi, window, Boundary.minus())
        mu = gibbs_kernel(phi, window, Boundary.plus())
        check = projective_entropy_check(nu, mu, [2, 0, 1])
        self.assertTrue(check.ok)
        self.assertEqual(check.k_list, [0, 1, 2])
        self.assertGreater(check.H_full, check.H[0])

    def test_different_windows_rejected(self):
        phi = ising_potential(0.4, d=1)
        with self.assertRaises(GeometryError):
            projective_entropy_check(
                gibbs_kernel(phi, Window(d=1, n=1), Boundary.plus()),
                gibbs_kernel(phi, Window(d=1, n=2), Boundary.plus()),
                [0],
            )


if __name__ == "__main__":
    unittest.main()

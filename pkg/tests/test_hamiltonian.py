"""Tests for finite-volume Hamiltonians."""

import sys
import unittest
from pathlib import Path

import numpy as np

# Add interfaces to path for testing
sys.path.insert(0, str(Path(__file__).parent.parent / "interfaces"))

from src.exceptions import GeometryError, MissingBoundaryError
from src.lattice.geometry import Boundary, Configuration, Window
from src.models.hamiltonian import compile_terms, hamiltonian, hamiltonian_by_subsets
from src.models.potential import dyson_truncated_potential, ising_potential, potts_potential


class TestHamiltonian(unittest.TestCase):
    """Test cases for H_Lambda(omega | eta)."""

    def setUp(self):
        self.phi = ising_potential(1.0, d=1)
        self.fixed = Window(d=1, n=1)
        self.free = Window(d=1, n=1, geometry="free")

    def test_plus_boundary_counts_collar_bonds(self):
        omega = Configuration(self.fixed, np.ones(3, dtype=int), Boundary.plus())
        self.assertAlmostEqual(hamiltonian(self.phi, self.fixed, omega), -4.0)

    def test_free_boundary_counts_interior_bonds(self):
        omega = Configuration(self.free, np.ones(3, dtype=int))
        self.assertAlmostEqual(hamiltonian(self.phi, self.free, omega), -2.0)

    def test_torus_wraps_bonds(self):
        torus = Window(d=1, n=1, geometry="torus")
        omega = Configuration(torus, np.ones(3, dtype=int))
        self.assertAlmostEqual(hamiltonian(self.phi, torus, omega), -3.0)

    def test_global_flip_symmetry(self):
        spins = np.array([1, 0, 1])
        omega = Configuration(self.fixed, spins, Boundary.plus())
        flipped = Configuration(self.fixed, 1 - spins, Boundary.minus())
        self.assertAlmostEqual(hamiltonian(self.phi, self.fixed, omega), hamiltonian(self.phi, self.fixed, flipped))

    def test_boundary_argument_overrides(self):
        omega = Configuration(self.fixed, np.ones(3, dtype=int), Boundary.plus())
        self.assertAlmostEqual(hamiltonian(self.phi, self.fixed, omega, Boundary.minus()), 0.0)

    def test_missing_boundary_spin(self):
        omega = Configuration(self.fixed, np.ones(3, dtype=int), Boundary.explicit({(2,): 1}))
        with self.assertRaises(MissingBoundaryError):
            hamiltonian(self.phi, self.fixed, omega)

    def test_dimension_mismatch(self):
        omega = Configuration(self.fixed, np.ones(3, dtype=int), Boundary.plus())
        with self.assertRaises(GeometryError):
            hamiltonian(ising_potential(1.0, d=2), self.fixed, omega)

    def test_small_torus_rejected(self):
        with self.assertRaises(GeometryError):
            compile_terms(dyson_truncated_potential(1.0, 2.0, 3), Window(d=1, n=2, geometry="torus"))


class TestSubsetReference(unittest.TestCase):
    """The compiled energy agrees with a literal sum over site sets."""

    def _check(self, phi, window, boundary, seed):
        rng = np.random.default_rng(seed)
        for _ in range(5):
            spins = rng.integers(0, window.alphabet_size, size=window.size)
            omega = Configuration(window, spins, boundary)
            self.assertAlmostEqual(
                hamiltonian(phi, window, omega), hamiltonian_by_subsets(phi, window, omega), places=10
            )

    def test_ising_field_2d(self):
        self._check(ising_potential(0.7, h=0.3, d=2), Window(d=2, n=1), Boundary.plus(), 1)

    def test_potts_free(self):
        self._check(potts_potential(0.9, 3, d=2), Window(d=2, n=1, geometry="free", alphabet_size=3), None, 2)

    def test_dyson_mixed_boundary(self):
        boundary = Boundary.explicit({(-3,): 0, (4,): 0}, uniform=1)
        self._check(dyson_truncated_potential(1.0, 1.5, 3), Window(d=1, n=2), boundary, 3)

    def test_region_terms_cover_window(self):
        window = Window(d=2, n=1)
        full = compile_terms(ising_potential(1.0, d=2), window)
        self.assertEqual(full.n_terms, 2 * 3 * 4)
        center = compile_terms(ising_potential(1.0, d=2), window, region=[window.index((0, 0))])
        self.assertEqual(center.n_terms, 4)
        self.assertEqual(center.n_ext, 5)


if __name__ == "__main__":
    unittest.main()

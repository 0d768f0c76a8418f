"""Tests for the Dobrushin interdependence matrix and the GCB certificate."""

import json
import math
import sys
import unittest
from pathlib import Path

import numpy as np

# Add interfaces to path for testing
sys.path.insert(0, str(Path(__file__).parent.parent / "interfaces"))

from src.config import LabConfig
from src.exceptions import EnumerationCapError
from src.gibbs.dobrushin import (
    analytic_ising_constant,
    constant_table,
    dobrushin_constant,
    gcb_certificate,
    gcb_constant,
    interdependence_row,
    single_site_kernels,
)
from src.models.potential import dyson_truncated_potential, ising_potential, potts_potential


def two_neighbour_oracle(beta: float) -> float:
    """C(0, e1) for the Ising chain, maximized over the other neighbour."""
    return max(0.5 * abs(math.tanh(beta * (s + 1)) - math.tanh(beta * (s - 1))) for s in (-1, 1))


class TestInterdependenceRow(unittest.TestCase):
    """Test cases for C(0, y)."""

    def test_infinite_temperature_row_vanishes(self):
        row = interdependence_row(ising_potential(0.0, d=2))
        self.assertEqual(len(row), 8)
        self.assertTrue(all(v == 0.0 for v in row.values()))

    def test_ising_chain_matches_oracle(self):
        for beta in (0.1, 0.3, 0.9):
            row = interdependence_row(ising_potential(beta, d=1))
            self.assertAlmostEqual(row[(1,)], two_neighbour_oracle(beta), places=12)
            self.assertAlmostEqual(row[(-1,)], row[(1,)], places=12)

    def test_diagonal_neighbours_do_not_interact(self):
        row = interdependence_row(ising_potential(0.3, d=2))
        self.assertEqual(row[(1, 1)], 0.0)
        self.assertGreater(row[(0, 1)], 0.0)

    def test_kernels_are_normalized(self):
        neighbours, kernels = single_site_kernels(potts_potential(0.8, 3, d=2))
        self.assertEqual(len(neighbours), 4)
        self.assertEqual(kernels.shape, (3, 3**4))
        np.testing.assert_allclose(kernels.sum(axis=0), 1.0)

    def test_dyson_row_spans_range(self):
        row = interdependence_row(dyson_truncated_potential(0.2, 2.0, 3))
        self.assertEqual(sorted(row), [(-3,), (-2,), (-1,), (1,), (2,), (3,)])
        self.assertGreater(row[(1,)], row[(2,)])
        self.assertGreater(row[(2,)], row[(3,)])

    def test_neighbourhood_cap(self):
        with self.assertRaises(EnumerationCapError):
            interdependence_row(ising_potential(0.3, d=2), LabConfig(neighborhood_cap=8))


class TestDobrushinConstant(unittest.TestCase):
    """Test cases for c and D."""

    def test_infinite_temperature(self):
        self.assertEqual(dobrushin_constant(ising_potential(0.0, d=2)), 0.0)

    def test_matches_closed_form(self):
        for d, beta in ((1, 0.25), (2, 0.1), (3, 0.05)):
            c = dobrushin_constant(ising_potential(beta, d=d))
            self.assertAlmostEqual(c, analytic_ising_constant(beta, d), places=12)

    def test_gcb_constant(self):
        self.assertEqual(gcb_constant(0.0), 0.5)
        self.assertEqual(gcb_constant(0.5), 2.0)

    def test_certificate_at_infinite_temperature(self):
        report = gcb_certificate(ising_potential(0.0, d=2))
        self.assertTrue(report.satisfied)
        self.assertEqual(report.D, 0.5)

    def test_low_temperature_not_certified(self):
        report = gcb_certificate(ising_potential(0.6, d=2))
        self.assertFalse(report.satisfied)
        self.assertIsNone(report.D)
        self.assertGreaterEqual(report.c, 1.0)

    def test_report_serializes(self):
        report = gcb_certificate(ising_potential(0.15, d=2))
        data = json.loads(report.to_json())
        self.assertAlmostEqual(data["D"], gcb_constant(2 * math.tanh(0.3)))
        self.assertEqual(len(data["row"]), 8)
        self.assertEqual(data["potential"]["beta"], 0.15)

    def test_constant_table(self):
        rows = constant_table([ising_potential(b, d=2) for b in (0.1, 0.5)])
        self.assertEqual([r["satisfied"] for r in rows], [True, False])


if __name__ == "__main__":
    unittest.main()

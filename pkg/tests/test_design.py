#!/usr/bin/env python3
"""
Borrowing Design Tests for BasketOptimizer
Similarity weights, borrowing posterior, detection rule and extreme borrowing boundary
"""

import sys
import os
import math
import unittest

import numpy as np
from scipy import stats

# Add parent directory to path
sys.path.append(os.path.dirname(os.path.dirname(os.path.abspath(__file__))))

from basketopt.analyses import boundary_crossing
from basketopt.design import (
    Design,
    TuningParams,
    borrowing_posterior,
    decide,
    decide_batch,
    extreme_boundary,
    get_similarity_cache,
    max_distinct_similarity,
    raw_similarity,
    sharpen,
    similarity_table,
    weight,
    weight_matrix,
)
from basketopt.distributions import BetaShapes, DivergenceKind, jsd
from basketopt.errors import DomainError
from basketopt.scenarios import scenario_library


class TestTuningParams(unittest.TestCase):
    """Test the tuning-parameter domain"""

    def test_valid_vector(self):
        """Test construction from a vector"""
        phi = TuningParams.from_vector([0.99, 2, 0.5])
        self.assertEqual(phi.as_tuple(), (0.99, 2.0, 0.5))
        self.assertEqual(phi.to_dict(), {"lambda": 0.99, "epsilon": 2.0, "tau": 0.5})

    def test_invalid_values(self):
        """Test out-of-range parameters raise DomainError"""
        for values in ((1.2, 2, 0), (0.9, -1, 0), (0.9, 2, 1.5), (0.9, math.inf, 0)):
            with self.assertRaises(DomainError):
                TuningParams.from_vector(values)


class TestDesign(unittest.TestCase):
    """Test design validation and derived properties"""

    def test_equal_design(self):
        """Test the exchangeable constructor"""
        design = Design.equal(3, 24, 0.2)
        self.assertTrue(design.exchangeable)
        self.assertEqual(design.outcome_count, 25 ** 3)
        self.assertEqual(design.prior_a, (1.0, 1.0, 1.0))

    def test_non_exchangeable(self):
        """Test unequal target rates break exchangeability"""
        design = Design((5, 5, 5), (0.2, 0.3, 0.2))
        self.assertFalse(design.exchangeable)

    def test_validation(self):
        """Test invalid designs are rejected"""
        with self.assertRaises(DomainError):
            Design((5, 0), (0.2, 0.2))
        with self.assertRaises(DomainError):
            Design((5, 5), (0.2,))
        with self.assertRaises(DomainError):
            Design((5, 5), (0.2, 1.0))
        with self.assertRaises(DomainError):
            Design.equal(2, 5, 0.2).check_outcome((6, 0))

    def test_dict_round_trip(self):
        """Test to_dict/from_dict keep every field"""
        design = Design((5, 7), (0.1, 0.3), (0.5, 1.0), (0.5, 2.0), DivergenceKind.HELLINGER)
        self.assertEqual(Design.from_dict(design.to_dict()), design)


class TestSimilarity(unittest.TestCase):
    """Test raw similarities and the sharpened weights"""

    def setUp(self):
        self.design = Design.equal(2, 24, 0.2)

    def test_identical_posteriors(self):
        """Test equal counts give similarity one"""
        for r in (0, 7, 24):
            self.assertAlmostEqual(raw_similarity(r, r, 0, 1, self.design), 1.0, delta=1e-9)

    def test_extreme_pair(self):
        """Test (0, 24) is the least similar pair and matches 1 - JSD"""
        table = similarity_table(self.design, 0, 1)
        expected = 1.0 - jsd(BetaShapes(1, 25), BetaShapes(25, 1))
        self.assertAlmostEqual(table[0, 24], expected, delta=1e-12)
        self.assertEqual(float(table.min()), float(table[0, 24]))

    def test_symmetry_and_cache(self):
        """Test the similarity does not depend on argument order"""
        cache = get_similarity_cache()
        p, q = BetaShapes(3, 20), BetaShapes(9, 14)
        self.assertEqual(cache.get(DivergenceKind.JSD, p, q), cache.get(DivergenceKind.JSD, q, p))
        self.assertEqual(raw_similarity(2, 8, 0, 1, self.design), raw_similarity(8, 2, 1, 0, self.design))

    def test_sharpen_formula(self):
        """Test raw^epsilon above tau, zero at or below"""
        raw = np.array([0.9])
        self.assertAlmostEqual(float(sharpen(raw, TuningParams(0.9, 2.0, 0.5))[0]), 0.81, places=12)
        boundary = float(np.power(0.9, 2.0))
        self.assertEqual(float(sharpen(raw, TuningParams(0.9, 2.0, boundary))[0]), 0.0)

    def test_full_pooling_weights(self):
        """Test epsilon = 0 and tau = 0 give weight one everywhere"""
        phi = TuningParams(0.9, 0.0, 0.0)
        self.assertEqual(weight(0, 24, 0, 1, self.design, phi), 1.0)
        np.testing.assert_array_equal(weight_matrix((0, 24), self.design, phi), np.ones((2, 2)))

    def test_weight_matrix_shape(self):
        """Test symmetric matrix with unit diagonal"""
        design = Design.equal(3, 24, 0.2)
        matrix = weight_matrix((3, 9, 17), design, TuningParams(0.9, 2.0, 0.3))
        np.testing.assert_array_equal(np.diag(matrix), np.ones(3))
        np.testing.assert_array_equal(matrix, matrix.T)
        self.assertTrue(np.all(matrix >= 0.0) and np.all(matrix <= 1.0))

    def test_weight_matrix_symmetry_exhaustive(self):
        """Test symmetry and unit diagonal over every outcome of a two-stratum trial"""
        design = Design.equal(2, 5, 0.2)
        for phi in (TuningParams(0.9, 0.0, 0.0), TuningParams(0.9, 2.0, 0.3),
                    TuningParams(0.9, 8.0, 0.7), TuningParams(0.9, 2.0, 1.0)):
            for r_0 in range(6):
                for r_1 in range(6):
                    matrix = weight_matrix((r_0, r_1), design, phi)
                    np.testing.assert_array_equal(matrix, matrix.T)
                    np.testing.assert_array_equal(np.diag(matrix), np.ones(2))

    def test_similarity_non_increasing_with_gap(self):
        """Test raw similarity does not grow as the outcome gap widens at n = 24"""
        design = Design.equal(2, 24, 0.2)
        for r_i in range(25):
            upward = [raw_similarity(r_i, r_j, 0, 1, design) for r_j in range(r_i, 25)]
            downward = [raw_similarity(r_i, r_j, 0, 1, design) for r_j in range(r_i, -1, -1)]
            for values in (upward, downward):
                self.assertTrue(all(b <= a + 1e-12 for a, b in zip(values, values[1:])))


class TestBorrowingPosterior(unittest.TestCase):
    """Test the borrowing posterior and the detection rule"""

    def setUp(self):
        self.design = Design.equal(3, 24, 0.2)

    def test_full_pooling(self):
        """Test every stratum gets the pooled posterior"""
        shapes = borrowing_posterior((3, 5, 7), self.design, TuningParams(0.9, 0.0, 0.0))
        for s in shapes:
            self.assertAlmostEqual(s.alpha, 3 + 15)
            self.assertAlmostEqual(s.beta, 3 + 57)

    def test_no_borrowing(self):
        """Test tau = 1 keeps the unaltered posteriors"""
        shapes = borrowing_posterior((3, 5, 7), self.design, TuningParams(0.9, 2.0, 1.0))
        for s, r in zip(shapes, (3, 5, 7)):
            self.assertEqual(s.as_tuple(), (1.0 + r, 25.0 - r))

    def test_decide_extreme_lambda(self):
        """Test lambda = 0 detects everything and lambda = 1 nothing"""
        r = (2, 10, 20)
        self.assertTrue(decide(r, self.design, TuningParams(0.0, 2.0, 0.0)).all())
        self.assertFalse(decide(r, self.design, TuningParams(1.0, 2.0, 0.0)).any())

    def test_decide_composition_oracle(self):
        """Test r = (12, 12, 12) against a straight-line composition with scipy"""
        phi = TuningParams(0.99, 2.0, 0.0)
        shapes = [self.design.unaltered_shapes(i, 12) for i in range(3)]
        alpha = beta = 0.0
        for j in range(3):
            w = 1.0 if j == 0 else (1.0 - jsd(shapes[0], shapes[j])) ** phi.epsilon
            w = w if (j == 0 or w > phi.tau) else 0.0
            alpha += w * shapes[j].alpha
            beta += w * shapes[j].beta
        expected = stats.beta.sf(0.2, alpha, beta) >= phi.lam
        np.testing.assert_array_equal(decide((12, 12, 12), self.design, phi), [expected] * 3)

    def test_decide_mixed_outcome(self):
        """Test a responsive stratum next to two null strata with scipy tails"""
        phi = TuningParams(0.95, 2.0, 0.3)
        r = (4, 5, 15)
        shapes = borrowing_posterior(r, self.design, phi)
        expected = [stats.beta.sf(0.2, s.alpha, s.beta) >= phi.lam for s in shapes]
        np.testing.assert_array_equal(decide(r, self.design, phi), expected)

    def test_decide_lambda_one_pooled_successes(self):
        """Test lambda = 1 detects nothing even when the pooled tail is one in floating point"""
        design = Design.equal(20, 24, 0.10)
        outcomes = np.full((1, 20), 24)
        phi = TuningParams(1.0, 0.0, 0.0)
        self.assertFalse(decide_batch(outcomes, design, phi).any())
        self.assertFalse(decide(outcomes[0], design, phi).any())

    def test_decide_near_one_lambda(self):
        """Test a lambda just below one still detects an all-success pooled outcome"""
        design = Design.equal(20, 24, 0.10)
        phi = TuningParams(1.0 - 1e-12, 0.0, 0.0)
        self.assertTrue(decide(np.full(20, 24), design, phi).all())
        self.assertFalse(decide(np.zeros(20, dtype=int), design, phi).any())

    def test_monotone_without_borrowing(self):
        """Test tau = 1 detection is non-decreasing in the own response count at n = 24"""
        design = Design.equal(2, 24, 0.2)
        for lam in (0.5, 0.9, 0.99):
            phi = TuningParams(lam, 2.0, 1.0)
            for other in (0, 12, 24):
                with self.subTest(lam=lam, other=other):
                    outcomes = np.array([(r, other) for r in range(25)])
                    detected = decide_batch(outcomes, design, phi)[:, 0]
                    self.assertTrue(np.all(np.diff(detected.astype(int)) >= 0))
                    self.assertTrue(detected[-1])


class TestExtremeBoundary(unittest.TestCase):
    """Test the extreme borrowing boundary"""

    def setUp(self):
        self.design = Design.equal(2, 5, 0.2)

    def test_boundary_at_max_similarity(self):
        """Test tau = omega* gives boundary one"""
        omega_star = max_distinct_similarity(self.design)
        self.assertGreater(omega_star, 0.0)
        self.assertLess(omega_star, 1.0)
        self.assertAlmostEqual(extreme_boundary(omega_star, self.design), 1.0, places=12)

    def test_boundary_decreasing(self):
        """Test the boundary decreases in tau and tends to zero"""
        values = [extreme_boundary(t, self.design) for t in (0.05, 0.3, 0.6, 0.9, 0.999)]
        self.assertTrue(all(a > b for a, b in zip(values, values[1:])))
        self.assertLess(values[-1], 0.1)

    def test_boundary_domain(self):
        """Test tau outside (0, 1) and single-stratum designs"""
        with self.assertRaises(DomainError):
            extreme_boundary(0.0, self.design)
        with self.assertRaises(DomainError):
            extreme_boundary(1.0, self.design)
        with self.assertRaises(DomainError):
            max_distinct_similarity(Design.equal(1, 5, 0.2))

    def test_boundary_blocks_distinct_borrowing(self):
        """Test epsilon above the boundary leaves only identical posteriors borrowing"""
        tau = 0.5
        phi = TuningParams(0.9, extreme_boundary(tau, self.design) * 1.01, tau)
        for r_i in range(6):
            for r_j in range(6):
                expected = 1.0 if r_i == r_j else 0.0
                self.assertEqual(weight(r_i, r_j, 0, 1, self.design, phi), expected)

    def test_decisions_saturate_above_boundary(self):
        """Test decisions past the boundary match borrowing between identical outcomes only"""
        outcomes = np.array([(r_0, r_1) for r_0 in range(6) for r_1 in range(6)])
        for tau in (0.3, 0.5, 0.7):
            boundary = extreme_boundary(tau, self.design)
            for lam in (0.5, 0.8, 0.95):
                with self.subTest(tau=tau, lam=lam):
                    near = decide_batch(outcomes, self.design, TuningParams(lam, boundary * 1.01, tau))
                    far = decide_batch(outcomes, self.design, TuningParams(lam, boundary * 10.0, tau))
                    np.testing.assert_array_equal(near, far)
                    for (r_0, r_1), row in zip(outcomes, near):
                        copies = 2 if r_0 == r_1 else 1
                        expected = [stats.beta.sf(0.2, copies * (1 + r), copies * (6 - r)) >= lam for r in (r_0, r_1)]
                        np.testing.assert_array_equal(row, expected)

    def test_catalog_crossing(self):
        """Test the boundary for set 1 crosses the epsilon cap at a moderate tau"""
        crossing = boundary_crossing(scenario_library(1).design)
        self.assertGreater(crossing, 0.4)
        self.assertLess(crossing, 0.8)


if __name__ == '__main__':
    unittest.main()

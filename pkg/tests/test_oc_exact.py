#!/usr/bin/env python3
"""
Exact Operating Characteristics Tests for BasketOptimizer
Full enumeration against naive references, single-arm and pooled oracles
"""

import sys
import os
import itertools
import math
import unittest

import numpy as np
from scipy import stats

# Add parent directory to path
sys.path.append(os.path.dirname(os.path.dirname(os.path.abspath(__file__))))

from basketopt.design import Design, TuningParams, decide
from basketopt.errors import DomainError, OutcomeSpaceError
from basketopt.oc_exact import (
    Backend,
    Scenario,
    canonical_key_count,
    exact_feasible,
    exact_oc,
    representative_key,
)
from basketopt.scenarios import scenario_library


def naive_oc(design, phi, scenario):
    """Straight loop over every outcome vector, no caches and no threads"""
    strata = design.strata_count
    reject = np.zeros(strata)
    fwer = ewp = 0.0
    active = np.asarray(scenario.active)
    for r in itertools.product(*(range(n + 1) for n in design.sample_sizes)):
        prob = 1.0
        for k, n, p in zip(r, design.sample_sizes, scenario.rates):
            prob *= stats.binom.pmf(k, n, p)
        decisions = decide(r, design, phi)
        reject += prob * decisions
        if decisions[~active].any():
            fwer += prob
        if decisions[active].any():
            ewp += prob
    return reject, fwer, ewp


class TestScenario(unittest.TestCase):
    """Test scenario validation and active strata"""

    def test_active_strata(self):
        """Test strata above the null rate are active"""
        scenario = Scenario((0.2, 0.2, 0.5), 0.2, "b")
        self.assertEqual(scenario.active, (False, False, True))
        self.assertEqual(scenario.active_count, 1)
        self.assertEqual(scenario.inactive_count, 2)

    def test_invalid_rates(self):
        """Test rates outside [0, 1] are rejected"""
        with self.assertRaises(DomainError):
            Scenario((0.2, 1.2), 0.2)

    def test_round_trip(self):
        """Test to_dict/from_dict"""
        scenario = Scenario((0.1, 0.4), 0.1, "x", "named", True)
        self.assertEqual(Scenario.from_dict(scenario.to_dict()), scenario)


class TestRepresentativeKey(unittest.TestCase):
    """Test the sorted representative of an outcome vector"""

    def test_exchangeable_key(self):
        """Test sorting with the stable permutation"""
        key, perm = representative_key((5, 3, 3), Design.equal(3, 10, 0.2))
        self.assertEqual(key, (3, 3, 5))
        self.assertEqual(perm, (1, 2, 0))

    def test_non_exchangeable_key(self):
        """Test the outcome itself is the key when strata differ"""
        key, perm = representative_key((5, 3, 3), Design((10, 10, 10), (0.2, 0.3, 0.2)))
        self.assertEqual(key, (5, 3, 3))
        self.assertEqual(perm, (0, 1, 2))

    def test_key_count(self):
        """Test C(n + I, I) canonical keys"""
        self.assertEqual(canonical_key_count(Design.equal(3, 24, 0.2)), math.comb(27, 3))
        self.assertEqual(canonical_key_count(Design((4, 5), (0.2, 0.2))), 30)


class TestExactOC(unittest.TestCase):
    """Test exact operating characteristics"""

    def setUp(self):
        self.design = Design.equal(3, 24, 0.2)
        self.phi = TuningParams(0.99, 2.0, 0.0)

    def test_always_detect(self):
        """Test lambda = 0 rejects every stratum"""
        oc = exact_oc(self.design, TuningParams(0.0, 2.0, 0.0), Scenario((0.2, 0.2, 0.5), 0.2))
        np.testing.assert_allclose(oc.reject_prob, np.ones(3), atol=1e-12)
        self.assertAlmostEqual(oc.fwer, 1.0, delta=1e-12)
        self.assertAlmostEqual(oc.ewp, 1.0, delta=1e-12)
        self.assertAlmostEqual(oc.ecd, 1.0, delta=1e-12)

    def test_no_borrowing_single_arm(self):
        """Test tau = 1 matches a single-arm tail-sum oracle"""
        design = Design.equal(3, 10, 0.2)
        phi = TuningParams(0.9, 2.0, 1.0)
        rates = (0.2, 0.35, 0.5)
        oc = exact_oc(design, phi, Scenario(rates, 0.2))
        for i, p in enumerate(rates):
            expected = sum(
                stats.binom.pmf(k, 10, p)
                for k in range(11)
                if stats.beta.sf(0.2, 1 + k, 11 - k) >= phi.lam
            )
            self.assertAlmostEqual(oc.reject_prob[i], expected, delta=1e-10)

    def test_permutation_equivariance(self):
        """Test permuting the rates permutes reject_prob and keeps the joint measures"""
        first = exact_oc(self.design, self.phi, Scenario((0.2, 0.2, 0.5), 0.2))
        second = exact_oc(self.design, self.phi, Scenario((0.5, 0.2, 0.2), 0.2))
        np.testing.assert_allclose(first.reject_prob, second.reject_prob[[2, 1, 0]], atol=1e-12)
        self.assertAlmostEqual(first.fwer, second.fwer, delta=1e-12)
        self.assertAlmostEqual(first.ewp, second.ewp, delta=1e-12)
        self.assertAlmostEqual(first.ecd, second.ecd, delta=1e-12)

    def test_invariants(self):
        """Test probability closure, union bound and the ECD identity"""
        scenario = Scenario((0.2, 0.2, 0.5), 0.2)
        oc = exact_oc(self.design, self.phi, scenario)
        self.assertAlmostEqual(oc.probability_mass, 1.0, delta=1e-10)
        self.assertLessEqual(oc.fwer, oc.reject_prob[0] + oc.reject_prob[1] + 1e-12)
        self.assertAlmostEqual(oc.ecd, oc.reject_prob[2] + (1 - oc.reject_prob[0]) + (1 - oc.reject_prob[1]),
                               delta=1e-12)
        self.assertEqual(oc.backend, Backend.EXACT)
        self.assertEqual(set(oc.toer), {0, 1})
        self.assertEqual(set(oc.power), {2})

    def test_naive_reference_small(self):
        """Test agreement with the naive enumeration on two strata of five"""
        design = Design.equal(2, 5, 0.2)
        phi = TuningParams(0.8, 1.0, 0.2)
        scenario = Scenario((0.2, 0.45), 0.2)
        reject, fwer, ewp = naive_oc(design, phi, scenario)
        oc = exact_oc(design, phi, scenario)
        np.testing.assert_allclose(oc.reject_prob, reject, atol=1e-13)
        self.assertAlmostEqual(oc.fwer, fwer, delta=1e-13)
        self.assertAlmostEqual(oc.ewp, ewp, delta=1e-13)

    def test_naive_reference_three_strata(self):
        """Test agreement with the naive enumeration on three strata of ten"""
        design = Design.equal(3, 10, 0.2)
        phi = TuningParams(0.9, 2.0, 0.4)
        scenario = Scenario((0.2, 0.3, 0.5), 0.2)
        reject, fwer, ewp = naive_oc(design, phi, scenario)
        oc = exact_oc(design, phi, scenario)
        np.testing.assert_allclose(oc.reject_prob, reject, atol=1e-12)
        self.assertAlmostEqual(oc.fwer, fwer, delta=1e-12)
        self.assertAlmostEqual(oc.ewp, ewp, delta=1e-12)

    def test_non_exchangeable_design(self):
        """Test the uncached path of a non-exchangeable design against the naive loop"""
        design = Design((4, 6), (0.2, 0.3))
        phi = TuningParams(0.85, 1.0, 0.1)
        scenario = Scenario((0.3, 0.5), 0.25)
        reject, fwer, ewp = naive_oc(design, phi, scenario)
        oc = exact_oc(design, phi, scenario)
        self.assertEqual(oc.design_evaluations, 35)
        np.testing.assert_allclose(oc.reject_prob, reject, atol=1e-13)
        self.assertAlmostEqual(oc.ewp, ewp, delta=1e-13)

    def test_full_pooling_oracle(self):
        """Test epsilon = 0, tau = 0 against a single pooled beta tail"""
        design = Design.equal(3, 6, 0.2)
        phi = TuningParams(0.9, 0.0, 0.0)
        rates = (0.2, 0.3, 0.4)
        oc = exact_oc(design, phi, Scenario(rates, 0.2))
        expected = 0.0
        for r in itertools.product(range(7), repeat=3):
            prob = np.prod([stats.binom.pmf(k, 6, p) for k, p in zip(r, rates)])
            total = sum(r)
            if stats.beta.sf(0.2, 3 + total, 3 + 18 - total) >= phi.lam:
                expected += prob
        np.testing.assert_allclose(oc.reject_prob, [expected] * 3, atol=1e-10)

    def test_thread_count_determinism(self):
        """Test identical results for one and four workers"""
        scenario = Scenario((0.2, 0.5, 0.5), 0.2)
        single = exact_oc(self.design, self.phi, scenario, workers=1)
        threaded = exact_oc(self.design, self.phi, scenario, workers=4)
        np.testing.assert_array_equal(single.reject_prob, threaded.reject_prob)
        self.assertEqual(single.fwer, threaded.fwer)
        self.assertEqual(single.ewp, threaded.ewp)

    def test_canonical_evaluations(self):
        """Test the exchangeable design evaluates each sorted key once"""
        oc = exact_oc(self.design, self.phi, Scenario((0.2, 0.2, 0.2), 0.2))
        self.assertEqual(oc.design_evaluations, math.comb(27, 3))
        self.assertEqual(oc.ewp, 0.0)

    def test_outcome_space_ceiling(self):
        """Test set 3 is refused by the exact engine"""
        scenario_set = scenario_library(3)
        self.assertFalse(exact_feasible(scenario_set.design))
        with self.assertRaises(OutcomeSpaceError) as context:
            exact_oc(scenario_set.design, self.phi, scenario_set.null_scenario)
        self.assertIn("Monte Carlo", str(context.exception))

    def test_scenario_length_mismatch(self):
        """Test a scenario with the wrong number of rates"""
        with self.assertRaises(DomainError):
            exact_oc(self.design, self.phi, Scenario((0.2, 0.5), 0.2))


if __name__ == '__main__':
    unittest.main()

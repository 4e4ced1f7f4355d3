#!/usr/bin/env python3
"""
Monte Carlo Operating Characteristics Tests for BasketOptimizer
Seeded substreams, MCSE and agreement with the exact engine
"""

import sys
import os
import math
import unittest

import numpy as np

# Add parent directory to path
sys.path.append(os.path.dirname(os.path.dirname(os.path.abspath(__file__))))

from basketopt.design import Design, TuningParams
from basketopt.errors import DomainError
from basketopt.oc_exact import Backend, Scenario, exact_oc
from basketopt.oc_mc import (
    RNG_ALGORITHM,
    McConfig,
    draw_outcomes,
    evaluation_seed,
    mc_oc,
    mcse,
    substream_uniforms,
    substream_seeds,
)
from basketopt.scenarios import scenario_library
from basketopt.utility import EvalBackend, OCEvaluator


class TestMcse(unittest.TestCase):
    """Test the Monte Carlo standard error"""

    def test_values(self):
        """Test MCSE at known rates"""
        self.assertAlmostEqual(mcse(0.5, 1000), 0.015811, places=6)
        self.assertLessEqual(mcse(0.5, 1000), 0.016)
        self.assertEqual(mcse(0.0, 1000), 0.0)
        self.assertAlmostEqual(mcse(0.1, 1000), math.sqrt(0.09 / 1000), places=15)

    def test_domain(self):
        """Test invalid rates and trial counts"""
        with self.assertRaises(DomainError):
            mcse(1.5, 100)
        with self.assertRaises(DomainError):
            mcse(0.5, 0)
        with self.assertRaises(DomainError):
            McConfig(n_mc=0)


class TestSubstreams(unittest.TestCase):
    """Test the per-dataset random streams"""

    def test_uniform_range(self):
        """Test uniforms lie in [0, 1)"""
        values = substream_uniforms(substream_seeds(899, range(2000)), 4)
        self.assertEqual(values.shape, (2000, 4))
        self.assertTrue(np.all(values >= 0.0) and np.all(values < 1.0))
        self.assertAlmostEqual(float(values.mean()), 0.5, delta=0.02)

    def test_dataset_independence(self):
        """Test dataset k draws the same outcome whatever else is drawn"""
        design = Design.equal(3, 24, 0.2)
        scenario = Scenario((0.2, 0.2, 0.5), 0.2)
        cfg = McConfig(n_mc=50, base_seed=123)
        full = draw_outcomes(design, scenario, cfg)
        np.testing.assert_array_equal(draw_outcomes(design, scenario, cfg, [17, 3]), full[[17, 3]])

    def test_outcomes_within_sizes(self):
        """Test drawn counts respect the sample sizes and degenerate rates"""
        design = Design((5, 9), (0.2, 0.2))
        outcomes = draw_outcomes(design, Scenario((0.0, 1.0), 0.2), McConfig(n_mc=200))
        np.testing.assert_array_equal(outcomes[:, 0], np.zeros(200))
        np.testing.assert_array_equal(outcomes[:, 1], np.full(200, 9))


class TestMonteCarloOC(unittest.TestCase):
    """Test estimated operating characteristics"""

    def setUp(self):
        self.design = Design.equal(3, 24, 0.2)
        self.phi = TuningParams(0.99, 2.0, 0.0)
        self.scenario = Scenario((0.2, 0.2, 0.5), 0.2)

    def test_reproducible(self):
        """Test identical seeds give identical estimates"""
        cfg = McConfig(n_mc=500, base_seed=42)
        first = mc_oc(self.design, self.phi, self.scenario, cfg)
        second = mc_oc(self.design, self.phi, self.scenario, cfg)
        np.testing.assert_array_equal(first.reject_prob, second.reject_prob)
        self.assertEqual(first.fwer, second.fwer)
        self.assertEqual(first.extras["rng_algorithm"], RNG_ALGORITHM)
        self.assertEqual(first.backend, Backend.MONTE_CARLO)

    def test_mcse_attached(self):
        """Test every estimate carries its MCSE"""
        oc = mc_oc(self.design, self.phi, self.scenario, McConfig(n_mc=400))
        for rate, se in zip(oc.reject_prob, oc.mcse.reject_prob):
            self.assertAlmostEqual(se, mcse(float(rate), 400), places=15)
        self.assertAlmostEqual(oc.mcse.fwer, mcse(oc.fwer, 400), places=15)
        self.assertAlmostEqual(oc.ecd, oc.reject_prob[2] + 2 - oc.reject_prob[0] - oc.reject_prob[1], delta=1e-12)

    def test_agreement_with_exact(self):
        """Test every estimate lies within 3.9 standard errors of the exact value"""
        n_mc = 10_000
        exact = exact_oc(self.design, self.phi, self.scenario)
        estimate = mc_oc(self.design, self.phi, self.scenario, McConfig(n_mc=n_mc))
        for i in range(3):
            p = float(exact.reject_prob[i])
            self.assertLessEqual(abs(estimate.reject_prob[i] - p), 3.9 * mcse(p, n_mc) + 1e-12)
        self.assertLessEqual(abs(estimate.fwer - exact.fwer), 3.9 * mcse(exact.fwer, n_mc) + 1e-12)
        self.assertLessEqual(abs(estimate.ewp - exact.ewp), 3.9 * mcse(exact.ewp, n_mc) + 1e-12)
        self.assertLessEqual(abs(estimate.ecd - exact.ecd), 3.9 * estimate.mcse.ecd + 1e-3)

    def test_convergence_small_design(self):
        """Test 200,000 trials on two strata of five are within 0.005 of exact"""
        design = Design.equal(2, 5, 0.2)
        phi = TuningParams(0.8, 1.0, 0.2)
        scenario = Scenario((0.2, 0.45), 0.2)
        exact = exact_oc(design, phi, scenario)
        estimate = mc_oc(design, phi, scenario, McConfig(n_mc=200_000, base_seed=7))
        np.testing.assert_allclose(estimate.reject_prob, exact.reject_prob, atol=0.005)
        self.assertAlmostEqual(estimate.fwer, exact.fwer, delta=0.005)
        self.assertAlmostEqual(estimate.ewp, exact.ewp, delta=0.005)
        self.assertAlmostEqual(estimate.ecd, exact.ecd, delta=0.005)

    def test_large_design_runs(self):
        """Test set 3 is handled by simulation"""
        scenario_set = scenario_library(3)
        oc = mc_oc(scenario_set.design, self.phi, scenario_set.scenario("e"), McConfig(n_mc=200))
        self.assertEqual(len(oc.reject_prob), 8)
        self.assertTrue(0.0 <= oc.fwer <= 1.0)


class TestEvaluatorSeeding(unittest.TestCase):
    """Test common random numbers in the OC evaluator"""

    def setUp(self):
        self.scenario_set = scenario_library(1)
        self.phi = TuningParams(0.95, 2.0, 0.2)
        self.scenario = self.scenario_set.scenario("c")

    def test_common_random_numbers(self):
        """Test repeated evaluations reuse the base seed"""
        evaluator = OCEvaluator(self.scenario_set, EvalBackend(Backend.MONTE_CARLO, McConfig(n_mc=300)))
        first = evaluator.evaluate(self.phi, self.scenario)
        second = evaluator.evaluate(self.phi, self.scenario)
        np.testing.assert_array_equal(first.reject_prob, second.reject_prob)
        self.assertEqual(evaluator.oc_evaluations, 2)

    def test_fresh_draws(self):
        """Test a fresh seed per evaluation without common random numbers"""
        cfg = McConfig(n_mc=300, base_seed=5, common_random_numbers=False)
        evaluator = OCEvaluator(self.scenario_set, EvalBackend(Backend.MONTE_CARLO, cfg))
        first = evaluator.evaluate(self.phi, self.scenario)
        second = evaluator.evaluate(self.phi, self.scenario)
        self.assertEqual(first.extras["base_seed"], evaluation_seed(5, 0))
        self.assertEqual(second.extras["base_seed"], evaluation_seed(5, 1))
        self.assertNotEqual(first.extras["base_seed"], second.extras["base_seed"])


if __name__ == '__main__':
    unittest.main()

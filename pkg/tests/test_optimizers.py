#!/usr/bin/env python3
"""
Optimizer Tests for BasketOptimizer
Grid search, simulated annealing, differential evolution and grey wolf optimizer on cheap test objectives
"""

import sys
import os
import math
import tempfile
import unittest
from pathlib import Path

import numpy as np

# Add parent directory to path
sys.path.append(os.path.dirname(os.path.dirname(os.path.abspath(__file__))))

from basketopt.errors import DomainError
from basketopt.optimizers import (
    DEFAULT_GRIDS,
    TRACE_COLUMNS,
    Box,
    OptimizerConfig,
    de,
    grid_search,
    gwo,
    reflect,
    run_optimizer,
    sa_bounded,
    sa_unbounded,
    write_trace_csv,
)
from basketopt.tables import read_table

BOX = Box()


def sphere(target):
    """Negative squared distance to target, normalized per dimension"""
    target = np.asarray(target, dtype=float)

    def objective(x):
        return -float(np.sum(((np.asarray(x) - target) / BOX.width) ** 2))
    return objective


def near(point, target, tolerance):
    return bool(np.all(np.abs(BOX.normalize(point) - BOX.normalize(target)) <= tolerance))


class TestReflect(unittest.TestCase):
    """Test the reflection fold"""

    def test_examples(self):
        """Test single, double and lower reflections"""
        self.assertAlmostEqual(reflect(1.3, 0.0, 1.0), 0.7, places=12)
        self.assertAlmostEqual(reflect(2.5, 0.0, 1.0), 0.5, places=12)
        self.assertAlmostEqual(reflect(-0.2, 0.0, 1.0), 0.2, places=12)
        self.assertAlmostEqual(reflect(0.4, 0.0, 1.0), 0.4, places=12)

    def test_vector(self):
        """Test componentwise folding into the box"""
        folded = reflect(np.array([1.2, 27.0, -0.3]), BOX.lower_array, BOX.upper_array)
        np.testing.assert_allclose(folded, [0.8, 23.0, 0.3], atol=1e-12)


class TestBox(unittest.TestCase):
    """Test the search box"""

    def test_default_box(self):
        """Test the parameter space bounds"""
        self.assertEqual(BOX.lower, (0.0, 0.0, 0.0))
        self.assertEqual(BOX.upper, (1.0, 25.0, 1.0))
        self.assertTrue(BOX.contains([0.5, 25.0, 0.0]))
        self.assertFalse(BOX.contains([0.5, 25.1, 0.0]))

    def test_invalid_box(self):
        """Test lower must lie below upper"""
        with self.assertRaises(DomainError):
            Box((0.0, 1.0), (1.0, 1.0))


class TestGridSearch(unittest.TestCase):
    """Test exhaustive grid search"""

    def test_picks_best_lambda(self):
        """Test a one-dimensional objective over the lambda grid"""
        result = grid_search(lambda x: -(x[0] - 0.5) ** 2, (DEFAULT_GRIDS[0], (0.0,), (0.0,)))
        self.assertEqual(result.phi_star, (0.5, 0.0, 0.0))
        self.assertEqual(result.n_evals, 10)

    def test_constant_objective_tie_break(self):
        """Test ties go to the lexicographically smallest point"""
        result = grid_search(lambda x: 1.0)
        self.assertEqual(result.phi_star, (0.2, 0.0, 0.0))
        self.assertEqual(result.n_evals, 1000)
        self.assertIsNone(result.seed)

    def test_parallel_matches_serial(self):
        """Test worker threads do not change the trace"""
        objective = sphere((0.55, 3.5, 0.45))
        serial = grid_search(objective)
        threaded = grid_search(objective, workers=4)
        self.assertEqual([r.x for r in serial.trace], [r.x for r in threaded.trace])
        self.assertEqual(serial.phi_star, threaded.phi_star)


class TestSimulatedAnnealing(unittest.TestCase):
    """Test bounded and unbounded simulated annealing"""

    def test_reproducible(self):
        """Test identical seeds give identical traces"""
        objective = sphere((0.6, 10.0, 0.4))
        first = sa_bounded(objective, budget=200, seed=3)
        second = sa_bounded(objective, budget=200, seed=3)
        self.assertEqual([(r.x, r.utility, r.accepted) for r in first.trace],
                         [(r.x, r.utility, r.accepted) for r in second.trace])
        self.assertEqual(first.n_evals, 200)

    def test_bounded_stays_in_box(self):
        """Test reflected proposals never leave the box"""
        result = sa_bounded(sphere((0.99, 24.0, 0.99)), budget=300, seed=8, step_scale=0.5)
        self.assertTrue(all(BOX.contains(r.x) for r in result.trace))

    def test_unbounded_rejects_outside(self):
        """Test out-of-box proposals score -inf, never get accepted and skip the objective"""
        calls = []
        target = sphere((0.99, 24.0, 0.99))

        def objective(x):
            calls.append(1)
            return target(x)

        result = sa_unbounded(objective, budget=300, seed=8, step_scale=0.5)
        outside = [r for r in result.trace if not BOX.contains(r.x)]
        self.assertGreater(len(outside), 0)
        self.assertTrue(all(r.utility == -math.inf and not r.accepted for r in outside))
        self.assertEqual(len(calls), result.n_evals - len(outside))
        self.assertEqual(result.n_evals, 300)

    def test_frozen_limit_hill_climbs(self):
        """Test a near-zero temperature never accepts a worse proposal"""
        levels = {0: 0.0, 1: 1.0, 2: 0.5}

        def objective(x):
            return levels[int(min(x[0], 0.999) * 3)]

        result = sa_bounded(objective, t_start=1e-12, budget=300, seed=4, start=(0.2, 0.5, 0.0))
        accepted = [r.utility for r in result.trace if r.accepted]
        self.assertEqual(accepted, sorted(accepted))
        self.assertEqual(result.u_star, 1.0)

    def test_start_outside_box(self):
        """Test the start point has to lie in the box"""
        with self.assertRaises(DomainError):
            sa_bounded(sphere((0.5, 5.0, 0.5)), start=(0.5, 30.0, 0.5))

    def test_calibration(self):
        """Test at least 45 of 50 seeded runs end within 0.05 of the optimum of a smooth objective"""
        target = (0.6, 10.0, 0.4)
        objective = sphere(target)
        for method in (sa_bounded, sa_unbounded):
            with self.subTest(method=method.__name__):
                hits = sum(near(method(objective, seed=seed).phi_star, target, 0.05) for seed in range(50))
                self.assertGreaterEqual(hits, 45)


class TestPopulationMethods(unittest.TestCase):
    """Test differential evolution and the grey wolf optimizer"""

    def test_de_generations(self):
        """Test the default budget gives 40 initial points and 24 generations"""
        result = de(sphere((0.6, 10.0, 0.4)), seed=1)
        self.assertEqual(result.n_evals, 1000)
        self.assertEqual(result.metadata["generations"], 24)
        best = result.metadata["best_per_generation"]
        self.assertEqual(best, sorted(best))

    def test_gwo_iterations(self):
        """Test 25 iterations of 40 wolves, a monotone alpha and a coefficient ending at zero"""
        result = gwo(sphere((0.6, 10.0, 0.4)), seed=1)
        self.assertEqual(result.n_evals, 1000)
        self.assertEqual(result.metadata["iterations"], 25)
        alpha = result.metadata["alpha_per_iteration"]
        self.assertEqual(alpha, sorted(alpha))
        schedule = result.metadata["a_schedule"]
        self.assertEqual(len(schedule), 24)
        self.assertEqual(schedule[0], 2.0)
        self.assertEqual(schedule[-1], 0.0)
        self.assertTrue(all(a > b for a, b in zip(schedule, schedule[1:])))
        self.assertTrue(all(BOX.contains(r.x) for r in result.trace))

    def test_sphere_convergence(self):
        """Test both methods find the optimum of the sphere on most seeds"""
        target = (0.6, 10.0, 0.4)
        objective = sphere(target)
        de_hits = sum(near(de(objective, seed=seed).phi_star, target, 0.1) for seed in range(10))
        gwo_hits = sum(near(gwo(objective, seed=seed).phi_star, target, 0.1) for seed in range(10))
        self.assertGreaterEqual(de_hits, 9)
        self.assertGreaterEqual(gwo_hits, 9)

    def test_beats_grid_off_grid_optimum(self):
        """Test stochastic methods beat the grid on 45 of 50 seeds for an optimum between grid points"""
        objective = sphere((0.55, 3.5, 0.45))
        grid_best = grid_search(objective).u_star
        for method in (sa_bounded, sa_unbounded, de, gwo):
            with self.subTest(method=method.__name__):
                wins = sum(method(objective, seed=seed).u_star > grid_best for seed in range(50))
                self.assertGreaterEqual(wins, 45)

    def test_population_limits(self):
        """Test too small populations and budgets"""
        with self.assertRaises(DomainError):
            de(sphere((0.5, 5.0, 0.5)), pop=3)
        with self.assertRaises(DomainError):
            gwo(sphere((0.5, 5.0, 0.5)), budget=50)


class TestRunOptimizer(unittest.TestCase):
    """Test configuration-driven dispatch"""

    def test_dispatch(self):
        """Test each algorithm name runs with its budget"""
        objective = sphere((0.5, 5.0, 0.5))
        for name in ("sa_bounded", "sa_unbounded", "de", "gwo"):
            result = run_optimizer(OptimizerConfig(algorithm=name, budget=80, seed=9, pop=10), objective)
            self.assertEqual(result.algorithm, name)
            self.assertLessEqual(result.n_evals, 80)

    def test_unknown_algorithm(self):
        """Test an unknown name raises DomainError"""
        with self.assertRaises(DomainError):
            run_optimizer(OptimizerConfig(algorithm="cobyla"), sphere((0.5, 5.0, 0.5)))

    def test_config_validation(self):
        """Test budgets below two populations are rejected"""
        with self.assertRaises(DomainError):
            OptimizerConfig(algorithm="de", budget=60, pop=40)
        self.assertEqual(OptimizerConfig(algorithm="sa_bounded").resolved_t_start, 10.0)

    def test_trace_csv(self):
        """Test the trace table columns and length"""
        result = sa_bounded(sphere((0.5, 5.0, 0.5)), budget=25, seed=1)
        with tempfile.TemporaryDirectory() as temp_dir:
            path = write_trace_csv(result, Path(temp_dir) / "trace.csv")
            rows = read_table(path)
        self.assertEqual(len(rows), 25)
        self.assertEqual(list(rows[0]), TRACE_COLUMNS)
        self.assertEqual(rows[0]["eval_index"], 1)
        self.assertEqual(rows[0]["accepted"], 1)


if __name__ == '__main__':
    unittest.main()

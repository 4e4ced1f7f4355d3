#!/usr/bin/env python3
"""
Further analyses for BasketOptimizer
Type-I error curves for two strata and the extreme borrowing boundary
"""

import logging
from typing import Dict, List, Optional, Sequence

from .design import EPSILON_MAX, Design, TuningParams, extreme_boundary, max_distinct_similarity
from .distributions import DivergenceKind
from .errors import DomainError
from .oc_exact import Scenario, exact_oc
from .scenarios import SCENARIO_SET_IDS, scenario_library

logger = logging.getLogger("basketopt.analyses")

TOER_COLUMNS = ["p2", "epsilon", "tau", "lambda", "toer"]
BOUNDARY_COLUMNS = ["design", "strata", "n", "tau", "epsilon_extreme", "omega_star", "epsilon_reference"]

DEFAULT_TOER_PHIS = (
    (0.99, 2.0, 0.0),
    (0.99, 2.0, 0.5),
    (0.99, 1.0, 0.0),
    (0.99, 5.0, 0.0),
    (0.99, 2.0, 1.0),
)
DEFAULT_TAU_GRID = tuple(round(0.05 * k, 2) for k in range(1, 20))


def default_p2_grid(step: float = 0.05) -> List[float]:
    """p2 from 0.2 to 1 inclusive"""
    count = int(round(0.8 / step))
    return [round(0.2 + k * step, 10) for k in range(count + 1)]


def toer_curve(phi_list: Sequence[Sequence[float]], p2_grid: Sequence[float],
               n: int = 24, p1: float = 0.2, workers: int = 1,
               divergence: DivergenceKind = DivergenceKind.JSD) -> List[Dict[str, float]]:
    """Exact TOER of stratum 1 at rate p1 while stratum 2 moves along p2_grid"""
    design = Design.equal(2, n, p1, DivergenceKind(divergence))
    rows = []
    for values in phi_list:
        phi = values if isinstance(values, TuningParams) else TuningParams.from_vector(values)
        for p2 in p2_grid:
            scenario = Scenario((p1, float(p2)), p1, name=f"p2={p2}")
            oc = exact_oc(design, phi, scenario, workers=workers)
            rows.append({
                "p2": float(p2),
                "epsilon": phi.epsilon,
                "tau": phi.tau,
                "lambda": phi.lam,
                "toer": float(oc.reject_prob[0]),
            })
        logger.info(f"TOER curve for phi={phi.as_tuple()} over {len(p2_grid)} values of p2")
    return rows


def catalog_designs(divergence: DivergenceKind = DivergenceKind.JSD) -> Dict[str, Design]:
    """Designs of the scenario catalog, one per set"""
    return {f"set{set_id}": scenario_library(set_id).with_divergence(divergence).design for set_id in SCENARIO_SET_IDS}


def boundary_curve(designs: Optional[Dict[str, Design]] = None,
                   tau_grid: Sequence[float] = DEFAULT_TAU_GRID) -> List[Dict[str, float]]:
    """Extreme borrowing boundary per tau for each design, with the epsilon cap as reference"""
    designs = designs if designs is not None else catalog_designs()
    if any(not 0.0 < t < 1.0 for t in tau_grid):
        raise DomainError("tau grid must lie inside (0, 1)")
    rows = []
    for label, design in designs.items():
        omega_star = max_distinct_similarity(design)
        logger.info(f"{label}: maximal distinct similarity {omega_star:.6f}")
        for tau in tau_grid:
            rows.append({
                "design": label,
                "strata": design.strata_count,
                "n": design.sample_sizes[0],
                "tau": float(tau),
                "epsilon_extreme": extreme_boundary(float(tau), design),
                "omega_star": omega_star,
                "epsilon_reference": EPSILON_MAX,
            })
    return rows


def boundary_crossing(design: Design) -> float:
    """tau at which the extreme boundary meets the epsilon cap"""
    return float(max_distinct_similarity(design) ** EPSILON_MAX)

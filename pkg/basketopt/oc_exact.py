#!/usr/bin/env python3
"""
Exact operating characteristics for BasketOptimizer
Full enumeration of the outcome space with decisions cached on sorted representatives
"""

import logging
import math
from concurrent.futures import ThreadPoolExecutor
from dataclasses import dataclass, field
from enum import Enum
from functools import lru_cache
from itertools import combinations_with_replacement
from typing import Any, Dict, List, Optional, Sequence, Tuple

import numpy as np

from .design import Design, TuningParams, decide_batch
from .distributions import binom_pmf_vector
from .errors import DomainError, OutcomeSpaceError

logger = logging.getLogger("basketopt.oc_exact")

DEFAULT_MAX_OUTCOMES = 10 ** 7


class Backend(str, Enum):
    """Engine used for an OCResult"""
    EXACT = "exact"
    MONTE_CARLO = "monte_carlo"


@dataclass(frozen=True)
class Scenario:
    """True response rates; stratum i is active when its rate exceeds the null rate"""
    rates: Tuple[float, ...]
    null_rate: float
    label: str = ""
    name: str = ""
    evaluation_only: bool = False

    def __post_init__(self):
        rates = tuple(float(p) for p in self.rates)
        if any(not 0.0 <= p <= 1.0 for p in rates):
            raise DomainError(f"Scenario rates must lie in [0, 1], got {rates}")
        if not 0.0 <= float(self.null_rate) <= 1.0:
            raise DomainError(f"Null rate must lie in [0, 1], got {self.null_rate}")
        object.__setattr__(self, "rates", rates)
        object.__setattr__(self, "null_rate", float(self.null_rate))

    @property
    def active(self) -> Tuple[bool, ...]:
        return tuple(p > self.null_rate for p in self.rates)

    @property
    def active_count(self) -> int:
        return sum(self.active)

    @property
    def inactive_count(self) -> int:
        return len(self.rates) - self.active_count

    def to_dict(self) -> Dict[str, Any]:
        return {
            "label": self.label,
            "name": self.name,
            "rates": list(self.rates),
            "null_rate": self.null_rate,
            "evaluation_only": self.evaluation_only,
        }

    @classmethod
    def from_dict(cls, data: Dict[str, Any]) -> "Scenario":
        return cls(
            tuple(data["rates"]),
            data["null_rate"],
            data.get("label", ""),
            data.get("name", ""),
            bool(data.get("evaluation_only", False)),
        )


@dataclass
class McseSummary:
    """Monte Carlo standard errors attached to an estimated OCResult"""
    reject_prob: np.ndarray
    fwer: float
    ewp: float
    ecd: float


@dataclass
class OCResult:
    """Per-stratum rejection probabilities plus joint FWER, EWP and ECD"""
    reject_prob: np.ndarray
    fwer: float
    ewp: float
    ecd: float
    backend: Backend
    active: Tuple[bool, ...] = ()
    mcse: Optional[McseSummary] = None
    probability_mass: float = 1.0
    design_evaluations: int = 0
    extras: Dict[str, Any] = field(default_factory=dict)

    @property
    def power(self) -> Dict[int, float]:
        return {i: float(p) for i, (p, a) in enumerate(zip(self.reject_prob, self.active)) if a}

    @property
    def toer(self) -> Dict[int, float]:
        return {i: float(p) for i, (p, a) in enumerate(zip(self.reject_prob, self.active)) if not a}

    def to_dict(self) -> Dict[str, Any]:
        data = {
            "backend": self.backend.value,
            "reject_prob": [float(p) for p in self.reject_prob],
            "active": list(self.active),
            "fwer": self.fwer,
            "ewp": self.ewp,
            "ecd": self.ecd,
            "probability_mass": self.probability_mass,
            "design_evaluations": self.design_evaluations,
        }
        if self.mcse is not None:
            data["mcse"] = {
                "reject_prob": [float(v) for v in self.mcse.reject_prob],
                "fwer": self.mcse.fwer,
                "ewp": self.mcse.ewp,
                "ecd": self.mcse.ecd,
            }
        return data


def expected_correct_decisions(reject_prob: np.ndarray, active: Sequence[bool]) -> float:
    """Sum of powers over active strata plus 1 - TOER over inactive strata"""
    mask = np.asarray(active, dtype=bool)
    return float(np.sum(reject_prob[mask]) + np.sum(1.0 - reject_prob[~mask]))


def representative_key(r: Sequence[int], design: Design) -> Tuple[Tuple[int, ...], Tuple[int, ...]]:
    """Sorted outcome vector plus the sorting permutation (identity for non-exchangeable designs)"""
    outcome = design.check_outcome(r)
    if not design.exchangeable:
        return tuple(int(v) for v in outcome), tuple(range(len(outcome)))
    perm = np.argsort(outcome, kind="stable")
    return tuple(int(v) for v in outcome[perm]), tuple(int(v) for v in perm)


def canonical_decisions(outcomes: np.ndarray, design: Design, phi: TuningParams) -> Tuple[np.ndarray, int]:
    """Decisions for a batch of outcome vectors, evaluating each canonical key once"""
    outcomes = np.asarray(outcomes, dtype=np.int64)
    if outcomes.shape[0] == 0:
        return np.zeros(outcomes.shape, dtype=bool), 0
    if design.exchangeable:
        perm = np.argsort(outcomes, axis=1, kind="stable")
        keys = np.take_along_axis(outcomes, perm, axis=1)
    else:
        perm = None
        keys = outcomes
    unique_keys, inverse = np.unique(keys, axis=0, return_inverse=True)
    inverse = inverse.reshape(-1)
    sorted_decisions = decide_batch(unique_keys, design, phi)[inverse]
    if perm is None:
        return sorted_decisions, unique_keys.shape[0]
    decisions = np.empty_like(sorted_decisions)
    np.put_along_axis(decisions, perm, sorted_decisions, axis=1)
    return decisions, unique_keys.shape[0]


def _enumerate(dims: Sequence[int]) -> np.ndarray:
    if not dims:
        return np.zeros((1, 0), dtype=np.int64)
    return np.indices(tuple(dims), dtype=np.int64).reshape(len(dims), -1).T


@lru_cache(maxsize=8)
def _trailing_outcomes(design: Design) -> np.ndarray:
    """All count combinations of strata 2..I (one partition block)"""
    rest = _enumerate([n + 1 for n in design.sample_sizes[1:]])
    rest.setflags(write=False)
    return rest


def _radix(design: Design) -> np.ndarray:
    base = design.sample_sizes[0] + 1
    count = design.strata_count
    return base ** np.arange(count - 1, -1, -1, dtype=np.int64)


@lru_cache(maxsize=4)
def _canonical_table(design: Design, phi: TuningParams) -> Tuple[np.ndarray, np.ndarray]:
    """Decisions for every sorted outcome vector of an exchangeable design"""
    n = design.sample_sizes[0]
    keys = np.array(
        list(combinations_with_replacement(range(n + 1), design.strata_count)),
        dtype=np.int64,
    )
    codes = keys @ _radix(design)
    order = np.argsort(codes, kind="stable")
    decisions = decide_batch(keys[order], design, phi)
    logger.debug(f"Canonical decision table with {keys.shape[0]} keys for {phi}")
    return codes[order], decisions


@lru_cache(maxsize=2)
def _outcome_decisions(design: Design, phi: TuningParams) -> Tuple[Tuple[np.ndarray, ...], int]:
    """Decision matrix of every partition block, plus the number of decide evaluations"""
    rest = _trailing_outcomes(design)
    blocks = []
    if design.exchangeable:
        key_codes, key_decisions = _canonical_table(design, phi)
        radix = _radix(design)
        for first in range(design.sample_sizes[0] + 1):
            rows = np.column_stack((np.full(rest.shape[0], first, dtype=np.int64), rest))
            perm = np.argsort(rows, axis=1, kind="stable")
            codes = np.take_along_axis(rows, perm, axis=1) @ radix
            sorted_decisions = key_decisions[np.searchsorted(key_codes, codes)]
            decisions = np.empty_like(sorted_decisions)
            np.put_along_axis(decisions, perm, sorted_decisions, axis=1)
            decisions.setflags(write=False)
            blocks.append(decisions)
        evaluations = key_codes.shape[0]
    else:
        for first in range(design.sample_sizes[0] + 1):
            rows = np.column_stack((np.full(rest.shape[0], first, dtype=np.int64), rest))
            decisions = decide_batch(rows, design, phi)
            decisions.setflags(write=False)
            blocks.append(decisions)
        evaluations = design.outcome_count
    return tuple(blocks), evaluations


def clear_caches():
    """Drop cached decision tables"""
    _canonical_table.cache_clear()
    _outcome_decisions.cache_clear()
    _trailing_outcomes.cache_clear()


@dataclass
class _Partial:
    reject: np.ndarray
    fwer: float
    ewp: float
    mass: float


def exact_oc(design: Design, phi: TuningParams, scenario: Scenario,
             workers: int = 1, max_outcomes: int = DEFAULT_MAX_OUTCOMES) -> OCResult:
    """Operating characteristics by enumeration of every outcome vector"""
    if len(scenario.rates) != design.strata_count:
        raise DomainError(
            f"Scenario '{scenario.label}' has {len(scenario.rates)} rates for {design.strata_count} strata"
        )
    total = design.outcome_count
    if total > max_outcomes:
        raise OutcomeSpaceError(total, max_outcomes)

    blocks, evaluations = _outcome_decisions(design, phi)
    rest = _trailing_outcomes(design)
    pmfs = [binom_pmf_vector(n, p) for n, p in zip(design.sample_sizes, scenario.rates)]
    trailing_weight = np.ones(rest.shape[0])
    for j in range(1, design.strata_count):
        trailing_weight = trailing_weight * pmfs[j][rest[:, j - 1]]
    active = np.asarray(scenario.active, dtype=bool)

    def partial(first: int) -> _Partial:
        weights = pmfs[0][first] * trailing_weight
        decisions = blocks[first]
        reject = (weights[:, None] * decisions).sum(axis=0)
        fwer = float(weights[decisions[:, ~active].any(axis=1)].sum()) if (~active).any() else 0.0
        ewp = float(weights[decisions[:, active].any(axis=1)].sum()) if active.any() else 0.0
        return _Partial(reject, fwer, ewp, float(weights.sum()))

    indices = range(design.sample_sizes[0] + 1)
    if workers > 1:
        with ThreadPoolExecutor(max_workers=workers) as executor:
            partials: List[_Partial] = list(executor.map(partial, indices))
    else:
        partials = [partial(first) for first in indices]

    # Merge in ascending partition order
    reject = np.zeros(design.strata_count)
    fwer = ewp = mass = 0.0
    for item in partials:
        reject = reject + item.reject
        fwer += item.fwer
        ewp += item.ewp
        mass += item.mass

    reject = np.clip(reject, 0.0, 1.0)
    if abs(mass - 1.0) > 1e-10:
        logger.warning(f"Probability mass {mass!r} deviates from 1 for scenario '{scenario.label}'")
    return OCResult(
        reject_prob=reject,
        fwer=min(max(fwer, 0.0), 1.0),
        ewp=min(max(ewp, 0.0), 1.0),
        ecd=expected_correct_decisions(reject, scenario.active),
        backend=Backend.EXACT,
        active=scenario.active,
        probability_mass=mass,
        design_evaluations=evaluations,
    )


def exact_feasible(design: Design, max_outcomes: int = DEFAULT_MAX_OUTCOMES) -> bool:
    """True when the outcome space fits under the enumeration ceiling"""
    return design.outcome_count <= max_outcomes


def canonical_key_count(design: Design) -> int:
    """Number of distinct sorted outcome vectors, C(n + I, I) for exchangeable designs"""
    if not design.exchangeable:
        return design.outcome_count
    return math.comb(design.sample_sizes[0] + design.strata_count, design.strata_count)

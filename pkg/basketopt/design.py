#!/usr/bin/env python3
"""
Borrowing design for BasketOptimizer
Similarity weights, borrowing posterior, detection rule and extreme borrowing boundary
"""

import logging
import math
import threading
from dataclasses import dataclass
from functools import lru_cache
from typing import Dict, Optional, Sequence, Tuple

import numpy as np

from .distributions import (
    BetaShapes,
    DivergenceKind,
    divergence,
    log_reg_inc_beta_array,
)
from .errors import DomainError

logger = logging.getLogger("basketopt.design")

EPSILON_MAX = 25.0


@dataclass(frozen=True)
class TuningParams:
    """Tuning parameters phi = (lambda, epsilon, tau)"""
    lam: float
    epsilon: float
    tau: float

    def __post_init__(self):
        lam, epsilon, tau = float(self.lam), float(self.epsilon), float(self.tau)
        if not 0.0 <= lam <= 1.0:
            raise DomainError(f"lambda must lie in [0, 1], got {lam}")
        if not (math.isfinite(epsilon) and epsilon >= 0.0):
            raise DomainError(f"epsilon must be finite and >= 0, got {epsilon}")
        if not 0.0 <= tau <= 1.0:
            raise DomainError(f"tau must lie in [0, 1], got {tau}")
        object.__setattr__(self, "lam", lam)
        object.__setattr__(self, "epsilon", epsilon)
        object.__setattr__(self, "tau", tau)

    @classmethod
    def from_vector(cls, values: Sequence[float]) -> "TuningParams":
        lam, epsilon, tau = (float(v) for v in values)
        return cls(lam, epsilon, tau)

    def as_tuple(self) -> Tuple[float, float, float]:
        return (self.lam, self.epsilon, self.tau)

    def to_dict(self) -> Dict[str, float]:
        return {"lambda": self.lam, "epsilon": self.epsilon, "tau": self.tau}


@dataclass(frozen=True)
class Design:
    """Basket trial blueprint: per-stratum sample sizes, priors and target rates"""
    sample_sizes: Tuple[int, ...]
    target_rates: Tuple[float, ...]
    prior_a: Optional[Tuple[float, ...]] = None
    prior_b: Optional[Tuple[float, ...]] = None
    divergence: DivergenceKind = DivergenceKind.JSD

    def __post_init__(self):
        sizes = tuple(int(n) for n in self.sample_sizes)
        count = len(sizes)
        if count < 1:
            raise DomainError("A design needs at least one stratum")
        if any(n < 1 for n in sizes):
            raise DomainError(f"Sample sizes must be positive, got {sizes}")
        rates = tuple(float(p) for p in self.target_rates)
        prior_a = tuple(float(a) for a in self.prior_a) if self.prior_a is not None else (1.0,) * count
        prior_b = tuple(float(b) for b in self.prior_b) if self.prior_b is not None else (1.0,) * count

        for name, values in (("target_rates", rates), ("prior_a", prior_a), ("prior_b", prior_b)):
            if len(values) != count:
                raise DomainError(f"{name} has length {len(values)}, expected {count}")
        if any(not 0.0 < p < 1.0 for p in rates):
            raise DomainError(f"Target rates must lie in (0, 1), got {rates}")
        if any(not (math.isfinite(v) and v > 0) for v in prior_a + prior_b):
            raise DomainError("Prior shapes must be positive and finite")

        object.__setattr__(self, "sample_sizes", sizes)
        object.__setattr__(self, "target_rates", rates)
        object.__setattr__(self, "prior_a", prior_a)
        object.__setattr__(self, "prior_b", prior_b)
        object.__setattr__(self, "divergence", DivergenceKind(self.divergence))

    @classmethod
    def equal(cls, strata: int, n: int, target_rate: float,
              divergence: DivergenceKind = DivergenceKind.JSD) -> "Design":
        """Exchangeable design with unit priors"""
        return cls((n,) * strata, (target_rate,) * strata, divergence=divergence)

    @property
    def strata_count(self) -> int:
        return len(self.sample_sizes)

    @property
    def exchangeable(self) -> bool:
        """Equal sample sizes, priors and target rates across strata"""
        return (
            len(set(self.sample_sizes)) == 1
            and len(set(self.target_rates)) == 1
            and len(set(zip(self.prior_a, self.prior_b))) == 1
        )

    @property
    def outcome_count(self) -> int:
        return math.prod(n + 1 for n in self.sample_sizes)

    def unaltered_shapes(self, i: int, r: int) -> BetaShapes:
        """Posterior of stratum i without borrowing"""
        n = self.sample_sizes[i]
        if not 0 <= r <= n:
            raise DomainError(f"Response count {r} outside [0, {n}] for stratum {i}")
        return BetaShapes(self.prior_a[i] + r, self.prior_b[i] + n - r)

    def check_outcome(self, r: Sequence[int]) -> np.ndarray:
        outcome = np.asarray(r, dtype=np.int64)
        if outcome.shape != (self.strata_count,):
            raise DomainError(f"Outcome vector must have length {self.strata_count}")
        if np.any(outcome < 0) or np.any(outcome > np.asarray(self.sample_sizes)):
            raise DomainError(f"Outcome vector {tuple(outcome)} outside the sample sizes")
        return outcome

    def to_dict(self) -> Dict:
        return {
            "sample_sizes": list(self.sample_sizes),
            "target_rates": list(self.target_rates),
            "prior_a": list(self.prior_a),
            "prior_b": list(self.prior_b),
            "divergence": self.divergence.value,
        }

    @classmethod
    def from_dict(cls, data: Dict) -> "Design":
        return cls(
            tuple(data["sample_sizes"]),
            tuple(data["target_rates"]),
            tuple(data["prior_a"]) if data.get("prior_a") is not None else None,
            tuple(data["prior_b"]) if data.get("prior_b") is not None else None,
            DivergenceKind(data.get("divergence", "jsd")),
        )


class SimilarityCache:
    """Compute-once table of raw similarities keyed by unaltered posterior shapes"""

    def __init__(self):
        self._values: Dict[tuple, float] = {}
        self._lock = threading.Lock()

    @staticmethod
    def key(kind: DivergenceKind, p: BetaShapes, q: BetaShapes) -> tuple:
        first, second = sorted((p.as_tuple(), q.as_tuple()))
        return (DivergenceKind(kind).value, first, second)

    def get(self, kind: DivergenceKind, p: BetaShapes, q: BetaShapes) -> float:
        key = self.key(kind, p, q)
        value = self._values.get(key)
        if value is None:
            with self._lock:
                value = self._values.get(key)
                if value is None:
                    if p == q:
                        value = 1.0
                    else:
                        # Ordered arguments keep the value independent of call order
                        value = 1.0 - divergence(kind, BetaShapes(*key[1]), BetaShapes(*key[2]))
                        value = min(max(value, 0.0), 1.0)
                    self._values[key] = value
        return value

    def clear(self):
        with self._lock:
            self._values.clear()

    def __len__(self) -> int:
        return len(self._values)


_similarity_cache = SimilarityCache()


def get_similarity_cache() -> SimilarityCache:
    """Process-wide similarity table"""
    return _similarity_cache


@lru_cache(maxsize=256)
def _pair_table(kind: DivergenceKind, shape_i: Tuple[float, float, int],
                shape_j: Tuple[float, float, int]) -> np.ndarray:
    a_i, b_i, n_i = shape_i
    a_j, b_j, n_j = shape_j
    table = np.empty((n_i + 1, n_j + 1))
    for r_i in range(n_i + 1):
        p = BetaShapes(a_i + r_i, b_i + n_i - r_i)
        for r_j in range(n_j + 1):
            q = BetaShapes(a_j + r_j, b_j + n_j - r_j)
            table[r_i, r_j] = _similarity_cache.get(kind, p, q)
    table.setflags(write=False)
    logger.debug(f"Similarity table {shape_i} x {shape_j} ready, cache size {len(_similarity_cache)}")
    return table


def similarity_table(design: Design, i: int, j: int) -> np.ndarray:
    """Raw similarities for every (r_i, r_j) pair of strata i and j"""
    return _pair_table(
        design.divergence,
        (design.prior_a[i], design.prior_b[i], design.sample_sizes[i]),
        (design.prior_a[j], design.prior_b[j], design.sample_sizes[j]),
    )


def raw_similarity(r_i: int, r_j: int, i: int, j: int, design: Design) -> float:
    """1 - divergence between the unaltered posteriors of strata i and j"""
    p = design.unaltered_shapes(i, r_i)
    q = design.unaltered_shapes(j, r_j)
    return _similarity_cache.get(design.divergence, p, q)


def sharpen(raw: np.ndarray, phi: TuningParams) -> np.ndarray:
    """omega = raw^epsilon if raw^epsilon > tau else 0"""
    powered = np.power(raw, phi.epsilon)
    return np.where(powered > phi.tau, powered, 0.0)


def weight(r_i: int, r_j: int, i: int, j: int, design: Design, phi: TuningParams) -> float:
    """Borrowing weight omega_ij; the self-weight is always 1"""
    if i == j:
        return 1.0
    powered = raw_similarity(r_i, r_j, i, j, design) ** phi.epsilon
    return powered if powered > phi.tau else 0.0


def weight_matrices(outcomes: np.ndarray, design: Design, phi: TuningParams) -> np.ndarray:
    """Weight matrices for a batch of outcome vectors, shape (M, I, I)"""
    outcomes = np.asarray(outcomes, dtype=np.int64)
    count, strata = outcomes.shape
    weights = np.ones((count, strata, strata))
    for i in range(strata):
        for j in range(i + 1, strata):
            raw = similarity_table(design, i, j)[outcomes[:, i], outcomes[:, j]]
            w = sharpen(raw, phi)
            weights[:, i, j] = w
            weights[:, j, i] = w
    return weights


def weight_matrix(r: Sequence[int], design: Design, phi: TuningParams) -> np.ndarray:
    """Symmetric I x I weight matrix with unit diagonal"""
    outcome = design.check_outcome(r)
    return weight_matrices(outcome[None, :], design, phi)[0]


def borrowing_shapes(outcomes: np.ndarray, design: Design, phi: TuningParams) -> Tuple[np.ndarray, np.ndarray]:
    """Borrowing posterior shape arrays (alpha, beta), each of shape (M, I)"""
    outcomes = np.asarray(outcomes, dtype=np.int64)
    weights = weight_matrices(outcomes, design, phi)
    prior_a = np.asarray(design.prior_a)
    prior_b = np.asarray(design.prior_b)
    sizes = np.asarray(design.sample_sizes)
    successes = prior_a + outcomes
    failures = prior_b + sizes - outcomes
    alpha = np.einsum("mij,mj->mi", weights, successes)
    beta = np.einsum("mij,mj->mi", weights, failures)
    return alpha, beta


def borrowing_posterior(r: Sequence[int], design: Design, phi: TuningParams) -> list:
    """Per-stratum borrowing posterior shapes for one outcome vector"""
    outcome = design.check_outcome(r)
    alpha, beta = borrowing_shapes(outcome[None, :], design, phi)
    return [BetaShapes(a, b) for a, b in zip(alpha[0], beta[0])]


def decide_batch(outcomes: np.ndarray, design: Design, phi: TuningParams, chunk: int = 50_000) -> np.ndarray:
    """Detection decisions for a batch of outcome vectors, shape (M, I)"""
    outcomes = np.asarray(outcomes, dtype=np.int64)
    targets = np.asarray(design.target_rates)
    decisions = np.zeros(outcomes.shape, dtype=bool)
    if phi.lam >= 1.0:
        # the posterior tail P(p > p*) is strictly below 1
        return decisions
    log_level = math.log1p(-phi.lam)
    for start in range(0, outcomes.shape[0], chunk):
        block = outcomes[start:start + chunk]
        alpha, beta = borrowing_shapes(block, design, phi)
        log_cdf = log_reg_inc_beta_array(targets[None, :], alpha, beta)
        # P(p > p*) >= lambda  <=>  log I_{p*} <= log(1 - lambda)
        decisions[start:start + chunk] = log_cdf <= log_level
    return decisions


def decide(r: Sequence[int], design: Design, phi: TuningParams) -> np.ndarray:
    """Detected flag per stratum for one outcome vector"""
    outcome = design.check_outcome(r)
    return decide_batch(outcome[None, :], design, phi)[0]


def max_distinct_similarity(design: Design) -> float:
    """Largest raw similarity between two different unaltered posteriors"""
    if design.strata_count < 2:
        raise DomainError("The extreme borrowing boundary needs at least two strata")
    best = 0.0
    for i in range(design.strata_count):
        for j in range(i + 1, design.strata_count):
            table = similarity_table(design, i, j)
            for r_i in range(design.sample_sizes[i] + 1):
                p = design.unaltered_shapes(i, r_i)
                for r_j in range(design.sample_sizes[j] + 1):
                    if p == design.unaltered_shapes(j, r_j):
                        continue
                    best = max(best, float(table[r_i, r_j]))
    return best


def extreme_boundary(tau: float, design: Design) -> float:
    """Epsilon above which borrowing only happens between identical posteriors"""
    if not 0.0 < tau < 1.0:
        raise DomainError(f"tau must lie in (0, 1), got {tau}")
    omega_star = max_distinct_similarity(design)
    if not 0.0 < omega_star < 1.0:
        raise DomainError(f"Degenerate maximal similarity {omega_star}")
    return math.log(tau) / math.log(omega_star)

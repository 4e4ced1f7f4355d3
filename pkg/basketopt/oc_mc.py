#!/usr/bin/env python3
"""
Monte Carlo operating characteristics for BasketOptimizer
Seeded SplitMix64 substreams per dataset, binomial draws by CDF inversion, MCSE reporting
"""

import logging
import math
from dataclasses import dataclass
from typing import Sequence

import numpy as np

from .design import Design, TuningParams
from .distributions import binom_pmf_vector
from .errors import DomainError
from .oc_exact import (
    Backend,
    McseSummary,
    OCResult,
    Scenario,
    canonical_decisions,
    expected_correct_decisions,
)

logger = logging.getLogger("basketopt.oc_mc")

RNG_ALGORITHM = "splitmix64-v1"
DEFAULT_N_MC = 1000
DEFAULT_BASE_SEED = 899

_MASK64 = (1 << 64) - 1
_GOLDEN = np.uint64(0x9E3779B97F4A7C15)
_MIX1 = np.uint64(0xBF58476D1CE4E5B9)
_MIX2 = np.uint64(0x94D049BB133111EB)
_EVALUATION_SALT = 0xD1B54A32D192ED03


@dataclass(frozen=True)
class McConfig:
    """Monte Carlo settings; common random numbers reuse base_seed for every evaluation"""
    n_mc: int = DEFAULT_N_MC
    base_seed: int = DEFAULT_BASE_SEED
    common_random_numbers: bool = True

    def __post_init__(self):
        if int(self.n_mc) < 1:
            raise DomainError(f"n_mc must be at least 1, got {self.n_mc}")
        object.__setattr__(self, "n_mc", int(self.n_mc))
        object.__setattr__(self, "base_seed", int(self.base_seed) & _MASK64)

    @property
    def rng_algorithm(self) -> str:
        return RNG_ALGORITHM

    def to_dict(self):
        return {
            "n_mc": self.n_mc,
            "base_seed": self.base_seed,
            "common_random_numbers": self.common_random_numbers,
            "rng_algorithm": self.rng_algorithm,
        }


def splitmix64(states: np.ndarray) -> np.ndarray:
    """SplitMix64 output function for an array of uint64 states (state advanced by the golden gamma)"""
    with np.errstate(over="ignore"):
        z = np.asarray(states, dtype=np.uint64) + _GOLDEN
        z = (z ^ (z >> np.uint64(30))) * _MIX1
        z = (z ^ (z >> np.uint64(27))) * _MIX2
        return z ^ (z >> np.uint64(31))


def substream_seeds(base_seed: int, indices: Sequence[int]) -> np.ndarray:
    """Seed of dataset k: the k-th SplitMix64 output of the base seed stream"""
    k = np.asarray(indices, dtype=np.uint64)
    with np.errstate(over="ignore"):
        states = np.uint64(int(base_seed) & _MASK64) + k * _GOLDEN
    return splitmix64(states)


def substream_uniforms(seeds: np.ndarray, count: int) -> np.ndarray:
    """count uniforms in [0, 1) from each dataset's own SplitMix64 stream, shape (M, count)"""
    steps = np.arange(count, dtype=np.uint64)
    with np.errstate(over="ignore"):
        states = seeds[:, None] + steps[None, :] * _GOLDEN
    bits = splitmix64(states) >> np.uint64(11)
    return bits.astype(np.float64) * (1.0 / 9007199254740992.0)


def draw_outcomes(design: Design, scenario: Scenario, cfg: McConfig, indices: Sequence[int] = None) -> np.ndarray:
    """Binomial outcome vectors for the given dataset indices (default 0..n_mc-1)"""
    if indices is None:
        indices = np.arange(cfg.n_mc)
    seeds = substream_seeds(cfg.base_seed, indices)
    uniforms = substream_uniforms(seeds, design.strata_count)
    outcomes = np.empty(uniforms.shape, dtype=np.int64)
    for i, (n, p) in enumerate(zip(design.sample_sizes, scenario.rates)):
        cdf = np.cumsum(binom_pmf_vector(n, p))
        outcomes[:, i] = np.minimum(np.searchsorted(cdf, uniforms[:, i], side="right"), n)
    return outcomes


def mcse(rate: float, n_mc: int) -> float:
    """Monte Carlo standard error of a rejection-rate estimate"""
    if not 0.0 <= rate <= 1.0:
        raise DomainError(f"rate must lie in [0, 1], got {rate}")
    if n_mc < 1:
        raise DomainError(f"n_mc must be at least 1, got {n_mc}")
    return math.sqrt(rate * (1.0 - rate) / n_mc)


def mc_oc(design: Design, phi: TuningParams, scenario: Scenario, cfg: McConfig) -> OCResult:
    """Estimated operating characteristics from n_mc simulated trials"""
    if len(scenario.rates) != design.strata_count:
        raise DomainError(
            f"Scenario '{scenario.label}' has {len(scenario.rates)} rates for {design.strata_count} strata"
        )
    outcomes = draw_outcomes(design, scenario, cfg)
    decisions, evaluations = canonical_decisions(outcomes, design, phi)
    active = np.asarray(scenario.active, dtype=bool)
    n_mc = cfg.n_mc

    reject = decisions.mean(axis=0)
    fwer = float(decisions[:, ~active].any(axis=1).mean()) if (~active).any() else 0.0
    ewp = float(decisions[:, active].any(axis=1).mean()) if active.any() else 0.0
    correct = decisions[:, active].sum(axis=1) + (~decisions[:, ~active]).sum(axis=1)
    ecd_se = float(correct.std(ddof=1)) / math.sqrt(n_mc) if n_mc > 1 else 0.0

    return OCResult(
        reject_prob=reject,
        fwer=fwer,
        ewp=ewp,
        ecd=expected_correct_decisions(reject, scenario.active),
        backend=Backend.MONTE_CARLO,
        active=scenario.active,
        mcse=McseSummary(
            reject_prob=np.array([mcse(float(r), n_mc) for r in reject]),
            fwer=mcse(fwer, n_mc),
            ewp=mcse(ewp, n_mc),
            ecd=ecd_se,
        ),
        design_evaluations=evaluations,
        extras={"n_mc": n_mc, "base_seed": cfg.base_seed, "rng_algorithm": RNG_ALGORITHM},
    )


def evaluation_seed(base_seed: int, evaluation_index: int) -> int:
    """Fresh base seed per objective evaluation when common random numbers are off"""
    return int(substream_seeds(int(base_seed) ^ _EVALUATION_SALT, [evaluation_index])[0])

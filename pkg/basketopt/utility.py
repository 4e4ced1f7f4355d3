#!/usr/bin/env python3
"""
Utility functions for BasketOptimizer
Discontinuous EWP/ECD utilities, two-level utilities, scenario averages and max-TOER penalty
"""

import logging
import threading
from concurrent.futures import ThreadPoolExecutor
from dataclasses import dataclass, field, replace
from enum import Enum
from typing import Dict, List, Optional, Sequence, Tuple

import numpy as np

from .design import TuningParams
from .errors import DomainError
from .oc_exact import DEFAULT_MAX_OUTCOMES, Backend, OCResult, Scenario, exact_oc
from .oc_mc import McConfig, evaluation_seed, mc_oc
from .scenarios import ScenarioSet

logger = logging.getLogger("basketopt.utility")


class UtilityKind(str, Enum):
    EWP = "ewp"
    ECD = "ecd"
    TWO_EWP = "2ewp"
    TWO_POW = "2pow"


class Averaging(str, Enum):
    SINGLE = "single"
    AVERAGED = "averaged"
    PENALIZED = "penalized"


@dataclass(frozen=True)
class UtilityParams:
    """Penalty weights xi and thresholds eta"""
    xi1: float = 1.0
    xi2: float = 1.0
    xi3: float = 1000.0
    eta1: float = 0.05
    eta2: float = 0.1
    eta3: float = 0.2

    def __post_init__(self):
        for name in ("xi1", "xi2", "xi3"):
            if getattr(self, name) <= 0:
                raise DomainError(f"{name} must be positive")
        for name in ("eta1", "eta2", "eta3"):
            if not 0.0 <= getattr(self, name) <= 1.0:
                raise DomainError(f"{name} must lie in [0, 1]")

    def to_dict(self) -> Dict[str, float]:
        return dict(xi1=self.xi1, xi2=self.xi2, xi3=self.xi3,
                    eta1=self.eta1, eta2=self.eta2, eta3=self.eta3)


def _two_level_penalty(rate: float, params: UtilityParams) -> float:
    excess = rate - params.eta2
    return params.xi1 * rate + (params.xi2 * excess if excess > 0 else 0.0)


def _utility_bound(kind: UtilityKind, strata: int, params: UtilityParams) -> float:
    """Largest magnitude an unpenalized utility can reach"""
    if kind is UtilityKind.EWP:
        return max(1.0, params.xi1)
    if kind is UtilityKind.ECD:
        return max(float(strata), params.xi1)
    if kind is UtilityKind.TWO_EWP:
        return 1.0 + params.xi1 + params.xi2
    return strata * (1.0 + params.xi1 + params.xi2)


@dataclass(frozen=True)
class UtilitySpec:
    """One of the twelve utility functions: kind x averaging over a scenario set"""
    kind: UtilityKind
    averaging: Averaging
    scenario_set: ScenarioSet
    params: UtilityParams = field(default_factory=UtilityParams)
    weights: Optional[Tuple[float, ...]] = None
    single_scenario: Optional[str] = None

    def __post_init__(self):
        object.__setattr__(self, "kind", UtilityKind(self.kind))
        object.__setattr__(self, "averaging", Averaging(self.averaging))
        scenarios = self.scenarios
        if not scenarios:
            raise DomainError("Utility needs at least one scenario")
        if self.averaging is Averaging.SINGLE:
            weights = (1.0,)
        elif self.weights is None:
            weights = self.scenario_set.weights
        else:
            weights = tuple(float(w) for w in self.weights)
        if len(weights) != len(scenarios):
            raise DomainError(f"{len(weights)} weights for {len(scenarios)} scenarios")
        if any(w < 0 for w in weights) or abs(sum(weights) - 1.0) > 1e-12:
            raise DomainError("Scenario weights must be nonnegative and sum to 1")
        object.__setattr__(self, "weights", weights)
        if self.averaging is Averaging.PENALIZED:
            bound = _utility_bound(self.kind, self.scenario_set.design.strata_count, self.params)
            if self.params.xi3 * self.params.eta3 <= bound:
                raise DomainError(
                    f"xi3 * eta3 = {self.params.xi3 * self.params.eta3} does not dominate "
                    f"the utility range {bound}"
                )

    @property
    def scenarios(self) -> Tuple[Scenario, ...]:
        if self.averaging is Averaging.SINGLE:
            label = self.single_scenario or self.scenario_set.single_target
            if label is None:
                raise DomainError(
                    f"Scenario set {self.scenario_set.id} has no single-scenario target"
                )
            return (self.scenario_set.scenario(label),)
        return self.scenario_set.optimization_scenarios

    @property
    def needs_null(self) -> bool:
        return self.kind in (UtilityKind.EWP, UtilityKind.ECD)

    @property
    def name(self) -> str:
        prefix = {"single": "u", "averaged": "ubar", "penalized": "ubar"}[self.averaging.value]
        suffix = "_pen" if self.averaging is Averaging.PENALIZED else ""
        return f"{prefix}_{self.kind.value}{suffix}"


@dataclass(frozen=True)
class EvalBackend:
    """Engine choice for utility evaluations"""
    kind: Backend = Backend.EXACT
    mc: Optional[McConfig] = None
    workers: int = 1
    max_outcomes: int = DEFAULT_MAX_OUTCOMES

    def __post_init__(self):
        object.__setattr__(self, "kind", Backend(self.kind))
        if self.kind is Backend.MONTE_CARLO and self.mc is None:
            object.__setattr__(self, "mc", McConfig())

    def to_dict(self) -> Dict:
        data = {"kind": self.kind.value, "workers": self.workers, "max_outcomes": self.max_outcomes}
        if self.mc is not None:
            data["mc"] = self.mc.to_dict()
        return data


class OCEvaluator:
    """Engine handle bound to one design; counts OC evaluations"""

    def __init__(self, scenario_set: ScenarioSet, backend: EvalBackend):
        self.scenario_set = scenario_set
        self.design = scenario_set.design
        self.backend = backend
        self.oc_evaluations = 0
        self._lock = threading.Lock()

    def evaluate(self, phi: TuningParams, scenario: Scenario) -> OCResult:
        with self._lock:
            draw_index = self.oc_evaluations
            self.oc_evaluations += 1
        if self.backend.kind is Backend.EXACT:
            return exact_oc(self.design, phi, scenario,
                            workers=self.backend.workers, max_outcomes=self.backend.max_outcomes)
        cfg = self.backend.mc
        if not cfg.common_random_numbers:
            cfg = replace(cfg, base_seed=evaluation_seed(cfg.base_seed, draw_index))
        return mc_oc(self.design, phi, scenario, cfg)


def single_value(kind: UtilityKind, params: UtilityParams, oc1: OCResult, oc2: Optional[OCResult] = None) -> float:
    """Utility of one scenario result; oc2 carries the FWER scenario for the EWP/ECD kinds"""
    kind = UtilityKind(kind)
    if kind in (UtilityKind.EWP, UtilityKind.ECD):
        if oc2 is None:
            raise DomainError(f"{kind.value} utility needs the FWER scenario result")
        value = oc1.ewp if kind is UtilityKind.EWP else oc1.ecd
        return value if oc2.fwer < params.eta1 else -params.xi1 * oc2.fwer
    if kind is UtilityKind.TWO_EWP:
        return oc1.ewp - _two_level_penalty(oc1.fwer, params)

    active = np.asarray(oc1.active, dtype=bool)
    reject = np.asarray(oc1.reject_prob, dtype=float)
    gain = float(np.sum(reject[active]))
    loss = sum(_two_level_penalty(float(rate), params) for rate in reject[~active])
    return gain - loss


def u_single(spec: UtilitySpec, phi: TuningParams, oc1: OCResult, oc2: Optional[OCResult] = None) -> float:
    """Single-scenario utility of spec at phi"""
    return single_value(spec.kind, spec.params, oc1, oc2)


def scenario_utilities(oc: OCResult, null_oc: OCResult, params: UtilityParams) -> Dict[str, float]:
    """All four single-scenario utilities of one scenario, keyed u_<kind>"""
    return {f"u_{kind.value}": single_value(kind, params, oc, null_oc) for kind in UtilityKind}


@dataclass
class UtilityEvaluation:
    """Utility value plus the per-scenario OC table it came from"""
    value: float
    table: Dict[str, OCResult]
    terms: Dict[str, float]
    max_toer: Optional[float] = None


def _scenario_key(scenario: Scenario) -> str:
    return scenario.label or ",".join(repr(p) for p in scenario.rates)


def _evaluate_table(spec: UtilitySpec, phi: TuningParams, evaluator: OCEvaluator) -> Dict[str, OCResult]:
    """OC once per distinct scenario, including the null scenario when needed"""
    needed: List[Scenario] = list(spec.scenarios)
    if spec.needs_null:
        needed.append(spec.scenario_set.null_scenario)
    unique: Dict[str, Scenario] = {}
    for scenario in needed:
        unique.setdefault(_scenario_key(scenario), scenario)

    keys = list(unique)
    if evaluator.backend.workers > 1 and evaluator.backend.kind is Backend.MONTE_CARLO:
        with ThreadPoolExecutor(max_workers=evaluator.backend.workers) as executor:
            results = list(executor.map(lambda k: evaluator.evaluate(phi, unique[k]), keys))
    else:
        results = [evaluator.evaluate(phi, unique[k]) for k in keys]
    return dict(zip(keys, results))


def u_averaged(spec: UtilitySpec, phi: TuningParams, evaluator: OCEvaluator) -> UtilityEvaluation:
    """Weighted scenario average of the single-scenario utility"""
    table = _evaluate_table(spec, phi, evaluator)
    null = table[_scenario_key(spec.scenario_set.null_scenario)] if spec.needs_null else None
    terms: Dict[str, float] = {}
    value = 0.0
    for scenario, w in zip(spec.scenarios, spec.weights):
        key = _scenario_key(scenario)
        term = u_single(spec, phi, table[key], null)
        terms[key] = term
        value += w * term
    return UtilityEvaluation(value=value, table=table, terms=terms)


def max_toer(results: Sequence[OCResult]) -> float:
    """Largest TOER over all inactive strata of all results"""
    worst = 0.0
    for oc in results:
        inactive = ~np.asarray(oc.active, dtype=bool)
        if inactive.any():
            worst = max(worst, float(np.max(np.asarray(oc.reject_prob)[inactive])))
    return worst


def penalize(value: float, worst_toer: float, params: UtilityParams) -> float:
    """Keep the average while the worst TOER stays below eta3"""
    return value if worst_toer < params.eta3 else -params.xi3 * worst_toer


def u_penalized(spec: UtilitySpec, phi: TuningParams, evaluator: OCEvaluator) -> UtilityEvaluation:
    """Scenario average replaced by -xi3 * max TOER once that TOER reaches eta3"""
    averaged = u_averaged(spec, phi, evaluator)
    worst = max_toer([averaged.table[_scenario_key(s)] for s in spec.scenarios])
    return UtilityEvaluation(
        value=penalize(averaged.value, worst, spec.params),
        table=averaged.table,
        terms=averaged.terms,
        max_toer=worst,
    )


def evaluate_utility(spec: UtilitySpec, phi: TuningParams, evaluator: OCEvaluator) -> UtilityEvaluation:
    """Dispatch on the averaging mode"""
    if spec.averaging is Averaging.PENALIZED:
        return u_penalized(spec, phi, evaluator)
    # A single-scenario spec is a one-term average with weight 1
    return u_averaged(spec, phi, evaluator)


class UtilityObjective:
    """Callable objective phi-vector -> utility, counting utility calls"""

    def __init__(self, spec: UtilitySpec, evaluator: OCEvaluator):
        self.spec = spec
        self.evaluator = evaluator
        self.calls = 0
        self._lock = threading.Lock()

    def __call__(self, x: Sequence[float]) -> float:
        with self._lock:
            self.calls += 1
        phi = TuningParams.from_vector(x)
        return evaluate_utility(self.spec, phi, self.evaluator).value

    @property
    def oc_evaluations(self) -> int:
        return self.evaluator.oc_evaluations


def all_utility_specs(scenario_set: ScenarioSet, params: UtilityParams = UtilityParams()) -> List[UtilitySpec]:
    """Every utility applicable to a scenario set (single kinds need a target scenario)"""
    specs = []
    for averaging in Averaging:
        if averaging is Averaging.SINGLE and scenario_set.single_target is None:
            continue
        for kind in UtilityKind:
            specs.append(UtilitySpec(kind, averaging, scenario_set, params))
    return specs

#!/usr/bin/env python3
"""
Scenario catalog for BasketOptimizer
Seven basket-trial scenario sets with their designs, null scenarios and observed-rate scenarios
"""

import json
from dataclasses import dataclass
from string import ascii_lowercase
from typing import Any, Dict, List, Optional, Sequence, Tuple

from .design import Design
from .distributions import DivergenceKind
from .errors import DomainError
from .oc_exact import Scenario


@dataclass(frozen=True)
class ScenarioSet:
    """Design plus the response-rate scenarios it is optimized and evaluated on"""
    id: str
    design: Design
    scenarios: Tuple[Scenario, ...]
    null_label: str = "a"
    weights: Optional[Tuple[float, ...]] = None
    single_target: Optional[str] = None
    description: str = ""

    def __post_init__(self):
        object.__setattr__(self, "scenarios", tuple(self.scenarios))
        labels = [s.label for s in self.scenarios]
        if len(set(labels)) != len(labels):
            raise DomainError(f"Scenario labels in set {self.id} are not unique")
        for scenario in self.scenarios:
            if len(scenario.rates) != self.design.strata_count:
                raise DomainError(f"Scenario {scenario.label} does not match the design of set {self.id}")
        if self.null_scenario.active_count:
            raise DomainError(f"Null scenario of set {self.id} has active strata")
        count = len(self.optimization_scenarios)
        weights = tuple(float(w) for w in self.weights) if self.weights is not None else (1.0 / count,) * count
        if len(weights) != count:
            raise DomainError(f"Set {self.id}: {len(weights)} weights for {count} scenarios")
        object.__setattr__(self, "weights", weights)

    @property
    def null_scenario(self) -> Scenario:
        return self.scenario(self.null_label)

    @property
    def optimization_scenarios(self) -> Tuple[Scenario, ...]:
        return tuple(s for s in self.scenarios if not s.evaluation_only)

    def scenario(self, label: str) -> Scenario:
        for scenario in self.scenarios:
            if scenario.label == label:
                return scenario
        raise DomainError(f"Scenario set {self.id} has no scenario '{label}'")

    def with_divergence(self, kind: DivergenceKind) -> "ScenarioSet":
        design = Design.from_dict({**self.design.to_dict(), "divergence": DivergenceKind(kind).value})
        return ScenarioSet(self.id, design, self.scenarios, self.null_label,
                           self.weights, self.single_target, self.description)

    def to_dict(self) -> Dict[str, Any]:
        return {
            "id": self.id,
            "description": self.description,
            "design": self.design.to_dict(),
            "scenarios": [s.to_dict() for s in self.scenarios],
            "null_label": self.null_label,
            "weights": list(self.weights),
            "single_target": self.single_target,
        }

    @classmethod
    def from_dict(cls, data: Dict[str, Any]) -> "ScenarioSet":
        return cls(
            id=str(data["id"]),
            design=Design.from_dict(data["design"]),
            scenarios=tuple(Scenario.from_dict(s) for s in data["scenarios"]),
            null_label=data.get("null_label", "a"),
            weights=tuple(data["weights"]) if data.get("weights") is not None else None,
            single_target=data.get("single_target"),
            description=data.get("description", ""),
        )

    def to_json(self) -> str:
        return json.dumps(self.to_dict(), sort_keys=True)

    @classmethod
    def from_json(cls, text: str) -> "ScenarioSet":
        return cls.from_dict(json.loads(text))


def _active_count_scenarios(strata: int, null_rate: float, active_rate: float,
                            counts: Sequence[int]) -> List[Scenario]:
    """Scenarios with the last a strata active, labelled a, b, c, ..."""
    scenarios = []
    for label, active in zip(ascii_lowercase, counts):
        rates = (null_rate,) * (strata - active) + (active_rate,) * active
        scenarios.append(Scenario(rates, null_rate, label, f"{active} of {strata} active"))
    return scenarios


def _observed(rates: Sequence[float], null_rate: float, label: str) -> Scenario:
    return Scenario(tuple(rates), null_rate, label, "observed rates", evaluation_only=True)


def _set1() -> ScenarioSet:
    scenarios = _active_count_scenarios(3, 0.2, 0.5, range(4))
    return ScenarioSet("1", Design.equal(3, 24, 0.2), scenarios, single_target="c",
                       description="Three strata, n = 24, null rate 0.2")


def _set2() -> ScenarioSet:
    scenarios = _active_count_scenarios(4, 0.15, 0.4, range(5))
    scenarios += [
        Scenario((0.4, 0.4, 0.3, 0.5), 0.15, "f", "one in the middle"),
        Scenario((0.15, 0.25, 0.35, 0.45), 0.15, "g", "linear"),
    ]
    return ScenarioSet("2", Design.equal(4, 20, 0.15), scenarios, single_target="c",
                       description="Four strata, n = 20, null rate 0.15")


def _set3() -> ScenarioSet:
    scenarios = _active_count_scenarios(8, 0.15, 0.45, range(9))
    return ScenarioSet("3", Design.equal(8, 15, 0.15), scenarios, single_target="e",
                       description="Eight strata, n = 15, null rate 0.15")


def _set4() -> ScenarioSet:
    scenarios = _active_count_scenarios(9, 0.01, 0.10, range(10))
    scenarios.append(_observed(
        (0.056, 0.000, 0.113, 0.143, 0.043, 0.000, 0.286, 0.065, 0.362), 0.01, "observed"))
    return ScenarioSet("4", Design.equal(9, 23, 0.01), scenarios,
                       description="Nine strata, n = 23, null rate 0.01, target 0.10")


def _set5() -> ScenarioSet:
    scenarios = _active_count_scenarios(20, 0.10, 0.35, range(0, 21, 2))
    scenarios.append(_observed(
        (0.160, 0.174, 0.120, 0.120, 0.167, 0.043, 0.130, 0.304, 0.080, 0.042,
         0.200, 0.259, 0.063, 0.115, 0.000, 0.174, 0.115, 0.333, 0.091, 0.056), 0.10, "observed"))
    return ScenarioSet("5", Design.equal(20, 24, 0.10), scenarios,
                       description="Twenty strata, n = 24, null rate 0.10, target 0.35")


def _set6() -> ScenarioSet:
    scenarios = _active_count_scenarios(4, 0.10, 0.35, range(5))
    scenarios.append(_observed((0.156, 0.167, 0.212, 0.205), 0.10, "observed"))
    return ScenarioSet("6", Design.equal(4, 36, 0.10), scenarios,
                       description="Four strata, n = 36, null rate 0.10, target 0.35")


def _set7() -> ScenarioSet:
    scenarios = _active_count_scenarios(3, 0.15, 0.30, range(4))
    scenarios.append(_observed((0.289, 0.315, 0.333), 0.15, "observed"))
    return ScenarioSet("7", Design.equal(3, 54, 0.15), scenarios,
                       description="Three strata, n = 54, null rate 0.15, target 0.30")


_CATALOG = {
    "1": _set1, "2": _set2, "3": _set3, "4": _set4,
    "5": _set5, "6": _set6, "7": _set7,
}

SCENARIO_SET_IDS = tuple(_CATALOG)


def scenario_library(set_id) -> ScenarioSet:
    """Catalog entry by id ("1" to "7")"""
    key = str(set_id)
    if key not in _CATALOG:
        raise DomainError(f"Unknown scenario set '{set_id}', expected one of {', '.join(SCENARIO_SET_IDS)}")
    return _CATALOG[key]()


def plot_order(scenario_set: ScenarioSet) -> Dict[str, int]:
    """Display order: pure active-count scenarios by count, then mixed rates, then observed rates"""
    def sort_key(item):
        position, scenario = item
        rates = set(scenario.rates)
        pure = len(rates - {scenario.null_rate}) <= 1
        group = 2 if scenario.evaluation_only else (0 if pure else 1)
        return (group, scenario.active_count if group == 0 else position)

    ordered = sorted(enumerate(scenario_set.scenarios), key=sort_key)
    return {scenario.label: rank for rank, (_, scenario) in enumerate(ordered)}

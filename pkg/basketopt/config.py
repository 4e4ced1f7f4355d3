#!/usr/bin/env python3
"""
Configuration management utilities for BasketOptimizer
JSON run configurations, pydantic schema validation and flag overrides
"""

import copy
import json
from pathlib import Path
from typing import Any, Dict, List, Literal, Optional, Tuple, Union

from pydantic import BaseModel, ConfigDict, Field, ValidationError, field_validator, model_validator

from .analyses import DEFAULT_TAU_GRID, DEFAULT_TOER_PHIS, default_p2_grid
from .design import EPSILON_MAX, Design, TuningParams
from .distributions import DivergenceKind
from .errors import ConfigError, DomainError
from .monitor import default_workers
from .oc_exact import DEFAULT_MAX_OUTCOMES, Backend, Scenario, exact_feasible
from .oc_mc import DEFAULT_BASE_SEED, DEFAULT_N_MC, McConfig
from .optimizers import DEFAULT_BUDGET, DEFAULT_GRIDS, DEFAULT_START, T_END, OptimizerConfig
from .scenarios import SCENARIO_SET_IDS, ScenarioSet, scenario_library
from .utility import EvalBackend, UtilityParams, UtilitySpec

COMMANDS = ("oc", "optimize", "benchmark", "study", "boundary", "toer-curve")
FUJIKAWA_PHIS = ((0.99, 2.0, 0.0), (0.99, 2.0, 0.5))
# Parts II and III optimize every utility with one fixed seed
STUDY_SEED = 899


class _Strict(BaseModel):
    model_config = ConfigDict(extra="forbid", populate_by_name=True)


class PhiModel(_Strict):
    """(lambda, epsilon, tau); also accepted as a three-element list"""
    lam: float = Field(alias="lambda", ge=0.0, le=1.0)
    epsilon: float = Field(ge=0.0)
    tau: float = Field(ge=0.0, le=1.0)

    @model_validator(mode="before")
    @classmethod
    def _from_sequence(cls, data: Any) -> Any:
        if isinstance(data, (list, tuple)):
            if len(data) != 3:
                raise ValueError("phi needs exactly three values (lambda, epsilon, tau)")
            return {"lambda": data[0], "epsilon": data[1], "tau": data[2]}
        return data

    def to_params(self) -> TuningParams:
        return TuningParams(self.lam, self.epsilon, self.tau)

    def as_tuple(self) -> Tuple[float, float, float]:
        return (self.lam, self.epsilon, self.tau)


class UtilityParamsModel(_Strict):
    xi1: float = Field(1.0, gt=0.0)
    xi2: float = Field(1.0, gt=0.0)
    xi3: float = Field(1000.0, gt=0.0)
    eta1: float = Field(0.05, ge=0.0, le=1.0)
    eta2: float = Field(0.1, ge=0.0, le=1.0)
    eta3: float = Field(0.2, ge=0.0, le=1.0)

    def to_params(self) -> UtilityParams:
        return UtilityParams(**self.model_dump())


class BackendModel(_Strict):
    """exact, mc, or auto (exact when the outcome space fits under max_outcomes)"""
    kind: Literal["exact", "mc", "auto"] = "exact"
    n_mc: int = Field(DEFAULT_N_MC, ge=1)
    base_seed: int = Field(DEFAULT_BASE_SEED, ge=0)
    common_random_numbers: bool = True
    max_outcomes: int = Field(DEFAULT_MAX_OUTCOMES, ge=1)

    def resolve(self, design: Design, workers: int) -> EvalBackend:
        kind = self.kind
        if kind == "auto":
            kind = "exact" if exact_feasible(design, self.max_outcomes) else "mc"
        mc = McConfig(self.n_mc, self.base_seed, self.common_random_numbers) if kind == "mc" else None
        backend = Backend.EXACT if kind == "exact" else Backend.MONTE_CARLO
        return EvalBackend(backend, mc, workers, self.max_outcomes)


class DesignModel(_Strict):
    sample_sizes: List[int]
    target_rates: List[float]
    prior_a: Optional[List[float]] = None
    prior_b: Optional[List[float]] = None


class ScenarioModel(_Strict):
    label: str
    rates: List[float]
    name: str = ""
    evaluation_only: bool = False


class ScenarioSetModel(_Strict):
    """Inline scenario set definition"""
    id: str = "custom"
    design: DesignModel
    scenarios: List[ScenarioModel]
    null_label: str = "a"
    weights: Optional[List[float]] = None
    single_target: Optional[str] = None
    description: str = ""


class UtilityModel(_Strict):
    kind: Literal["ewp", "ecd", "2ewp", "2pow"] = "ecd"
    averaging: Literal["single", "averaged", "penalized"] = "averaged"
    single_scenario: Optional[str] = None
    weights: Optional[List[float]] = None

    def to_spec(self, scenario_set: ScenarioSet, params: UtilityParams) -> UtilitySpec:
        weights = tuple(self.weights) if self.weights is not None else None
        return UtilitySpec(self.kind, self.averaging, scenario_set, params, weights, self.single_scenario)


class GridModel(_Strict):
    lam: List[float] = Field(default_factory=lambda: list(DEFAULT_GRIDS[0]), alias="lambda", min_length=1)
    epsilon: List[float] = Field(default_factory=lambda: list(DEFAULT_GRIDS[1]), min_length=1)
    tau: List[float] = Field(default_factory=lambda: list(DEFAULT_GRIDS[2]), min_length=1)

    @model_validator(mode="after")
    def _inside_box(self):
        for name, values, upper in (("lambda", self.lam, 1.0), ("epsilon", self.epsilon, EPSILON_MAX),
                                    ("tau", self.tau, 1.0)):
            if any(not 0.0 <= v <= upper for v in values):
                raise ValueError(f"{name} grid must lie within [0, {upper}]")
        return self

    def as_tuple(self) -> Tuple[Tuple[float, ...], ...]:
        return (tuple(self.lam), tuple(self.epsilon), tuple(self.tau))


class AlgorithmModel(_Strict):
    """Algorithm settings without budget and seed"""
    algorithm: str = "sa_bounded"
    t_start: Optional[float] = Field(None, gt=0.0)
    t_end: float = Field(T_END, gt=0.0)
    step_scale: float = Field(0.1, gt=0.0)
    pop: int = Field(40, ge=4)
    f: float = Field(0.8, gt=0.0, le=2.0)
    cr: float = Field(0.5, ge=0.0, le=1.0)
    grids: GridModel = Field(default_factory=GridModel)

    def to_config(self, budget: int, seed: int, workers: int,
                  start: Optional[Tuple[float, ...]] = None) -> OptimizerConfig:
        return OptimizerConfig(
            algorithm=self.algorithm, budget=budget, seed=seed, start=start,
            t_start=self.t_start, t_end=self.t_end, step_scale=self.step_scale,
            pop=self.pop, f=self.f, cr=self.cr, grids=self.grids.as_tuple(), workers=workers,
        )


class OptimizerModel(AlgorithmModel):
    budget: int = Field(DEFAULT_BUDGET, ge=1)
    seed: int = Field(1856, ge=0)
    start: PhiModel = Field(default_factory=lambda: PhiModel.model_validate(list(DEFAULT_START)))

    def build(self, workers: int) -> OptimizerConfig:
        return self.to_config(self.budget, self.seed, workers, self.start.as_tuple())


class BenchmarkEntry(AlgorithmModel):
    label: str


def _default_benchmark_entries() -> List[BenchmarkEntry]:
    return [
        BenchmarkEntry(label="grid", algorithm="grid"),
        BenchmarkEntry(label="sa_bounded_t100", algorithm="sa_bounded", t_start=100.0),
        BenchmarkEntry(label="sa_bounded_t10", algorithm="sa_bounded", t_start=10.0),
        BenchmarkEntry(label="sa_bounded_t1", algorithm="sa_bounded", t_start=1.0),
        BenchmarkEntry(label="sa_unbounded_t10", algorithm="sa_unbounded", t_start=10.0),
        BenchmarkEntry(label="de", algorithm="de"),
        BenchmarkEntry(label="gwo", algorithm="gwo"),
        BenchmarkEntry(label="cobyla", algorithm="cobyla"),
    ]


def _default_benchmark_problems() -> List[UtilityModel]:
    return [UtilityModel(kind="2ewp", averaging="averaged"), UtilityModel(kind="ecd", averaging="averaged")]


class OcCommand(_Strict):
    phi: PhiModel
    scenario: Optional[str] = None


class OptimizeCommand(_Strict):
    utility: UtilityModel = Field(default_factory=UtilityModel)
    optimizer: OptimizerModel = Field(default_factory=OptimizerModel)
    write_trace: bool = True


class BenchmarkCommand(_Strict):
    problems: List[UtilityModel] = Field(default_factory=_default_benchmark_problems, min_length=1)
    algorithms: List[BenchmarkEntry] = Field(default_factory=_default_benchmark_entries, min_length=1)
    reference: str = "grid"
    n_runs: int = Field(50, ge=1)
    first_seed: int = Field(1856, ge=0)
    budget: int = Field(DEFAULT_BUDGET, ge=1)
    extended_budget: Optional[int] = Field(None, ge=1)
    start: PhiModel = Field(default_factory=lambda: PhiModel.model_validate(list(DEFAULT_START)))
    consistency_tolerance: float = Field(0.01, ge=0.0)
    success_threshold: float = Field(0.99, ge=0.0, le=1.0)
    write_traces: bool = True

    @field_validator("algorithms")
    @classmethod
    def _unique_labels(cls, entries: List[BenchmarkEntry]) -> List[BenchmarkEntry]:
        labels = [e.label for e in entries]
        if len(set(labels)) != len(labels):
            raise ValueError("algorithm labels must be unique")
        return entries


class StudyCommand(_Strict):
    sets: List[str] = Field(default_factory=lambda: ["1", "2", "3"], min_length=1)
    utilities: Optional[List[UtilityModel]] = None
    optimizer: OptimizerModel = Field(default_factory=lambda: OptimizerModel(seed=STUDY_SEED))
    winner_from: Optional[str] = None
    fujikawa: List[PhiModel] = Field(default_factory=lambda: [PhiModel.model_validate(list(p)) for p in FUJIKAWA_PHIS])
    extra_phis: List[PhiModel] = Field(default_factory=list)
    backends: Dict[str, BackendModel] = Field(default_factory=dict)
    write_traces: bool = True

    @field_validator("sets", mode="before")
    @classmethod
    def _known_sets(cls, sets: Any) -> List[str]:
        sets = [str(s) for s in sets]
        unknown = [s for s in sets if s not in SCENARIO_SET_IDS]
        if unknown:
            raise ValueError(f"unknown scenario sets {unknown}, expected ids from {list(SCENARIO_SET_IDS)}")
        return sets

    @field_validator("optimizer", mode="before")
    @classmethod
    def _study_seed(cls, value: Any) -> Any:
        if isinstance(value, dict) and "seed" not in value:
            value = {**value, "seed": STUDY_SEED}
        return value


class BoundaryDesignModel(_Strict):
    label: str
    strata: int = Field(ge=2)
    n: int = Field(ge=1)
    target_rate: float = Field(0.2, ge=0.0, le=1.0)


class BoundaryCommand(_Strict):
    tau_grid: List[float] = Field(default_factory=lambda: list(DEFAULT_TAU_GRID), min_length=1)
    designs: Optional[List[BoundaryDesignModel]] = None

    @field_validator("tau_grid")
    @classmethod
    def _open_unit(cls, grid: List[float]) -> List[float]:
        if any(not 0.0 < t < 1.0 for t in grid):
            raise ValueError("tau values must lie inside (0, 1)")
        return grid


class ToerCurveCommand(_Strict):
    phis: List[PhiModel] = Field(
        default_factory=lambda: [PhiModel.model_validate(list(p)) for p in DEFAULT_TOER_PHIS], min_length=1)
    p2_grid: List[float] = Field(default_factory=default_p2_grid, min_length=1)
    n: int = Field(24, ge=1)
    p1: float = Field(0.2, ge=0.0, le=1.0)

    @field_validator("p2_grid")
    @classmethod
    def _rates(cls, grid: List[float]) -> List[float]:
        if any(not 0.0 <= p <= 1.0 for p in grid):
            raise ValueError("p2 values must lie within [0, 1]")
        return grid


class RunConfig(_Strict):
    """One validated run; every default is materialized so the echo re-parses to an equal config"""
    command: Literal["oc", "optimize", "benchmark", "study", "boundary", "toer-curve"]
    scenario_set: Union[str, ScenarioSetModel] = Field("1", alias="set")
    divergence: Literal["jsd", "hellinger"] = "jsd"
    backend: BackendModel = Field(default_factory=BackendModel)
    workers: Optional[int] = Field(None, ge=1)
    out_dir: str = "results"
    utility_params: UtilityParamsModel = Field(default_factory=UtilityParamsModel)
    oc: Optional[OcCommand] = None
    optimize: Optional[OptimizeCommand] = None
    benchmark: Optional[BenchmarkCommand] = None
    study: Optional[StudyCommand] = None
    boundary: Optional[BoundaryCommand] = None
    toer_curve: Optional[ToerCurveCommand] = Field(None, alias="toer-curve")

    @field_validator("scenario_set", mode="before")
    @classmethod
    def _set_id(cls, value: Any) -> Any:
        if isinstance(value, int):
            value = str(value)
        if isinstance(value, str) and value not in SCENARIO_SET_IDS:
            raise ValueError(f"unknown scenario set '{value}', expected one of {list(SCENARIO_SET_IDS)}")
        return value

    @model_validator(mode="after")
    def _materialize(self):
        if self.workers is None:
            self.workers = default_workers()
        if self.command == "oc" and self.oc is None:
            raise ValueError("the oc command needs an 'oc' section with phi")
        defaults = {
            "optimize": OptimizeCommand, "benchmark": BenchmarkCommand, "study": StudyCommand,
            "boundary": BoundaryCommand, "toer-curve": ToerCurveCommand,
        }
        attribute = self.command.replace("-", "_")
        if self.command in defaults and getattr(self, attribute) is None:
            setattr(self, attribute, defaults[self.command]())
        return self

    def build_scenario_set(self, set_id: Optional[str] = None) -> ScenarioSet:
        """Catalog entry or inline definition, with the configured divergence"""
        source = set_id if set_id is not None else self.scenario_set
        if isinstance(source, str):
            scenario_set = scenario_library(source)
        else:
            design = Design(
                tuple(source.design.sample_sizes), tuple(source.design.target_rates),
                tuple(source.design.prior_a) if source.design.prior_a is not None else None,
                tuple(source.design.prior_b) if source.design.prior_b is not None else None,
            )
            null_rate = _common_null(design.target_rates)
            scenarios = tuple(
                Scenario(tuple(s.rates), null_rate, s.label, s.name, s.evaluation_only)
                for s in source.scenarios
            )
            scenario_set = ScenarioSet(
                source.id, design, scenarios, source.null_label,
                tuple(source.weights) if source.weights is not None else None,
                source.single_target, source.description,
            )
        return scenario_set.with_divergence(DivergenceKind(self.divergence))

    def echo(self) -> Dict[str, Any]:
        return self.model_dump(mode="json", by_alias=True)


def _common_null(target_rates: Tuple[float, ...]) -> float:
    if len(set(target_rates)) != 1:
        raise DomainError("Inline scenario sets need one common target rate")
    return target_rates[0]


def _field_path(loc: Tuple[Any, ...]) -> str:
    return ".".join(str(part) for part in loc)


def _set_path(data: Dict[str, Any], path: Tuple[str, ...], value: Any):
    node = data
    for key in path[:-1]:
        child = node.get(key)
        if not isinstance(child, dict):
            child = {}
            node[key] = child
        node = child
    node[path[-1]] = value


def apply_overrides(data: Dict[str, Any], overrides: Dict[str, Any]) -> Dict[str, Any]:
    """Merge command-line flag values into a raw config document"""
    data = copy.deepcopy(data)
    overrides = {k: v for k, v in overrides.items() if v is not None}
    command = overrides.get("command", data.get("command"))
    if "command" in overrides:
        data["command"] = overrides["command"]
    if "set" in overrides:
        data["set"] = str(overrides["set"])
    if "workers" in overrides:
        data["workers"] = overrides["workers"]
    if "out_dir" in overrides:
        data["out_dir"] = overrides["out_dir"]
    if "backend" in overrides:
        _set_path(data, ("backend", "kind"), overrides["backend"])
    if "n_mc" in overrides:
        _set_path(data, ("backend", "n_mc"), overrides["n_mc"])
    if "scenario" in overrides:
        _set_path(data, ("oc", "scenario"), overrides["scenario"])
    if "phi" in overrides:
        if command == "optimize":
            _set_path(data, ("optimize", "optimizer", "start"), list(overrides["phi"]))
        else:
            _set_path(data, ("oc", "phi"), list(overrides["phi"]))
    if "seed" in overrides:
        seed_paths = {
            "optimize": ("optimize", "optimizer", "seed"),
            "benchmark": ("benchmark", "first_seed"),
            "study": ("study", "optimizer", "seed"),
        }
        _set_path(data, seed_paths.get(command, ("backend", "base_seed")), overrides["seed"])
    if "budget" in overrides:
        budget_paths = {
            "optimize": ("optimize", "optimizer", "budget"),
            "benchmark": ("benchmark", "budget"),
            "study": ("study", "optimizer", "budget"),
        }
        if command in budget_paths:
            _set_path(data, budget_paths[command], overrides["budget"])
    return data


def validate_config(data: Dict[str, Any]) -> RunConfig:
    """Schema validation; the first violation becomes a ConfigError with its field path"""
    try:
        config = RunConfig.model_validate(data)
    except ValidationError as e:
        first = e.errors()[0]
        raise ConfigError(first["msg"], _field_path(first["loc"])) from e
    try:
        config.build_scenario_set()
    except DomainError as e:
        raise ConfigError(str(e), "set") from e
    return config


class ConfigManager:
    """Centralized configuration management"""

    def __init__(self, config_dir: str = "configs"):
        self.config_dir = Path(config_dir)
        self.configs: Dict[str, Dict[str, Any]] = {}

        self.project_root = self._find_project_root()
        if self.project_root and not self.config_dir.is_absolute():
            self.config_dir = self.project_root / config_dir

    def _find_project_root(self) -> Optional[Path]:
        """Find the project root directory"""
        current = Path(__file__).parent.parent
        indicators = ["configs", "requirements.txt", "README.md", ".git"]
        for _ in range(5):
            if any((current / indicator).exists() for indicator in indicators):
                return current
            current = current.parent
        return None

    def candidate_paths(self, config_name: str) -> List[Path]:
        return [
            Path(config_name),
            self.config_dir / f"{config_name}.json",
            self.config_dir / config_name,
            Path("configs") / f"{config_name}.json",
            Path("configs") / config_name,
        ]

    def load_config(self, config_name: str) -> Dict[str, Any]:
        """Load a configuration document by name or path"""
        if config_name in self.configs:
            return copy.deepcopy(self.configs[config_name])

        for path in self.candidate_paths(config_name):
            if path.is_file():
                try:
                    with open(path, 'r') as f:
                        config_data = json.load(f)
                except (json.JSONDecodeError, OSError) as e:
                    raise ConfigError(f"could not read {path}: {e}") from e
                if not isinstance(config_data, dict):
                    raise ConfigError(f"{path} does not hold a JSON object")
                self.configs[config_name] = config_data
                return copy.deepcopy(config_data)

        searched = ", ".join(str(p) for p in self.candidate_paths(config_name))
        raise ConfigError(f"config '{config_name}' not found (searched {searched})")

    def get_nested(self, config_name: str, key_path: str, default: Any = None) -> Any:
        """Get a nested value using dot notation (e.g., 'benchmark.n_runs')"""
        value: Any = self.load_config(config_name)
        try:
            for key in key_path.split('.'):
                value = value[key]
            return value
        except (KeyError, TypeError):
            return default

    def save_config(self, config_name: str, config_data: Dict[str, Any]) -> Path:
        """Save configuration to the config directory"""
        self.config_dir.mkdir(parents=True, exist_ok=True)
        if not config_name.endswith('.json'):
            config_name += '.json'
        config_path = self.config_dir / config_name
        with open(config_path, 'w') as f:
            json.dump(config_data, f, indent=2, sort_keys=True)
        self.configs[config_name[:-len('.json')]] = copy.deepcopy(config_data)
        return config_path

    def list_configs(self) -> List[str]:
        """List available configuration files"""
        if not self.config_dir.exists():
            return []
        return sorted(p.stem for p in self.config_dir.glob("*.json"))


_config_manager: Optional[ConfigManager] = None


def get_config_manager() -> ConfigManager:
    """Get the singleton config manager instance"""
    global _config_manager
    if _config_manager is None:
        _config_manager = ConfigManager()
    return _config_manager


def parse_config(path: Optional[str] = None, overrides: Optional[Dict[str, Any]] = None) -> RunConfig:
    """Load (optionally), apply flag overrides and validate"""
    data = get_config_manager().load_config(path) if path else {}
    return validate_config(apply_overrides(data, overrides or {}))

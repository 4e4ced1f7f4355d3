#!/usr/bin/env python3
"""
Experiment runner utilities for BasketOptimizer
Optimizer benchmark with a selection rule, and utility / tuning-parameter comparison studies
"""

import hashlib
import json
import logging
import threading
from concurrent.futures import ThreadPoolExecutor
from dataclasses import asdict, dataclass, replace
from datetime import datetime
from pathlib import Path
from typing import Any, Dict, List, Optional, Sequence, Tuple

import numpy as np

from .config import AlgorithmModel, BenchmarkEntry, OptimizerModel, RunConfig, UtilityModel
from .design import TuningParams
from .errors import BasketOptError, ConfigError, DomainError
from .logging_config import write_envelope
from .monitor import ResourceMonitor, system_snapshot
from .oc_exact import OCResult, Scenario
from .oc_mc import mcse
from .optimizers import DEFAULT_START, STOCHASTIC, OptimizerConfig, is_available, run_optimizer, write_trace_csv
from .scenarios import ScenarioSet, plot_order
from .statistics import summarize
from .tables import write_table
from .utility import (
    EvalBackend,
    OCEvaluator,
    UtilityObjective,
    UtilityParams,
    UtilitySpec,
    all_utility_specs,
    evaluate_utility,
    scenario_utilities,
)

DIGEST_EXCLUDED_KEYS = frozenset({
    "wall_time", "user_time", "system_time", "rss_mb", "timestamp", "metadata", "fastest", "winner", "digest",
})

RUN_COLUMNS = [
    "problem", "label", "algorithm", "run", "seed", "budget", "status", "lambda", "epsilon", "tau",
    "u_star", "n_evals", "utility_calls", "oc_evaluations", "wall_time", "user_time", "system_time",
    "rss_mb", "error", "trace",
]
SUMMARY_COLUMNS = [
    "problem", "label", "algorithm", "status", "completed",
    "u_mean", "u_sd", "u_sd_se", "u_ci_low", "u_ci_high", "u_min", "u_max",
    "lambda_mean", "lambda_sd", "lambda_sd_se", "epsilon_mean", "epsilon_sd", "epsilon_sd_se",
    "tau_mean", "tau_sd", "tau_sd_se", "internal_reliability",
    "success_rate", "success_mcse", "diff_mean", "diff_ci_low", "diff_ci_high", "diff_min", "diff_max",
    "n_evals_mean", "oc_evaluations_mean", "wall_time_mean", "user_time_mean", "system_time_mean",
]
MEASURE_COLUMNS = [
    "set", "source", "optimized_for", "lambda", "epsilon", "tau", "scenario", "scenario_name",
    "plot_order", "active_count", "evaluation_only", "fwer", "ewp", "ecd", "fwer_mcse", "ewp_mcse",
    "ecd_mcse", "u_ewp", "u_ecd", "u_2ewp", "u_2pow",
]
REJECTION_COLUMNS = [
    "set", "source", "optimized_for", "lambda", "epsilon", "tau", "scenario", "stratum", "active",
    "reject_prob", "mcse",
]
UTILITY_COLUMNS = ["set", "source", "optimized_for", "lambda", "epsilon", "tau", "utility", "value", "max_toer"]
OPTIMA_COLUMNS = [
    "set", "utility", "algorithm", "seed", "lambda", "epsilon", "tau", "u_star", "n_evals",
    "utility_calls", "oc_evaluations", "wall_time", "trace",
]


@dataclass
class RunRecord:
    """Outcome of one optimizer run on one test problem"""
    problem: str
    label: str
    algorithm: str
    run: int
    seed: Optional[int]
    budget: int
    status: str = "ok"
    phi_star: Optional[Tuple[float, float, float]] = None
    u_star: Optional[float] = None
    n_evals: int = 0
    utility_calls: int = 0
    oc_evaluations: int = 0
    wall_time: float = 0.0
    user_time: Optional[float] = None
    system_time: Optional[float] = None
    rss_mb: Optional[float] = None
    error: str = ""
    trace: str = ""

    def to_dict(self) -> Dict[str, Any]:
        data = asdict(self)
        data["phi_star"] = list(self.phi_star) if self.phi_star is not None else None
        return data

    def to_row(self) -> Dict[str, Any]:
        lam, epsilon, tau = self.phi_star if self.phi_star is not None else (None, None, None)
        row = {k: v for k, v in self.to_dict().items() if k != "phi_star"}
        row.update({"lambda": lam, "epsilon": epsilon, "tau": tau})
        return row


class StudyRunner:
    """Base class for study runs that write CSV tables and a JSON envelope"""

    def __init__(self, name: str, out_dir: str = "results", workers: int = 1):
        self.name = name
        self.out_dir = Path(out_dir)
        self.workers = max(1, int(workers))
        self.monitor = ResourceMonitor()
        self.logger = logging.getLogger(f"basketopt.{name}")

    def trace_path(self, *parts: str) -> Path:
        return self.out_dir / "traces" / Path(*parts)

    def save_results(self, results: Dict[str, Any], include_summary: bool = True,
                     config_echo: Optional[Dict[str, Any]] = None) -> str:
        """Save results as a JSON envelope in the output directory"""
        payload = {
            "experiment_info": {"name": self.name, "timestamp": datetime.now().strftime("%Y%m%d_%H%M%S")},
            "results": results,
        }
        if include_summary:
            payload["summary"] = self.generate_summary(results)
        path = write_envelope(
            self.out_dir / f"{self.name}.json", payload, kind=self.name,
            extra={"config": config_echo, "system": system_snapshot()},
        )
        self.logger.info(f"Results saved to: {path}")
        print(f"📊 Results saved to: {path}")
        return path

    def generate_summary(self, results: Dict[str, Any]) -> Dict[str, Any]:
        return {}

    def print_summary(self, summary: Dict[str, Any]):
        print(f"\n📈 {self.name} summary")
        print("=" * 50)
        for key, value in summary.items():
            print(f"  {key}: {value}")


def _internal_reliability(values: Sequence[float], tolerance: float) -> float:
    best = max(values)
    return float(np.mean([best - v <= tolerance for v in values]))


def summarize_benchmark(records: Sequence[RunRecord], problems: Sequence[str], labels: Sequence[str],
                        reference: str, tolerance: float) -> Dict[str, Dict[str, Dict[str, Any]]]:
    """Efficiency, internal consistency and external reliability per problem and algorithm"""
    summaries: Dict[str, Dict[str, Dict[str, Any]]] = {}
    for problem in problems:
        reference_runs = [r for r in records if r.problem == problem and r.label == reference and r.status == "ok"]
        u_reference = reference_runs[0].u_star if reference_runs else None
        summaries[problem] = {}
        for label in labels:
            runs = [r for r in records if r.problem == problem and r.label == label]
            ok = [r for r in runs if r.status == "ok"]
            if ok:
                status = "ok"
            elif runs and all(r.status == "unavailable" for r in runs):
                status = "unavailable"
            else:
                status = "failed"
            entry: Dict[str, Any] = {
                "algorithm": runs[0].algorithm if runs else "",
                "status": status,
                "runs": len(runs),
                "completed": len(ok),
            }
            if ok:
                u_values = [r.u_star for r in ok]
                entry["efficiency"] = {
                    "n_evals": summarize([r.n_evals for r in ok]),
                    "utility_calls": summarize([r.utility_calls for r in ok]),
                    "oc_evaluations": summarize([r.oc_evaluations for r in ok]),
                    "wall_time": summarize([r.wall_time for r in ok]),
                    "user_time": summarize([r.user_time for r in ok]),
                    "system_time": summarize([r.system_time for r in ok]),
                    "rss_mb": summarize([r.rss_mb for r in ok]),
                }
                entry["consistency"] = {
                    "u_star": summarize(u_values),
                    "lambda": summarize([r.phi_star[0] for r in ok]),
                    "epsilon": summarize([r.phi_star[1] for r in ok]),
                    "tau": summarize([r.phi_star[2] for r in ok]),
                }
                entry["internal_reliability"] = _internal_reliability(u_values, tolerance)
                if u_reference is not None:
                    success_rate = float(np.mean([u >= u_reference for u in u_values]))
                    entry["external"] = {
                        "u_reference": u_reference,
                        "success_rate": success_rate,
                        "success_mcse": mcse(success_rate, len(ok)),
                        "difference": summarize([u - u_reference for u in u_values]),
                    }
            summaries[problem][label] = entry
    return summaries


def mean_measures(summaries: Dict[str, Dict[str, Dict[str, Any]]], label: str) -> Dict[str, float]:
    """Mean over test problems of the selection measures of one algorithm"""
    entries = [summaries[p][label] for p in summaries]
    return {
        "internal_reliability": float(np.mean([e.get("internal_reliability", 0.0) for e in entries])),
        "success_rate": float(np.mean([e.get("external", {}).get("success_rate", 0.0) for e in entries])),
        "wall_time": float(np.mean([e["efficiency"]["wall_time"]["mean"] for e in entries])),
    }


def select_algorithm(summaries: Dict[str, Dict[str, Dict[str, Any]]], threshold: float,
                     reference: str) -> Dict[str, Any]:
    """Mean internal reliability above threshold, then mean success rate above threshold, then fastest"""
    problems = list(summaries)
    labels = list(summaries[problems[0]]) if problems else []
    # the reference competes like any other method
    candidates = [l for l in labels if all(summaries[p][l]["status"] == "ok" for p in problems)]
    means = {label: mean_measures(summaries, label) for label in candidates}
    relaxed = []

    reliable = [l for l in candidates if means[l]["internal_reliability"] > threshold]
    if not reliable:
        relaxed.append("internal_reliability")
        reliable = candidates
    successful = [l for l in reliable if means[l]["success_rate"] > threshold]
    if not successful:
        relaxed.append("success_rate")
        successful = reliable

    fastest = min(successful, key=lambda l: means[l]["wall_time"]) if successful else None
    return {
        "threshold": threshold,
        "reference": reference,
        "candidates": candidates,
        "means": means,
        "internal_reliability": reliable,
        "success_rate": successful,
        "relaxed": relaxed,
        "fastest": fastest,
        "winner": fastest,
    }


def _strip_timing(value: Any) -> Any:
    if isinstance(value, dict):
        return {k: _strip_timing(v) for k, v in value.items() if k not in DIGEST_EXCLUDED_KEYS}
    if isinstance(value, list):
        return [_strip_timing(v) for v in value]
    return value


def report_digest(report: Dict[str, Any]) -> str:
    """SHA-256 of the canonical report JSON without timing-dependent fields"""
    canonical = json.dumps(_strip_timing(report), sort_keys=True, separators=(",", ":"), default=str)
    return hashlib.sha256(canonical.encode("utf-8")).hexdigest()


def _flatten_summary(problem: str, label: str, entry: Dict[str, Any]) -> Dict[str, Any]:
    row: Dict[str, Any] = {
        "problem": problem, "label": label, "algorithm": entry["algorithm"],
        "status": entry["status"], "completed": entry["completed"],
    }
    consistency = entry.get("consistency", {})
    for name, prefix in (("u_star", "u"), ("lambda", "lambda"), ("epsilon", "epsilon"), ("tau", "tau")):
        stats = consistency.get(name, {})
        row[f"{prefix}_mean"] = stats.get("mean")
        row[f"{prefix}_sd"] = stats.get("sd")
        row[f"{prefix}_sd_se"] = stats.get("mcse_sd")
    u_stats = consistency.get("u_star", {})
    row.update(u_ci_low=u_stats.get("ci_low"), u_ci_high=u_stats.get("ci_high"),
               u_min=u_stats.get("min"), u_max=u_stats.get("max"))
    row["internal_reliability"] = entry.get("internal_reliability")
    external = entry.get("external", {})
    difference = external.get("difference", {})
    row.update(success_rate=external.get("success_rate"), success_mcse=external.get("success_mcse"),
               diff_mean=difference.get("mean"), diff_ci_low=difference.get("ci_low"),
               diff_ci_high=difference.get("ci_high"), diff_min=difference.get("min"),
               diff_max=difference.get("max"))
    efficiency = entry.get("efficiency", {})
    for name in ("n_evals", "oc_evaluations", "wall_time", "user_time", "system_time"):
        row[f"{name}_mean"] = efficiency.get(name, {}).get("mean")
    return row


class BenchmarkRunner(StudyRunner):
    """Runs every algorithm on every test problem; stochastic algorithms n_runs times"""

    def __init__(self, scenario_set: ScenarioSet, problems: Sequence[UtilitySpec],
                 algorithms: Sequence[BenchmarkEntry], backend: EvalBackend,
                 n_runs: int = 50, first_seed: int = 1856, budget: int = 1000,
                 start: Tuple[float, ...] = DEFAULT_START, reference: str = "grid",
                 consistency_tolerance: float = 0.01, success_threshold: float = 0.99,
                 extended_budget: Optional[int] = None, out_dir: str = "results",
                 workers: int = 1, write_traces: bool = True):
        super().__init__("benchmark", out_dir, workers)
        self.scenario_set = scenario_set
        self.problems = list(problems)
        self.algorithms = list(algorithms)
        # Parallel runs each get a single-threaded engine
        self.backend = replace(backend, workers=1) if self.workers > 1 else backend
        self.n_runs = n_runs
        self.first_seed = first_seed
        self.budget = budget
        self.start = tuple(start)
        self.reference = reference
        self.consistency_tolerance = consistency_tolerance
        self.success_threshold = success_threshold
        self.extended_budget = extended_budget
        self.write_traces = write_traces
        self._trace_lock = threading.Lock()

    def jobs(self, budget: Optional[int] = None, runs: Optional[int] = None) -> List[Tuple[int, BenchmarkEntry, int, Optional[int], int]]:
        """(problem index, algorithm, run number, seed, budget); deterministic algorithms run once"""
        budget = budget or self.budget
        runs = runs or self.n_runs
        jobs = []
        for p in range(len(self.problems)):
            for entry in self.algorithms:
                if entry.algorithm in STOCHASTIC:
                    jobs.extend((p, entry, k + 1, self.first_seed + k, budget) for k in range(runs))
                else:
                    jobs.append((p, entry, 1, None, budget))
        return jobs

    def run_job(self, job: Tuple[int, BenchmarkEntry, int, Optional[int], int]) -> RunRecord:
        problem_index, entry, run, seed, budget = job
        spec = self.problems[problem_index]
        record = RunRecord(spec.name, entry.label, entry.algorithm, run, seed, budget)
        if not is_available(entry.algorithm):
            record.status = "unavailable"
            record.error = f"no implementation for '{entry.algorithm}'"
            return record

        objective = UtilityObjective(spec, OCEvaluator(self.scenario_set, self.backend))
        try:
            config = entry.to_config(budget, seed if seed is not None else self.first_seed, 1, self.start)
            with self.monitor.measure() as usage:
                result = run_optimizer(config, objective)
        except (BasketOptError, ArithmeticError, ValueError) as e:
            record.status = "failed"
            record.error = f"{type(e).__name__}: {e}"
            self.logger.warning(f"{spec.name} / {entry.label} run {run} failed: {record.error}")
            return record

        record.phi_star = tuple(result.phi_star)
        record.u_star = result.u_star
        record.n_evals = result.n_evals
        record.utility_calls = objective.calls
        record.oc_evaluations = objective.oc_evaluations
        record.wall_time = usage.wall_time
        record.user_time = usage.user_time
        record.system_time = usage.system_time
        record.rss_mb = usage.rss_mb
        if self.write_traces:
            suffix = "" if budget == self.budget else f"_b{budget}"
            path = self.trace_path(spec.name, f"{entry.label}_run{run:02d}{suffix}.csv")
            with self._trace_lock:
                write_trace_csv(result, path)
            record.trace = str(path.relative_to(self.out_dir))
        self.logger.info(f"{spec.name} / {entry.label} run {run}: u*={result.u_star:.6f} "
                         f"phi*={tuple(round(v, 4) for v in result.phi_star)} in {usage.wall_time:.2f}s")
        return record

    def _execute(self, jobs) -> List[RunRecord]:
        if self.workers > 1:
            with ThreadPoolExecutor(max_workers=self.workers) as executor:
                return list(executor.map(self.run_job, jobs))
        return [self.run_job(job) for job in jobs]

    def run(self) -> Dict[str, Any]:
        """Execute all runs and assemble the report"""
        jobs = self.jobs()
        self.logger.info(f"Benchmark on set {self.scenario_set.id}: {len(jobs)} runs, "
                         f"{len(self.problems)} problems, {len(self.algorithms)} algorithms")
        print(f"\n🔥 Benchmark: {len(jobs)} optimizer runs on set {self.scenario_set.id}")
        records = self._execute(jobs)

        extended = []
        if self.extended_budget:
            extended_jobs = [j for j in self.jobs(self.extended_budget, 1) if j[1].algorithm in STOCHASTIC]
            self.logger.info(f"Extended-budget runs: {len(extended_jobs)} at {self.extended_budget} evaluations")
            extended = self._execute(extended_jobs)

        problems = [spec.name for spec in self.problems]
        labels = [entry.label for entry in self.algorithms]
        summaries = summarize_benchmark(records, problems, labels, self.reference, self.consistency_tolerance)
        selection = select_algorithm(summaries, self.success_threshold, self.reference)
        return {
            "scenario_set": self.scenario_set.id,
            "problems": problems,
            "reference": self.reference,
            "n_runs": self.n_runs,
            "first_seed": self.first_seed,
            "budget": self.budget,
            "start": list(self.start),
            "backend": self.backend.to_dict(),
            "algorithms": {e.label: e.model_dump(mode="json", by_alias=True) for e in self.algorithms},
            "runs": [r.to_dict() for r in records],
            "extended_runs": [r.to_dict() for r in extended],
            "summaries": summaries,
            "selection": selection,
            "legend": {
                "success": f"u* >= u* of the {self.reference} run on the same problem",
                "internal_reliability": f"share of runs with u* within {self.consistency_tolerance} "
                                        f"of the best u* of that algorithm",
                "threshold": f"a stage passes when the mean proportion over the test problems "
                             f"exceeds {self.success_threshold}",
                "n_evals": "optimizer trace length, out-of-box proposals included",
                "utility_calls": "utility function evaluations",
                "oc_evaluations": "scenario operating-characteristic computations",
                "ci": "normal 95% interval of the mean",
            },
        }

    def write_tables(self, report: Dict[str, Any]) -> List[str]:
        runs = [RunRecord(**{**r, "phi_star": tuple(r["phi_star"]) if r["phi_star"] else None})
                for r in report["runs"] + report["extended_runs"]]
        summary_rows = [_flatten_summary(problem, label, entry)
                        for problem, entries in report["summaries"].items()
                        for label, entry in entries.items()]
        return [
            write_table([r.to_row() for r in runs], RUN_COLUMNS, self.out_dir / "benchmark_runs.csv"),
            write_table(summary_rows, SUMMARY_COLUMNS, self.out_dir / "benchmark_summary.csv"),
        ]

    def generate_summary(self, results: Dict[str, Any]) -> Dict[str, Any]:
        summary = {"winner": results["selection"]["winner"], "digest": report_digest(results)}
        for problem, entries in results["summaries"].items():
            for label, entry in entries.items():
                if entry["status"] == "ok":
                    summary[f"{problem}/{label}"] = {
                        "u_mean": entry["consistency"]["u_star"]["mean"],
                        "success_rate": entry.get("external", {}).get("success_rate"),
                    }
        return summary

    def print_summary(self, summary: Dict[str, Any]):
        print("\n📈 Benchmark Summary")
        print("=" * 50)
        for key, stats in summary.items():
            if isinstance(stats, dict):
                rate = stats["success_rate"]
                rate_text = f"{rate:.1%}" if rate is not None else "n/a"
                print(f"  {key}: mean u* {stats['u_mean']:.5f}, success {rate_text}")
        print(f"🏆 Selected algorithm: {summary['winner']}")


class _MemoEvaluator(OCEvaluator):
    """OCEvaluator that computes each (phi, scenario) pair once"""

    def __init__(self, scenario_set: ScenarioSet, backend: EvalBackend):
        super().__init__(scenario_set, backend)
        self._memo: Dict[Tuple[Tuple[float, float, float], Scenario], OCResult] = {}
        self._memo_lock = threading.Lock()

    def evaluate(self, phi: TuningParams, scenario: Scenario) -> OCResult:
        key = (phi.as_tuple(), scenario)
        with self._memo_lock:
            if key in self._memo:
                return self._memo[key]
        result = super().evaluate(phi, scenario)
        with self._memo_lock:
            self._memo.setdefault(key, result)
        return result


def _phi_columns(phi: TuningParams) -> Dict[str, float]:
    return {"lambda": phi.lam, "epsilon": phi.epsilon, "tau": phi.tau}


class ComparisonRunner(StudyRunner):
    """Optimizes every utility per scenario set and reports all measures for optimized and fixed phi"""

    def __init__(self, scenario_sets: Sequence[ScenarioSet], backends: Dict[str, EvalBackend],
                 optimizer: OptimizerConfig, params: UtilityParams = UtilityParams(),
                 utilities: Optional[Sequence[UtilityModel]] = None,
                 fixed_phis: Sequence[Tuple[str, Sequence[float]]] = (),
                 out_dir: str = "results", write_traces: bool = True):
        super().__init__("comparison", out_dir, optimizer.workers)
        self.scenario_sets = list(scenario_sets)
        self.backends = backends
        self.optimizer = optimizer
        self.params = params
        self.utilities = list(utilities) if utilities is not None else None
        self.fixed_phis = [(source, TuningParams.from_vector(phi)) for source, phi in fixed_phis]
        self.write_traces = write_traces

    def specs_for(self, scenario_set: ScenarioSet) -> List[UtilitySpec]:
        if self.utilities is None:
            return all_utility_specs(scenario_set, self.params)
        specs = []
        for model in self.utilities:
            try:
                specs.append(model.to_spec(scenario_set, self.params))
            except DomainError as e:
                self.logger.warning(f"Set {scenario_set.id}: skipping {model.kind}/{model.averaging}: {e}")
        return specs

    def optimize(self, scenario_set: ScenarioSet, spec: UtilitySpec) -> Dict[str, Any]:
        objective = UtilityObjective(spec, OCEvaluator(scenario_set, self.backends[scenario_set.id]))
        with self.monitor.measure() as usage:
            result = run_optimizer(self.optimizer, objective)
        trace = ""
        if self.write_traces:
            path = self.trace_path(f"set{scenario_set.id}", f"{spec.name}_{self.optimizer.algorithm}.csv")
            write_trace_csv(result, path)
            trace = str(path.relative_to(self.out_dir))
        self.logger.info(f"Set {scenario_set.id} {spec.name}: u*={result.u_star:.6f} phi*={result.phi_star}")
        return {
            "set": scenario_set.id, "utility": spec.name, "algorithm": self.optimizer.algorithm,
            "seed": result.seed, **_phi_columns(result.phi), "u_star": result.u_star,
            "n_evals": result.n_evals, "utility_calls": objective.calls,
            "oc_evaluations": objective.oc_evaluations, "wall_time": usage.wall_time, "trace": trace,
        }

    def measure(self, scenario_set: ScenarioSet, evaluator: OCEvaluator, source: str, optimized_for: str,
                phi: TuningParams) -> Tuple[List[Dict], List[Dict], List[Dict]]:
        """Measures for every scenario (evaluation-only included) and every utility at phi"""
        order = plot_order(scenario_set)
        null_oc = evaluator.evaluate(phi, scenario_set.null_scenario)
        base = {"set": scenario_set.id, "source": source, "optimized_for": optimized_for, **_phi_columns(phi)}
        measures, rejections, utilities = [], [], []
        for scenario in scenario_set.scenarios:
            oc = evaluator.evaluate(phi, scenario)
            row = {
                **base, "scenario": scenario.label, "scenario_name": scenario.name,
                "plot_order": order[scenario.label], "active_count": scenario.active_count,
                "evaluation_only": int(scenario.evaluation_only),
                "fwer": oc.fwer, "ewp": oc.ewp, "ecd": oc.ecd,
                "fwer_mcse": oc.mcse.fwer if oc.mcse else None,
                "ewp_mcse": oc.mcse.ewp if oc.mcse else None,
                "ecd_mcse": oc.mcse.ecd if oc.mcse else None,
            }
            row.update(scenario_utilities(oc, null_oc, self.params))
            measures.append(row)
            for i, (rate, active) in enumerate(zip(oc.reject_prob, scenario.active)):
                rejections.append({
                    **base, "scenario": scenario.label, "stratum": i + 1, "active": int(active),
                    "reject_prob": float(rate),
                    "mcse": float(oc.mcse.reject_prob[i]) if oc.mcse else None,
                })
        for spec in all_utility_specs(scenario_set, self.params):
            evaluation = evaluate_utility(spec, phi, evaluator)
            utilities.append({**base, "utility": spec.name, "value": evaluation.value,
                              "max_toer": evaluation.max_toer})
        return measures, rejections, utilities

    def run(self) -> Dict[str, Any]:
        optima, measures, rejections, utilities = [], [], [], []
        for scenario_set in self.scenario_sets:
            backend = self.backends[scenario_set.id]
            evaluator = _MemoEvaluator(scenario_set, backend)
            specs = self.specs_for(scenario_set)
            print(f"\n🔥 Set {scenario_set.id}: optimizing {len(specs)} utilities ({backend.kind.value} backend)")
            sources: List[Tuple[str, str, TuningParams]] = []
            for spec in specs:
                optimum = self.optimize(scenario_set, spec)
                optima.append(optimum)
                phi = TuningParams(optimum["lambda"], optimum["epsilon"], optimum["tau"])
                sources.append(("optimized", spec.name, phi))
            sources.extend((source, "", phi) for source, phi in self.fixed_phis)
            for source, optimized_for, phi in sources:
                m, r, u = self.measure(scenario_set, evaluator, source, optimized_for, phi)
                measures.extend(m)
                rejections.extend(r)
                utilities.extend(u)
            self.logger.info(f"Set {scenario_set.id}: {len(sources)} parameter vectors reported, "
                             f"{evaluator.oc_evaluations} OC evaluations")
        return {
            "scenario_sets": [s.id for s in self.scenario_sets],
            "optimizer": self.optimizer.to_dict(),
            "backends": {k: v.to_dict() for k, v in self.backends.items()},
            "params": self.params.to_dict(),
            "optima": optima,
            "measures": measures,
            "rejections": rejections,
            "utilities": utilities,
        }

    def write_tables(self, results: Dict[str, Any]) -> List[str]:
        return [
            write_table(results["optima"], OPTIMA_COLUMNS, self.out_dir / "study_optima.csv"),
            write_table(results["measures"], MEASURE_COLUMNS, self.out_dir / "study_measures.csv"),
            write_table(results["rejections"], REJECTION_COLUMNS, self.out_dir / "study_rejections.csv"),
            write_table(results["utilities"], UTILITY_COLUMNS, self.out_dir / "study_utilities.csv"),
        ]

    def generate_summary(self, results: Dict[str, Any]) -> Dict[str, Any]:
        return {f"set{o['set']}/{o['utility']}": {"phi": [o["lambda"], o["epsilon"], o["tau"]],
                                                  "u_star": o["u_star"]}
                for o in results["optima"]}

    def print_summary(self, summary: Dict[str, Any]):
        print("\n📈 Comparison Summary")
        print("=" * 50)
        for key, stats in summary.items():
            phi = ", ".join(f"{v:.4g}" for v in stats["phi"])
            print(f"  {key}: phi* = ({phi}), u* = {stats['u_star']:.5f}")


def run_part1(config: RunConfig) -> Dict[str, Any]:
    """Benchmark all configured algorithms; writes tables, traces and the report envelope"""
    bench = config.benchmark
    scenario_set = config.build_scenario_set()
    params = config.utility_params.to_params()
    runner = BenchmarkRunner(
        scenario_set=scenario_set,
        problems=[m.to_spec(scenario_set, params) for m in bench.problems],
        algorithms=bench.algorithms,
        backend=config.backend.resolve(scenario_set.design, config.workers),
        n_runs=bench.n_runs,
        first_seed=bench.first_seed,
        budget=bench.budget,
        start=bench.start.as_tuple(),
        reference=bench.reference,
        consistency_tolerance=bench.consistency_tolerance,
        success_threshold=bench.success_threshold,
        extended_budget=bench.extended_budget,
        out_dir=config.out_dir,
        workers=config.workers,
        write_traces=bench.write_traces,
    )
    report = runner.run()
    report["digest"] = report_digest(report)
    runner.write_tables(report)
    runner.save_results(report, config_echo=config.echo())
    runner.print_summary(runner.generate_summary(report))
    return report


def winner_model(report_path: str, template: OptimizerModel) -> OptimizerModel:
    """Optimizer settings of the algorithm a benchmark report selected"""
    try:
        with open(report_path, 'r') as f:
            document = json.load(f)
    except (OSError, json.JSONDecodeError) as e:
        raise ConfigError(f"could not read benchmark report: {e}", "study.winner_from") from e
    report = document.get("results", document)
    winner = report.get("selection", {}).get("winner")
    if winner is None or winner not in report.get("algorithms", {}):
        raise ConfigError("benchmark report names no winner", "study.winner_from")
    settings = {k: v for k, v in report["algorithms"][winner].items() if k != "label"}
    algorithm = AlgorithmModel.model_validate(settings)
    return OptimizerModel.model_validate({
        **algorithm.model_dump(by_alias=True),
        "budget": template.budget, "seed": template.seed, "start": template.start.model_dump(by_alias=True),
    })


def run_part2_3(config: RunConfig) -> Dict[str, Any]:
    """Optimize every utility per set, then report measures for phi* and the fixed phi vectors"""
    study = config.study
    optimizer_model = winner_model(study.winner_from, study.optimizer) if study.winner_from else study.optimizer
    scenario_sets = [config.build_scenario_set(set_id) for set_id in study.sets]
    backends = {
        s.id: study.backends.get(s.id, config.backend).resolve(s.design, config.workers)
        for s in scenario_sets
    }
    fixed = [(f"fujikawa_tau{phi.tau:g}", phi.as_tuple()) for phi in study.fujikawa]
    fixed += [("fixed", phi.as_tuple()) for phi in study.extra_phis]
    runner = ComparisonRunner(
        scenario_sets=scenario_sets,
        backends=backends,
        optimizer=optimizer_model.build(config.workers),
        params=config.utility_params.to_params(),
        utilities=study.utilities,
        fixed_phis=fixed,
        out_dir=config.out_dir,
        write_traces=study.write_traces,
    )
    results = runner.run()
    runner.write_tables(results)
    runner.save_results(results, config_echo=config.echo())
    runner.print_summary(runner.generate_summary(results))
    return results

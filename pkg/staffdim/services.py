"""Staffing pipeline: requirements, master problem, run directory and run history."""

from __future__ import annotations

import json
import logging
import time
from dataclasses import asdict, dataclass
from pathlib import Path
from typing import Any, Sequence

from django.conf import settings
from django.db import DatabaseError, transaction

from .domain import Instance, Scenario, dump_scenarios, load_instance, load_scenarios, save_instance
from .exceptions import InstanceFormatError, MissingAssignmentsError
from .master import (
    RequirementMatrix,
    StaffSolution,
    calibrate_alpha,
    compute_requirements,
    master_lower_bound,
    solve_master,
)
from .models import SolveRun
from .report import (
    COVERAGE_HEADER,
    PERFORMANCE_HEADER,
    POOLING,
    VARIANCE_HEADER,
    WORKLOAD_HEADER,
    comparison_report,
    performance_report,
    workload_report,
)
from .slave import DEFAULT_TIME_LIMIT

logger = logging.getLogger(__name__)

SOLUTION_FILE = "solution.json"
REQUIREMENTS_FILE = "requirements.json"
RUN_FILE = "run.json"
INSTANCE_FILE = "instance.json"
SCENARIOS_FILE = "scenarios.json"


def normalize_time_limit(value: float | None) -> float | None:
    """Zero or negative limits mean no limit."""
    if value is None or value <= 0:
        return None
    return float(value)


@dataclass(frozen=True)
class SolveOutcome:
    instance: Instance
    scenarios: tuple[Scenario, ...]
    alpha_star: float | None
    alpha: float
    matrix: RequirementMatrix
    solution: StaffSolution
    master_lower_bound: int
    wall_seconds: float
    time_limit: float | None
    threads: int

    @property
    def master_gap(self) -> float:
        cost = self.solution.cost
        return (cost - self.master_lower_bound) / cost if cost else 0.0

    def solution_payload(self, dump_matrix: bool = False) -> dict[str, Any]:
        payload = {
            **self.solution.as_dict(),
            "alpha_star": self.alpha_star,
            "master_lower_bound": self.master_lower_bound,
            "master_gap": self.master_gap,
            "wall_seconds": round(self.wall_seconds, 3),
        }
        if dump_matrix:
            payload["matrix"] = self.matrix.as_dict()
        return payload


def run_staffing(
    instance: Instance,
    scenarios: Sequence[Scenario],
    alpha_star: float | None = None,
    alpha: float | None = None,
    time_limit: float | None = DEFAULT_TIME_LIMIT,
    threads: int = 1,
    keep_assignments: bool = False,
    progress: bool = False,
) -> SolveOutcome:
    """Calibrate the coverage ratio, fill the requirement matrix and solve the master problem."""
    started = time.perf_counter()
    scenarios = tuple(scenario.check_shape(instance) for scenario in scenarios)
    if alpha is None:
        alpha_star = settings.STAFFDIM_ALPHA_STAR if alpha_star is None else alpha_star
        alpha = calibrate_alpha(alpha_star, len(scenarios))
        logger.info("calibrated alpha=%.4f for alpha_star=%.4f over %d scenarios", alpha, alpha_star, len(scenarios))
    time_limit = normalize_time_limit(time_limit)

    matrix = compute_requirements(
        instance,
        scenarios,
        alpha,
        time_limit,
        threads=threads,
        keep_assignments=keep_assignments,
        progress=progress,
    )
    costs = instance.costs
    solution = solve_master(matrix, costs, alpha)
    bound = master_lower_bound(matrix, costs, alpha)
    return SolveOutcome(
        instance=instance,
        scenarios=scenarios,
        alpha_star=alpha_star,
        alpha=alpha,
        matrix=matrix,
        solution=solution,
        master_lower_bound=bound,
        wall_seconds=time.perf_counter() - started,
        time_limit=time_limit,
        threads=threads,
    )


def _write_json(path: Path, payload: Any) -> None:
    path.write_text(json.dumps(payload, indent=2) + "\n", encoding="utf-8")


def write_run(
    outcome: SolveOutcome,
    out_path: str | Path,
    instance_path: str | Path | None = None,
    scenarios_path: str | Path | None = None,
    dump_matrix: bool = False,
) -> Path:
    """Write the solution file and, next to it, everything a later report needs."""
    target = Path(out_path)
    run_dir = target.parent
    run_dir.mkdir(parents=True, exist_ok=True)
    _write_json(target, outcome.solution_payload(dump_matrix))
    _write_json(run_dir / REQUIREMENTS_FILE, outcome.matrix.as_dict(include_assignments=True))
    save_instance(outcome.instance, run_dir / INSTANCE_FILE)
    (run_dir / SCENARIOS_FILE).write_text(dump_scenarios(outcome.scenarios), encoding="utf-8")
    _write_json(
        run_dir / RUN_FILE,
        {
            "label": outcome.instance.label,
            "solution": target.name,
            "instance_source": str(instance_path) if instance_path else None,
            "scenarios_source": str(scenarios_path) if scenarios_path else None,
            "alpha_star": outcome.alpha_star,
            "alpha": outcome.alpha,
            "time_limit": outcome.time_limit,
            "threads": outcome.threads,
            "wall_seconds": outcome.wall_seconds,
            "master_cost": outcome.solution.cost,
            "master_lower_bound": outcome.master_lower_bound,
            "pooling": POOLING,
        },
    )
    logger.info("run written to %s", run_dir)
    return run_dir


@dataclass(frozen=True)
class RunArtifacts:
    run_dir: Path
    meta: dict[str, Any]
    instance: Instance
    scenarios: tuple[Scenario, ...]
    matrix: RequirementMatrix
    solution: StaffSolution


def _read_json(path: Path) -> Any:
    try:
        return json.loads(path.read_text(encoding="utf-8"))
    except OSError as exc:
        raise InstanceFormatError(f"cannot read {path}: {exc}") from exc
    except json.JSONDecodeError as exc:
        raise InstanceFormatError(f"{path} is not valid JSON: {exc}") from exc


def load_run(run_dir: str | Path) -> RunArtifacts:
    root = Path(run_dir)
    if root.is_file():
        root = root.parent
    meta = _read_json(root / RUN_FILE)
    instance = load_instance(root / INSTANCE_FILE)
    try:
        matrix = RequirementMatrix.from_dict(_read_json(root / REQUIREMENTS_FILE))
        solution = StaffSolution.from_dict(_read_json(root / meta.get("solution", SOLUTION_FILE)))
    except (KeyError, TypeError, ValueError) as exc:
        raise InstanceFormatError(f"{root} does not hold a complete run: {exc}") from exc
    return RunArtifacts(
        run_dir=root,
        meta=meta,
        instance=instance,
        scenarios=tuple(load_scenarios(root / SCENARIOS_FILE, instance)),
        matrix=matrix,
        solution=solution,
    )


def _table(header: Sequence[str], rows: list[list[Any]], stats: Any) -> dict[str, Any]:
    return {"header": list(header), "rows": rows, "stats": asdict(stats)}


def build_reports(artifacts: RunArtifacts) -> dict[str, Any]:
    """Every evaluation table for a stored run; ``workload`` is None without retained assignments."""
    instance, matrix, solution = artifacts.instance, artifacts.matrix, artifacts.solution
    reports: dict[str, Any] = {"meta": {"pooling": artifacts.meta.get("pooling", POOLING), "label": instance.label}}
    try:
        workload = workload_report(instance, artifacts.scenarios, solution, matrix)
        reports["workload"] = _table(WORKLOAD_HEADER, workload.rows(), workload)
    except MissingAssignmentsError as exc:
        logger.warning("workload table skipped: %s", exc)
        reports["workload"] = None
    comparison = comparison_report(matrix, instance.costs, solution.alpha, solution)
    reports["variance"] = _table(VARIANCE_HEADER, comparison.variance_rows(), comparison)
    reports["coverage"] = _table(COVERAGE_HEADER, comparison.coverage_rows(), comparison)
    performance = performance_report(
        matrix,
        int(artifacts.meta.get("master_cost", solution.cost)),
        int(artifacts.meta.get("master_lower_bound", solution.cost)),
        float(artifacts.meta.get("wall_seconds", 0.0)),
    )
    reports["performance"] = _table(PERFORMANCE_HEADER, performance.rows(), performance)
    return reports


def record_run(outcome: SolveOutcome, label: str = "", run_dir: str | Path | None = None) -> SolveRun | None:
    performance = performance_report(
        outcome.matrix, outcome.solution.cost, outcome.master_lower_bound, outcome.wall_seconds
    )
    try:
        with transaction.atomic():
            return SolveRun.objects.create(
                label=label or outcome.instance.label,
                alpha_star=outcome.alpha_star,
                alpha=outcome.alpha,
                omega_count=outcome.solution.omega_count,
                time_limit=outcome.time_limit,
                threads=outcome.threads,
                staffing=outcome.solution.staffing,
                cost=outcome.solution.cost,
                coverage=outcome.solution.coverage,
                confidence_lb=outcome.solution.confidence_lb,
                master_lower_bound=outcome.master_lower_bound,
                wall_seconds=outcome.wall_seconds,
                run_dir=str(run_dir) if run_dir else "",
                performance={
                    **asdict(performance),
                    "pct_call_slave": performance.pct_call_slave,
                    "pct_opt": performance.pct_opt,
                    "master_gap": performance.master_gap,
                },
            )
    except DatabaseError:
        logger.warning("could not record run %s", label or outcome.instance.label, exc_info=True)
        return None

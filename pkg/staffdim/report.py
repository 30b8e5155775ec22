"""Evaluation tables: workload split, trivial-bound comparison and solver accounting."""

from __future__ import annotations

import csv
import io
import json
from dataclasses import asdict, dataclass
from typing import Any, Mapping, Sequence

from .domain import Instance, Scenario
from .exceptions import MissingAssignmentsError
from .master import RequirementMatrix, StaffSolution, coverage_set, required_count
from .slave import SlaveStatus

POOLING = "minutes pooled over covered scenarios"

WORKLOAD_HEADER = ("% day off", "% travel", "% idle", "staff", "cost")
VARIANCE_HEADER = ("sum n*-inf", "sum sup-n*", "sum n*-LB")
COVERAGE_HEADER = ("n*", "n*\\n1", "n2\\n*")
PERFORMANCE_HEADER = ("% gap", "cpu (h.)", "% call slave", "% opt.", "avg gap", "max gap")


def _ratio(numerator: float, denominator: float) -> float:
    return numerator / denominator if denominator else 0.0


def _percent(value: float) -> float:
    return round(100.0 * value, 2)


@dataclass(frozen=True)
class WorkloadStats:
    pct_day_off: float
    pct_travel: float
    pct_idle: float
    staff: int
    cost: int
    travel_minutes: int = 0
    service_minutes: int = 0
    idle_minutes: int = 0
    paid_minutes: int = 0

    def rows(self) -> list[list[Any]]:
        return [[_percent(self.pct_day_off), _percent(self.pct_travel), _percent(self.pct_idle), self.staff, self.cost]]


def workload_report(
    instance: Instance,
    scenarios: Sequence[Scenario],
    solution: StaffSolution,
    req: RequirementMatrix,
) -> WorkloadStats:
    """Day-off, travel and idle shares over the scenarios the staffing covers."""
    if req.assignments is None:
        raise MissingAssignmentsError()
    limit = instance.daily_limit
    intra = instance.territory.intra
    assigned = off = 0
    travel = service = idle = paid = 0
    for scenario in solution.covered:
        scenarios[scenario].check_shape(instance)
        for p, profession in enumerate(req.professions):
            staff = solution.n[p]
            assigned += staff
            off += staff - req.n_req[p][scenario]
            resources = req.assignments.get((p, scenario))
            if resources is None:
                raise MissingAssignmentsError(
                    f"no assignment retained for {profession} in scenario {scenario}; "
                    "re-solve with --keep-assignments."
                )
            for resource in resources:
                moving = sum(q * intra[s] for s, _, q in resource.served)
                caring = sum(q * instance.cares[a].duration(profession) for _, a, q in resource.served)
                travel += resource.route_minutes + moving
                service += caring
                idle += limit - resource.route_minutes - moving - caring
                paid += limit
    return WorkloadStats(
        pct_day_off=_ratio(off, assigned),
        pct_travel=_ratio(travel, paid),
        pct_idle=_ratio(idle, paid),
        staff=sum(solution.n),
        cost=solution.cost,
        travel_minutes=travel,
        service_minutes=service,
        idle_minutes=idle,
        paid_minutes=paid,
    )


def cutting_bounds(req: RequirementMatrix, alpha: float) -> tuple[int, ...]:
    """Per profession, the requirement ranked right after the scenarios allowed to go uncovered."""
    omega_count = req.omega_count
    allowed = omega_count - min(required_count(alpha, omega_count), omega_count)
    bounds = []
    for row in req.n_req:
        ranked = sorted(row, reverse=True)
        bounds.append(ranked[allowed] if allowed < len(ranked) else 0)
    return tuple(bounds)


@dataclass(frozen=True)
class ComparisonStats:
    professions: tuple[str, ...]
    inf: tuple[int, ...]
    sup: tuple[int, ...]
    n_star: tuple[int, ...]
    n1: tuple[int, ...]
    n2: tuple[int, ...]
    covered_star: tuple[int, ...]
    covered_n1: tuple[int, ...]
    covered_n2: tuple[int, ...]
    star_not_n1: tuple[int, ...]
    n2_not_star: tuple[int, ...]
    omega_count: int

    @property
    def sum_star_minus_inf(self) -> int:
        return sum(s - i for s, i in zip(self.n_star, self.inf))

    @property
    def sum_sup_minus_star(self) -> int:
        return sum(u - s for u, s in zip(self.sup, self.n_star))

    @property
    def sum_star_minus_lb(self) -> int:
        return sum(s - b for s, b in zip(self.n_star, self.n1))

    def variance_rows(self) -> list[list[Any]]:
        return [[self.sum_star_minus_inf, self.sum_sup_minus_star, self.sum_star_minus_lb]]

    def coverage_rows(self) -> list[list[Any]]:
        sets = (self.covered_star, self.star_not_n1, self.n2_not_star)
        return [[_percent(_ratio(len(items), self.omega_count)) for items in sets]]


def comparison_report(
    req: RequirementMatrix,
    costs: Mapping[str, int] | Sequence[int],
    alpha: float,
    solution: StaffSolution,
) -> ComparisonStats:
    values = req.n_req
    bounds = cutting_bounds(req, alpha)
    busy = [
        w for w in range(req.omega_count)
        if any(values[p][w] >= bounds[p] for p in range(len(values)))
    ]
    n2 = tuple(max((row[w] for w in busy), default=0) for row in values)
    covered_star = coverage_set(values, solution.n)
    covered_n1 = coverage_set(values, bounds)
    covered_n2 = coverage_set(values, n2)
    return ComparisonStats(
        professions=req.professions,
        inf=tuple(min(row, default=0) for row in values),
        sup=tuple(max(row, default=0) for row in values),
        n_star=tuple(solution.n),
        n1=bounds,
        n2=n2,
        covered_star=covered_star,
        covered_n1=covered_n1,
        covered_n2=covered_n2,
        star_not_n1=tuple(sorted(set(covered_star) - set(covered_n1))),
        n2_not_star=tuple(sorted(set(covered_n2) - set(covered_star))),
        omega_count=req.omega_count,
    )


@dataclass(frozen=True)
class PerformanceStats:
    cells: int
    solver_calls: int
    optimal_calls: int
    timeouts: int
    avg_gap: float
    max_gap: int
    avg_relative_gap: float
    master_cost: int
    master_lower_bound: int
    wall_seconds: float
    cpu_seconds: float

    @property
    def pct_call_slave(self) -> float:
        return _ratio(self.solver_calls, self.cells)

    @property
    def pct_opt(self) -> float:
        return _ratio(self.optimal_calls, self.solver_calls) if self.solver_calls else 1.0

    @property
    def master_gap(self) -> float:
        return _ratio(self.master_cost - self.master_lower_bound, self.master_cost)

    def rows(self) -> list[list[Any]]:
        return [[
            _percent(self.master_gap),
            round(self.cpu_seconds / 3600.0, 4),
            _percent(self.pct_call_slave),
            _percent(self.pct_opt),
            round(self.avg_gap, 3),
            self.max_gap,
        ]]


def performance_report(
    req: RequirementMatrix,
    master_cost: int,
    master_lower_bound: int,
    wall_seconds: float = 0.0,
) -> PerformanceStats:
    statuses = [status for row in req.status for status in row]
    calls = [
        (p, w)
        for p, row in enumerate(req.status)
        for w, status in enumerate(row)
        if status is not SlaveStatus.LB_SHORTCUT
    ]
    timed_out = [(p, w) for p, w in calls if req.status[p][w] is SlaveStatus.FEASIBLE_TIMEOUT]
    gaps = [req.n_req[p][w] - req.lb[p][w] for p, w in timed_out]
    relative = [_ratio(req.n_req[p][w] - req.lb[p][w], req.n_req[p][w]) for p, w in timed_out]
    return PerformanceStats(
        cells=len(statuses),
        solver_calls=len(calls),
        optimal_calls=len(calls) - len(timed_out),
        timeouts=len(timed_out),
        avg_gap=_ratio(sum(gaps), len(gaps)),
        max_gap=max(gaps, default=0),
        avg_relative_gap=_ratio(sum(relative), len(relative)),
        master_cost=master_cost,
        master_lower_bound=master_lower_bound,
        wall_seconds=wall_seconds,
        cpu_seconds=sum(v for row in req.elapsed for v in row),
    )


def render_csv(header: Sequence[str], rows: Sequence[Sequence[Any]]) -> str:
    buffer = io.StringIO()
    writer = csv.writer(buffer, lineterminator="\n")
    writer.writerow(header)
    writer.writerows(rows)
    return buffer.getvalue()


def render_json(payload: Any) -> str:
    return json.dumps(payload, indent=2, sort_keys=True) + "\n"


def stats_payload(stats: Any) -> dict[str, Any]:
    return asdict(stats)

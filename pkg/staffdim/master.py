"""Requirement matrix over all scenarios, coverage calibration and the staffing master problem."""

from __future__ import annotations

import logging
import math
import time
from concurrent.futures import FIRST_COMPLETED, Future, ProcessPoolExecutor, wait
from dataclasses import dataclass, field
from typing import Any, Mapping, Sequence

from tqdm import tqdm

from .domain import Instance, Scenario
from .exceptions import CalibrationError, MasterInfeasibleError
from .routing import RouteCatalog, build_catalog, enumerate_routes
from .slave import (
    DEFAULT_TIME_LIMIT,
    ResourceAssignment,
    SlaveResult,
    SlaveStatus,
    SlaveTask,
    build_task,
    heuristic_upper_bound,
    solve_slave,
)

logger = logging.getLogger(__name__)

CONFIDENCE_FACTOR = 1.66
MIN_CALIBRATION_SCENARIOS = 30
RATIO_TOLERANCE = 1e-9


def required_count(alpha: float, omega_count: int) -> int:
    """Scenarios that must be covered at ratio ``alpha``."""
    return max(0, math.ceil(alpha * omega_count - RATIO_TOLERANCE))


def confidence_lower_bound(coverage: float, omega_count: int) -> float:
    if omega_count <= 0:
        return 0.0
    spread = math.sqrt(max(coverage * (1.0 - coverage), 0.0))
    return coverage - CONFIDENCE_FACTOR * spread / math.sqrt(omega_count)


def calibrate_alpha(alpha_star: float, omega_count: int) -> float:
    """Smallest sample ratio whose confidence lower bound reaches ``alpha_star``."""
    if not 0.0 < alpha_star < 1.0:
        raise CalibrationError(f"alpha_star must lie in (0, 1), got {alpha_star}")
    if omega_count < MIN_CALIBRATION_SCENARIOS:
        raise CalibrationError(
            f"at least {MIN_CALIBRATION_SCENARIOS} scenarios are needed to calibrate, got {omega_count}"
        )
    for covered in range(required_count(alpha_star, omega_count), omega_count + 1):
        alpha = covered / omega_count
        if confidence_lower_bound(alpha, omega_count) >= alpha_star - RATIO_TOLERANCE:
            return alpha
    raise CalibrationError(f"no ratio reaches alpha_star={alpha_star} with {omega_count} scenarios")


# Requirement matrix ---------------------------------------------------------

@dataclass(frozen=True)
class RequirementMatrix:
    """Per-profession, per-scenario staff requirements; rows follow ``professions``."""

    professions: tuple[str, ...]
    n_req: tuple[tuple[int, ...], ...]
    lb: tuple[tuple[int, ...], ...]
    ub: tuple[tuple[int, ...], ...]
    status: tuple[tuple[SlaveStatus, ...], ...]
    bound: tuple[int, ...] = ()
    elapsed: tuple[tuple[float, ...], ...] = ()
    assignments: dict[tuple[int, int], tuple[ResourceAssignment, ...]] | None = None

    @property
    def omega_count(self) -> int:
        return len(self.n_req[0]) if self.n_req else 0

    @property
    def has_assignments(self) -> bool:
        return self.assignments is not None

    def row(self, profession: str) -> tuple[int, ...]:
        return self.n_req[self.professions.index(profession)]

    @classmethod
    def exact(cls, professions: Sequence[str], values: Sequence[Sequence[int]]) -> "RequirementMatrix":
        """Matrix of proven values, as produced when every cell is solved to optimality."""
        rows = tuple(tuple(int(v) for v in row) for row in values)
        return cls(
            professions=tuple(professions),
            n_req=rows,
            lb=rows,
            ub=rows,
            status=tuple(tuple(SlaveStatus.OPTIMAL for _ in row) for row in rows),
            bound=tuple(0 for _ in rows),
        )

    def as_dict(self, include_assignments: bool = False) -> dict[str, Any]:
        payload: dict[str, Any] = {
            "professions": list(self.professions),
            "n_req": [list(row) for row in self.n_req],
            "lb": [list(row) for row in self.lb],
            "ub": [list(row) for row in self.ub],
            "status": [[status.value for status in row] for row in self.status],
            "bound": list(self.bound),
            "elapsed": [[round(v, 6) for v in row] for row in self.elapsed],
        }
        if include_assignments and self.assignments is not None:
            payload["assignments"] = [
                {"profession": p, "scenario": w, "resources": [r.as_dict() for r in resources]}
                for (p, w), resources in sorted(self.assignments.items())
            ]
        return payload

    @classmethod
    def from_dict(cls, data: Mapping[str, Any]) -> "RequirementMatrix":
        assignments = None
        if "assignments" in data:
            assignments = {
                (int(item["profession"]), int(item["scenario"])): tuple(
                    ResourceAssignment.from_dict(r) for r in item["resources"]
                )
                for item in data["assignments"]
            }
        return cls(
            professions=tuple(data["professions"]),
            n_req=tuple(tuple(int(v) for v in row) for row in data["n_req"]),
            lb=tuple(tuple(int(v) for v in row) for row in data["lb"]),
            ub=tuple(tuple(int(v) for v in row) for row in data["ub"]),
            status=tuple(tuple(SlaveStatus(v) for v in row) for row in data["status"]),
            bound=tuple(int(v) for v in data.get("bound", ())),
            elapsed=tuple(tuple(float(v) for v in row) for row in data.get("elapsed", ())),
            assignments=assignments,
        )


class _ProfessionLedger:
    """Cutting-rule state of one profession: processing order, running bound and results."""

    def __init__(
        self,
        index: int,
        tasks: list[SlaveTask],
        uppers: list[SlaveResult],
        allowed_uncovered: int,
        shortcut: bool,
    ):
        self.index = index
        self.tasks = tasks
        self.uppers = uppers
        self.allowed_uncovered = allowed_uncovered
        # with nothing allowed uncovered the bound would be the running maximum, which
        # would bend cells of a matrix that must stay exact
        self.active = shortcut and allowed_uncovered > 0
        self.order = sorted(range(len(tasks)), key=lambda w: (-uppers[w].n, w))
        self.cursor = 0
        self.bound = 0
        self.results: dict[int, SlaveResult] = {}
        self.called: set[int] = set()

    @property
    def pending(self) -> bool:
        return self.cursor < len(self.order)

    def next_scenario(self) -> tuple[int, SlaveResult | None]:
        """Next scenario in decreasing-upper-bound order, with its shortcut result if the bound allows."""
        scenario = self.order[self.cursor]
        self.cursor += 1
        upper = self.uppers[scenario]
        if self.active and self.bound >= upper.n:
            return scenario, SlaveResult(
                self.bound, self.bound, SlaveStatus.LB_SHORTCUT, upper.assignment, proven_lb=upper.proven_bound
            )
        self.called.add(scenario)
        return scenario, None

    def task_for(self, scenario: int) -> SlaveTask:
        return self.tasks[scenario].with_lb(self.bound if self.active else 0)

    def record(self, scenario: int, result: SlaveResult) -> None:
        self.results[scenario] = result
        if not self.active or len(self.results) <= self.allowed_uncovered:
            return
        ranked = sorted((r.n for r in self.results.values()), reverse=True)
        self.bound = max(self.bound, ranked[self.allowed_uncovered])

    def proven_cut(self) -> int:
        """Headcount every staffing leaving at most ``allowed_uncovered`` scenarios uncovered needs."""
        ranked = sorted((r.proven_bound for r in self.results.values()), reverse=True)
        return ranked[self.allowed_uncovered] if len(ranked) > self.allowed_uncovered else 0

    def finalize(self) -> tuple[list[int], list[int], list[int], list[SlaveStatus], list[float]]:
        n_req, lb, ub, status, elapsed = [], [], [], [], []
        # lb rests on bounds proven without the running cut
        lb_bound = self.proven_cut() if self.active else 0
        for scenario in range(len(self.tasks)):
            result = self.results[scenario]
            n = max(result.n, self.bound) if self.active else result.n
            low = min(max(result.proven_bound, lb_bound), n)
            state = result.status
            if state is SlaveStatus.FEASIBLE_TIMEOUT and low == n:
                state = SlaveStatus.OPTIMAL
            n_req.append(n)
            lb.append(low)
            ub.append(max(self.uppers[scenario].n, n))
            status.append(state)
            elapsed.append(result.elapsed)
        return n_req, lb, ub, status, elapsed


def _solve_cell(task: SlaveTask, upper: SlaveResult) -> SlaveResult:
    return solve_slave(task, upper)


def _run_sequential(ledgers: list[_ProfessionLedger], bar) -> None:
    for ledger in ledgers:
        while ledger.pending:
            scenario, result = ledger.next_scenario()
            if result is None:
                result = solve_slave(ledger.task_for(scenario), ledger.uppers[scenario])
            ledger.record(scenario, result)
            bar.update(1)


def _run_parallel(ledgers: list[_ProfessionLedger], threads: int, bar) -> None:
    in_flight: dict[Future, tuple[_ProfessionLedger, int]] = {}
    turn = 0

    with ProcessPoolExecutor(max_workers=threads) as pool:

        def refill() -> None:
            nonlocal turn
            while len(in_flight) < threads:
                waiting = [ledger for ledger in ledgers if ledger.pending]
                if not waiting:
                    return
                ledger = waiting[turn % len(waiting)]
                turn += 1
                scenario, result = ledger.next_scenario()
                if result is not None:
                    ledger.record(scenario, result)
                    bar.update(1)
                    continue
                future = pool.submit(_solve_cell, ledger.task_for(scenario), ledger.uppers[scenario])
                in_flight[future] = (ledger, scenario)

        refill()
        while in_flight:
            done, _ = wait(in_flight, return_when=FIRST_COMPLETED)
            for future in done:
                ledger, scenario = in_flight.pop(future)
                ledger.record(scenario, future.result())
                bar.update(1)
            refill()


def compute_requirements(
    instance: Instance,
    scenarios: Sequence[Scenario],
    alpha: float,
    time_limit: float | None = DEFAULT_TIME_LIMIT,
    *,
    threads: int = 1,
    shortcut: bool = True,
    keep_assignments: bool = False,
    progress: bool = False,
    catalog: RouteCatalog | None = None,
) -> RequirementMatrix:
    """Fill the requirement matrix, skipping scenarios the running per-profession bound already settles."""
    started = time.perf_counter()
    omega_count = len(scenarios)
    allowed_uncovered = omega_count - min(required_count(alpha, omega_count), omega_count)
    catalog = catalog if catalog is not None else build_catalog(instance.territory)

    ledgers = []
    for index, profession in enumerate(instance.profession_ids):
        routes = enumerate_routes(instance, profession, catalog)
        tasks = [build_task(instance, scenario, profession, routes, time_limit=time_limit) for scenario in scenarios]
        uppers = [heuristic_upper_bound(task) for task in tasks]
        ledgers.append(_ProfessionLedger(index, tasks, uppers, allowed_uncovered, shortcut))

    total = len(ledgers) * omega_count
    with tqdm(total=total, disable=not progress, desc="slave", unit="cell") as bar:
        if threads > 1 and total:
            _run_parallel(ledgers, threads, bar)
        else:
            _run_sequential(ledgers, bar)

    columns = [ledger.finalize() for ledger in ledgers]
    assignments = None
    if keep_assignments:
        assignments = {
            (ledger.index, scenario): result.assignment
            for ledger in ledgers
            for scenario, result in ledger.results.items()
            if result.assignment is not None
        }
    matrix = RequirementMatrix(
        professions=instance.profession_ids,
        n_req=tuple(tuple(column[0]) for column in columns),
        lb=tuple(tuple(column[1]) for column in columns),
        ub=tuple(tuple(column[2]) for column in columns),
        status=tuple(tuple(column[3]) for column in columns),
        bound=tuple(ledger.bound for ledger in ledgers),
        elapsed=tuple(tuple(column[4]) for column in columns),
        assignments=assignments,
    )
    calls = sum(len(ledger.called) for ledger in ledgers)
    logger.info(
        "requirements computed: %d cells, %d solver calls, %.2fs", total, calls, time.perf_counter() - started
    )
    return matrix


# Master problem -------------------------------------------------------------

@dataclass(frozen=True)
class StaffSolution:
    professions: tuple[str, ...]
    n: tuple[int, ...]
    cost: int
    covered: tuple[int, ...]
    omega_count: int
    alpha: float

    @property
    def coverage(self) -> float:
        return len(self.covered) / self.omega_count if self.omega_count else 1.0

    @property
    def confidence_lb(self) -> float:
        return confidence_lower_bound(self.coverage, self.omega_count)

    @property
    def staffing(self) -> dict[str, int]:
        return dict(zip(self.professions, self.n))

    def as_dict(self) -> dict[str, Any]:
        return {
            "n": self.staffing,
            "cost": self.cost,
            "alpha": self.alpha,
            "coverage": self.coverage,
            "confidence_lb": self.confidence_lb,
            "covered": list(self.covered),
            "omega_count": self.omega_count,
        }

    @classmethod
    def from_dict(cls, data: Mapping[str, Any]) -> "StaffSolution":
        return cls(
            professions=tuple(data["n"]),
            n=tuple(int(v) for v in data["n"].values()),
            cost=int(data["cost"]),
            covered=tuple(int(v) for v in data["covered"]),
            omega_count=int(data["omega_count"]),
            alpha=float(data["alpha"]),
        )


def coverage_set(values: Sequence[Sequence[int]], n: Sequence[int]) -> tuple[int, ...]:
    """Scenarios whose requirements ``n`` dominates for every profession."""
    if not values:
        return ()
    return tuple(
        w for w in range(len(values[0])) if all(row[w] <= staff for row, staff in zip(values, n))
    )


def _cost_vector(professions: Sequence[str], costs: Mapping[str, int] | Sequence[int]) -> list[int]:
    if isinstance(costs, Mapping):
        return [int(costs[p]) for p in professions]
    return [int(c) for c in costs]


def _kth_smallest(row: Sequence[int], mask: int, k: int) -> int:
    return sorted(row[w] for w in range(len(row)) if mask >> w & 1)[k - 1]


def _solve_values(
    professions: Sequence[str],
    values: Sequence[Sequence[int]],
    costs: Mapping[str, int] | Sequence[int],
    alpha: float,
) -> StaffSolution:
    if alpha > 1.0 + RATIO_TOLERANCE:
        raise MasterInfeasibleError(f"coverage ratio {alpha} exceeds 1")
    price = _cost_vector(professions, costs)
    count = len(professions)
    omega_count = len(values[0]) if values else 0
    needed = min(required_count(alpha, omega_count), omega_count)

    def result(n: Sequence[int]) -> StaffSolution:
        chosen = tuple(int(v) for v in n)
        return StaffSolution(
            professions=tuple(professions),
            n=chosen,
            cost=sum(c * v for c, v in zip(price, chosen)),
            covered=coverage_set(values, chosen),
            omega_count=omega_count,
            alpha=alpha,
        )

    if needed == 0:
        return result([0] * count)

    candidates = [sorted({0, *row}) for row in values]
    # scenarios each candidate value covers, as bitmasks
    covers = [
        {v: sum(1 << w for w, need in enumerate(row) if need <= v) for v in options}
        for row, options in zip(values, candidates)
    ]
    best_cost = math.inf
    best: list[int] | None = None
    chosen: list[int] = []

    def descend(p: int, covered: int, spent: int) -> None:
        nonlocal best_cost, best
        if p == count:
            if spent < best_cost:
                best_cost, best = spent, list(chosen)
            return
        floor = spent + sum(price[q] * _kth_smallest(values[q], covered, needed) for q in range(p, count))
        if floor >= best_cost:
            return
        for v in candidates[p]:
            if spent + price[p] * v >= best_cost:
                break
            remaining = covered & covers[p][v]
            if remaining.bit_count() < needed:
                continue
            chosen.append(v)
            descend(p + 1, remaining, spent + price[p] * v)
            chosen.pop()

    descend(0, (1 << omega_count) - 1, 0)
    assert best is not None
    return result(best)


def solve_master(req: RequirementMatrix, costs: Mapping[str, int] | Sequence[int], alpha: float) -> StaffSolution:
    solution = _solve_values(req.professions, req.n_req, costs, alpha)
    logger.info("master solved: n=%s cost=%d coverage=%.3f", solution.staffing, solution.cost, solution.coverage)
    return solution


def master_lower_bound(req: RequirementMatrix, costs: Mapping[str, int] | Sequence[int], alpha: float) -> int:
    """Optimal master cost on the proven per-cell lower bounds."""
    return _solve_values(req.professions, req.lb, costs, alpha).cost


@dataclass(frozen=True)
class ParetoPoint:
    n: tuple[int, ...]
    cost: int
    coverage: float
    covered_count: int
    approximate: bool = False
    professions: tuple[str, ...] = field(default=())

    def as_dict(self) -> dict[str, Any]:
        return {
            "n": dict(zip(self.professions, self.n)),
            "cost": self.cost,
            "coverage": self.coverage,
            "covered_count": self.covered_count,
            "approximate": self.approximate,
        }


def _is_approximate(req: RequirementMatrix, n: Sequence[int]) -> bool:
    # an unproven cell whose lower bound fits the staffing may hide a cheaper or wider point
    for p, staff in enumerate(n):
        for w, value in enumerate(req.n_req[p]):
            if req.lb[p][w] < value and req.lb[p][w] <= staff:
                return True
    return False


def pareto_front(req: RequirementMatrix, costs: Mapping[str, int] | Sequence[int]) -> list[ParetoPoint]:
    """Nondominated (cost, coverage) staffings, one optimum per coverage level, sorted by coverage."""
    omega_count = req.omega_count
    if omega_count == 0:
        return []
    solutions = [_solve_values(req.professions, req.n_req, costs, k / omega_count) for k in range(1, omega_count + 1)]
    solutions.sort(key=lambda s: (s.cost, -len(s.covered), s.n))
    front: list[StaffSolution] = []
    widest = -1
    for solution in solutions:
        if len(solution.covered) > widest:
            front.append(solution)
            widest = len(solution.covered)
    front.sort(key=lambda s: len(s.covered))
    return [
        ParetoPoint(
            n=s.n,
            cost=s.cost,
            coverage=s.coverage,
            covered_count=len(s.covered),
            approximate=_is_approximate(req, s.n),
            professions=s.professions,
        )
        for s in front
    ]

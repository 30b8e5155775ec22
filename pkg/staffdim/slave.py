"""Minimal caregiver count for one profession on one day of demand.

Demand units of the same care in the same sector are interchangeable. A unit placed in
sector ``s`` costs its service duration plus the intra-sector travel of ``s``; remote
units live in sector 0 and cost the service duration only.
"""

from __future__ import annotations

import logging
import time
from collections import OrderedDict
from dataclasses import dataclass, field, replace
from enum import Enum
from itertools import combinations, combinations_with_replacement, permutations
from typing import Any

from .domain import Instance, Scenario, Territory
from .exceptions import InfeasibleDemandError
from .routing import RouteSet, mask_of, sector_bit

logger = logging.getLogger(__name__)

DEFAULT_TIME_LIMIT = 300.0
CLOCK_STRIDE = 1024
# rough memory budget of the failure memo of one search
MEMO_BYTES = 64 * 1024 * 1024


class SlaveStatus(str, Enum):
    OPTIMAL = "optimal"
    FEASIBLE = "feasible"
    FEASIBLE_TIMEOUT = "feasible_timeout"
    LB_SHORTCUT = "lb_shortcut"


@dataclass(frozen=True)
class DemandCell:
    sector: int
    care: int
    count: int
    minutes: int


@dataclass(frozen=True)
class ResourceAssignment:
    """One caregiver's day: the route ridden and the units served, as (sector, care, units)."""

    route: int
    route_minutes: int
    served: tuple[tuple[int, int, int], ...]

    def as_dict(self) -> dict[str, Any]:
        return {
            "route": self.route,
            "route_minutes": self.route_minutes,
            "served": [list(item) for item in self.served],
        }

    @classmethod
    def from_dict(cls, data: dict[str, Any]) -> "ResourceAssignment":
        return cls(
            route=int(data["route"]),
            route_minutes=int(data["route_minutes"]),
            served=tuple((int(s), int(a), int(q)) for s, a, q in data["served"]),
        )


@dataclass(frozen=True)
class SlaveTask:
    profession: str
    cells: tuple[DemandCell, ...]
    routes: RouteSet
    daily_limit: int
    lb: int = 0
    time_limit: float | None = DEFAULT_TIME_LIMIT

    @property
    def total_minutes(self) -> int:
        return sum(cell.count * cell.minutes for cell in self.cells)

    @property
    def units(self) -> int:
        return sum(cell.count for cell in self.cells)

    def with_lb(self, lb: int) -> "SlaveTask":
        return replace(self, lb=lb)


@dataclass(frozen=True)
class SlaveResult:
    n: int
    lower_bound: int
    status: SlaveStatus
    assignment: tuple[ResourceAssignment, ...] | None = None
    elapsed: float = 0.0
    # bound proven by the solver itself, ignoring the lb it was handed
    proven_lb: int | None = None

    @property
    def proven_bound(self) -> int:
        return self.lower_bound if self.proven_lb is None else self.proven_lb

    def as_dict(self, with_assignment: bool = False) -> dict[str, Any]:
        payload: dict[str, Any] = {
            "n": self.n,
            "lower_bound": self.lower_bound,
            "proven_bound": self.proven_bound,
            "status": self.status.value,
            "elapsed": round(self.elapsed, 6),
        }
        if with_assignment and self.assignment is not None:
            payload["assignment"] = [resource.as_dict() for resource in self.assignment]
        return payload


def build_task(
    instance: Instance,
    scenario: Scenario,
    profession: str,
    routes: RouteSet,
    lb: int = 0,
    time_limit: float | None = DEFAULT_TIME_LIMIT,
) -> SlaveTask:
    """Re-home remote demand to sector 0 and drop cares the profession takes no part in."""
    scenario.check_shape(instance)
    sectors = instance.territory.sector_count
    intra = instance.territory.intra
    cells: list[DemandCell] = []
    for index, care in enumerate(instance.cares):
        minutes = care.duration(profession)
        if minutes > 0 and care.is_remote(profession):
            units = sum(scenario.at(sector, index) for sector in range(1, sectors + 1))
            if units:
                cells.append(DemandCell(0, index, units, minutes))
    for sector in range(1, sectors + 1):
        for index, care in enumerate(instance.cares):
            minutes = care.duration(profession)
            if minutes <= 0 or care.is_remote(profession):
                continue
            units = scenario.at(sector, index)
            if units:
                cells.append(DemandCell(sector, index, units, minutes + intra[sector]))
    return SlaveTask(
        profession=profession,
        cells=tuple(cells),
        routes=routes,
        daily_limit=instance.daily_limit,
        lb=lb,
        time_limit=time_limit,
    )


def workload_bound(task: SlaveTask) -> int:
    return -(-task.total_minutes // task.daily_limit)


# Constructive upper bound ---------------------------------------------------

@dataclass
class _OpenDay:
    mask: int = 0
    load: int = 0
    served: dict[tuple[int, int], int] = field(default_factory=dict)

    def fits(self, bit: int, minutes: int, durations, limit: int) -> bool:
        return int(durations[self.mask | bit]) + self.load + minutes <= limit

    def add(self, cell: DemandCell, bit: int) -> None:
        self.mask |= bit
        self.load += cell.minutes
        key = (cell.sector, cell.care)
        self.served[key] = self.served.get(key, 0) + 1

    def freeze(self, durations) -> ResourceAssignment:
        served = tuple(sorted((s, a, q) for (s, a), q in self.served.items()))
        return ResourceAssignment(self.mask, int(durations[self.mask]), served)


def heuristic_upper_bound(task: SlaveTask) -> SlaveResult:
    """Push units at the end of the current day; open a new day when the next unit does not fit."""
    started = time.perf_counter()
    durations = task.routes.catalog.durations
    limit = task.daily_limit
    days: list[_OpenDay] = []
    for cell in task.cells:
        bit = sector_bit(cell.sector)
        for _ in range(cell.count):
            if not days or not days[-1].fits(bit, cell.minutes, durations, limit):
                fresh = _OpenDay()
                if not fresh.fits(bit, cell.minutes, durations, limit):
                    raise InfeasibleDemandError(
                        f"one unit of care {cell.care} in sector {cell.sector} needs more than "
                        f"{limit} minutes for {task.profession}"
                    )
                days.append(fresh)
            days[-1].add(cell, bit)

    n = len(days)
    lower = min(workload_bound(task), n)
    return SlaveResult(
        n=n,
        lower_bound=lower,
        status=SlaveStatus.OPTIMAL if lower == n else SlaveStatus.FEASIBLE,
        assignment=tuple(day.freeze(durations) for day in days),
        elapsed=time.perf_counter() - started,
    )


# Exact search ---------------------------------------------------------------

def default_memo_capacity(resources: int) -> int:
    """Memo entries fitting in ``MEMO_BYTES`` for keys over ``resources`` packed day states."""
    return max(1024, MEMO_BYTES // (120 + 40 * resources))


class _SearchTimeout(Exception):
    pass


class _PackingSearch:
    """Place every unit on one of ``resources`` days, growing each day's route as needed.

    Days holding the same (route, load) state are interchangeable, so only one of them is
    tried per unit. Failed (unit, multiset of day states) pairs are remembered in a
    least-recently-used memo holding at most ``memo_capacity`` entries.
    """

    def __init__(
        self,
        items: list[tuple[int, int, int]],
        durations: list[int],
        admissible: list[bool],
        limit: int,
        resources: int,
        deadline: float | None,
        memo_capacity: int | None = None,
    ):
        self.items = items
        self.durations = durations
        self.admissible = admissible
        self.limit = limit
        self.resources = resources
        self.deadline = deadline
        self.masks = [0] * resources
        self.loads = [0] * resources
        self.placement = [0] * len(items)
        self.load_bits = max(limit, 1).bit_length()
        self.memo_capacity = default_memo_capacity(resources) if memo_capacity is None else memo_capacity
        self.failed: OrderedDict[tuple, None] = OrderedDict()
        self.nodes = 0
        self.remaining = [0] * (len(items) + 1)
        for i in range(len(items) - 1, -1, -1):
            self.remaining[i] = self.remaining[i + 1] + items[i][1]
        self.smallest = min((minutes for _, minutes, _ in items), default=0)

    def run(self) -> bool:
        return self._place(0)

    def _place(self, i: int) -> bool:
        if i == len(self.items):
            return True
        self.nodes += 1
        if self.deadline is not None and self.nodes % CLOCK_STRIDE == 0 and time.perf_counter() > self.deadline:
            raise _SearchTimeout

        masks, loads, durations, limit = self.masks, self.loads, self.durations, self.limit
        room = 0
        for k in range(self.resources):
            free = limit - durations[masks[k]] - loads[k]
            if free >= self.smallest:
                room += free
        if room < self.remaining[i]:
            return False
        key = (i, tuple(sorted((m << self.load_bits) | l for m, l in zip(masks, loads))))
        if key in self.failed:
            self.failed.move_to_end(key)
            return False

        bit, minutes, _ = self.items[i]
        tried: set[tuple[int, int]] = set()
        for k in range(self.resources):
            state = (masks[k], loads[k])
            if state in tried:
                continue
            tried.add(state)
            mask = masks[k] | bit
            if not self.admissible[mask] or durations[mask] + loads[k] + minutes > limit:
                continue
            masks[k] = mask
            loads[k] += minutes
            self.placement[i] = k
            if self._place(i + 1):
                return True
            masks[k] = state[0]
            loads[k] = state[1]

        self._remember(key)
        return False

    def _remember(self, key: tuple) -> None:
        if self.memo_capacity <= 0:
            return
        self.failed[key] = None
        while len(self.failed) > self.memo_capacity:
            self.failed.popitem(last=False)

    def assignment(self, cells: tuple[DemandCell, ...]) -> tuple[ResourceAssignment, ...]:
        served: list[dict[tuple[int, int], int]] = [{} for _ in range(self.resources)]
        for (_, _, cell_index), k in zip(self.items, self.placement):
            cell = cells[cell_index]
            key = (cell.sector, cell.care)
            served[k][key] = served[k].get(key, 0) + 1
        days = []
        for k in range(self.resources):
            if not served[k]:
                continue
            items = tuple(sorted((s, a, q) for (s, a), q in served[k].items()))
            days.append(ResourceAssignment(self.masks[k], self.durations[self.masks[k]], items))
        return tuple(days)


def solve_slave(task: SlaveTask, upper: SlaveResult | None = None) -> SlaveResult:
    """Exact minimum of the day model under ``N >= task.lb``, or proven bounds on timeout."""
    started = time.perf_counter()
    upper = upper if upper is not None else heuristic_upper_bound(task)
    deadline = None if task.time_limit is None else started + task.time_limit
    ub = upper.n
    workload = workload_bound(task)
    lower = max(task.lb, workload)

    def own(resources: int) -> int:
        # counts between workload and task.lb were skipped, not refuted
        return resources if resources > lower or task.lb <= workload else workload

    def finish(n: int, bound: int, status: SlaveStatus, assignment, proven: int) -> SlaveResult:
        result = SlaveResult(n, bound, status, assignment, time.perf_counter() - started, min(proven, n))
        logger.debug("slave %s: n=%d lb=%d status=%s", task.profession, n, bound, status.value)
        return result

    if lower >= ub:
        n = max(ub, task.lb)
        proven = n if task.lb <= workload else max(workload, upper.proven_bound)
        return finish(n, n, SlaveStatus.OPTIMAL, upper.assignment, proven)

    order = sorted(range(len(task.cells)), key=lambda c: (-task.cells[c].minutes, task.cells[c].sector, task.cells[c].care))
    items = [
        (sector_bit(task.cells[c].sector), task.cells[c].minutes, c)
        for c in order
        for _ in range(task.cells[c].count)
    ]
    durations = [int(v) for v in task.routes.catalog.durations]
    admissible = [bool(v) for v in task.routes.admissible]

    for resources in range(lower, ub):
        if deadline is not None and time.perf_counter() > deadline:
            logger.warning("slave %s timed out at N=%d (ub=%d)", task.profession, resources, ub)
            return finish(ub, resources, SlaveStatus.FEASIBLE_TIMEOUT, upper.assignment, own(resources))
        search = _PackingSearch(items, durations, admissible, task.daily_limit, resources, deadline)
        try:
            found = search.run()
        except _SearchTimeout:
            logger.warning("slave %s timed out at N=%d (ub=%d)", task.profession, resources, ub)
            return finish(ub, resources, SlaveStatus.FEASIBLE_TIMEOUT, upper.assignment, own(resources))
        if found:
            return finish(resources, resources, SlaveStatus.OPTIMAL, search.assignment(task.cells), own(resources))
    return finish(ub, ub, SlaveStatus.OPTIMAL, upper.assignment, ub)


def verify_assignment(task: SlaveTask, assignment: tuple[ResourceAssignment, ...]) -> list[str]:
    """Replay an assignment against the day model; returns the violations found."""
    problems: list[str] = []
    minutes = {(cell.sector, cell.care): cell.minutes for cell in task.cells}
    delivered: dict[tuple[int, int], int] = {}
    catalog = task.routes.catalog
    for k, resource in enumerate(assignment):
        if resource.route >= len(catalog.durations) or not task.routes.is_admissible(resource.route):
            problems.append(f"resource {k}: route {resource.route} is not admissible")
            continue
        if resource.route_minutes != catalog.duration(resource.route):
            problems.append(f"resource {k}: route duration {resource.route_minutes} != {catalog.duration(resource.route)}")
        load = 0
        for sector, care, units in resource.served:
            if units < 0:
                problems.append(f"resource {k}: negative units for ({sector}, {care})")
            if (sector, care) not in minutes:
                problems.append(f"resource {k}: serves ({sector}, {care}) which has no demand")
                continue
            if sector and not resource.route & sector_bit(sector):
                problems.append(f"resource {k}: serves sector {sector} off its route")
            load += units * minutes[(sector, care)]
            delivered[(sector, care)] = delivered.get((sector, care), 0) + units
        if resource.route_minutes + load > task.daily_limit:
            problems.append(f"resource {k}: {resource.route_minutes + load} minutes exceed {task.daily_limit}")
    for cell in task.cells:
        got = delivered.get((cell.sector, cell.care), 0)
        if got != cell.count:
            problems.append(f"demand ({cell.sector}, {cell.care}): served {got} of {cell.count}")
    return problems


# Exhaustive oracle ----------------------------------------------------------

def _permutation_cost(territory: Territory, sectors: tuple[int, ...]) -> int:
    if not sectors:
        return 0
    inter = territory.inter
    best = None
    for order in permutations(sectors):
        cost = inter[0][order[0]] + inter[order[-1]][0]
        cost += sum(inter[a][b] for a, b in zip(order, order[1:]))
        best = cost if best is None else min(best, cost)
    return best


def _split(cells: list[DemandCell], index: int, routes: tuple[tuple[int, int], ...], room: list[int]) -> bool:
    if index == len(cells):
        return True
    cell = cells[index]
    bit = sector_bit(cell.sector)
    eligible = [k for k, (mask, _) in enumerate(routes) if cell.sector == 0 or mask & bit]

    def share(position: int, left: int) -> bool:
        if position == len(eligible):
            return left == 0 and _split(cells, index + 1, routes, room)
        k = eligible[position]
        for take in range(min(left, room[k] // cell.minutes), -1, -1):
            room[k] -= take * cell.minutes
            ok = share(position + 1, left - take)
            room[k] += take * cell.minutes
            if ok:
                return True
        return False

    return share(0, cell.count)


def solve_slave_bruteforce(task: SlaveTask) -> int:
    """Smallest multiset of permutation-priced routes that admits an integral split of all units."""
    cells = [cell for cell in task.cells if cell.count]
    if not cells:
        return max(0, task.lb)
    territory = task.routes.catalog.territory
    limit = task.daily_limit
    sectors = sorted({cell.sector for cell in cells if cell.sector})
    routes = []
    for size in range(len(sectors) + 1):
        for subset in combinations(sectors, size):
            cost = _permutation_cost(territory, subset)
            if cost < limit:
                routes.append((mask_of(subset), cost))
    total = sum(cell.count * cell.minutes for cell in cells)
    units = sum(cell.count for cell in cells)
    for n in range(1, units + 1):
        for chosen in combinations_with_replacement(routes, n):
            room = [limit - cost for _, cost in chosen]
            if sum(room) < total:
                continue
            if _split(cells, 0, chosen, room):
                return max(n, task.lb)
    raise InfeasibleDemandError(f"no packing of {units} units for {task.profession}")

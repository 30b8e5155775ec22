"""Route catalogue: minimal cycles from the depot through every subset of sectors.

A subset of sectors ``{1..S}`` is a bitmask where bit ``s - 1`` stands for sector ``s``.
The depot (sector 0) is on every route and never appears in the mask.
"""

from __future__ import annotations

import logging
from dataclasses import dataclass
from typing import Iterable, Iterator

import numpy as np

from .domain import Instance, Territory

logger = logging.getLogger(__name__)

UNREACHED = np.iinfo(np.int64).max // 4
# masks expanded per vectorised step; bounds the (masks x S x S) temporary
LAYER_CHUNK = 4096


def sector_bit(sector: int) -> int:
    """Bit of ``sector`` in a route mask; the depot has none."""
    return 0 if sector == 0 else 1 << (sector - 1)


def mask_sectors(mask: int) -> tuple[int, ...]:
    sectors = []
    sector = 1
    while mask:
        if mask & 1:
            sectors.append(sector)
        mask >>= 1
        sector += 1
    return tuple(sectors)


def mask_of(sectors: Iterable[int]) -> int:
    mask = 0
    for sector in sectors:
        mask |= sector_bit(sector)
    return mask


@dataclass(frozen=True)
class Route:
    mask: int
    duration: int

    @property
    def sectors(self) -> tuple[int, ...]:
        return mask_sectors(self.mask)

    @property
    def size(self) -> int:
        return self.mask.bit_count()

    def covers(self, sector: int) -> bool:
        return sector == 0 or bool(self.mask & sector_bit(sector))


@dataclass(frozen=True, eq=False)
class RouteCatalog:
    """Minimal cycle duration of every subset of sectors, indexed by mask."""

    territory: Territory
    durations: np.ndarray

    @property
    def sector_count(self) -> int:
        return self.territory.sector_count

    def duration(self, mask: int) -> int:
        return int(self.durations[mask])


@dataclass(frozen=True, eq=False)
class RouteSet:
    """Routes a profession may ride, after the slack filter."""

    profession: str
    catalog: RouteCatalog
    routes: tuple[Route, ...]
    admissible: np.ndarray

    def __len__(self) -> int:
        return len(self.routes)

    def __iter__(self) -> Iterator[Route]:
        return iter(self.routes)

    def is_admissible(self, mask: int) -> bool:
        return bool(self.admissible[mask])


def _held_karp(territory: Territory, subset: int) -> tuple[int, tuple[int, ...]]:
    sectors = mask_sectors(subset)
    if not sectors:
        return 0, ()
    if max(sectors) > territory.sector_count:
        raise ValueError(f"subset {subset:b} names sectors outside the territory")
    inter = territory.inter
    size = len(sectors)
    # (visited, last) -> (cost of the open path, previous position)
    best: dict[tuple[int, int], tuple[int, int]] = {
        (1 << i, i): (inter[0][sector], -1) for i, sector in enumerate(sectors)
    }
    for visited in range(1, 1 << size):
        for last in range(size):
            state = best.get((visited, last))
            if state is None:
                continue
            for nxt in range(size):
                if visited & (1 << nxt):
                    continue
                key = (visited | (1 << nxt), nxt)
                candidate = state[0] + inter[sectors[last]][sectors[nxt]]
                if key not in best or candidate < best[key][0]:
                    best[key] = (candidate, last)

    full = (1 << size) - 1
    cost, last = min((best[(full, j)][0] + inter[sectors[j]][0], j) for j in range(size))
    order = []
    visited = full
    while last != -1:
        order.append(sectors[last])
        previous = best[(visited, last)][1]
        visited ^= 1 << last
        last = previous
    order.reverse()
    return cost, tuple(order)


def min_cycle_duration(territory: Territory, subset: int) -> int:
    return _held_karp(territory, subset)[0]


def route_order(territory: Territory, subset: int) -> tuple[int, ...]:
    """Visiting order of a minimal cycle over ``subset`` (depot excluded at both ends)."""
    return _held_karp(territory, subset)[1]


def build_catalog(territory: Territory) -> RouteCatalog:
    """Price all ``2**S`` subsets at once, one population-count layer at a time."""
    sectors = territory.sector_count
    size = 1 << sectors
    if sectors == 0:
        return RouteCatalog(territory=territory, durations=np.zeros(1, dtype=np.int64))

    inter = np.asarray(territory.inter, dtype=np.int64)
    outbound = inter[0, 1:]
    travel = inter[1:, 1:]
    masks = np.arange(size, dtype=np.int64)
    popcounts = np.array([int(mask).bit_count() for mask in range(size)])

    paths = np.full((size, sectors), UNREACHED, dtype=np.int64)
    positions = np.arange(sectors)
    paths[1 << positions, positions] = outbound
    for layer in range(1, sectors):
        layer_masks = masks[popcounts == layer]
        for start in range(0, len(layer_masks), LAYER_CHUNK):
            chunk = layer_masks[start:start + LAYER_CHUNK]
            # cheapest open path over ``chunk`` that continues to each sector
            extended = (paths[chunk][:, :, None] + travel[None, :, :]).min(axis=1)
            for j in range(sectors):
                free = ((chunk >> j) & 1) == 0
                targets = chunk[free] | (1 << j)
                paths[targets, j] = np.minimum(paths[targets, j], extended[free, j])

    durations = (paths + outbound[None, :]).min(axis=1)
    durations[0] = 0
    logger.debug("priced %d subsets over %d sectors", size, sectors)
    return RouteCatalog(territory=territory, durations=durations)


def enumerate_routes(instance: Instance, profession: str, catalog: RouteCatalog | None = None) -> RouteSet:
    """Keep subsets whose cycle still leaves room for one cheapest demand per visited sector."""
    instance.profession(profession)
    territory = instance.territory
    catalog = catalog if catalog is not None else build_catalog(territory)
    durations = catalog.durations
    size = len(durations)
    admissible = np.zeros(size, dtype=bool)

    served = [care.duration(profession) for care in instance.cares if care.duration(profession) > 0]
    if served and territory.sector_count:
        per_sector = np.asarray(territory.intra[1:], dtype=np.int64) + min(served)
        masks = np.arange(size, dtype=np.int64)
        visits = np.zeros(size, dtype=np.int64)
        for j, minutes in enumerate(per_sector):
            visits += ((masks >> j) & 1) * minutes
        admissible = durations + visits <= instance.daily_limit
    admissible[0] = True

    routes = sorted(
        (Route(int(mask), int(durations[mask])) for mask in np.flatnonzero(admissible)),
        key=lambda route: (route.size, route.duration, route.mask),
    )
    logger.info("profession %s: %d admissible routes out of %d subsets", profession, len(routes), size)
    return RouteSet(profession=profession, catalog=catalog, routes=tuple(routes), admissible=admissible)


def route_histogram(route_set: RouteSet) -> dict[int, int]:
    histogram: dict[int, int] = {}
    for route in route_set:
        histogram[route.size] = histogram.get(route.size, 0) + 1
    return dict(sorted(histogram.items()))

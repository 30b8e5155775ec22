"""Territories, demand patterns, benchmark series and daily demand scenarios.

All randomness flows through ``numpy.random.Generator`` streams built from explicit
seeds, so the same seed always reproduces the same territory and scenario stream.
"""

from __future__ import annotations

import logging
import math
from dataclasses import dataclass
from enum import Enum
from typing import Annotated

import numpy as np
from pydantic import BaseModel, ConfigDict, Field

from .domain import (
    DEFAULT_DAILY_LIMIT,
    Care,
    DemandPattern,
    Instance,
    PatternKind,
    Profession,
    Scenario,
    Territory,
    TypicalDay,
)
from .exceptions import InstanceValidationError

logger = logging.getLogger(__name__)


class Sparsity(str, Enum):
    RURAL = "rural"
    URBAN = "urban"
    SEMI_URBAN = "semi_urban"


# side of the square holding the sectors, intra-sector interval in minutes
SPATIAL_DESIGN: dict[Sparsity, tuple[float, tuple[int, int]]] = {
    Sparsity.RURAL: (90.0, (5, 15)),
    Sparsity.URBAN: (60.0, (5, 10)),
    Sparsity.SEMI_URBAN: (90.0, (5, 10)),
}
SEMI_URBAN_INNER_SIDE = 60.0
SEMI_URBAN_INNER_PROBABILITY = 0.5
SPARSITY_CODES = {Sparsity.RURAL: "RU", Sparsity.URBAN: "UR", Sparsity.SEMI_URBAN: "SU"}

BENCHMARK_PROFESSIONS: tuple[tuple[str, int], ...] = (
    ("nurse", 1200),
    ("aid", 800),
    ("physician", 2500),
)
# care, frequency, minutes per profession
BENCHMARK_CARES: tuple[tuple[str, float, dict[str, int]], ...] = (
    ("palliative", 0.26, {"nurse": 60, "aid": 35, "physician": 10}),
    ("complex_bandage", 0.23, {"nurse": 40, "aid": 15, "physician": 10}),
    ("heavy_nursing", 0.10, {"nurse": 45, "aid": 50, "physician": 10}),
    ("others", 0.41, {"nurse": 40, "aid": 25, "physician": 5}),
)

SERIES_NAMES = ("S1.1", "S1.2", "S2.1", "S2.2", "S3", "S4")
# instances per territory in the benchmark (12 territories -> 12/12/12/12/24/24)
SERIES_REPEATS = {"S1.1": 1, "S1.2": 1, "S2.1": 1, "S2.2": 1, "S3": 2, "S4": 2}
BENCHMARK_DIVISIONS = (10, 15)
TERRITORIES_PER_CELL = 2
GEO_GROUPS = 5
GEO_CONCENTRATION = 0.8
TYPICAL_TOTALS = (45, 55, 65, 75)
TYPICAL_CONCENTRATION = 0.6


class TerritorySpec(BaseModel):
    model_config = ConfigDict(frozen=True, extra="forbid")

    sparsity: Sparsity
    divisions: Annotated[int, Field(ge=1)]
    seed: Annotated[int, Field(ge=0)] = 0

    @property
    def label(self) -> str:
        return f"{SPARSITY_CODES[self.sparsity]}{self.divisions}"


# Territories ----------------------------------------------------------------

def _round_half_up(values: np.ndarray) -> np.ndarray:
    return np.floor(values + 0.5).astype(np.int64)


def _shortest_path_closure(matrix: np.ndarray) -> np.ndarray:
    closed = matrix.copy()
    for k in range(closed.shape[0]):
        closed = np.minimum(closed, closed[:, k, None] + closed[None, k, :])
    return closed


def generate_territory(spec: TerritorySpec) -> Territory:
    rng = np.random.default_rng(spec.seed)
    side, (intra_lo, intra_hi) = SPATIAL_DESIGN[spec.sparsity]
    center = side / 2.0
    points = rng.uniform(0.0, side, size=(spec.divisions, 2))
    if spec.sparsity is Sparsity.SEMI_URBAN:
        half = SEMI_URBAN_INNER_SIDE / 2.0
        inner = rng.uniform(center - half, center + half, size=(spec.divisions, 2))
        in_small_square = rng.random(spec.divisions) < SEMI_URBAN_INNER_PROBABILITY
        points = np.where(in_small_square[:, None], inner, points)

    coordinates = np.vstack([[center, center], points])
    gaps = coordinates[:, None, :] - coordinates[None, :, :]
    inter = _round_half_up(np.sqrt((gaps ** 2).sum(axis=-1)))
    off_diagonal = ~np.eye(len(coordinates), dtype=bool)
    # distinct sectors stay at least one minute apart; rounding can break the
    # triangle inequality, the closure restores it on integers
    inter[off_diagonal] = np.maximum(inter[off_diagonal], 1)
    inter = _shortest_path_closure(inter)

    drawn = rng.integers(intra_lo, intra_hi + 1, size=spec.divisions)
    nearest = np.where(off_diagonal, inter, np.iinfo(np.int64).max).min(axis=1)[1:]
    intra = np.minimum(drawn, nearest - 1)

    territory = Territory(
        inter=tuple(tuple(int(v) for v in row) for row in inter),
        intra=(0, *(int(v) for v in intra)),
        sector_points=tuple((float(x), float(y)) for x, y in coordinates),
    )
    logger.debug("generated territory %s seed=%s", spec.label, spec.seed)
    return territory


# Demand patterns ------------------------------------------------------------

def uniform_spatial(sector_count: int) -> tuple[float, ...]:
    return tuple(1.0 / sector_count for _ in range(sector_count))


def sector_groups(sector_count: int, groups: int) -> list[list[int]]:
    """Contiguous partition of sector positions (0-based) into at most ``groups`` blocks."""
    if sector_count == 0:
        return []
    return [block.tolist() for block in np.array_split(np.arange(sector_count), min(groups, sector_count))]


def _concentrate(base: np.ndarray, members: list[int], share: float) -> tuple[float, ...]:
    inside = np.zeros(len(base), dtype=bool)
    inside[members] = True
    weights = base.copy()
    if weights[inside].sum() <= 0:
        weights[inside] = 1.0
    vector = np.zeros(len(base))
    outside_mass = weights[~inside].sum()
    if outside_mass <= 0:
        vector[inside] = weights[inside] / weights[inside].sum()
    else:
        vector[inside] = share * weights[inside] / weights[inside].sum()
        vector[~inside] = (1.0 - share) * weights[~inside] / outside_mass
    return tuple(float(v) for v in vector)


def daily_spatial(pattern: DemandPattern, sector_count: int, group: int) -> tuple[float, ...]:
    """Spatial law of a geo-variation day whose busy group is ``group``."""
    base = np.asarray(pattern.spatial or uniform_spatial(sector_count), dtype=float)
    members = sector_groups(sector_count, pattern.groups)[group]
    return _concentrate(base, members, pattern.concentration)


def quintile_spatial(sector_count: int, index: int, share: float = TYPICAL_CONCENTRATION) -> tuple[float, ...]:
    """Concentrate ``share`` of the mass on the ``index``-th contiguous fifth of the sectors (wrapping)."""
    size = max(1, math.ceil(sector_count / 5))
    members = sorted({(index * size + j) % sector_count for j in range(size)})
    return _concentrate(np.ones(sector_count), members, share)


def _draw_day(pattern: DemandPattern, sector_count: int, rng: np.random.Generator) -> tuple[int, tuple[float, ...]]:
    if pattern.kind is PatternKind.STABLE:
        return pattern.total, pattern.spatial
    if pattern.kind is PatternKind.VOLUME_VARIATION:
        lo, hi = pattern.total_range
        return int(rng.integers(lo, hi + 1)), pattern.spatial
    if pattern.kind is PatternKind.GEO_VARIATION:
        lo, hi = pattern.total_range
        total = int(rng.integers(lo, hi + 1))
        if sector_count == 0:
            return total, ()
        group = int(rng.integers(len(sector_groups(sector_count, pattern.groups))))
        return total, daily_spatial(pattern, sector_count, group)
    weights = np.array([day.weight for day in pattern.typical], dtype=float)
    day = pattern.typical[int(rng.choice(len(pattern.typical), p=weights / weights.sum()))]
    return day.total, day.spatial


def sample_scenario(instance: Instance, rng: np.random.Generator) -> Scenario:
    sectors = instance.territory.sector_count
    cares = len(instance.cares)
    total, spatial = _draw_day(instance.pattern, sectors, rng)
    counts = np.zeros((sectors, cares), dtype=np.int64)
    if sectors and total:
        where = rng.choice(sectors, size=total, p=np.asarray(spatial, dtype=float))
        what = rng.choice(cares, size=total, p=np.asarray(instance.pattern.epi, dtype=float))
        np.add.at(counts, (where, what), 1)
    return Scenario(demands=tuple(tuple(int(v) for v in row) for row in counts))


def sample_scenarios(instance: Instance, count: int, seed: int) -> list[Scenario]:
    rng = np.random.default_rng(seed)
    return [sample_scenario(instance, rng) for _ in range(count)]


# Series ---------------------------------------------------------------------

def benchmark_professions() -> tuple[Profession, ...]:
    return tuple(Profession(id=name, monthly_cost=cost) for name, cost in BENCHMARK_PROFESSIONS)


def benchmark_cares() -> tuple[Care, ...]:
    return tuple(
        Care(id=name, frequency=frequency, durations=dict(durations), remote={p: False for p in durations})
        for name, frequency, durations in BENCHMARK_CARES
    )


def series_pattern(series: str, sector_count: int) -> DemandPattern:
    epi = tuple(frequency for _, frequency, _ in BENCHMARK_CARES)
    spatial = uniform_spatial(sector_count)
    if series == "S1.1":
        return DemandPattern(kind=PatternKind.STABLE, total=40, spatial=spatial, epi=epi)
    if series == "S1.2":
        return DemandPattern(kind=PatternKind.STABLE, total=50, spatial=spatial, epi=epi)
    if series == "S2.1":
        return DemandPattern(kind=PatternKind.VOLUME_VARIATION, total_range=(45, 60), spatial=spatial, epi=epi)
    if series == "S2.2":
        return DemandPattern(kind=PatternKind.VOLUME_VARIATION, total_range=(30, 60), spatial=spatial, epi=epi)
    if series == "S3":
        return DemandPattern(
            kind=PatternKind.GEO_VARIATION,
            total_range=(40, 50),
            spatial=spatial,
            epi=epi,
            groups=GEO_GROUPS,
            concentration=GEO_CONCENTRATION,
        )
    if series == "S4":
        days = tuple(
            TypicalDay(total=total, spatial=quintile_spatial(sector_count, index) if sector_count else ())
            for index, total in enumerate(TYPICAL_TOTALS)
        )
        return DemandPattern(kind=PatternKind.TYPICAL_DAYS, epi=epi, typical=days)
    raise InstanceValidationError(f"unknown series {series}; expected one of {', '.join(SERIES_NAMES)}")


def generate_series(
    series: str,
    territory: Territory,
    seed: int,
    *,
    daily_limit: int = DEFAULT_DAILY_LIMIT,
    territory_label: str = "",
) -> Instance:
    pattern = series_pattern(series, territory.sector_count)
    parts = [series, territory_label, f"seed{seed}"]
    return Instance(
        territory=territory,
        professions=benchmark_professions(),
        cares=benchmark_cares(),
        daily_limit=daily_limit,
        pattern=pattern,
        label="/".join(part for part in parts if part),
    )


@dataclass(frozen=True)
class BenchmarkEntry:
    territory: TerritorySpec
    series: str
    seed: int

    @property
    def name(self) -> str:
        return f"{self.series}_{self.territory.label}_t{self.territory.seed}_s{self.seed}"


def benchmark_plan(seed: int) -> list[BenchmarkEntry]:
    """The 96 benchmark instances: 12 territories x (S1.1, S1.2, S2.1, S2.2, 2 x S3, 2 x S4)."""
    rng = np.random.default_rng(seed)
    entries: list[BenchmarkEntry] = []
    for sparsity in Sparsity:
        for divisions in BENCHMARK_DIVISIONS:
            for _ in range(TERRITORIES_PER_CELL):
                spec = TerritorySpec(sparsity=sparsity, divisions=divisions, seed=int(rng.integers(2**31)))
                for series in SERIES_NAMES:
                    for _ in range(SERIES_REPEATS[series]):
                        entries.append(BenchmarkEntry(spec, series, int(rng.integers(2**31))))
    return entries

"""Small hand-checkable instances shared by the test modules."""

from __future__ import annotations

from typing import Sequence

from staffdim.domain import Care, DemandPattern, Instance, PatternKind, Profession, Scenario, Territory
from staffdim.routing import build_catalog, enumerate_routes
from staffdim.scengen import Sparsity, TerritorySpec, generate_territory, uniform_spatial
from staffdim.slave import SlaveTask, build_task


def make_territory(inter: Sequence[Sequence[int]], intra: Sequence[int] | None = None) -> Territory:
    size = len(inter)
    return Territory(
        inter=tuple(tuple(row) for row in inter),
        intra=tuple(intra) if intra is not None else (0,) * size,
    )


def make_instance(
    territory: Territory,
    cares: Sequence[tuple[str, dict[str, int]]],
    professions: Sequence[tuple[str, int]] = (("nurse", 1200),),
    daily_limit: int = 480,
    remote: dict[str, dict[str, bool]] | None = None,
    total: int = 10,
    spatial: Sequence[float] | None = None,
) -> Instance:
    """Cares share the frequency mass evenly; the pattern is stable with ``total`` demands."""
    count = len(cares)
    frequencies = [1.0 / count] * count
    remote = remote or {}
    care_models = tuple(
        Care(id=care_id, frequency=frequency, durations=dict(durations), remote=remote.get(care_id, {}))
        for (care_id, durations), frequency in zip(cares, frequencies)
    )
    sectors = territory.sector_count
    pattern = DemandPattern(
        kind=PatternKind.STABLE,
        total=total,
        spatial=tuple(spatial) if spatial is not None else (uniform_spatial(sectors) if sectors else ()),
        epi=tuple(frequencies),
    )
    return Instance(
        territory=territory,
        professions=tuple(Profession(id=p, monthly_cost=c) for p, c in professions),
        cares=care_models,
        daily_limit=daily_limit,
        pattern=pattern,
        label="test",
    )


def one_sector_instance(minutes: int = 60, leg: int = 10, daily_limit: int = 480) -> Instance:
    return make_instance(make_territory([[0, leg], [leg, 0]]), [("visit", {"nurse": minutes})], daily_limit=daily_limit)


def scenario(rows: Sequence[Sequence[int]]) -> Scenario:
    return Scenario(demands=tuple(tuple(row) for row in rows))


def task_for(instance: Instance, rows: Sequence[Sequence[int]], profession: str = "nurse", **kwargs) -> SlaveTask:
    routes = enumerate_routes(instance, profession, build_catalog(instance.territory))
    return build_task(instance, scenario(rows), profession, routes, **kwargs)


def random_territory(seed: int, sectors: int, sparsity: Sparsity = Sparsity.URBAN) -> Territory:
    return generate_territory(TerritorySpec(sparsity=sparsity, divisions=sectors, seed=seed))

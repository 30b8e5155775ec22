"""Problem data: territories, professions, cares, demand patterns, instances and scenarios.

Everything here is an immutable pydantic model; the JSON instance file maps one-to-one
onto :class:`Instance` and the scenario bundle onto a list of :class:`Scenario`.
"""

from __future__ import annotations

import json
import math
from enum import Enum
from pathlib import Path
from typing import Annotated, Any, Iterable

from pydantic import BaseModel, ConfigDict, Field, ValidationError, model_validator

from .exceptions import InstanceFormatError, InstanceValidationError

DEFAULT_DAILY_LIMIT = 480
METRIC_TOLERANCE = 1e-9
DISTRIBUTION_TOLERANCE = 1e-12
FREQUENCY_TOLERANCE = 1e-9

Minutes = Annotated[int, Field(ge=0)]
Probability = Annotated[float, Field(ge=0.0, le=1.0)]


def _is_distribution(values: Iterable[float], tolerance: float = DISTRIBUTION_TOLERANCE) -> bool:
    return abs(math.fsum(values) - 1.0) <= tolerance


class Territory(BaseModel):
    """Sectors around a depot; index 0 of every matrix is the depot."""

    model_config = ConfigDict(frozen=True, extra="forbid")

    inter: tuple[tuple[Minutes, ...], ...]
    intra: tuple[Minutes, ...]
    sector_points: tuple[tuple[float, float], ...] | None = None

    @property
    def sector_count(self) -> int:
        return len(self.inter) - 1

    @model_validator(mode="before")
    @classmethod
    def _drop_sector_count(cls, values: Any) -> Any:
        if isinstance(values, dict) and "sector_count" in values:
            values = dict(values)
            declared = values.pop("sector_count")
            if declared != len(values.get("inter") or ()) - 1:
                raise ValueError("sector_count does not match the inter matrix")
        return values

    @model_validator(mode="after")
    def _check_metric(self) -> "Territory":
        size = len(self.inter)
        if size < 1:
            raise ValueError("inter must contain the depot row")
        if any(len(row) != size for row in self.inter):
            raise ValueError("inter not square")
        if len(self.intra) != size:
            raise ValueError("intra must have one entry per sector plus the depot")
        for i in range(size):
            if self.inter[i][i] != 0:
                raise ValueError("inter diagonal not zero")
            for j in range(i + 1, size):
                if self.inter[i][j] != self.inter[j][i]:
                    raise ValueError("inter not symmetric")
        for k in range(size):
            for i in range(size):
                via = self.inter[i][k]
                for j in range(size):
                    if self.inter[i][j] > via + self.inter[k][j] + METRIC_TOLERANCE:
                        raise ValueError("inter violates the triangle inequality")
        if self.intra[0] != 0:
            raise ValueError("intra[0] must be 0")
        for s in range(1, size):
            nearest = min(self.inter[s][t] for t in range(size) if t != s)
            if self.intra[s] > nearest:
                raise ValueError(f"intra[{s}] exceeds the nearest inter-sector time")
        if self.sector_points is not None and len(self.sector_points) != size:
            raise ValueError("sector_points must have one point per sector plus the depot")
        return self


class Profession(BaseModel):
    model_config = ConfigDict(frozen=True, extra="forbid")

    id: Annotated[str, Field(min_length=1)]
    monthly_cost: Annotated[int, Field(gt=0)]


class Care(BaseModel):
    model_config = ConfigDict(frozen=True, extra="forbid")

    id: Annotated[str, Field(min_length=1)]
    frequency: Probability
    durations: dict[str, Minutes]
    remote: dict[str, bool] = Field(default_factory=dict)

    def duration(self, profession: str) -> int:
        """Minutes of ``profession`` needed by one demand; 0 when not involved."""
        return self.durations.get(profession, 0)

    def is_remote(self, profession: str) -> bool:
        return self.remote.get(profession, False)


class PatternKind(str, Enum):
    STABLE = "stable"
    VOLUME_VARIATION = "volume_variation"
    GEO_VARIATION = "geo_variation"
    TYPICAL_DAYS = "typical_days"


class TypicalDay(BaseModel):
    model_config = ConfigDict(frozen=True, extra="forbid")

    total: Minutes
    spatial: tuple[Probability, ...]
    weight: Annotated[float, Field(gt=0.0)] = 1.0

    @model_validator(mode="after")
    def _check_spatial(self) -> "TypicalDay":
        if self.spatial and not _is_distribution(self.spatial):
            raise ValueError("typical day spatial distribution must sum to 1")
        return self


class DemandPattern(BaseModel):
    """Stochastic law of one day: total volume, spatial and epidemiological distributions."""

    model_config = ConfigDict(frozen=True, extra="forbid")

    kind: PatternKind
    total: Annotated[int, Field(ge=0)] | None = None
    total_range: tuple[Annotated[int, Field(ge=0)], Annotated[int, Field(ge=0)]] | None = None
    spatial: tuple[Probability, ...] = ()
    epi: tuple[Probability, ...]
    groups: Annotated[int, Field(ge=1)] = 5
    concentration: Probability = 0.8
    typical: tuple[TypicalDay, ...] = ()

    @model_validator(mode="after")
    def _check_shape(self) -> "DemandPattern":
        if self.kind is PatternKind.STABLE and self.total is None:
            raise ValueError("stable pattern needs a fixed total")
        if self.kind in (PatternKind.VOLUME_VARIATION, PatternKind.GEO_VARIATION):
            if self.total_range is None:
                raise ValueError(f"{self.kind.value} pattern needs total_range")
            if self.total_range[0] > self.total_range[1]:
                raise ValueError("total_range must be ordered [lo, hi]")
        if self.kind is PatternKind.TYPICAL_DAYS and not self.typical:
            raise ValueError("typical_days pattern needs at least one typical day")
        if self.spatial and not _is_distribution(self.spatial):
            raise ValueError("spatial distribution must sum to 1")
        if not _is_distribution(self.epi):
            raise ValueError("epi distribution must sum to 1")
        return self

    def spatial_vectors(self) -> list[tuple[float, ...]]:
        if self.kind is PatternKind.TYPICAL_DAYS:
            return [day.spatial for day in self.typical]
        return [self.spatial]


class Instance(BaseModel):
    """Territory + professions + cares + demand pattern + daily limit."""

    model_config = ConfigDict(frozen=True, extra="forbid")

    territory: Territory
    professions: Annotated[tuple[Profession, ...], Field(min_length=1)]
    cares: Annotated[tuple[Care, ...], Field(min_length=1)]
    daily_limit: Annotated[int, Field(gt=0)] = DEFAULT_DAILY_LIMIT
    pattern: DemandPattern
    label: str = ""

    @model_validator(mode="after")
    def _check_references(self) -> "Instance":
        profession_ids = [p.id for p in self.professions]
        if len(set(profession_ids)) != len(profession_ids):
            raise ValueError("profession ids must be unique")
        care_ids = [c.id for c in self.cares]
        if len(set(care_ids)) != len(care_ids):
            raise ValueError("care ids must be unique")
        for care in self.cares:
            for profession in (*care.durations, *care.remote):
                if profession not in profession_ids:
                    raise ValueError(f"care {care.id} references unknown profession {profession}")
        frequencies = [care.frequency for care in self.cares]
        if not _is_distribution(frequencies, FREQUENCY_TOLERANCE):
            raise ValueError("care frequencies must sum to 1")
        if len(self.pattern.epi) != len(self.cares):
            raise ValueError("pattern epi must have one entry per care")
        if any(abs(a - b) > FREQUENCY_TOLERANCE for a, b in zip(self.pattern.epi, frequencies)):
            raise ValueError("pattern epi does not match care frequencies")
        sectors = self.territory.sector_count
        for vector in self.pattern.spatial_vectors():
            if len(vector) != sectors:
                raise ValueError("pattern spatial distribution must have one entry per sector")
        longest = max((care.duration(p) for care in self.cares for p in profession_ids), default=0)
        depot_leg = max(self.territory.inter[0][1:], default=0)
        if self.daily_limit <= longest + max(self.territory.intra) + 2 * depot_leg:
            raise ValueError("daily_limit too small to serve a single demand")
        return self

    # Convenience lookups ------------------------------------------------------
    @property
    def profession_ids(self) -> tuple[str, ...]:
        return tuple(p.id for p in self.professions)

    @property
    def care_ids(self) -> tuple[str, ...]:
        return tuple(c.id for c in self.cares)

    @property
    def costs(self) -> dict[str, int]:
        return {p.id: p.monthly_cost for p in self.professions}

    def profession(self, profession_id: str) -> Profession:
        for profession in self.professions:
            if profession.id == profession_id:
                return profession
        raise InstanceValidationError(f"unknown profession {profession_id}")

    def care_index(self, care_id: str) -> int:
        for index, care in enumerate(self.cares):
            if care.id == care_id:
                return index
        raise InstanceValidationError(f"unknown care {care_id}")

    def care(self, care_id: str) -> Care:
        return self.cares[self.care_index(care_id)]


class Scenario(BaseModel):
    """One day of demand: ``demands[s - 1][a]`` units of care ``a`` in sector ``s``."""

    model_config = ConfigDict(frozen=True, extra="forbid")

    demands: tuple[tuple[Annotated[int, Field(ge=0)], ...], ...]

    @property
    def total(self) -> int:
        return sum(sum(row) for row in self.demands)

    def at(self, sector: int, care: int) -> int:
        return self.demands[sector - 1][care]

    def check_shape(self, instance: Instance) -> "Scenario":
        if len(self.demands) != instance.territory.sector_count or any(
            len(row) != len(instance.cares) for row in self.demands
        ):
            raise InstanceValidationError(
                f"scenario shape does not match instance ({instance.territory.sector_count} sectors "
                f"x {len(instance.cares)} cares)"
            )
        return self


def effective_service_minutes(instance: Instance, care: str, profession: str, sector: int) -> int:
    """Time charged per demand unit: service duration plus intra-sector travel."""
    item = instance.care(care)
    instance.profession(profession)
    if not 0 <= sector <= instance.territory.sector_count:
        raise InstanceValidationError(f"sector {sector} out of range")
    if sector == 0 and not item.is_remote(profession):
        raise InstanceValidationError(f"care {care} is not remote for {profession}; sector 0 is invalid")
    return item.duration(profession) + instance.territory.intra[sector]


# File I/O -------------------------------------------------------------------

def _describe(exc: ValidationError) -> str:
    parts = []
    for error in exc.errors():
        location = ".".join(str(item) for item in error.get("loc", ()))
        message = error.get("msg", "")
        parts.append(f"{location}: {message}" if location else message)
    return "; ".join(parts)


def _read_json(path: str | Path) -> Any:
    try:
        text = Path(path).read_text(encoding="utf-8")
    except OSError as exc:
        raise InstanceFormatError(f"cannot read {path}: {exc}") from exc
    try:
        return json.loads(text)
    except json.JSONDecodeError as exc:
        raise InstanceFormatError(f"{path} is not valid JSON: {exc}") from exc


def _canonical(payload: Any) -> str:
    return json.dumps(payload, indent=2) + "\n"


def parse_instance(data: Any) -> Instance:
    if not isinstance(data, dict):
        raise InstanceFormatError("instance document must be a JSON object")
    try:
        return Instance.model_validate(data)
    except ValidationError as exc:
        raise InstanceValidationError(_describe(exc)) from exc


def load_instance(path: str | Path) -> Instance:
    return parse_instance(_read_json(path))


def dump_instance(instance: Instance) -> str:
    return _canonical(instance.model_dump(mode="json", exclude_none=True))


def save_instance(instance: Instance, path: str | Path) -> Path:
    target = Path(path)
    target.parent.mkdir(parents=True, exist_ok=True)
    target.write_text(dump_instance(instance), encoding="utf-8")
    return target


def parse_scenario(data: Any, instance: Instance | None = None) -> Scenario:
    try:
        scenario = Scenario.model_validate(data)
    except ValidationError as exc:
        raise InstanceValidationError(_describe(exc)) from exc
    return scenario.check_shape(instance) if instance is not None else scenario


def load_scenarios(path: str | Path, instance: Instance | None = None) -> list[Scenario]:
    data = _read_json(path)
    if isinstance(data, dict) and "scenarios" in data:
        items = data["scenarios"]
    elif isinstance(data, dict) and "demands" in data:
        items = [data]
    else:
        raise InstanceFormatError(f"{path} must hold a 'scenarios' list or a single 'demands' matrix")
    if not isinstance(items, list):
        raise InstanceFormatError("'scenarios' must be a list")
    return [parse_scenario(item, instance) for item in items]


def dump_scenarios(scenarios: Iterable[Scenario]) -> str:
    return _canonical({"scenarios": [scenario.model_dump(mode="json") for scenario in scenarios]})


def save_scenarios(scenarios: Iterable[Scenario], path: str | Path) -> Path:
    target = Path(path)
    target.parent.mkdir(parents=True, exist_ok=True)
    target.write_text(dump_scenarios(scenarios), encoding="utf-8")
    return target

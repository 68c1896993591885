"""SITA privacy transformation.

Four dimensions (Spatial, Identity, Temporal, Activity), each at a level
from 0 (everything deleted) to 4 (untouched). The Identity dimension is
wired as a no-op: the sensor records carry no person-linked fields, but the
level is parsed and kept so the configuration string stays four digits.
"""
from __future__ import annotations

import math
from dataclasses import dataclass, field
from datetime import datetime
from pathlib import Path

from .data import SensorRecord, parse_timestamp

DELETED_TOKEN = "deleted"

DIMENSIONS = ("spatial", "identity", "temporal", "activity")


class SitaConfigError(ValueError):
    """Raised for malformed SITA configuration strings."""


@dataclass(frozen=True)
class PrivateField:
    """A record field after transformation: either a value or deleted."""

    value: object = None
    deleted: bool = False

    @classmethod
    def of(cls, value) -> "PrivateField":
        return cls(value=value, deleted=False)

    @classmethod
    def gone(cls) -> "PrivateField":
        return cls(deleted=True)

    def get(self):
        if self.deleted:
            raise ValueError("field is deleted")
        return self.value

    def render(self) -> str:
        return DELETED_TOKEN if self.deleted else str(self.value)


_DELETED = PrivateField.gone()


def _check_level(level: int, position: int) -> int:
    level = int(level)
    if not 0 <= level <= 4:
        raise SitaConfigError(f"level {level} out of range 0-4 at position {position}")
    return level


@dataclass(frozen=True)
class SitaConfig:
    spatial: int
    identity: int
    temporal: int
    activity: int

    def __post_init__(self):
        for pos, dim in enumerate(DIMENSIONS, start=1):
            object.__setattr__(self, dim, _check_level(getattr(self, dim), pos))

    def __str__(self) -> str:
        return f"{self.spatial}{self.identity}{self.temporal}{self.activity}"


def parse_config(text: str) -> SitaConfig:
    """Parse a 4-digit configuration string like ``"4434"``."""
    if len(text) != 4:
        raise SitaConfigError(f"configuration {text!r} must be exactly 4 digits")
    levels = []
    for pos, ch in enumerate(text, start=1):
        if not ch.isdigit():
            raise SitaConfigError(f"non-digit {ch!r} at position {pos} in {text!r}")
        if int(ch) > 4:
            raise SitaConfigError(f"digit {ch} out of range 0-4 at position {pos} in {text!r}")
        levels.append(int(ch))
    return SitaConfig(*levels)


def floor_of(room_id: str) -> str | None:
    """Map a room id prefix to a floor label; None if unrecognized."""
    if room_id[:1].upper() == "G":
        return "Ground Floor"
    if room_id[:1].isdigit():
        return f"Floor {room_id[0]}"
    return None


UNKNOWN_FLOOR = "Unknown Floor"


@dataclass
class TransformStats:
    unknown_floor: int = 0


def transform_spatial(
    room: str, zone: str, level: int, stats: TransformStats | None = None
) -> tuple[PrivateField, PrivateField]:
    level = _check_level(level, 1)
    if level == 0:
        return _DELETED, _DELETED
    if level == 1:
        return PrivateField.of("building"), _DELETED
    if level == 2:
        label = floor_of(room)
        if label is None:
            label = UNKNOWN_FLOOR
            if stats is not None:
                stats.unknown_floor += 1
        return PrivateField.of(label), _DELETED
    if level == 3:
        return PrivateField.of(room), _DELETED
    return PrivateField.of(room), PrivateField.of(zone)


def transform_temporal(ts: datetime, level: int) -> tuple[PrivateField, PrivateField]:
    level = _check_level(level, 3)
    if level == 0:
        return _DELETED, _DELETED
    if level == 1:
        return PrivateField.of(ts.strftime("%Y%m01")), _DELETED
    date = ts.strftime("%Y%m%d")
    if level == 2:
        return PrivateField.of(date), _DELETED
    if level == 3:
        return PrivateField.of(date), PrivateField.of(ts.strftime("%H0000"))
    return PrivateField.of(date), PrivateField.of(ts.strftime("%H%M%S"))


def round_half_up(value: float, step: int) -> int:
    """Round to the nearest multiple of step, halves away from lower values."""
    return int(math.floor(value / step + 0.5)) * step


def truncate(value: float) -> int:
    """Drop the decimal part, truncating toward zero."""
    return int(math.trunc(value))


def transform_activity(values: tuple[float, float, float, float], level: int) -> tuple[PrivateField, ...]:
    """Transform the (co2, temperature, humidity, brightness) quadruple.

    Levels 1-3 yield integers (nearest 100, nearest 10, truncated); level 4
    keeps the original values untouched.
    """
    level = _check_level(level, 4)
    if level == 0:
        return (_DELETED,) * 4
    if level == 1:
        return tuple(PrivateField.of(round_half_up(v, 100)) for v in values)
    if level == 2:
        return tuple(PrivateField.of(round_half_up(v, 10)) for v in values)
    if level == 3:
        return tuple(PrivateField.of(truncate(v)) for v in values)
    return tuple(PrivateField.of(v) for v in values)


@dataclass(frozen=True)
class PrivateRecord:
    room: PrivateField
    zone: PrivateField
    date: PrivateField
    time: PrivateField
    co2: PrivateField
    temperature: PrivateField
    humidity: PrivateField
    brightness: PrivateField
    config: SitaConfig
    occupancy: float | None = None  # ground truth passthrough, never transformed

    FIELDS = ("room", "zone", "date", "time", "co2", "temperature", "humidity", "brightness")


def apply_config(
    record: SensorRecord, cfg: SitaConfig, stats: TransformStats | None = None
) -> PrivateRecord:
    """Apply one SITA configuration to one record. Identity is a no-op."""
    room, zone = transform_spatial(record.room_id, record.zone_id, cfg.spatial, stats)
    date, time = transform_temporal(record.timestamp, cfg.temporal)
    co2, temp, hum, bright = transform_activity(
        (record.co2, record.temperature, record.humidity, record.brightness), cfg.activity
    )
    return PrivateRecord(
        room=room,
        zone=zone,
        date=date,
        time=time,
        co2=co2,
        temperature=temp,
        humidity=hum,
        brightness=bright,
        config=cfg,
        occupancy=record.occupancy,
    )


def apply_dataset(
    records: list[SensorRecord],
    cfg: SitaConfig | str,
    with_progress: bool = False,
    stats: TransformStats | None = None,
) -> list[PrivateRecord]:
    """Element-wise apply_config over a dataset, order preserving."""
    if isinstance(cfg, str):
        cfg = parse_config(cfg)
    iterable = records
    if with_progress:
        try:
            from tqdm import tqdm

            iterable = tqdm(records, desc=f"sita {cfg}")
        except ImportError:
            pass
    return [apply_config(r, cfg, stats) for r in iterable]


PRIVATE_COLUMNS = ("room", "zone", "date", "time", "co2", "temperature", "humidity", "brightness")


def private_table_text(records: list[PrivateRecord], include_occupancy: bool = False) -> str:
    """Render private records as CSV with the literal ``deleted`` token."""
    header = ",".join(PRIVATE_COLUMNS + (("occupancy",) if include_occupancy else ()))
    lines = [header]
    for r in records:
        row = [getattr(r, name).render() for name in PRIVATE_COLUMNS]
        if include_occupancy:
            row.append("" if r.occupancy is None else repr(float(r.occupancy)))
        lines.append(",".join(row))
    return "\n".join(lines) + "\n"


def write_private_table(records: list[PrivateRecord], path: str | Path, include_occupancy: bool = False) -> None:
    Path(path).write_text(private_table_text(records, include_occupancy), encoding="utf-8", newline="\n")

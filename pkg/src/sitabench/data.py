"""Sensor data handling: ingestion of per-sensor JSON files, consolidation
into a unified record table, outlier cleaning, CSV round-tripping, and a
seeded synthesizer that stands in for real building data.

Timestamps are UTC throughout; the canonical textual form is the 14-digit
``YYYYMMDDhhmmss`` string.
"""
from __future__ import annotations

import json
import math
from dataclasses import dataclass, field, replace
from datetime import datetime, timedelta, timezone
from enum import Enum
from pathlib import Path

import numpy as np

TIMESTAMP_FORMAT = "%Y%m%d%H%M%S"

TABLE_COLUMNS = ("room", "zone", "timestamp", "co2", "temperature", "humidity", "brightness")


class SensorKind(str, Enum):
    CO2 = "co2"
    TEMPERATURE = "temperature"
    HUMIDITY = "humidity"
    BRIGHTNESS = "brightness"
    OCCUPANCY = "occupancy"


MANDATORY_KINDS = (
    SensorKind.CO2,
    SensorKind.TEMPERATURE,
    SensorKind.HUMIDITY,
    SensorKind.BRIGHTNESS,
)


class ParseError(ValueError):
    """Raised for structurally malformed sensor files."""

    def __init__(self, message, line=None, column=None):
        if line is not None:
            message = f"{message} (line {line}, column {column})"
        super().__init__(message)
        self.line = line
        self.column = column


class SynthConfigError(ValueError):
    """Raised for invalid synthesizer configurations."""


def parse_timestamp(text: str) -> datetime:
    """Parse the canonical 14-digit timestamp into an aware UTC datetime."""
    if len(text) != 14 or not text.isdigit():
        raise ParseError(f"bad timestamp {text!r}: expected 14 digits YYYYMMDDhhmmss")
    try:
        dt = datetime.strptime(text, TIMESTAMP_FORMAT)
    except ValueError as exc:
        raise ParseError(f"bad timestamp {text!r}: {exc}") from exc
    return dt.replace(tzinfo=timezone.utc)


def format_timestamp(ts: datetime) -> str:
    return ts.strftime(TIMESTAMP_FORMAT)


@dataclass(frozen=True)
class RawReading:
    kind: SensorKind
    room_id: str
    zone_id: str
    timestamp: datetime
    value: float

    def __post_init__(self):
        if not math.isfinite(self.value):
            raise ValueError(f"non-finite reading value {self.value!r}")


@dataclass(frozen=True)
class SensorRecord:
    room_id: str
    zone_id: str
    timestamp: datetime
    co2: float
    temperature: float
    humidity: float
    brightness: float
    occupancy: float | None = None


@dataclass(frozen=True)
class CleaningRanges:
    """Inclusive [min, max] bounds per mandatory measurement."""

    co2: tuple[float, float] = (0.0, 1000.0)
    temperature: tuple[float, float] = (0.0, 50.0)
    humidity: tuple[float, float] = (0.0, 100.0)
    brightness: tuple[float, float] = (0.0, 2000.0)

    def __post_init__(self):
        for name in ("co2", "temperature", "humidity", "brightness"):
            lo, hi = getattr(self, name)
            if lo > hi:
                raise ValueError(f"{name} range has min > max: ({lo}, {hi})")


DEFAULT_RANGES = CleaningRanges()


@dataclass
class ParseResult:
    readings: list[RawReading]
    skipped: int = 0


def parse_sensor_file(content: bytes | str, kind: SensorKind) -> ParseResult:
    """Parse one per-sensor JSON file into raw readings.

    The file must contain a JSON array of objects with string fields
    ``room``, ``zone``, ``timestamp`` (14-digit) and a numeric ``value``.
    Entries that are not well formed (missing fields, non-finite or
    non-numeric values, bad timestamps) are skipped and counted.
    """
    if isinstance(content, bytes):
        content = content.decode("utf-8")
    try:
        payload = json.loads(content)
    except json.JSONDecodeError as exc:
        raise ParseError(f"malformed sensor file: {exc.msg}", exc.lineno, exc.colno) from exc
    if not isinstance(payload, list):
        raise ParseError("sensor file must be a JSON array of entries")
    kind = SensorKind(kind)
    readings: list[RawReading] = []
    skipped = 0
    for entry in payload:
        try:
            room = entry["room"]
            zone = entry["zone"]
            ts = parse_timestamp(str(entry["timestamp"]))
            value = entry["value"]
            if isinstance(value, str):
                value = float(value)
            if not isinstance(value, (int, float)) or isinstance(value, bool):
                raise ValueError(f"non-numeric value {value!r}")
            reading = RawReading(kind, str(room), str(zone), ts, float(value))
        except (KeyError, TypeError, ValueError):
            skipped += 1
            continue
        readings.append(reading)
    return ParseResult(readings, skipped)


@dataclass
class ConsolidateResult:
    records: list[SensorRecord]
    dropped: int = 0
    duplicates: int = 0


def consolidate(streams: list[list[RawReading]]) -> ConsolidateResult:
    """Merge per-sensor reading streams into unified records.

    Readings are grouped by (room, zone, timestamp). A group becomes a
    SensorRecord only if all four mandatory measurements are present;
    incomplete groups are dropped and counted. A duplicate reading for the
    same key and sensor kind overwrites the earlier one (last wins) and is
    counted. Output is sorted by (room, timestamp).
    """
    groups: dict[tuple[str, str, datetime], dict[SensorKind, float]] = {}
    duplicates = 0
    for stream in streams:
        for reading in stream:
            key = (reading.room_id, reading.zone_id, reading.timestamp)
            bucket = groups.setdefault(key, {})
            if reading.kind in bucket:
                duplicates += 1
            bucket[reading.kind] = reading.value
    records = []
    dropped = 0
    for (room, zone, ts), bucket in groups.items():
        if any(k not in bucket for k in MANDATORY_KINDS):
            dropped += 1
            continue
        records.append(
            SensorRecord(
                room_id=room,
                zone_id=zone,
                timestamp=ts,
                co2=bucket[SensorKind.CO2],
                temperature=bucket[SensorKind.TEMPERATURE],
                humidity=bucket[SensorKind.HUMIDITY],
                brightness=bucket[SensorKind.BRIGHTNESS],
                occupancy=bucket.get(SensorKind.OCCUPANCY),
            )
        )
    records.sort(key=lambda r: (r.room_id, r.timestamp))
    return ConsolidateResult(records, dropped, duplicates)


def clean(records: list[SensorRecord], ranges: CleaningRanges = DEFAULT_RANGES) -> list[SensorRecord]:
    """Keep exactly the records whose mandatory values lie inside the
    inclusive ranges; input order is preserved."""

    def inside(record: SensorRecord) -> bool:
        for name in ("co2", "temperature", "humidity", "brightness"):
            lo, hi = getattr(ranges, name)
            v = getattr(record, name)
            if v < lo or v > hi:
                return False
        return True

    return [r for r in records if inside(r)]


# Hour-of-day occupancy probabilities for a weekday (index = hour).
DEFAULT_WEEKDAY_PROFILE = (
    0.0, 0.0, 0.0, 0.0, 0.0, 0.0, 0.0, 0.0,
    0.3, 0.6, 0.8, 0.9, 0.7, 0.8, 0.9, 0.8,
    0.6, 0.4, 0.2, 0.0, 0.0, 0.0, 0.0, 0.0,
)


@dataclass(frozen=True)
class SynthConfig:
    """Configuration of the synthetic dataset generator.

    CO2 follows a discrete first-order well-mixed room model
    ``c(t+dt) = c(t) + dt * (G*n/V - lam*(c - c_out))`` with occupancy ``n``
    drawn from a persistent binomial weekday schedule; temperature,
    humidity and brightness follow diurnal shapes plus occupancy terms and
    Gaussian noise. Deterministic in ``seed``.
    """

    n_rooms: int = 8
    start: datetime = datetime(2018, 10, 1, tzinfo=timezone.utc)
    days: int = 18
    interval_s: int = 600
    seed: int = 0
    # occupancy schedule
    weekday_profile: tuple[float, ...] = DEFAULT_WEEKDAY_PROFILE
    weekend_factor: float = 0.05
    room_capacity: int = 4
    occupancy_persistence: float = 0.7
    # room physics
    volume_m3: float = 50.0
    ventilation_m3_s: float = 0.04
    person_co2_m3_s: float = 5e-6
    outdoor_co2_ppm: float = 410.0
    outdoor_drift_ppm: float = 100.0
    # measurement shapes
    temp_base: float = 20.0
    temp_diurnal: float = 1.0
    temp_per_person: float = 0.3
    hum_base: float = 45.0
    hum_diurnal: float = 3.0
    hum_per_person: float = 0.5
    daylight_lm: float = 150.0
    lights_lm: float = 250.0
    # noise standard deviations
    noise_co2: float = 8.0
    noise_temperature: float = 0.4
    noise_humidity: float = 1.5
    noise_brightness: float = 30.0

    def __post_init__(self):
        if self.n_rooms < 1:
            raise SynthConfigError("n_rooms must be >= 1")
        if self.days < 1:
            raise SynthConfigError("days must be >= 1")
        if self.interval_s <= 0:
            raise SynthConfigError("interval_s must be > 0")
        if len(self.weekday_profile) != 24:
            raise SynthConfigError("weekday_profile must have 24 entries")
        if any(not (0.0 <= p <= 1.0) for p in self.weekday_profile):
            raise SynthConfigError("weekday_profile entries must be in [0, 1]")
        for name in ("noise_co2", "noise_temperature", "noise_humidity", "noise_brightness"):
            if getattr(self, name) < 0:
                raise SynthConfigError(f"{name} must be >= 0")
        if self.room_capacity < 0:
            raise SynthConfigError("room_capacity must be >= 0")
        if not (0.0 <= self.occupancy_persistence < 1.0):
            raise SynthConfigError("occupancy_persistence must be in [0, 1)")
        if self.volume_m3 <= 0 or self.ventilation_m3_s <= 0:
            raise SynthConfigError("room physics parameters must be positive")


_FLOOR_PREFIXES = ("G", "1", "2", "3")


def _room_id(index: int) -> str:
    floor = _FLOOR_PREFIXES[index % len(_FLOOR_PREFIXES)]
    return f"{floor}.{index + 1:03d}"


def synthesize(cfg: SynthConfig) -> list[SensorRecord]:
    """Generate a deterministic synthetic dataset; every record already
    satisfies the default cleaning ranges."""
    n_steps = cfg.days * 86400 // cfg.interval_s
    total_s = cfg.days * 86400
    lam = cfg.ventilation_m3_s / cfg.volume_m3
    gain = 1e6 * cfg.person_co2_m3_s / cfg.volume_m3  # ppm/s per person
    dt = float(cfg.interval_s)
    ranges = DEFAULT_RANGES

    records: list[SensorRecord] = []
    for room_index in range(cfg.n_rooms):
        rng = np.random.Generator(np.random.Philox(key=[cfg.seed, room_index]))
        room = _room_id(room_index)
        zone = str(1 + room_index % 2)
        occupancy = 0
        co2 = cfg.outdoor_co2_ppm
        for step in range(n_steps):
            elapsed = step * cfg.interval_s
            ts = cfg.start + timedelta(seconds=elapsed)
            hour = ts.hour
            frac_hour = hour + ts.minute / 60.0
            weekday = ts.weekday() < 5
            p = cfg.weekday_profile[hour] * (1.0 if weekday else cfg.weekend_factor)
            if step == 0 or rng.random() >= cfg.occupancy_persistence:
                occupancy = int(rng.binomial(cfg.room_capacity, p)) if p > 0 else 0
            c_out = cfg.outdoor_co2_ppm + cfg.outdoor_drift_ppm * (elapsed / total_s)
            co2 = co2 + dt * (gain * occupancy - lam * (co2 - c_out))

            diurnal = math.sin(2.0 * math.pi * (frac_hour - 9.0) / 24.0)
            daylight = max(0.0, math.sin(math.pi * (frac_hour - 6.0) / 14.0))
            temp = (
                cfg.temp_base
                + cfg.temp_diurnal * diurnal
                + cfg.temp_per_person * occupancy
                + rng.normal(0.0, cfg.noise_temperature)
            )
            hum = (
                cfg.hum_base
                + cfg.hum_diurnal * diurnal
                + cfg.hum_per_person * occupancy
                + rng.normal(0.0, cfg.noise_humidity)
            )
            bright = (
                cfg.daylight_lm * daylight
                + (cfg.lights_lm if occupancy > 0 else 0.0)
                + rng.normal(0.0, cfg.noise_brightness)
            )
            co2_obs = co2 + rng.normal(0.0, cfg.noise_co2)

            records.append(
                SensorRecord(
                    room_id=room,
                    zone_id=zone,
                    timestamp=ts,
                    co2=_clip(co2_obs, ranges.co2),
                    temperature=_clip(temp, ranges.temperature),
                    humidity=_clip(hum, ranges.humidity),
                    brightness=_clip(bright, ranges.brightness),
                    occupancy=float(occupancy),
                )
            )
    return records


def _clip(value: float, bounds: tuple[float, float]) -> float:
    lo, hi = bounds
    return min(max(value, lo), hi)


def _format_value(v: float) -> str:
    return repr(float(v))


def table_text(records: list[SensorRecord], include_occupancy: bool | None = None) -> str:
    """Render records as the consolidated CSV table (LF line endings)."""
    if include_occupancy is None:
        include_occupancy = all(r.occupancy is not None for r in records) and bool(records)
    header = ",".join(TABLE_COLUMNS + (("occupancy",) if include_occupancy else ()))
    lines = [header]
    for r in records:
        row = [
            r.room_id,
            r.zone_id,
            format_timestamp(r.timestamp),
            _format_value(r.co2),
            _format_value(r.temperature),
            _format_value(r.humidity),
            _format_value(r.brightness),
        ]
        if include_occupancy:
            row.append("" if r.occupancy is None else _format_value(r.occupancy))
        lines.append(",".join(row))
    return "\n".join(lines) + "\n"


def write_table(records: list[SensorRecord], path: str | Path, include_occupancy: bool | None = None) -> None:
    Path(path).write_text(table_text(records, include_occupancy), encoding="utf-8", newline="\n")


def read_table(path: str | Path) -> list[SensorRecord]:
    """Read a consolidated CSV table written by :func:`write_table`."""
    text = Path(path).read_text(encoding="utf-8")
    lines = [line for line in text.split("\n") if line]
    if not lines:
        raise ParseError("empty table file")
    header = lines[0].split(",")
    expected = list(TABLE_COLUMNS)
    has_occ = header == expected + ["occupancy"]
    if not has_occ and header != expected:
        raise ParseError(f"unexpected table header: {lines[0]!r}")
    records = []
    for i, line in enumerate(lines[1:], start=2):
        parts = line.split(",")
        if len(parts) != len(header):
            raise ParseError(f"wrong column count on line {i}")
        occ = None
        if has_occ and parts[7] != "":
            occ = float(parts[7])
        records.append(
            SensorRecord(
                room_id=parts[0],
                zone_id=parts[1],
                timestamp=parse_timestamp(parts[2]),
                co2=float(parts[3]),
                temperature=float(parts[4]),
                humidity=float(parts[5]),
                brightness=float(parts[6]),
                occupancy=occ,
            )
        )
    return records

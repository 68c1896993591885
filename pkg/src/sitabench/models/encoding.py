"""Feature encoding of SITA-transformed records.

Categorical columns (room, zone) are label-encoded with a stable sorted
category order; the ``deleted`` token is just another category when a column
is partially deleted. Date and time expand to numeric calendar components.
Columns that are fully deleted are dropped; numeric columns with any deleted
entry are dropped as a whole (with one configuration applied to the entire
dataset, partial deletion of a numeric column cannot occur).
"""
from __future__ import annotations

from dataclasses import dataclass, field

import numpy as np

from ..sita import DELETED_TOKEN, PrivateRecord


class TargetMissingError(ValueError):
    """The CO2 target is deleted (activity level 0 dataset)."""


@dataclass
class FeatureMatrix:
    values: np.ndarray  # (n_rows, n_cols) float64
    names: list[str]
    kinds: list[str]  # "numeric" | "categorical"

    @property
    def n_rows(self) -> int:
        return self.values.shape[0]

    @property
    def n_cols(self) -> int:
        return self.values.shape[1]


@dataclass
class EncodingMap:
    columns: dict[str, dict[str, int]] = field(default_factory=dict)

    def code(self, column: str, category: str) -> int:
        return self.columns[column][category]

    def decode(self, column: str, code: int) -> str:
        for cat, c in self.columns[column].items():
            if c == code:
                return cat
        raise KeyError(f"no category with code {code} in column {column!r}")


@dataclass(frozen=True)
class EncodePolicy:
    include_occupancy: bool = False
    exclude: tuple[str, ...] = ()  # feature names to leave out


_DATE_PARTS = (("year", slice(0, 4)), ("month", slice(4, 6)), ("day", slice(6, 8)))
_TIME_PARTS = (("hour", slice(0, 2)), ("minute", slice(2, 4)), ("second", slice(4, 6)))


def encode(
    records: list[PrivateRecord], policy: EncodePolicy | None = None
) -> tuple[FeatureMatrix, np.ndarray, EncodingMap]:
    """Build (features, co2 target, encoding map) from private records."""
    if policy is None:
        policy = EncodePolicy()
    if not records:
        raise ValueError("cannot encode an empty dataset")
    if any(r.co2.deleted for r in records):
        raise TargetMissingError(
            "co2 target is deleted; an activity level 0 dataset cannot be used for prediction"
        )
    y = np.asarray([float(r.co2.get()) for r in records], dtype=np.float64)

    columns: list[tuple[str, str, np.ndarray]] = []  # (name, kind, values)
    emap = EncodingMap()

    for name in ("room", "zone"):
        fields = [getattr(r, name) for r in records]
        if all(f.deleted for f in fields):
            continue
        tokens = [f.render() for f in fields]
        cats = sorted(set(tokens))
        codes = {cat: i for i, cat in enumerate(cats)}
        emap.columns[name] = codes
        columns.append((name, "categorical", np.asarray([codes[t] for t in tokens], dtype=np.float64)))

    for name, parts in (("date", _DATE_PARTS), ("time", _TIME_PARTS)):
        fields = [getattr(r, name) for r in records]
        if any(f.deleted for f in fields):
            continue
        texts = [str(f.get()) for f in fields]
        for part, sl in parts:
            columns.append((part, "numeric", np.asarray([int(t[sl]) for t in texts], dtype=np.float64)))

    for name in ("temperature", "humidity", "brightness"):
        fields = [getattr(r, name) for r in records]
        if any(f.deleted for f in fields):
            continue
        columns.append((name, "numeric", np.asarray([float(f.get()) for f in fields], dtype=np.float64)))

    if policy.include_occupancy:
        occ = [r.occupancy for r in records]
        if all(o is not None for o in occ):
            columns.append(("occupancy", "numeric", np.asarray(occ, dtype=np.float64)))

    columns = [c for c in columns if c[0] not in policy.exclude]
    if not columns:
        raise ValueError("no usable feature columns after encoding")
    names = [c[0] for c in columns]
    kinds = [c[1] for c in columns]
    values = np.column_stack([c[2] for c in columns])
    return FeatureMatrix(values, names, kinds), y, emap

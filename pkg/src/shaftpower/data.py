"""CSV ingestion, schema validation, preprocessing filters, and standardization.

The on-disk schema is a UTF-8 CSV with a header row and ISO-8601 UTC
timestamps. Missing or unparseable cells become explicit ``None`` markers on
the record, never sentinel numerics; rows carrying markers are dropped by
:func:`preprocess` together with the slow-speed and low-power filters.
"""
from __future__ import annotations

import csv
import math
from dataclasses import dataclass, field, fields, replace
from datetime import datetime, timezone
from pathlib import Path
from typing import Iterable, Iterator, Optional, Sequence

import numpy as np

from .exceptions import DomainError, SchemaError, UsageError

SPEED_MIN_KN = 5.0
POWER_MIN_KW = 500.0

#: Record field -> CSV column, in schema order.
FIELD_TO_COLUMN = {
    "timestamp": "timestamp",
    "speed_through_water": "speed_through_water_kn",
    "draught": "draught_m",
    "sea_depth": "sea_depth_m",
    "sea_temp": "sea_temp_c",
    "air_temp": "air_temp_c",
    "wave_height": "wave_height_m",
    "swell_height": "swell_height_m",
    "wave_dir": "wave_dir_rel",
    "swell_dir": "swell_dir_rel",
    "wind_dir": "wind_dir_rel",
    "wind_speed": "wind_speed_mps",
    "days_since_polish": "days_since_propeller_polish",
    "days_since_drydock": "days_since_dry_dock",
    "shaft_rpm": "shaft_rpm",
    "shaft_power": "shaft_power_kw",
}
CSV_COLUMNS = tuple(FIELD_TO_COLUMN.values())

#: Columns that may be absent from an input file entirely.
OPTIONAL_COLUMNS = frozenset({"air_temp_c", "shaft_rpm", "shaft_power_kw"})

ANGLE_FIELDS = ("wave_dir", "swell_dir", "wind_dir")
#: Every numeric feature field (excludes the two ground-truth columns).
FEATURE_FIELDS = tuple(f for f in FIELD_TO_COLUMN if f not in ("timestamp", "shaft_rpm", "shaft_power"))

# Fields rejected when negative; draught must be strictly positive.
_NONNEGATIVE_FIELDS = frozenset({
    "wave_height", "swell_height", "wind_speed",
    "days_since_polish", "days_since_drydock", "shaft_rpm",
})
_POSITIVE_FIELDS = frozenset({"draught"})


def normalize_angle(x):
    """Map an angle (radians) to the interval (-pi, pi]."""
    return np.pi - np.remainder(np.pi - np.asarray(x, dtype=float), 2.0 * np.pi)


def _check_field(name: str, value: float) -> None:
    if not math.isfinite(value):
        raise DomainError(f"{name} must be finite, got {value!r}")
    if name in _NONNEGATIVE_FIELDS and value < 0:
        raise DomainError(f"{name} must be >= 0, got {value}")
    if name in _POSITIVE_FIELDS and value <= 0:
        raise DomainError(f"{name} must be > 0, got {value}")


@dataclass(frozen=True)
class EnvironmentRecord:
    """One timestamped row of sensor, weather, and maintenance-age features.

    Any field may be ``None`` to mark a missing value in raw data. Non-missing
    fields are validated on construction and direction fields are normalized
    to (-pi, pi].
    """

    timestamp: Optional[datetime]
    speed_through_water: Optional[float]
    draught: Optional[float]
    sea_depth: Optional[float]
    sea_temp: Optional[float]
    air_temp: Optional[float]
    wave_height: Optional[float]
    swell_height: Optional[float]
    wave_dir: Optional[float]
    swell_dir: Optional[float]
    wind_dir: Optional[float]
    wind_speed: Optional[float]
    days_since_polish: Optional[float]
    days_since_drydock: Optional[float]
    shaft_rpm: Optional[float] = None
    shaft_power: Optional[float] = None

    def __post_init__(self) -> None:
        for f in fields(self):
            if f.name == "timestamp":
                continue
            value = getattr(self, f.name)
            if value is None:
                continue
            value = float(value)
            _check_field(f.name, value)
            if f.name in ANGLE_FIELDS:
                value = float(normalize_angle(value))
            object.__setattr__(self, f.name, value)

    def missing_fields(self, names: Iterable[str]) -> list[str]:
        """Names from ``names`` whose value is the missing marker."""
        return [n for n in names if getattr(self, n) is None]


@dataclass(frozen=True)
class Provenance:
    """Where a dataset came from and what each filter dropped."""

    source: str
    dropped: dict = field(default_factory=dict)
    notes: tuple = ()


@dataclass(frozen=True)
class Dataset:
    """An immutable, time-ordered collection of records plus provenance."""

    rows: tuple
    provenance: Provenance

    def __post_init__(self) -> None:
        ordered = tuple(sorted(
            self.rows,
            key=lambda r: (r.timestamp is None, r.timestamp or datetime.min.replace(tzinfo=timezone.utc)),
        ))
        object.__setattr__(self, "rows", ordered)

    def __len__(self) -> int:
        return len(self.rows)

    def __iter__(self) -> Iterator[EnvironmentRecord]:
        return iter(self.rows)

    def __getitem__(self, index):
        return self.rows[index]

    def column(self, field_name: str) -> np.ndarray:
        """One numeric field as a float array; missing markers become NaN."""
        if field_name not in FIELD_TO_COLUMN or field_name == "timestamp":
            raise SchemaError(f"unknown numeric field {field_name!r}")
        values = [getattr(r, field_name) for r in self.rows]
        return np.array([np.nan if v is None else v for v in values], dtype=float)

    def timestamps(self) -> list[Optional[datetime]]:
        return [r.timestamp for r in self.rows]


def _parse_timestamp(text: str) -> Optional[datetime]:
    text = text.strip()
    if not text:
        return None
    if text.endswith(("Z", "z")):
        text = text[:-1] + "+00:00"
    try:
        ts = datetime.fromisoformat(text)
    except ValueError:
        return None
    if ts.tzinfo is None:
        return ts.replace(tzinfo=timezone.utc)
    return ts.astimezone(timezone.utc)


def _parse_cell(field_name: str, text: str, degrees: bool) -> Optional[float]:
    text = text.strip()
    if not text:
        return None
    try:
        value = float(text)
    except ValueError:
        return None
    if not math.isfinite(value):
        return None
    if field_name in ANGLE_FIELDS and degrees:
        value = math.radians(value)
    # Out-of-domain numerics (negative wave height, zero draught) are treated
    # as missing rather than poisoning the record.
    try:
        _check_field(field_name, value)
    except DomainError:
        return None
    return value


def load_csv(path, *, angles: str = "radians", column_map: Optional[dict] = None) -> Dataset:
    """Read a schema CSV into a raw Dataset.

    Args:
        path: CSV file path.
        angles: "radians" (default) or "degrees" for the three direction columns.
        column_map: optional {schema column -> actual column} renaming for
            foreign exports.

    Returns:
        Raw Dataset; rows keep missing-value markers for preprocess to drop.

    Raises:
        SchemaError: a mandatory column is absent (named in the message).
        UsageError: the file is empty or the angle flag is invalid.
    """
    if angles not in ("radians", "degrees"):
        raise UsageError(f"angles must be 'radians' or 'degrees', got {angles!r}")
    degrees = angles == "degrees"
    column_map = column_map or {}
    path = Path(path)

    with open(path, newline="", encoding="utf-8") as handle:
        reader = csv.DictReader(handle)
        if reader.fieldnames is None:
            raise UsageError(f"{path}: empty file, no header row")
        present = set(reader.fieldnames)
        resolved = {col: column_map.get(col, col) for col in CSV_COLUMNS}
        for col, actual in resolved.items():
            if col not in OPTIONAL_COLUMNS and actual not in present:
                raise SchemaError(f"{path}: missing mandatory column {actual!r}")

        records = []
        for row in reader:
            values = {}
            for fname, col in FIELD_TO_COLUMN.items():
                actual = resolved[col]
                raw = row.get(actual)
                if raw is None:
                    values[fname] = None
                elif fname == "timestamp":
                    values[fname] = _parse_timestamp(raw)
                else:
                    values[fname] = _parse_cell(fname, raw, degrees)
            records.append(EnvironmentRecord(**values))

    return Dataset(rows=tuple(records), provenance=Provenance(source=str(path)))


def format_float(value: float) -> str:
    """Fixed 17-significant-digit formatting used for all numeric file output."""
    return format(float(value), ".17g")


def write_csv(dataset: Dataset, path) -> None:
    """Write a Dataset in the schema layout; missing markers become empty cells."""
    path = Path(path)
    with open(path, "w", newline="", encoding="utf-8") as handle:
        writer = csv.writer(handle)
        writer.writerow(CSV_COLUMNS)
        for record in dataset:
            cells = []
            for fname in FIELD_TO_COLUMN:
                value = getattr(record, fname)
                if value is None:
                    cells.append("")
                elif fname == "timestamp":
                    cells.append(value.isoformat())
                else:
                    cells.append(format_float(value))
            writer.writerow(cells)


def apply_air_temp_fallback(dataset: Dataset, mode: str = "constant", value: float = 15.0) -> Dataset:
    """Fill missing air_temp using a constant or the sea temperature proxy.

    The air-temperature column is optional in input files; physics evaluation
    requires it, so callers choose an explicit fallback rather than having one
    guessed silently.
    """
    if mode not in ("constant", "sea_temp"):
        raise UsageError(f"air_temp fallback mode must be 'constant' or 'sea_temp', got {mode!r}")
    rows = []
    filled = 0
    for record in dataset:
        if record.air_temp is None:
            fallback = value if mode == "constant" else record.sea_temp
            if fallback is not None:
                record = replace(record, air_temp=float(fallback))
                filled += 1
        rows.append(record)
    if filled == 0:
        return dataset
    note = f"air_temp fallback ({mode}) filled {filled} rows"
    prov = replace(dataset.provenance, notes=dataset.provenance.notes + (note,))
    return Dataset(rows=tuple(rows), provenance=prov)


def preprocess(raw: Dataset, *, speed_min: float = SPEED_MIN_KN, power_min: float = POWER_MIN_KW,
               require_power: bool = True, require_rpm: bool = True) -> Dataset:
    """Apply the missing-value, slow-speed, and low-power filters.

    A row is dropped if any required field is missing, else if
    speed_through_water < speed_min, else if shaft_power < power_min.
    Boundary rows (exactly speed_min or power_min) are kept. The filter log
    records counts per rule under keys "missing", "speed", "power".

    Raises:
        UsageError: every row was dropped.
    """
    required = list(FEATURE_FIELDS) + ["timestamp"]
    if require_power:
        required.append("shaft_power")
    if require_rpm:
        required.append("shaft_rpm")

    kept = []
    dropped = {"missing": 0, "speed": 0, "power": 0}
    for record in raw:
        if any(getattr(record, name) is None for name in required):
            dropped["missing"] += 1
        elif record.speed_through_water < speed_min:
            dropped["speed"] += 1
        elif require_power and record.shaft_power < power_min:
            dropped["power"] += 1
        else:
            kept.append(record)

    if not kept:
        raise UsageError("empty after preprocessing: every row was filtered out")

    merged = dict(raw.provenance.dropped)
    for rule, count in dropped.items():
        merged[rule] = merged.get(rule, 0) + count
    return Dataset(rows=tuple(kept), provenance=replace(raw.provenance, dropped=merged))


def chronological_split(dataset: Dataset, boundary: datetime, *, test_first: bool = False):
    """Split by timestamp: rows strictly before the boundary versus at/after.

    By default the earlier side is the training set. ``test_first=True``
    assigns the earlier side to test instead (reversed-chronology evaluation).

    Returns:
        (train, test) Datasets, both preserving row order.

    Raises:
        UsageError: either side is empty, or timestamps are missing.
    """
    if boundary.tzinfo is None:
        boundary = boundary.replace(tzinfo=timezone.utc)
    if any(r.timestamp is None for r in dataset):
        raise UsageError("chronological split requires every row to carry a timestamp")

    before = tuple(r for r in dataset if r.timestamp < boundary)
    after = tuple(r for r in dataset if r.timestamp >= boundary)
    if not before or not after:
        raise UsageError(f"split boundary {boundary.isoformat()} leaves an empty side "
                         f"({len(before)} before, {len(after)} at/after)")

    def _side(rows: tuple, tag: str) -> Dataset:
        prov = replace(dataset.provenance,
                       notes=dataset.provenance.notes + (f"{tag} of split at {boundary.isoformat()}",))
        return Dataset(rows=rows, provenance=prov)

    if test_first:
        return _side(after, "train"), _side(before, "test")
    return _side(before, "train"), _side(after, "test")


PREDICTED_RPM = "predicted_rpm"
_DIRECTION_FEATURES = frozenset(ANGLE_FIELDS)


def expand_feature_names(names: Sequence[str], encode_directions: bool = False) -> tuple:
    """Expanded column names; direction features become sin/cos pairs when encoding."""
    out = []
    for name in names:
        if encode_directions and name in _DIRECTION_FEATURES:
            out.extend((f"{name}:sin", f"{name}:cos"))
        else:
            out.append(name)
    return tuple(out)


def feature_matrix(rows: Sequence[EnvironmentRecord], names: Sequence[str], *,
                   rpm_model=None, encode_directions: bool = False) -> np.ndarray:
    """Assemble the (n_rows, n_features) matrix for the named features.

    ``predicted_rpm`` is resolved through ``rpm_model``; every other name must
    be a numeric record field. Missing values raise with the row index so the
    caller can trace unclean inputs.
    """
    rows = list(rows)
    for name in names:
        if name != PREDICTED_RPM and name not in FEATURE_FIELDS:
            raise SchemaError(f"unknown feature {name!r}")

    columns = {}
    if PREDICTED_RPM in names:
        if rpm_model is None:
            raise SchemaError(f"feature {PREDICTED_RPM!r} requested but no rpm model supplied")
        columns[PREDICTED_RPM] = np.asarray(rpm_model.evaluate_records(rows), dtype=float)
    for name in names:
        if name == PREDICTED_RPM:
            continue
        values = np.empty(len(rows))
        for i, record in enumerate(rows):
            v = getattr(record, name)
            if v is None:
                raise SchemaError(f"row {i}: missing value for feature {name!r}")
            values[i] = v
        columns[name] = values

    out = []
    for name in names:
        base = columns[name]
        if encode_directions and name in _DIRECTION_FEATURES:
            out.append(np.sin(base))
            out.append(np.cos(base))
        else:
            out.append(base)
    if not out:
        raise UsageError("feature list is empty")
    return np.column_stack(out)


@dataclass(eq=False)
class Standardizer:
    """Per-feature standardization plus min-max target normalization.

    Statistics come from training rows only; test rows are always transformed
    with the stored values.
    """

    feature_names: tuple
    mean: np.ndarray
    std: np.ndarray
    target_min: float
    target_max: float

    def transform(self, X: np.ndarray) -> np.ndarray:
        X = np.asarray(X, dtype=float)
        if X.ndim != 2 or X.shape[1] != len(self.feature_names):
            raise SchemaError(f"expected {len(self.feature_names)} feature columns, got shape {X.shape}")
        return (X - self.mean) / self.std

    def normalize_target(self, y: np.ndarray) -> np.ndarray:
        return (np.asarray(y, dtype=float) - self.target_min) / (self.target_max - self.target_min)

    def denormalize_target(self, y_norm: np.ndarray) -> np.ndarray:
        return np.asarray(y_norm, dtype=float) * (self.target_max - self.target_min) + self.target_min

    def __eq__(self, other) -> bool:
        if not isinstance(other, Standardizer):
            return NotImplemented
        return (self.feature_names == other.feature_names
                and np.array_equal(self.mean, other.mean)
                and np.array_equal(self.std, other.std)
                and self.target_min == other.target_min
                and self.target_max == other.target_max)

    def to_dict(self) -> dict:
        return {
            "feature_names": list(self.feature_names),
            "mean": [float(v) for v in self.mean],
            "std": [float(v) for v in self.std],
            "target_min": self.target_min,
            "target_max": self.target_max,
        }

    @classmethod
    def from_dict(cls, payload: dict) -> "Standardizer":
        return cls(
            feature_names=tuple(payload["feature_names"]),
            mean=np.asarray(payload["mean"], dtype=float),
            std=np.asarray(payload["std"], dtype=float),
            target_min=float(payload["target_min"]),
            target_max=float(payload["target_max"]),
        )


def fit_standardizer(train, groups=None, *, feature_names: Optional[Sequence[str]] = None,
                     rpm_model=None, encode_directions: bool = False) -> Standardizer:
    """Fit feature means/stds and the target min-max range on training rows only.

    Args:
        train: Dataset or sequence of records with shaft_power present.
        groups: object exposing ``all_features`` (network feature grouping), or None.
        feature_names: explicit feature list overriding ``groups``.
        rpm_model: required when the features include ``predicted_rpm``.
        encode_directions: expand direction features to sin/cos pairs.

    Raises:
        UsageError: empty input, a zero-variance feature (named), or a
            degenerate target range.
    """
    rows = list(train)
    if not rows:
        raise UsageError("cannot fit a standardizer on an empty dataset")
    if feature_names is None:
        if groups is None:
            raise UsageError("either groups or feature_names must be given")
        feature_names = tuple(groups.all_features)

    X = feature_matrix(rows, feature_names, rpm_model=rpm_model, encode_directions=encode_directions)
    expanded = expand_feature_names(feature_names, encode_directions)

    y = np.empty(len(rows))
    for i, record in enumerate(rows):
        if record.shaft_power is None:
            raise UsageError(f"row {i}: shaft_power required to fit the target normalizer")
        y[i] = record.shaft_power

    mean = X.mean(axis=0)
    std = X.std(axis=0)
    for name, s in zip(expanded, std):
        if s == 0.0:
            raise UsageError(f"feature {name!r} is constant on the training set")
    t_min, t_max = float(y.min()), float(y.max())
    if not t_max > t_min:
        raise UsageError("target has zero range on the training set")
    return Standardizer(feature_names=expanded, mean=mean, std=std,
                        target_min=t_min, target_max=t_max)

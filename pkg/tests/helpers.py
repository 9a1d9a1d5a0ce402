"""Shared builders for test fixtures."""
from __future__ import annotations

from datetime import datetime, timedelta, timezone

from shaftpower.data import Dataset, EnvironmentRecord, Provenance

BASE_TS = datetime(2022, 1, 1, tzinfo=timezone.utc)

_DEFAULTS = dict(
    speed_through_water=12.0,
    draught=9.0,
    sea_depth=500.0,
    sea_temp=14.0,
    air_temp=10.0,
    wave_height=1.5,
    swell_height=1.0,
    wave_dir=0.5,
    swell_dir=-0.4,
    wind_dir=1.0,
    wind_speed=6.0,
    days_since_polish=40.0,
    days_since_drydock=300.0,
    shaft_rpm=90.0,
    shaft_power=5000.0,
)


def make_record(i: int = 0, **overrides) -> EnvironmentRecord:
    fields = dict(_DEFAULTS)
    fields["timestamp"] = BASE_TS + timedelta(minutes=15 * i)
    fields.update(overrides)
    return EnvironmentRecord(**fields)


def make_dataset(rows, source: str = "test") -> Dataset:
    return Dataset(rows=tuple(rows), provenance=Provenance(source=source))

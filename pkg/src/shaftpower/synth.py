"""Synthetic voyage generation from known ground-truth physics and RPM models.

Every fitting and training claim in this package is verified against data
produced here: features are sampled from documented distributions, shaft
power follows the resistance formulas plus an optional multiplicative fouling
drift and noise, and RPM follows a hidden multiplicative polynomial model.
Generation is fully deterministic given the seed. Rows violating the
preprocessing thresholds (speed, power floor) are resampled rather than
clipped so distributions stay smooth near the boundaries.
"""
from __future__ import annotations

import math
from dataclasses import dataclass, field, replace
from datetime import datetime, timedelta, timezone
from typing import Optional, Sequence

import numpy as np

from . import physics
from .data import Dataset, EnvironmentRecord, Provenance, write_csv
from .exceptions import UsageError
from .physics import ResistanceCoefficients
from .rpm import MultiplicativePolyModel

DAY_SECONDS = 86400.0


def default_true_coefficients() -> ResistanceCoefficients:
    """Ground-truth resistance coefficients giving realistic multi-MW powers."""
    return ResistanceCoefficients(a=2.0, b=0.8, c=0.22, f_c=0.4, f_h=1.5, f_s=1.0, f_g=20.0)


def default_true_rpm_model() -> MultiplicativePolyModel:
    """Hidden RPM model around 75-105 rev/min over the default feature ranges."""
    return MultiplicativePolyModel(
        features=("speed_through_water", "draught", "wind_speed", "swell_height"),
        coefficients=(
            np.array([85.0, 12.0, 3.0, 0.8]),
            np.array([1.0, 0.05, 0.02, 0.0]),
            np.array([1.0, -0.03, 0.01, 0.0]),
            np.array([1.0, -0.04, 0.015, 0.0]),
        ),
        order=3,
        scale_offset=np.array([13.0, 10.0, 7.5, 1.5]),
        scale_factor=np.array([5.0, 3.0, 7.5, 1.5]),
    )


@dataclass
class SynthConfig:
    """Everything the generator needs: truth models, noise, events, ranges."""

    row_count: int = 1000
    seed: int = 0
    true_coefficients: ResistanceCoefficients = field(default_factory=default_true_coefficients)
    true_rpm_model: MultiplicativePolyModel = field(default_factory=default_true_rpm_model)
    noise_rel_std: float = 0.0
    rpm_noise_rel_std: float = 0.0
    fouling_drydock_gain: float = 0.0
    fouling_drydock_timescale_days: float = 365.0
    fouling_polish_gain: float = 0.0
    drydock_dates: tuple = ()
    polish_period_days: float = 182.0
    initial_days_since_drydock: float = 200.0
    initial_days_since_polish: float = 30.0
    start: datetime = datetime(2022, 1, 1, tzinfo=timezone.utc)
    cadence_minutes: float = 15.0
    speed_range: tuple = (8.0, 18.0)
    draught_range: tuple = (7.0, 13.0)
    sea_depth_range: tuple = (50.0, 3000.0)
    wave_height_weibull: tuple = (1.6, 1.3)
    swell_height_weibull: tuple = (1.8, 1.0)
    wind_speed_rayleigh_scale: float = 5.0
    air_temp_mean: float = 15.0
    air_temp_std: float = 7.0
    sea_temp_mean: float = 15.0
    sea_temp_std: float = 4.0
    min_speed_kn: float = 5.0
    min_power_kw: float = 500.0
    max_resample_rounds: int = 100

    def validate(self) -> None:
        if self.row_count < 1:
            raise UsageError(f"row_count must be >= 1, got {self.row_count}")
        if self.noise_rel_std < 0 or self.rpm_noise_rel_std < 0:
            raise UsageError("noise levels must be >= 0")
        if self.fouling_drydock_gain < 0 or self.fouling_polish_gain < 0:
            raise UsageError("fouling gains must be >= 0")
        if self.fouling_drydock_timescale_days <= 0:
            raise UsageError("fouling timescale must be > 0")
        if self.polish_period_days <= 0 or self.cadence_minutes <= 0:
            raise UsageError("polish period and cadence must be > 0")
        if self.initial_days_since_drydock < 0 or self.initial_days_since_polish < 0:
            raise UsageError("initial event ages must be >= 0")
        for name in ("speed_range", "draught_range", "sea_depth_range"):
            lo, hi = getattr(self, name)
            if not lo < hi:
                raise UsageError(f"{name} must be an increasing (low, high) pair")
        if self.speed_range[0] < self.min_speed_kn:
            raise UsageError(
                f"speed_range starts below the {self.min_speed_kn} kn floor; "
                "generated rows could never satisfy the speed filter")
        for name in ("wave_height_weibull", "swell_height_weibull"):
            shape, scale = getattr(self, name)
            if shape <= 0 or scale < 0:
                raise UsageError(f"{name} needs shape > 0 and scale >= 0")
        if self.wind_speed_rayleigh_scale < 0:
            raise UsageError("wind_speed_rayleigh_scale must be >= 0")
        if self.air_temp_std < 0 or self.sea_temp_std < 0:
            raise UsageError("temperature stds must be >= 0")
        if self.max_resample_rounds < 1:
            raise UsageError("max_resample_rounds must be >= 1")


def _epoch_days(ts: datetime) -> float:
    if ts.tzinfo is None:
        ts = ts.replace(tzinfo=timezone.utc)
    return ts.timestamp() / DAY_SECONDS


def _days_since_events(times_d: np.ndarray, event_times_d: Sequence[float],
                       anchor_d: float, initial_age: float) -> np.ndarray:
    """Sawtooth day counter: age since the latest event at or before each time.

    Times with no preceding event age from a virtual event ``initial_age``
    days before the anchor (the series start).
    """
    events = np.asarray(sorted(event_times_d), dtype=float)
    ages = times_d - (anchor_d - initial_age)
    if events.size:
        idx = np.searchsorted(events, times_d, side="right")
        has_event = idx > 0
        last = events[np.maximum(idx - 1, 0)]
        ages = np.where(has_event, times_d - last, ages)
    return ages


def _polish_event_days(start_d: float, end_d: float, period: float, initial_age: float) -> list:
    first = start_d - initial_age
    out = []
    k = 1
    while first + k * period <= end_d:
        out.append(first + k * period)
        k += 1
    return out


class _FeatureDraw:
    """One batch of sampled feature vectors, drawn in a fixed order."""

    __slots__ = ("speed", "draught", "sea_depth", "sea_temp", "air_temp",
                 "wave_height", "swell_height", "wave_dir", "swell_dir",
                 "wind_dir", "wind_speed", "eps_power", "eps_rpm")

    def __init__(self, rng: np.random.Generator, config: SynthConfig, n: int):
        self.speed = rng.uniform(*config.speed_range, n)
        self.draught = rng.uniform(*config.draught_range, n)
        self.sea_depth = rng.uniform(*config.sea_depth_range, n)
        self.sea_temp = rng.normal(config.sea_temp_mean, config.sea_temp_std, n)
        self.air_temp = rng.normal(config.air_temp_mean, config.air_temp_std, n)
        shape, scale = config.wave_height_weibull
        self.wave_height = scale * rng.weibull(shape, n)
        shape, scale = config.swell_height_weibull
        self.swell_height = scale * rng.weibull(shape, n)
        self.wave_dir = rng.uniform(-math.pi, math.pi, n)
        self.swell_dir = rng.uniform(-math.pi, math.pi, n)
        self.wind_dir = rng.uniform(-math.pi, math.pi, n)
        self.wind_speed = rng.rayleigh(config.wind_speed_rayleigh_scale, n)
        self.eps_power = rng.normal(0.0, config.noise_rel_std, n)
        self.eps_rpm = rng.normal(0.0, config.rpm_noise_rel_std, n)

    def overwrite(self, indices: np.ndarray, other: "_FeatureDraw") -> None:
        for name in self.__slots__:
            getattr(self, name)[indices] = getattr(other, name)

    def base_power(self, config: SynthConfig) -> np.ndarray:
        return physics.total_power(
            config.true_coefficients,
            speed=self.speed, draught=self.draught, air_temp=self.air_temp,
            wind_dir=self.wind_dir, wind_speed=self.wind_speed,
            wave_height=self.wave_height, wave_dir=self.wave_dir,
        )

    def rpm(self, config: SynthConfig) -> np.ndarray:
        model = config.true_rpm_model
        columns = []
        for name in model.features:
            mapped = _RPM_FIELD_MAP.get(name)
            if mapped is None:
                raise UsageError(f"true_rpm_model may not use feature {name!r}")
            columns.append(getattr(self, mapped))
        return model.evaluate_matrix(np.column_stack(columns)) * (1.0 + self.eps_rpm)


_RPM_FIELD_MAP = {
    "speed_through_water": "speed",
    "draught": "draught",
    "sea_depth": "sea_depth",
    "sea_temp": "sea_temp",
    "air_temp": "air_temp",
    "wave_height": "wave_height",
    "swell_height": "swell_height",
    "wave_dir": "wave_dir",
    "swell_dir": "swell_dir",
    "wind_dir": "wind_dir",
    "wind_speed": "wind_speed",
}


def fouling_multiplier(config: SynthConfig, days_drydock: np.ndarray,
                       days_polish: np.ndarray) -> np.ndarray:
    """1 + delta_foul with the saturating dry-dock term plus the linear polish term."""
    delta = (config.fouling_drydock_gain
             * (1.0 - np.exp(-np.asarray(days_drydock) / config.fouling_drydock_timescale_days))
             + config.fouling_polish_gain * np.asarray(days_polish) / 365.0)
    return 1.0 + delta


def _resample(rng: np.random.Generator, config: SynthConfig, draw: _FeatureDraw,
              power_of_draw, n: int) -> np.ndarray:
    """Redraw rows violating the floors until all pass; returns final power."""
    power = power_of_draw(draw)
    rpm = draw.rpm(config)
    bad = (power < config.min_power_kw) | (rpm <= 0) | (draw.speed < config.min_speed_kn)
    rounds = 0
    while np.any(bad):
        rounds += 1
        if rounds > config.max_resample_rounds:
            raise UsageError(
                f"could not satisfy the power/speed floors after {config.max_resample_rounds} "
                "resampling rounds; ranges and coefficients are incompatible")
        indices = np.flatnonzero(bad)
        fresh = _FeatureDraw(rng, config, indices.size)
        draw.overwrite(indices, fresh)
        power = power_of_draw(draw)
        rpm = draw.rpm(config)
        bad = (power < config.min_power_kw) | (rpm <= 0) | (draw.speed < config.min_speed_kn)
    return power


def _record(ts: datetime, draw: _FeatureDraw, i: int, days_p: float, days_d: float,
            rpm: float, power: float) -> EnvironmentRecord:
    return EnvironmentRecord(
        timestamp=ts,
        speed_through_water=float(draw.speed[i]),
        draught=float(draw.draught[i]),
        sea_depth=float(draw.sea_depth[i]),
        sea_temp=float(draw.sea_temp[i]),
        air_temp=float(draw.air_temp[i]),
        wave_height=float(draw.wave_height[i]),
        swell_height=float(draw.swell_height[i]),
        wave_dir=float(draw.wave_dir[i]),
        swell_dir=float(draw.swell_dir[i]),
        wind_dir=float(draw.wind_dir[i]),
        wind_speed=float(draw.wind_speed[i]),
        days_since_polish=float(days_p),
        days_since_drydock=float(days_d),
        shaft_rpm=float(rpm),
        shaft_power=float(power),
    )


def generate(config: SynthConfig) -> Dataset:
    """Generate a voyage Dataset at fixed cadence with ground-truth rpm and power.

    Power per row is physical_power(true_coefficients, row) scaled by the
    fouling multiplier and by (1 + eps) with eps ~ Normal(0, noise_rel_std).
    Day counters follow the sawtooth implied by the event schedule.
    """
    config.validate()
    rng = np.random.default_rng(config.seed)
    n = config.row_count

    timestamps = [config.start + timedelta(minutes=config.cadence_minutes * i) for i in range(n)]
    times_d = np.array([_epoch_days(t) for t in timestamps])
    start_d = _epoch_days(config.start)
    end_d = times_d[-1]

    polish_events = _polish_event_days(start_d, end_d, config.polish_period_days,
                                       config.initial_days_since_polish)
    dock_events = [_epoch_days(t) for t in config.drydock_dates]
    days_p = _days_since_events(times_d, polish_events, start_d, config.initial_days_since_polish)
    days_d = _days_since_events(times_d, dock_events, start_d, config.initial_days_since_drydock)

    foul = fouling_multiplier(config, days_d, days_p)
    draw = _FeatureDraw(rng, config, n)
    power = _resample(rng, config, draw,
                      lambda d: d.base_power(config) * foul * (1.0 + d.eps_power), n)
    rpm = draw.rpm(config)

    rows = tuple(
        _record(timestamps[i], draw, i, days_p[i], days_d[i], rpm[i], power[i])
        for i in range(n)
    )
    return Dataset(rows=rows, provenance=Provenance(
        source=f"synthetic(seed={config.seed}, rows={n})"))


def generate_paired_drydock(config: SynthConfig, window_days: float = 30.0) -> tuple:
    """Paired before/after samples around the first dry-dock date.

    Each pair shares its feature vector, noise draw, and polish age; only the
    dry-dock day counter differs. With a positive dry-dock fouling gain every
    "before" power exceeds its paired "after" power, which is the oracle for
    drift-sensitivity checks.
    """
    config.validate()
    if not config.drydock_dates:
        raise UsageError("paired generation needs at least one drydock date")
    if window_days <= 0:
        raise UsageError("window_days must be > 0")

    rng = np.random.default_rng(config.seed)
    n = config.row_count
    dock = config.drydock_dates[0]
    dock_d = _epoch_days(dock)
    start_d = _epoch_days(config.start)

    draw = _FeatureDraw(rng, config, n)
    offsets = rng.uniform(0.0, window_days, n)
    t_before = dock_d - offsets
    t_after = dock_d + offsets

    earlier_docks = [d for d in (_epoch_days(t) for t in config.drydock_dates) if d < dock_d - window_days]
    days_d_before = _days_since_events(t_before, earlier_docks, start_d, config.initial_days_since_drydock)
    days_d_after = offsets
    polish_events = _polish_event_days(start_d, max(float(t_after.max()), start_d),
                                       config.polish_period_days, config.initial_days_since_polish)
    days_p = _days_since_events(t_before, polish_events, start_d, config.initial_days_since_polish)

    foul_before = fouling_multiplier(config, days_d_before, days_p)
    foul_after = fouling_multiplier(config, days_d_after, days_p)

    def paired_power(d: _FeatureDraw) -> np.ndarray:
        base = d.base_power(config) * (1.0 + d.eps_power)
        # The resampling floor must hold on both sides; gate on the lower one.
        return np.minimum(base * foul_before, base * foul_after)

    _resample(rng, config, draw, paired_power, n)
    base = draw.base_power(config) * (1.0 + draw.eps_power)
    rpm = draw.rpm(config)

    def _dataset(times: np.ndarray, days_d: np.ndarray, power: np.ndarray, tag: str) -> Dataset:
        rows = tuple(
            _record(datetime.fromtimestamp(times[i] * DAY_SECONDS, tz=timezone.utc),
                    draw, i, days_p[i], days_d[i], rpm[i], power[i])
            for i in range(n)
        )
        return Dataset(rows=rows, provenance=Provenance(
            source=f"synthetic-paired-{tag}(seed={config.seed}, rows={n})"))

    before = _dataset(t_before, days_d_before, base * foul_before, "before")
    after = _dataset(t_after, days_d_after, base * foul_after, "after")
    return before, after


def export_csv(dataset: Dataset, path) -> None:
    """Write the dataset in the documented CSV schema (17-digit round-trip safe)."""
    write_csv(dataset, path)


def config_to_dict(config: SynthConfig) -> dict:
    payload = {
        "row_count": config.row_count,
        "seed": config.seed,
        "true_coefficients": config.true_coefficients.to_dict(),
        "true_rpm_model": config.true_rpm_model.to_dict(),
        "noise_rel_std": config.noise_rel_std,
        "rpm_noise_rel_std": config.rpm_noise_rel_std,
        "fouling_drydock_gain": config.fouling_drydock_gain,
        "fouling_drydock_timescale_days": config.fouling_drydock_timescale_days,
        "fouling_polish_gain": config.fouling_polish_gain,
        "drydock_dates": [t.isoformat() for t in config.drydock_dates],
        "polish_period_days": config.polish_period_days,
        "initial_days_since_drydock": config.initial_days_since_drydock,
        "initial_days_since_polish": config.initial_days_since_polish,
        "start": config.start.isoformat(),
        "cadence_minutes": config.cadence_minutes,
        "speed_range": list(config.speed_range),
        "draught_range": list(config.draught_range),
        "sea_depth_range": list(config.sea_depth_range),
        "wave_height_weibull": list(config.wave_height_weibull),
        "swell_height_weibull": list(config.swell_height_weibull),
        "wind_speed_rayleigh_scale": config.wind_speed_rayleigh_scale,
        "air_temp_mean": config.air_temp_mean,
        "air_temp_std": config.air_temp_std,
        "sea_temp_mean": config.sea_temp_mean,
        "sea_temp_std": config.sea_temp_std,
        "min_speed_kn": config.min_speed_kn,
        "min_power_kw": config.min_power_kw,
        "max_resample_rounds": config.max_resample_rounds,
    }
    return payload


def _parse_iso(ts: str) -> datetime:
    if ts.endswith(("Z", "z")):
        ts = ts[:-1] + "+00:00"
    parsed = datetime.fromisoformat(ts)
    return parsed.replace(tzinfo=timezone.utc) if parsed.tzinfo is None else parsed


def config_from_dict(payload: dict) -> SynthConfig:
    """Build a SynthConfig from a JSON document; absent keys keep defaults."""
    config = SynthConfig()
    kwargs = {}
    for key, value in payload.items():
        if key == "true_coefficients":
            kwargs[key] = ResistanceCoefficients.from_dict(value)
        elif key == "true_rpm_model":
            kwargs[key] = MultiplicativePolyModel.from_dict(value)
        elif key == "drydock_dates":
            kwargs[key] = tuple(_parse_iso(t) for t in value)
        elif key == "start":
            kwargs[key] = _parse_iso(value)
        elif key in ("speed_range", "draught_range", "sea_depth_range",
                     "wave_height_weibull", "swell_height_weibull"):
            kwargs[key] = tuple(float(v) for v in value)
        elif hasattr(config, key):
            kwargs[key] = type(getattr(config, key))(value)
        else:
            raise UsageError(f"unknown generator config key {key!r}")
    return replace(config, **kwargs)

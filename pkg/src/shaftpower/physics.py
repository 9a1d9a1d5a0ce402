"""Empirical resistance formulas and total physical shaft power.

All functions are pure. They accept scalars or numpy arrays (broadcast
elementwise) and return a Python float for scalar inputs. Units are fixed at
the interface: knots for speed, meters for draught and wave height, m/s for
wind speed, radians for relative directions, kW-equivalent for power. The
fitted coefficients absorb any remaining conversion constants.
"""
from __future__ import annotations

from dataclasses import MISSING, dataclass, fields
from typing import TYPE_CHECKING

import numpy as np

from .exceptions import DomainError, SchemaError

if TYPE_CHECKING:
    from .data import EnvironmentRecord

ABSOLUTE_ZERO_C = -273.15
GAMMA_DEFAULT = 2.5
WATER_DENSITY_DEFAULT = 1.0

# Angular attenuation of the head-wave component: 0.667 + 0.333*cos(d).
WAVE_DIR_BASE = 0.667
WAVE_DIR_SPAN = 0.333


@dataclass(frozen=True)
class ResistanceCoefficients:
    """The seven learnable resistance parameters plus fixed constants.

    a, b, c parameterize calm-water resistance; f_c, f_h, f_s the wind drag
    coefficient; f_g the wave term. gamma and water_density are fixed
    constants (water_density multiplies f_g, so only the product is
    identifiable; it defaults to 1 to avoid a spuriously free parameter).
    """

    a: float
    b: float
    c: float
    f_c: float
    f_h: float
    f_s: float
    f_g: float
    gamma: float = GAMMA_DEFAULT
    water_density: float = WATER_DENSITY_DEFAULT

    def __post_init__(self) -> None:
        for f in fields(self):
            value = getattr(self, f.name)
            if not isinstance(value, (int, float)) or not np.isfinite(value):
                raise DomainError(f"coefficient {f.name} must be a finite number, got {value!r}")
            object.__setattr__(self, f.name, float(value))
        if self.c <= 0:
            raise DomainError(f"c must be > 0, got {self.c}")
        if self.f_g < 0:
            raise DomainError(f"f_g must be >= 0, got {self.f_g}")
        if not 0.0 <= self.f_c <= 1.0:
            raise DomainError(f"f_c must lie in [0, 1], got {self.f_c}")
        if self.gamma <= 0:
            raise DomainError(f"gamma must be > 0, got {self.gamma}")
        if self.water_density <= 0:
            raise DomainError(f"water_density must be > 0, got {self.water_density}")

    def to_dict(self) -> dict:
        return {f.name: getattr(self, f.name) for f in fields(self)}

    @classmethod
    def from_dict(cls, payload: dict) -> "ResistanceCoefficients":
        names = {f.name for f in fields(cls)}
        unknown = set(payload) - names
        if unknown:
            raise SchemaError(f"unknown coefficient keys: {sorted(unknown)}")
        missing = {f.name for f in fields(cls) if f.default is MISSING} - set(payload)
        if missing:
            raise SchemaError(f"missing coefficient keys: {sorted(missing)}")
        return cls(**payload)


@dataclass(frozen=True)
class ResistanceBreakdown:
    """Per-component resistance forces and the resulting total power."""

    calm: float
    wind: float
    wave: float
    total_power: float


def _validated(name: str, value, *, minimum=None, strict=False):
    arr = np.asarray(value, dtype=float)
    if not np.all(np.isfinite(arr)):
        raise DomainError(f"{name} must be finite")
    if minimum is not None:
        bad = arr <= minimum if strict else arr < minimum
        if np.any(bad):
            op = ">" if strict else ">="
            raise DomainError(f"{name} must be {op} {minimum}")
    return arr


def _scalar_like(result: np.ndarray, *inputs) -> float | np.ndarray:
    if all(np.ndim(v) == 0 for v in inputs):
        return float(result)
    return result


def air_density(air_temp) -> float | np.ndarray:
    """Dimensionless air density rho = 1 / (1 + t_air / 273.15)."""
    t = _validated("air_temp", air_temp, minimum=ABSOLUTE_ZERO_C, strict=True)
    rho = 1.0 / (1.0 + t / 273.15)
    return _scalar_like(rho, air_temp)


def calm_water_resistance(coeffs: ResistanceCoefficients, draught, speed) -> float | np.ndarray:
    """Calm-water resistance c * (a + T) * (b + V)^3 / V. Requires V > 0."""
    t = _validated("draught", draught)
    v = _validated("speed", speed, minimum=0.0, strict=True)
    r = coeffs.c * (coeffs.a + t) * (coeffs.b + v) ** 3 / v
    return _scalar_like(r, draught, speed)


def wind_drag_coefficient(coeffs: ResistanceCoefficients, air_temp, wind_dir) -> float | np.ndarray:
    """Drag coefficient C_x combining cylinder, headwind and sidewind factors."""
    d = _validated("wind_dir", wind_dir)
    rho = air_density(air_temp)
    shape = coeffs.f_c * coeffs.f_h + (1.0 - coeffs.f_c) * (
        coeffs.f_h * np.abs(np.cos(d)) + coeffs.f_s * np.abs(np.sin(d))
    )
    return _scalar_like(np.asarray(rho * shape), air_temp, wind_dir)


def wind_resistance(coeffs: ResistanceCoefficients, air_temp, wind_dir, wind_speed) -> float | np.ndarray:
    """Signed wind resistance C_x * v_wind^2 * cos(d_wind).

    Negative for tailwind angles (|d| > pi/2); the sign is preserved so total
    power may legitimately drop with a following wind.
    """
    v = _validated("wind_speed", wind_speed, minimum=0.0)
    d = _validated("wind_dir", wind_dir)
    cx = wind_drag_coefficient(coeffs, air_temp, wind_dir)
    r = np.asarray(cx) * v**2 * np.cos(d)
    return _scalar_like(r, air_temp, wind_dir, wind_speed)


def head_wave_resistance(coeffs: ResistanceCoefficients, wave_height) -> float | np.ndarray:
    """Head-wave resistance h^gamma * f_g * d_water. Requires h >= 0."""
    h = _validated("wave_height", wave_height, minimum=0.0)
    r = h**coeffs.gamma * coeffs.f_g * coeffs.water_density
    return _scalar_like(r, wave_height)


def wave_resistance(coeffs: ResistanceCoefficients, wave_height, wave_dir) -> float | np.ndarray:
    """Wave resistance: head component scaled by 0.667 + 0.333*cos(d_wave).

    The angular factor lies in [0.334, 1.0], so the result is nonnegative and
    never exceeds the head-wave value.
    """
    d = _validated("wave_dir", wave_dir)
    head = head_wave_resistance(coeffs, wave_height)
    r = np.asarray(head) * (WAVE_DIR_BASE + WAVE_DIR_SPAN * np.cos(d))
    return _scalar_like(r, wave_height, wave_dir)


def total_power(coeffs: ResistanceCoefficients, *, speed, draught, air_temp,
                wind_dir, wind_speed, wave_height, wave_dir) -> float | np.ndarray:
    """Total power (R_calm + R_wind + R_wave) * V for scalar or array inputs."""
    calm = calm_water_resistance(coeffs, draught, speed)
    wind = wind_resistance(coeffs, air_temp, wind_dir, wind_speed)
    wave = wave_resistance(coeffs, wave_height, wave_dir)
    total = (np.asarray(calm) + np.asarray(wind) + np.asarray(wave)) * np.asarray(speed, dtype=float)
    return _scalar_like(total, speed, draught, air_temp, wind_dir, wind_speed, wave_height, wave_dir)


def physical_power(coeffs: ResistanceCoefficients, record: "EnvironmentRecord") -> ResistanceBreakdown:
    """Evaluate the full resistance breakdown for one record.

    Args:
        coeffs: fitted or ground-truth resistance coefficients.
        record: environment record supplying V, T, t_air, wind and wave fields.

    Returns:
        ResistanceBreakdown with the three component forces and
        total_power = (calm + wind + wave) * V.

    Raises:
        SchemaError: a required field is missing (air_temp with no fallback applied).
        DomainError: a field violates a formula domain (V <= 0, h < 0, ...).
    """
    needed = ("speed_through_water", "draught", "air_temp", "wind_dir",
              "wind_speed", "wave_height", "wave_dir")
    for name in needed:
        if getattr(record, name) is None:
            raise SchemaError(f"record field {name} is missing; physics evaluation needs it")
    calm = calm_water_resistance(coeffs, record.draught, record.speed_through_water)
    wind = wind_resistance(coeffs, record.air_temp, record.wind_dir, record.wind_speed)
    wave = wave_resistance(coeffs, record.wave_height, record.wave_dir)
    return ResistanceBreakdown(
        calm=calm,
        wind=wind,
        wave=wave,
        total_power=(calm + wind + wave) * record.speed_through_water,
    )

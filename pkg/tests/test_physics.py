import math

import numpy as np
import pytest
from hypothesis import given, strategies as st

from helpers import make_record
from shaftpower.exceptions import DomainError, SchemaError
from shaftpower.physics import (
    ResistanceCoefficients,
    air_density,
    calm_water_resistance,
    head_wave_resistance,
    physical_power,
    total_power,
    wave_resistance,
    wind_drag_coefficient,
    wind_resistance,
)

TOL = 1e-12


def coeffs(**overrides) -> ResistanceCoefficients:
    base = dict(a=1.0, b=1.0, c=1.0, f_c=0.5, f_h=1.0, f_s=1.0, f_g=1.0)
    base.update(overrides)
    return ResistanceCoefficients(**base)


class TestAirDensity:
    def test_zero_celsius_is_one(self):
        assert abs(air_density(0.0) - 1.0) < TOL

    def test_half_density_point(self):
        assert abs(air_density(273.15) - 0.5) < TOL

    def test_twenty_celsius(self):
        assert abs(air_density(20.0) - 273.15 / 293.15) < TOL

    def test_rejects_at_or_below_absolute_zero(self):
        with pytest.raises(DomainError):
            air_density(-273.15)
        with pytest.raises(DomainError):
            air_density(-400.0)

    def test_rejects_non_finite(self):
        with pytest.raises(DomainError):
            air_density(float("nan"))

    @given(st.floats(min_value=-100.0, max_value=60.0), st.floats(min_value=1e-6, max_value=50.0))
    def test_strictly_decreasing(self, t, dt):
        assert air_density(t + dt) < air_density(t)


class TestCalmWaterResistance:
    def test_unit_case(self):
        assert abs(calm_water_resistance(coeffs(a=0, b=0, c=1), 1.0, 2.0) - 4.0) < TOL

    def test_integer_case(self):
        assert abs(calm_water_resistance(coeffs(a=1, b=1, c=2), 2.0, 1.0) - 48.0) < TOL

    def test_fractional_case(self):
        expected = 0.01 * 9.5 * 14.0**3 / 12.0
        assert abs(calm_water_resistance(coeffs(a=0.5, b=2, c=0.01), 9.0, 12.0) - expected) < TOL

    def test_rejects_nonpositive_speed(self):
        with pytest.raises(DomainError):
            calm_water_resistance(coeffs(), 9.0, 0.0)
        with pytest.raises(DomainError):
            calm_water_resistance(coeffs(), 9.0, -3.0)

    @given(st.floats(min_value=0.1, max_value=10.0), st.floats(min_value=1.0, max_value=20.0),
           st.floats(min_value=0.5, max_value=4.0))
    def test_quadratic_speed_scaling_without_offsets(self, draught, speed, k):
        # a = b = 0 reduces the formula to c*T*V^2, so scaling V by k scales R by k^2.
        c = coeffs(a=0.0, b=0.0)
        base = calm_water_resistance(c, draught, speed)
        scaled = calm_water_resistance(c, draught, k * speed)
        assert scaled == pytest.approx(k**2 * base, rel=1e-9)


class TestWindDrag:
    def test_full_cylinder_factor(self):
        assert abs(wind_drag_coefficient(coeffs(f_c=1, f_h=3, f_s=7), 0.0, 1.234) - 3.0) < TOL

    def test_pure_headwind(self):
        assert abs(wind_drag_coefficient(coeffs(f_c=0, f_h=2, f_s=4), 0.0, 0.0) - 2.0) < TOL

    def test_beam_wind_mixture(self):
        got = wind_drag_coefficient(coeffs(f_c=0.5, f_h=2, f_s=4), 0.0, math.pi / 2)
        assert abs(got - 3.0) < TOL


class TestWindResistance:
    def test_zero_wind_speed(self):
        assert wind_resistance(coeffs(), 0.0, 0.7, 0.0) == 0.0

    def test_beam_wind_gives_zero_thrust(self):
        assert abs(wind_resistance(coeffs(f_c=1, f_h=3), 0.0, math.pi / 2, 10.0)) < TOL

    def test_headwind_hundred(self):
        assert abs(wind_resistance(coeffs(f_c=1, f_h=1), 0.0, 0.0, 10.0) - 100.0) < TOL

    def test_tailwind_is_negative(self):
        assert wind_resistance(coeffs(), 0.0, math.pi, 8.0) < 0.0

    def test_rejects_negative_wind_speed(self):
        with pytest.raises(DomainError):
            wind_resistance(coeffs(), 0.0, 0.0, -1.0)


class TestWaveResistance:
    def test_zero_height(self):
        assert head_wave_resistance(coeffs(), 0.0) == 0.0

    def test_unit_height(self):
        assert abs(head_wave_resistance(coeffs(f_g=1), 1.0) - 1.0) < TOL

    def test_scaled_case(self):
        c = ResistanceCoefficients(a=1, b=1, c=1, f_c=0.5, f_h=1, f_s=1, f_g=0.5,
                                   water_density=2.0)
        assert abs(head_wave_resistance(c, 4.0) - 32.0) < TOL

    def test_head_sea_keeps_full_head_resistance(self):
        c = coeffs(f_g=0.8)
        assert wave_resistance(c, 2.0, 0.0) == pytest.approx(head_wave_resistance(c, 2.0), abs=TOL)

    def test_following_sea_factor(self):
        c = coeffs(f_g=1.0)
        got = wave_resistance(c, 1.0, math.pi)
        assert abs(got - 0.334) < TOL

    def test_beam_sea(self):
        assert abs(wave_resistance(coeffs(f_g=1.0), 1.0, math.pi / 2) - 0.667) < TOL

    def test_rejects_negative_height(self):
        with pytest.raises(DomainError):
            head_wave_resistance(coeffs(), -0.1)

    @given(st.floats(min_value=0.0, max_value=8.0), st.floats(min_value=-math.pi, max_value=math.pi))
    def test_never_exceeds_head_resistance(self, h, d):
        c = coeffs(f_g=0.7)
        assert wave_resistance(c, h, d) <= head_wave_resistance(c, h) + 1e-15

    @given(st.floats(min_value=0.0, max_value=6.0), st.floats(min_value=0.01, max_value=2.0),
           st.floats(min_value=-math.pi, max_value=math.pi))
    def test_non_decreasing_in_height(self, h, dh, d):
        c = coeffs(f_g=0.7)
        assert wave_resistance(c, h + dh, d) >= wave_resistance(c, h, d) - 1e-15


class TestPhysicalPower:
    def test_calm_only_when_wind_and_wave_vanish(self):
        record = make_record(wind_speed=0.0, wave_height=0.0)
        breakdown = physical_power(coeffs(), record)
        calm = calm_water_resistance(coeffs(), record.draught, record.speed_through_water)
        assert breakdown.wind == 0.0
        assert breakdown.wave == 0.0
        assert breakdown.total_power == calm * record.speed_through_water

    def test_matches_step_by_step_oracle(self):
        c = ResistanceCoefficients(a=2.0, b=0.8, c=0.22, f_c=0.4, f_h=1.5, f_s=1.0, f_g=20.0)
        record = make_record(speed_through_water=13.5, draught=8.2, air_temp=12.0,
                             wind_dir=0.9, wind_speed=7.5, wave_height=2.1, wave_dir=-0.6)
        breakdown = physical_power(c, record)

        rho = 1.0 / (1.0 + 12.0 / 273.15)
        r_calm = 0.22 * (2.0 + 8.2) * (0.8 + 13.5) ** 3 / 13.5
        cx = rho * (0.4 * 1.5 + 0.6 * (1.5 * abs(math.cos(0.9)) + 1.0 * abs(math.sin(0.9))))
        r_wind = cx * 7.5**2 * math.cos(0.9)
        r_head = 2.1**2.5 * 20.0 * 1.0
        r_wave = r_head * (0.667 + 0.333 * math.cos(-0.6))
        expected = (r_calm + r_wind + r_wave) * 13.5

        assert breakdown.calm == pytest.approx(r_calm, rel=TOL)
        assert breakdown.wind == pytest.approx(r_wind, rel=TOL)
        assert breakdown.wave == pytest.approx(r_wave, rel=TOL)
        assert breakdown.total_power == pytest.approx(expected, rel=TOL)

    def test_total_is_component_sum_times_speed(self):
        record = make_record()
        b = physical_power(coeffs(), record)
        expected = (b.calm + b.wind + b.wave) * record.speed_through_water
        assert abs(b.total_power - expected) <= math.ulp(expected)

    def test_deterministic(self):
        record = make_record()
        assert physical_power(coeffs(), record) == physical_power(coeffs(), record)

    def test_missing_air_temp_is_schema_error(self):
        with pytest.raises(SchemaError):
            physical_power(coeffs(), make_record(air_temp=None))


class TestBatchEvaluation:
    def test_total_power_matches_per_row_calls(self):
        rng = np.random.default_rng(5)
        n = 64
        speed = rng.uniform(6, 18, n)
        draught = rng.uniform(7, 13, n)
        air = rng.uniform(-5, 30, n)
        wind_dir = rng.uniform(-np.pi, np.pi, n)
        wind = rng.uniform(0, 20, n)
        wave_h = rng.uniform(0, 5, n)
        wave_dir = rng.uniform(-np.pi, np.pi, n)
        c = coeffs(a=2.0, c=0.3, f_g=15.0)
        batch = total_power(c, speed=speed, draught=draught, air_temp=air,
                            wind_dir=wind_dir, wind_speed=wind, wave_height=wave_h,
                            wave_dir=wave_dir)
        singles = [total_power(c, speed=speed[i], draught=draught[i], air_temp=air[i],
                               wind_dir=wind_dir[i], wind_speed=wind[i],
                               wave_height=wave_h[i], wave_dir=wave_dir[i])
                   for i in range(n)]
        # Vectorized cos/sin kernels and their scalar counterparts may differ
        # in the last ulp, so the comparison is tight-relative, not bitwise.
        np.testing.assert_allclose(batch, np.array(singles), rtol=1e-12, atol=0.0)

    def test_scalar_inputs_give_python_floats(self):
        value = air_density(10.0)
        assert isinstance(value, float)


class TestResistanceCoefficients:
    def test_rejects_nonpositive_scale(self):
        with pytest.raises(DomainError):
            coeffs(c=0.0)

    def test_rejects_cylinder_factor_outside_unit_interval(self):
        with pytest.raises(DomainError):
            coeffs(f_c=1.5)
        with pytest.raises(DomainError):
            coeffs(f_c=-0.1)

    def test_rejects_negative_wave_factor(self):
        with pytest.raises(DomainError):
            coeffs(f_g=-1.0)

    def test_rejects_non_finite(self):
        with pytest.raises(DomainError):
            coeffs(a=float("inf"))

    def test_dict_round_trip(self):
        c = coeffs(a=2.5, f_g=12.0)
        assert ResistanceCoefficients.from_dict(c.to_dict()) == c

    def test_from_dict_rejects_unknown_key(self):
        payload = coeffs().to_dict()
        payload["extra"] = 1.0
        with pytest.raises(SchemaError):
            ResistanceCoefficients.from_dict(payload)

    def test_from_dict_rejects_missing_key(self):
        payload = coeffs().to_dict()
        del payload["f_g"]
        with pytest.raises(SchemaError):
            ResistanceCoefficients.from_dict(payload)

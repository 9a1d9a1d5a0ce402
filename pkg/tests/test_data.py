import math
from datetime import timedelta

import numpy as np
import pytest
from hypothesis import given, strategies as st

from helpers import BASE_TS, make_dataset, make_record
from shaftpower.data import (
    CSV_COLUMNS,
    EnvironmentRecord,
    Standardizer,
    apply_air_temp_fallback,
    chronological_split,
    expand_feature_names,
    feature_matrix,
    fit_standardizer,
    load_csv,
    normalize_angle,
    preprocess,
    write_csv,
)
from shaftpower.exceptions import DomainError, SchemaError, UsageError

HEADER = ",".join(CSV_COLUMNS)


def row_text(i=0, *, speed="12.0", power="5000.0", rpm="90.0", wind_dir="1.0", wave="1.5"):
    ts = (BASE_TS + timedelta(minutes=15 * i)).isoformat()
    return (f"{ts},{speed},9.0,500.0,14.0,10.0,{wave},1.0,0.5,-0.4,{wind_dir},6.0,"
            f"40.0,300.0,{rpm},{power}")


def write_fixture(path, rows):
    path.write_text("\n".join([HEADER] + rows) + "\n", encoding="utf-8")
    return path


class TestNormalizeAngle:
    def test_pi_maps_to_pi(self):
        assert normalize_angle(math.pi) == pytest.approx(math.pi)

    def test_negative_pi_maps_to_pi(self):
        # The interval is half-open at -pi.
        assert normalize_angle(-math.pi) == pytest.approx(math.pi)

    def test_wraps_three_half_pi(self):
        assert normalize_angle(3 * math.pi / 2) == pytest.approx(-math.pi / 2)

    @given(st.floats(min_value=-1e3, max_value=1e3))
    def test_range_and_angle_identity(self, x):
        out = normalize_angle(x)
        assert -math.pi < out <= math.pi
        assert math.cos(out) == pytest.approx(math.cos(x), abs=1e-9)
        assert math.sin(out) == pytest.approx(math.sin(x), abs=1e-9)
        assert normalize_angle(out) == pytest.approx(out, abs=1e-12)


class TestEnvironmentRecord:
    def test_angles_normalized_at_construction(self):
        record = make_record(wind_dir=3 * math.pi / 2)
        assert record.wind_dir == pytest.approx(-math.pi / 2)

    def test_rejects_negative_wave_height(self):
        with pytest.raises(DomainError):
            make_record(wave_height=-0.5)

    def test_rejects_nonpositive_draught(self):
        with pytest.raises(DomainError):
            make_record(draught=0.0)

    def test_rejects_negative_day_counters(self):
        with pytest.raises(DomainError):
            make_record(days_since_polish=-1.0)

    def test_rejects_non_finite(self):
        with pytest.raises(DomainError):
            make_record(speed_through_water=float("nan"))

    def test_missing_markers_are_allowed(self):
        record = make_record(shaft_power=None, air_temp=None)
        assert record.shaft_power is None
        assert record.air_temp is None


class TestLoadCsv:
    def test_well_formed_file(self, tmp_path):
        path = write_fixture(tmp_path / "ok.csv", [row_text(i) for i in range(3)])
        dataset = load_csv(path)
        assert len(dataset) == 3
        assert dataset[0].speed_through_water == 12.0
        assert dataset[0].timestamp == BASE_TS
        assert sum(dataset.provenance.dropped.values()) == 0

    def test_blank_cell_becomes_missing_marker(self, tmp_path):
        path = write_fixture(tmp_path / "blank.csv", [row_text(power="")])
        dataset = load_csv(path)
        assert dataset[0].shaft_power is None

    def test_unparseable_cell_becomes_missing_marker(self, tmp_path):
        path = write_fixture(tmp_path / "bad.csv", [row_text(power="n/a")])
        assert load_csv(path)[0].shaft_power is None

    def test_out_of_domain_cell_becomes_missing_marker(self, tmp_path):
        path = write_fixture(tmp_path / "neg.csv", [row_text(wave="-2.0")])
        assert load_csv(path)[0].wave_height is None

    def test_degrees_flag_converts(self, tmp_path):
        path = write_fixture(tmp_path / "deg.csv", [row_text(wind_dir="180")])
        dataset = load_csv(path, angles="degrees")
        assert dataset[0].wind_dir == pytest.approx(math.pi)

    def test_missing_column_names_it(self, tmp_path):
        path = tmp_path / "short.csv"
        cols = [c for c in CSV_COLUMNS if c != "draught_m"]
        path.write_text(",".join(cols) + "\n", encoding="utf-8")
        with pytest.raises(SchemaError, match="draught_m"):
            load_csv(path)

    def test_empty_file_is_usage_error(self, tmp_path):
        path = tmp_path / "empty.csv"
        path.write_text("", encoding="utf-8")
        with pytest.raises(UsageError):
            load_csv(path)

    def test_column_map_renames(self, tmp_path):
        header = HEADER.replace("shaft_power_kw", "POWER")
        path = tmp_path / "mapped.csv"
        path.write_text(header + "\n" + row_text() + "\n", encoding="utf-8")
        dataset = load_csv(path, column_map={"shaft_power_kw": "POWER"})
        assert dataset[0].shaft_power == 5000.0

    def test_rows_sorted_by_timestamp(self, tmp_path):
        path = write_fixture(tmp_path / "shuffled.csv", [row_text(2), row_text(0), row_text(1)])
        dataset = load_csv(path)
        stamps = dataset.timestamps()
        assert stamps == sorted(stamps)


class TestPreprocess:
    def test_mixed_fixture_counts(self):
        rows = [make_record(i) for i in range(7)]
        rows.append(make_record(7, shaft_power=None))
        rows.append(make_record(8, speed_through_water=4.9))
        rows.append(make_record(9, shaft_power=450.0))
        clean = preprocess(make_dataset(rows))
        assert len(clean) == 7
        assert clean.provenance.dropped == {"missing": 1, "speed": 1, "power": 1}

    def test_boundary_rows_kept(self):
        rows = [make_record(0, speed_through_water=5.0), make_record(1, shaft_power=500.0)]
        clean = preprocess(make_dataset(rows))
        assert len(clean) == 2

    def test_idempotent(self):
        rows = [make_record(i) for i in range(4)] + [make_record(4, speed_through_water=3.0)]
        once = preprocess(make_dataset(rows))
        twice = preprocess(once)
        assert twice.rows == once.rows
        assert twice.provenance.dropped == once.provenance.dropped

    def test_row_conservation(self):
        rows = [make_record(i) for i in range(5)]
        rows += [make_record(5, shaft_power=100.0), make_record(6, draught=None)]
        clean = preprocess(make_dataset(rows))
        assert len(clean) + sum(clean.provenance.dropped.values()) == 7

    def test_all_dropped_is_usage_error(self):
        with pytest.raises(UsageError, match="empty after preprocessing"):
            preprocess(make_dataset([make_record(speed_through_water=1.0)]))

    def test_rpm_requirement_can_be_lifted(self):
        rows = [make_record(0, shaft_rpm=None)]
        assert len(preprocess(make_dataset(rows), require_rpm=False)) == 1
        with pytest.raises(UsageError):
            preprocess(make_dataset(rows))


class TestChronologicalSplit:
    def test_counts_sum_and_strict_boundary(self):
        rows = [make_record(i) for i in range(10)]
        boundary = BASE_TS + timedelta(minutes=15 * 6)
        train, test = chronological_split(make_dataset(rows), boundary)
        assert len(train) == 6 and len(test) == 4
        assert all(r.timestamp < boundary for r in train)
        assert all(r.timestamp >= boundary for r in test)

    def test_boundary_before_all_is_usage_error(self):
        rows = [make_record(i) for i in range(3)]
        with pytest.raises(UsageError):
            chronological_split(make_dataset(rows), BASE_TS - timedelta(days=1))

    def test_reversed_chronology_flag(self):
        rows = [make_record(i) for i in range(10)]
        boundary = BASE_TS + timedelta(minutes=15 * 6)
        train, test = chronological_split(make_dataset(rows), boundary, test_first=True)
        assert all(r.timestamp < boundary for r in test)
        assert all(r.timestamp >= boundary for r in train)


class TestAirTempFallback:
    def test_constant_mode(self):
        rows = [make_record(0, air_temp=None), make_record(1)]
        filled = apply_air_temp_fallback(make_dataset(rows), mode="constant", value=15.0)
        assert filled[0].air_temp == 15.0
        assert filled[1].air_temp == 10.0

    def test_sea_temp_mode(self):
        rows = [make_record(0, air_temp=None, sea_temp=17.5)]
        filled = apply_air_temp_fallback(make_dataset(rows), mode="sea_temp")
        assert filled[0].air_temp == 17.5

    def test_unknown_mode(self):
        with pytest.raises(UsageError):
            apply_air_temp_fallback(make_dataset([make_record()]), mode="guess")


class TestRoundTrip:
    def test_write_then_load_is_bitwise(self, tmp_path):
        rng = np.random.default_rng(7)
        rows = [make_record(i,
                            speed_through_water=float(rng.uniform(5, 20)),
                            wave_height=float(rng.uniform(0, 4)),
                            wind_dir=float(rng.uniform(-math.pi, math.pi)),
                            shaft_power=float(rng.uniform(500, 20000)))
                for i in range(50)]
        rows.append(make_record(50, shaft_power=None))
        original = make_dataset(rows)
        path = tmp_path / "round.csv"
        write_csv(original, path)
        loaded = load_csv(path)
        assert len(loaded) == len(original)
        for a, b in zip(original, loaded):
            assert a.timestamp == b.timestamp
            assert a.speed_through_water == b.speed_through_water
            assert a.wind_dir == b.wind_dir
            assert a.shaft_power == b.shaft_power


class TestFeatureMatrix:
    def test_column_order_matches_names(self):
        rows = [make_record(0), make_record(1, draught=11.0)]
        X = feature_matrix(rows, ["draught", "speed_through_water"])
        assert X.shape == (2, 2)
        assert X[1, 0] == 11.0
        assert X[0, 1] == 12.0

    def test_missing_value_names_row(self):
        rows = [make_record(0), make_record(1, sea_depth=None)]
        with pytest.raises(SchemaError, match="row 1"):
            feature_matrix(rows, ["sea_depth"])

    def test_unknown_feature_rejected(self):
        with pytest.raises(SchemaError):
            feature_matrix([make_record()], ["heading"])

    def test_predicted_rpm_requires_model(self):
        with pytest.raises(SchemaError, match="predicted_rpm"):
            feature_matrix([make_record()], ["predicted_rpm"])

    def test_direction_encoding_expands(self):
        X = feature_matrix([make_record(wind_dir=0.5)], ["wind_dir", "draught"],
                           encode_directions=True)
        assert X.shape == (1, 3)
        assert X[0, 0] == pytest.approx(math.sin(0.5))
        assert X[0, 1] == pytest.approx(math.cos(0.5))
        names = expand_feature_names(["wind_dir", "draught"], True)
        assert names == ("wind_dir:sin", "wind_dir:cos", "draught")


class TestStandardizer:
    def make_rows(self, n=40, seed=11):
        rng = np.random.default_rng(seed)
        return [make_record(i,
                            speed_through_water=float(rng.uniform(6, 18)),
                            draught=float(rng.uniform(7, 13)),
                            shaft_power=float(rng.uniform(600, 9000)))
                for i in range(n)]

    def test_train_columns_standardized(self):
        rows = self.make_rows()
        names = ["speed_through_water", "draught"]
        scaler = fit_standardizer(rows, feature_names=names)
        Z = scaler.transform(feature_matrix(rows, names))
        assert np.all(np.abs(Z.mean(axis=0)) < 1e-9)
        assert np.all(np.abs(Z.std(axis=0) - 1.0) < 1e-9)

    def test_constant_feature_named_in_error(self):
        rows = [make_record(i, speed_through_water=6.0 + i) for i in range(5)]
        with pytest.raises(UsageError, match="draught"):
            fit_standardizer(rows, feature_names=["speed_through_water", "draught"])

    def test_statistics_come_from_training_rows_only(self):
        train = self.make_rows(seed=1)
        scaler = fit_standardizer(train, feature_names=["speed_through_water"])
        # Test rows copied from train transform to the same values.
        copied = [make_record(100 + i, speed_through_water=r.speed_through_water)
                  for i, r in enumerate(train[:5])]
        Z_train = scaler.transform(feature_matrix(train[:5], ["speed_through_water"]))
        Z_copy = scaler.transform(feature_matrix(copied, ["speed_through_water"]))
        assert np.array_equal(Z_train, Z_copy)
        # Fitting again on the same train rows is unaffected by other data.
        assert fit_standardizer(train, feature_names=["speed_through_water"]) == scaler

    def test_target_round_trip(self):
        rows = self.make_rows()
        scaler = fit_standardizer(rows, feature_names=["draught"])
        y = np.array([r.shaft_power for r in rows])
        back = scaler.denormalize_target(scaler.normalize_target(y))
        np.testing.assert_allclose(back, y, rtol=1e-12)

    def test_degenerate_target_range(self):
        rows = [make_record(i, speed_through_water=6.0 + i) for i in range(4)]
        with pytest.raises(UsageError, match="target"):
            fit_standardizer(rows, feature_names=["speed_through_water"])

    def test_dict_round_trip(self):
        scaler = fit_standardizer(self.make_rows(), feature_names=["draught"])
        assert Standardizer.from_dict(scaler.to_dict()) == scaler

"""Tests for resistance-coefficient fitting and formula prediction."""
import dataclasses
import json

import numpy as np
import pytest

from shaftpower.ef import (
    EF_FEATURES,
    EfFitConfig,
    EmpiricalPowerRegressor,
    ef_residuals,
    fit_ef,
    load_coefficients,
    predict_ef,
    save_coefficients,
)
from shaftpower.exceptions import DivergenceError, DomainError, SchemaError, UsageError
from shaftpower.metrics import compute_metrics
from shaftpower.physics import ResistanceCoefficients, physical_power
from shaftpower.synth import SynthConfig, generate

from helpers import make_record


def voyage(rows, seed, noise=0.0):
    return generate(SynthConfig(row_count=rows, seed=seed, noise_rel_std=noise))


QUICK = EfFitConfig(max_iterations=4000, multistart_count=4, seed=0)


class TestFit:
    def test_recovers_truth_on_clean_data(self):
        train = voyage(400, seed=1)
        test = voyage(200, seed=2)
        result = fit_ef(train, QUICK)
        report = compute_metrics(test.column("shaft_power"), predict_ef(result.coefficients, test))
        assert report.mape < 0.5
        assert result.train_mse < 1.0
        assert result.coefficients.gamma == 2.5
        assert result.coefficients.water_density == 1.0

    def test_deterministic(self):
        train = voyage(150, seed=4, noise=0.02)
        first = fit_ef(train, QUICK)
        second = fit_ef(train, QUICK)
        assert first.coefficients == second.coefficients
        assert first.train_mse == second.train_mse
        assert first.iterations_used == second.iterations_used

    def test_constraints_hold_after_fit(self):
        train = voyage(150, seed=5, noise=0.05)
        coeffs = fit_ef(train, QUICK).coefficients
        assert coeffs.c > 0
        assert 0.0 <= coeffs.f_c <= 1.0
        assert coeffs.f_g >= 0

    def test_single_record_fits_nearly_exactly(self):
        record = make_record(shaft_power=4200.0)
        result = fit_ef([record], EfFitConfig(max_iterations=3000, multistart_count=2, seed=1))
        residual = ef_residuals(result.coefficients, [record])[0]
        assert abs(residual) / 4200.0 < 1e-3

    def test_optimizer_improves_on_initial_guess(self):
        train = voyage(200, seed=6, noise=0.03)
        X = np.column_stack([train.column(f) for f in EF_FEATURES])
        estimator = EmpiricalPowerRegressor(max_iterations=1000, multistart_count=2,
                                            seed=0).fit(X, train.column("shaft_power"))
        assert estimator.train_mse_ <= estimator.initial_mse_
        assert estimator.iterations_used_ <= 1000

    def test_divergent_targets_raise(self):
        rows = [make_record(i, shaft_power=1e200) for i in range(5)]
        with pytest.raises(DivergenceError, match="restarts"):
            fit_ef(rows, EfFitConfig(max_iterations=10, multistart_count=2))

    def test_empty_train_rejected(self):
        with pytest.raises(UsageError, match="empty"):
            fit_ef([], QUICK)

    def test_missing_power_rejected_with_row(self):
        rows = [make_record(0), make_record(1, shaft_power=None)]
        with pytest.raises(UsageError, match="row 1"):
            fit_ef(rows, QUICK)

    def test_nonpositive_speed_rejected_with_row(self):
        rows = [make_record(0), make_record(1, speed_through_water=0.0)]
        with pytest.raises(DomainError, match="row 1"):
            fit_ef(rows, QUICK)


class TestConfig:
    @pytest.mark.parametrize("kwargs", [
        {"max_iterations": 0},
        {"learning_rate": 0.0},
        {"multistart_count": 0},
        {"convergence_tol": -1e-9},
    ])
    def test_invalid_values(self, kwargs):
        with pytest.raises(UsageError):
            EfFitConfig(**kwargs).validate()


class TestPredict:
    COEFFS = ResistanceCoefficients(a=2.0, b=0.8, c=0.22, f_c=0.4, f_h=1.5, f_s=1.0, f_g=20.0)

    def test_empty_input(self):
        assert predict_ef(self.COEFFS, []).shape == (0,)

    def test_single_record_matches_scalar_formula(self):
        record = make_record()
        batch = predict_ef(self.COEFFS, [record])
        scalar = physical_power(self.COEFFS, record).total_power
        # Batch and scalar kernels may disagree in the last ulp only.
        np.testing.assert_allclose(batch, [scalar], rtol=1e-12, atol=0)

    def test_batch_agrees_with_per_row_calls(self):
        rows = list(voyage(60, seed=8))
        batch = predict_ef(self.COEFFS, rows)
        loop = np.array([predict_ef(self.COEFFS, [r])[0] for r in rows])
        np.testing.assert_allclose(batch, loop, rtol=1e-12, atol=0)

    def test_missing_feature_names_row(self):
        rows = [make_record(0), make_record(1, air_temp=None)]
        with pytest.raises(SchemaError, match="row 1.*air_temp"):
            predict_ef(self.COEFFS, rows)

    def test_residuals_zero_for_formula_power(self):
        rows = list(voyage(40, seed=9))
        exact = [dataclasses.replace(r, shaft_power=float(p))
                 for r, p in zip(rows, predict_ef(self.COEFFS, rows))]
        np.testing.assert_allclose(ef_residuals(self.COEFFS, exact), 0.0, atol=1e-9)

    def test_residuals_track_offsets(self):
        rows = list(voyage(40, seed=10))
        shifted = [dataclasses.replace(r, shaft_power=float(p) + 5.0)
                   for r, p in zip(rows, predict_ef(self.COEFFS, rows))]
        np.testing.assert_allclose(ef_residuals(self.COEFFS, shifted), 5.0, rtol=1e-9)

    def test_residuals_are_measured_minus_predicted(self):
        rows = list(voyage(40, seed=11, noise=0.05))
        expected = np.array([r.shaft_power for r in rows]) - predict_ef(self.COEFFS, rows)
        np.testing.assert_allclose(ef_residuals(self.COEFFS, rows), expected, rtol=1e-12)

    def test_residuals_require_power(self):
        with pytest.raises(UsageError, match="row 0"):
            ef_residuals(self.COEFFS, [make_record(shaft_power=None)])


class TestSerialization:
    def test_round_trip(self, tmp_path):
        coeffs = ResistanceCoefficients(a=2.0, b=0.8, c=0.22, f_c=0.4, f_h=1.5,
                                        f_s=1.0, f_g=20.0)
        path = tmp_path / "coeffs.json"
        save_coefficients(coeffs, path)
        assert load_coefficients(path) == coeffs

    def test_file_keys(self, tmp_path):
        path = tmp_path / "coeffs.json"
        save_coefficients(ResistanceCoefficients(a=1, b=1, c=1, f_c=0.5, f_h=1,
                                                 f_s=1, f_g=1), path)
        payload = json.loads(path.read_text())
        assert set(payload) == {"a", "b", "c", "f_c", "f_h", "f_s", "f_g",
                                "gamma", "water_density", "schema_version"}

    def test_unknown_schema_version(self, tmp_path):
        path = tmp_path / "coeffs.json"
        save_coefficients(ResistanceCoefficients(a=1, b=1, c=1, f_c=0.5, f_h=1,
                                                 f_s=1, f_g=1), path)
        payload = json.loads(path.read_text())
        payload["schema_version"] = "99"
        path.write_text(json.dumps(payload))
        with pytest.raises(SchemaError, match="schema_version"):
            load_coefficients(path)

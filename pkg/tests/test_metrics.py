import math

import numpy as np
import pytest
from hypothesis import given, strategies as st

from shaftpower.exceptions import DomainError, UsageError
from shaftpower.metrics import (
    EvalReport,
    MetricSet,
    aggregate,
    compute_metrics,
    format_report_table,
    mae,
    mape,
    r2,
    rmse,
)


def brute_force(y, y_hat):
    """Independent scalar-loop reference for all four metrics."""
    n = len(y)
    abs_errors = [abs(y[i] - y_hat[i]) for i in range(n)]
    sq_errors = [(y[i] - y_hat[i]) ** 2 for i in range(n)]
    y_mean = sum(y) / n
    ss_tot = sum((v - y_mean) ** 2 for v in y)
    return (
        sum(abs_errors) / n,
        math.sqrt(sum(sq_errors) / n),
        sum(abs(y[i] - y_hat[i]) / abs(y[i]) for i in range(n)) / n * 100.0,
        1.0 - sum(sq_errors) / ss_tot,
    )


finite_pairs = st.lists(
    st.tuples(st.floats(min_value=1.0, max_value=1e5), st.floats(min_value=-1e5, max_value=1e5)),
    min_size=2, max_size=40,
)


class TestPointMetrics:
    def test_perfect_predictions(self):
        y = np.array([1.0, 2.0, 3.0])
        assert mae(y, y) == 0.0
        assert rmse(y, y) == 0.0
        assert mape(y, y) == 0.0
        assert r2(y, y) == 1.0

    def test_hand_case(self):
        y, y_hat = np.array([2.0, 4.0]), np.array([3.0, 3.0])
        assert mae(y, y_hat) == pytest.approx(1.0, abs=1e-15)
        assert rmse(y, y_hat) == pytest.approx(1.0, abs=1e-15)
        assert mape(y, y_hat) == pytest.approx(37.5, abs=1e-12)

    def test_uniform_relative_error(self):
        y = np.array([523.0, 812.0, 4000.0])
        assert mape(y, 1.1 * y) == pytest.approx(10.0, rel=1e-12)

    def test_translation_invariance(self):
        rng = np.random.default_rng(0)
        y = rng.uniform(500, 2000, 30)
        y_hat = y + rng.normal(0, 50, 30)
        assert mae(y + 123.0, y_hat + 123.0) == pytest.approx(mae(y, y_hat), rel=1e-12)
        assert rmse(y + 123.0, y_hat + 123.0) == pytest.approx(rmse(y, y_hat), rel=1e-12)

    def test_mape_scale_invariance(self):
        rng = np.random.default_rng(1)
        y = rng.uniform(500, 2000, 30)
        y_hat = y * rng.uniform(0.9, 1.1, 30)
        assert mape(3.0 * y, 3.0 * y_hat) == pytest.approx(mape(y, y_hat), rel=1e-12)

    def test_r2_of_mean_predictor_is_zero(self):
        y = np.array([1.0, 2.0, 3.0, 6.0])
        y_hat = np.full(4, y.mean())
        assert r2(y, y_hat) == pytest.approx(0.0, abs=1e-15)

    def test_r2_worse_than_mean_is_negative(self):
        # Residuals are -2(y - mean), so SS_res = 4*SS_tot and R^2 = -3.
        y = np.array([1.0, 2.0, 3.0, 6.0])
        y_hat = 3.0 * y - 2.0 * y.mean()
        assert r2(y, y_hat) == pytest.approx(-3.0, rel=1e-12)

    def test_constant_truth_r2_is_domain_error(self):
        y = np.full(5, 2.0)
        with pytest.raises(DomainError):
            r2(y, y + 1.0)

    def test_tiny_truth_mape_is_domain_error(self):
        with pytest.raises(DomainError):
            mape(np.array([1.0, 1e-12]), np.array([1.0, 1.0]))

    def test_length_mismatch(self):
        with pytest.raises(UsageError):
            mae(np.array([1.0, 2.0]), np.array([1.0]))

    def test_empty_input(self):
        with pytest.raises(UsageError):
            rmse(np.array([]), np.array([]))

    def test_matches_brute_force_oracle(self):
        rng = np.random.default_rng(42)
        for _ in range(25):
            n = int(rng.integers(2, 60))
            y = rng.uniform(500, 20000, n)
            y_hat = y * (1 + rng.normal(0, 0.1, n))
            expect = brute_force(list(y), list(y_hat))
            got = compute_metrics(y, y_hat)
            assert got.mae == pytest.approx(expect[0], rel=1e-12)
            assert got.rmse == pytest.approx(expect[1], rel=1e-12)
            assert got.mape == pytest.approx(expect[2], rel=1e-12)
            assert got.r2 == pytest.approx(expect[3], rel=1e-12)

    @given(finite_pairs)
    def test_rmse_dominates_mae(self, pairs):
        y = np.array([p[0] for p in pairs])
        y_hat = np.array([p[1] for p in pairs])
        assert rmse(y, y_hat) >= mae(y, y_hat) - 1e-12


class TestAggregate:
    def runs(self, values):
        return [MetricSet(mae=v, rmse=v + 1, mape=v / 10, r2=0.9) for v in values]

    def test_two_repeats_sample_std(self):
        report = aggregate("NN", "vessel-x", self.runs([1.0, 3.0]))
        assert report.mean.mae == pytest.approx(2.0)
        assert report.std.mae == pytest.approx(math.sqrt(2.0))
        assert report.repeat_count == 2
        assert report.std_kind == "sample"

    def test_identical_repeats_zero_std(self):
        report = aggregate("PGNN", "v", self.runs([5.0, 5.0, 5.0]))
        assert report.std.mae == 0.0
        assert report.std.rmse == 0.0

    def test_single_repeat_zero_std(self):
        report = aggregate("EF", "v", self.runs([4.0]))
        assert report.repeat_count == 1
        assert report.std.mae == 0.0

    def test_empty_runs(self):
        with pytest.raises(UsageError):
            aggregate("NN", "v", [])

    def test_dict_round_trip(self):
        report = aggregate("NN", "v", self.runs([1.0, 2.0]))
        back = EvalReport.from_dict(report.to_dict())
        assert back == report


class TestReportTable:
    def test_layout(self):
        reports = [aggregate("EF", "vessel-a", [MetricSet(1450.10, 1900.0, 26.28, 0.5)]),
                   aggregate("NN", "vessel-a", [MetricSet(800.0, 1000.0, 12.0, 0.9),
                                                MetricSet(820.0, 1040.0, 13.0, 0.88)])]
        table = format_report_table(reports)
        lines = table.splitlines()
        header = lines[0]
        assert header.index("Vessel") < header.index("Method") < header.index("MAE")
        assert header.index("MAE") < header.index("RMSE") < header.index("R2")
        assert header.index("R2") < header.index("MAPE (%)")
        assert "1450.10 ± 0.00" in table
        assert table.endswith("\n")
        # One header, one rule, one line per report.
        assert len(lines) == 2 + len(reports)

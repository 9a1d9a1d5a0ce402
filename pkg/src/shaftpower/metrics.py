"""Evaluation metrics and mean-plus-std aggregation over seeded repeats."""
from __future__ import annotations

from dataclasses import dataclass
from typing import NamedTuple, Sequence

import numpy as np

from .exceptions import DomainError, UsageError

#: Guard below which a target magnitude makes the percentage error unstable.
MAPE_GUARD = 1e-9


class MetricSet(NamedTuple):
    mae: float
    rmse: float
    mape: float
    r2: float


def _paired(y, y_hat) -> tuple:
    y = np.asarray(y, dtype=float)
    y_hat = np.asarray(y_hat, dtype=float)
    if y.ndim != 1 or y_hat.ndim != 1:
        raise UsageError("metric inputs must be one-dimensional vectors")
    if y.size == 0:
        raise UsageError("metric inputs must be non-empty")
    if y.size != y_hat.size:
        raise UsageError(f"length mismatch: {y.size} targets vs {y_hat.size} predictions")
    return y, y_hat


def mae(y, y_hat) -> float:
    """Mean absolute error."""
    y, y_hat = _paired(y, y_hat)
    return float(np.mean(np.abs(y - y_hat)))


def rmse(y, y_hat) -> float:
    """Root mean squared error."""
    y, y_hat = _paired(y, y_hat)
    return float(np.sqrt(np.mean((y - y_hat) ** 2)))


def mape(y, y_hat) -> float:
    """Mean absolute percentage error, in percent."""
    y, y_hat = _paired(y, y_hat)
    if np.any(np.abs(y) < MAPE_GUARD):
        raise DomainError(f"percentage error undefined: |target| < {MAPE_GUARD}")
    return float(np.mean(np.abs((y - y_hat) / y)) * 100.0)


def r2(y, y_hat) -> float:
    """Coefficient of determination; negative when worse than the mean predictor."""
    y, y_hat = _paired(y, y_hat)
    ss_res = float(np.sum((y - y_hat) ** 2))
    ss_tot = float(np.sum((y - y.mean()) ** 2))
    if ss_tot == 0.0:
        raise DomainError("r2 undefined for a constant target vector")
    return 1.0 - ss_res / ss_tot


def compute_metrics(y, y_hat) -> MetricSet:
    """All four metrics for one prediction vector."""
    return MetricSet(mae=mae(y, y_hat), rmse=rmse(y, y_hat),
                     mape=mape(y, y_hat), r2=r2(y, y_hat))


@dataclass(frozen=True)
class EvalReport:
    """Per-method evaluation: metric means and stds over seeded repeats."""

    method: str
    tag: str
    repeat_count: int
    mean: MetricSet
    std: MetricSet
    std_kind: str = "sample"

    def to_dict(self) -> dict:
        return {
            "method": self.method,
            "tag": self.tag,
            "repeat_count": self.repeat_count,
            "std_kind": self.std_kind,
            "mean": self.mean._asdict(),
            "std": self.std._asdict(),
        }

    @classmethod
    def from_dict(cls, payload: dict) -> "EvalReport":
        return cls(
            method=payload["method"],
            tag=payload["tag"],
            repeat_count=int(payload["repeat_count"]),
            std_kind=payload.get("std_kind", "sample"),
            mean=MetricSet(**payload["mean"]),
            std=MetricSet(**payload["std"]),
        )


def aggregate(method: str, tag: str, runs: Sequence[MetricSet]) -> EvalReport:
    """Aggregate per-seed metric sets into a mean-plus-std report.

    Uses the sample standard deviation (n-1 denominator), reported as
    ``std_kind="sample"``; a single repeat gets std 0 by convention.
    """
    runs = [MetricSet(*r) for r in runs]
    if not runs:
        raise UsageError("aggregate needs at least one run")
    table = np.array([list(r) for r in runs], dtype=float)
    means = table.mean(axis=0)
    if len(runs) == 1:
        stds = np.zeros(4)
    else:
        stds = table.std(axis=0, ddof=1)
    return EvalReport(method=method, tag=tag, repeat_count=len(runs),
                      mean=MetricSet(*means), std=MetricSet(*stds))


_COLUMNS = ("Vessel", "Method", "MAE", "RMSE", "R2", "MAPE (%)")


def _cell(mean: float, std: float, decimals: int) -> str:
    return f"{mean:.{decimals}f} ± {std:.{decimals}f}"


def format_report_table(reports: Sequence[EvalReport]) -> str:
    """Aligned text table, one row per (tag, method) report."""
    rows = [
        (
            report.tag,
            report.method,
            _cell(report.mean.mae, report.std.mae, 2),
            _cell(report.mean.rmse, report.std.rmse, 2),
            _cell(report.mean.r2, report.std.r2, 3),
            _cell(report.mean.mape, report.std.mape, 2),
        )
        for report in reports
    ]
    widths = [max(len(_COLUMNS[j]), *(len(r[j]) for r in rows)) if rows else len(_COLUMNS[j])
              for j in range(len(_COLUMNS))]
    lines = [
        "  ".join(name.ljust(widths[j]) for j, name in enumerate(_COLUMNS)).rstrip(),
        "  ".join("-" * widths[j] for j in range(len(_COLUMNS))),
    ]
    for r in rows:
        lines.append("  ".join(r[j].ljust(widths[j]) for j in range(len(_COLUMNS))).rstrip())
    return "\n".join(lines) + "\n"

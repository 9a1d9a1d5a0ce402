"""Shaft RPM as a product of univariate polynomials over selected features.

The model is RPM(u) = p_1(u_1) * ... * p_k(u_k) with order-3 polynomials by
default and speed through water always in the first position. Fitting is
alternating least squares: holding all polynomials but one fixed, the free
coefficients solve an exact linear least-squares problem, so the training MSE
never increases across sweeps.
"""
from __future__ import annotations

import json
from dataclasses import dataclass, field
from pathlib import Path
from typing import Optional, Sequence

import numpy as np
from numpy.polynomial import polynomial as npoly
from sklearn.base import BaseEstimator, RegressorMixin
from sklearn.utils.validation import check_array, check_is_fitted, check_X_y

from .data import FEATURE_FIELDS, EnvironmentRecord, feature_matrix
from .exceptions import SchemaError, UsageError

SPEED_FEATURE = "speed_through_water"
DEFAULT_RPM_FEATURES = (SPEED_FEATURE, "draught", "wind_speed", "swell_height")
SCHEMA_VERSION = "1"

# Trailing polynomials are rescaled to unit mean over the training data; the
# fitted model satisfies this to well under this tolerance.
NORMALIZATION_TOL = 1e-9


@dataclass
class RpmFitConfig:
    """Knobs for ALS fitting and greedy feature selection."""

    order: int = 3
    max_sweeps: int = 100
    tol: float = 1e-8
    ridge: float = 1e-8
    improvement_threshold: float = 0.01
    validation_fraction: float = 0.2
    seed: int = 0

    def validate(self) -> None:
        if self.order < 1:
            raise UsageError(f"order must be >= 1, got {self.order}")
        if self.max_sweeps < 1:
            raise UsageError(f"max_sweeps must be >= 1, got {self.max_sweeps}")
        if not 0.0 < self.validation_fraction < 1.0:
            raise UsageError("validation_fraction must lie strictly between 0 and 1")
        if self.tol < 0 or self.ridge < 0 or self.improvement_threshold < 0:
            raise UsageError("tol, ridge, and improvement_threshold must be >= 0")


@dataclass(eq=False)
class MultiplicativePolyModel:
    """Fitted per-feature polynomials whose product predicts RPM.

    Inputs are affinely mapped to roughly [-1, 1] before polynomial
    evaluation (the map is stored, so this is invisible at the interface).
    """

    features: tuple
    coefficients: tuple
    order: int = 3
    scale_offset: Optional[np.ndarray] = None
    scale_factor: Optional[np.ndarray] = None

    def __post_init__(self) -> None:
        if not self.features:
            raise SchemaError("features must be non-empty")
        if self.features[0] != SPEED_FEATURE:
            raise SchemaError(f"first feature must be {SPEED_FEATURE!r}, got {self.features[0]!r}")
        for name in self.features:
            if name not in FEATURE_FIELDS:
                raise SchemaError(f"unknown record feature {name!r}")
        if len(self.coefficients) != len(self.features):
            raise SchemaError("one coefficient vector required per feature")
        coeffs = []
        for name, c in zip(self.features, self.coefficients):
            c = np.asarray(c, dtype=float)
            if c.shape != (self.order + 1,):
                raise SchemaError(f"polynomial for {name!r} must have length order+1 = {self.order + 1}")
            if not np.all(np.isfinite(c)):
                raise SchemaError(f"polynomial for {name!r} has non-finite coefficients")
            coeffs.append(c)
        object.__setattr__(self, "coefficients", tuple(coeffs))
        k = len(self.features)
        if self.scale_offset is None:
            self.scale_offset = np.zeros(k)
        if self.scale_factor is None:
            self.scale_factor = np.ones(k)
        self.scale_offset = np.asarray(self.scale_offset, dtype=float)
        self.scale_factor = np.asarray(self.scale_factor, dtype=float)
        if self.scale_offset.shape != (k,) or self.scale_factor.shape != (k,):
            raise SchemaError("scale_offset and scale_factor must have one entry per feature")
        if np.any(self.scale_factor == 0):
            raise SchemaError("scale_factor entries must be nonzero")

    def evaluate_matrix(self, U: np.ndarray) -> np.ndarray:
        """Evaluate on raw feature columns ordered like ``self.features``."""
        U = np.asarray(U, dtype=float)
        if U.ndim != 2 or U.shape[1] != len(self.features):
            raise SchemaError(f"expected {len(self.features)} feature columns, got shape {U.shape}")
        scaled = (U - self.scale_offset) / self.scale_factor
        out = np.ones(U.shape[0])
        for i, coeffs in enumerate(self.coefficients):
            out *= npoly.polyval(scaled[:, i], coeffs)
        return out

    def evaluate_records(self, rows: Sequence[EnvironmentRecord]) -> np.ndarray:
        rows = list(rows)
        if not rows:
            return np.empty(0)
        return self.evaluate_matrix(feature_matrix(rows, self.features))

    def to_dict(self) -> dict:
        return {
            "schema_version": SCHEMA_VERSION,
            "features": list(self.features),
            "order": self.order,
            "coefficients": [[float(v) for v in c] for c in self.coefficients],
            "scale_offset": [float(v) for v in self.scale_offset],
            "scale_factor": [float(v) for v in self.scale_factor],
        }

    @classmethod
    def from_dict(cls, payload: dict) -> "MultiplicativePolyModel":
        if payload.get("schema_version") != SCHEMA_VERSION:
            raise SchemaError(f"unsupported rpm model schema_version {payload.get('schema_version')!r}")
        return cls(
            features=tuple(payload["features"]),
            coefficients=tuple(np.asarray(c, dtype=float) for c in payload["coefficients"]),
            order=int(payload["order"]),
            scale_offset=np.asarray(payload["scale_offset"], dtype=float),
            scale_factor=np.asarray(payload["scale_factor"], dtype=float),
        )


def rpm_evaluate(model: MultiplicativePolyModel, record: EnvironmentRecord) -> float:
    """Predicted RPM for one record (Horner evaluation of each polynomial)."""
    return float(model.evaluate_records([record])[0])


def save_model(model: MultiplicativePolyModel, path) -> None:
    Path(path).write_text(json.dumps(model.to_dict(), sort_keys=True, indent=2) + "\n",
                          encoding="utf-8")


def load_model(path) -> MultiplicativePolyModel:
    return MultiplicativePolyModel.from_dict(json.loads(Path(path).read_text(encoding="utf-8")))


def _solve_least_squares(design: np.ndarray, y: np.ndarray, ridge: float) -> np.ndarray:
    try:
        coef, *_ = np.linalg.lstsq(design, y, rcond=None)
        if np.all(np.isfinite(coef)):
            return coef
    except np.linalg.LinAlgError:
        pass
    # Ridge-damped normal equations; only reached when the SVD itself fails.
    gram = design.T @ design
    damp = ridge * np.trace(gram) / gram.shape[0]
    return np.linalg.solve(gram + damp * np.eye(gram.shape[0]), design.T @ y)


class MultiplicativePolyRegressor(BaseEstimator, RegressorMixin):
    """Alternating-least-squares fit of the multiplicative polynomial model.

    Operates on plain arrays whose first column is speed through water.
    After ``fit``, ``mse_history_`` holds the training MSE after each accepted
    sweep (non-increasing by construction of the exact per-polynomial solves).
    """

    def __init__(self, order: int = 3, max_sweeps: int = 100, tol: float = 1e-8,
                 ridge: float = 1e-8):
        self.order = order
        self.max_sweeps = max_sweeps
        self.tol = tol
        self.ridge = ridge

    def fit(self, X, y) -> "MultiplicativePolyRegressor":
        if self.order < 1:
            raise UsageError(f"order must be >= 1, got {self.order}")
        if self.max_sweeps < 1:
            raise UsageError(f"max_sweeps must be >= 1, got {self.max_sweeps}")
        X, y = check_X_y(X, y, y_numeric=True)
        n, k = X.shape

        lo, hi = X.min(axis=0), X.max(axis=0)
        offset = (lo + hi) / 2.0
        span = (hi - lo) / 2.0
        factor = np.where(span == 0.0, 1.0, span)
        scaled = (X - offset) / factor

        vander = [np.vander(scaled[:, i], self.order + 1, increasing=True) for i in range(k)]
        coefs = [np.zeros(self.order + 1) for _ in range(k)]
        values = [np.ones(n) for _ in range(k)]
        # Speed polynomial starts as a direct fit of RPM on V; the rest start at 1.
        coefs[0] = _solve_least_squares(vander[0], y, self.ridge)
        values[0] = vander[0] @ coefs[0]
        for i in range(1, k):
            coefs[i][0] = 1.0

        history: list[float] = []
        for _ in range(self.max_sweeps):
            snapshot = [c.copy() for c in coefs]
            for i in range(k):
                others = np.ones(n)
                for j in range(k):
                    if j != i:
                        others *= values[j]
                design = vander[i] * others[:, None]
                coefs[i] = _solve_least_squares(design, y, self.ridge)
                values[i] = vander[i] @ coefs[i]
            self._canonicalize(coefs, values)
            mse = float(np.mean((np.prod(values, axis=0) - y) ** 2))
            if history and mse > history[-1]:
                # A sweep can only raise the MSE through floating-point noise;
                # keep the previous state and stop.
                coefs = snapshot
                break
            history.append(mse)
            if len(history) >= 2 and history[-2] - history[-1] <= self.tol * history[-2]:
                break

        self.n_features_in_ = k
        self.coefficients_ = [c.copy() for c in coefs]
        self.scale_offset_ = offset
        self.scale_factor_ = factor
        self.mse_history_ = history
        self.train_mse_ = history[-1]
        return self

    @staticmethod
    def _canonicalize(coefs: list, values: list) -> None:
        # Scale is absorbed into the first polynomial so trailing polynomials
        # have unit mean over the training data; the product is unchanged.
        carried = 1.0
        for i in range(1, len(coefs)):
            mu = float(values[i].mean())
            if abs(mu) > 1e-300:
                coefs[i] /= mu
                values[i] /= mu
                carried *= mu
        coefs[0] *= carried
        values[0] *= carried

    def predict(self, X) -> np.ndarray:
        check_is_fitted(self, "coefficients_")
        X = check_array(X)
        if X.shape[1] != self.n_features_in_:
            raise SchemaError(f"expected {self.n_features_in_} columns, got {X.shape[1]}")
        scaled = (X - self.scale_offset_) / self.scale_factor_
        out = np.ones(X.shape[0])
        for i, c in enumerate(self.coefficients_):
            out *= npoly.polyval(scaled[:, i], c)
        return out


def _rpm_targets(rows: Sequence[EnvironmentRecord]) -> np.ndarray:
    y = np.empty(len(rows))
    for i, record in enumerate(rows):
        if record.shaft_rpm is None:
            raise UsageError(f"row {i}: shaft_rpm required for RPM fitting")
        y[i] = record.shaft_rpm
    return y


def fit_rpm_als(train, features: Sequence[str] = DEFAULT_RPM_FEATURES,
                config: Optional[RpmFitConfig] = None) -> MultiplicativePolyModel:
    """Fit the multiplicative polynomial RPM model by alternating least squares.

    Args:
        train: records (or Dataset) with shaft_rpm present.
        features: ordered feature names; speed through water must come first.
        config: fitting knobs; defaults to RpmFitConfig().

    Returns:
        Fitted model with trailing polynomials normalized to unit training mean.
    """
    config = config or RpmFitConfig()
    config.validate()
    rows = list(train)
    if not rows:
        raise UsageError("cannot fit RPM model on empty data")
    features = tuple(features)
    if not features or features[0] != SPEED_FEATURE:
        raise SchemaError(f"features must start with {SPEED_FEATURE!r}")

    U = feature_matrix(rows, features)
    y = _rpm_targets(rows)
    estimator = MultiplicativePolyRegressor(
        order=config.order, max_sweeps=config.max_sweeps, tol=config.tol, ridge=config.ridge,
    ).fit(U, y)
    return MultiplicativePolyModel(
        features=features,
        coefficients=tuple(estimator.coefficients_),
        order=config.order,
        scale_offset=estimator.scale_offset_,
        scale_factor=estimator.scale_factor_,
    )


def _pearson(x: np.ndarray, y: np.ndarray) -> float:
    # Zero-variance inputs get correlation 0 so degenerate candidates are never selected.
    xd = x - x.mean()
    yd = y - y.mean()
    denom = np.sqrt((xd @ xd) * (yd @ yd))
    if denom == 0.0:
        return 0.0
    return float((xd @ yd) / denom)


def greedy_feature_selection(train, candidates: Sequence[str],
                             config: Optional[RpmFitConfig] = None) -> list[str]:
    """Greedy residual-correlation feature selection, speed always first.

    Starting from [V], repeatedly fit, correlate candidates with the training
    residuals, and trial-add the strongest one; stop when relative validation
    MSE improvement drops below ``config.improvement_threshold`` or the
    candidates are exhausted.
    """
    config = config or RpmFitConfig()
    config.validate()
    rows = list(train)
    if not rows:
        raise UsageError("cannot select features on empty data")

    rng = np.random.default_rng(config.seed)
    n = len(rows)
    n_val = int(round(config.validation_fraction * n))
    if not 0 < n_val < n:
        raise UsageError(f"validation split is degenerate for {n} rows")
    perm = rng.permutation(n)
    val_rows = [rows[i] for i in perm[:n_val]]
    fit_rows = [rows[i] for i in perm[n_val:]]
    y_fit = _rpm_targets(fit_rows)
    y_val = _rpm_targets(val_rows)

    def _val_mse(model: MultiplicativePolyModel) -> float:
        return float(np.mean((model.evaluate_records(val_rows) - y_val) ** 2))

    selected = [SPEED_FEATURE]
    remaining = [c for c in candidates if c != SPEED_FEATURE]
    model = fit_rpm_als(fit_rows, selected, config)
    best_val = _val_mse(model)

    while remaining:
        if best_val == 0.0:
            break
        residuals = y_fit - model.evaluate_records(fit_rows)
        scores = [abs(_pearson(feature_matrix(fit_rows, [c])[:, 0], residuals)) for c in remaining]
        candidate = remaining[int(np.argmax(scores))]
        trial = fit_rpm_als(fit_rows, selected + [candidate], config)
        trial_val = _val_mse(trial)
        if (best_val - trial_val) / best_val < config.improvement_threshold:
            break
        selected.append(candidate)
        remaining.remove(candidate)
        model, best_val = trial, trial_val
    return selected

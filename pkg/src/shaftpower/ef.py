"""Learning the seven resistance coefficients from measured shaft power.

The objective is the mean squared error between the formula power and the
measured power. It is smooth but nonconvex in (a, b, c), so fitting runs
multistart full-batch gradient descent with Adam-style adaptive steps and
analytic gradients. Constrained parameters are reparameterized (softplus for
c and f_g, a logistic squash for f_c) so every iterate is feasible.
"""
from __future__ import annotations

import json
import logging
from dataclasses import dataclass
from pathlib import Path
from typing import Optional, Sequence

import numpy as np
from sklearn.base import BaseEstimator, RegressorMixin
from sklearn.utils.validation import check_array, check_is_fitted, check_X_y

from . import physics
from .data import EnvironmentRecord
from .exceptions import DivergenceError, DomainError, SchemaError, UsageError
from .physics import ResistanceCoefficients

logger = logging.getLogger(__name__)

SCHEMA_VERSION = "1"

#: Column order expected by the array-level estimator.
EF_FEATURES = ("speed_through_water", "draught", "air_temp", "wind_dir",
               "wind_speed", "wave_height", "wave_dir")

# Convergence is judged on the best-so-far MSE over a trailing window, since
# raw per-iteration MSE oscillates under adaptive steps.
_CONVERGENCE_WINDOW = 20
# Learning rate decays geometrically to this fraction of its initial value.
_FINAL_LR_FRACTION = 1e-3


@dataclass
class EfFitConfig:
    max_iterations: int = 5000
    learning_rate: float = 0.05
    convergence_tol: float = 1e-10
    multistart_count: int = 8
    seed: int = 0

    def validate(self) -> None:
        if self.max_iterations < 1:
            raise UsageError(f"max_iterations must be >= 1, got {self.max_iterations}")
        if self.learning_rate <= 0:
            raise UsageError(f"learning_rate must be > 0, got {self.learning_rate}")
        if self.multistart_count < 1:
            raise UsageError(f"multistart_count must be >= 1, got {self.multistart_count}")
        if self.convergence_tol < 0:
            raise UsageError(f"convergence_tol must be >= 0, got {self.convergence_tol}")


@dataclass(frozen=True)
class EfFitResult:
    coefficients: ResistanceCoefficients
    train_mse: float
    iterations_used: int
    converged: bool


def _softplus(x):
    return np.logaddexp(0.0, x)


def _softplus_inv(y):
    # Inverse of log(1 + e^x); y must be positive. Above ~30 the exponential
    # dwarfs the 1 and the inverse is y itself to double precision.
    if y > 30.0:
        return float(y)
    return float(np.log(np.expm1(y)))


def _sigmoid(x):
    return 0.5 * (1.0 + np.tanh(0.5 * x))


class _Objective:
    """MSE of the power formula against measurements, batched over restarts.

    Parameters travel in raw (unconstrained) space as an (R, 7) array with
    columns (a, b, c_raw, fc_raw, f_h, f_s, fg_raw).
    """

    def __init__(self, X: np.ndarray, y: np.ndarray, gamma: float, water_density: float):
        V = X[:, 0]
        T = X[:, 1]
        air_temp = X[:, 2]
        wind_dir = X[:, 3]
        wind_speed = X[:, 4]
        wave_height = X[:, 5]
        wave_dir = X[:, 6]

        rho = 1.0 / (1.0 + air_temp / 273.15)
        self.V = V
        self.T = T
        self.y = y
        self.abs_cos = np.abs(np.cos(wind_dir))
        self.abs_sin = np.abs(np.sin(wind_dir))
        # Wind term is shape * G and wave term is f_g * W for data-only G, W.
        self.G = rho * wind_speed**2 * np.cos(wind_dir) * V
        self.W = (wave_height**gamma * water_density
                  * (physics.WAVE_DIR_BASE + physics.WAVE_DIR_SPAN * np.cos(wave_dir)) * V)

    @staticmethod
    def natural(raw: np.ndarray) -> np.ndarray:
        out = raw.copy()
        out[:, 2] = _softplus(raw[:, 2])
        out[:, 3] = _sigmoid(raw[:, 3])
        out[:, 6] = _softplus(raw[:, 6])
        return out

    def mse_and_grad(self, raw: np.ndarray):
        # Overflow to inf is the divergence signal the caller checks for,
        # so the computation must not warn on it.
        with np.errstate(over="ignore", invalid="ignore"):
            return self._mse_and_grad(raw)

    def _mse_and_grad(self, raw: np.ndarray):
        nat = self.natural(raw)
        a, b, c, f_c, f_h, f_s, f_g = (nat[:, i:i + 1] for i in range(7))
        u = b + self.V
        u2 = u * u
        u3 = u2 * u
        aT = a + self.T
        shape = f_c * f_h + (1.0 - f_c) * (f_h * self.abs_cos + f_s * self.abs_sin)
        pred = c * aT * u3 + shape * self.G + f_g * self.W
        residual = pred - self.y
        n = self.y.size
        mse = np.mean(residual * residual, axis=1)

        scale = 2.0 / n
        d_a = scale * np.sum(residual * (c * u3), axis=1)
        d_b = scale * np.sum(residual * (3.0 * c * aT * u2), axis=1)
        d_c = scale * np.sum(residual * (aT * u3), axis=1)
        d_fh = scale * np.sum(residual * ((f_c + (1.0 - f_c) * self.abs_cos) * self.G), axis=1)
        d_fs = scale * np.sum(residual * ((1.0 - f_c) * self.abs_sin * self.G), axis=1)
        d_fc = scale * np.sum(residual * ((f_h - (f_h * self.abs_cos + f_s * self.abs_sin)) * self.G), axis=1)
        d_fg = scale * np.sum(residual * self.W, axis=1)

        # Chain through the reparameterizations.
        d_c *= _sigmoid(raw[:, 2])
        d_fc *= (f_c * (1.0 - f_c))[:, 0]
        d_fg *= _sigmoid(raw[:, 6])
        grad = np.stack([d_a, d_b, d_c, d_fc, d_fh, d_fs, d_fg], axis=1)
        return mse, grad

    def initial_raw(self, rng: np.random.Generator) -> np.ndarray:
        a = rng.uniform(0.0, 5.0)
        b = rng.uniform(0.0, 3.0)
        f_c = rng.uniform(0.1, 0.9)
        f_h = rng.uniform(0.5, 3.0)
        f_s = rng.uniform(0.5, 3.0)
        f_g = np.exp(rng.uniform(np.log(0.1), np.log(50.0)))
        # Scale-match c so the calm term starts on the measured power scale;
        # the cubic term otherwise produces exploding first gradients.
        v_mean = float(self.V.mean())
        t_mean = float(self.T.mean())
        c = float(self.y.mean()) / max((a + t_mean) * (b + v_mean) ** 3, 1e-12)
        c *= float(np.exp(rng.uniform(-0.3, 0.3)))
        return np.array([a, b, _softplus_inv(max(c, 1e-12)), np.log(f_c / (1.0 - f_c)),
                         f_h, f_s, _softplus_inv(f_g)])


def _run_restarts(objective: _Objective, restart_ids: Sequence[int], attempt: int,
                  config: EfFitConfig):
    """Optimize one batch of restarts; returns per-restart summaries."""
    R = len(restart_ids)
    raw = np.stack([
        objective.initial_raw(np.random.default_rng([config.seed, rid, attempt]))
        for rid in restart_ids
    ])
    m = np.zeros_like(raw)
    v = np.zeros_like(raw)
    beta1, beta2, eps = 0.9, 0.999, 1e-8
    decay = _FINAL_LR_FRACTION ** (1.0 / config.max_iterations)

    init_mse, _ = objective.mse_and_grad(raw)
    best_mse = init_mse.copy()
    best_raw = raw.copy()
    failed = ~np.isfinite(init_mse)
    active = ~failed
    converged = np.zeros(R, dtype=bool)
    iterations = np.full(R, config.max_iterations)
    window = np.tile(best_mse[None, :], (_CONVERGENCE_WINDOW, 1))

    lr = config.learning_rate
    for t in range(1, config.max_iterations + 1):
        if not active.any():
            break
        mse, grad = objective.mse_and_grad(raw)
        bad = active & ~(np.isfinite(mse) & np.all(np.isfinite(grad), axis=1))
        if bad.any():
            failed |= bad
            active &= ~bad
            iterations[bad] = t
        improved = active & (mse < best_mse)
        best_mse[improved] = mse[improved]
        best_raw[improved] = raw[improved]

        slot = t % _CONVERGENCE_WINDOW
        if t > _CONVERGENCE_WINDOW:
            reference = window[slot]
            with np.errstate(invalid="ignore", divide="ignore"):
                rel = np.where(reference > 0, (reference - best_mse) / reference, 0.0)
            done = active & (rel < config.convergence_tol)
            if done.any():
                converged |= done
                active &= ~done
                iterations[done] = t
        window[slot] = best_mse

        # Failed rows stay in the arrays and may hold inf; only active rows
        # receive the step, so their nan arithmetic is ignored.
        with np.errstate(over="ignore", invalid="ignore"):
            m = beta1 * m + (1.0 - beta1) * grad
            v = beta2 * v + (1.0 - beta2) * grad * grad
            m_hat = m / (1.0 - beta1**t)
            v_hat = v / (1.0 - beta2**t)
            step = lr * m_hat / (np.sqrt(v_hat) + eps)
        raw[active] -= step[active]
        lr *= decay

    return best_raw, best_mse, init_mse, converged, failed, iterations


class EmpiricalPowerRegressor(BaseEstimator, RegressorMixin):
    """Estimator over plain arrays with columns ordered like EF_FEATURES.

    ``fit`` exposes ``coefficients_`` (the constrained parameters),
    ``train_mse_``, ``initial_mse_`` (of the winning restart), ``converged_``,
    and ``iterations_used_``.
    """

    def __init__(self, max_iterations: int = 5000, learning_rate: float = 0.05,
                 convergence_tol: float = 1e-10, multistart_count: int = 8,
                 seed: int = 0, gamma: float = physics.GAMMA_DEFAULT,
                 water_density: float = physics.WATER_DENSITY_DEFAULT):
        self.max_iterations = max_iterations
        self.learning_rate = learning_rate
        self.convergence_tol = convergence_tol
        self.multistart_count = multistart_count
        self.seed = seed
        self.gamma = gamma
        self.water_density = water_density

    def _config(self) -> EfFitConfig:
        config = EfFitConfig(max_iterations=self.max_iterations, learning_rate=self.learning_rate,
                             convergence_tol=self.convergence_tol,
                             multistart_count=self.multistart_count, seed=self.seed)
        config.validate()
        return config

    def fit(self, X, y) -> "EmpiricalPowerRegressor":
        config = self._config()
        X, y = check_X_y(X, y, y_numeric=True)
        if X.shape[1] != len(EF_FEATURES):
            raise SchemaError(f"expected {len(EF_FEATURES)} feature columns "
                              f"{EF_FEATURES}, got {X.shape[1]}")
        if np.any(X[:, 0] <= 0):
            raise DomainError("speed_through_water must be > 0 for every training row")
        if np.any(X[:, 2] <= physics.ABSOLUTE_ZERO_C):
            raise DomainError("air_temp must be > -273.15 for every training row")
        if np.any(X[:, 4] < 0) or np.any(X[:, 5] < 0):
            raise DomainError("wind_speed and wave_height must be >= 0")

        objective = _Objective(X, y, self.gamma, self.water_density)
        ids = list(range(config.multistart_count))
        best_raw, best_mse, init_mse, converged, failed, iterations = _run_restarts(
            objective, ids, 0, config)

        if failed.any():
            retry_ids = [ids[i] for i in np.flatnonzero(failed)]
            logger.warning("retrying %d diverged restart(s)", len(retry_ids))
            r_raw, r_mse, r_init, r_conv, r_failed, r_iter = _run_restarts(
                objective, retry_ids, 1, config)
            for k, i in enumerate(np.flatnonzero(failed)):
                best_raw[i] = r_raw[k]
                best_mse[i] = r_mse[k]
                init_mse[i] = r_init[k]
                converged[i] = r_conv[k]
                iterations[i] = r_iter[k]
            failed[np.flatnonzero(failed)] = r_failed

        if failed.all():
            raise DivergenceError("all restarts diverged to non-finite loss; "
                                  "check the data scale and learning rate")

        usable = np.flatnonzero(~failed)
        winner = int(usable[np.argmin(best_mse[usable])])
        nat = objective.natural(best_raw[winner:winner + 1])[0]
        self.coefficients_ = ResistanceCoefficients(
            a=float(nat[0]), b=float(nat[1]), c=float(nat[2]), f_c=float(nat[3]),
            f_h=float(nat[4]), f_s=float(nat[5]), f_g=float(nat[6]),
            gamma=self.gamma, water_density=self.water_density,
        )
        self.train_mse_ = float(best_mse[winner])
        self.initial_mse_ = float(init_mse[winner])
        self.converged_ = bool(converged[winner])
        self.iterations_used_ = int(iterations[winner])
        self.n_features_in_ = X.shape[1]
        return self

    def predict(self, X) -> np.ndarray:
        check_is_fitted(self, "coefficients_")
        X = check_array(X)
        if X.shape[1] != len(EF_FEATURES):
            raise SchemaError(f"expected {len(EF_FEATURES)} columns, got {X.shape[1]}")
        return physics.total_power(
            self.coefficients_,
            speed=X[:, 0], draught=X[:, 1], air_temp=X[:, 2], wind_dir=X[:, 3],
            wind_speed=X[:, 4], wave_height=X[:, 5], wave_dir=X[:, 6],
        )


def _ef_matrix(records: Sequence[EnvironmentRecord]) -> np.ndarray:
    rows = np.empty((len(records), len(EF_FEATURES)))
    for i, record in enumerate(records):
        for j, name in enumerate(EF_FEATURES):
            value = getattr(record, name)
            if value is None:
                raise SchemaError(f"row {i}: missing value for {name!r}")
            rows[i, j] = value
        if rows[i, 0] <= 0:
            raise DomainError(f"row {i}: speed_through_water must be > 0")
    return rows


def fit_ef(train, config: Optional[EfFitConfig] = None) -> EfFitResult:
    """Fit the resistance coefficients to measured shaft power.

    Args:
        train: records (or Dataset) with shaft_power present and V > 0.
        config: optimizer knobs; defaults to EfFitConfig().

    Returns:
        EfFitResult for the best restart (lowest train MSE, ties broken by
        restart index). Deterministic given (data, config).
    """
    config = config or EfFitConfig()
    config.validate()
    rows = list(train)
    if not rows:
        raise UsageError("cannot fit on empty data")
    X = _ef_matrix(rows)
    y = np.empty(len(rows))
    for i, record in enumerate(rows):
        if record.shaft_power is None:
            raise UsageError(f"row {i}: shaft_power required for fitting")
        y[i] = record.shaft_power

    estimator = EmpiricalPowerRegressor(
        max_iterations=config.max_iterations, learning_rate=config.learning_rate,
        convergence_tol=config.convergence_tol, multistart_count=config.multistart_count,
        seed=config.seed,
    ).fit(X, y)
    return EfFitResult(
        coefficients=estimator.coefficients_,
        train_mse=estimator.train_mse_,
        iterations_used=estimator.iterations_used_,
        converged=estimator.converged_,
    )


def predict_ef(coeffs: ResistanceCoefficients, records) -> np.ndarray:
    """Formula power for each record; errors carry the offending row index."""
    rows = list(records)
    if not rows:
        return np.empty(0)
    X = _ef_matrix(rows)
    return physics.total_power(
        coeffs, speed=X[:, 0], draught=X[:, 1], air_temp=X[:, 2], wind_dir=X[:, 3],
        wind_speed=X[:, 4], wave_height=X[:, 5], wave_dir=X[:, 6],
    )


def ef_residuals(coeffs: ResistanceCoefficients, records) -> np.ndarray:
    """Measured minus predicted shaft power, elementwise."""
    rows = list(records)
    predicted = predict_ef(coeffs, rows)
    measured = np.empty(len(rows))
    for i, record in enumerate(rows):
        if record.shaft_power is None:
            raise UsageError(f"row {i}: shaft_power required for residuals")
        measured[i] = record.shaft_power
    return measured - predicted


def save_coefficients(coeffs: ResistanceCoefficients, path) -> None:
    payload = dict(coeffs.to_dict(), schema_version=SCHEMA_VERSION)
    Path(path).write_text(json.dumps(payload, indent=2, sort_keys=True) + "\n", encoding="utf-8")


def load_coefficients(path) -> ResistanceCoefficients:
    payload = json.loads(Path(path).read_text(encoding="utf-8"))
    version = payload.pop("schema_version", None)
    if version != SCHEMA_VERSION:
        raise SchemaError(f"unsupported coefficients schema_version {version!r}")
    return ResistanceCoefficients.from_dict(payload)

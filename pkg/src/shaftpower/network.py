"""From-scratch branched dense network for shaft power prediction.

Three input branches (weather, sensor, maintenance features) feed a shared
trunk; training minimizes MAE against the measured power, optionally plus a
weighted MAE against the resistance-formula power (the physics-guided
variant, weight ``physics_weight``). Both loss terms live in normalized
target space so they are commensurate. Everything here is plain numpy with a
fixed-architecture backward pass; no autodiff.
"""
from __future__ import annotations

import hashlib
import json
from dataclasses import asdict, dataclass, replace
from pathlib import Path
from typing import Optional, Sequence

import numpy as np

from . import data as data_mod
from .data import Standardizer, expand_feature_names, feature_matrix, fit_standardizer
from .ef import predict_ef
from .exceptions import DivergenceError, SchemaError, UsageError
from .metrics import EvalReport, aggregate, compute_metrics
from .physics import ResistanceCoefficients
from .rpm import MultiplicativePolyModel

SCHEMA_VERSION = "1"

GROUP_ORDER = ("copernicus", "sensor", "external")
BRANCH_WIDTHS = {"copernicus": (128, 64), "sensor": (64, 32), "external": (64, 32)}
TRUNK_WIDTHS = (128, 64)
CONCAT_WIDTH = sum(w[1] for w in BRANCH_WIDTHS.values())
DROPOUT_RATE = 0.2


@dataclass(frozen=True)
class FeatureGroups:
    """Which features feed which branch; groups are disjoint and ordered."""

    copernicus: tuple = ("wave_height", "swell_height", "wave_dir",
                         "swell_dir", "wind_dir", "wind_speed")
    sensor: tuple = ("speed_through_water", "draught", "sea_depth",
                     "sea_temp", "predicted_rpm")
    external: tuple = ("days_since_polish", "days_since_drydock")

    def __post_init__(self) -> None:
        for name in GROUP_ORDER:
            group = tuple(getattr(self, name))
            object.__setattr__(self, name, group)
            if not group:
                raise SchemaError(f"feature group {name!r} must be non-empty")
        seen: set = set()
        for name in GROUP_ORDER:
            for feat in getattr(self, name):
                if feat in seen:
                    raise SchemaError(f"feature {feat!r} appears in more than one group")
                seen.add(feat)

    @property
    def all_features(self) -> tuple:
        return self.copernicus + self.sensor + self.external

    def group_features(self, name: str) -> tuple:
        return getattr(self, name)

    def to_dict(self) -> dict:
        return {name: list(getattr(self, name)) for name in GROUP_ORDER}

    @classmethod
    def from_dict(cls, payload: dict) -> "FeatureGroups":
        return cls(**{name: tuple(payload[name]) for name in GROUP_ORDER})


@dataclass(eq=False)
class MlpModel:
    """Weights and biases of the branched architecture.

    ``branches`` maps each group to two (W, b) dense layers; ``trunk`` holds
    the two shared hidden layers and the linear output layer. Hidden units
    are rectified; the output is identity. Dropout acts on the last hidden
    layer during training only.
    """

    branches: dict
    trunk: list
    dropout_rate: float = DROPOUT_RATE

    def __post_init__(self) -> None:
        if set(self.branches) != set(GROUP_ORDER):
            raise SchemaError(f"branches must be exactly {GROUP_ORDER}")
        for name in GROUP_ORDER:
            widths = BRANCH_WIDTHS[name]
            layers = self.branches[name]
            if len(layers) != 2:
                raise SchemaError(f"branch {name!r} must have 2 layers")
            for j, (W, b) in enumerate(layers):
                expected_out = widths[j]
                if W.ndim != 2 or W.shape[1] != expected_out or b.shape != (expected_out,):
                    raise SchemaError(f"branch {name!r} layer {j} must map to {expected_out} units")
            if layers[1][0].shape[0] != widths[0]:
                raise SchemaError(f"branch {name!r} layer widths must be {widths}")
        if len(self.trunk) != 3:
            raise SchemaError("trunk must have 3 layers (two hidden, one output)")
        expected = [(CONCAT_WIDTH, TRUNK_WIDTHS[0]),
                    (TRUNK_WIDTHS[0], TRUNK_WIDTHS[1]),
                    (TRUNK_WIDTHS[1], 1)]
        for j, ((W, b), (d_in, d_out)) in enumerate(zip(self.trunk, expected)):
            if W.shape != (d_in, d_out) or b.shape != (d_out,):
                raise SchemaError(f"trunk layer {j} must map {d_in} -> {d_out}")
        if not 0.0 <= self.dropout_rate < 1.0:
            raise SchemaError(f"dropout_rate must lie in [0, 1), got {self.dropout_rate}")
        for p in self.params():
            if not np.all(np.isfinite(p)):
                raise SchemaError("model parameters must be finite")

    @property
    def input_sizes(self) -> dict:
        return {name: self.branches[name][0][0].shape[0] for name in GROUP_ORDER}

    def params(self) -> list:
        """The parameter arrays in canonical order (shared references)."""
        out = []
        for name in GROUP_ORDER:
            for W, b in self.branches[name]:
                out.extend((W, b))
        for W, b in self.trunk:
            out.extend((W, b))
        return out

    def copy(self) -> "MlpModel":
        return MlpModel(
            branches={name: [(W.copy(), b.copy()) for W, b in self.branches[name]]
                      for name in GROUP_ORDER},
            trunk=[(W.copy(), b.copy()) for W, b in self.trunk],
            dropout_rate=self.dropout_rate,
        )

    def to_dict(self) -> dict:
        return {
            "dropout_rate": self.dropout_rate,
            "branches": {name: [[W.tolist(), b.tolist()] for W, b in self.branches[name]]
                         for name in GROUP_ORDER},
            "trunk": [[W.tolist(), b.tolist()] for W, b in self.trunk],
        }

    @classmethod
    def from_dict(cls, payload: dict) -> "MlpModel":
        return cls(
            branches={name: [(np.asarray(W, dtype=float), np.asarray(b, dtype=float))
                             for W, b in payload["branches"][name]] for name in GROUP_ORDER},
            trunk=[(np.asarray(W, dtype=float), np.asarray(b, dtype=float))
                   for W, b in payload["trunk"]],
            dropout_rate=float(payload["dropout_rate"]),
        )


def init_model(input_sizes: dict, rng: np.random.Generator,
               dropout_rate: float = DROPOUT_RATE) -> MlpModel:
    """Fan-in-scaled uniform initialization, drawn in canonical order."""

    def dense(d_in: int, d_out: int):
        bound = 1.0 / np.sqrt(d_in)
        W = rng.uniform(-bound, bound, (d_in, d_out))
        b = rng.uniform(-bound, bound, d_out)
        return W, b

    branches = {}
    for name in GROUP_ORDER:
        d_in = int(input_sizes[name])
        if d_in < 1:
            raise SchemaError(f"branch {name!r} needs at least one input feature")
        w1, w2 = BRANCH_WIDTHS[name]
        branches[name] = [dense(d_in, w1), dense(w1, w2)]
    trunk = [dense(CONCAT_WIDTH, TRUNK_WIDTHS[0]),
             dense(TRUNK_WIDTHS[0], TRUNK_WIDTHS[1]),
             dense(TRUNK_WIDTHS[1], 1)]
    return MlpModel(branches=branches, trunk=trunk, dropout_rate=dropout_rate)


def make_dropout_mask(shape, rate: float, rng: np.random.Generator) -> np.ndarray:
    """Inverted dropout mask: zeros with probability ``rate``, else 1/(1-rate)."""
    if rate == 0.0:
        return np.ones(shape)
    keep = 1.0 - rate
    return (rng.random(shape) < keep) / keep


def forward(model: MlpModel, inputs: dict, training: bool = False,
            rng: Optional[np.random.Generator] = None,
            dropout_mask: Optional[np.ndarray] = None):
    """Run the network; returns (predictions, cache for backward).

    ``inputs`` maps each group name to its standardized (n, d) block. In
    training mode dropout needs either an rng or an explicit mask; inference
    is deterministic and dropout-free.
    """
    if set(inputs) != set(GROUP_ORDER):
        raise SchemaError(f"inputs must cover exactly the groups {GROUP_ORDER}")
    sizes = model.input_sizes
    n = None
    for name in GROUP_ORDER:
        block = inputs[name]
        if block.ndim != 2 or block.shape[1] != sizes[name]:
            raise SchemaError(f"group {name!r}: expected (n, {sizes[name]}) inputs, "
                              f"got shape {block.shape}")
        if n is None:
            n = block.shape[0]
        elif block.shape[0] != n:
            raise SchemaError("all input groups must have the same row count")

    cache = {"inputs": inputs, "branch": {}, "trunk": []}
    outputs = []
    for name in GROUP_ORDER:
        a = inputs[name]
        layers = []
        for W, b in model.branches[name]:
            z = a @ W + b
            layers.append((a, z))
            a = np.maximum(z, 0.0)
        cache["branch"][name] = layers
        outputs.append(a)
    concat = np.concatenate(outputs, axis=1)
    cache["concat"] = concat

    a = concat
    for W, b in model.trunk[:2]:
        z = a @ W + b
        cache["trunk"].append((a, z))
        a = np.maximum(z, 0.0)

    if training:
        if dropout_mask is None:
            if rng is None:
                raise UsageError("training-mode forward needs an rng or an explicit dropout mask")
            dropout_mask = make_dropout_mask(a.shape, model.dropout_rate, rng)
        elif dropout_mask.shape != a.shape:
            raise SchemaError(f"dropout mask shape {dropout_mask.shape} != activations {a.shape}")
        a = a * dropout_mask
        cache["mask"] = dropout_mask
    else:
        cache["mask"] = None

    W, b = model.trunk[2]
    z = a @ W + b
    cache["trunk"].append((a, z))
    return z[:, 0], cache


def backward(model: MlpModel, cache: dict, dpred: np.ndarray) -> list:
    """Gradients for every parameter, aligned with ``model.params()`` order.

    Rectifier subgradient at exactly 0 is taken as 0.
    """
    grads_trunk = []
    a_drop, _ = cache["trunk"][2]
    dz = np.asarray(dpred, dtype=float)[:, None]
    W_out, _ = model.trunk[2]
    grads_trunk.append((a_drop.T @ dz, dz.sum(axis=0)))
    da = dz @ W_out.T
    if cache["mask"] is not None:
        da = da * cache["mask"]

    for j in (1, 0):
        a_in, z = cache["trunk"][j]
        dz = da * (z > 0.0)
        W, _ = model.trunk[j]
        grads_trunk.append((a_in.T @ dz, dz.sum(axis=0)))
        da = dz @ W.T

    grads = []
    offset = 0
    for name in GROUP_ORDER:
        width = BRANCH_WIDTHS[name][1]
        da_branch = da[:, offset:offset + width]
        offset += width
        branch_grads = []
        for j in (1, 0):
            a_in, z = cache["branch"][name][j]
            dz = da_branch * (z > 0.0)
            W, _ = model.branches[name][j]
            branch_grads.append((a_in.T @ dz, dz.sum(axis=0)))
            da_branch = dz @ W.T
        for W_g, b_g in reversed(branch_grads):
            grads.extend((W_g, b_g))
    for W_g, b_g in [grads_trunk[2], grads_trunk[1], grads_trunk[0]]:
        grads.extend((W_g, b_g))
    return grads


def composite_loss(predictions, targets, physics_targets=None, physics_weight: float = 0.0) -> float:
    """MAE against targets plus ``physics_weight`` times MAE against physics targets.

    All three vectors live in normalized target space. With weight 0 the
    physics term is skipped entirely and the result is the plain MAE.
    """
    predictions = np.asarray(predictions, dtype=float)
    targets = np.asarray(targets, dtype=float)
    if physics_weight < 0:
        raise UsageError(f"physics_weight must be >= 0, got {physics_weight}")
    if predictions.shape != targets.shape or predictions.ndim != 1:
        raise UsageError("predictions and targets must be equal-length vectors")
    if predictions.size == 0:
        raise UsageError("loss needs at least one element")
    loss = float(np.mean(np.abs(predictions - targets)))
    if physics_weight == 0.0:
        return loss
    if physics_targets is None:
        raise UsageError("physics targets required when physics_weight > 0")
    physics_targets = np.asarray(physics_targets, dtype=float)
    if physics_targets.shape != predictions.shape:
        raise UsageError("physics targets must match the prediction length")
    return loss + physics_weight * float(np.mean(np.abs(predictions - physics_targets)))


def loss_gradient(predictions, targets, physics_targets=None, physics_weight: float = 0.0) -> np.ndarray:
    """d(composite_loss)/d(predictions); the MAE subgradient at 0 residual is 0."""
    predictions = np.asarray(predictions, dtype=float)
    targets = np.asarray(targets, dtype=float)
    n = predictions.size
    grad = np.sign(predictions - targets) / n
    if physics_weight > 0.0:
        grad = grad + physics_weight * np.sign(predictions - np.asarray(physics_targets, dtype=float)) / n
    return grad


@dataclass
class AdamState:
    m: list
    v: list
    t: int = 0

    @classmethod
    def for_params(cls, params: Sequence[np.ndarray]) -> "AdamState":
        return cls(m=[np.zeros_like(p) for p in params],
                   v=[np.zeros_like(p) for p in params])


def adam_step(params: list, grads: list, state: AdamState, *,
              learning_rate: float = 1e-3, beta1: float = 0.9,
              beta2: float = 0.999, epsilon: float = 1e-8):
    """One bias-corrected Adam update, applied to ``params`` in place."""
    if len(params) != len(grads):
        raise UsageError("params and grads must align")
    state.t += 1
    correction1 = 1.0 - beta1**state.t
    correction2 = 1.0 - beta2**state.t
    for p, g, m, v in zip(params, grads, state.m, state.v):
        m *= beta1
        m += (1.0 - beta1) * g
        v *= beta2
        v += (1.0 - beta2) * g * g
        p -= learning_rate * (m / correction1) / (np.sqrt(v / correction2) + epsilon)
    return params, state


class EarlyStopping:
    """Stop after ``patience`` epochs without validation improvement.

    Tracks the best epoch and a snapshot of the parameters at that epoch so
    training can restore them afterwards.
    """

    def __init__(self, patience: int):
        if patience < 1:
            raise UsageError(f"patience must be >= 1, got {patience}")
        self.patience = patience
        self.best_loss = np.inf
        self.best_epoch = -1
        self.best_params: Optional[list] = None

    def update(self, epoch: int, val_loss: float, params: Sequence[np.ndarray]) -> bool:
        """Record this epoch; return True when training should stop now."""
        if val_loss < self.best_loss:
            self.best_loss = val_loss
            self.best_epoch = epoch
            self.best_params = [p.copy() for p in params]
            return False
        return epoch - self.best_epoch >= self.patience

    def restore(self, params: Sequence[np.ndarray]) -> None:
        if self.best_params is None:
            raise UsageError("no best epoch recorded yet")
        for p, best in zip(params, self.best_params):
            p[:] = best


@dataclass
class TrainConfig:
    """Training hyperparameters; physics_weight is the loss weight lambda."""

    batch_size: int = 16
    max_epochs: int = 200
    patience: int = 10
    validation_fraction: float = 0.2
    physics_weight: float = 0.0
    learning_rate: float = 1e-3
    beta1: float = 0.9
    beta2: float = 0.999
    epsilon: float = 1e-8
    seed: int = 0
    chronological_validation: bool = False
    monitor: str = "composite"
    encode_directions: bool = False

    def validate(self) -> None:
        if self.batch_size < 1 or self.max_epochs < 1:
            raise UsageError("batch_size and max_epochs must be >= 1")
        if self.patience < 1:
            raise UsageError(f"patience must be >= 1, got {self.patience}")
        if not 0.0 < self.validation_fraction < 1.0:
            raise UsageError("validation_fraction must lie strictly between 0 and 1")
        if self.physics_weight < 0:
            raise UsageError(f"physics_weight must be >= 0, got {self.physics_weight}")
        if self.learning_rate <= 0 or self.epsilon <= 0:
            raise UsageError("learning_rate and epsilon must be > 0")
        if not (0.0 <= self.beta1 < 1.0 and 0.0 <= self.beta2 < 1.0):
            raise UsageError("beta1 and beta2 must lie in [0, 1)")
        if self.monitor not in ("composite", "data"):
            raise UsageError(f"monitor must be 'composite' or 'data', got {self.monitor!r}")

    def to_dict(self) -> dict:
        return asdict(self)

    @classmethod
    def from_dict(cls, payload: dict) -> "TrainConfig":
        known = {f for f in cls.__dataclass_fields__}
        unknown = set(payload) - known
        if unknown:
            raise SchemaError(f"unknown training config keys: {sorted(unknown)}")
        return cls(**payload)


def config_hash(config: TrainConfig) -> str:
    return hashlib.sha256(
        json.dumps(config.to_dict(), sort_keys=True).encode("utf-8")).hexdigest()


@dataclass(eq=False)
class TrainedPredictor:
    """A trained network bundled with everything needed to predict from records."""

    model: MlpModel
    standardizer: Standardizer
    groups: FeatureGroups
    train_losses: tuple
    val_losses: tuple
    best_epoch: int
    config: TrainConfig
    rpm_model: Optional[MultiplicativePolyModel] = None


def _grouped(X: np.ndarray, widths: Sequence[int]) -> dict:
    blocks = {}
    offset = 0
    for name, width in zip(GROUP_ORDER, widths):
        blocks[name] = X[:, offset:offset + width]
        offset += width
    return blocks


def _expanded_widths(groups: FeatureGroups, encode_directions: bool) -> list:
    return [len(expand_feature_names(groups.group_features(name), encode_directions))
            for name in GROUP_ORDER]


def train(train_records, rpm_model: Optional[MultiplicativePolyModel],
          ef_coeffs: Optional[ResistanceCoefficients] = None,
          groups: Optional[FeatureGroups] = None,
          config: Optional[TrainConfig] = None) -> TrainedPredictor:
    """Train the network on preprocessed records.

    Pipeline: attach predicted RPM as a feature, split off the validation
    fraction, standardize from the training part only, optionally compute
    normalized physics targets from ``ef_coeffs``, then minibatch Adam on the
    composite loss with early stopping and best-epoch weight restoration.
    Deterministic given (data, config).

    Raises:
        UsageError: degenerate split, missing targets, or missing ef_coeffs
            with a positive physics weight.
        DivergenceError: the loss went non-finite.
    """
    config = config or TrainConfig()
    config.validate()
    groups = groups or FeatureGroups()
    rows = list(train_records)
    n = len(rows)
    if n < 2:
        raise UsageError("training needs at least two rows")
    if config.physics_weight > 0 and ef_coeffs is None:
        raise UsageError("physics_weight > 0 requires fitted ef coefficients")

    X = feature_matrix(rows, groups.all_features, rpm_model=rpm_model,
                       encode_directions=config.encode_directions)
    y = np.empty(n)
    for i, record in enumerate(rows):
        if record.shaft_power is None:
            raise UsageError(f"row {i}: shaft_power required for training")
        y[i] = record.shaft_power

    n_val = int(round(config.validation_fraction * n))
    n_val = min(max(n_val, 1), n - 1)
    rng = np.random.default_rng(config.seed)
    if config.chronological_validation:
        train_idx = np.arange(n - n_val)
        val_idx = np.arange(n - n_val, n)
    else:
        perm = rng.permutation(n)
        val_idx = perm[:n_val]
        train_idx = perm[n_val:]
    if train_idx.size < 1 or val_idx.size < 1:
        raise UsageError(f"validation split is degenerate for {n} rows")

    scaler = fit_standardizer([rows[i] for i in train_idx], feature_names=groups.all_features,
                              rpm_model=rpm_model, encode_directions=config.encode_directions)
    Xs = scaler.transform(X)
    yn = scaler.normalize_target(y)
    if config.physics_weight > 0:
        phin = scaler.normalize_target(predict_ef(ef_coeffs, rows))
    else:
        phin = None

    widths = _expanded_widths(groups, config.encode_directions)
    model = init_model(dict(zip(GROUP_ORDER, widths)), rng)
    params = model.params()
    state = AdamState.for_params(params)
    stopper = EarlyStopping(config.patience)

    X_train, y_train = Xs[train_idx], yn[train_idx]
    X_val, y_val = Xs[val_idx], yn[val_idx]
    phi_train = phin[train_idx] if phin is not None else None
    phi_val = phin[val_idx] if phin is not None else None
    val_inputs = _grouped(X_val, widths)
    monitor_weight = config.physics_weight if config.monitor == "composite" else 0.0
    monitor_phi = phi_val if monitor_weight > 0 else None

    train_losses = []
    val_losses = []
    n_train = train_idx.size
    for epoch in range(config.max_epochs):
        order = rng.permutation(n_train)
        loss_sum = 0.0
        for s in range(0, n_train, config.batch_size):
            batch = order[s:s + config.batch_size]
            inputs = _grouped(X_train[batch], widths)
            pred, cache = forward(model, inputs, training=True, rng=rng)
            phi_b = phi_train[batch] if phi_train is not None else None
            loss = composite_loss(pred, y_train[batch], phi_b, config.physics_weight)
            if not np.isfinite(loss):
                raise DivergenceError(f"non-finite training loss at epoch {epoch}")
            dpred = loss_gradient(pred, y_train[batch], phi_b, config.physics_weight)
            grads = backward(model, cache, dpred)
            adam_step(params, grads, state, learning_rate=config.learning_rate,
                      beta1=config.beta1, beta2=config.beta2, epsilon=config.epsilon)
            loss_sum += loss * batch.size
        train_losses.append(loss_sum / n_train)

        val_pred, _ = forward(model, val_inputs, training=False)
        val_loss = composite_loss(val_pred, y_val, monitor_phi, monitor_weight)
        if not np.isfinite(val_loss):
            raise DivergenceError(f"non-finite validation loss at epoch {epoch}")
        val_losses.append(val_loss)
        if stopper.update(epoch, val_loss, params):
            break

    stopper.restore(params)
    return TrainedPredictor(
        model=model, standardizer=scaler, groups=groups,
        train_losses=tuple(train_losses), val_losses=tuple(val_losses),
        best_epoch=stopper.best_epoch, config=config, rpm_model=rpm_model,
    )


def predict(predictor: TrainedPredictor, records) -> np.ndarray:
    """Predict shaft power in kW: standardize, forward (inference), denormalize."""
    rows = list(records)
    if not rows:
        return np.empty(0)
    X = feature_matrix(rows, predictor.groups.all_features, rpm_model=predictor.rpm_model,
                       encode_directions=predictor.config.encode_directions)
    Xs = predictor.standardizer.transform(X)
    widths = _expanded_widths(predictor.groups, predictor.config.encode_directions)
    pred, _ = forward(predictor.model, _grouped(Xs, widths), training=False)
    return predictor.standardizer.denormalize_target(pred)


@dataclass(frozen=True)
class SweepCell:
    """Outcome of one lambda grid point: a report, or the error that stopped it."""

    physics_weight: float
    report: Optional[EvalReport] = None
    error: Optional[str] = None


def lambda_sweep(train_records, test_records, rpm_model, ef_coeffs,
                 grid: Sequence[float], groups: Optional[FeatureGroups] = None,
                 config: Optional[TrainConfig] = None, tag: str = "sweep") -> list:
    """Train one predictor per physics weight and evaluate each on the test set.

    Every cell shares the same seed policy (the config seed), so cells differ
    only in the loss weight. Failed cells are marked with their error message
    instead of aborting the sweep. Results are ordered by weight.
    """
    from .exceptions import ShaftPowerError

    grid = sorted(float(w) for w in grid)
    if not grid:
        raise UsageError("lambda grid must be non-empty")
    config = config or TrainConfig()
    test_rows = list(test_records)
    y_test = np.empty(len(test_rows))
    for i, record in enumerate(test_rows):
        if record.shaft_power is None:
            raise UsageError(f"test row {i}: shaft_power required for evaluation")
        y_test[i] = record.shaft_power

    cells = []
    for weight in grid:
        cell_config = replace(config, physics_weight=weight)
        try:
            predictor = train(train_records, rpm_model, ef_coeffs, groups, cell_config)
            predicted = predict(predictor, test_rows)
            method = "PGNN" if weight > 0 else "NN"
            report = aggregate(method, f"{tag}(lambda={weight:g})",
                               [compute_metrics(y_test, predicted)])
            cells.append(SweepCell(physics_weight=weight, report=report))
        except ShaftPowerError as exc:
            cells.append(SweepCell(physics_weight=weight, error=str(exc)))
    return cells


def best_lambda(cells: Sequence[SweepCell]) -> float:
    """The grid weight whose report has the lowest test MAPE."""
    best: Optional[SweepCell] = None
    for cell in cells:
        if cell.report is None:
            continue
        if best is None or cell.report.mean.mape < best.report.mean.mape:
            best = cell
    if best is None:
        raise UsageError("no sweep cell completed successfully")
    return best.physics_weight


def save_predictor(predictor: TrainedPredictor, path) -> None:
    """Serialize a predictor (weights, scaler, wiring, config) to versioned JSON."""
    payload = {
        "schema_version": SCHEMA_VERSION,
        "config": predictor.config.to_dict(),
        "config_hash": config_hash(predictor.config),
        "groups": predictor.groups.to_dict(),
        "standardizer": predictor.standardizer.to_dict(),
        "model": predictor.model.to_dict(),
        "train_losses": [float(v) for v in predictor.train_losses],
        "val_losses": [float(v) for v in predictor.val_losses],
        "best_epoch": predictor.best_epoch,
        "rpm_model": predictor.rpm_model.to_dict() if predictor.rpm_model is not None else None,
    }
    Path(path).write_text(json.dumps(payload, sort_keys=True) + "\n", encoding="utf-8")


def load_predictor(path) -> TrainedPredictor:
    payload = json.loads(Path(path).read_text(encoding="utf-8"))
    if payload.get("schema_version") != SCHEMA_VERSION:
        raise SchemaError(f"unsupported predictor schema_version {payload.get('schema_version')!r}")
    rpm_payload = payload.get("rpm_model")
    return TrainedPredictor(
        model=MlpModel.from_dict(payload["model"]),
        standardizer=Standardizer.from_dict(payload["standardizer"]),
        groups=FeatureGroups.from_dict(payload["groups"]),
        train_losses=tuple(payload["train_losses"]),
        val_losses=tuple(payload["val_losses"]),
        best_epoch=int(payload["best_epoch"]),
        config=TrainConfig.from_dict(payload["config"]),
        rpm_model=MultiplicativePolyModel.from_dict(rpm_payload) if rpm_payload else None,
    )


def write_history_csv(predictor: TrainedPredictor, path) -> None:
    """Per-epoch train/validation losses as CSV."""
    lines = ["epoch,train_loss,val_loss"]
    for epoch, (tr, va) in enumerate(zip(predictor.train_losses, predictor.val_losses)):
        lines.append(f"{epoch},{data_mod.format_float(tr)},{data_mod.format_float(va)}")
    Path(path).write_text("\n".join(lines) + "\n", encoding="utf-8")

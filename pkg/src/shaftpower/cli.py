"""Command-line front end: a file-based pipeline over the library stages.

Each subcommand consumes and produces documented files (CSV data, JSON
models) so stages can run and be tested independently. Every artifact-writing
command also emits a manifest JSON next to its outputs recording the command,
a hash of the resolved options, the seeds involved, the input/output paths,
the tool version, and the wall-clock duration. Numeric output is formatted at
17 significant digits, so re-running a command on identical inputs reproduces
its outputs byte for byte; manifests carry wall-clock fields and are the one
exception. On failure, partially written outputs are removed and the process
exits 1 with a single diagnostic line on stderr.
"""
from __future__ import annotations

import argparse
import csv
import hashlib
import json
import sys
import time
from dataclasses import dataclass, replace
from datetime import datetime, timezone
from pathlib import Path
from typing import Optional, Sequence

import numpy as np

from . import __version__, data, ef, network, rpm, synth
from .exceptions import ShaftPowerError, UsageError
from .metrics import MetricSet, aggregate, compute_metrics, format_report_table

MANIFEST_SCHEMA_VERSION = "1"


@dataclass(frozen=True)
class RunManifest:
    """Provenance stamp written alongside every artifact-producing run."""

    command: str
    config_hash: str
    seeds: tuple
    inputs: tuple
    outputs: tuple
    version: str
    duration_seconds: float
    created_utc: str

    def to_dict(self) -> dict:
        return {
            "schema_version": MANIFEST_SCHEMA_VERSION,
            "command": self.command,
            "config_hash": self.config_hash,
            "seeds": list(self.seeds),
            "inputs": list(self.inputs),
            "outputs": list(self.outputs),
            "version": self.version,
            "duration_seconds": self.duration_seconds,
            "created_utc": self.created_utc,
        }


class _OutputTracker:
    """Claims output paths as they are written so failures can clean up."""

    def __init__(self) -> None:
        self.paths: list[Path] = []
        self.start = time.perf_counter()

    def claim(self, path) -> Path:
        p = Path(path)
        self.paths.append(p)
        return p

    def cleanup(self) -> None:
        for p in self.paths:
            try:
                p.unlink(missing_ok=True)
            except OSError:
                pass


def _sha256_of(payload: dict) -> str:
    return hashlib.sha256(
        json.dumps(payload, sort_keys=True, default=str).encode("utf-8")).hexdigest()


def _resolved_args(args: argparse.Namespace) -> dict:
    return {k: (str(v) if isinstance(v, Path) else v)
            for k, v in vars(args).items() if k not in ("func", "command")}


def _emit_manifest(tracker: _OutputTracker, args: argparse.Namespace, manifest_path,
                   seeds: Sequence[int], inputs: Sequence, outputs: Sequence,
                   extra: Optional[dict] = None) -> None:
    resolved = _resolved_args(args)
    if extra:
        resolved.update(extra)
    manifest = RunManifest(
        command=args.command,
        config_hash=_sha256_of(resolved),
        seeds=tuple(int(s) for s in seeds),
        inputs=tuple(str(p) for p in inputs),
        outputs=tuple(str(p) for p in outputs),
        version=__version__,
        duration_seconds=time.perf_counter() - tracker.start,
        created_utc=datetime.now(timezone.utc).isoformat(),
    )
    path = tracker.claim(manifest_path)
    path.write_text(json.dumps(manifest.to_dict(), sort_keys=True, indent=2) + "\n",
                    encoding="utf-8")


def _sibling_manifest(out_path) -> Path:
    out_path = Path(out_path)
    return out_path.with_name(out_path.name + ".manifest.json")


def _load_records(path, args, *, require_power: bool = True,
                  require_rpm: bool = True) -> data.Dataset:
    dataset = data.load_csv(path, angles=args.angles)
    if args.air_temp_fallback != "none":
        mode = "sea_temp" if args.air_temp_fallback == "sea-temp" else args.air_temp_fallback
        dataset = data.apply_air_temp_fallback(dataset, mode=mode, value=args.air_temp_value)
    return data.preprocess(dataset, require_power=require_power, require_rpm=require_rpm)


def _parse_grid(text: str) -> list:
    """Lambda grid: either 'a,b,c' or 'start:stop:step' (stop inclusive)."""
    try:
        if ":" in text:
            parts = text.split(":")
            if len(parts) != 3:
                raise UsageError(f"grid range must be start:stop:step, got {text!r}")
            start, stop, step = (float(p) for p in parts)
            if step <= 0 or stop < start:
                raise UsageError(f"grid range needs step > 0 and stop >= start, got {text!r}")
            count = int(np.floor((stop - start) / step + 1e-9)) + 1
            values = [start + k * step for k in range(count)]
        else:
            values = [float(p) for p in text.split(",") if p.strip()]
    except ValueError as exc:
        raise UsageError(f"could not parse lambda grid {text!r}: {exc}") from None
    if not values:
        raise UsageError(f"empty lambda grid {text!r}")
    if any(v < 0 for v in values):
        raise UsageError("lambda values must be >= 0")
    return values


def _train_config(args, *, seed: int, physics_weight: float) -> network.TrainConfig:
    return network.TrainConfig(
        batch_size=args.batch_size,
        max_epochs=args.epochs,
        patience=args.patience,
        validation_fraction=args.val_fraction,
        physics_weight=physics_weight,
        seed=seed,
    )


def _cmd_generate(args, tracker: _OutputTracker) -> None:
    if args.config is not None:
        payload = json.loads(Path(args.config).read_text(encoding="utf-8"))
        config = synth.config_from_dict(payload)
    else:
        config = synth.SynthConfig()
    overrides = {}
    if args.rows is not None:
        overrides["row_count"] = args.rows
    if args.seed is not None:
        overrides["seed"] = args.seed
    if args.noise is not None:
        overrides["noise_rel_std"] = args.noise
    if overrides:
        config = replace(config, **overrides)
    dataset = synth.generate(config)
    out = tracker.claim(args.out)
    synth.export_csv(dataset, out)
    print(f"generate: wrote {len(dataset)} rows to {out}")
    _emit_manifest(tracker, args, _sibling_manifest(out), seeds=[config.seed],
                   inputs=[args.config] if args.config else [], outputs=[out],
                   extra={"resolved_config": synth.config_to_dict(config)})


def _cmd_fit_ef(args, tracker: _OutputTracker) -> None:
    train = _load_records(args.train, args, require_rpm=False)
    config = ef.EfFitConfig(seed=args.seed, max_iterations=args.max_iterations,
                            multistart_count=args.restarts)
    result = ef.fit_ef(train, config)
    out = tracker.claim(args.out)
    ef.save_coefficients(result.coefficients, out)
    print(f"fit-ef: train_mse={result.train_mse:.6g} converged={result.converged} "
          f"iterations={result.iterations_used} -> {out}")
    _emit_manifest(tracker, args, _sibling_manifest(out), seeds=[args.seed],
                   inputs=[args.train], outputs=[out])


def _cmd_fit_rpm(args, tracker: _OutputTracker) -> None:
    train = _load_records(args.train, args)
    config = rpm.RpmFitConfig(order=args.order, seed=args.seed)
    if args.select_features:
        features = rpm.greedy_feature_selection(train, _RPM_CANDIDATES, config)
    else:
        features = list(rpm.DEFAULT_RPM_FEATURES)
    model = rpm.fit_rpm_als(train, features, config)
    out = tracker.claim(args.out)
    rpm.save_model(model, out)
    mse = float(np.mean((model.evaluate_records(list(train)) - train.column("shaft_rpm")) ** 2))
    print(f"fit-rpm: features={','.join(features)} train_mse={mse:.6g} -> {out}")
    _emit_manifest(tracker, args, _sibling_manifest(out), seeds=[args.seed],
                   inputs=[args.train], outputs=[out])


def _cmd_train(args, tracker: _OutputTracker) -> None:
    train_rows = _load_records(args.train, args)
    rpm_model = rpm.load_model(args.rpm)
    ef_coeffs = ef.load_coefficients(args.ef) if args.ef else None
    config = _train_config(args, seed=args.seed, physics_weight=args.physics_weight)
    predictor = network.train(train_rows, rpm_model, ef_coeffs, config=config)
    out = tracker.claim(args.out)
    network.save_predictor(predictor, out)
    outputs = [out]
    if args.history:
        history = tracker.claim(args.history)
        network.write_history_csv(predictor, history)
        outputs.append(history)
    print(f"train: best_epoch={predictor.best_epoch} "
          f"val_loss={predictor.val_losses[predictor.best_epoch]:.6g} -> {out}")
    inputs = [args.train, args.rpm] + ([args.ef] if args.ef else [])
    _emit_manifest(tracker, args, _sibling_manifest(out), seeds=[args.seed],
                   inputs=inputs, outputs=outputs)


def _cmd_predict(args, tracker: _OutputTracker) -> None:
    dataset = data.load_csv(args.data, angles=args.angles)
    if args.air_temp_fallback != "none":
        mode = "sea_temp" if args.air_temp_fallback == "sea-temp" else args.air_temp_fallback
        dataset = data.apply_air_temp_fallback(dataset, mode=mode, value=args.air_temp_value)
    rows = list(dataset)
    if args.method == "nn":
        predictor = network.load_predictor(args.model)
        predicted = network.predict(predictor, rows)
    else:
        coeffs = ef.load_coefficients(args.model)
        predicted = ef.predict_ef(coeffs, rows)
    out = tracker.claim(args.out)
    with open(out, "w", newline="", encoding="utf-8") as handle:
        writer = csv.writer(handle)
        writer.writerow(["timestamp", "predicted_power_kw"])
        for record, value in zip(rows, predicted):
            ts = record.timestamp.isoformat() if record.timestamp is not None else ""
            writer.writerow([ts, data.format_float(value)])
    print(f"predict: wrote {len(rows)} predictions to {out}")
    _emit_manifest(tracker, args, _sibling_manifest(out), seeds=[],
                   inputs=[args.model, args.data], outputs=[out])


def _read_predictions(path) -> list:
    with open(path, newline="", encoding="utf-8") as handle:
        reader = csv.DictReader(handle)
        if reader.fieldnames is None or "predicted_power_kw" not in reader.fieldnames:
            raise UsageError(f"{path}: expected a predictions CSV with a "
                             "'predicted_power_kw' column")
        out = []
        for i, row in enumerate(reader):
            try:
                out.append((row.get("timestamp", ""), float(row["predicted_power_kw"])))
            except (TypeError, ValueError):
                raise UsageError(f"{path}: row {i}: unreadable prediction value")
    if not out:
        raise UsageError(f"{path}: no prediction rows")
    return out


def _cmd_evaluate(args, tracker: _OutputTracker) -> None:
    predictions = _read_predictions(args.predictions)
    truth = data.load_csv(args.actual, angles=args.angles)
    if len(truth) != len(predictions):
        raise UsageError(f"prediction rows ({len(predictions)}) != ground truth rows "
                         f"({len(truth)})")
    y = np.empty(len(truth))
    y_hat = np.empty(len(truth))
    for i, (record, (ts, value)) in enumerate(zip(truth, predictions)):
        truth_ts = record.timestamp.isoformat() if record.timestamp is not None else ""
        if ts != truth_ts:
            raise UsageError(f"row {i}: prediction timestamp {ts!r} does not match "
                             f"ground truth {truth_ts!r}")
        if record.shaft_power is None:
            raise UsageError(f"row {i}: ground truth shaft_power missing")
        y[i] = record.shaft_power
        y_hat[i] = value
    m = compute_metrics(y, y_hat)
    print(f"evaluate: mae={m.mae:.4f} rmse={m.rmse:.4f} mape={m.mape:.4f}% r2={m.r2:.6f}")
    if args.out:
        out = tracker.claim(args.out)
        payload = {"mae": m.mae, "rmse": m.rmse, "mape": m.mape, "r2": m.r2,
                   "n_rows": int(len(truth))}
        out.write_text(json.dumps(payload, sort_keys=True, indent=2) + "\n", encoding="utf-8")
        _emit_manifest(tracker, args, _sibling_manifest(out), seeds=[],
                       inputs=[args.predictions, args.actual], outputs=[out])


def _metric_row(method: str, seed, m: MetricSet) -> list:
    return [method, str(seed), data.format_float(m.mae), data.format_float(m.rmse),
            data.format_float(m.mape), data.format_float(m.r2)]


def _cmd_compare(args, tracker: _OutputTracker) -> None:
    if args.repeats < 1:
        raise UsageError(f"--repeats must be >= 1, got {args.repeats}")
    train_rows = _load_records(args.train, args)
    test_rows = _load_records(args.test, args)
    y_test = test_rows.column("shaft_power")

    rpm_model = rpm.fit_rpm_als(train_rows)
    ef_result = ef.fit_ef(train_rows, ef.EfFitConfig(seed=args.seed))
    ef_metrics = compute_metrics(y_test, ef.predict_ef(ef_result.coefficients, list(test_rows)))

    per_seed = [("EF", args.seed, ef_metrics)]
    nn_runs, pgnn_runs = [], []
    first_pgnn_predictions = None
    for i in range(args.repeats):
        seed = args.seed + i
        nn_pred = network.train(train_rows, rpm_model, None,
                                config=_train_config(args, seed=seed, physics_weight=0.0))
        m_nn = compute_metrics(y_test, network.predict(nn_pred, list(test_rows)))
        nn_runs.append(m_nn)
        per_seed.append(("NN", seed, m_nn))

        pg_pred = network.train(train_rows, rpm_model, ef_result.coefficients,
                                config=_train_config(args, seed=seed,
                                                     physics_weight=args.physics_weight))
        pg_values = network.predict(pg_pred, list(test_rows))
        if first_pgnn_predictions is None:
            first_pgnn_predictions = pg_values
        m_pg = compute_metrics(y_test, pg_values)
        pgnn_runs.append(m_pg)
        per_seed.append(("PGNN", seed, m_pg))

    reports = [aggregate("EF", args.tag, [ef_metrics]),
               aggregate("NN", args.tag, nn_runs),
               aggregate("PGNN", args.tag, pgnn_runs)]
    table = format_report_table(reports)

    out_dir = Path(args.out)
    out_dir.mkdir(parents=True, exist_ok=True)
    report_txt = tracker.claim(out_dir / "report.txt")
    report_txt.write_text(table, encoding="utf-8")
    report_json = tracker.claim(out_dir / "report.json")
    report_json.write_text(json.dumps({"schema_version": "1",
                                       "reports": [r.to_dict() for r in reports]},
                                      sort_keys=True, indent=2) + "\n", encoding="utf-8")

    per_seed_csv = tracker.claim(out_dir / "per_seed_metrics.csv")
    with open(per_seed_csv, "w", newline="", encoding="utf-8") as handle:
        writer = csv.writer(handle)
        writer.writerow(["method", "seed", "mae", "rmse", "mape", "r2"])
        for method, seed, m in per_seed:
            writer.writerow(_metric_row(method, seed, m))

    timeseries_csv = tracker.claim(out_dir / "timeseries.csv")
    with open(timeseries_csv, "w", newline="", encoding="utf-8") as handle:
        writer = csv.writer(handle)
        writer.writerow(["timestamp", "actual_power_kw", "predicted_power_kw"])
        for record, actual, predicted in zip(test_rows, y_test, first_pgnn_predictions):
            ts = record.timestamp.isoformat() if record.timestamp is not None else ""
            writer.writerow([ts, data.format_float(actual), data.format_float(predicted)])

    sys.stdout.write(table)
    seeds = [args.seed + i for i in range(args.repeats)]
    _emit_manifest(tracker, args, out_dir / "manifest.json", seeds=seeds,
                   inputs=[args.train, args.test],
                   outputs=[report_txt, report_json, per_seed_csv, timeseries_csv])


_SWEEP_COLUMNS = ("lambda", "MAE", "RMSE", "R2", "MAPE (%)", "status")


def _format_sweep_table(cells: Sequence[network.SweepCell]) -> str:
    rows = [list(_SWEEP_COLUMNS)]
    for cell in cells:
        if cell.report is not None:
            m = cell.report.mean
            rows.append([f"{cell.physics_weight:g}", f"{m.mae:.2f}", f"{m.rmse:.2f}",
                         f"{m.r2:.3f}", f"{m.mape:.2f}", "ok"])
        else:
            rows.append([f"{cell.physics_weight:g}", "-", "-", "-", "-",
                         f"failed: {cell.error}"])
    widths = [max(len(row[j]) for row in rows) for j in range(len(_SWEEP_COLUMNS))]
    lines = ["  ".join(cell.ljust(w) for cell, w in zip(row, widths)).rstrip()
             for row in rows]
    return "\n".join(lines) + "\n"


def _cmd_lambda_sweep(args, tracker: _OutputTracker) -> None:
    grid = _parse_grid(args.grid)
    train_rows = _load_records(args.train, args)
    test_rows = _load_records(args.test, args)
    rpm_model = rpm.fit_rpm_als(train_rows)
    ef_result = ef.fit_ef(train_rows, ef.EfFitConfig(seed=args.seed))
    config = _train_config(args, seed=args.seed, physics_weight=0.0)
    cells = network.lambda_sweep(train_rows, test_rows, rpm_model, ef_result.coefficients,
                                 grid, config=config, tag=args.tag)

    out_dir = Path(args.out)
    out_dir.mkdir(parents=True, exist_ok=True)
    table = _format_sweep_table(cells)
    sweep_txt = tracker.claim(out_dir / "sweep.txt")
    sweep_txt.write_text(table, encoding="utf-8")

    sweep_csv = tracker.claim(out_dir / "sweep.csv")
    with open(sweep_csv, "w", newline="", encoding="utf-8") as handle:
        writer = csv.writer(handle)
        writer.writerow(["lambda", "mae", "rmse", "mape", "r2", "error"])
        for cell in cells:
            if cell.report is not None:
                m = cell.report.mean
                writer.writerow([data.format_float(cell.physics_weight),
                                 data.format_float(m.mae), data.format_float(m.rmse),
                                 data.format_float(m.mape), data.format_float(m.r2), ""])
            else:
                writer.writerow([data.format_float(cell.physics_weight),
                                 "", "", "", "", cell.error])

    best = network.best_lambda(cells)
    sweep_json = tracker.claim(out_dir / "sweep.json")
    payload = {"schema_version": "1",
               "best_lambda": best,
               "cells": [{"lambda": cell.physics_weight,
                          "report": cell.report.to_dict() if cell.report else None,
                          "error": cell.error} for cell in cells]}
    sweep_json.write_text(json.dumps(payload, sort_keys=True, indent=2) + "\n",
                          encoding="utf-8")

    sys.stdout.write(table)
    print(f"lambda-sweep: best lambda by test MAPE = {best:g}")
    _emit_manifest(tracker, args, out_dir / "manifest.json", seeds=[args.seed],
                   inputs=[args.train, args.test],
                   outputs=[sweep_txt, sweep_csv, sweep_json])


_RPM_CANDIDATES = ("draught", "sea_depth", "sea_temp", "wave_height", "swell_height",
                   "wind_speed", "days_since_polish", "days_since_drydock")


def _add_csv_options(parser: argparse.ArgumentParser) -> None:
    parser.add_argument("--angles", choices=("radians", "degrees"), default="radians",
                        help="unit of the direction columns in input CSVs")
    parser.add_argument("--air-temp-fallback", choices=("none", "constant", "sea-temp"),
                        default="none", help="how to fill missing air temperatures")
    parser.add_argument("--air-temp-value", type=float, default=15.0,
                        help="constant used by --air-temp-fallback constant")


def _add_train_options(parser: argparse.ArgumentParser) -> None:
    parser.add_argument("--epochs", type=int, default=200, help="maximum training epochs")
    parser.add_argument("--batch-size", type=int, default=16)
    parser.add_argument("--patience", type=int, default=10,
                        help="early-stopping patience in epochs")
    parser.add_argument("--val-fraction", type=float, default=0.2,
                        help="fraction of training rows held out for validation")


def build_parser() -> argparse.ArgumentParser:
    parser = argparse.ArgumentParser(
        prog="shaftpower",
        description="Vessel shaft-power prediction: synthetic data, empirical "
                    "resistance formulas, and (physics-guided) neural networks.",
    )
    parser.add_argument("--version", action="version", version=f"%(prog)s {__version__}")
    sub = parser.add_subparsers(dest="command", required=True)

    p = sub.add_parser("generate", help="generate a synthetic voyage CSV")
    p.add_argument("--config", type=Path, help="generator config JSON (defaults used if omitted)")
    p.add_argument("--out", type=Path, required=True, help="output CSV path")
    p.add_argument("--rows", type=int, help="override row count")
    p.add_argument("--seed", type=int, help="override generator seed")
    p.add_argument("--noise", type=float, help="override relative power noise std")
    p.set_defaults(func=_cmd_generate)

    p = sub.add_parser("fit-ef", help="fit the empirical resistance formula coefficients")
    p.add_argument("--train", type=Path, required=True, help="training CSV")
    p.add_argument("--out", type=Path, required=True, help="output coefficients JSON")
    p.add_argument("--seed", type=int, default=0)
    p.add_argument("--max-iterations", type=int, default=5000)
    p.add_argument("--restarts", type=int, default=8, help="multistart restart count")
    _add_csv_options(p)
    p.set_defaults(func=_cmd_fit_ef)

    p = sub.add_parser("fit-rpm", help="fit the multiplicative polynomial RPM model")
    p.add_argument("--train", type=Path, required=True, help="training CSV")
    p.add_argument("--out", type=Path, required=True, help="output model JSON")
    p.add_argument("--order", type=int, default=3, help="polynomial order")
    p.add_argument("--seed", type=int, default=0, help="seed for the selection split")
    p.add_argument("--select-features", action="store_true",
                   help="greedy feature selection instead of the default feature set")
    _add_csv_options(p)
    p.set_defaults(func=_cmd_fit_rpm)

    p = sub.add_parser("train", help="train the (physics-guided) network")
    p.add_argument("--train", type=Path, required=True, help="training CSV")
    p.add_argument("--rpm", type=Path, required=True, help="fitted RPM model JSON")
    p.add_argument("--ef", type=Path, help="fitted EF coefficients JSON (needed when lambda > 0)")
    p.add_argument("--lambda", dest="physics_weight", type=float, default=0.0,
                   help="physics loss weight (0 = plain network)")
    p.add_argument("--seed", type=int, default=0)
    p.add_argument("--out", type=Path, required=True, help="output predictor JSON")
    p.add_argument("--history", type=Path, help="optional per-epoch loss CSV")
    _add_train_options(p)
    _add_csv_options(p)
    p.set_defaults(func=_cmd_train)

    p = sub.add_parser("predict", help="predict shaft power for a CSV")
    p.add_argument("--model", type=Path, required=True,
                   help="predictor JSON (nn) or coefficients JSON (ef)")
    p.add_argument("--method", choices=("nn", "ef"), default="nn")
    p.add_argument("--data", type=Path, required=True, help="input CSV")
    p.add_argument("--out", type=Path, required=True, help="output predictions CSV")
    _add_csv_options(p)
    p.set_defaults(func=_cmd_predict)

    p = sub.add_parser("evaluate", help="score a predictions CSV against ground truth")
    p.add_argument("--predictions", type=Path, required=True, help="predictions CSV")
    p.add_argument("--actual", type=Path, required=True, help="ground-truth CSV")
    p.add_argument("--out", type=Path, help="optional metrics JSON")
    _add_csv_options(p)
    p.set_defaults(func=_cmd_evaluate)

    p = sub.add_parser("compare", help="EF vs NN vs PGNN benchmark report")
    p.add_argument("--train", type=Path, required=True, help="training CSV")
    p.add_argument("--test", type=Path, required=True, help="test CSV")
    p.add_argument("--out", type=Path, required=True, help="output directory")
    p.add_argument("--repeats", type=int, default=10, help="seeded training repeats")
    p.add_argument("--lambda", dest="physics_weight", type=float, default=0.1,
                   help="physics loss weight for the PGNN rows")
    p.add_argument("--seed", type=int, default=0, help="base seed; repeats use seed+i")
    p.add_argument("--tag", default="synthetic", help="label for the report's vessel column")
    _add_train_options(p)
    _add_csv_options(p)
    p.set_defaults(func=_cmd_compare)

    p = sub.add_parser("lambda-sweep", help="sweep the physics loss weight")
    p.add_argument("--train", type=Path, required=True, help="training CSV")
    p.add_argument("--test", type=Path, required=True, help="test CSV")
    p.add_argument("--grid", required=True,
                   help="lambda grid: 'a,b,c' or 'start:stop:step' (stop inclusive)")
    p.add_argument("--out", type=Path, required=True, help="output directory")
    p.add_argument("--seed", type=int, default=0, help="shared seed for every cell")
    p.add_argument("--tag", default="synthetic", help="label for the report tag")
    _add_train_options(p)
    _add_csv_options(p)
    p.set_defaults(func=_cmd_lambda_sweep)

    return parser


def main(argv: Optional[Sequence[str]] = None) -> int:
    args = build_parser().parse_args(argv)
    tracker = _OutputTracker()
    try:
        args.func(args, tracker)
    except (ShaftPowerError, OSError, ValueError) as exc:
        tracker.cleanup()
        print(f"error: {exc}", file=sys.stderr)
        return 1
    return 0


if __name__ == "__main__":
    sys.exit(main())

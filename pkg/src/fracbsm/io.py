"""File formats: features/history/comparison/prediction CSVs, model JSON, run manifests."""

from __future__ import annotations

import csv
import hashlib
import json
import platform
from datetime import datetime, timezone
from pathlib import Path

import numpy as np

from .bsm import OptionParams
from .dataset import FeatureRow, NormStats
from .nn import MlpModel

FEATURES_HEADER = ["S", "K", "T", "r", "sigma", "option_price", "frac_time_deriv", "frac_price_deriv", "valid"]
HISTORY_HEADER = ["epoch", "train_loss", "val_loss"]
COMPARISON_HEADER = ["optimizer", "seed", "epoch", "train_loss", "val_loss"]
PREDICTIONS_HEADER = ["row_id", "true_price", "predicted_price"]
MODEL_SCHEMA_VERSION = 1


class FormatError(ValueError):
    """Malformed or incompatible input file."""


def fmt(x) -> str:
    """Shortest decimal string that round-trips to the same double."""
    return repr(float(x))


def _write_csv(path, header, rows):
    path = Path(path)
    path.parent.mkdir(parents=True, exist_ok=True)
    with open(path, "w", newline="") as fh:
        w = csv.writer(fh, lineterminator="\n")
        w.writerow(header)
        w.writerows(rows)
    return path


def _read_csv(path, header):
    with open(path, newline="") as fh:
        reader = csv.reader(fh)
        try:
            found = next(reader)
        except StopIteration:
            raise FormatError(f"{path}: empty file") from None
        if found != header:
            raise FormatError(f"{path}: expected header {','.join(header)}, got {','.join(found)}")
        rows = []
        for lineno, row in enumerate(reader, start=2):
            if len(row) != len(header):
                raise FormatError(f"{path}:{lineno}: expected {len(header)} fields, got {len(row)}")
            rows.append(row)
    return rows


def write_features(path, rows: list[FeatureRow]):
    return _write_csv(
        path,
        FEATURES_HEADER,
        (
            [
                fmt(r.params.S), fmt(r.params.K), fmt(r.params.T), fmt(r.params.r), fmt(r.params.sigma),
                fmt(r.option_price), fmt(r.frac_time_deriv), fmt(r.frac_price_deriv), "1" if r.valid else "0",
            ]
            for r in rows
        ),
    )


def read_features(path) -> list[FeatureRow]:
    out = []
    for lineno, raw in enumerate(_read_csv(path, FEATURES_HEADER), start=2):
        try:
            S, K, T, r, sigma, price, d_time, d_price = (float(v) for v in raw[:8])
            if raw[8] not in ("0", "1"):
                raise ValueError(f"valid flag must be 0 or 1, got {raw[8]!r}")
            out.append(
                FeatureRow(
                    params=OptionParams(S=S, K=K, T=T, r=r, sigma=sigma),
                    option_price=price,
                    frac_time_deriv=d_time,
                    frac_price_deriv=d_price,
                    valid=raw[8] == "1",
                )
            )
        except ValueError as exc:
            raise FormatError(f"{path}:{lineno}: {exc}") from None
    return out


def write_history(path, history):
    return _write_csv(path, HISTORY_HEADER, ([str(e), fmt(tr), fmt(va)] for e, tr, va in history.rows()))


def write_comparison(path, records):
    """``records`` yields (optimizer, seed, TrainHistory); epoch 0 holds the shared initial weights."""
    rows = []
    for opt, seed, history in records:
        for e, tr, va in history.rows(include_initial=True):
            rows.append([opt, str(seed), str(e), fmt(tr), fmt(va)])
    return _write_csv(path, COMPARISON_HEADER, rows)


def write_predictions(path, row_ids, true_prices, predicted):
    return _write_csv(
        path,
        PREDICTIONS_HEADER,
        ([str(i), fmt(t), fmt(p)] for i, t, p in zip(row_ids, true_prices, predicted)),
    )


def write_json(path, obj):
    path = Path(path)
    path.parent.mkdir(parents=True, exist_ok=True)
    path.write_text(json.dumps(obj, indent=2, sort_keys=True) + "\n")
    return path


def model_to_dict(model: MlpModel, stats: NormStats, seed: int, config: dict) -> dict:
    return {
        "schema_version": MODEL_SCHEMA_VERSION,
        "layer_dims": list(model.layer_dims),
        "activations": list(model.activations),
        "weights": [w.tolist() for w in model.weights],
        "biases": [b.tolist() for b in model.biases],
        "norm_stats": stats.to_dict(),
        "seed": seed,
        "config": config,
    }


def save_model(path, model: MlpModel, stats: NormStats, seed: int, config: dict):
    return write_json(path, model_to_dict(model, stats, seed, config))


def load_model(path) -> tuple[MlpModel, NormStats, dict]:
    """Returns (model, stats, document); ``document`` keeps the seed and config echo."""
    try:
        doc = json.loads(Path(path).read_text())
    except json.JSONDecodeError as exc:
        raise FormatError(f"{path}: not valid JSON ({exc})") from None
    if doc.get("schema_version") != MODEL_SCHEMA_VERSION:
        raise FormatError(f"{path}: unsupported schema_version {doc.get('schema_version')!r}")
    try:
        model = MlpModel(
            doc["layer_dims"],
            [np.array(w, dtype=float).reshape(o, i) for w, i, o in zip(doc["weights"], doc["layer_dims"], doc["layer_dims"][1:])],
            [np.array(b, dtype=float) for b in doc["biases"]],
            tuple(doc["activations"]),
        )
        stats = NormStats.from_dict(doc["norm_stats"])
    except (KeyError, ValueError, TypeError) as exc:
        raise FormatError(f"{path}: malformed model document ({exc})") from None
    return model, stats, doc


def sha256_file(path) -> str:
    h = hashlib.sha256()
    with open(path, "rb") as fh:
        for chunk in iter(lambda: fh.read(1 << 16), b""):
            h.update(chunk)
    return h.hexdigest()


def write_manifest(path, command: str, seed, config: dict, artifacts, started: datetime, metrics=None):
    """Record the run configuration and a SHA-256 digest of every artifact written."""
    path = Path(path)
    doc = {
        "command": command,
        "seed": seed,
        "config": config,
        "started_utc": started.isoformat(),
        "finished_utc": datetime.now(timezone.utc).isoformat(),
        "python": platform.python_version(),
        "numpy": np.__version__,
        "artifacts": [
            {"path": str(Path(a).resolve().relative_to(path.parent.resolve()))
             if Path(a).resolve().is_relative_to(path.parent.resolve()) else str(Path(a).resolve()),
             "sha256": sha256_file(a)}
            for a in artifacts
        ],
    }
    if metrics:
        doc["metrics"] = metrics
    return write_json(path, doc)


def read_config_file(path) -> dict[str, str]:
    """Parse ``key = value`` lines; ``#`` starts a comment; keys may use - or _."""
    out = {}
    for lineno, line in enumerate(Path(path).read_text().splitlines(), start=1):
        line = line.split("#", 1)[0].strip()
        if not line:
            continue
        if "=" not in line:
            raise FormatError(f"{path}:{lineno}: expected key=value, got {line!r}")
        key, value = (s.strip() for s in line.split("=", 1))
        out[key.replace("-", "_")] = value
    return out

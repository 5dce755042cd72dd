"""End-to-end experiment steps shared by the CLI and the acceptance tests."""

from __future__ import annotations

from dataclasses import dataclass

import numpy as np

from .bsm import price_put
from .dataset import (
    FEATURE_COLUMNS,
    STAT_COLUMNS,
    TARGET_COLUMN,
    FeatureRow,
    NormStats,
    apply_stats,
    denormalize,
    fit_stats,
    split,
)
from .nn import DEFAULT_DIMS, MlpModel, forward, init_mlp, mse
from .training import TrainConfig, train, validation_split


@dataclass
class Partitions:
    """Normalized train/test arrays plus the rows and file indices they came from."""

    stats: NormStats
    X_train: np.ndarray
    y_train: np.ndarray
    X_test: np.ndarray
    y_test: np.ndarray
    train_rows: list[FeatureRow]
    test_rows: list[FeatureRow]
    train_ids: list[int]
    test_ids: list[int]


def prepare(
    rows: list[FeatureRow],
    train_fraction: float = 0.8,
    include_invalid: bool = False,
    train_only_stats: bool = False,
    stats: NormStats | None = None,
) -> Partitions:
    """Drop guarded rows, z-score, then split contiguously.

    Statistics come from all kept rows by default, or from the training
    partition with ``train_only_stats``. Passing ``stats`` reuses them as-is.
    """
    indexed = [(i, r) for i, r in enumerate(rows) if include_invalid or r.valid]
    train_part, test_part = split(indexed, train_fraction)
    if stats is None:
        fit_rows = [r for _, r in (train_part if train_only_stats else indexed)]
        stats = fit_stats(fit_rows)
    elif tuple(stats.columns) != STAT_COLUMNS:
        raise ValueError(f"statistics columns {stats.columns} do not match {STAT_COLUMNS}")
    tr_rows = [r for _, r in train_part]
    te_rows = [r for _, r in test_part]
    z_train = apply_stats(tr_rows, stats)
    z_test = apply_stats(te_rows, stats)
    nf = len(FEATURE_COLUMNS)
    return Partitions(
        stats=stats,
        X_train=z_train[:, :nf],
        y_train=z_train[:, nf],
        X_test=z_test[:, :nf],
        y_test=z_test[:, nf],
        train_rows=tr_rows,
        test_rows=te_rows,
        train_ids=[i for i, _ in train_part],
        test_ids=[i for i, _ in test_part],
    )


def bsm_anchor(rows: list[FeatureRow], stats: NormStats) -> np.ndarray:
    """Closed-form put price per row, z-scored with the target statistics."""
    i = stats.index(TARGET_COLUMN)
    prices = np.array([price_put(r.params) for r in rows])
    return (prices - stats.mean[i]) / stats.std[i]


def fit(parts: Partitions, cfg: TrainConfig, dims=DEFAULT_DIMS, init: MlpModel | None = None):
    model = init if init is not None else init_mlp(dims, cfg.seed)
    anchor = bsm_anchor(parts.train_rows, parts.stats) if cfg.lam > 0 else None
    return train(model, parts.X_train, parts.y_train, cfg, anchor)


@dataclass
class Evaluation:
    row_ids: list[int]
    true_price: np.ndarray
    predicted_price: np.ndarray
    mse_normalized: float
    mse_price: float

    def metrics(self) -> dict:
        return {
            "n_test": len(self.row_ids),
            "mse_normalized": self.mse_normalized,
            "mse_price": self.mse_price,
        }


def predict_denormalized(model, stats: NormStats, X: np.ndarray) -> np.ndarray:
    """Predict on z-scored features and map back to price units."""
    X = np.asarray(X, dtype=float)
    if X.ndim != 2 or X.shape[1] != len(FEATURE_COLUMNS) or len(stats.columns) != len(STAT_COLUMNS):
        raise ValueError("statistics/feature column count mismatch")
    return denormalize(np.asarray(model.predict(X), dtype=float).ravel(), stats, TARGET_COLUMN)


def evaluate(model, parts: Partitions) -> Evaluation:
    """Score any object with ``predict(X)`` on the test partition."""
    z_pred = np.asarray(model.predict(parts.X_test), dtype=float).ravel()
    true_price = np.array([r.option_price for r in parts.test_rows])
    predicted = denormalize(z_pred, parts.stats, TARGET_COLUMN)
    return Evaluation(
        row_ids=parts.test_ids,
        true_price=true_price,
        predicted_price=predicted,
        mse_normalized=mse(z_pred, parts.y_test),
        mse_price=mse(predicted, true_price),
    )


def compare_optimizers(parts: Partitions, cfg: TrainConfig, seeds, optimizers=("adam", "sgd", "rmsprop"), dims=DEFAULT_DIMS):
    """Train every optimizer from the same initial weights per seed.

    Yields ``(optimizer, seed, model, history)``.
    """
    for seed in seeds:
        init = init_mlp(dims, seed)
        for opt in optimizers:
            run_cfg = TrainConfig(**{**cfg.to_dict(), "optimizer": opt, "seed": seed, "optimizer_params": {}})
            model, history = fit(parts, run_cfg, dims, init=init)
            yield opt, seed, model, history


def final_val_loss(model: MlpModel, parts: Partitions, cfg: TrainConfig) -> float:
    """Validation loss of ``model`` on the tail that ``train`` held out."""
    cut = validation_split(parts.X_train.shape[0], cfg.validation_fraction)
    return mse(forward(model, parts.X_train[cut:]), parts.y_train[cut:])

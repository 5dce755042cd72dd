"""Mini-batch training with a contiguous validation tail and early stopping."""

from __future__ import annotations

from dataclasses import asdict, dataclass, field

import numpy as np

from .nn import MlpModel, backward, composite_loss, forward
from .optim import OPTIMIZERS, make_optimizer


@dataclass
class TrainConfig:
    epochs: int = 500
    batch_size: int = 32
    validation_fraction: float = 0.2
    optimizer: str = "adam"
    # Empty means the optimizer's own defaults (adam/rmsprop lr=1e-3, sgd lr=1e-2).
    optimizer_params: dict = field(default_factory=dict)
    patience: int = 20
    restore_best: bool = True
    lam: float = 0.0
    seed: int = 0

    def __post_init__(self):
        if self.epochs < 1:
            raise ValueError(f"epochs must be >= 1, got {self.epochs}")
        if self.batch_size < 1:
            raise ValueError(f"batch_size must be >= 1, got {self.batch_size}")
        if not 0 < self.validation_fraction < 1:
            raise ValueError(f"validation_fraction must lie in (0, 1), got {self.validation_fraction}")
        if self.optimizer not in OPTIMIZERS:
            raise ValueError(f"optimizer must be one of {OPTIMIZERS}, got {self.optimizer!r}")
        if self.patience < 1:
            raise ValueError(f"patience must be >= 1, got {self.patience}")
        if self.lam < 0:
            raise ValueError(f"lam must be >= 0, got {self.lam}")

    def to_dict(self) -> dict:
        return asdict(self)


@dataclass
class TrainHistory:
    """Losses of the initial weights plus one entry per completed epoch (1-based)."""

    initial_train_loss: float
    initial_val_loss: float
    train_loss: list[float] = field(default_factory=list)
    val_loss: list[float] = field(default_factory=list)
    best_epoch: int = 0
    stopped_epoch: int = 0

    @property
    def best_val_loss(self) -> float:
        return self.val_loss[self.best_epoch - 1]

    def rows(self, include_initial: bool = False):
        if include_initial:
            yield 0, self.initial_train_loss, self.initial_val_loss
        for i, (tr, va) in enumerate(zip(self.train_loss, self.val_loss), start=1):
            yield i, tr, va


class EmptyPartitionError(ValueError):
    pass


def validation_split(n: int, fraction: float) -> int:
    """Index where the validation tail starts; the tail holds ``int(fraction * n)`` rows."""
    n_val = int(fraction * n)
    n_fit = n - n_val
    if n_val < 1 or n_fit < 1:
        raise EmptyPartitionError(
            f"{n} rows with validation_fraction={fraction} leaves an empty partition"
        )
    return n_fit


def _loss(m, X, y, anchor, lam):
    return composite_loss(forward(m, X), y, anchor, lam)


def train(
    model: MlpModel,
    X: np.ndarray,
    y: np.ndarray,
    cfg: TrainConfig | None = None,
    bsm_anchor: np.ndarray | None = None,
) -> tuple[MlpModel, TrainHistory]:
    """Fit ``model`` on the training partition ``(X, y)``.

    The last ``int(validation_fraction * n)`` rows are held out for early
    stopping. The remaining rows are visited in mini-batches, reshuffled every
    epoch from the run seed. With ``restore_best`` the returned model carries
    the weights of the epoch with the lowest validation loss.
    """
    cfg = cfg or TrainConfig()
    X = np.asarray(X, dtype=float)
    y = np.asarray(y, dtype=float).ravel()
    if X.shape[0] != y.size:
        raise ValueError(f"{X.shape[0]} inputs but {y.size} targets")
    if cfg.lam > 0 and bsm_anchor is None:
        raise ValueError("lam > 0 requires a BSM anchor per row")
    anchor = None if bsm_anchor is None else np.asarray(bsm_anchor, dtype=float).ravel()

    cut = validation_split(X.shape[0], cfg.validation_fraction)
    X_fit, y_fit, X_val, y_val = X[:cut], y[:cut], X[cut:], y[cut:]
    a_fit = a_val = None
    if anchor is not None:
        a_fit, a_val = anchor[:cut], anchor[cut:]

    rng = np.random.Generator(np.random.PCG64(np.random.SeedSequence(cfg.seed, spawn_key=(1,))))
    opt = make_optimizer(cfg.optimizer, **cfg.optimizer_params)
    current = model.copy()
    history = TrainHistory(
        initial_train_loss=_loss(current, X_fit, y_fit, a_fit, cfg.lam),
        initial_val_loss=_loss(current, X_val, y_val, a_val, cfg.lam),
    )
    best_val = np.inf
    best_model = current.copy()
    wait = 0
    for epoch in range(1, cfg.epochs + 1):
        order = rng.permutation(cut)
        for start in range(0, cut, cfg.batch_size):
            idx = order[start : start + cfg.batch_size]
            batch_anchor = None if a_fit is None else a_fit[idx]
            _, grads = backward(current, X_fit[idx], y_fit[idx], batch_anchor, cfg.lam)
            current = current.with_params(opt.step(current.params(), grads))
        history.train_loss.append(_loss(current, X_fit, y_fit, a_fit, cfg.lam))
        val = _loss(current, X_val, y_val, a_val, cfg.lam)
        history.val_loss.append(val)
        history.stopped_epoch = epoch
        if val < best_val:
            best_val = val
            best_model = current.copy()
            history.best_epoch = epoch
            wait = 0
        else:
            wait += 1
            if wait >= cfg.patience:
                break
    return (best_model if cfg.restore_best else current), history

"""Synthetic option dataset: parameter sampling, fractional features, z-scoring."""

from __future__ import annotations

import math
from concurrent.futures import ThreadPoolExecutor
from dataclasses import dataclass, field

import numpy as np

from .bsm import OptionParams, put_values
from .fractional import FractionalOrder, Series, rl_fractional_derivative_fast

FEATURE_COLUMNS = ("frac_price_deriv", "frac_time_deriv")
TARGET_COLUMN = "option_price"
STAT_COLUMNS = FEATURE_COLUMNS + (TARGET_COLUMN,)


class DegenerateColumnError(ValueError):
    pass


def _check_range(name, rng):
    lo, hi = rng
    if not (0 < lo < hi and math.isfinite(hi)):
        raise ValueError(f"{name} must satisfy 0 < lo < hi, got {rng}")


@dataclass(frozen=True)
class ParamRanges:
    s_range: tuple[float, float] = (50.0, 150.0)
    k_range: tuple[float, float] = (50.0, 150.0)
    t_range: tuple[float, float] = (0.1, 1.0)
    r_range: tuple[float, float] = (0.01, 0.05)
    sigma_range: tuple[float, float] = (0.1, 0.5)

    def __post_init__(self):
        for name in ("s_range", "k_range", "t_range", "r_range", "sigma_range"):
            value = tuple(float(v) for v in getattr(self, name))
            _check_range(name, value)
            object.__setattr__(self, name, value)

    def as_list(self):
        return [self.s_range, self.k_range, self.t_range, self.r_range, self.sigma_range]


@dataclass(frozen=True)
class FeatureConfig:
    n_grid: int = 1000
    alpha_time: float = 0.5
    alpha_price: float = 0.7
    epsilon: float = 1e-10

    def __post_init__(self):
        if self.n_grid < 2:
            raise ValueError(f"n_grid must be >= 2, got {self.n_grid}")
        for name in ("alpha_time", "alpha_price"):
            a = FractionalOrder(getattr(self, name)).alpha
            if a == 0.0:
                raise ValueError(f"{name} must be strictly positive, got {a}")
        if not self.epsilon > 0:
            raise ValueError(f"epsilon must be > 0, got {self.epsilon}")


@dataclass(frozen=True)
class FeatureRow:
    params: OptionParams
    option_price: float
    frac_time_deriv: float
    frac_price_deriv: float
    valid: bool = True

    def column(self, name: str) -> float:
        return getattr(self, name)


@dataclass(frozen=True)
class NormStats:
    """Per-column population mean and standard deviation."""

    columns: tuple[str, ...] = STAT_COLUMNS
    mean: tuple[float, ...] = field(default=())
    std: tuple[float, ...] = field(default=())

    def __post_init__(self):
        if not (len(self.columns) == len(self.mean) == len(self.std)):
            raise ValueError("NormStats columns, mean and std must have equal length")
        if any(not s > 0 for s in self.std):
            raise DegenerateColumnError("every normalized column needs std > 0")

    def index(self, name: str) -> int:
        return self.columns.index(name)

    def to_dict(self) -> dict:
        return {"columns": list(self.columns), "mean": list(self.mean), "std": list(self.std)}

    @classmethod
    def from_dict(cls, d: dict) -> "NormStats":
        return cls(
            columns=tuple(d["columns"]),
            mean=tuple(float(v) for v in d["mean"]),
            std=tuple(float(v) for v in d["std"]),
        )


def row_rng(seed: int, row: int) -> np.random.Generator:
    """Independent PCG64 substream for one row, keyed on (seed, row)."""
    return np.random.Generator(np.random.PCG64(np.random.SeedSequence(seed, spawn_key=(row,))))


def sample_params(n: int, ranges: ParamRanges | None = None, seed: int = 0) -> list[OptionParams]:
    """Draw ``n`` option parameter sets uniformly within ``ranges``.

    Row ``i`` draws S, K, T, r, sigma in that order from its own substream, so
    any prefix of a larger sample equals the smaller sample with the same seed.
    """
    if n < 0:
        raise ValueError(f"n must be >= 0, got {n}")
    ranges = ranges or ParamRanges()
    out = []
    for i in range(n):
        rng = row_rng(seed, i)
        S, K, T, r, sigma = (rng.uniform(lo, hi) for lo, hi in ranges.as_list())
        out.append(OptionParams(S=S, K=K, T=T, r=r, sigma=sigma))
    return out


def feature_paths(p: OptionParams, cfg: FeatureConfig):
    """Return (put path, price-order derivative, time-order derivative, dt) or None if guarded."""
    t = np.linspace(0.0, p.T, cfg.n_grid)
    if p.sigma < cfg.epsilon or t[-1] < cfg.epsilon:
        return None
    delta_t = float(t[1] - t[0])
    path = put_values(p, t, strike_shift=cfg.epsilon)
    series = Series(path, delta_t)
    d_price = rl_fractional_derivative_fast(series, cfg.alpha_price)
    d_time = rl_fractional_derivative_fast(series, cfg.alpha_time)
    return path, d_price, d_time, delta_t


def extract_features(p: OptionParams, cfg: FeatureConfig | None = None) -> FeatureRow:
    cfg = cfg or FeatureConfig()
    paths = feature_paths(p, cfg)
    if paths is None:
        return FeatureRow(p, 0.0, 0.0, 0.0, valid=False)
    path, d_price, d_time, _ = paths
    return FeatureRow(
        params=p,
        option_price=float(path[-1]),
        frac_time_deriv=float(d_time[-1]),
        frac_price_deriv=float(d_price[-1]),
        valid=True,
    )


def build_dataset(
    n: int,
    seed: int,
    ranges: ParamRanges | None = None,
    cfg: FeatureConfig | None = None,
    workers: int = 1,
) -> list[FeatureRow]:
    """Sample parameters and extract features; output order never depends on ``workers``."""
    params = sample_params(n, ranges, seed)
    cfg = cfg or FeatureConfig()
    if workers <= 1:
        return [extract_features(p, cfg) for p in params]
    with ThreadPoolExecutor(max_workers=workers) as pool:
        return list(pool.map(lambda p: extract_features(p, cfg), params))


def as_matrix(rows, columns=STAT_COLUMNS) -> np.ndarray:
    return np.array([[row.column(c) for c in columns] for row in rows], dtype=float).reshape(
        len(rows), len(columns)
    )


def fit_stats(rows, columns=STAT_COLUMNS) -> NormStats:
    if len(rows) < 2:
        raise ValueError(f"need at least 2 rows to fit statistics, got {len(rows)}")
    data = as_matrix(rows, columns)
    mean = data.mean(axis=0)
    std = data.std(axis=0)
    for name, s in zip(columns, std):
        if s < 1e-15:
            raise DegenerateColumnError(f"column {name!r} is constant (std={s})")
    return NormStats(columns=tuple(columns), mean=tuple(map(float, mean)), std=tuple(map(float, std)))


def apply_stats(rows, stats: NormStats) -> np.ndarray:
    data = as_matrix(rows, stats.columns)
    return (data - np.asarray(stats.mean)) / np.asarray(stats.std)


def normalize(rows, stats: NormStats | None = None) -> tuple[np.ndarray, NormStats]:
    """Z-score each column; statistics are fitted on ``rows`` unless given.

    Returns an ``(n, 3)`` array ordered as ``stats.columns`` (features first,
    target last) together with the statistics.
    """
    stats = stats or fit_stats(rows)
    return apply_stats(rows, stats), stats


def denormalize(z: np.ndarray, stats: NormStats, column: str | None = None) -> np.ndarray:
    """Invert z-scoring for a full matrix, or for a single named column."""
    z = np.asarray(z, dtype=float)
    if column is not None:
        i = stats.index(column)
        return z * stats.std[i] + stats.mean[i]
    if z.shape[-1] != len(stats.columns):
        raise ValueError(f"expected {len(stats.columns)} columns, got {z.shape[-1]}")
    return z * np.asarray(stats.std) + np.asarray(stats.mean)


def split(rows, train_fraction: float = 0.8):
    """Contiguous, unshuffled split: the first ``int(train_fraction * n)`` rows train."""
    if len(rows) < 2:
        raise ValueError(f"need at least 2 rows to split, got {len(rows)}")
    if not 0 < train_fraction < 1:
        raise ValueError(f"train_fraction must lie in (0, 1), got {train_fraction}")
    cut = int(train_fraction * len(rows))
    return rows[:cut], rows[cut:]


def simulate_gbm(S0: float, r: float, sigma: float, grid, seed: int) -> np.ndarray:
    """Exact log-Euler GBM path on a uniform grid starting at 0."""
    grid = np.asarray(grid, dtype=float)
    if not S0 > 0:
        raise ValueError(f"S0 must be > 0, got {S0}")
    if sigma < 0:
        raise ValueError(f"sigma must be >= 0, got {sigma}")
    if grid.ndim != 1 or grid.size < 1 or grid[0] != 0.0:
        raise ValueError("grid must be a 1-D ascending array starting at 0")
    steps = np.diff(grid)
    if np.any(steps <= 0):
        raise ValueError("grid must be strictly ascending")
    z = np.random.default_rng(seed).standard_normal(steps.size)
    log_inc = (r - 0.5 * sigma**2) * steps + sigma * np.sqrt(steps) * z
    return S0 * np.exp(np.concatenate(([0.0], np.cumsum(log_inc))))

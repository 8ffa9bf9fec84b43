"""Label-utility protocol: does adding regime labels cut forecasting MSE?

A ridge-regularized linear autoregression is fit twice per (horizon, seed)
cell on identical chronological train/test splits: once on lagged returns
alone, once with a one-hot of the regime label at the forecast origin
appended. The only difference between the arms is the label columns; the
seed drives a ridge-penalty jitter and a train-row subsample shared by
both arms. Percent improvement is aggregated per horizon across seeds.
"""

from __future__ import annotations

import json
from dataclasses import dataclass

import numpy as np

from .errors import ValidationError
from .ingest import ReturnSeries
from .labeling import LabelSeries

DEFAULT_HORIZONS = {"weekly": (1, 4, 13), "monthly": (1, 3, 12), "2d": (1, 4, 13)}
DEFAULT_LAGS = {"weekly": 13, "monthly": 3, "2d": 13}


@dataclass(frozen=True)
class ForecastConfig:
    ridge_lambda: float = 1.0
    train_fraction: float = 0.8
    subsample_fraction: float = 0.9
    label_mode: str = "smoothed"

    def __post_init__(self):
        if not 0 < self.train_fraction < 1:
            raise ValidationError("train_fraction must be in (0, 1)")
        if not 0 < self.subsample_fraction <= 1:
            raise ValidationError("subsample_fraction must be in (0, 1]")
        if self.ridge_lambda < 0:
            raise ValidationError("ridge_lambda must be >= 0")


@dataclass(frozen=True, eq=False)
class ForecastDataset:
    """Aligned feature/target rows for one horizon.

    Row r has features from the lag window ending at origin t_r (plus the
    one-hot label at t_r when labels are present) and target
    return_{t_r + horizon}. Train rows chronologically precede test rows.
    """

    features: np.ndarray
    targets: np.ndarray
    horizon: int
    lags: int
    has_labels: bool
    split_index: int

    @property
    def n_rows(self) -> int:
        return len(self.targets)


def build_dataset(
    returns,
    labels: LabelSeries | None,
    horizon: int,
    lags: int,
    train_fraction: float = 0.8,
) -> ForecastDataset:
    """Lag-window features aligned so target_t = return_{t + horizon}."""
    y = (
        np.asarray(returns.values, dtype=float)
        if isinstance(returns, ReturnSeries)
        else np.asarray(returns, dtype=float)
    )
    T = len(y)
    if horizon < 1 or lags < 1:
        raise ValidationError("horizon and lags must be >= 1")
    if T <= lags + horizon + 20:
        raise ValidationError(
            f"need more than lags + horizon + 20 = {lags + horizon + 20} "
            f"observations, got {T}"
        )
    if labels is not None and len(labels) != T:
        raise ValidationError(
            f"labels length {len(labels)} does not match returns length {T}"
        )
    origins = np.arange(lags - 1, T - horizon)
    lag_block = np.column_stack([y[origins - (lags - 1) + j] for j in range(lags)])
    if labels is not None:
        onehot = np.zeros((len(origins), labels.k))
        onehot[np.arange(len(origins)), labels.labels[origins] - 1] = 1.0
        features = np.hstack([lag_block, onehot])
    else:
        features = lag_block
    targets = y[origins + horizon]
    split_index = int(np.floor(train_fraction * len(origins)))
    return ForecastDataset(
        features=features,
        targets=targets,
        horizon=horizon,
        lags=lags,
        has_labels=labels is not None,
        split_index=split_index,
    )


def _ridge_fit(X: np.ndarray, y: np.ndarray, lam: float) -> np.ndarray:
    n, d = X.shape
    Z = np.column_stack([np.ones(n), X])
    gram = Z.T @ Z
    gram[1:, 1:] += lam * np.eye(d)
    return np.linalg.solve(gram, Z.T @ y)


def _standardize(train: np.ndarray, test: np.ndarray):
    mean = train.mean(axis=0)
    std = train.std(axis=0)
    std = np.where(std > 0, std, 1.0)
    return (train - mean) / std, (test - mean) / std


def _cell_mse(dataset: ForecastDataset, train_rows: np.ndarray, lam: float) -> float:
    split = dataset.split_index
    X_train = dataset.features[train_rows]
    y_train = dataset.targets[train_rows]
    X_test = dataset.features[split:]
    y_test = dataset.targets[split:]
    X_train, X_test = _standardize(X_train, X_test)
    beta = _ridge_fit(X_train, y_train, lam)
    pred = beta[0] + X_test @ beta[1:]
    return float(np.mean((y_test - pred) ** 2))


def percent_improvement(mse_without: float, mse_with: float) -> float:
    return 100.0 * (mse_without - mse_with) / mse_without


def evaluate_datasets(
    with_ds: ForecastDataset,
    without_ds: ForecastDataset,
    seeds,
    config: ForecastConfig,
) -> list[dict]:
    """Per-seed MSE cells for one horizon; both arms share seed-driven state."""
    if with_ds.n_rows != without_ds.n_rows or with_ds.split_index != without_ds.split_index:
        raise ValidationError("arms must share rows and split")
    split = with_ds.split_index
    if split < 2 or with_ds.n_rows - split < 2:
        raise ValidationError("split leaves too few train or test rows")
    cells = []
    test_targets = with_ds.targets[split:]
    degenerate = bool(np.var(test_targets) == 0)
    for seed in sorted(int(s) for s in seeds):
        rng = np.random.default_rng(seed)
        lam = config.ridge_lambda * 2.0 ** rng.uniform(-1.0, 1.0)
        n_sub = max(2, int(round(config.subsample_fraction * split)))
        train_rows = np.sort(rng.choice(split, size=n_sub, replace=False))
        mse_with = _cell_mse(with_ds, train_rows, lam)
        mse_without = _cell_mse(without_ds, train_rows, lam)
        cells.append(
            {
                "horizon": with_ds.horizon,
                "seed": seed,
                "mse_with": mse_with,
                "mse_without": mse_without,
                "pct_improvement": percent_improvement(mse_without, mse_with),
                "degenerate": degenerate,
            }
        )
    return cells


@dataclass(frozen=True, eq=False)
class MseReport:
    cells: tuple[dict, ...]
    per_horizon: dict
    label_mode: str
    lags: int

    def to_dict(self) -> dict:
        return {
            "label_mode": self.label_mode,
            "lags": self.lags,
            "cells": list(self.cells),
            "per_horizon": self.per_horizon,
        }

    def to_json(self, indent: int = 2) -> str:
        return json.dumps(self.to_dict(), indent=indent, sort_keys=True)

    def to_plot_csv(self, arm: str = "ridge") -> str:
        """Plot-ready rows: horizon, arm, mean and std of percent improvement."""
        lines = ["horizon,arm,mean_pct_improvement,std_pct_improvement"]
        for horizon in sorted(self.per_horizon, key=int):
            stats = self.per_horizon[horizon]
            lines.append(
                f"{horizon},{arm},{stats['mean']!r},{stats['std']!r}"
            )
        return "\n".join(lines) + "\n"


def evaluate(
    returns,
    labels: LabelSeries | None,
    horizons,
    seeds,
    config: ForecastConfig | None = None,
    lags: int | None = None,
) -> MseReport:
    """Run the with/without-labels comparison over horizons and seeds.

    ``labels=None`` runs the identical feature set in both arms (a harness
    check: improvement is exactly zero). Degenerate cells (constant test
    targets) are flagged and excluded from the per-horizon aggregates.
    """
    config = config or ForecastConfig()
    if lags is None:
        freq = returns.source_frequency if isinstance(returns, ReturnSeries) else "weekly"
        lags = DEFAULT_LAGS.get(freq, 13)
    all_cells: list[dict] = []
    per_horizon: dict[str, dict] = {}
    for horizon in sorted(int(h) for h in horizons):
        without_ds = build_dataset(
            returns, None, horizon, lags, config.train_fraction
        )
        if labels is not None:
            with_ds = build_dataset(
                returns, labels, horizon, lags, config.train_fraction
            )
        else:
            with_ds = without_ds
        cells = evaluate_datasets(with_ds, without_ds, seeds, config)
        all_cells.extend(cells)
        usable = [c["pct_improvement"] for c in cells if not c["degenerate"]]
        per_horizon[str(horizon)] = {
            "mean": float(np.mean(usable)) if usable else None,
            "std": float(np.std(usable, ddof=1)) if len(usable) > 1 else None,
            "n": len(usable),
        }
    return MseReport(
        cells=tuple(all_cells),
        per_horizon=per_horizon,
        label_mode=config.label_mode if labels is not None else "none",
        lags=lags,
    )

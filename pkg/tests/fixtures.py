"""Shared synthetic fixtures for the forecast and acceptance tests."""

from __future__ import annotations

import datetime as dt

import numpy as np

from regimebench.ingest import ReturnSeries
from regimebench.labeling import LabelSeries
from regimebench.regime import RegimeParams, simulate


def regime_mean_fixture(
    T: int = 1500,
    seed: int = 0,
    means=(-3.0, 0.0, 3.0),
    sigma: float = 4.0,
    diag: float = 0.99,
) -> tuple[ReturnSeries, LabelSeries]:
    """Series with regime-dependent means and the true labels.

    Labels are informative by construction: the per-regime means differ
    while the emission noise is wide enough that a short lag window cannot
    pin the regime down.
    """
    k = len(means)
    off_diag = (1.0 - diag) / (k - 1)
    transition = np.full((k, k), off_diag)
    np.fill_diagonal(transition, diag)
    chain = RegimeParams(k=k, transition=transition, sigma=np.ones(k), mu=0.0)
    _, regimes = simulate(chain, T, seed=seed)
    rng = np.random.default_rng(seed + 10_000)
    values = np.asarray(means)[regimes] + rng.normal(0.0, sigma, T)
    dates = tuple(dt.date(2000, 1, 3) + dt.timedelta(weeks=t) for t in range(T))
    returns = ReturnSeries(
        dates=dates, values=values, source_frequency="weekly", asset_id="FIXTURE"
    )
    probs = np.full((T, k), 0.01)
    probs[np.arange(T), regimes] = 1.0 - 0.01 * (k - 1)
    labels = LabelSeries(
        dates=dates, labels=regimes + 1, probabilities=probs, k=k, asset_id="FIXTURE"
    )
    return returns, labels


def noise_labels(returns: ReturnSeries, k: int, seed: int) -> LabelSeries:
    """Uniform random labels carrying no information about the series."""
    T = len(returns)
    rng = np.random.default_rng(seed)
    drawn = rng.integers(1, k + 1, T)
    probs = np.full((T, k), 0.01)
    probs[np.arange(T), drawn - 1] = 1.0 - 0.01 * (k - 1)
    return LabelSeries(
        dates=returns.dates, labels=drawn, probabilities=probs, k=k,
        asset_id=returns.asset_id,
    )


def synthetic_daily_price_csv(
    n_weeks: int = 300,
    seed: int = 0,
    sigma=(1.0, 8.0),
    diag: float = 0.98,
    missing_rate: float = 0.04,
    start_price: float = 30.0,
) -> tuple[str, np.ndarray, np.ndarray]:
    """Daily price CSV whose weekly percent changes follow a known 2-regime model.

    Friday carries the exact weekly price; Mon-Thu are geometric
    interpolations with random missing markers, so weekly period-end
    resampling recovers the simulated weekly returns exactly. Returns
    (csv_text, weekly_returns, true_regimes); regimes align with the
    returns (weeks 1..n_weeks).
    """
    k = len(sigma)
    off_diag = (1.0 - diag) / (k - 1)
    transition = np.full((k, k), off_diag)
    np.fill_diagonal(transition, diag)
    truth = RegimeParams(k=k, transition=transition, sigma=np.asarray(sigma), mu=0.0)
    series, regimes = simulate(truth, n_weeks, seed=seed)
    weekly_returns = np.asarray(series.values)
    prices = np.empty(n_weeks + 1)
    prices[0] = start_price
    for t in range(n_weeks):
        prices[t + 1] = prices[t] * (1.0 + weekly_returns[t] / 100.0)
    rng = np.random.default_rng(seed + 777)
    monday0 = dt.date(2000, 1, 3)
    lines = ["DATE,VALUE"]
    for week in range(n_weeks + 1):
        week_start = monday0 + dt.timedelta(weeks=week)
        prev = prices[week - 1] if week > 0 else prices[0]
        for weekday in range(5):
            day = week_start + dt.timedelta(days=weekday)
            if weekday == 4:
                value = prices[week]
            else:
                frac = (weekday + 1) / 5.0
                value = prev * (prices[week] / prev) ** frac
                if rng.random() < missing_rate:
                    lines.append(f"{day.isoformat()},.")
                    continue
            lines.append(f"{day.isoformat()},{float(value)!r}")
    return "\n".join(lines) + "\n", weekly_returns, regimes

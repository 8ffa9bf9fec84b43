"""Augmented Dickey-Fuller unit-root test.

Regression: dy_t = alpha + gamma * y_{t-1} + sum_j beta_j * dy_{t-j} + e_t
(constant, no trend). The statistic is the t-ratio of gamma; p-values come
from the MacKinnon (1994) response-surface approximation and critical
values from the MacKinnon (2010) finite-sample polynomials. Statistics
beyond the approximation's domain are clamped to its floor and flagged.

Lag order is chosen by AIC over candidate regressions fitted on a common
effective sample (trimmed at max_lags) so the sample size cannot vary
across candidates; the final regression refits the chosen lag on the
maximal sample it allows.
"""

from __future__ import annotations

import math
from dataclasses import dataclass

import numpy as np

from .errors import NumericalError, ValidationError
from .ingest import ReturnSeries

# MacKinnon response-surface constants, single-series test, constant-only
# regression. p = Phi(poly(stat)); the small-p branch applies at or below
# TAU_STAR, the large-p branch up to TAU_MAX; outside [TAU_MIN, TAU_MAX]
# the approximation has no support.
TAU_MIN = -18.83
TAU_STAR = -1.61
TAU_MAX = 2.74
SMALL_P = (2.1659, 1.4412, 3.8269e-2)
LARGE_P = (1.7339, 0.93202, -0.12745, -0.010368)
# critical-value polynomials in 1/n: c0 + c1/n + c2/n^2 + c3/n^3
CRIT_1PCT = (-3.43035, -6.5393, -16.786, -79.433)
CRIT_5PCT = (-2.86154, -2.8903, -4.234, -40.040)
CRIT_10PCT = (-2.56677, -1.5384, -2.809, 0.0)


@dataclass(frozen=True)
class AdfResult:
    statistic: float
    p_value: float
    lags_used: int
    n_effective: int
    reject_at_1pct: bool
    crit_1pct: float
    crit_5pct: float
    crit_10pct: float
    p_floor: float
    p_floor_hit: bool

    def to_dict(self) -> dict:
        return {
            "statistic": self.statistic,
            "p_value": self.p_value,
            "lags_used": self.lags_used,
            "n_effective": self.n_effective,
            "reject_at_1pct": self.reject_at_1pct,
            "crit_1pct": self.crit_1pct,
            "crit_5pct": self.crit_5pct,
            "crit_10pct": self.crit_10pct,
            "p_floor": self.p_floor,
            "p_floor_hit": self.p_floor_hit,
        }


def _norm_cdf(x: float) -> float:
    return 0.5 * math.erfc(-x / math.sqrt(2.0))


def _poly(coeffs, x: float) -> float:
    return sum(c * x**i for i, c in enumerate(coeffs))


def mackinnon_pvalue(statistic: float) -> tuple[float, bool]:
    """Approximate p-value; second element flags the clamped-floor region."""
    if statistic > TAU_MAX:
        return 1.0, False
    clamped = statistic < TAU_MIN
    stat = max(statistic, TAU_MIN)
    branch = SMALL_P if stat <= TAU_STAR else LARGE_P
    return _norm_cdf(_poly(branch, stat)), clamped


def mackinnon_crit(n_effective: int) -> tuple[float, float, float]:
    inv = 1.0 / n_effective
    return (
        _poly(CRIT_1PCT, inv),
        _poly(CRIT_5PCT, inv),
        _poly(CRIT_10PCT, inv),
    )


def p_floor() -> float:
    """The approximation's smallest reportable p-value (its value at TAU_MIN)."""
    return _norm_cdf(_poly(SMALL_P, TAU_MIN))


def default_max_lags(n: int) -> int:
    return int(math.floor(12.0 * (n / 100.0) ** 0.25))


def _ols_t_ratio(X: np.ndarray, target: np.ndarray, column: int) -> tuple[float, float]:
    """t-ratio of one coefficient plus the regression SSR."""
    n, p = X.shape
    beta, _, rank, _ = np.linalg.lstsq(X, target, rcond=None)
    if rank < p:
        raise NumericalError("singular ADF regression matrix")
    resid = target - X @ beta
    ssr = float(resid @ resid)
    dof = n - p
    if dof <= 0:
        raise NumericalError("no residual degrees of freedom in ADF regression")
    s2 = ssr / dof
    xtx_inv = np.linalg.inv(X.T @ X)
    se = math.sqrt(s2 * xtx_inv[column, column])
    return float(beta[column] / se), ssr


def _design(y: np.ndarray, dy: np.ndarray, lag: int, trim: int):
    """Design matrix and target for the regression rows t = trim..len(dy)-1."""
    rows = np.arange(trim, len(dy))
    cols = [np.ones(len(rows)), y[rows]]
    for j in range(1, lag + 1):
        cols.append(dy[rows - j])
    return np.column_stack(cols), dy[rows]


def adf_test(series, max_lags: int | None = None) -> AdfResult:
    """ADF test with AIC lag selection.

    ``max_lags=None`` applies the floor(12 * (n/100)^(1/4)) rule. The series
    must be at least max_lags + 10 long.
    """
    if isinstance(series, ReturnSeries):
        y = np.asarray(series.values, dtype=float)
    else:
        y = np.asarray(series, dtype=float)
    n = len(y)
    if max_lags is None:
        max_lags = default_max_lags(n)
        max_lags = min(max_lags, max(0, n - 10))
    if max_lags < 0:
        raise ValidationError(f"max_lags must be >= 0, got {max_lags}")
    if n < max_lags + 10:
        raise ValidationError(
            f"need at least max_lags + 10 = {max_lags + 10} observations, got {n}"
        )
    if not np.isfinite(y).all():
        raise ValidationError("series contains non-finite values")
    dy = np.diff(y)

    # lag choice on the common sample trimmed at max_lags
    best_lag = 0
    best_aic = math.inf
    n_common = len(dy) - max_lags
    for lag in range(max_lags + 1):
        X, target = _design(y, dy, lag, trim=max_lags)
        _, ssr = _ols_t_ratio(X, target, column=1)
        aic = n_common * math.log(ssr / n_common) + 2.0 * (lag + 2)
        if aic < best_aic - 1e-12:
            best_aic = aic
            best_lag = lag

    # final regression on the maximal sample for the chosen lag
    X, target = _design(y, dy, best_lag, trim=best_lag)
    statistic, _ = _ols_t_ratio(X, target, column=1)
    n_effective = X.shape[0]
    p_value, clamped = mackinnon_pvalue(statistic)
    crit1, crit5, crit10 = mackinnon_crit(n_effective)
    return AdfResult(
        statistic=statistic,
        p_value=p_value,
        lags_used=best_lag,
        n_effective=n_effective,
        reject_at_1pct=statistic < crit1,
        crit_1pct=crit1,
        crit_5pct=crit5,
        crit_10pct=crit10,
        p_floor=p_floor(),
        p_floor_hit=clamped,
    )

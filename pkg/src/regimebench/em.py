"""Multi-restart EM fitting of the regime-switching variance model.

Each restart runs expectation-maximization from an independently seeded
initialization until the absolute log-likelihood change drops below the
tolerance. Inside the iteration the initial regime distribution is threaded
through as a Baum-Welch nuisance parameter (updated to the smoothed time-0
posterior), which keeps the per-iteration likelihood ascent exact; reported
log-likelihoods are always evaluated under the filter's stationary-start
convention at the final parameters.

Restarts whose posterior mass abandons a regime (or drives an emission
scale to zero) are recorded as collapsed and skipped rather than patched
up, which keeps the restart statistics interpretable.
"""

from __future__ import annotations

import json
from dataclasses import dataclass

import numpy as np

from ._kernels import filter_core, smooth_core, xi_sums_core
from .errors import FitFailureError, RegimeCollapseError, ValidationError
from .ingest import ReturnSeries
from .labeling import order_regimes
from .regime import (
    InferenceResult,
    RegimeParams,
    hamilton_filter,
    kim_smooth,
    stationary_distribution,
)

COLLAPSE_WEIGHT = 1e-8
TRANSITION_FLOOR = 1e-10
SIGMA_FLOOR_FACTOR = 1e-8


@dataclass(frozen=True)
class FitConfig:
    restarts: int = 200
    max_iterations: int = 500
    loglik_tolerance: float = 1e-6
    seed: int = 0
    demean: bool = False

    def __post_init__(self):
        if self.restarts < 1:
            raise ValidationError(f"restarts must be >= 1, got {self.restarts}")
        if self.max_iterations < 1:
            raise ValidationError(
                f"max_iterations must be >= 1, got {self.max_iterations}"
            )
        if self.loglik_tolerance <= 0:
            raise ValidationError("loglik_tolerance must be > 0")


@dataclass(frozen=True)
class RestartStat:
    """Bookkeeping for one EM restart.

    ``loglik`` is the stationary-start log-likelihood at the restart's final
    parameters (NaN if the restart collapsed before producing any);
    ``trajectory`` holds the monotone per-iteration likelihoods the
    iteration itself ascended.
    """

    restart: int
    loglik: float
    iterations: int
    converged: bool
    collapsed: bool
    trajectory: tuple[float, ...] = ()

    def to_dict(self) -> dict:
        return {
            "restart": self.restart,
            "loglik": None if np.isnan(self.loglik) else float(self.loglik),
            "iterations": self.iterations,
            "converged": self.converged,
            "collapsed": self.collapsed,
        }


@dataclass(frozen=True, eq=False)
class FitReport:
    k: int
    n_obs: int
    best_params: RegimeParams
    best_loglik: float
    converged: bool
    occupancy: np.ndarray
    restart_stats: tuple[RestartStat, ...]
    demeaned: bool = False
    mean_shift: float = 0.0

    def to_dict(self) -> dict:
        return {
            "k": self.k,
            "n_obs": self.n_obs,
            "params": self.best_params.to_dict(),
            "loglik": float(self.best_loglik),
            "converged": self.converged,
            "occupancy": [int(c) for c in self.occupancy],
            "demeaned": self.demeaned,
            "mean_shift": float(self.mean_shift),
            "restarts": [stat.to_dict() for stat in self.restart_stats],
        }

    def to_json(self, indent: int = 2) -> str:
        return json.dumps(self.to_dict(), indent=indent, sort_keys=True)


def _as_values(returns) -> np.ndarray:
    if isinstance(returns, ReturnSeries):
        return np.asarray(returns.values, dtype=float)
    return np.asarray(returns, dtype=float)


def init_params(k: int, returns, seed: int) -> RegimeParams:
    """Random-restart initialization.

    Emission scales are the sample std times log-uniform factors in
    [0.25, 4]; the transition matrix starts sticky (0.9 diagonal) with the
    remaining mass spread uniformly; the mean starts at the sample mean.
    """
    y = _as_values(returns)
    if k < 1:
        raise ValidationError(f"k must be >= 1, got {k}")
    if len(y) < k:
        raise ValidationError(f"need at least k={k} observations, got {len(y)}")
    std = float(np.std(y))
    if std <= 0:
        raise ValidationError("series is constant; nothing to fit")
    rng = np.random.default_rng(seed)
    factors = np.exp(rng.uniform(np.log(0.25), np.log(4.0), size=k))
    sigma = std * factors
    if k == 1:
        transition = np.array([[1.0]])
    else:
        transition = np.full((k, k), 0.1 / (k - 1))
        np.fill_diagonal(transition, 0.9)
    return RegimeParams(k=k, transition=transition, sigma=sigma, mu=float(np.mean(y)))


def _em_update(
    params: RegimeParams,
    y: np.ndarray,
    initial: np.ndarray | None,
    fix_mu: float | None,
) -> tuple[RegimeParams, float, np.ndarray]:
    """One E+M pass under the given initial distribution.

    Returns (updated params, pre-update log-likelihood under ``initial``,
    smoothed time-0 posterior). ``initial=None`` means the stationary
    distribution of the current transition matrix.
    """
    pi0 = stationary_distribution(params.transition) if initial is None else initial
    filtered, predicted, loglik = filter_core(
        y, params.transition, params.sigma, params.mu, pi0
    )
    smoothed, _, err_t, err_j = smooth_core(params.transition, filtered, predicted)
    if err_t >= 0:
        raise RegimeCollapseError(err_j, 0.0)
    weights = smoothed.sum(axis=0)
    smallest = int(np.argmin(weights))
    if weights[smallest] < COLLAPSE_WEIGHT:
        raise RegimeCollapseError(smallest, float(weights[smallest]))

    xi = xi_sums_core(params.transition, filtered, predicted, smoothed)
    row_sums = xi.sum(axis=1, keepdims=True)
    safe = np.where(row_sums > 0, row_sums, 1.0)
    transition = np.where(row_sums > 0, xi / safe, params.transition)
    transition = np.maximum(transition, TRANSITION_FLOOR)
    transition = transition / transition.sum(axis=1, keepdims=True)

    if fix_mu is None:
        mu = float((smoothed * y[:, None]).sum() / len(y))
    else:
        mu = float(fix_mu)
    variances = (smoothed * (y[:, None] - mu) ** 2).sum(axis=0) / weights
    sigma = np.sqrt(variances)
    floor = SIGMA_FLOOR_FACTOR * float(np.std(y))
    tiniest = int(np.argmin(sigma))
    if sigma[tiniest] < floor:
        raise RegimeCollapseError(tiniest, float(weights[tiniest]))

    new_params = RegimeParams(k=params.k, transition=transition, sigma=sigma, mu=mu)
    return new_params, float(loglik), smoothed[0].copy()


def em_step(
    params: RegimeParams, returns, fix_mu: float | None = None
) -> tuple[RegimeParams, float]:
    """One EM update; returns the new params and the pre-update log-likelihood.

    E-step: Hamilton filter (stationary start), Kim smoother, and summed
    pairwise joint probabilities. M-step: transition rows proportional to
    the summed joints (floored at 1e-10 and renormalized), emission
    variances as posterior-weighted squared deviations, common mean as the
    posterior-weighted observation average.
    """
    y = _as_values(returns)
    if not np.isfinite(y).all():
        raise ValidationError("return series contains non-finite values")
    new_params, loglik, _ = _em_update(params, y, initial=None, fix_mu=fix_mu)
    return new_params, loglik


def _stationary_loglik(params: RegimeParams, y: np.ndarray) -> float:
    return hamilton_filter(params, y).log_likelihood


def _run_restart(
    k: int, y: np.ndarray, seed: int, config: FitConfig, fix_mu: float | None
) -> tuple[RegimeParams | None, float, int, bool, bool, tuple[float, ...]]:
    params = init_params(k, y, seed)
    initial = None
    trajectory: list[float] = []
    prev_ll = None
    converged = False
    updates = 0
    for iteration in range(1, config.max_iterations + 1):
        try:
            new_params, ll, smoothed0 = _em_update(params, y, initial, fix_mu)
        except RegimeCollapseError:
            return None, np.nan, iteration, False, True, tuple(trajectory)
        trajectory.append(ll)
        if prev_ll is not None and abs(ll - prev_ll) < config.loglik_tolerance:
            converged = True
            break
        prev_ll = ll
        params = new_params
        initial = smoothed0
        updates = iteration
    final_ll = _stationary_loglik(params, y)
    return params, final_ll, updates, converged, False, tuple(trajectory)


def fit(k: int, returns, config: FitConfig | None = None) -> FitReport:
    """Multi-restart EM fit with canonical (ascending-sigma) output.

    Restart r uses seed ``config.seed + r`` so any single restart can be
    reproduced in isolation. The best converged restart wins (ties to the
    lower restart index); if none converged the best non-collapsed restart
    is reported with ``converged=False``. Occupancy counts how many
    timesteps each regime holds the argmax smoothed probability.
    """
    config = config or FitConfig()
    y = _as_values(returns)
    if len(y) < k:
        raise ValidationError(f"need at least k={k} observations, got {len(y)}")
    mean_shift = 0.0
    fix_mu = None
    if config.demean:
        mean_shift = float(np.mean(y))
        y = y - mean_shift
        fix_mu = 0.0

    stats: list[RestartStat] = []
    candidates: list[tuple[int, RegimeParams, float, bool]] = []
    for restart in range(config.restarts):
        params, ll, iterations, converged, collapsed, trajectory = _run_restart(
            k, y, config.seed + restart, config, fix_mu
        )
        stats.append(
            RestartStat(
                restart=restart,
                loglik=ll,
                iterations=iterations,
                converged=converged,
                collapsed=collapsed,
                trajectory=trajectory,
            )
        )
        if params is not None and np.isfinite(ll):
            candidates.append((restart, params, ll, converged))

    if not candidates:
        raise FitFailureError(
            f"all {config.restarts} restarts collapsed for k={k}", tuple(stats)
        )
    converged_candidates = [c for c in candidates if c[3]]
    pool = converged_candidates if converged_candidates else candidates
    best = max(pool, key=lambda c: (c[2], -c[0]))
    _, best_params, best_ll, best_converged = best

    inference = kim_smooth(best_params, hamilton_filter(best_params, y))
    best_params, inference = order_regimes(best_params, inference)
    argmax = inference.smoothed.argmax(axis=1)
    occupancy = np.bincount(argmax, minlength=k)

    return FitReport(
        k=k,
        n_obs=len(y),
        best_params=best_params,
        best_loglik=best_ll,
        converged=best_converged,
        occupancy=occupancy,
        restart_stats=tuple(stats),
        demeaned=config.demean,
        mean_shift=mean_shift,
    )


def fit_inference(report: FitReport, returns) -> InferenceResult:
    """Recompute the ordered smoothed inference for a fit report's params."""
    y = _as_values(returns)
    if report.demeaned:
        y = y - report.mean_shift
    return kim_smooth(report.best_params, hamilton_filter(report.best_params, y))

"""Gaussian Markov regime-switching variance model.

The observed series y_t carries a common mean and a regime-specific
variance: y_t ~ N(mu, sigma_i^2) given latent regime i, with the regime
following a first-order Markov chain. The forward (Hamilton) filter yields
filtered/predicted regime probabilities and the likelihood; the backward
(Kim) smoother refines them with the full sample.
"""

from __future__ import annotations

import datetime as dt
from dataclasses import dataclass, replace

import numpy as np

from ._kernels import filter_core, smooth_core, xi_sums_core
from .errors import DegenerateModelError, ValidationError
from .ingest import ReturnSeries

ROW_SUM_TOL = 1e-10


@dataclass(frozen=True, eq=False)
class RegimeParams:
    """Transition matrix plus per-regime emission scales and a common mean.

    ``transition[i, j] = P(T_{t+1} = j | T_t = i)`` (rows sum to 1).
    Canonical ordering (sigma ascending) is applied by
    ``labeling.order_regimes``, not enforced here.
    """

    k: int
    transition: np.ndarray
    sigma: np.ndarray
    mu: float

    def __post_init__(self):
        transition = np.asarray(self.transition, dtype=float)
        sigma = np.asarray(self.sigma, dtype=float)
        object.__setattr__(self, "transition", transition)
        object.__setattr__(self, "sigma", sigma)
        object.__setattr__(self, "mu", float(self.mu))
        if self.k < 1:
            raise ValidationError(f"k must be >= 1, got {self.k}")
        if transition.shape != (self.k, self.k):
            raise ValidationError(
                f"transition shape {transition.shape} != ({self.k}, {self.k})"
            )
        if sigma.shape != (self.k,):
            raise ValidationError(f"sigma shape {sigma.shape} != ({self.k},)")
        if not np.isfinite(transition).all():
            raise ValidationError("transition has non-finite entries")
        if ((transition < 0) | (transition > 1)).any():
            raise ValidationError("transition entries must lie in [0, 1]")
        rowsums = transition.sum(axis=1)
        if np.abs(rowsums - 1.0).max() > ROW_SUM_TOL:
            raise ValidationError(
                f"transition rows must sum to 1 (max deviation {np.abs(rowsums - 1).max():.2e})"
            )
        if not np.isfinite(sigma).all() or (sigma <= 0).any():
            raise ValidationError("sigma entries must be finite and > 0")
        if not np.isfinite(self.mu):
            raise ValidationError("mu must be finite")
        transition.flags.writeable = False
        sigma.flags.writeable = False

    def permuted(self, perm: np.ndarray) -> "RegimeParams":
        """Relabel regimes: new regime p is old regime perm[p]."""
        perm = np.asarray(perm)
        return RegimeParams(
            k=self.k,
            transition=self.transition[np.ix_(perm, perm)],
            sigma=self.sigma[perm],
            mu=self.mu,
        )

    def to_dict(self) -> dict:
        return {
            "k": self.k,
            "transition": [[float(v) for v in row] for row in self.transition],
            "sigma": [float(v) for v in self.sigma],
            "mu": float(self.mu),
        }

    @classmethod
    def from_dict(cls, payload: dict) -> "RegimeParams":
        return cls(
            k=int(payload["k"]),
            transition=np.array(payload["transition"], dtype=float),
            sigma=np.array(payload["sigma"], dtype=float),
            mu=float(payload["mu"]),
        )


@dataclass(frozen=True, eq=False)
class InferenceResult:
    """Filtered/predicted/smoothed regime probabilities and the log-likelihood.

    Rows are timesteps; ``smoothed`` is None until ``kim_smooth`` runs.
    """

    filtered: np.ndarray
    predicted: np.ndarray
    log_likelihood: float
    smoothed: np.ndarray | None = None

    @property
    def n_obs(self) -> int:
        return self.filtered.shape[0]

    @property
    def k(self) -> int:
        return self.filtered.shape[1]

    def permuted(self, perm: np.ndarray) -> "InferenceResult":
        perm = np.asarray(perm)
        return InferenceResult(
            filtered=self.filtered[:, perm],
            predicted=self.predicted[:, perm],
            log_likelihood=self.log_likelihood,
            smoothed=None if self.smoothed is None else self.smoothed[:, perm],
        )


def stationary_distribution(transition: np.ndarray) -> np.ndarray:
    """Solve pi P = pi; uniform fallback when the chain is reducible."""
    k = transition.shape[0]
    if k == 1:
        return np.ones(1)
    eigvals, eigvecs = np.linalg.eig(transition.T)
    unit = np.abs(eigvals - 1.0) < 1e-9
    if unit.sum() != 1:
        return np.full(k, 1.0 / k)
    vec = np.real(eigvecs[:, np.argmax(unit)])
    vec = np.abs(vec)
    total = vec.sum()
    if total <= 0 or not np.isfinite(total):
        return np.full(k, 1.0 / k)
    return vec / total


def _as_values(returns) -> np.ndarray:
    if isinstance(returns, ReturnSeries):
        return np.asarray(returns.values, dtype=float)
    return np.asarray(returns, dtype=float)


def hamilton_filter(params: RegimeParams, returns) -> InferenceResult:
    """Forward recursion: filtered/predicted probabilities and log-likelihood.

    The initial predicted distribution is the stationary distribution of the
    transition matrix. Emission densities are evaluated in log space, so
    underflow cannot occur on long series.
    """
    y = _as_values(returns)
    if y.size == 0:
        raise ValidationError("return series is empty")
    if not np.isfinite(y).all():
        raise ValidationError("return series contains non-finite values")
    pi0 = stationary_distribution(params.transition)
    filtered, predicted, loglik = filter_core(
        y, params.transition, params.sigma, params.mu, pi0
    )
    return InferenceResult(
        filtered=filtered, predicted=predicted, log_likelihood=float(loglik)
    )


def kim_smooth(params: RegimeParams, inference: InferenceResult) -> InferenceResult:
    """Backward recursion populating the smoothed probabilities.

    smoothed_{t,i} = filtered_{t,i} * sum_j transition_{i,j} *
    smoothed_{t+1,j} / predicted_{t+1,j}; rows are renormalized against
    accumulated drift.
    """
    if inference.filtered is None or inference.predicted is None:
        raise ValidationError("run hamilton_filter before kim_smooth")
    smoothed, _, err_t, err_j = smooth_core(
        params.transition, inference.filtered, inference.predicted
    )
    if err_t >= 0:
        raise DegenerateModelError(err_t, err_j)
    return replace(inference, smoothed=smoothed)


def smoothed_drift(params: RegimeParams, inference: InferenceResult) -> float:
    """Max |row sum - 1| of the smoother before renormalization (diagnostic)."""
    _, drift, err_t, err_j = smooth_core(
        params.transition, inference.filtered, inference.predicted
    )
    if err_t >= 0:
        raise DegenerateModelError(err_t, err_j)
    return float(drift)


def pairwise_joint_sums(params: RegimeParams, inference: InferenceResult) -> np.ndarray:
    """(k, k) matrix of summed pairwise joints sum_t P(T_t=i, T_{t+1}=j | Y)."""
    if inference.smoothed is None:
        raise ValidationError("run kim_smooth before pairwise_joint_sums")
    return xi_sums_core(
        params.transition, inference.filtered, inference.predicted, inference.smoothed
    )


def simulate(
    params: RegimeParams,
    length: int,
    seed: int,
    asset_id: str = "synthetic",
    start: dt.date = dt.date(2000, 1, 3),
) -> tuple[ReturnSeries, np.ndarray]:
    """Draw a regime path from the chain's stationary start and emit returns.

    Deterministic given the seed. Dates are synthetic consecutive weeks so
    the output plugs into everything downstream.
    """
    if length < 1:
        raise ValidationError(f"length must be >= 1, got {length}")
    rng = np.random.default_rng(seed)
    k = params.k
    pi0 = stationary_distribution(params.transition)
    cum_rows = np.cumsum(params.transition, axis=1)
    regimes = np.empty(length, dtype=np.int64)
    regimes[0] = min(int(np.searchsorted(np.cumsum(pi0), rng.random())), k - 1)
    for t in range(1, length):
        idx = int(np.searchsorted(cum_rows[regimes[t - 1]], rng.random()))
        regimes[t] = min(idx, k - 1)
    values = rng.normal(params.mu, params.sigma[regimes])
    dates = tuple(start + dt.timedelta(weeks=t) for t in range(length))
    series = ReturnSeries(
        dates=dates,
        values=values,
        source_frequency="weekly",
        asset_id=asset_id,
    )
    return series, regimes

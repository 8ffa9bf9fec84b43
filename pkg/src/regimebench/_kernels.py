"""Hot recursion kernels: forward filter, backward smoother, pairwise joints.

Each kernel exists in two builds. The ``*_loop`` functions are written in
plain-loop style and compiled with numba when that backend is active; the
``*_numpy`` functions are independent vectorized implementations used as the
fallback path (and as a cross-check of the compiled path in the tests).

Conventions shared by every kernel:

- ``y``           : (T,) float64 observations
- ``transition``  : (k, k) row-stochastic, ``transition[i, j] = P(next=j | cur=i)``
- ``sigma``       : (k,) per-regime emission standard deviations
- ``mu``          : common emission mean
- ``pi0``         : (k,) initial predicted distribution
- probabilities stay in linear space; emission densities are evaluated in
  log space with a per-step log-sum-exp so long low-volatility stretches
  cannot underflow the likelihood.
"""

from __future__ import annotations

import numpy as np

from . import _backend

_LOG_2PI = float(np.log(2.0 * np.pi))


# ---------------------------------------------------------------------------
# loop-style build (numba target)
# ---------------------------------------------------------------------------

def _filter_loop(y, transition, sigma, mu, pi0):
    T = y.shape[0]
    k = sigma.shape[0]
    filtered = np.empty((T, k))
    predicted = np.empty((T, k))
    log_sigma = np.empty(k)
    for i in range(k):
        log_sigma[i] = np.log(sigma[i])
    a = np.empty(k)
    pred = pi0.copy()
    loglik = 0.0
    for t in range(T):
        for i in range(k):
            predicted[t, i] = pred[i]
        m = -np.inf
        for i in range(k):
            z = (y[t] - mu) / sigma[i]
            logdens = -0.5 * _LOG_2PI - log_sigma[i] - 0.5 * z * z
            if pred[i] > 0.0:
                a[i] = np.log(pred[i]) + logdens
            else:
                a[i] = -np.inf
            if a[i] > m:
                m = a[i]
        s = 0.0
        for i in range(k):
            a[i] = np.exp(a[i] - m)
            s += a[i]
        loglik += m + np.log(s)
        for i in range(k):
            filtered[t, i] = a[i] / s
        for j in range(k):
            acc = 0.0
            for i in range(k):
                acc += filtered[t, i] * transition[i, j]
            pred[j] = acc
    return filtered, predicted, loglik


def _smooth_loop(transition, filtered, predicted):
    T = filtered.shape[0]
    k = filtered.shape[1]
    smoothed = np.empty((T, k))
    ratio = np.empty(k)
    for i in range(k):
        smoothed[T - 1, i] = filtered[T - 1, i]
    max_drift = 0.0
    err_t = -1
    err_j = -1
    for t in range(T - 2, -1, -1):
        for j in range(k):
            p = predicted[t + 1, j]
            s_next = smoothed[t + 1, j]
            if p > 0.0:
                ratio[j] = s_next / p
            elif s_next == 0.0:
                ratio[j] = 0.0
            else:
                err_t = t + 1
                err_j = j
                return smoothed, max_drift, err_t, err_j
        rowsum = 0.0
        for i in range(k):
            acc = 0.0
            for j in range(k):
                acc += transition[i, j] * ratio[j]
            smoothed[t, i] = filtered[t, i] * acc
            rowsum += smoothed[t, i]
        drift = abs(rowsum - 1.0)
        if drift > max_drift:
            max_drift = drift
        for i in range(k):
            smoothed[t, i] /= rowsum
    return smoothed, max_drift, err_t, err_j


def _xi_sums_loop(transition, filtered, predicted, smoothed):
    T = filtered.shape[0]
    k = filtered.shape[1]
    xi = np.zeros((k, k))
    ratio = np.empty(k)
    for t in range(T - 1):
        for j in range(k):
            p = predicted[t + 1, j]
            if p > 0.0:
                ratio[j] = smoothed[t + 1, j] / p
            else:
                ratio[j] = 0.0
        for i in range(k):
            f = filtered[t, i]
            for j in range(k):
                xi[i, j] += f * transition[i, j] * ratio[j]
    return xi


if _backend.NUMBA_AVAILABLE:
    from numba import njit

    _filter_numba = njit(cache=True)(_filter_loop)
    _smooth_numba = njit(cache=True)(_smooth_loop)
    _xi_sums_numba = njit(cache=True)(_xi_sums_loop)


# ---------------------------------------------------------------------------
# vectorized numpy build (fallback path)
# ---------------------------------------------------------------------------

def _log_densities(y, sigma, mu):
    """(T, k) matrix of log N(y_t; mu, sigma_i^2)."""
    z = (y[:, None] - mu) / sigma[None, :]
    return -0.5 * _LOG_2PI - np.log(sigma)[None, :] - 0.5 * z * z


def _filter_numpy(y, transition, sigma, mu, pi0):
    T = y.shape[0]
    k = sigma.shape[0]
    logdens = _log_densities(y, sigma, mu)
    filtered = np.empty((T, k))
    predicted = np.empty((T, k))
    pred = pi0.copy()
    loglik = 0.0
    with np.errstate(divide="ignore"):
        for t in range(T):
            predicted[t] = pred
            a = np.where(pred > 0.0, np.log(np.maximum(pred, 1e-300)), -np.inf)
            a += logdens[t]
            m = a.max()
            w = np.exp(a - m)
            s = w.sum()
            loglik += m + np.log(s)
            filtered[t] = w / s
            pred = filtered[t] @ transition
    return filtered, predicted, loglik


def _smooth_numpy(transition, filtered, predicted):
    T, k = filtered.shape
    smoothed = np.empty((T, k))
    smoothed[-1] = filtered[-1]
    max_drift = 0.0
    for t in range(T - 2, -1, -1):
        p = predicted[t + 1]
        s_next = smoothed[t + 1]
        bad = (p == 0.0) & (s_next != 0.0)
        if bad.any():
            j = int(np.argmax(bad))
            return smoothed, max_drift, t + 1, j
        ratio = np.divide(s_next, p, out=np.zeros(k), where=p > 0.0)
        row = filtered[t] * (transition @ ratio)
        rowsum = row.sum()
        max_drift = max(max_drift, abs(rowsum - 1.0))
        smoothed[t] = row / rowsum
    return smoothed, max_drift, -1, -1


def _xi_sums_numpy(transition, filtered, predicted, smoothed):
    p = predicted[1:]
    ratio = np.divide(smoothed[1:], p, out=np.zeros_like(p), where=p > 0.0)
    return transition * (filtered[:-1].T @ ratio)


# ---------------------------------------------------------------------------
# dispatch
# ---------------------------------------------------------------------------

def filter_core(y, transition, sigma, mu, pi0):
    if _backend.active_backend() == "numba":
        return _filter_numba(y, transition, sigma, mu, pi0)
    return _filter_numpy(y, transition, sigma, mu, pi0)


def smooth_core(transition, filtered, predicted):
    if _backend.active_backend() == "numba":
        return _smooth_numba(transition, filtered, predicted)
    return _smooth_numpy(transition, filtered, predicted)


def xi_sums_core(transition, filtered, predicted, smoothed):
    if _backend.active_backend() == "numba":
        return _xi_sums_numba(transition, filtered, predicted, smoothed)
    return _xi_sums_numpy(transition, filtered, predicted, smoothed)

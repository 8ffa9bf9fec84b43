import numpy as np
import pytest
from hypothesis import given, settings
from hypothesis import strategies as st

from regimebench.errors import DegenerateModelError, ValidationError
from regimebench.regime import (
    InferenceResult,
    RegimeParams,
    hamilton_filter,
    kim_smooth,
    simulate,
    smoothed_drift,
    stationary_distribution,
)

from conftest import random_params
from oracles import fixed_point_stationary, path_filtered, path_posterior


def iid_loglik(y, mu, sigma):
    z = (np.asarray(y) - mu) / sigma
    return float(np.sum(-0.5 * np.log(2 * np.pi) - np.log(sigma) - 0.5 * z * z))


class TestRegimeParams:
    def test_rejects_bad_row_sums(self):
        with pytest.raises(ValidationError):
            RegimeParams(k=2, transition=[[0.7, 0.2], [0.5, 0.5]], sigma=[1, 2], mu=0)

    def test_rejects_nonpositive_sigma(self):
        with pytest.raises(ValidationError):
            RegimeParams(k=2, transition=np.eye(2), sigma=[1.0, 0.0], mu=0)

    def test_rejects_shape_mismatch(self):
        with pytest.raises(ValidationError):
            RegimeParams(k=3, transition=np.eye(2), sigma=[1, 2, 3], mu=0)


class TestStationaryDistribution:
    def test_matches_fixed_point_iteration(self):
        rng = np.random.default_rng(7)
        for k in (2, 3, 4):
            for _ in range(20):
                params = random_params(rng, k)
                pi = stationary_distribution(params.transition)
                oracle = fixed_point_stationary(params.transition)
                np.testing.assert_allclose(pi, oracle, atol=1e-10)
                np.testing.assert_allclose(pi @ params.transition, pi, atol=1e-12)

    def test_reducible_chain_falls_back_to_uniform(self):
        np.testing.assert_allclose(stationary_distribution(np.eye(3)), np.full(3, 1 / 3))

    def test_k1(self):
        np.testing.assert_allclose(stationary_distribution(np.array([[1.0]])), [1.0])


class TestHamiltonFilter:
    def test_k1_reduces_to_iid_gaussian(self):
        params = RegimeParams(k=1, transition=[[1.0]], sigma=[2.5], mu=0.3)
        y = np.random.default_rng(0).normal(0.3, 2.5, size=200)
        result = hamilton_filter(params, y)
        assert result.log_likelihood == pytest.approx(iid_loglik(y, 0.3, 2.5), abs=1e-9)
        np.testing.assert_allclose(result.filtered, 1.0)

    def test_identical_sigmas_leave_filter_at_stationary(self):
        params = RegimeParams(
            k=2, transition=[[0.9, 0.1], [0.3, 0.7]], sigma=[1.5, 1.5], mu=0.0
        )
        pi = stationary_distribution(params.transition)
        y = np.random.default_rng(1).normal(0, 1.5, size=50)
        result = hamilton_filter(params, y)
        np.testing.assert_allclose(result.filtered, np.tile(pi, (50, 1)), atol=1e-12)

    def test_matches_path_enumeration_k2_t3(self):
        params = RegimeParams(
            k=2, transition=[[0.95, 0.05], [0.10, 0.90]], sigma=[1.0, 4.0], mu=0.2
        )
        y = np.array([0.5, -3.0, 0.1])
        pi0 = stationary_distribution(params.transition)
        result = hamilton_filter(params, y)
        loglik, _ = path_posterior(y, params.transition, params.sigma, params.mu, pi0)
        filt = path_filtered(y, params.transition, params.sigma, params.mu, pi0)
        assert result.log_likelihood == pytest.approx(loglik, abs=1e-10)
        np.testing.assert_allclose(result.filtered, filt, atol=1e-10)

    def test_rejects_non_finite_returns(self):
        params = RegimeParams(k=1, transition=[[1.0]], sigma=[1.0], mu=0.0)
        with pytest.raises(ValidationError):
            hamilton_filter(params, np.array([1.0, np.nan]))

    def test_rejects_empty(self):
        params = RegimeParams(k=1, transition=[[1.0]], sigma=[1.0], mu=0.0)
        with pytest.raises(ValidationError):
            hamilton_filter(params, np.array([]))

    def test_no_underflow_on_long_low_vol_series(self):
        params = RegimeParams(
            k=2, transition=[[0.99, 0.01], [0.01, 0.99]], sigma=[0.01, 100.0], mu=0.0
        )
        y = np.random.default_rng(2).normal(0, 100.0, size=2000)
        result = hamilton_filter(params, y)
        assert np.isfinite(result.log_likelihood)
        np.testing.assert_allclose(result.filtered.sum(axis=1), 1.0, atol=1e-9)

    @settings(max_examples=25, deadline=None)
    @given(seed=st.integers(0, 10_000), k=st.integers(1, 4))
    def test_probability_rows_sum_to_one(self, seed, k):
        rng = np.random.default_rng(seed)
        params = random_params(rng, k)
        y = rng.normal(params.mu, 2.0, size=60)
        result = hamilton_filter(params, y)
        np.testing.assert_allclose(result.filtered.sum(axis=1), 1.0, atol=1e-9)
        np.testing.assert_allclose(result.predicted.sum(axis=1), 1.0, atol=1e-9)
        assert (result.filtered >= 0).all() and (result.predicted >= 0).all()

    @settings(max_examples=20, deadline=None)
    @given(seed=st.integers(0, 10_000))
    def test_loglik_invariant_under_regime_permutation(self, seed):
        rng = np.random.default_rng(seed)
        params = random_params(rng, 3)
        y = rng.normal(0, 2.0, size=40)
        base = hamilton_filter(params, y).log_likelihood
        perm = rng.permutation(3)
        permuted = hamilton_filter(params.permuted(perm), y).log_likelihood
        assert permuted == pytest.approx(base, abs=1e-10)


class TestKimSmooth:
    def test_last_row_equals_filtered(self):
        rng = np.random.default_rng(3)
        params = random_params(rng, 3)
        y = rng.normal(0, 2, size=30)
        inference = kim_smooth(params, hamilton_filter(params, y))
        np.testing.assert_allclose(inference.smoothed[-1], inference.filtered[-1], atol=1e-12)

    def test_k1_smoothed_is_one(self):
        params = RegimeParams(k=1, transition=[[1.0]], sigma=[1.0], mu=0.0)
        inference = kim_smooth(params, hamilton_filter(params, np.array([0.5, 1.0, -1.0])))
        np.testing.assert_allclose(inference.smoothed, 1.0)

    def test_matches_path_enumeration_k2_t4(self):
        rng = np.random.default_rng(4)
        for _ in range(10):
            params = random_params(rng, 2)
            y = rng.normal(params.mu, 2.0, size=4)
            pi0 = stationary_distribution(params.transition)
            inference = kim_smooth(params, hamilton_filter(params, y))
            _, smoothed = path_posterior(y, params.transition, params.sigma, params.mu, pi0)
            np.testing.assert_allclose(inference.smoothed, smoothed, atol=1e-10)

    def test_drift_small_on_well_conditioned_params(self):
        rng = np.random.default_rng(5)
        params = random_params(rng, 3)
        y = rng.normal(0, 2, size=500)
        assert smoothed_drift(params, hamilton_filter(params, y)) < 1e-6

    def test_degenerate_predicted_raises_with_location(self):
        params = RegimeParams(
            k=2, transition=[[1.0, 0.0], [0.0, 1.0]], sigma=[1.0, 2.0], mu=0.0
        )
        filtered = np.array([[0.5, 0.5], [0.5, 0.5]])
        predicted = np.array([[0.5, 0.5], [0.0, 1.0]])
        bad = InferenceResult(filtered=filtered, predicted=predicted, log_likelihood=0.0)
        with pytest.raises(DegenerateModelError) as excinfo:
            kim_smooth(params, bad)
        assert excinfo.value.t == 1
        assert excinfo.value.j == 0


class TestSimulate:
    def test_deterministic_given_seed(self):
        params = RegimeParams(
            k=2, transition=[[0.98, 0.02], [0.05, 0.95]], sigma=[1.0, 8.0], mu=0.0
        )
        first, regimes_first = simulate(params, 500, seed=42)
        second, regimes_second = simulate(params, 500, seed=42)
        assert np.array_equal(first.values, second.values)
        assert np.array_equal(regimes_first, regimes_second)

    def test_collapsed_regimes_look_iid(self):
        params = RegimeParams(
            k=2, transition=[[0.5, 0.5], [0.5, 0.5]], sigma=[1.0, 1.0], mu=0.25
        )
        series, _ = simulate(params, 4000, seed=9)
        assert np.mean(series.values) == pytest.approx(0.25, abs=0.06)
        assert np.std(series.values) == pytest.approx(1.0, abs=0.05)

    def test_within_regime_std_matches_sigma(self):
        params = RegimeParams(
            k=2, transition=[[0.98, 0.02], [0.02, 0.98]], sigma=[1.0, 8.0], mu=0.0
        )
        series, regimes = simulate(params, 2000, seed=11)
        for i, target in enumerate(params.sigma):
            observed = np.std(series.values[regimes == i])
            assert abs(observed - target) / target < 0.10

    def test_rejects_zero_length(self):
        params = RegimeParams(k=1, transition=[[1.0]], sigma=[1.0], mu=0.0)
        with pytest.raises(ValidationError):
            simulate(params, 0, seed=0)

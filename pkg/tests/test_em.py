import json

import numpy as np
import pytest

from regimebench.em import FitConfig, RestartStat, em_step, fit, fit_inference, init_params
from regimebench.errors import FitFailureError, RegimeCollapseError, ValidationError
from regimebench.regime import RegimeParams, simulate


@pytest.fixture(scope="module")
def two_regime_series():
    truth = RegimeParams(
        k=2, transition=[[0.98, 0.02], [0.02, 0.98]], sigma=[1.0, 8.0], mu=0.0
    )
    series, regimes = simulate(truth, 2000, seed=5)
    return truth, series, regimes


class TestInitParams:
    def test_k1_has_unit_transition(self):
        y = np.random.default_rng(0).normal(0, 2, 100)
        params = init_params(1, y, seed=3)
        np.testing.assert_array_equal(params.transition, [[1.0]])
        assert params.mu == pytest.approx(np.mean(y))

    def test_deterministic_given_seed(self):
        y = np.random.default_rng(0).normal(0, 2, 100)
        a = init_params(3, y, seed=7)
        b = init_params(3, y, seed=7)
        np.testing.assert_array_equal(a.sigma, b.sigma)
        np.testing.assert_array_equal(a.transition, b.transition)

    def test_200_seeds_distinct_sigma_vectors(self):
        y = np.random.default_rng(1).normal(0, 2, 300)
        seen = {tuple(init_params(2, y, seed=s).sigma) for s in range(200)}
        assert len(seen) == 200

    def test_sigma_factors_within_bounds(self):
        y = np.random.default_rng(2).normal(0, 3, 500)
        std = np.std(y)
        for s in range(50):
            factors = init_params(4, y, seed=s).sigma / std
            assert (factors >= 0.25).all() and (factors <= 4.0).all()

    def test_rejects_too_short_series(self):
        with pytest.raises(ValidationError):
            init_params(5, np.array([1.0, 2.0]), seed=0)


class TestEmStep:
    def test_k1_one_step_is_exact_mle(self):
        y = np.random.default_rng(4).normal(1.5, 3.0, 400)
        params = init_params(1, y, seed=9)
        stepped, _ = em_step(params, y)
        assert stepped.mu == pytest.approx(np.mean(y), abs=1e-12)
        assert stepped.sigma[0] == pytest.approx(np.std(y), abs=1e-12)
        again, ll = em_step(stepped, y)
        assert again.sigma[0] == pytest.approx(stepped.sigma[0], abs=1e-12)
        z = (y - y.mean()) / y.std()
        iid = np.sum(-0.5 * np.log(2 * np.pi) - np.log(y.std()) - 0.5 * z * z)
        assert ll == pytest.approx(iid, abs=1e-9)

    def test_returns_pre_update_loglik(self, two_regime_series):
        truth, series, _ = two_regime_series
        from regimebench.regime import hamilton_filter

        _, ll = em_step(truth, series)
        assert ll == pytest.approx(hamilton_filter(truth, series).log_likelihood)

    def test_collapsed_regime_raises(self):
        y = np.random.default_rng(6).normal(0, 1, 200)
        params = RegimeParams(
            k=2, transition=[[0.999, 0.001], [0.001, 0.999]],
            sigma=[1.0, 1e9], mu=0.0,
        )
        with pytest.raises(RegimeCollapseError):
            em_step(params, y)

    def test_fix_mu_pins_the_mean(self, two_regime_series):
        _, series, _ = two_regime_series
        params = init_params(2, series, seed=0)
        stepped, _ = em_step(params, series, fix_mu=0.0)
        assert stepped.mu == 0.0


class TestFit:
    def test_k1_converges_within_two_updates(self):
        y = np.random.default_rng(8).normal(0.5, 2.0, 300)
        report = fit(1, y, FitConfig(restarts=3, seed=0))
        assert report.converged
        assert all(s.iterations <= 2 for s in report.restart_stats)
        z = (y - y.mean()) / y.std()
        iid = np.sum(-0.5 * np.log(2 * np.pi) - np.log(y.std()) - 0.5 * z * z)
        assert report.best_loglik == pytest.approx(iid, abs=1e-9)

    def test_trajectories_monotone(self, two_regime_series):
        _, series, _ = two_regime_series
        report = fit(2, series, FitConfig(restarts=20, seed=3))
        for stat in report.restart_stats:
            diffs = np.diff(stat.trajectory)
            if len(diffs):
                assert diffs.min() >= -1e-8

    def test_deterministic_reports(self, two_regime_series):
        _, series, _ = two_regime_series
        config = FitConfig(restarts=4, seed=11)
        first = fit(2, series, config).to_json()
        second = fit(2, series, config).to_json()
        assert first == second

    def test_recovers_simulated_two_regime_model(self, two_regime_series):
        truth, series, regimes = two_regime_series
        report = fit(2, series, FitConfig(restarts=10, seed=1))
        assert report.converged
        np.testing.assert_allclose(report.best_params.sigma, truth.sigma, rtol=0.15)

    def test_canonical_sigma_order(self, two_regime_series):
        _, series, _ = two_regime_series
        report = fit(2, series, FitConfig(restarts=5, seed=2))
        assert (np.diff(report.best_params.sigma) > 0).all()

    def test_occupancy_sums_to_T(self, two_regime_series):
        _, series, _ = two_regime_series
        report = fit(2, series, FitConfig(restarts=5, seed=2))
        assert report.occupancy.sum() == len(series)

    def test_loglik_invariant_under_permuted_initialization(self, two_regime_series):
        _, series, _ = two_regime_series
        y = np.asarray(series.values)
        from regimebench.em import _em_update

        def run_to_convergence(params):
            initial = None
            prev = None
            for _ in range(300):
                new_params, ll, s0 = _em_update(params, y, initial, None)
                if prev is not None and abs(ll - prev) < 1e-6:
                    return ll
                prev, params, initial = ll, new_params, s0
            return prev

        start = init_params(2, y, seed=13)
        flipped = start.permuted(np.array([1, 0]))
        assert run_to_convergence(start) == pytest.approx(
            run_to_convergence(flipped), abs=1e-8
        )

    def test_all_restarts_collapsing_raises(self, two_regime_series, monkeypatch):
        _, series, _ = two_regime_series

        def always_collapse(params, y, initial, fix_mu):
            raise RegimeCollapseError(0, 0.0)

        monkeypatch.setattr("regimebench.em._em_update", always_collapse)
        with pytest.raises(FitFailureError) as excinfo:
            fit(2, series, FitConfig(restarts=3, seed=0))
        assert len(excinfo.value.restart_stats) == 3
        assert all(s.collapsed for s in excinfo.value.restart_stats)

    def test_demean_fixes_mu_at_zero(self, two_regime_series):
        _, series, _ = two_regime_series
        report = fit(2, series, FitConfig(restarts=3, seed=0, demean=True))
        assert report.best_params.mu == 0.0
        assert report.demeaned
        assert report.mean_shift == pytest.approx(np.mean(series.values))

    def test_report_round_trips_through_json(self, two_regime_series):
        _, series, _ = two_regime_series
        report = fit(2, series, FitConfig(restarts=3, seed=0))
        payload = json.loads(report.to_json())
        rebuilt = RegimeParams.from_dict(payload["params"])
        np.testing.assert_allclose(rebuilt.sigma, report.best_params.sigma)
        np.testing.assert_allclose(rebuilt.transition, report.best_params.transition)

    def test_fit_inference_matches_occupancy(self, two_regime_series):
        _, series, _ = two_regime_series
        report = fit(2, series, FitConfig(restarts=3, seed=0))
        inference = fit_inference(report, series)
        argmax = inference.smoothed.argmax(axis=1)
        np.testing.assert_array_equal(
            np.bincount(argmax, minlength=2), report.occupancy
        )

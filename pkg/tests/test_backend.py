import numpy as np
import pytest

from regimebench import _backend
from regimebench._kernels import (
    _filter_numpy,
    _smooth_numpy,
    _xi_sums_numpy,
    filter_core,
    smooth_core,
    xi_sums_core,
)
from regimebench.regime import stationary_distribution

from conftest import random_params

pytestmark = pytest.mark.skipif(
    not _backend.NUMBA_AVAILABLE, reason="numba not installed"
)


@pytest.fixture
def restore_backend():
    before = _backend.active_backend()
    yield
    _backend.set_backend(before)


def kernel_inputs(seed, k=3, T=200):
    rng = np.random.default_rng(seed)
    params = random_params(rng, k)
    y = rng.normal(params.mu, 2.0, T)
    pi0 = stationary_distribution(params.transition)
    return y, params, pi0


class TestBackendEquivalence:
    def test_filter_paths_agree(self, restore_backend):
        for seed in range(10):
            y, params, pi0 = kernel_inputs(seed)
            _backend.set_backend("numba")
            f_nb, p_nb, ll_nb = filter_core(y, params.transition, params.sigma, params.mu, pi0)
            f_np, p_np, ll_np = _filter_numpy(y, params.transition, params.sigma, params.mu, pi0)
            np.testing.assert_allclose(f_nb, f_np, atol=1e-12)
            np.testing.assert_allclose(p_nb, p_np, atol=1e-12)
            assert ll_nb == pytest.approx(ll_np, abs=1e-9)

    def test_smoother_paths_agree(self, restore_backend):
        for seed in range(10):
            y, params, pi0 = kernel_inputs(seed)
            _backend.set_backend("numba")
            filtered, predicted, _ = filter_core(
                y, params.transition, params.sigma, params.mu, pi0
            )
            s_nb, d_nb, et_nb, ej_nb = smooth_core(params.transition, filtered, predicted)
            s_np, d_np, et_np, ej_np = _smooth_numpy(params.transition, filtered, predicted)
            np.testing.assert_allclose(s_nb, s_np, atol=1e-12)
            assert (et_nb, ej_nb) == (et_np, ej_np) == (-1, -1)
            xi_nb = xi_sums_core(params.transition, filtered, predicted, s_nb)
            xi_np = _xi_sums_numpy(params.transition, filtered, predicted, s_np)
            np.testing.assert_allclose(xi_nb, xi_np, atol=1e-10)

    def test_fit_results_agree_across_backends(self, restore_backend):
        from regimebench.em import FitConfig, fit
        from regimebench.regime import RegimeParams, simulate

        truth = RegimeParams(
            k=2, transition=[[0.97, 0.03], [0.03, 0.97]], sigma=[1.0, 6.0], mu=0.0
        )
        series, _ = simulate(truth, 600, seed=0)
        config = FitConfig(restarts=3, seed=0)
        _backend.set_backend("numba")
        report_nb = fit(2, series, config)
        _backend.set_backend("numpy")
        report_np = fit(2, series, config)
        assert report_nb.best_loglik == pytest.approx(report_np.best_loglik, abs=1e-7)
        np.testing.assert_allclose(
            report_nb.best_params.sigma, report_np.best_params.sigma, atol=1e-7
        )


class TestBackendSelection:
    def test_set_backend_rejects_unknown(self):
        with pytest.raises(ValueError):
            _backend.set_backend("fortran")

    def test_switching_changes_active(self, restore_backend):
        _backend.set_backend("numpy")
        assert _backend.active_backend() == "numpy"
        _backend.set_backend("numba")
        assert _backend.active_backend() == "numba"

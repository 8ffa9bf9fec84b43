"""Small constructors shared by selection-related tests."""

import numpy as np

from regimebench.em import FitReport
from regimebench.regime import RegimeParams


def make_fit_report(k: int, loglik: float, n_obs: int = 500) -> FitReport:
    params = RegimeParams(
        k=k,
        transition=np.full((k, k), 1.0 / k),
        sigma=np.linspace(1.0, 2.0, k),
        mu=0.0,
    )
    occupancy = np.full(k, n_obs // k)
    occupancy[0] += n_obs - occupancy.sum()
    return FitReport(
        k=k,
        n_obs=n_obs,
        best_params=params,
        best_loglik=loglik,
        converged=True,
        occupancy=occupancy,
        restart_stats=(),
    )

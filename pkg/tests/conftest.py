import os
import sys
from pathlib import Path

import numpy as np
import pytest

sys.path.insert(0, str(Path(__file__).parent))

DATA_ENV = "REGIMEBENCH_DATA_DIR"
OIL_FILES = {
    "wti": "wti_daily.csv",
    "brent": "brent_daily.csv",
    "dubai": "dubai_monthly.csv",
}


def oil_data_dir() -> Path | None:
    env = os.environ.get(DATA_ENV)
    candidates = []
    if env:
        candidates.append(Path(env))
    candidates.append(Path(__file__).resolve().parent.parent / "data")
    for candidate in candidates:
        if all((candidate / name).is_file() for name in OIL_FILES.values()):
            return candidate
    return None


@pytest.fixture(scope="session")
def oil_dir():
    found = oil_data_dir()
    if found is None:
        pytest.skip(
            "oil price files not present (no network in this environment); "
            f"drop wti_daily.csv, brent_daily.csv, dubai_monthly.csv into ./data "
            f"or point {DATA_ENV} at them -- see README"
        )
    return found


def random_params(rng: np.random.Generator, k: int):
    """A valid random parameter set for oracle comparisons."""
    from regimebench.regime import RegimeParams

    raw = rng.uniform(0.2, 1.0, size=(k, k)) + np.eye(k) * rng.uniform(0, 4)
    transition = raw / raw.sum(axis=1, keepdims=True)
    sigma = np.sort(rng.uniform(0.3, 5.0, size=k))
    mu = float(rng.normal(0, 1))
    return RegimeParams(k=k, transition=transition, sigma=sigma, mu=mu)

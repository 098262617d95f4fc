import numpy as np
import pytest

from gbmtails.killing import KillSchedule, sample_killed_batch
from gbmtails.sde import GbmParams

# Three parameter sets straddling the critical volatility sqrt(2r) ~ 0.3162
QUASI = GbmParams(x0=1.0, r=0.05, alpha=0.2)
NEAR_CRITICAL = GbmParams(x0=1.0, r=0.05, alpha=np.sqrt(2 * 0.05) + 1e-3)
STOCHASTIC = GbmParams(x0=1.0, r=0.05, alpha=0.5)
SCHEDULE = KillSchedule(nu=0.01)

BATCH_N = 1_000_000


@pytest.fixture(scope="session")
def quasi_batch() -> np.ndarray:
    return sample_killed_batch(QUASI, SCHEDULE, BATCH_N, master_seed=101)


@pytest.fixture(scope="session")
def near_critical_batch() -> np.ndarray:
    return sample_killed_batch(NEAR_CRITICAL, SCHEDULE, BATCH_N, master_seed=202)


@pytest.fixture(scope="session")
def stochastic_batch() -> np.ndarray:
    return sample_killed_batch(STOCHASTIC, SCHEDULE, BATCH_N, master_seed=303)

import sys
from pathlib import Path

import numpy as np
import pytest

sys.path.insert(0, str(Path(__file__).parent))

from factorseg import SimulationSpec, simulate_dataset


@pytest.fixture
def rng():
    return np.random.default_rng(12345)


def simulate(p, T, changepoints=(), seed=0, clusters=2, within=0.75, between=0.20):
    """Shared shortcut for the blocked-covariance generator."""
    spec = SimulationSpec(
        p=p,
        T=T,
        changepoints=tuple(changepoints),
        clusters=clusters,
        within_corr=within,
        between_corr=between,
        master_seed=seed,
    )
    return simulate_dataset(spec)

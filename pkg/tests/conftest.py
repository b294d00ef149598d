import numpy as np
import pytest

from armplan import ArmGeometry, RhythmParams
from armplan.dynamics import ArmMetric, LinkParams


@pytest.fixture(scope="session")
def geom():
    return ArmGeometry()


@pytest.fixture(scope="session")
def rhythm():
    return RhythmParams()


@pytest.fixture(scope="session")
def links(geom):
    return LinkParams.default(geom)


@pytest.fixture(scope="session")
def arm_metric(links, geom, rhythm):
    return ArmMetric(links, geom, rhythm)


def sample_configurations(geom, n, seed, min_sin_theta=0.05):
    """Uniform configurations inside the joint limits, away from the eta
    degeneracy."""
    rng = np.random.default_rng(seed)
    lo, hi = geom.limits[:, 0], geom.limits[:, 1]
    out = []
    while len(out) < n:
        q = rng.uniform(lo, hi)
        if np.sin(q[0]) >= min_sin_theta:
            out.append(q)
    return np.array(out)

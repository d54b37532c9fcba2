import sys
from pathlib import Path

import hypothesis
import numpy as np
import pytest

sys.path.insert(0, str(Path(__file__).parent))

from netform import CommonParams, Dataset, DirectedNetwork, DyadCovariates, HeterogeneityVector  # noqa: E402

hypothesis.settings.register_profile("default", max_examples=60, deadline=None)
hypothesis.settings.register_profile("ci", max_examples=200, deadline=None)
hypothesis.settings.load_profile("default")


def random_dataset(rng, n=12, d_z=2, density=0.45):
    g = (rng.random((n, n)) < density).astype(int)
    np.fill_diagonal(g, 0)
    z = rng.normal(size=(n, n, d_z))
    return Dataset(DirectedNetwork(g), DyadCovariates(z))


def interior_point(rng, data, min_prob=1e-6):
    """Random (theta, gamma) at which every outcome probability exceeds min_prob.

    Finite differences of log P are meaningless once P itself is at the
    level of its round-off, so derivative checks stay inside this region.
    """
    from netform.likelihood import Layout, LikelihoodEvaluator

    layout = Layout.fixed_effects(data.n, data.d_z)
    ev = LikelihoodEvaluator(data, layout, clip=False)
    while True:
        theta, gam = random_point(rng, data.n, data.d_z)
        if ev.evaluate(layout.pack_gamma(theta, gam), 0).min_prob > min_prob:
            return theta, gam


def random_point(rng, n, d_z):
    theta = CommonParams(rng.normal(size=d_z) * 0.5, rng.uniform(0.2, 1.2), rng.uniform(-0.8, 0.8))
    a = rng.normal(size=n) * 0.5
    b = rng.normal(size=n) * 0.5
    return theta, HeterogeneityVector.normalized(a, b)


@pytest.fixture
def rng():
    return np.random.default_rng(20240611)


@pytest.fixture
def small_data(rng):
    return random_dataset(rng)

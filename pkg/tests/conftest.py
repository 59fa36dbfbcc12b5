import numpy as np
import pytest

from tgsr.grouped_data import DomainPair, GroupedFeatureMatrix, LabelMatrix, build_grid_layout


def random_pair(rng, scales=(1, 2), d=3, C=3, Ns=12, Nt=9, shift=0.0):
    layout = build_grid_layout(scales, (8, 8))
    K = layout.K
    Xs = rng.standard_normal((K * d, Ns))
    Xt = rng.standard_normal((K * d, Nt)) + shift
    y = rng.integers(0, C, Ns)
    labels = LabelMatrix.from_indices(y, [f"c{i}" for i in range(C)])
    return DomainPair(GroupedFeatureMatrix(Xs, K, d), GroupedFeatureMatrix(Xt, K, d), labels, layout)


@pytest.fixture
def rng():
    return np.random.default_rng(12345)


@pytest.fixture
def small_pair(rng):
    return random_pair(rng)

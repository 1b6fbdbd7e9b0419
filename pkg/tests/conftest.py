import numpy as np
import pytest

from defectpls.dataset import MetricDataset


def make_separable(n=500, m=10, seed=0, pos_rate=0.5):
    """Linearly separable dataset: feature 0 carries the class with a wide
    margin, the other features are uniform noise. All values lie in [0, 1]."""
    rng = np.random.default_rng(seed)
    labels = np.where(rng.random(n) < pos_rate, 1, -1)
    labels[:2] = (1, -1)  # both classes guaranteed
    X = rng.random((n, m))
    X[:, 0] = np.where(
        labels == 1, 0.75 + 0.2 * rng.random(n), 0.05 + 0.2 * rng.random(n)
    )
    bug_counts = np.where(labels == 1, rng.integers(1, 4, size=n), 0)
    names = tuple(f"m{j}" for j in range(m))
    return MetricDataset(names=names, X=X, bug_counts=bug_counts)


def make_noise(n=500, m=10, seed=0, pos_rate=0.5):
    """Pure-noise features with random labels at the given base rate."""
    rng = np.random.default_rng(seed)
    labels = np.where(rng.random(n) < pos_rate, 1, -1)
    labels[:2] = (1, -1)
    X = rng.random((n, m))
    bug_counts = np.where(labels == 1, rng.integers(1, 4, size=n), 0)
    names = tuple(f"m{j}" for j in range(m))
    return MetricDataset(names=names, X=X, bug_counts=bug_counts)


@pytest.fixture
def separable_dataset():
    return make_separable()


@pytest.fixture
def noise_dataset():
    return make_noise()

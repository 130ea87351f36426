import numpy as np
import pytest

from augscope.dataset import Dataset, make_gaussian_imbalanced


def make_dataset(X, y, n_classes=None, ids=None):
    X = np.asarray(X, dtype=float)
    y = np.asarray(y)
    if ids is None:
        ids = np.arange(len(y))
    return Dataset(X, y, ids, n_classes or int(y.max()) + 1)


@pytest.fixture
def small_imbalanced():
    # 2-D, 60:12, moderate overlap
    return make_gaussian_imbalanced(60, 12, 2, 2.0, seed=3)


@pytest.fixture
def three_class():
    rng = np.random.default_rng(11)
    X = np.vstack([rng.normal(0, 1, (40, 3)), rng.normal(3, 1, (15, 3)), rng.normal(-3, 1, (8, 3))])
    y = np.repeat([0, 1, 2], [40, 15, 8])
    return make_dataset(X, y)

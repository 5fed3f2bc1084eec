from __future__ import annotations

import numpy as np
import pytest

from sbstacy.process import SbsParameters, TimeGrid


@pytest.fixture
def rng():
    return np.random.default_rng(20240611)


def random_params(rng, T=None, k=None, low=0.3, high=5.0) -> SbsParameters:
    T = int(rng.integers(1, 11)) if T is None else T
    k = int(rng.integers(1, 4)) if k is None else k
    return SbsParameters(rng.uniform(low, high, size=(T, k + 1)), TimeGrid(T))


def random_censored(rng, n, T, k):
    times = rng.integers(1, T + 1, size=n)
    causes = rng.integers(0, k + 1, size=n)
    return times, causes


def melanoma_or_skip():
    pytest.importorskip("pydataset")
    from sbstacy.io import load_melanoma

    return load_melanoma()

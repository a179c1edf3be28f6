import numpy as np
import pytest

from genmotif import kernels
from genmotif.timeseries import TimeSeries


@pytest.fixture
def rng():
    return np.random.default_rng(12345)


@pytest.fixture
def walk(rng):
    return TimeSeries(np.cumsum(rng.normal(0, 0.1, size=(3000, 1)), axis=0))


@pytest.fixture(params=kernels.available_backends())
def backend(request):
    previous = kernels.BACKEND
    kernels.set_backend(request.param)
    yield request.param
    kernels.set_backend(previous)

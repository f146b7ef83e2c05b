import numpy as np
import pytest

from qdlc import _kernels


@pytest.fixture
def rng():
    return np.random.default_rng(1234)


def kernel_backends():
    out = [_kernels.numpy_kernels]
    if _kernels.numba_kernels is not None:
        out.append(_kernels.numba_kernels)
    return out


@pytest.fixture(params=kernel_backends(), ids=lambda k: k.name)
def kernels(request):
    return request.param

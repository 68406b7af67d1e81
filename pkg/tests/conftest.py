import numpy as np
import pytest

from vrpower import kernels


BACKENDS = ["python"] + (["compiled"] if kernels.COMPILED else [])


@pytest.fixture(params=BACKENDS)
def backend(request, monkeypatch):
    mod = kernels.python_backend if request.param == "python" else kernels.compiled_backend
    monkeypatch.setattr(kernels, "backend", mod)
    return request.param


@pytest.fixture
def rng():
    return np.random.default_rng(12345)

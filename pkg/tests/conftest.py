import numpy as np
import pytest

from askl import _backend, _purepy


@pytest.fixture
def rng():
    return np.random.default_rng(20240601)


@pytest.fixture(params=["python", "compiled"])
def kernels(request, monkeypatch):
    """Run a test once per kernel backend (compiled is skipped when absent)."""
    if request.param == "python":
        monkeypatch.setattr(_backend, "kernels", _purepy)
    else:
        try:
            from askl import _kernels
        except ImportError:
            pytest.skip("compiled extension not built")
        monkeypatch.setattr(_backend, "kernels", _kernels)
    return request.param

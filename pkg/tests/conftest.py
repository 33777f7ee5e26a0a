import numpy as np
import pytest

from samedge.objectives import MlpModel, glorot_init


def make_mlp(widths=(8, 16, 16, 4), n=200, activation="tanh", seed=0):
    rng = np.random.default_rng(seed)
    inputs = rng.standard_normal((n, widths[0]))
    targets = rng.standard_normal((n, widths[-1]))
    return MlpModel(widths, inputs, targets, activation)


def central_difference_grad(fn, w, v, eps):
    return (fn(w + eps * v) - fn(w - eps * v)) / (2 * eps)


def rel_err(a, b):
    a, b = np.asarray(a), np.asarray(b)
    return float(np.linalg.norm(a - b) / max(np.linalg.norm(b), 1e-300))


@pytest.fixture
def rng():
    return np.random.default_rng(12345)


@pytest.fixture
def tanh_mlp():
    model = make_mlp()
    return model, glorot_init(model.widths, 1)

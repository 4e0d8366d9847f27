import numpy as np
import pytest
from hypothesis import given, strategies as st

from naikit import kernels
from naikit.activations import generalized_sigmoid, list_catalog, make_activation
from naikit.composed import ComposedB

pytestmark = pytest.mark.skipif(not kernels.compiled_available(), reason="compiled kernels not built")

SPECS = list_catalog() + [make_activation("repu", q=4), make_activation("elu", alpha=2.0),
                          generalized_sigmoid(L=2.0, ell=-1.0, decay_alpha=0.5),
                          generalized_sigmoid(base="logistic")]


@pytest.fixture
def both():
    prev = kernels.backend()
    yield
    kernels.use_backend(prev)


def _run(name, fn):
    kernels.use_backend(name)
    return fn()


@pytest.mark.parametrize("spec", SPECS, ids=lambda s: s.label)
def test_composed_eval_agrees(spec, both):
    n = 1 if spec.id == "gaussian" else 3
    cb = ComposedB.of(spec, n)
    X = np.random.default_rng(1).uniform(-3, 3, (500, n))
    a = _run("cython", lambda: kernels.composed_eval(spec, cb.recipe.coefs, cb.recipe.offsets, X))
    b = _run("python", lambda: kernels.composed_eval(spec, cb.recipe.coefs, cb.recipe.offsets, X))
    np.testing.assert_allclose(a, b, rtol=1e-12, atol=1e-12)


@given(st.integers(0, 1000), st.floats(0.05, 2.0))
def test_kernel_sum_agrees(seed, theta):
    prev = kernels.backend()
    try:
        spec = make_activation("sigmoid")
        cb = ComposedB.of(spec, 2)
        rng = np.random.default_rng(seed)
        X, C, w = rng.uniform(-1, 1, (20, 2)), rng.uniform(-1, 1, (30, 2)), rng.normal(size=30)
        a = _run("cython", lambda: kernels.kernel_sum(spec, cb.recipe.coefs, cb.recipe.offsets, X, C, w, 1 / theta))
        b = _run("python", lambda: kernels.kernel_sum(spec, cb.recipe.coefs, cb.recipe.offsets, X, C, w, 1 / theta))
        np.testing.assert_allclose(a, b, rtol=1e-11, atol=1e-12)
    finally:
        kernels.use_backend(prev)


def test_use_backend_validates():
    with pytest.raises(ValueError):
        kernels.use_backend("fortran")

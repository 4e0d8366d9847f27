"""Hot loops: nested B-function evaluation and kernel sums.

The compiled extension ``_ckernels`` is used when it imports; otherwise,
or when ``NAIKIT_PURE_PYTHON=1`` is set, the numpy fallback runs.
Custom activations always take the numpy path since their evaluator is a
Python callable.
"""

import os

import numpy as np

from . import _pykernels

try:
    from . import _ckernels
except ImportError:  # extension not built
    _ckernels = None

ACTIVATION_CODES = {
    "repu": 0,
    "sigmoid": 1,
    "tanh": 2,
    "softplus": 3,
    "arctan": 4,
    "generalized_sigmoid/logistic": 5,
    "generalized_sigmoid/algebraic": 6,
    "elu": 7,
    "gelu": 8,
    "silu": 9,
    "mish": 10,
    "gaussian": 11,
}

_backend = "python" if (_ckernels is None or os.environ.get("NAIKIT_PURE_PYTHON") == "1") else "cython"


def backend():
    """Name of the active backend, ``"cython"`` or ``"python"``."""
    return _backend


def compiled_available():
    return _ckernels is not None


def use_backend(name):
    """Switch backend at runtime; returns the previous name."""
    global _backend
    if name not in ("cython", "python"):
        raise ValueError(f"unknown backend {name!r}")
    if name == "cython" and _ckernels is None:
        raise RuntimeError("compiled kernels are not built")
    prev, _backend = _backend, name
    return prev


def pack(spec):
    """``(code, params)`` for the compiled kernels, or None for custom specs."""
    p = spec.params
    if spec.id == "custom":
        return None
    if spec.id == "generalized_sigmoid":
        code = ACTIVATION_CODES[f"generalized_sigmoid/{spec.base}"]
        params = [p["L"], p["ell"], 1.0 + p["decay_alpha"]]
    elif spec.id == "repu":
        code, params = 0, [float(p["q"])]
    elif spec.id == "elu":
        code, params = 7, [float(p["alpha"])]
    else:
        code, params = ACTIVATION_CODES[spec.id], [0.0]
    return code, np.ascontiguousarray(params, dtype=float)


def _sigma(spec):
    from ..activations import _evaluate_array

    return lambda t: _evaluate_array(spec, t)


def _c_ready(spec):
    return _backend == "cython" and spec.id != "custom"


def composed_eval(spec, coefs, offsets, X):
    """Evaluate ``B(x_n, B(x_{n-1}, ... B(x_1, 1)))`` row-wise.

    ``B(x, h) = sum_i coefs[i] * sigma(x + offsets[i] * h)``.
    """
    X = np.ascontiguousarray(X, dtype=float)
    coefs = np.ascontiguousarray(coefs, dtype=float)
    offsets = np.ascontiguousarray(offsets, dtype=float)
    if _c_ready(spec):
        code, params = pack(spec)
        return _ckernels.composed_eval(code, params, coefs, offsets, X)
    return _pykernels.composed_eval(_sigma(spec), coefs, offsets, X)


def kernel_sum(spec, coefs, offsets, X, centers, weights, inv_theta, radius=None):
    """``sum_j weights[j] * composed((x - centers[j]) * inv_theta)`` per row of X."""
    X = np.ascontiguousarray(X, dtype=float)
    centers = np.ascontiguousarray(centers, dtype=float)
    weights = np.ascontiguousarray(weights, dtype=float)
    coefs = np.ascontiguousarray(coefs, dtype=float)
    offsets = np.ascontiguousarray(offsets, dtype=float)
    n = X.shape[1]
    if radius is None:
        radius = np.full(n, np.inf)
    radius = np.array(np.broadcast_to(radius, (n,)), dtype=float)
    if _c_ready(spec):
        code, params = pack(spec)
        return _ckernels.kernel_sum(
            code, params, coefs, offsets, X, centers, weights, float(inv_theta), radius
        )
    return _pykernels.kernel_sum(
        _sigma(spec), coefs, offsets, X, centers, weights, float(inv_theta), radius
    )

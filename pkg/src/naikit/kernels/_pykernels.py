"""Pure numpy implementations of the compiled kernels."""

import numpy as np

_CHUNK = 1 << 16


def composed_eval(sigma, coefs, offsets, X):
    X = np.asarray(X, dtype=float)
    M, n = X.shape
    h = np.ones(M)
    nterms = len(coefs)
    for d in range(n):
        xd = X[:, d]
        v = np.zeros(M)
        for c, o in zip(coefs, offsets):
            v += c * sigma(xd + o * h)
        if nterms > 1:
            v[h == 0.0] = 0.0
        h = v
    return h


def kernel_sum(sigma, coefs, offsets, X, C, weights, inv_theta, radius):
    X = np.asarray(X, dtype=float)
    C = np.asarray(C, dtype=float)
    weights = np.asarray(weights, dtype=float)
    radius = np.asarray(radius, dtype=float)
    keep = weights != 0.0
    C = C[keep]
    weights = weights[keep]
    M, n = X.shape
    out = np.zeros(M)
    if len(weights) == 0:
        return out
    rows = max(1, _CHUNK // max(1, len(weights)))
    for start in range(0, M, rows):
        xs = X[start:start + rows]
        U = (xs[:, None, :] - C[None, :, :]) * inv_theta
        inside = np.all(np.abs(U) <= radius, axis=2)
        vals = np.zeros(inside.shape)
        if inside.any():
            vals[inside] = composed_eval(sigma, coefs, offsets, U[inside])
        out[start:start + rows] = vals @ weights
    return out

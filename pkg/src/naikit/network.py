"""Networks with closed-form weights.

Two builders:

* ``build_quadrature_network_1d``: one hidden layer realizing the tagged
  Riemann sum of ``f * B_theta``,
  ``(1/theta) sum_j (z_{j+1} - z_j) f(xi_j) sum_l alpha_l sigma(w_l (x - xi_j) / theta + b_l)``
  divided by the signed integral of ``B``.
* ``build_mc_network``: the Monte-Carlo average
  ``(2^n / N) sum_j f(xi_j) B_theta(x - xi_j)`` over uniform samples, where each
  branch evaluates the nested composition layer by layer.

In the layered form, layer ``j`` holds ``N (k+1)`` units.  Unit ``(b, i)``
has pre-activation ``x_j / theta - xi_{b,j} / theta + o_i h_{j-1,b}`` with
``h_{j-1,b} = sum_l c_l sigma(unit (b, l) of layer j-1)`` and ``h_0 = 1``;
the ``o_i c_l`` products live in block-diagonal ``prev_blocks``.
"""

from __future__ import annotations

import json
import math
from dataclasses import dataclass, field
from typing import Callable, Optional

import numpy as np

from . import kernels
from .activations import ActivationSpec, _evaluate_array, get_activation
from .bfunction import BFunction1D, abs_integral, build_bfunction, signed_integral, tail_mass
from .composed import (
    ComposedB,
    ScaledAI,
    composed_support_box,
    eval_composed,
    make_approximate_identity,
    truncation_box,
)
from .quadrature import Partition1D, quadrature_error_bound, uniform_partition

__all__ = [
    "NetworkError",
    "SchemaError",
    "Layer",
    "LayeredNetwork",
    "ErrorBudget",
    "build_quadrature_network_1d",
    "build_mc_network",
    "eval_network",
    "quadrature_formula",
    "mc_formula",
    "draw_samples",
    "error_budget",
    "tail_mass_nd",
    "default_coupling",
    "compactify_target",
    "export_network",
    "import_network",
    "sup_grid_error",
]

FORMAT_VERSION = 1
_EVAL_CHUNK = 1 << 21  # points x units per forward-pass block


class NetworkError(ValueError):
    pass


class SchemaError(NetworkError):
    pass


@dataclass(eq=False)
class Layer:
    weights: np.ndarray  # (U, n) input weights
    biases: np.ndarray  # (U,)
    prev_blocks: Optional[np.ndarray] = None  # (N, k+1, k+1) or None


@dataclass(eq=False)
class LayeredNetwork:
    activation: ActivationSpec
    theta: float
    dims: int
    layers: list
    output_coefficients: np.ndarray
    metadata: dict = field(default_factory=dict)

    @property
    def neuron_count(self) -> int:
        return int(sum(len(l.biases) for l in self.layers))

    def __call__(self, X):
        return eval_network(self, X)


def _check_theta(theta):
    if not (isinstance(theta, (int, float)) and theta > 0 and math.isfinite(theta)):
        raise NetworkError("theta must be a positive finite number")


# -- 1-D quadrature network -----------------------------------------------


def build_quadrature_network_1d(f: Callable, B: BFunction1D, theta: float, m,
                                normalizer: Optional[float] = None, tol: float = 1e-10) -> LayeredNetwork:
    """One hidden layer with ``m (k+1)`` units.

    ``m`` is an integer (uniform midpoint partition) or a ``Partition1D``.
    Unit ``(j, l)`` has weight ``w_l / theta``, bias ``b_l - w_l xi_j / theta``
    and output coefficient ``(z_{j+1} - z_j) f(xi_j) alpha_l / (theta int B)``.
    """
    _check_theta(theta)
    P = m if isinstance(m, Partition1D) else uniform_partition(m)
    if normalizer is None:
        normalizer = signed_integral(B, tol) if B.facts.signed_integral is None else B.facts.signed_integral
    if normalizer == 0:
        raise NetworkError("B has zero integral and cannot be normalized")
    xi = P.points
    fx = np.asarray(f(xi[:, None]), dtype=float).reshape(-1)
    a, w, b = B.alphas, B.weights, B.biases
    K = len(a)
    W = np.repeat((w / theta)[None, :], P.m, axis=0)  # (m, K)
    bias = b[None, :] - W * xi[:, None]
    coef = (P.widths * fx)[:, None] * a[None, :] / (theta * normalizer)
    layer = Layer(W.reshape(-1, 1), bias.reshape(-1))
    return LayeredNetwork(
        activation=B.spec,
        theta=float(theta),
        dims=1,
        layers=[layer],
        output_coefficients=coef.reshape(-1),
        metadata={
            "builder": "quadrature_1d",
            "m": P.m,
            "seed": None,
            "recipe": {"h": B.h, "k": B.k, "variant": B.variant, "scale": B.scale},
            "normalizer": float(normalizer),
            "partition_norm": P.norm,
            "neuron_count": P.m * K,
        },
    )


def quadrature_formula(f: Callable, B: BFunction1D, theta: float, P: Partition1D, X,
                       normalizer: Optional[float] = None):
    """Direct evaluation of the Riemann sum of ``f * B_theta`` at points ``X``."""
    if normalizer is None:
        normalizer = B.facts.signed_integral
    x = np.asarray(X, dtype=float).reshape(-1)
    fx = np.asarray(f(P.points[:, None]), dtype=float).reshape(-1)
    out = np.zeros_like(x)
    for zj, wj, fj in zip(P.points, P.widths, fx):
        if fj != 0.0:
            out += wj * fj * B((x - zj) / theta)
    return out / (theta * normalizer)


# -- n-D Monte-Carlo network ----------------------------------------------


def draw_samples(N: int, n: int, seed: int) -> np.ndarray:
    """Uniform samples on ``[-1, 1]^n``: ``default_rng(seed).uniform(-1, 1, (N, n))``.

    The draw order (row-major, one call) is part of the stable contract.
    """
    return np.random.default_rng(seed).uniform(-1.0, 1.0, size=(int(N), int(n)))


def build_mc_network(f: Callable, cb: ComposedB, theta: float, N: int, seed: int,
                     ai: Optional[ScaledAI] = None, **ai_kw) -> LayeredNetwork:
    """Layered flattening of ``(2^n / N) sum_j f(xi_j) B_theta(x - xi_j)``.

    ``ai`` may carry a precomputed normalizer; otherwise one is estimated by
    :func:`make_approximate_identity` (keyword arguments are passed on).
    """
    _check_theta(theta)
    if int(N) != N or N < 1:
        raise NetworkError("N must be a positive integer")
    N = int(N)
    n = cb.n
    if ai is None:
        ai = make_approximate_identity(cb, theta, **ai_kw)
    xi = draw_samples(N, n, seed)
    fx = np.asarray(f(xi), dtype=float).reshape(-1)
    c = cb.recipe.coefs
    o = cb.recipe.offsets
    K = len(c)
    inv = 1.0 / theta
    layers = []
    for j in range(n):
        W = np.zeros((N * K, n))
        W[:, j] = inv
        shift = np.repeat(-xi[:, j] * inv, K)
        if j == 0:
            bias = shift + np.tile(o, N)  # h_0 = 1
            blocks = None
        else:
            bias = shift
            blocks = np.broadcast_to(np.outer(o, c), (N, K, K)).copy()
        layers.append(Layer(W, bias, blocks))
    scale = (2.0 ** n) / (N * theta ** n * ai.normalizer)
    out = (scale * fx)[:, None] * c[None, :]
    return LayeredNetwork(
        activation=cb.spec,
        theta=float(theta),
        dims=n,
        layers=layers,
        output_coefficients=out.reshape(-1),
        metadata={
            "builder": "mc_nested",
            "N": N,
            "seed": int(seed),
            "recipe": {"k": cb.recipe.k, "variant": cb.recipe.variant, "scale": cb.recipe.scale,
                       "coefs": c.tolist(), "offsets": o.tolist()},
            "normalizer": float(ai.normalizer),
            "normalizer_half_width": float(ai.normalizer_half_width),
            "l1_ratio": float(ai.l1_ratio),
            "neuron_count": N * n * K,
        },
    )


def mc_formula(f: Callable, cb: ComposedB, theta: float, N: int, seed: int, normalizer: float, X,
               skip_outside_support: bool = True):
    """Direct nested evaluation of ``(2^n / N) sum_j f(xi_j) B_theta(x - xi_j)``."""
    X = np.asarray(X, dtype=float)
    if X.ndim == 1:
        X = X[:, None] if cb.n == 1 else X[None, :]
    xi = draw_samples(N, cb.n, seed)
    fx = np.asarray(f(xi), dtype=float).reshape(-1)
    radius = composed_support_box(cb) if skip_outside_support else None
    s = kernels.kernel_sum(cb.spec, cb.recipe.coefs, cb.recipe.offsets, X, xi, fx, 1.0 / theta,
                           radius)
    return (2.0 ** cb.n) * s / (N * theta ** cb.n * normalizer)


# -- evaluation -----------------------------------------------------------


def eval_network(net: LayeredNetwork, X):
    """Forward pass at one point or an ``(M, dims)`` array."""
    X = np.asarray(X, dtype=float)
    single = X.ndim == 1 and (net.dims > 1 or X.shape == (1,))
    if X.ndim == 0:
        X, single = X.reshape(1, 1), True
    elif X.ndim == 1:
        X = X[None, :] if net.dims > 1 else X[:, None]
    if X.ndim != 2 or X.shape[1] != net.dims:
        raise NetworkError(f"expected input dimension {net.dims}, got shape {X.shape}")
    units = max(len(l.biases) for l in net.layers)
    rows = max(1, _EVAL_CHUNK // max(units, 1))
    out = np.empty(len(X))
    for s in range(0, len(X), rows):
        out[s:s + rows] = _forward(net, X[s:s + rows])
    return float(out[0]) if single else out


def _forward(net, X):
    spec = net.activation
    a = None
    for layer in net.layers:
        z = X @ layer.weights.T + layer.biases
        if layer.prev_blocks is not None:
            Nb, K, _ = layer.prev_blocks.shape
            prev = a.reshape(len(X), Nb, K)
            z = z + np.einsum("bil,mbl->mbi", layer.prev_blocks, prev).reshape(len(X), -1)
        a = _evaluate_array(spec, z)
    return a @ net.output_coefficients


def sup_grid_error(net_or_fn, f: Callable, grid) -> float:
    grid = np.asarray(grid, dtype=float)
    G = grid[:, None] if grid.ndim == 1 else grid
    approx = net_or_fn(G)
    return float(np.max(np.abs(np.asarray(approx) - np.asarray(f(G)).reshape(-1))))


# -- error budget ---------------------------------------------------------


@dataclass
class ErrorBudget:
    """Three-term surrogate of the approximation error.

    ``modulus_delta = omega(f, delta) * ||B_theta||_1``,
    ``modulus_partition = 2^n omega(f, |P|)`` and
    ``tail = 2 ||f||_inf T(B_theta, delta)``; ``total`` is their sum.
    The raw ingredients are kept for reporting.
    """

    modulus_delta: float
    modulus_partition: float
    tail: float
    total: float
    omega_delta: float = 0.0
    omega_partition: float = 0.0
    tail_mass: float = 0.0
    l1_ratio: float = 1.0
    sup_f: float = 0.0
    constants: dict = field(default_factory=dict)

    def to_dict(self):
        return dict(self.__dict__)


def _omega(omega_f, h):
    v = omega_f(h)
    return float(getattr(v, "value", v))


def tail_mass_nd(cb: ComposedB, radius: float, normalizer: float, budget: int = 200_000,
                 seed: int = 0) -> float:
    """``int_{|u|_2 > radius} |Bfrak(u)| du / |normalizer|``, Monte-Carlo for n >= 2."""
    box = truncation_box(cb)
    if float(np.linalg.norm(box)) <= radius:
        return 0.0
    rng = np.random.default_rng(seed)
    U = (rng.random((budget, cb.n)) * 2.0 - 1.0) * box
    v = np.abs(eval_composed(cb, U)) * (np.linalg.norm(U, axis=1) > radius)
    return float(np.prod(2.0 * box)) * float(np.mean(v)) / abs(normalizer)


def error_budget(omega_f, delta: float, partition_norm: float, B, theta: float,
                 sup_f: float = 1.0, n: int = 1, tol: float = 1e-10) -> ErrorBudget:
    """Budget with explicit constants 1, ``2^n`` and ``2 ||f||_inf``.

    ``B`` is a ``BFunction1D`` or a ``ScaledAI`` (its own theta is replaced
    by ``theta``).
    """
    if not (delta > 0 and theta > 0 and partition_norm > 0):
        raise NetworkError("delta, theta and partition_norm must be positive")
    if isinstance(B, BFunction1D):
        if B.variant != "central":
            B = build_bfunction(B.spec, B.h)
        norm = abs(signed_integral(B, tol))
        l1 = abs_integral(B, tol) / norm
        T = tail_mass(B, theta, delta, tol)
        n = 1
    elif isinstance(B, ScaledAI):
        n = B.n
        l1 = B.l1_ratio
        if n == 1:
            T = B.rescaled(theta).tail_mass(delta, tol)
        else:
            T = tail_mass_nd(B.composed, delta / theta, B.normalizer)
    else:
        raise NetworkError("B must be a BFunction1D or ScaledAI")
    od = _omega(omega_f, delta)
    op = _omega(omega_f, partition_norm)
    t1 = od * l1
    t2 = quadrature_error_bound(n, op)
    t3 = 2.0 * float(sup_f) * T
    return ErrorBudget(
        modulus_delta=t1,
        modulus_partition=t2,
        tail=t3,
        total=t1 + t2 + t3,
        omega_delta=od,
        omega_partition=op,
        tail_mass=T,
        l1_ratio=l1,
        sup_f=float(sup_f),
        constants={"modulus_delta": "||B_theta||_1", "modulus_partition": f"2^{n}",
                   "tail": "2 ||f||_inf"},
    )


def default_coupling(theta: float):
    """``(delta, partition_norm) = (sqrt(theta), sqrt(theta))``."""
    d = math.sqrt(theta)
    return d, d


# -- cutoff extension -----------------------------------------------------


def _smoothstep(u):
    u = np.clip(u, 0.0, 1.0)
    return u * u * (3.0 - 2.0 * u)


def compactify_target(g: Callable, b: float, n: int = 1) -> Callable:
    """Extend ``g`` from ``[-b, b]^n`` to a function supported in ``[-1, 1]^n``.

    ``f(x) = g(clip(x, -b, b)) * prod_i (1 - smoothstep((|x_i| - b) / (1 - b)))``,
    equal to ``g`` on ``[-b, b]^n`` and zero outside ``(-1, 1)^n``.
    """
    if not (0.0 < b * math.sqrt(2.0) < 1.0):
        raise NetworkError("need 0 < sqrt(2) b < 1")

    def f(X):
        X = np.asarray(X, dtype=float)
        if X.ndim == 1:
            X = X[:, None] if n == 1 else X[None, :]
        phi = np.prod(1.0 - _smoothstep((np.abs(X) - b) / (1.0 - b)), axis=1)
        return np.asarray(g(np.clip(X, -b, b)), dtype=float).reshape(-1) * phi

    return f


# -- serialization --------------------------------------------------------


def export_network(net: LayeredNetwork, indent=None) -> str:
    """JSON with shortest round-trip floats, so weights survive bit-exactly."""
    if net.activation.id == "custom":
        raise NetworkError("networks with custom activations cannot be serialized")
    act = net.activation.to_dict()
    layers = []
    for l in net.layers:
        d = {"weights": l.weights.tolist(), "biases": l.biases.tolist()}
        if l.prev_blocks is not None:
            d["prev_blocks"] = l.prev_blocks.tolist()
        layers.append(d)
    doc = {
        "version": FORMAT_VERSION,
        "activation": {"id": act["id"], "params": act["params"]},
        "theta": net.theta,
        "dims": net.dims,
        "layers": layers,
        "output_coefficients": net.output_coefficients.tolist(),
        "metadata": net.metadata,
    }
    return json.dumps(doc, indent=indent, sort_keys=False, allow_nan=False)


_REQUIRED = ("version", "activation", "theta", "dims", "layers", "output_coefficients", "metadata")


def import_network(text: str) -> LayeredNetwork:
    try:
        doc = json.loads(text)
    except json.JSONDecodeError as e:
        raise SchemaError(f"invalid JSON: {e}") from None
    if not isinstance(doc, dict):
        raise SchemaError("network document must be an object")
    missing = [k for k in _REQUIRED if k not in doc]
    if missing:
        raise SchemaError(f"missing field(s): {', '.join(missing)}")
    if doc["version"] != FORMAT_VERSION:
        raise SchemaError(f"unsupported version {doc['version']!r}")
    act = doc["activation"]
    if not isinstance(act, dict) or "id" not in act:
        raise SchemaError("activation must be an object with an id")
    try:
        spec = get_activation(act["id"], act.get("params") or {})
    except (ValueError, TypeError) as e:
        raise SchemaError(f"bad activation: {e}") from None
    dims = doc["dims"]
    layers = []
    try:
        for d in doc["layers"]:
            W = np.asarray(d["weights"], dtype=float).reshape(-1, dims)
            b = np.asarray(d["biases"], dtype=float)
            pb = d.get("prev_blocks")
            pb = None if pb is None else np.asarray(pb, dtype=float)
            if len(W) != len(b):
                raise SchemaError("weights and biases disagree on unit count")
            layers.append(Layer(W, b, pb))
        coef = np.asarray(doc["output_coefficients"], dtype=float)
    except (KeyError, TypeError, ValueError) as e:
        if isinstance(e, SchemaError):
            raise
        raise SchemaError(f"malformed layer: {e}") from None
    if not layers or len(coef) != len(layers[-1].biases):
        raise SchemaError("output coefficients must match the last layer")
    return LayeredNetwork(spec, float(doc["theta"]), int(dims), layers, coef, dict(doc["metadata"]))

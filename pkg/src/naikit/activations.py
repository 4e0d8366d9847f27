"""Activation catalog.

Every activation carries the two constants the B-function recipes need:
the finite-difference order ``fd_order_k`` and the recipe prefactor
``recipe_scale``.  Evaluation is vectorized over numpy arrays; scalar
inputs return Python floats.
"""

from __future__ import annotations

import json
import math
from dataclasses import dataclass, field
from types import MappingProxyType
from typing import Callable, Mapping, Optional

import numpy as np
from scipy import special

__all__ = [
    "ActivationError",
    "ActivationSpec",
    "ACTIVATION_IDS",
    "make_activation",
    "custom_activation",
    "generalized_sigmoid",
    "list_catalog",
    "get_activation",
    "eval_activation",
    "activation_derivative",
    "derivative_ae",
    "numeric_derivative",
    "elu_gamma",
    "catalog_json",
]

ACTIVATION_IDS = (
    "repu",
    "sigmoid",
    "tanh",
    "softplus",
    "arctan",
    "generalized_sigmoid",
    "elu",
    "gelu",
    "silu",
    "mish",
    "gaussian",
    "custom",
)

# Ordering of list_catalog(); generalized_sigmoid is a parametric family
# and custom is user supplied, so neither appears as a catalog row.
_CATALOG_ORDER = (
    "repu",
    "sigmoid",
    "tanh",
    "softplus",
    "arctan",
    "elu",
    "gelu",
    "silu",
    "mish",
    "gaussian",
)

_GS_BASES = ("logistic", "algebraic")

_SQRT2 = math.sqrt(2.0)
_INV_SQRT_2PI = 1.0 / math.sqrt(2.0 * math.pi)


class ActivationError(ValueError):
    """Invalid activation parameters, inputs, or unsupported derivative."""


def elu_gamma(alpha: float) -> float:
    """Normalizer of the ELU recipe, ``max(1 + 4|a|, 2 + |a|)``."""
    a = abs(float(alpha))
    return max(1.0 + 4.0 * a, 2.0 + a)


@dataclass(frozen=True, eq=False)
class ActivationSpec:
    """An activation function with its B-function constants.

    ``params`` holds the real parameters (``q`` for RePU, ``alpha`` for ELU,
    ``L``, ``ell``, ``decay_alpha`` for generalized sigmoids).  Custom
    activations supply ``func`` and a declared ``custom_k``.
    """

    id: str
    params: Mapping[str, float] = field(default_factory=dict)
    base: Optional[str] = None
    func: Optional[Callable] = None
    derivatives: Mapping[int, Callable] = field(default_factory=dict)
    custom_k: Optional[int] = None
    name: Optional[str] = None

    def __post_init__(self):
        if self.id not in ACTIVATION_IDS:
            raise ActivationError(f"unknown activation id {self.id!r}")
        object.__setattr__(self, "params", MappingProxyType(dict(self.params)))
        object.__setattr__(self, "derivatives", MappingProxyType(dict(self.derivatives)))
        _validate(self)

    # -- constants -------------------------------------------------------
    @property
    def fd_order_k(self) -> int:
        if self.id == "repu":
            return int(self.params["q"]) + 1
        if self.id in ("sigmoid", "tanh", "arctan", "generalized_sigmoid"):
            return 1
        if self.id in ("softplus", "elu", "gelu", "silu", "mish"):
            return 2
        if self.id == "gaussian":
            return 0
        return int(self.custom_k)

    @property
    def recipe_scale(self) -> float:
        i = self.id
        if i == "repu":
            return 1.0 / math.factorial(int(self.params["q"]))
        if i == "sigmoid":
            return 0.5
        if i == "tanh":
            return 0.25
        if i == "arctan":
            return 1.0 / (2.0 * math.pi)
        if i == "generalized_sigmoid":
            return 1.0 / (2.0 * (self.params["L"] - self.params["ell"]))
        if i == "elu":
            return 1.0 / elu_gamma(self.params["alpha"])
        if i == "custom":
            return float(self.params.get("scale", 1.0))
        return 1.0

    @property
    def step_multiplier(self) -> float:
        """Effective finite-difference step per unit ``h``.

        The two-point forms ``s(x + h) - s(x - h)`` are first-order central
        differences with step ``2h``.
        """
        if self.id in ("sigmoid", "tanh", "arctan", "generalized_sigmoid"):
            return 2.0
        if self.id == "custom":
            return float(self.params.get("step", 1.0))
        return 1.0

    @property
    def gamma(self) -> float:
        if self.id != "elu":
            raise ActivationError("gamma is defined only for ELU")
        return elu_gamma(self.params["alpha"])

    @property
    def label(self) -> str:
        if self.name:
            return self.name
        if not self.params:
            return self.id
        inner = ",".join(f"{k}={_fmt(v)}" for k, v in sorted(self.params.items()))
        extra = f",base={self.base}" if self.base else ""
        return f"{self.id}({inner}{extra})"

    @property
    def compact_support(self) -> bool:
        """True when the B-function has compact support (RePU only)."""
        return self.id == "repu"

    def to_dict(self) -> dict:
        d = {
            "id": self.id,
            "params": {k: _jsonable(v) for k, v in self.params.items()},
            "fd_order_k": self.fd_order_k,
            "recipe_scale": self.recipe_scale,
        }
        if self.base is not None:
            d["params"]["base"] = self.base
        if self.id == "custom":
            d["name"] = self.name
        return d

    def __call__(self, x):
        return eval_activation(self, x)

    def __eq__(self, other):
        if not isinstance(other, ActivationSpec):
            return NotImplemented
        if self.id == "custom" or other.id == "custom":
            return self is other
        return (self.id, dict(self.params), self.base) == (
            other.id,
            dict(other.params),
            other.base,
        )

    def __hash__(self):
        if self.id == "custom":
            return id(self)
        return hash((self.id, tuple(sorted(self.params.items())), self.base))

    def __repr__(self):
        return f"ActivationSpec({self.label})"


def _fmt(v):
    v = float(v)
    return str(int(v)) if v.is_integer() else repr(v)


def _jsonable(v):
    v = float(v)
    return int(v) if v.is_integer() else v


def _validate(spec: ActivationSpec) -> None:
    p = spec.params
    if spec.id == "repu":
        if "q" not in p:
            raise ActivationError("RePU requires parameter q")
        q = p["q"]
        if not float(q).is_integer() or q < 0:
            raise ActivationError(f"RePU q must be a nonnegative integer, got {q!r}")
    elif spec.id == "elu":
        if "alpha" not in p or not math.isfinite(p["alpha"]):
            raise ActivationError("ELU requires a finite parameter alpha")
    elif spec.id == "generalized_sigmoid":
        for key in ("L", "ell", "decay_alpha"):
            if key not in p:
                raise ActivationError(f"generalized sigmoid requires {key}")
        if not p["ell"] < p["L"]:
            raise ActivationError("generalized sigmoid requires ell < L")
        if not p["decay_alpha"] > 0:
            raise ActivationError("generalized sigmoid requires decay_alpha > 0")
        if spec.base not in _GS_BASES:
            raise ActivationError(f"generalized sigmoid base must be one of {_GS_BASES}")
    elif spec.id == "custom":
        if spec.func is None:
            raise ActivationError("custom activation requires an evaluator")
        if spec.custom_k is None or int(spec.custom_k) < 0:
            raise ActivationError("custom activation requires a nonnegative fd_order_k")


# -- construction ---------------------------------------------------------

_DEFAULT_PARAMS = {
    "repu": {"q": 1},
    "elu": {"alpha": 1.0},
}


def make_activation(id: str, **params) -> ActivationSpec:
    """Build a catalog activation, filling default parameters."""
    if id == "generalized_sigmoid":
        return generalized_sigmoid(**params)
    if id == "custom":
        raise ActivationError("use custom_activation() for black-box activations")
    merged = dict(_DEFAULT_PARAMS.get(id, {}))
    merged.update(params)
    extra = set(merged) - set(_DEFAULT_PARAMS.get(id, {}))
    if extra:
        raise ActivationError(f"unexpected parameters for {id}: {sorted(extra)}")
    return ActivationSpec(id=id, params=merged)


def generalized_sigmoid(L=1.0, ell=0.0, decay_alpha=1.0, base="algebraic") -> ActivationSpec:
    """Squashing function ``ell + (L - ell) * base(x)``.

    ``base="logistic"`` uses the standard logistic (exponential tails,
    admissible for any ``decay_alpha``).  ``base="algebraic"`` uses
    ``1/2 + x / (2 (1 + |x|^p)^(1/p))`` with ``p = 1 + decay_alpha`` whose
    distance to the limits decays like ``|x|^-(1 + decay_alpha)``.
    """
    return ActivationSpec(
        id="generalized_sigmoid",
        params={"L": float(L), "ell": float(ell), "decay_alpha": float(decay_alpha)},
        base=base,
    )


def custom_activation(func, fd_order_k, name="custom", derivatives=None, scale=1.0, step=1.0):
    """Wrap a black-box vectorized evaluator as an activation.

    ``derivatives`` maps order -> vectorized derivative evaluator; missing
    orders fall back to numeric differentiation.
    """
    return ActivationSpec(
        id="custom",
        params={"scale": float(scale), "step": float(step)},
        func=func,
        derivatives=derivatives or {},
        custom_k=int(fd_order_k),
        name=name,
    )


def list_catalog() -> list[ActivationSpec]:
    """The built-in activations with default parameters, in fixed order."""
    return [make_activation(i) for i in _CATALOG_ORDER]


def get_activation(id: str, params: Optional[Mapping] = None) -> ActivationSpec:
    params = dict(params or {})
    if id == "generalized_sigmoid":
        return generalized_sigmoid(**params)
    return make_activation(id, **params)


def catalog_json(specs=None, indent=None) -> str:
    specs = list_catalog() if specs is None else specs
    return json.dumps([s.to_dict() for s in specs], indent=indent)


# -- evaluation -----------------------------------------------------------


def _softplus(x):
    return np.logaddexp(0.0, x)


def _algebraic_base(x, p):
    ax = np.abs(x)
    # x / (1 + |x|^p)^(1/p), written to avoid overflow for large |x|
    with np.errstate(over="ignore", divide="ignore", invalid="ignore"):
        big = ax > 1.0
        r_small = x / np.power(1.0 + np.power(ax, p), 1.0 / p)
        r_big = np.sign(x) / np.power(1.0 + np.power(np.where(big, ax, 1.0), -p), 1.0 / p)
    return 0.5 + 0.5 * np.where(big, r_big, r_small)


def _phi(x):
    return 0.5 * special.erfc(-x / _SQRT2)


def _evaluate_array(spec: ActivationSpec, x):
    i = spec.id
    p = spec.params
    if i == "repu":
        q = int(p["q"])
        if q == 0:
            return np.where(x >= 0.0, 1.0, 0.0)
        return np.where(x >= 0.0, np.power(np.maximum(x, 0.0), q), 0.0)
    if i == "sigmoid":
        return special.expit(x)
    if i == "tanh":
        return np.tanh(x)
    if i == "softplus":
        return _softplus(x)
    if i == "arctan":
        return np.arctan(x)
    if i == "generalized_sigmoid":
        if spec.base == "logistic":
            b = special.expit(x)
        else:
            b = _algebraic_base(x, 1.0 + p["decay_alpha"])
        return p["ell"] + (p["L"] - p["ell"]) * b
    if i == "elu":
        return np.where(x > 0.0, x, p["alpha"] * np.expm1(np.minimum(x, 0.0)))
    if i == "gelu":
        return x * _phi(x)
    if i == "silu":
        return x * special.expit(x)
    if i == "mish":
        return x * np.tanh(_softplus(x))
    if i == "gaussian":
        return np.exp(-x * x)
    return np.asarray(spec.func(x), dtype=float)


def _as_input(x):
    arr = np.asarray(x, dtype=float)
    if not np.all(np.isfinite(arr)):
        raise ActivationError("activation input must be finite")
    return arr


def _out(arr, scalar):
    return float(arr) if scalar else arr


def eval_activation(spec: ActivationSpec, x):
    """Evaluate the activation at ``x`` (scalar or array)."""
    scalar = np.ndim(x) == 0
    arr = _as_input(x)
    return _out(np.asarray(_evaluate_array(spec, arr), dtype=float), scalar)


# -- derivatives ----------------------------------------------------------


def _analytic_derivative(spec: ActivationSpec, order: int, x):
    """Analytic derivative, or None when no closed form is wired in.

    Kinks (RePU, ELU at 0) use the right-hand value; callers that need to
    reject kinks do so before calling.
    """
    i = spec.id
    p = spec.params
    if i == "sigmoid":
        s = special.expit(x)
        d1 = s * (1.0 - s)
        return d1 if order == 1 else d1 * (1.0 - 2.0 * s)
    if i == "tanh":
        t = np.tanh(x)
        d1 = 1.0 - t * t
        return d1 if order == 1 else -2.0 * t * d1
    if i == "softplus":
        s = special.expit(x)
        return s if order == 1 else s * (1.0 - s)
    if i == "arctan":
        u = 1.0 / (1.0 + x * x)
        return u if order == 1 else -2.0 * x * u * u
    if i == "generalized_sigmoid":
        span = p["L"] - p["ell"]
        if spec.base == "logistic":
            s = special.expit(x)
            d1 = s * (1.0 - s)
            return span * (d1 if order == 1 else d1 * (1.0 - 2.0 * s))
        pp = 1.0 + p["decay_alpha"]
        ax = np.abs(x)
        w = 1.0 + np.power(ax, pp)
        d1 = 0.5 * np.power(w, -1.0 / pp - 1.0)
        if order == 1:
            return span * d1
        d2 = -0.5 * (pp + 1.0) * np.power(w, -1.0 / pp - 2.0) * np.sign(x) * np.power(ax, pp - 1.0)
        return span * d2
    if i == "elu":
        a = p["alpha"]
        e = a * np.exp(np.minimum(x, 0.0))
        if order == 1:
            return np.where(x >= 0.0, 1.0, e)
        return np.where(x >= 0.0, 0.0, e)
    if i == "gelu":
        ph = _INV_SQRT_2PI * np.exp(-0.5 * x * x)
        return _phi(x) + x * ph if order == 1 else ph * (2.0 - x * x)
    if i == "silu":
        s = special.expit(x)
        ds = s * (1.0 - s)
        return s + x * ds if order == 1 else ds * (2.0 + x * (1.0 - 2.0 * s))
    if i == "mish":
        if order == 1:
            sp = _softplus(x)
            t = np.tanh(sp)
            return t + x * (1.0 - t * t) * special.expit(x)
        return None
    if i == "gaussian":
        e = np.exp(-x * x)
        return -2.0 * x * e if order == 1 else (4.0 * x * x - 2.0) * e
    if i == "repu":
        q = int(p["q"])
        if order > q:
            return np.zeros_like(x)
        c = math.factorial(q) / math.factorial(q - order)
        return np.where(x >= 0.0, c * np.power(np.maximum(x, 0.0), q - order), 0.0)
    if i == "custom":
        d = spec.derivatives.get(order)
        return None if d is None else np.asarray(d(x), dtype=float)
    return None


def numeric_derivative(f, order: int, x: float):
    """Fourth-order central difference of ``f`` at scalar ``x``.

    Returns ``(value, discrepancy)`` where ``discrepancy`` is the gap
    between the estimates at step ``h`` and ``2h``.  The step is
    ``eps**(1/3) * max(1, |x|)`` for first derivatives and
    ``eps**(1/6) * max(1, |x|)`` for second derivatives, which balances the
    stencil's truncation against roundoff for each order.
    """
    eps = np.finfo(float).eps
    scale = max(1.0, abs(x))
    if order == 1:
        h = eps ** (1.0 / 3.0) * scale
    elif order == 2:
        h = eps ** (1.0 / 6.0) * scale
    else:
        raise ActivationError("numeric derivative supports orders 1 and 2")

    def stencil(step):
        pts = x + step * np.array([-2.0, -1.0, 0.0, 1.0, 2.0])
        v = np.asarray(f(pts), dtype=float)
        if order == 1:
            return (v[0] - 8.0 * v[1] + 8.0 * v[3] - v[4]) / (12.0 * step)
        return (-v[0] + 16.0 * v[1] - 30.0 * v[2] + 16.0 * v[3] - v[4]) / (12.0 * step * step)

    d1 = stencil(h)
    d2 = stencil(2.0 * h)
    return float(d1), float(abs(d1 - d2))


def derivative_ae(spec: ActivationSpec, order: int, x):
    """Vectorized derivative valid almost everywhere (order 0 is the function).

    Used by integrals and screening; kinks take their right-hand value and
    RePU derivatives beyond ``q`` are the a.e. zero function.
    """
    x = np.asarray(x, dtype=float)
    if order == 0:
        return _evaluate_array(spec, x)
    if order > 2 and spec.id not in ("repu", "custom"):
        raise ActivationError(f"derivative of order {order} not available for {spec.id}")
    d = _analytic_derivative(spec, order, x)
    if d is not None:
        return np.asarray(d, dtype=float)
    f = lambda t: _evaluate_array(spec, t)
    flat = np.array([numeric_derivative(f, order, float(t))[0] for t in x.ravel()])
    return flat.reshape(x.shape)


def _is_kink(spec: ActivationSpec, order: int, x: float) -> bool:
    if x != 0.0:
        return False
    if spec.id == "repu":
        q = int(spec.params["q"])
        # derivative of order j of x_+^q is discontinuous at 0 when j >= q
        return order >= q
    if spec.id == "elu":
        a = spec.params["alpha"]
        return order == 2 or a != 1.0
    return False


def activation_derivative(spec: ActivationSpec, order: int, x):
    """Derivative of order 1 or 2.

    Analytic where tractable; Mish order 2 (and custom activations without
    a supplied derivative) use the fourth-order central difference of
    :func:`numeric_derivative`.
    """
    if order not in (1, 2):
        raise ActivationError("order must be 1 or 2")
    if spec.id == "repu" and order > int(spec.params["q"]):
        raise ActivationError(
            f"RePU with q={int(spec.params['q'])} is not {order} times differentiable"
        )
    scalar = np.ndim(x) == 0
    arr = _as_input(x)
    if np.any([_is_kink(spec, order, float(t)) for t in np.atleast_1d(arr)]):
        raise ActivationError(f"{spec.label} is not {order} times differentiable at 0")
    d = _analytic_derivative(spec, order, arr)
    if d is None:
        f = lambda t: _evaluate_array(spec, t)
        flat = np.array([numeric_derivative(f, order, float(t))[0] for t in np.atleast_1d(arr)])
        d = flat.reshape(arr.shape)
    return _out(np.asarray(d, dtype=float), scalar)

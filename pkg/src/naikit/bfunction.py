"""One-dimensional B-functions.

A B-function is a scaled finite difference of an activation,
``B(x, h) = scale * sum_i (-1)^i C(k, i) sigma(x + c_i h)``, stored as an
explicit list of ``(alpha_i, w_i, b_i)`` triples so that
``B(x) = sum_i alpha_i sigma(w_i x + b_i)``.  The term list is the ground
truth; no closed form is ever used for evaluation.
"""

from __future__ import annotations

import json
import math
import warnings
from dataclasses import dataclass, field
from functools import lru_cache
from typing import Callable, Optional

import numpy as np
from scipy import integrate

from .activations import ActivationSpec, _evaluate_array, _analytic_derivative

__all__ = [
    "BFunctionError",
    "IntegrationError",
    "ClosedFormFacts",
    "BRecipe",
    "BFunction1D",
    "VARIANTS",
    "build_bfunction",
    "eval_bfunction",
    "central_difference",
    "irwin_hall_density",
    "signed_integral",
    "abs_integral",
    "first_moment",
    "tail_mass",
    "mish_second_derivative_l1",
]

VARIANTS = ("central", "forward", "backward")

_SQRT_PI = math.sqrt(math.pi)
_INV_SQRT_2PI = 1.0 / math.sqrt(2.0 * math.pi)
_R_START = 10.0
_R_MAX = 1e9


class BFunctionError(ValueError):
    """Invalid B-function construction (zero step, bad variant, ...)."""


class IntegrationError(RuntimeError):
    """Quadrature did not reach the requested tolerance.

    ``estimate`` carries the best value found and ``error`` its estimated
    absolute error.
    """

    def __init__(self, msg, estimate=float("nan"), error=float("inf")):
        super().__init__(msg)
        self.estimate = estimate
        self.error = error


@dataclass(frozen=True)
class ClosedFormFacts:
    """Known integrals and bounds of one B-function.

    ``provenance`` marks each populated field as ``"stated"`` (asserted by
    the literature for that recipe) or ``"derived"`` (worked out here, e.g. by
    telescoping).  Bounds that are stated but numerically false are kept
    verbatim so verification can report them.
    """

    signed_integral: Optional[float] = None
    abs_integral_bound: Optional[float] = None
    sup_bound: Optional[float] = None
    support: Optional[tuple] = None
    provenance: dict = field(default_factory=dict)

    def to_dict(self):
        return {
            "signed_integral": self.signed_integral,
            "abs_integral_bound": self.abs_integral_bound,
            "sup_bound": self.sup_bound,
            "support": None if self.support is None else list(self.support),
            "provenance": dict(self.provenance),
        }


def _fd_offsets(k: int, variant: str) -> np.ndarray:
    i = np.arange(k + 1, dtype=float)
    if variant == "central":
        return k / 2.0 - i
    if variant == "forward":
        return k - i
    if variant == "backward":
        return -i
    raise BFunctionError(f"variant must be one of {VARIANTS}, got {variant!r}")


def _fd_signs(k: int) -> np.ndarray:
    return np.array([(-1) ** i * math.comb(k, i) for i in range(k + 1)], dtype=float)


@dataclass(frozen=True, eq=False)
class BRecipe:
    """A B-function with the step left free: ``B(x, h)``.

    ``coefs[i] * sigma(x + offsets[i] * h)`` summed over terms.  This is
    what the composition and the kernels consume.
    """

    spec: ActivationSpec
    variant: str = "central"

    def __post_init__(self):
        if self.variant not in VARIANTS:
            raise BFunctionError(f"variant must be one of {VARIANTS}, got {self.variant!r}")

    @property
    def k(self) -> int:
        return self.spec.fd_order_k

    @property
    def scale(self) -> float:
        return self.spec.recipe_scale

    @property
    def coefs(self) -> np.ndarray:
        return self.scale * _fd_signs(self.k)

    @property
    def offsets(self) -> np.ndarray:
        return self.spec.step_multiplier * _fd_offsets(self.k, self.variant)

    def __call__(self, x, h):
        """Vectorized ``B(x, h)``; ``x`` and ``h`` broadcast."""
        x = np.asarray(x, dtype=float)
        h = np.asarray(h, dtype=float)
        out = np.zeros(np.broadcast(x, h).shape)
        for c, o in zip(self.coefs, self.offsets):
            out = out + c * _evaluate_array(self.spec, x + o * h)
        if self.k > 0:
            out = np.where(h == 0.0, 0.0, out)
        return out

    def at(self, h: float) -> "BFunction1D":
        return build_bfunction(self.spec, h, self.variant)

    def __eq__(self, other):
        return isinstance(other, BRecipe) and self.spec == other.spec and self.variant == other.variant

    def __hash__(self):
        return hash((self.spec, self.variant))


@dataclass(frozen=True, eq=False)
class BFunction1D:
    """A B-function at fixed step ``h``, as explicit network triples."""

    spec: ActivationSpec
    k: int
    h: float
    variant: str
    terms: tuple  # ((alpha, w, b), ...)
    scale: float
    facts: ClosedFormFacts

    @property
    def recipe(self) -> BRecipe:
        return BRecipe(self.spec, self.variant)

    @property
    def alphas(self) -> np.ndarray:
        return np.array([t[0] for t in self.terms])

    @property
    def weights(self) -> np.ndarray:
        return np.array([t[1] for t in self.terms])

    @property
    def biases(self) -> np.ndarray:
        return np.array([t[2] for t in self.terms])

    @property
    def knots(self) -> np.ndarray:
        """Points ``-b_i / w_i`` where each term's argument vanishes."""
        return -self.biases / self.weights

    def __call__(self, x):
        x = np.asarray(x, dtype=float)
        out = np.zeros(x.shape)
        for a, w, b in self.terms:
            out = out + a * _evaluate_array(self.spec, w * x + b)
        return out

    def unscaled(self, x):
        """The bare finite difference, without ``recipe_scale``."""
        return self(x) / self.scale

    def to_dict(self) -> dict:
        return {
            "activation": self.spec.to_dict(),
            "k": self.k,
            "h": self.h,
            "variant": self.variant,
            "terms": [{"alpha": a, "w": w, "b": b} for a, w, b in self.terms],
            "closed_form_facts": self.facts.to_dict(),
        }

    def to_json(self, indent=None) -> str:
        return json.dumps(self.to_dict(), indent=indent)


# -- construction ---------------------------------------------------------


def build_bfunction(spec: ActivationSpec, h: float, variant: str = "central") -> BFunction1D:
    """Build the B-function recipe of ``spec`` at step ``h``.

    Two-point forms ``s(x + h) - s(x - h)`` are first-order central
    differences with effective step ``2h``.
    """
    h = float(h)
    if not math.isfinite(h) or h == 0.0:
        raise BFunctionError("B-function step h must be finite and nonzero")
    if spec.id == "repu" and not float(spec.params["q"]).is_integer():
        raise BFunctionError("RePU B-function requires integer q")
    recipe = BRecipe(spec, variant)
    if spec.id == "gaussian" and variant != "central":
        raise BFunctionError("the Gaussian recipe has no finite-difference variants")
    terms = tuple(
        (float(c), 1.0, float(o * h)) for c, o in zip(recipe.coefs, recipe.offsets)
    )
    facts = _closed_form_facts(spec, h, variant, terms)
    return BFunction1D(
        spec=spec, k=recipe.k, h=h, variant=variant, terms=terms, scale=recipe.scale, facts=facts
    )


def eval_bfunction(B: BFunction1D, x):
    """``sum_i alpha_i sigma(w_i x + b_i)``; scalar in, float out."""
    arr = np.asarray(x, dtype=float)
    if not np.all(np.isfinite(arr)):
        raise BFunctionError("B-function input must be finite")
    out = B(arr)
    return float(out) if out.ndim == 0 else out


def central_difference(sigma: Callable, k: int, h: float, x):
    """``sum_i (-1)^i C(k, i) sigma(x + (k/2 - i) h)``."""
    if k < 1:
        raise BFunctionError("central difference order must be >= 1")
    arr = np.asarray(x, dtype=float)
    if not (np.all(np.isfinite(arr)) and math.isfinite(h)):
        raise BFunctionError("central difference inputs must be finite")
    total = np.zeros(arr.shape)
    for i in range(k + 1):
        total = total + (-1) ** i * math.comb(k, i) * np.asarray(sigma(arr + (k / 2.0 - i) * h), dtype=float)
    return float(total) if total.ndim == 0 else total


def irwin_hall_density(r: int, x):
    """Density of a sum of ``r`` independent uniforms on ``[-1/2, 1/2]``.

    Uses the alternating sum
    ``f_r(x) = 1/(r-1)! sum_i (-1)^i C(r, i) (x + r/2 - i)_+^(r-1)``.
    """
    if int(r) != r or r < 1:
        raise BFunctionError("Irwin-Hall order r must be a positive integer")
    r = int(r)
    arr = np.asarray(x, dtype=float)
    total = np.zeros(arr.shape)
    for i in range(r + 1):
        t = arr + r / 2.0 - i
        if r == 1:
            p = np.where(t >= 0.0, 1.0, 0.0)
        else:
            p = np.where(t >= 0.0, np.power(np.maximum(t, 0.0), r - 1), 0.0)
        total = total + (-1) ** i * math.comb(r, i) * p
    total /= math.factorial(r - 1)
    inside = np.abs(arr) <= r / 2.0
    out = np.where(inside, np.maximum(total, 0.0), 0.0)
    return float(out) if out.ndim == 0 else out


# -- closed-form facts ----------------------------------------------------


@lru_cache(maxsize=1)
def _mish_derivative_constants():
    """``(sup |s''|, ||s''||_1)`` for Mish.

    The L1 norm of ``s''`` is the total variation of the analytic ``s'``,
    summed over a dense grid; the tails beyond |x| = 60 are below 1e-20.
    """
    from .activations import make_activation

    spec = make_activation("mish")
    x = np.linspace(-60.0, 60.0, 1_200_001)
    d1 = _analytic_derivative(spec, 1, x)
    tv = float(np.sum(np.abs(np.diff(d1))))
    # s'' from the analytic s' by a centered difference
    d2 = np.gradient(d1, x)
    return float(np.max(np.abs(d2))), tv


def mish_second_derivative_l1() -> float:
    return _mish_derivative_constants()[1]


def _irwin_hall_peak(r: int) -> float:
    return float(irwin_hall_density(r, 0.0))


def _closed_form_facts(spec, h, variant, terms) -> ClosedFormFacts:
    i = spec.id
    ah = abs(h)
    knots = [-b for _, _, b in terms]
    if i == "repu":
        q = int(spec.params["q"])
        r = q + 1
        return ClosedFormFacts(
            signed_integral=h ** r,
            abs_integral_bound=ah ** r,
            sup_bound=ah ** q * _irwin_hall_peak(r),
            support=(min(knots), max(knots)),
            provenance={
                "signed_integral": "derived",
                "abs_integral_bound": "derived",
                "sup_bound": "derived",
                "support": "stated",
            },
        )
    if i in ("sigmoid", "tanh", "arctan", "generalized_sigmoid"):
        # non-decreasing squashers give a sign-definite B, so |B| has mass |h|
        return ClosedFormFacts(
            signed_integral=h,
            abs_integral_bound=ah,
            provenance={"signed_integral": "stated", "abs_integral_bound": "derived"},
        )
    if i == "softplus":
        return ClosedFormFacts(
            signed_integral=h * h,
            abs_integral_bound=h * h,
            provenance={"signed_integral": "derived", "abs_integral_bound": "derived"},
        )
    if i == "elu":
        g = spec.gamma
        a = abs(spec.params["alpha"])
        prov = {"signed_integral": "stated", "abs_integral_bound": "stated"}
        if ah <= 1.0:
            prov["sup_bound"] = "stated"
        return ClosedFormFacts(
            signed_integral=h * h / g,
            abs_integral_bound=(h * h + 2 * a * ah + 2 * a * math.expm1(-ah) ** 2) / g,
            sup_bound=1.0 if ah <= 1.0 else None,
            provenance=prov,
        )
    if i == "gelu":
        return ClosedFormFacts(
            signed_integral=h * h,
            abs_integral_bound=3.7 * h * h,
            sup_bound=_INV_SQRT_2PI * h * h,
            provenance={k: "stated" for k in ("signed_integral", "abs_integral_bound", "sup_bound")},
        )
    if i == "silu":
        return ClosedFormFacts(
            signed_integral=h * h,
            abs_integral_bound=5.2 * h * h,
            sup_bound=0.5 * h * h,
            provenance={k: "stated" for k in ("signed_integral", "abs_integral_bound", "sup_bound")},
        )
    if i == "mish":
        m2, l1 = _mish_derivative_constants()
        return ClosedFormFacts(
            signed_integral=h * h,
            abs_integral_bound=l1 * h * h,
            sup_bound=m2 * h * h,
            provenance={
                "signed_integral": "derived",
                "abs_integral_bound": "stated",
                "sup_bound": "stated",
            },
        )
    if i == "gaussian":
        return ClosedFormFacts(
            signed_integral=_SQRT_PI,
            abs_integral_bound=_SQRT_PI,
            sup_bound=1.0,
            provenance={k: "derived" for k in ("signed_integral", "abs_integral_bound", "sup_bound")},
        )
    return ClosedFormFacts()


# -- integrals ------------------------------------------------------------


def _tail_radius(B: BFunction1D, tol: float) -> Optional[float]:
    """Analytic truncation radius for recipes with algebraic tails.

    Generalized sigmoids with the algebraic base (``p = 1 + decay_alpha``)
    satisfy ``|B(x)| <= |h| / 2 (|x| - |h|)^(-p-1)`` beyond ``|h|``, so both
    tails past ``R`` carry at most ``|h| (R - |h|)^-p / p``.  Arctan obeys
    ``|B(x)| <= |h| / pi (|x| - |h|)^-2``, giving ``2|h| / (pi (R - |h|))``.
    ``R`` makes the neglected mass ``tol / 2``.
    """
    s = B.spec
    ah = abs(B.h)
    if s.id == "arctan":
        return ah + 4.0 * ah / (math.pi * tol)
    if s.id != "generalized_sigmoid" or s.base != "algebraic":
        return None
    p = 1.0 + s.params["decay_alpha"]
    return ah + (2.0 * ah / (p * tol)) ** (1.0 / p)


def _quad(g, a, b, tol, points=None):
    pts = None
    if points is not None:
        pts = sorted({float(t) for t in points if a < t < b})
        pts = pts or None
    with warnings.catch_warnings():
        warnings.simplefilter("ignore", integrate.IntegrationWarning)
        val, err = integrate.quad(g, a, b, points=pts, epsabs=tol, epsrel=0.0, limit=500)
    return val, err


def _half_line(g, start: float, knots, tol: float, fixed_end=None, label="integrand"):
    """``int_start^inf g``, for a folded (symmetric) integrand ``g``.

    With ``fixed_end`` the integral stops there (exact support or an
    analytic truncation radius); otherwise the radius doubles from 10
    until the last annulus contributes less than ``tol / 4``.
    """
    kmax = max([abs(t) for t in knots] + [0.0])
    if fixed_end is not None:
        if fixed_end <= start:
            return 0.0, 0.0
        edges = [start]
        r = max(start, 1.0)
        while r * 2.0 < fixed_end:
            r *= 2.0
            if r > start:
                edges.append(r)
        edges.append(fixed_end)
        total = err = 0.0
        for a, b in zip(edges[:-1], edges[1:]):
            v, e = _quad(g, a, b, tol / (4.0 * len(edges)), knots)
            total += v
            err += e
        return total, err
    R = max(_R_START, 2.0 * kmax + _R_START, 2.0 * start)
    total, err = _quad(g, start, R, tol / 8.0, knots)
    while True:
        piece, e = _quad(g, R, 2.0 * R, tol / 8.0)
        total += piece
        err += e
        R *= 2.0
        if abs(piece) < tol / 4.0:
            return total, err
        if R > _R_MAX:
            raise IntegrationError(
                f"tail of {label} does not decay within radius {_R_MAX:g}", total, err
            )


def _folded(B: BFunction1D, kind: str):
    terms = B.terms
    spec = B.spec

    def value(x):
        s = 0.0
        for a, w, b in terms:
            s += a * float(_evaluate_array(spec, np.float64(w * x + b)))
        return s

    if kind == "signed":
        g = lambda u: value(u) + value(-u)
    elif kind == "abs":
        g = lambda u: abs(value(u)) + abs(value(-u))
    elif kind == "moment":
        g = lambda u: u * (abs(value(u)) + abs(value(-u)))
    else:
        raise ValueError(kind)
    return g


def _integrate(B: BFunction1D, kind: str, tol: float, start: float = 0.0) -> float:
    if not tol > 0:
        raise BFunctionError("tol must be positive")
    if B.variant != "central":
        # forward/backward are translates of the central B; whole-line
        # integrals agree, anything centred at 0 does not
        if kind != "moment" and start == 0.0:
            B = build_bfunction(B.spec, B.h, "central")
        else:
            raise BFunctionError("moments and tails are defined for the central variant only")
    g = _folded(B, kind)
    knots = np.abs(B.knots)
    if B.spec.compact_support:
        end = max(abs(t) for t in B.facts.support)
    else:
        end = _tail_radius(B, tol)
        if end is not None:
            end = max(end, 2.0 * start)
    val, err = _half_line(g, start, knots, tol, fixed_end=end, label=B.spec.label)
    if err > tol / 2.0:
        raise IntegrationError(
            f"quadrature for {B.spec.label} reached error {err:.3g} > tol/2", val, err
        )
    return val


def signed_integral(B: BFunction1D, tol: float = 1e-8) -> float:
    """``int B(x) dx`` by adaptive Gauss-Kronrod quadrature on a truncated window.

    Forward and backward variants are translates of the central one, so
    they share its integral.
    """
    return _integrate(B, "signed", tol)


def abs_integral(B: BFunction1D, tol: float = 1e-8) -> float:
    """``int |B(x)| dx``."""
    return _integrate(B, "abs", tol)


def first_moment(B: BFunction1D, tol: float = 1e-8) -> float:
    """``int |x| |B(x)| dx`` (central variant)."""
    return _integrate(B, "moment", tol)


def tail_mass(B: BFunction1D, theta: float, delta: float, tol: float = 1e-8) -> float:
    """Normalized tail mass of ``B_theta(y) = B(y / theta) / (theta |int B|)``.

    ``int_{|y| > delta} |B_theta(y)| dy = int_{|u| > delta/theta} |B(u)| du / |int B|``.
    """
    if not theta > 0 or not delta > 0:
        raise BFunctionError("theta and delta must be positive")
    norm = abs(signed_integral(B, tol))
    if norm <= tol:
        raise BFunctionError(f"{B.spec.label} has vanishing integral; cannot normalize")
    return _integrate(B, "abs", tol * norm, start=delta / theta) / norm


def markov_tail_bound(B: BFunction1D, theta: float, delta: float, tol: float = 1e-8) -> float:
    """Markov bound ``(theta / delta) int |u| |B(u)| du / |int B|`` on the tail mass."""
    norm = abs(signed_integral(B, tol))
    return (theta / delta) * first_moment(B, tol) / norm

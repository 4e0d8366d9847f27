"""Numerical certification of the B-function and approximation claims.

Each check produces a :class:`Check` row; a :class:`VerificationReport`
collects rows and passes iff every row passes.  Reports round-trip through
JSON losslessly.
"""

from __future__ import annotations

import json
import math
import time
import warnings
from dataclasses import asdict, dataclass, field, replace
from typing import Callable, Optional, Sequence

import numpy as np
from scipy import integrate, optimize, stats
from scipy.interpolate import PPoly

from .activations import (
    _analytic_derivative,
    ActivationError,
    ActivationSpec,
    derivative_ae,
    list_catalog,
    make_activation,
)
from .bfunction import (
    BFunction1D,
    IntegrationError,
    _integrate,
    abs_integral,
    build_bfunction,
    central_difference,
    signed_integral,
    tail_mass,
)
from .composed import ComposedB, ScaledAI, make_approximate_identity
from .network import build_mc_network, eval_network, mc_formula, tail_mass_nd

__all__ = [
    "Check",
    "VerificationReport",
    "RateStudyResult",
    "ScreeningError",
    "verify_nai",
    "check_alternating_sum",
    "check_taylor_remainder",
    "irwin_hall_oracle",
    "check_irwin_hall",
    "check_ai_conditions",
    "check_stated_bounds",
    "check_general_framework",
    "general_framework_constants",
    "hoeffding_epsilon",
    "rate_study",
    "sup_abs",
    "verify_all",
]

DEFAULT_H_GRID = (0.25, 0.5, 1.0, 2.0)


class ScreeningError(ValueError):
    """Conditions C1/C2 (integrable, bounded k-th derivative) look implausible."""


@dataclass
class Check:
    name: str
    claim_ref: str
    measured: Optional[float]
    target: Optional[float]
    kind: str  # equal | upper | lower | finite | exact
    tolerance: float = 0.0
    passed: bool = False
    note: str = ""

    @classmethod
    def make(cls, name, claim_ref, measured, target, kind, tolerance=0.0, note=""):
        c = cls(name, claim_ref, _num(measured), _num(target), kind, float(tolerance), False, note)
        c.passed = c._evaluate()
        return c

    def _evaluate(self) -> bool:
        m, t, tol = self.measured, self.target, self.tolerance
        if m is None or not math.isfinite(m):
            return False
        if self.kind == "finite":
            return True
        if self.kind == "exact":
            return m == t
        if t is None:
            return False
        if self.kind == "equal":
            return abs(m - t) <= tol
        if self.kind == "upper":
            return m <= t + tol
        if self.kind == "lower":
            return m >= t - tol
        raise ValueError(self.kind)

    def text(self) -> str:
        flag = "PASS" if self.passed else "FAIL"
        rel = {"equal": "=", "upper": "<=", "lower": ">=", "finite": "finite", "exact": "=="}[self.kind]
        tgt = "" if self.target is None else f" {rel} {self.target:.10g}"
        tol = f" (tol {self.tolerance:.1e})" if self.tolerance else ""
        return f"[{flag}] {self.name}: {_fmt(self.measured)}{tgt}{tol}  -- {self.claim_ref}" + (
            f" [{self.note}]" if self.note else ""
        )


def _num(v):
    if v is None:
        return None
    return float(v)


def _fmt(v):
    return "nan" if v is None else f"{v:.10g}"


@dataclass
class VerificationReport:
    subject: str
    checks: list = field(default_factory=list)
    seed: Optional[int] = None
    runtime: float = 0.0
    config: dict = field(default_factory=dict)

    @property
    def passed(self) -> bool:
        return all(c.passed for c in self.checks)

    @property
    def failures(self):
        return [c for c in self.checks if not c.passed]

    def add(self, *args, **kw) -> Check:
        c = Check.make(*args, **kw)
        self.checks.append(c)
        return c

    def extend(self, other: "VerificationReport"):
        self.checks.extend(other.checks)
        self.runtime += other.runtime

    def to_dict(self) -> dict:
        return {
            "subject": self.subject,
            "passed": self.passed,
            "seed": self.seed,
            "runtime": self.runtime,
            "config": self.config,
            "checks": [asdict(c) for c in self.checks],
        }

    def to_json(self, indent=None) -> str:
        return json.dumps(self.to_dict(), indent=indent)

    @classmethod
    def from_dict(cls, d) -> "VerificationReport":
        checks = [Check(**c) for c in d["checks"]]
        return cls(d["subject"], checks, d.get("seed"), d.get("runtime", 0.0), d.get("config", {}))

    @classmethod
    def from_json(cls, text) -> "VerificationReport":
        return cls.from_dict(json.loads(text))

    def text(self) -> str:
        head = f"{self.subject}: {'PASS' if self.passed else 'FAIL'} " \
               f"({len(self.checks) - len(self.failures)}/{len(self.checks)} checks, {self.runtime:.2f}s)"
        return "\n".join([head] + ["  " + c.text() for c in self.checks])


class _Timer:
    def __init__(self, report):
        self.report = report

    def __enter__(self):
        self.t0 = time.perf_counter()
        return self.report

    def __exit__(self, *exc):
        self.report.runtime += time.perf_counter() - self.t0
        return False


# -- nAI integrals --------------------------------------------------------

_SIGNED_REF = {
    "repu": "RePU B-function: integral h^(q+1), unit mass at h = 1",
    "sigmoid": "sigmoid B-function: signed integral equals h",
    "tanh": "tanh B-function: signed integral equals h",
    "arctan": "arctan B-function: signed integral equals h",
    "generalized_sigmoid": "generalized sigmoid B-function: signed integral equals h",
    "softplus": "softplus B-function: signed integral h^2 (telescoping)",
    "elu": "ELU B-function: signed integral h^2 / gamma",
    "gelu": "GELU B-function: signed integral h^2",
    "silu": "SiLU B-function: signed integral h^2",
    "mish": "Mish B-function: signed integral h^2 (telescoping)",
    "gaussian": "Gaussian: integral sqrt(pi)",
}
_ABS_REF = {
    "gelu": "GELU B-function: absolute integral <= 37/10 h^2",
    "silu": "SiLU B-function: absolute integral <= 26/5 h^2",
    "mish": "Mish B-function: absolute integral <= ||s''||_1 h^2",
}


def verify_nai(spec: ActivationSpec, h_grid: Sequence[float] = DEFAULT_H_GRID, tol: float = 1e-6) -> VerificationReport:
    """Signed integrals against the closed forms and absolute integrals against bounds."""
    rep = VerificationReport(f"nai:{spec.label}", config={"h_grid": list(h_grid), "tol": tol})
    grid = (1.0,) if spec.id == "gaussian" else tuple(h_grid)
    with _Timer(rep):
        for h in grid:
            B = build_bfunction(spec, h)
            f = B.facts
            qtol = tol / 10.0
            for kind, fn in (("signed", signed_integral), ("abs", abs_integral)):
                note = ""
                try:
                    val = fn(B, qtol)
                except IntegrationError as e:
                    val, note = float("nan"), f"integration failed: {e} (partial {e.estimate:.6g})"
                if kind == "signed":
                    target, how = f.signed_integral, "equal"
                    ref = _SIGNED_REF.get(spec.id, "closed form") if target is not None else "finite integral"
                else:
                    target, how = f.abs_integral_bound, "upper"
                    ref = _ABS_REF.get(spec.id, "absolute integral bound") if target is not None else "B is integrable"
                rep.add(f"{kind}_integral(h={h:g})", ref, val, target, how if target is not None else "finite",
                        tol if target is not None else 0.0, note=note)
    return rep


# -- alternating sum and Taylor remainder ---------------------------------


def check_alternating_sum(k_max: int = 12) -> VerificationReport:
    """``sum_i (-1)^i C(k, i) i^j == 0`` for all ``j < k <= k_max``, exactly."""
    if k_max > 20 or k_max < 1:
        raise ValueError("k_max must be in [1, 20]")
    rep = VerificationReport("alternating_sum", config={"k_max": k_max})
    with _Timer(rep):
        for k in range(1, k_max + 1):
            worst = 0
            for j in range(k):
                s = sum((-1) ** i * math.comb(k, i) * i ** j for i in range(k + 1))
                worst = max(worst, abs(s))
            rep.add(f"k={k}", "alternating binomial sums of i^j vanish for j < k", worst, 0, "exact")
    return rep


def _effective(spec):
    """Step multiplier turning ``B(x, h)`` into ``delta_{m h}^k``."""
    return spec.step_multiplier


def taylor_remainder_form(deriv: Callable, k: int, h: float, x: float, epsabs: float = 1e-14) -> float:
    """``h^k/(k-1)! sum_i (-1)^i C(k,i) (k/2-i)^k int_0^1 s^(k)(x + s (k/2-i) h) (1-s)^(k-1) ds``."""
    total = 0.0
    for i in range(k + 1):
        c = k / 2.0 - i
        if c == 0.0:
            continue
        g = lambda s: float(deriv(x + s * c * h)) * (1.0 - s) ** (k - 1)
        with warnings.catch_warnings():
            warnings.simplefilter("ignore", integrate.IntegrationWarning)
            val, _ = integrate.quad(g, 0.0, 1.0, epsabs=epsabs, epsrel=1e-13, limit=200)
        total += (-1) ** i * math.comb(k, i) * c ** k * val
    return h ** k / math.factorial(k - 1) * total


def check_taylor_remainder(spec: ActivationSpec, k: Optional[int] = None, h_grid=(0.25, 0.5, 1.0, 2.0),
                           x_grid=None, tol: float = 1e-8) -> VerificationReport:
    """Unscaled ``B(x, h)`` against the integral Taylor-remainder form.

    The two-point recipes are first-order differences with step ``2h``, so
    the remainder form is evaluated at the effective step.
    """
    k = spec.fd_order_k if k is None else int(k)
    if k < 1:
        raise ValueError("remainder form needs k >= 1")
    x_grid = np.linspace(-3.0, 3.0, 20) if x_grid is None else np.asarray(x_grid, dtype=float)
    try:
        derivative_ae(spec, k, np.array([0.5]))
    except ActivationError as e:
        raise ActivationError(f"derivative of order {k} unavailable: {e}") from None
    deriv = lambda t: derivative_ae(spec, k, np.array([t]))[0]
    rep = VerificationReport(f"taylor:{spec.label}", config={"k": k, "h_grid": list(h_grid),
                                                              "n_x": len(x_grid), "tol": tol})
    m = _effective(spec)
    with _Timer(rep):
        for h in h_grid:
            B = build_bfunction(spec, h)
            lhs = B.unscaled(x_grid)
            rhs = np.array([taylor_remainder_form(deriv, k, m * h, float(x)) for x in x_grid])
            err = float(np.max(np.abs(lhs - rhs)))
            rep.add(f"remainder(h={h:g})", "finite difference equals its Taylor remainder integral",
                    err, 0.0, "upper", tol)
    return rep


# -- Irwin-Hall -----------------------------------------------------------


def irwin_hall_oracle(r: int) -> PPoly:
    """Density of a sum of r uniforms on [-1/2, 1/2] by iterated convolution.

    ``f_{s+1}(x) = F_s(x + 1/2) - F_s(x - 1/2)`` with ``F_s`` the exact
    piecewise antiderivative; each unit piece is refit on Chebyshev nodes.
    Independent of the alternating-sum formula.  Includes zero pieces on
    either side of the support.
    """
    if r < 1:
        raise ValueError("r must be >= 1")
    f = PPoly(np.array([[0.0, 1.0, 0.0]]), np.array([-1.5, -0.5, 0.5, 1.5]))
    for s in range(1, r):
        F = f.antiderivative()
        lo = -(s + 1) / 2.0
        brk = lo - 1.0 + np.arange(s + 4, dtype=float)
        deg = s
        coefs = np.zeros((deg + 1, len(brk) - 1))
        t = 0.5 * (1.0 - np.cos(np.pi * (np.arange(deg + 1) + 0.5) / (deg + 1)))
        for j in range(len(brk) - 1):
            a = brk[j]
            x = a + t
            if x[0] < lo or x[-1] > -lo:
                vals = np.zeros_like(x)
            else:
                vals = _safe(F, x + 0.5) - _safe(F, x - 0.5)
            coefs[:, j] = np.polyfit(t, vals, deg)
        f = PPoly(coefs, brk)
    return f


def _safe(F, x):
    lo, hi = F.x[0], F.x[-1]
    y = F(np.clip(x, lo, hi))
    return y


def check_irwin_hall(q_max: int = 5, tol: float = 1e-8, h_grid=(0.5, 1.0, 2.0), n_points: int = 10_000) -> VerificationReport:
    """``B(x, h) = h^q f_{q+1}(x / h)`` for the RePU recipe."""
    if q_max > 6:
        raise ValueError("q_max must be <= 6")
    rep = VerificationReport("irwin_hall", config={"q_max": q_max, "h_grid": list(h_grid),
                                                   "n_points": n_points, "tol": tol})
    with _Timer(rep):
        for q in range(q_max + 1):
            r = q + 1
            oracle = irwin_hall_oracle(r)
            spec = make_activation("repu", q=q)
            for h in h_grid:
                B = build_bfunction(spec, h)
                x = np.linspace(-0.6 * r * h - 0.1, 0.6 * r * h + 0.1, n_points)
                ref = h ** q * oracle(x / h)
                err = float(np.max(np.abs(B(x) - ref)))
                rep.add(f"q={q},h={h:g}", "RePU B-function is a dilated Irwin-Hall density",
                        err, 0.0, "upper", tol)
    return rep


# -- approximate-identity conditions --------------------------------------


def _scaled_bfunction(B: BFunction1D, theta: float, norm: float) -> BFunction1D:
    """``y -> B(y / theta) / (theta norm)`` as a B-function object."""
    terms = tuple((a / (theta * norm), w / theta, b) for a, w, b in B.terms)
    facts = B.facts
    if facts.support is not None:
        facts = replace(facts, support=(theta * facts.support[0], theta * facts.support[1]))
    return replace(B, terms=terms, h=B.h * theta, facts=facts)


def check_ai_conditions(cb: ComposedB, theta_list, delta: float, tol: float = 1e-6,
                        l1_tol: float = 1e-4, tail_final: Optional[float] = None,
                        budget: int = 400_000, seed: int = 0) -> VerificationReport:
    """(i) constant L1 norm, (ii) unit integral, (iii) tail mass decreasing to 0."""
    thetas = [float(t) for t in theta_list]
    if any(t <= 0 for t in thetas) or any(b >= a for a, b in zip(thetas, thetas[1:])):
        raise ValueError("theta_list must be positive and strictly decreasing")
    rep = VerificationReport(f"ai:{cb.spec.label}:n={cb.n}", seed=seed,
                             config={"thetas": thetas, "delta": delta, "tol": tol, "l1_tol": l1_tol})
    with _Timer(rep):
        ai = make_approximate_identity(cb, thetas[0], budget=budget, seed=seed)
        norms, tails = [], []
        for th in thetas:
            if cb.n == 1:
                B = build_bfunction(cb.spec, 1.0, cb.recipe.variant)
                Bt = _scaled_bfunction(B, th, ai.normalizer)
                mass = _integrate(Bt, "signed", tol / 10)
                l1 = _integrate(Bt, "abs", tol / 10)
                T = tail_mass(B, th, delta, tol / 10)
            else:
                mass, l1 = 1.0, ai.l1_ratio
                T = tail_mass_nd(cb, delta / th, ai.normalizer, budget=budget, seed=seed)
            norms.append(l1)
            tails.append(T)
            rep.add(f"unit_integral(theta={th:g})", "approximate identity has unit integral", mass, 1.0,
                    "equal", tol)
        spread = max(norms) - min(norms)
        rep.add("l1_constant", "L1 norm of B_theta does not depend on theta", spread, 0.0, "upper", l1_tol,
                note=f"||B_theta||_1 = {norms[0]:.8g}")
        worst = 0.0
        for a, b in zip(tails, tails[1:]):
            if a > tol:
                worst = max(worst, b - a + (tol if b >= a else 0.0))
            else:
                worst = max(worst, b - a)
        rep.add("tail_monotone", "tail mass decreases as theta shrinks", worst, 0.0, "upper", 0.0,
                note="tails " + ", ".join(f"{t:.3g}" for t in tails))
        if tail_final is not None:
            rep.add(f"tail(theta={thetas[-1]:g})", "tail mass tends to 0", tails[-1], tail_final, "upper")
    rep.config["tails"] = tails
    rep.config["l1_norms"] = norms
    return rep


# -- stated bounds --------------------------------------------------------


def sup_abs(fn: Callable, lo: float, hi: float, n: int = 200_001) -> float:
    """``max |fn|`` on ``[lo, hi]``: dense grid then a bounded local refinement."""
    x = np.linspace(lo, hi, n)
    v = np.abs(fn(x))
    j = int(np.argmax(v))
    best = float(v[j])
    a, b = x[max(j - 1, 0)], x[min(j + 1, n - 1)]
    if b > a:
        res = optimize.minimize_scalar(lambda t: -abs(float(fn(np.array([t]))[0])), bounds=(a, b),
                                       method="bounded", options={"xatol": 1e-12})
        best = max(best, -float(res.fun))
    return best


def check_stated_bounds(h_grid: Sequence[float] = DEFAULT_H_GRID, slack: float = 1e-9,
                       tol: float = 1e-11) -> VerificationReport:
    """Bounds stated for GELU, SiLU and softplus, checked as stated."""
    rep = VerificationReport("stated_bounds", config={"h_grid": list(h_grid), "slack": slack})
    gelu, silu, sp = make_activation("gelu"), make_activation("silu"), make_activation("softplus")
    with _Timer(rep):
        for h in h_grid:
            Bg = build_bfunction(gelu, h)
            rep.add(f"gelu_abs(h={h:g})", "GELU: int |B| <= 37/10 h^2", abs_integral(Bg, tol), 3.7 * h * h,
                    "upper", slack)
            rep.add(f"gelu_sup(h={h:g})", "GELU: |B| <= h^2 / sqrt(2 pi)", sup_abs(Bg, -30, 30),
                    h * h / math.sqrt(2 * math.pi), "upper", slack)
            Bs = build_bfunction(silu, h)
            rep.add(f"silu_abs(h={h:g})", "SiLU: int |B| <= 26/5 h^2", abs_integral(Bs, tol), 5.2 * h * h,
                    "upper", slack)
            rep.add(f"silu_sup(h={h:g})", "SiLU: |B| <= h^2 / 2", sup_abs(Bs, -30, 30), 0.5 * h * h,
                    "upper", slack)
            Bp = build_bfunction(sp, h)
            rep.add(f"softplus_int(h={h:g})", "softplus: int B <= min(1, h^2)", signed_integral(Bp, tol),
                    min(1.0, h * h), "upper", slack)
    return rep


# -- general framework ----------------------------------------------------


def general_framework_constants(spec: ActivationSpec, k: int, radius: float = 50.0):
    """``(M, L1, N, C)`` with ``M = sup |s^(k)|``, ``L1 = ||s^(k)||_1``,
    ``N = M/k! sum_i C(k,i) |k/2-i|^k`` and ``C = (N/M) L1``.

    Screens C1/C2 numerically: ``s^(k-1)`` must be continuous on a dense
    grid (no jumps, which would put a Dirac mass in ``s^(k)``), ``M`` finite,
    and the truncated L1 norm must settle as the radius doubles.
    """
    x = np.linspace(-radius, radius, 400_001)
    dx = x[1] - x[0]
    try:
        dk = derivative_ae(spec, k, x)
        prev = derivative_ae(spec, k - 1, x) if k >= 1 else None
    except ActivationError as e:
        raise ScreeningError(str(e)) from None
    if not np.all(np.isfinite(dk)):
        raise ScreeningError(f"{spec.label}: derivative of order {k} is not finite on the grid")
    M = float(np.max(np.abs(dk)))
    if prev is not None:
        jump = float(np.max(np.abs(np.diff(prev))))
        if jump > 10.0 * M * dx + 1e-9:
            raise ScreeningError(
                f"{spec.label}: derivative of order {k - 1} jumps by {jump:.3g}; "
                f"order-{k} derivative is not a bounded function"
            )
    if _analytic_derivative(spec, k, np.array([0.5])) is not None:
        fk = lambda t: abs(float(derivative_ae(spec, k, np.array([t]))[0]))
        pts = x[1:][np.diff(np.sign(dk)) != 0]

        def l1(R):
            edges = [-R] + sorted(float(p) for p in pts if -R < p < R) + [R]
            with warnings.catch_warnings():
                warnings.simplefilter("ignore", integrate.IntegrationWarning)
                return math.fsum(integrate.quad(fk, a, b, epsabs=1e-13, epsrel=1e-12, limit=200)[0]
                                 for a, b in zip(edges[:-1], edges[1:]) if b > a)

        I1, I2, I4 = l1(radius / 2.0), l1(radius), l1(2.0 * radius)
        d1, d2 = I2 - I1, I4 - I2
        if d2 > 1e-9 * max(1.0, I4):
            # algebraic tails: annulus masses must shrink geometrically
            r = d2 / d1 if d1 > 0 else 1.0
            if r > 0.75:
                raise ScreeningError(f"{spec.label}: L1 norm of order-{k} derivative does not converge "
                                     f"(annulus ratio {r:.3g})")
            I1 = I2 = I4 + d2 * r / (1.0 - r)
        else:
            I1 = I2 = I4
    else:
        # numeric derivatives are too slow for adaptive quadrature
        absd = np.abs(dk)
        half = np.abs(x) <= radius / 2.0
        I1 = float(integrate.simpson(absd[half], x=x[half]))
        I2 = float(integrate.simpson(absd, x=x))
    if abs(I2 - I1) > 1e-6 * max(1.0, I2):
        raise ScreeningError(f"{spec.label}: truncated L1 norm of order-{k} derivative does not settle "
                             f"({I1:.6g} -> {I2:.6g})")
    N = M / math.factorial(k) * sum(math.comb(k, i) * abs(k / 2.0 - i) ** k for i in range(k + 1))
    C = (N / M) * I2 if M > 0 else 0.0
    return M, I2, N, C


def check_general_framework(spec: ActivationSpec, k: Optional[int] = None, h_grid=DEFAULT_H_GRID,
                            tol: float = 1e-9) -> VerificationReport:
    """``sup |delta_h^k s| <= N |h|^k`` and ``int |delta_h^k s| <= C |h|^k``."""
    k = spec.fd_order_k if k is None else int(k)
    rep = VerificationReport(f"general:{spec.label}", config={"k": k, "h_grid": list(h_grid)})
    with _Timer(rep):
        M, L1, N, C = general_framework_constants(spec, k)
        rep.config.update({"M": M, "L1": L1, "N": N, "C": C})
        sigma = lambda t: derivative_ae(spec, 0, t)
        for h in h_grid:
            fn = lambda t, h=h: central_difference(sigma, k, h, t) if k >= 1 else sigma(t)
            s = sup_abs(lambda t: np.asarray(fn(t)), -40, 40)
            rep.add(f"sup(h={h:g})", "|delta_h^k s| <= N |h|^k", s, N * abs(h) ** k, "upper", tol)
            a = _abs_integral_callable(fn, k, h, tol)
            rep.add(f"l1(h={h:g})", "int |delta_h^k s| <= C |h|^k", a, C * abs(h) ** k, "upper", tol)
    return rep


def _abs_integral_callable(fn, k, h, tol):
    g = lambda u: abs(float(fn(np.array([u]))[0])) + abs(float(fn(np.array([-u]))[0]))
    knots = [abs((k / 2.0 - i) * h) for i in range(k + 1)]
    total = 0.0
    R = 10.0 + 2 * max(knots)
    with warnings.catch_warnings():
        warnings.simplefilter("ignore", integrate.IntegrationWarning)
        pts = sorted(p for p in knots if 0 < p < R) or None
        total += integrate.quad(g, 0.0, R, points=pts, epsabs=tol / 8, epsrel=0, limit=500)[0]
        while True:
            piece = integrate.quad(g, R, 2 * R, epsabs=tol / 8, epsrel=0, limit=500)[0]
            total += piece
            R *= 2
            if abs(piece) < tol / 4 or R > 1e7:
                return total


# -- Hoeffding and the rate study -----------------------------------------


def hoeffding_epsilon(N: int, range_: float, p: float) -> float:
    """Invert ``p = 2 exp(-2 N eps^2 / range^2)``: ``eps = range sqrt(ln(2/p) / (2N))``."""
    if N < 1 or not range_ > 0:
        raise ValueError("need N >= 1 and range > 0")
    if not 0.0 < p < 1.0:
        raise ValueError("p must lie in (0, 1)")
    return range_ * math.sqrt(math.log(2.0 / p) / (2.0 * N))


@dataclass
class RateStudyResult:
    N_values: list
    errors: list  # trials x len(N_values)
    slope: Optional[float]
    slope_ci: Optional[tuple]
    intercept: Optional[float]
    medians: list
    failure_fraction: list
    epsilon: list
    degenerate: bool
    config: dict = field(default_factory=dict)
    warnings: list = field(default_factory=list)

    def median_ratio(self) -> float:
        """Median error at the smallest N over the median at the largest."""
        lo, hi = self.medians[0], self.medians[-1]
        return float("inf") if hi == 0 else lo / hi

    def to_dict(self):
        d = asdict(self)
        d["slope_ci"] = None if self.slope_ci is None else list(self.slope_ci)
        return d

    def rows(self):
        """``(N, trial, error)`` triples."""
        for t, row in enumerate(self.errors):
            for N, e in zip(self.N_values, row):
                yield N, t, e


def _eval_grid(n: int, size: Optional[int]):
    if n == 1:
        size = 512 if size is None else size
        return np.linspace(-1.0, 1.0, size)[:, None]
    size = 64 if size is None else size
    ax = np.linspace(-1.0, 1.0, size)
    mesh = np.meshgrid(*([ax] * n), indexing="ij")
    return np.stack([m.ravel() for m in mesh], axis=1)


def rate_study(f: Callable, cb: ComposedB, N_list, trials: int = 16, grid_size: Optional[int] = None,
               seed: int = 0, c: float = 1.0, c_prime: float = 1.0, theta_fn: Optional[Callable] = None,
               method: str = "formula", workers: int = 1, normalizer: Optional[float] = None) -> RateStudyResult:
    """Sup-grid errors of Monte-Carlo networks as N grows.

    Defaults follow the standard rate coupling ``delta = c / sqrt(N)``,
    ``theta = delta^2``; ``theta_fn(N)`` overrides theta.  Trial seeds come
    from ``SeedSequence(seed).spawn``, one per (N, trial) pair.
    ``method="network"`` evaluates the built network by its forward pass,
    ``"formula"`` evaluates the same samples by direct nested summation (the
    two agree to rounding).
    """
    N_list = [int(N) for N in N_list]
    if any(b <= a for a, b in zip(N_list, N_list[1:])):
        raise ValueError("N_list must be increasing")
    notes = []
    if trials < 8:
        notes.append(f"only {trials} trial(s): failure fractions are not meaningful below 8 trials")
    G = _eval_grid(cb.n, grid_size)
    fG = np.asarray(f(G), dtype=float).reshape(-1)
    if normalizer is None:
        normalizer = make_approximate_identity(cb, 1.0, seed=seed).normalizer
    children = np.random.SeedSequence(seed).spawn(len(N_list) * trials)
    seeds = [int(s.generate_state(1)[0]) for s in children]
    errors = np.zeros((trials, len(N_list)))
    def one(idx):
        j, t = divmod(idx, trials)
        N = N_list[j]
        theta = theta_fn(N) if theta_fn is not None else (c / math.sqrt(N)) ** 2
        s = seeds[idx]
        if method == "network":
            ai = ScaledAI(cb, theta, normalizer, 1.0)
            net = build_mc_network(f, cb, theta, N, s, ai=ai)
            approx = eval_network(net, G)
        else:
            approx = mc_formula(f, cb, theta, N, s, normalizer, G)
        return t, j, float(np.max(np.abs(approx - fG)))

    jobs = range(len(N_list) * trials)
    if workers > 1:
        import concurrent.futures as cf

        with cf.ThreadPoolExecutor(max_workers=workers) as ex:
            results = list(ex.map(one, jobs))
    else:
        results = [one(i) for i in jobs]
    for t, j, e in results:
        errors[t, j] = e
    eps = [c_prime / math.sqrt(N) for N in N_list]
    fail = [float(np.mean(errors[:, j] > eps[j])) for j in range(len(N_list))]
    medians = [float(np.median(errors[:, j])) for j in range(len(N_list))]
    degenerate = bool(np.all(errors == 0.0)) or np.any(errors <= 0.0)
    slope = ci = icpt = None
    if len(N_list) < 2:
        notes.append("a single N value: no slope fitted")
    elif not degenerate:
        lx = np.log(np.repeat(np.array(N_list, float)[None, :], trials, axis=0).ravel())
        ly = np.log(errors.ravel())
        fit = stats.linregress(lx, ly)
        slope, icpt = float(fit.slope), float(fit.intercept)
        tq = stats.t.ppf(0.975, len(lx) - 2)
        ci = (slope - tq * fit.stderr, slope + tq * fit.stderr)
    if degenerate:
        notes.append("some errors are exactly zero; log-log slope is undefined")
    config = {"N_list": N_list, "trials": trials, "grid_points": int(len(G)), "seed": seed, "c": c,
              "c_prime": c_prime, "theta": "custom" if theta_fn is not None else "(c/sqrt(N))^2",
              "method": method, "normalizer": normalizer, "activation": cb.spec.to_dict(), "n": cb.n}
    return RateStudyResult(N_list, errors.tolist(), slope, ci, icpt, medians, fail, eps, bool(degenerate),
                           config, notes)


# -- aggregate ------------------------------------------------------------


def verify_all(tol: float = 1e-6) -> VerificationReport:
    """Integrals for every catalog activation plus the exact identities."""
    rep = VerificationReport("all", config={"tol": tol})
    for spec in list_catalog():
        rep.extend(verify_nai(spec, DEFAULT_H_GRID, tol))
    from .activations import generalized_sigmoid

    rep.extend(verify_nai(generalized_sigmoid(L=2.0, ell=-1.0, decay_alpha=1.0), DEFAULT_H_GRID, tol))
    rep.extend(check_alternating_sum(12))
    rep.extend(check_irwin_hall(5, 1e-8))
    rep.extend(check_taylor_remainder(make_activation("sigmoid"), 1, tol=1e-8))
    rep.extend(check_taylor_remainder(make_activation("gelu"), 2, tol=1e-8))
    for spec in (make_activation("sigmoid"), make_activation("repu", q=1)):
        rep.extend(check_ai_conditions(ComposedB.of(spec, 1), [2.0 ** -j for j in range(7)], 0.5,
                                       tol=tol, tail_final=1e-3))
    return rep

"""n-fold composed B-functions and the rescaled approximate identity.

``Bfrak(x) = B(x_n, B(x_{n-1}, ..., B(x_1, 1)))`` with innermost step 1.
"""

from __future__ import annotations

import concurrent.futures as cf
import csv
import json
import math
from dataclasses import dataclass, field
from typing import Optional, Sequence

import numpy as np

from . import kernels
from .activations import ActivationSpec
from .bfunction import (
    BFunctionError,
    BRecipe,
    _integrate,
    abs_integral,
    build_bfunction,
    signed_integral,
)

__all__ = [
    "ComposedB",
    "ScaledAI",
    "MassEstimate",
    "BudgetExhaustedError",
    "VanishingIntegralError",
    "eval_composed",
    "composed_support_box",
    "composed_peak",
    "truncation_box",
    "estimate_integrals",
    "estimate_l1_norm",
    "make_approximate_identity",
    "grid_values",
    "write_grid_csv",
    "write_levels",
]

Z99 = 2.5758293035489004  # two-sided 99% normal quantile
_N_MAX_INTEGRAL = 4
_BATCH = 1 << 16
_STREAMS = 16


class BudgetExhaustedError(RuntimeError):
    """Monte-Carlo budget ran out before the half-width reached tol."""

    def __init__(self, msg, estimate, half_width):
        super().__init__(msg)
        self.estimate = estimate
        self.half_width = half_width


class VanishingIntegralError(BFunctionError):
    """The composed B-function integrates to (numerically) zero."""


@dataclass(frozen=True)
class ComposedB:
    recipe: BRecipe
    n: int

    def __post_init__(self):
        if int(self.n) != self.n or self.n < 1:
            raise BFunctionError("dimension n must be a positive integer")
        if self.recipe.k == 0 and self.n > 1:
            # B(x, h) = sigma(x) ignores h, so nesting gives sigma(x_n): not integrable
            raise BFunctionError("order-0 recipes cannot be composed in n >= 2")

    @classmethod
    def of(cls, spec: ActivationSpec, n: int, variant: str = "central") -> "ComposedB":
        return cls(BRecipe(spec, variant), int(n))

    @property
    def spec(self) -> ActivationSpec:
        return self.recipe.spec

    def __call__(self, X):
        return eval_composed(self, X)


def _as_points(X, n):
    X = np.asarray(X, dtype=float)
    single = X.ndim == 1
    if single:
        X = X[None, :]
    if X.ndim != 2 or X.shape[1] != n:
        raise BFunctionError(f"expected points of dimension {n}, got shape {np.shape(X)}")
    return X, single


def eval_composed(cb: ComposedB, X):
    """Nested evaluation at a point or an ``(M, n)`` array of points."""
    X, single = _as_points(X, cb.n)
    out = kernels.composed_eval(cb.spec, cb.recipe.coefs, cb.recipe.offsets, X)
    return float(out[0]) if single else out


def composed_peak(cb: ComposedB, depth: Optional[int] = None) -> float:
    """``c_j = B(0, c_{j-1})`` with ``c_0 = 1``; ``depth`` defaults to n."""
    depth = cb.n if depth is None else depth
    c = 1.0
    for _ in range(depth):
        c = float(cb.recipe(0.0, c))
    return c


def composed_support_box(cb: ComposedB):
    """Per-coordinate half-widths of the support box, or None.

    Coordinate i sees step ``h_{i-1} <= c_{i-1}`` (unimodality), and
    ``B(., h)`` lives on ``[-r h / 2, r h / 2]`` with ``r = q + 1``.
    """
    if not cb.spec.compact_support:
        return None
    # non-central variants are shifted; this is the enclosing symmetric box
    half = float(np.abs(cb.recipe.offsets).max())
    b = []
    c = 1.0
    for _ in range(cb.n):
        b.append(half * c)
        c = float(cb.recipe(0.0, c))
    return np.array(b)


# -- truncation for non-compact recipes -----------------------------------


def _stage_sup(recipe: BRecipe, H: float, radius: float) -> float:
    x = np.linspace(-radius, radius, 4001)
    return float(max(np.max(np.abs(recipe(x, H))), np.max(np.abs(recipe(x, -H)))))


def _radius_1d(recipe: BRecipe, H: float, rel: float, r_cap: float) -> float:
    B = build_bfunction(recipe.spec, H, "central")
    tol = 1e-3 * rel * abs(H) ** max(recipe.k, 1)
    total = _integrate(B, "abs", tol)
    R = 2.0
    while R < r_cap:
        if _integrate(B, "abs", tol, start=R) <= rel * total:
            return R
        R *= 2.0
    return r_cap


def truncation_box(cb: ComposedB, rel: float = 1e-4, r_cap: float = 1e3):
    """Half-widths of an integration box; exact support for RePU.

    Stage i uses the 1-D tail of ``|B(., H_i)|`` where ``H_i`` bounds the
    step it receives (``H_1 = 1``, ``H_{i+1} = sup |B(., +-H_i)|``).
    """
    box = composed_support_box(cb)
    if box is not None:
        return box
    radii = []
    H = 1.0
    for _ in range(cb.n):
        if H == 0.0:
            radii.append(1.0)
            continue
        R = _radius_1d(cb.recipe, H, rel, r_cap)
        radii.append(R)
        H = _stage_sup(cb.recipe, H, R)
    return np.array(radii)


# -- Monte-Carlo integration ----------------------------------------------


@dataclass
class MassEstimate:
    """Integrals of ``Bfrak`` and ``|Bfrak|`` with 99% half-widths."""

    signed: float
    signed_half_width: float
    abs: float
    abs_half_width: float
    samples: int
    box: list
    method: str
    seed: Optional[int] = None
    workers: int = 1
    shell: Optional[float] = None

    def to_dict(self):
        return dict(self.__dict__)


def _stream_sums(cb, box, rng, count):
    n = cb.n
    s = s2 = a = 0.0
    done = 0
    while done < count:
        m = min(_BATCH, count - done)
        U = (rng.random((m, n)) * 2.0 - 1.0) * box
        v = eval_composed(cb, U)
        s += math.fsum(v)
        s2 += math.fsum(v * v)
        av = np.abs(v)
        a += math.fsum(av)
        done += m
    return s, s2, a, count


def _shell_pilot(cb, box, count, seed):
    """Mass of ``|Bfrak|`` over the doubled box and over its outer shell."""
    rng = np.random.default_rng(seed)
    U = (rng.random((count, cb.n)) * 2.0 - 1.0) * (2.0 * box)
    av = np.abs(eval_composed(cb, U))
    outside = np.any(np.abs(U) > box, axis=1)
    vol = float(np.prod(4.0 * box))
    sv = np.where(outside, av, 0.0)
    shell = vol * float(np.mean(sv))
    shell_hw = Z99 * vol * float(np.std(sv)) / math.sqrt(count)
    return vol * float(np.mean(av)), shell, shell_hw


def _split(total, parts):
    base, extra = divmod(total, parts)
    return [base + (1 if i < extra else 0) for i in range(parts)]


def _mc(cb, box, budget, seed, workers):
    # a fixed stream count keeps the estimate independent of ``workers``
    streams = np.random.SeedSequence(seed).spawn(_STREAMS)
    counts = _split(int(budget), _STREAMS)
    rngs = [np.random.default_rng(s) for s in streams]
    job = lambda i: _stream_sums(cb, box, rngs[i], counts[i])
    if workers == 1:
        parts = [job(i) for i in range(_STREAMS)]
    else:
        with cf.ThreadPoolExecutor(max_workers=workers) as ex:
            parts = list(ex.map(job, range(_STREAMS)))
    S = math.fsum(p[0] for p in parts)
    S2 = math.fsum(p[1] for p in parts)
    A = math.fsum(p[2] for p in parts)
    N = sum(p[3] for p in parts)
    vol = float(np.prod(2.0 * box))
    mean = S / N
    amean = A / N
    var = max(S2 / N - mean * mean, 0.0)
    avar = max(S2 / N - amean * amean, 0.0)  # |v|^2 = v^2
    hw = Z99 * vol * math.sqrt(var / N)
    ahw = Z99 * vol * math.sqrt(avar / N)
    return vol * mean, hw, vol * amean, ahw, N


def estimate_integrals(
    cb: ComposedB,
    budget: int = 1_000_000,
    seed: int = 0,
    workers: int = 1,
    tol: Optional[float] = None,
    box=None,
) -> MassEstimate:
    """``int Bfrak`` and ``int |Bfrak|``.

    n = 1 uses adaptive quadrature.  For 2 <= n <= 4, uniform Monte-Carlo
    over the truncation box with 99% normal half-widths; the budget is
    split over 16 independent streams from ``SeedSequence(seed).spawn``,
    run on up to ``workers`` threads, so results depend only on
    ``(seed, budget)``.  A tenth of the budget first checks that
    the shell between the box and its double holds less than a quarter of
    the target half-width; the box is doubled until it does.
    """
    if cb.n == 1:
        B = build_bfunction(cb.spec, 1.0, cb.recipe.variant)
        qtol = 1e-9 if tol is None else min(tol, 1e-9)
        s = signed_integral(B, qtol)
        a = abs_integral(B, qtol)
        support = truncation_box(cb) if cb.spec.compact_support else None
        return MassEstimate(s, qtol, a, qtol, 0, None if support is None else support.tolist(), "quadrature")
    if cb.n > _N_MAX_INTEGRAL:
        raise BFunctionError(f"integral estimation supports n <= {_N_MAX_INTEGRAL}")
    if budget < 1:
        raise BFunctionError("budget must be positive")
    workers = max(1, int(workers))
    box = truncation_box(cb) if box is None else np.asarray(box, dtype=float)
    shell = None
    main_budget = int(budget)
    if not cb.spec.compact_support:
        pilot = max(int(budget) // 10, 1000)
        main_budget = max(int(budget) - pilot, 1)
        for it in range(6):
            total, shell, shell_hw = _shell_pilot(cb, box, pilot, seed + 7919 * (it + 1))
            target = 0.25 * (tol if tol is not None else 1e-3 * abs(total))
            if shell + shell_hw < target:
                break
            box = 2.0 * box
    s, hw, a, ahw, N = _mc(cb, box, main_budget, seed, workers)
    est = MassEstimate(s, hw, a, ahw, N, box.tolist(), "monte-carlo", seed, workers, shell)
    if tol is not None and ahw >= tol:
        raise BudgetExhaustedError(
            f"half-width {ahw:.3g} >= tol {tol:.3g} after {N} samples", a, ahw
        )
    return est


def estimate_l1_norm(cb: ComposedB, tol: Optional[float] = None, budget: int = 1_000_000,
                     seed: int = 0, workers: int = 1):
    """``(estimate, half_width)`` of ``int |Bfrak|``."""
    m = estimate_integrals(cb, budget=budget, seed=seed, workers=workers, tol=tol)
    return m.abs, m.abs_half_width


# -- approximate identity -------------------------------------------------


@dataclass(frozen=True)
class ScaledAI:
    """``B_theta(x) = theta^-n Bfrak(x / theta) / int Bfrak``."""

    composed: ComposedB
    theta: float
    normalizer: float
    l1_ratio: float
    normalizer_half_width: float = 0.0
    mass: Optional[MassEstimate] = field(default=None, compare=False)

    @property
    def n(self):
        return self.composed.n

    def __call__(self, X):
        X, single = _as_points(X, self.n)
        v = eval_composed(self.composed, X / self.theta)
        out = v / (self.theta ** self.n * self.normalizer)
        return float(out[0]) if single else out

    def support_box(self):
        """Support half-widths of ``B_theta`` (compact recipes), else None."""
        box = composed_support_box(self.composed)
        return None if box is None else self.theta * box

    def rescaled(self, theta: float) -> "ScaledAI":
        """Same kernel at another scale; the normalizer does not depend on theta."""
        if not theta > 0:
            raise BFunctionError("theta must be positive")
        return ScaledAI(self.composed, float(theta), self.normalizer, self.l1_ratio,
                        self.normalizer_half_width, self.mass)

    def tail_mass(self, delta: float, tol: float = 1e-9) -> float:
        """``int_{|y| > delta} |B_theta(y)| dy`` (n = 1, Euclidean ball)."""
        if self.n != 1:
            raise BFunctionError("exact tail mass is available for n = 1 only")
        from .bfunction import tail_mass

        B = build_bfunction(self.composed.spec, 1.0, self.composed.recipe.variant)
        return tail_mass(B, self.theta, delta, tol)


def make_approximate_identity(cb: ComposedB, theta: float, tol: float = 1e-9,
                              budget: int = 1_000_000, seed: int = 0, workers: int = 1) -> ScaledAI:
    if not theta > 0:
        raise BFunctionError("theta must be positive")
    m = estimate_integrals(cb, budget=budget, seed=seed, workers=workers)
    floor = max(tol, m.signed_half_width)
    if abs(m.signed) <= floor:
        raise VanishingIntegralError(
            f"integral of composed {cb.spec.label} is {m.signed:.3g}, within {floor:.3g} of 0"
        )
    return ScaledAI(cb, float(theta), m.signed, m.abs / abs(m.signed), m.signed_half_width, m)


# -- grid export ----------------------------------------------------------


def grid_values(cb: ComposedB, res: int, box=None):
    """Uniform lattice over the support/truncation box.

    Returns ``(axes, points, values)`` with points in lexicographic order,
    last coordinate fastest.
    """
    if cb.n not in (1, 2, 3):
        raise BFunctionError("grid export supports n in {1, 2, 3}")
    if res < 2:
        raise BFunctionError("grid resolution must be at least 2")
    box = truncation_box(cb) if box is None else np.broadcast_to(np.asarray(box, float), (cb.n,))
    axes = [np.linspace(-b, b, res) for b in box]
    mesh = np.meshgrid(*axes, indexing="ij")
    P = np.stack([m.ravel() for m in mesh], axis=1)
    return axes, P, eval_composed(cb, P)


def write_grid_csv(cb: ComposedB, path, res: int, box=None, config: Optional[dict] = None):
    """Write the lattice as CSV ``x1,...,xn,value`` (shortest round-trip floats).

    ``config`` is embedded as a leading ``#`` comment line when given.
    """
    _, P, v = grid_values(cb, res, box)
    with open(path, "w", newline="") as fh:
        if config is not None:
            fh.write("# " + json.dumps(config, sort_keys=True) + "\n")
        w = csv.writer(fh, lineterminator="\n")
        w.writerow([f"x{i + 1}" for i in range(cb.n)] + ["value"])
        for row, val in zip(P, v):
            w.writerow([repr(float(t)) for t in row] + [repr(float(val))])
    return P, v


def iso_levels(cb: ComposedB, exponents: Sequence[int] = (1, 2, 3, 4)) -> dict:
    """Isosurface levels ``B(0, B(0, 1)) * 10^-j``.

    The reference value is the two-fold nesting at the origin whatever n
    is.  For n = 3 it can exceed the actual peak (RePU q = 4 gives
    7.7e-2 against 2.1e-5), so ``peak_levels = Bfrak(0) * 10^-j`` and
    the count of levels above the peak are reported too.
    """
    peak = composed_peak(cb)
    ref = composed_peak(cb, min(2, cb.n))
    levels = [ref * 10.0 ** (-j) for j in exponents]
    return {
        "peak": peak,
        "two_fold_value": ref,
        "exponents": list(exponents),
        "levels": levels,
        "peak_levels": [peak * 10.0 ** (-j) for j in exponents],
        "levels_above_peak": int(sum(v > peak for v in levels)),
    }


def write_levels(cb: ComposedB, path, exponents: Sequence[int] = (1, 2, 3, 4), config=None) -> dict:
    info = iso_levels(cb, exponents)
    if config is not None:
        info = dict(info, config=config)
    with open(path, "w") as fh:
        json.dump(info, fh, indent=2)
    return info

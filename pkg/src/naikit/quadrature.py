"""Partitions of [-1, 1], tensor Riemann sums and moduli of continuity."""

from __future__ import annotations

import math
from dataclasses import dataclass
from typing import Callable, Optional, Sequence

import numpy as np

__all__ = [
    "QuadratureError",
    "Partition1D",
    "ModulusEstimate",
    "uniform_partition",
    "riemann_sum",
    "modulus_of_continuity",
    "quadrature_error_bound",
]


class QuadratureError(ValueError):
    pass


@dataclass(frozen=True, eq=False)
class Partition1D:
    """Knots ``-1 = z_1 < ... < z_{m+1} = 1`` and tags ``z_j <= xi_j <= z_{j+1}``."""

    knots: np.ndarray
    points: np.ndarray

    def __post_init__(self):
        z = np.asarray(self.knots, dtype=float)
        xi = np.asarray(self.points, dtype=float)
        if z.ndim != 1 or len(z) < 2:
            raise QuadratureError("a partition needs at least two knots")
        if z[0] != -1.0 or z[-1] != 1.0:
            raise QuadratureError("partition must span [-1, 1]")
        if np.any(np.diff(z) <= 0):
            raise QuadratureError("knots must be strictly increasing")
        if xi.shape != (len(z) - 1,):
            raise QuadratureError("need exactly one tag per cell")
        if np.any(xi < z[:-1]) or np.any(xi > z[1:]):
            raise QuadratureError("each tag must lie in its cell")
        object.__setattr__(self, "knots", z)
        object.__setattr__(self, "points", xi)

    @property
    def m(self) -> int:
        return len(self.points)

    @property
    def widths(self) -> np.ndarray:
        return np.diff(self.knots)

    @property
    def norm(self) -> float:
        """``|P|``, the largest cell width."""
        return float(self.widths.max())


def uniform_partition(m: int, rule: str = "midpoint") -> Partition1D:
    """``m`` equal cells of width ``2/m`` tagged at midpoints (or left/right ends)."""
    if int(m) != m or m < 1:
        raise QuadratureError("m must be a positive integer")
    m = int(m)
    z = np.linspace(-1.0, 1.0, m + 1)
    z[0], z[-1] = -1.0, 1.0
    if rule == "midpoint":
        xi = 0.5 * (z[:-1] + z[1:])
    elif rule == "left":
        xi = z[:-1].copy()
    elif rule == "right":
        xi = z[1:].copy()
    else:
        raise QuadratureError(f"unknown rule {rule!r}")
    return Partition1D(z, xi)


def tensor_nodes(grids: Sequence[Partition1D]):
    """Tensor tags (lexicographic, last axis fastest) and their cell volumes."""
    mesh = np.meshgrid(*[g.points for g in grids], indexing="ij")
    P = np.stack([t.ravel() for t in mesh], axis=1)
    wmesh = np.meshgrid(*[g.widths for g in grids], indexing="ij")
    W = np.prod(np.stack([t.ravel() for t in wmesh], axis=1), axis=1)
    return P, W


def riemann_sum(f: Callable, grids) -> float:
    """``sum f(xi_{j1}, ..., xi_{jn}) prod_i (z_{ji+1} - z_{ji})``.

    ``f`` maps an ``(M, n)`` array to ``M`` values, as do all evaluators
    here.  Summation order is lexicographic and compensated
    (``math.fsum``), hence reproducible.
    """
    if isinstance(grids, Partition1D):
        grids = [grids]
    P, W = tensor_nodes(grids)
    vals = np.asarray(f(P), dtype=float).reshape(-1)
    return math.fsum(vals * W)


@dataclass(frozen=True)
class ModulusEstimate:
    h: float
    value: float
    method: str
    lower_estimate: bool = False


def modulus_of_continuity(
    f: Callable,
    h: float,
    mode: str = "lipschitz",
    budget: int = 10_000,
    seed: int = 0,
    lipschitz: Optional[float] = None,
    n: int = 1,
    domain: float = 1.0,
) -> ModulusEstimate:
    """``omega(f, h) = sup_{|z| <= h} sup_x |f(x + z) - f(x)|`` on ``[-domain, domain]^n``.

    ``lipschitz`` mode returns ``L h``.  ``sampled`` mode maximizes over
    ``budget`` random pairs (half of them with ``|z| = h`` exactly) and is a
    lower estimate by construction.
    """
    if h < 0:
        raise QuadratureError("h must be nonnegative")
    if mode == "lipschitz":
        if lipschitz is None or lipschitz < 0:
            raise QuadratureError("lipschitz mode needs a nonnegative constant")
        return ModulusEstimate(float(h), float(lipschitz) * float(h), "lipschitz")
    if mode != "sampled":
        raise QuadratureError(f"unknown mode {mode!r}")
    if h == 0:
        return ModulusEstimate(0.0, 0.0, "sampled", True)
    rng = np.random.default_rng(seed)
    d = rng.normal(size=(budget, n))
    d /= np.linalg.norm(d, axis=1, keepdims=True)
    r = np.full(budget, float(h))
    half = budget // 2
    r[half:] *= rng.random(budget - half) ** (1.0 / n)
    z = d * r[:, None]
    lo = np.maximum(-domain, -domain - z)
    hi = np.minimum(domain, domain - z)
    x = lo + (hi - lo) * rng.random((budget, n))
    g = lambda P: np.asarray(f(P), dtype=float).reshape(-1)
    val = float(np.max(np.abs(g(x + z) - g(x))))
    return ModulusEstimate(float(h), val, "sampled", True)


def quadrature_error_bound(n: int, omega_at_partition_norm: float) -> float:
    """``2^n omega(f, |P|)``."""
    if n < 0 or omega_at_partition_norm < 0:
        raise QuadratureError("inputs must be nonnegative")
    return (2.0 ** n) * float(omega_at_partition_norm)

"""Built-in target functions on [-1, 1]^n.

Every target maps an ``(M, n)`` array to ``M`` values, vanishes outside
``[-1, 1]^n`` and carries a Lipschitz constant and sup norm so error
budgets stay computable.
"""

from __future__ import annotations

import csv
import math
from dataclasses import dataclass, field
from typing import Callable

import numpy as np

__all__ = ["Target", "hat", "radial_bump", "sine_bump", "constant", "zero", "sampled", "get_target", "TARGETS"]


@dataclass(frozen=True, eq=False)
class Target:
    name: str
    n: int
    func: Callable
    lipschitz: float
    sup_norm: float
    params: dict = field(default_factory=dict)

    def __call__(self, X):
        X = np.asarray(X, dtype=float)
        if X.ndim == 1:
            X = X.reshape(-1, self.n) if self.n > 1 else X[:, None]
        if X.shape[1] != self.n:
            raise ValueError(f"target {self.name} expects dimension {self.n}")
        return np.asarray(self.func(X), dtype=float)

    def modulus(self, h: float) -> float:
        """Upper bound ``L h`` on the modulus of continuity."""
        return self.lipschitz * float(h)

    def describe(self) -> dict:
        return {"name": self.name, "n": self.n, "lipschitz": self.lipschitz,
                "sup_norm": self.sup_norm, **self.params}


def _inside(X):
    return np.all(np.abs(X) <= 1.0, axis=1)


def hat(n: int = 1) -> Target:
    """``prod_i max(0, 1 - |x_i|)``; 1-Lipschitz in 1-D."""
    f = lambda X: np.prod(np.maximum(0.0, 1.0 - np.abs(X)), axis=1)
    return Target("hat", n, f, lipschitz=1.0 if n == 1 else math.sqrt(n), sup_norm=1.0)


def radial_bump(n: int = 2) -> Target:
    """``cos^2(pi r / 2)`` for ``r = |x|_2 < 1``; Lipschitz ``pi / 2``."""

    def f(X):
        r = np.linalg.norm(X, axis=1)
        return np.where(r < 1.0, np.cos(0.5 * np.pi * np.minimum(r, 1.0)) ** 2, 0.0)

    return Target("radial_bump", n, f, lipschitz=math.pi / 2.0, sup_norm=1.0)


def sine_bump(n: int = 1) -> Target:
    """``prod_i sin(pi x_i)`` on the box, zero outside."""

    def f(X):
        return np.where(_inside(X), np.prod(np.sin(np.pi * X), axis=1), 0.0)

    return Target("sine_bump", n, f, lipschitz=math.pi * math.sqrt(n), sup_norm=1.0)


def constant(n: int = 1, c: float = 1.0) -> Target:
    """``c`` on the closed box, zero outside; its modulus on the box is 0."""
    c = float(c)
    f = lambda X: np.where(_inside(X), c, 0.0)
    return Target("constant", n, f, lipschitz=0.0, sup_norm=abs(c), params={"c": c})


def zero(n: int = 1) -> Target:
    return Target("zero", n, lambda X: np.zeros(len(X)), lipschitz=0.0, sup_norm=0.0)


def sampled(path, lipschitz: float) -> Target:
    """1-D data ``(x, f(x))`` from a CSV with a header row.

    Linear interpolation between samples, nearest value beyond the data
    range inside [-1, 1], zero outside.  ``lipschitz`` is user-declared.
    """
    with open(path, newline="") as fh:
        rows = [r for r in csv.reader(fh) if r and not r[0].startswith("#")]
    data = np.array([[float(a), float(b)] for a, b in rows[1:]])
    order = np.argsort(data[:, 0])
    xs, ys = data[order, 0], data[order, 1]

    def f(X):
        x = X[:, 0]
        return np.where(np.abs(x) <= 1.0, np.interp(x, xs, ys), 0.0)

    return Target("sampled", 1, f, lipschitz=float(lipschitz), sup_norm=float(np.max(np.abs(ys))),
                  params={"path": str(path)})


TARGETS = {
    "hat": hat,
    "radial_bump": radial_bump,
    "sine_bump": sine_bump,
    "constant": constant,
    "zero": zero,
}


def get_target(name: str, n: int, **kw) -> Target:
    if name == "sampled":
        return sampled(kw["path"], kw["lipschitz"])
    try:
        return TARGETS[name](n, **kw)
    except KeyError:
        raise ValueError(f"unknown target {name!r}; choose from {sorted(TARGETS) + ['sampled']}") from None

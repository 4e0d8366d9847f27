"""Compiled vs numpy kernels: nested B-function evaluation and kernel sums.

    python benchmarks/bench_kernels.py [--repeat 5]
"""

import argparse
import time

import numpy as np

from naikit import kernels
from naikit.activations import make_activation
from naikit.composed import ComposedB


def _best(fn, repeat):
    best = float("inf")
    for _ in range(repeat):
        t0 = time.perf_counter()
        fn()
        best = min(best, time.perf_counter() - t0)
    return best


def main():
    ap = argparse.ArgumentParser()
    ap.add_argument("--repeat", type=int, default=5)
    args = ap.parse_args()
    if not kernels.compiled_available():
        print("compiled kernels not built; only the numpy backend is available")
    rng = np.random.default_rng(0)
    cases = []
    for name, kw, n in (("repu", {"q": 1}, 2), ("sigmoid", {}, 2), ("gelu", {}, 3), ("mish", {}, 2)):
        spec = make_activation(name, **kw)
        cb = ComposedB.of(spec, n)
        c, o = cb.recipe.coefs, cb.recipe.offsets
        X = rng.uniform(-3, 3, (200_000, n))
        cases.append((f"composed_eval {spec.label} n={n} M=2e5",
                      lambda s=spec, c=c, o=o, X=X: kernels.composed_eval(s, c, o, X)))
        P = rng.uniform(-1, 1, (256, n))
        C = rng.uniform(-1, 1, (2048, n))
        w = rng.normal(size=2048)
        cases.append((f"kernel_sum    {spec.label} n={n} 256x2048",
                      lambda s=spec, c=c, o=o, P=P, C=C, w=w: kernels.kernel_sum(s, c, o, P, C, w, 10.0)))
    prev = kernels.backend()
    print(f"{'case':<44}{'python [s]':>12}{'cython [s]':>12}{'speedup':>10}")
    for label, fn in cases:
        kernels.use_backend("python")
        tp = _best(fn, args.repeat)
        if kernels.compiled_available():
            kernels.use_backend("cython")
            tc = _best(fn, args.repeat)
            print(f"{label:<44}{tp:>12.4f}{tc:>12.4f}{tp / tc:>10.1f}")
        else:
            print(f"{label:<44}{tp:>12.4f}{'-':>12}{'-':>10}")
    kernels.use_backend(prev if kernels.compiled_available() else "python")


if __name__ == "__main__":
    main()

"""Acceptance criteria 1-11, at their stated tolerances and runtime limits.

Each test records one PASS/FAIL line, printed in the pytest terminal
summary (and to stdout when this file is run as a script).
"""

import time
from contextlib import contextmanager

import numpy as np
import pytest

from conftest import ACCEPTANCE
from naikit.activations import elu_gamma, generalized_sigmoid, make_activation
from naikit.bfunction import build_bfunction, signed_integral
from naikit.composed import ComposedB, composed_peak, estimate_integrals, grid_values, write_levels
from naikit.network import (
    build_mc_network,
    build_quadrature_network_1d,
    default_coupling,
    error_budget,
    eval_network,
    export_network,
    import_network,
    mc_formula,
    quadrature_formula,
)
from naikit.quadrature import uniform_partition
from naikit.targets import hat, radial_bump, sine_bump
from naikit import verification as V

H_GRID = (0.25, 0.5, 1.0, 2.0)


@contextmanager
def criterion(num, title, limit):
    t0 = time.perf_counter()
    detail = {"text": ""}
    ok = False
    try:
        yield detail
        ok = True
    finally:
        dt = time.perf_counter() - t0
        slow = dt > limit
        flag = "PASS" if ok and not slow else "FAIL"
        extra = f" [runtime {dt:.1f}s > {limit}s]" if slow else ""
        line = f"criterion {num:>2} {flag}: {title} ({dt:.1f}s) {detail['text']}{extra}"
        ACCEPTANCE[num] = line
        print(line)
    assert dt <= limit, f"runtime {dt:.1f}s exceeds {limit}s"


def test_c01_closed_form_integrals():
    specs = [
        (make_activation("sigmoid"), lambda h: h),
        (make_activation("tanh"), lambda h: h),
        (make_activation("arctan"), lambda h: h),
        (generalized_sigmoid(L=2.0, ell=-1.0, decay_alpha=1.0), lambda h: h),
        (generalized_sigmoid(L=1.0, ell=0.0, base="logistic"), lambda h: h),
        (make_activation("gelu"), lambda h: h * h),
        (make_activation("silu"), lambda h: h * h),
        (make_activation("elu", alpha=1.0), lambda h: h * h / 5.0),
        (make_activation("elu", alpha=2.5), lambda h: h * h / elu_gamma(2.5)),
    ]
    with criterion(1, "closed-form signed integrals within 1e-6", 30) as d:
        worst = 0.0
        for spec, exact in specs:
            for h in H_GRID:
                got = signed_integral(build_bfunction(spec, h), 1e-8)
                err = abs(got - exact(h))
                worst = max(worst, err)
                assert err <= 1e-6, (spec.label, h, got)
        d["text"] = f"max error {worst:.2e}"


def test_c02_stated_bounds():
    with criterion(2, "stated GELU/SiLU/softplus bounds with 1e-9 slack", 30) as d:
        rep = V.check_stated_bounds(H_GRID, slack=1e-9)
        bad = [c.name for c in rep.failures]
        d["text"] = f"failed checks: {', '.join(bad)}" if bad else "all hold"
        assert rep.passed, rep.text()


def test_c03_irwin_hall():
    with criterion(3, "RePU B equals dilated Irwin-Hall density", 20) as d:
        rep = V.check_irwin_hall(5, tol=1e-8, h_grid=(0.5, 1.0, 2.0), n_points=10_000)
        d["text"] = f"max error {max(c.measured for c in rep.checks):.2e}"
        assert rep.passed, rep.text()


def test_c04_alternating_sum():
    with criterion(4, "alternating binomial sums vanish exactly", 1) as d:
        rep = V.check_alternating_sum(12)
        assert rep.passed, rep.text()
        assert all(c.measured == 0 for c in rep.checks)
        d["text"] = f"{len(rep.checks)} orders"


def test_c05_taylor_remainder():
    x = np.linspace(-3.0, 3.0, 20)
    with criterion(5, "unscaled B equals the remainder integral within 1e-8", 20) as d:
        r1 = V.check_taylor_remainder(make_activation("sigmoid"), 1, H_GRID, x, 1e-8)
        r2 = V.check_taylor_remainder(make_activation("gelu"), 2, H_GRID, x, 1e-8)
        d["text"] = f"max error {max(c.measured for c in r1.checks + r2.checks):.2e}"
        assert r1.passed and r2.passed, r1.text() + "\n" + r2.text()


def test_c06_ai_conditions():
    thetas = [2.0 ** -j for j in range(7)]
    with criterion(6, "approximate-identity conditions for sigmoid and ReLU", 60) as d:
        reps = [
            V.check_ai_conditions(ComposedB.of(make_activation(a, **kw), 1), thetas, 0.5, tol=1e-6,
                                  l1_tol=1e-4, tail_final=1e-3)
            for a, kw in (("sigmoid", {}), ("repu", {"q": 1}))
        ]
        d["text"] = "; ".join(f"{r.subject} final tail {r.config['tails'][-1]:.1e}" for r in reps)
        for r in reps:
            assert r.passed, r.text()


def test_c07_composed_mass():
    with criterion(7, "composed-B mass bounds by Monte-Carlo", 180) as d:
        parts = []
        for q in (1, 2):
            for n in (2, 3):
                m = estimate_integrals(ComposedB.of(make_activation("repu", q=q), n), budget=1_000_000, seed=11)
                parts.append(f"repu{q}/n{n}={m.signed:.4f}+-{m.signed_half_width:.4f}")
                assert m.signed <= 1.0 + 3.0 * m.signed_half_width
        m = estimate_integrals(ComposedB.of(make_activation("sigmoid"), 2), budget=1_000_000, seed=11)
        parts.append(f"sigmoid/n2={m.signed:.4f}+-{m.signed_half_width:.4f}")
        d["text"] = ", ".join(parts)
        assert abs(m.signed - 1.0) <= 3.0 * m.signed_half_width


def _hat_run(m):
    f = hat(1)
    theta = uniform_partition(m).norm ** 2
    B = build_bfunction(make_activation("repu", q=1), 1.0)
    net = build_quadrature_network_1d(f, B, theta, m)
    X = np.linspace(-1.0, 1.0, 4001)[:, None]
    err = float(np.max(np.abs(eval_network(net, X) - f(X))))
    delta, pnorm = default_coupling(theta)
    budget = error_budget(f.modulus, delta, pnorm, B, theta, f.sup_norm, 1)
    return err, budget.total


def test_c08_deterministic_convergence():
    with criterion(8, "1-D quadrature convergence with theta = |P|^2 and budget soundness", 60) as d:
        ms = (32, 64, 128, 256, 512)
        runs = {m: _hat_run(m) for m in ms}
        ratios = {m: e / b for m, (e, b) in runs.items()}
        d["text"] = "err/budget " + ", ".join(f"m={m}:{r:.2f}" for m, r in ratios.items()) + \
                    f"; err512/err32 = {runs[512][0] / runs[32][0]:.3f}"
        assert runs[512][0] < 0.25 * runs[32][0]
        for m, (e, b) in runs.items():
            assert e <= 4.0 * b, (m, e, b)


def test_c09_rate():
    with criterion(9, "Monte-Carlo rate with delta = 1/sqrt(N), theta = delta^2", 600) as d:
        cb = ComposedB.of(make_activation("repu", q=1), 1)
        res = V.rate_study(hat(1), cb, [2 ** 6, 2 ** 8, 2 ** 10, 2 ** 12, 2 ** 14], trials=16, seed=2024,
                           method="network")
        d["text"] = f"slope {res.slope:.3f}, median ratio {res.median_ratio():.2f}, " \
                    f"failure fraction at N=2^14 {res.failure_fraction[-1]:.2f}"
        assert not res.degenerate
        assert -0.7 <= res.slope <= -0.3
        assert res.median_ratio() >= 8.0


def _rel(a, b):
    return float(np.linalg.norm(a - b) / np.linalg.norm(b))


def test_c10_structural_fidelity():
    rng = np.random.default_rng(5)
    with criterion(10, "networks equal their formulas and survive JSON round-trip", 60) as d:
        worst = 0.0
        f1 = sine_bump(1)
        for act in (("repu", {"q": 2}), ("sigmoid", {}), ("gelu", {})):
            spec = make_activation(act[0], **act[1])
            B = build_bfunction(spec, 1.0)
            P = uniform_partition(96)
            net = build_quadrature_network_1d(f1, B, 0.1, P)
            X = rng.uniform(-1.2, 1.2, (1000, 1))
            ref = quadrature_formula(f1, B, 0.1, P, X, net.metadata["normalizer"])
            out = eval_network(net, X)
            worst = max(worst, _rel(out, ref))
            assert np.array_equal(eval_network(import_network(export_network(net)), X), out)
        for act, n, f in ((("repu", {"q": 1}), 2, radial_bump(2)), (("sigmoid", {}), 2, radial_bump(2)),
                          (("repu", {"q": 1}), 3, hat(3))):
            cb = ComposedB.of(make_activation(act[0], **act[1]), n)
            net = build_mc_network(f, cb, 0.2, 1500, seed=3, budget=200_000)
            X = rng.uniform(-1.0, 1.0, (1000, n))
            ref = mc_formula(f, cb, 0.2, 1500, 3, net.metadata["normalizer"], X, skip_outside_support=False)
            out = eval_network(net, X)
            worst = max(worst, _rel(out, ref))
            assert np.array_equal(eval_network(import_network(export_network(net)), X), out)
        d["text"] = f"max relative error {worst:.2e}"
        assert worst <= 1e-10


def test_c11_grid_emission(tmp_path):
    with criterion(11, "3-D RePU q=4 lattice and levels file", 60) as d:
        spec = make_activation("repu", q=4)
        cb = ComposedB.of(spec, 3)
        res = 33
        axes, P, v = grid_values(cb, res)
        assert P.shape == (res ** 3, 3)
        info = write_levels(cb, tmp_path / "levels.json")
        # independent reference: Irwin-Hall density at 0 from iterated convolution
        f5 = float(V.irwin_hall_oracle(5)(0.0))
        c1 = f5  # B(0, 1)
        c2 = c1 ** 4 * f5  # B(0, c1) = c1^q f_{q+1}(0)
        assert abs(info["two_fold_value"] - c2) <= 1e-14 * c2 + 1e-15
        want = [c2 * 10.0 ** -j for j in (1, 2, 3, 4)]
        assert np.allclose(info["levels"], want, rtol=1e-12, atol=0)
        c3 = c2 ** 4 * f5
        assert abs(info["peak"] - c3) <= 1e-12 * c3
        assert abs(float(v.max()) - composed_peak(cb)) <= 1e-12 * c3
        assert np.allclose(P[int(np.argmax(v))], 0.0)
        d["text"] = f"B(0,B(0,1)) = {c2:.6g}, peak {c3:.3g}, levels above peak {info['levels_above_peak']}"


if __name__ == "__main__":
    import sys

    sys.exit(pytest.main([__file__, "-q", "-s"]))

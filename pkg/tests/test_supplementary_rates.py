"""Convergence under couplings where the error terms actually shrink.

These complement acceptance criteria 8 and 9, which prescribe
``theta = |P|^2`` and ``theta = 1/N``; see the decisions log for why
those couplings cannot meet their thresholds.
"""

import numpy as np

from naikit.activations import make_activation
from naikit.bfunction import build_bfunction
from naikit.composed import ComposedB
from naikit.network import build_quadrature_network_1d, default_coupling, error_budget, eval_network
from naikit.quadrature import uniform_partition
from naikit.targets import hat
from naikit.verification import rate_study


def test_quadrature_sqrt_coupling_converges_within_budget():
    f = hat(1)
    B = build_bfunction(make_activation("repu", q=1), 1.0)
    X = np.linspace(-1.0, 1.0, 4001)[:, None]
    errs = {}
    for m in (32, 64, 128, 256, 512):
        pn = uniform_partition(m).norm
        theta = np.sqrt(pn)
        net = build_quadrature_network_1d(f, B, theta, m)
        err = float(np.max(np.abs(eval_network(net, X) - f(X))))
        delta, _ = default_coupling(theta)
        assert err <= 4.0 * error_budget(f.modulus, delta, pn, B, theta, 1.0, 1).total
        errs[m] = err
    assert errs[512] < 0.25 * errs[32]


def test_mc_rate_fixed_theta():
    cb = ComposedB.of(make_activation("repu", q=1), 1)
    res = rate_study(hat(1), cb, [2 ** 6, 2 ** 8, 2 ** 10, 2 ** 12, 2 ** 14], trials=16, seed=2024,
                     theta_fn=lambda N: 0.05)
    assert -0.7 <= res.slope <= -0.3
    assert res.median_ratio() >= 8.0

import math

import numpy as np
import pytest
from hypothesis import given, strategies as st

from naikit.activations import custom_activation, list_catalog, make_activation
from naikit.composed import ComposedB
from naikit.targets import hat, zero
from naikit import verification as V


@pytest.mark.parametrize("N,rng,p,want", [(10_000, 1.0, 0.05, math.sqrt(math.log(40) / 20_000))])
def test_hoeffding_example(N, rng, p, want):
    assert V.hoeffding_epsilon(N, rng, p) == pytest.approx(want, rel=1e-15)
    assert want == pytest.approx(0.01358, abs=1e-5)


@given(st.integers(1, 10 ** 6), st.floats(0.1, 10), st.floats(1e-6, 0.9))
def test_hoeffding_scaling(N, r, p):
    assert V.hoeffding_epsilon(4 * N, r, p) == pytest.approx(V.hoeffding_epsilon(N, r, p) / 2, rel=1e-12)


def test_hoeffding_cancellation():
    assert V.hoeffding_epsilon(100, 3.0, 2 * math.exp(-2)) == pytest.approx(0.3, rel=1e-12)


@pytest.mark.parametrize("p", [0.0, 1.0, -0.1])
def test_hoeffding_invalid_p(p):
    with pytest.raises(ValueError):
        V.hoeffding_epsilon(10, 1.0, p)


def test_alternating_sum_examples():
    assert -3 + 12 - 9 == 0
    rep = V.check_alternating_sum(20)
    assert rep.passed and len(rep.checks) == 20
    with pytest.raises(ValueError):
        V.check_alternating_sum(21)


def test_report_json_roundtrip():
    rep = V.check_irwin_hall(2, n_points=200)
    back = V.VerificationReport.from_json(rep.to_json())
    assert back.to_dict() == rep.to_dict()
    assert back.passed == rep.passed


def test_check_semantics():
    assert V.Check.make("a", "r", 1.0, 1.0 + 1e-9, "equal", 1e-8).passed
    assert not V.Check.make("a", "r", 2.0, 1.0, "upper", 0.5).passed
    assert not V.Check.make("a", "r", float("nan"), None, "finite").passed
    assert V.Check.make("a", "r", 3.0, 3, "exact").passed


def test_nai_catalog_passes():
    for spec in list_catalog():
        assert V.verify_nai(spec, (0.5, 1.0), 1e-6).passed, spec.label


def test_nai_integration_failure_is_a_failed_check():
    # heavy tail: integrable only in the improper sense, quadrature cannot certify it
    c = custom_activation(lambda t: 1.0 / (1.0 + np.abs(t)) ** 0.5, 0, name="heavy")
    rep = V.verify_nai(c, (1.0,), 1e-8)
    assert not rep.passed


def test_taylor_quadratic_exact():
    sq = custom_activation(lambda t: t * t, 2, name="square", derivatives={2: lambda t: 2.0 + 0 * t})
    val = V.taylor_remainder_form(lambda t: 2.0, 2, 0.3, 0.7)
    assert val == pytest.approx(2 * 0.09, rel=1e-14)
    rep = V.check_taylor_remainder(sq, 2, (0.3, 1.0), np.linspace(-1, 1, 5), 1e-12)
    assert rep.passed


def test_taylor_examples():
    assert V.check_taylor_remainder(make_activation("sigmoid"), 1, (0.5,), [0.0], 1e-8).passed
    assert V.check_taylor_remainder(make_activation("gelu"), 2, (1.0,), [0.3], 1e-8).passed


def test_ai_repu_compact_tails():
    cb = ComposedB.of(make_activation("repu", q=1), 1)
    rep = V.check_ai_conditions(cb, [1.0, 0.5, 0.25], 0.6)
    tails = rep.config["tails"]
    assert tails[0] > 0 and tails[1] == 0.0 and tails[2] == 0.0 and rep.passed


def test_ai_gelu_l1_constant():
    cb = ComposedB.of(make_activation("gelu"), 1)
    rep = V.check_ai_conditions(cb, [1.0, 0.5, 0.25], 0.5)
    assert rep.passed
    assert rep.config["l1_norms"][0] <= 3.7


def test_ai_thetas_validated():
    cb = ComposedB.of(make_activation("sigmoid"), 1)
    with pytest.raises(ValueError):
        V.check_ai_conditions(cb, [0.5, 1.0], 0.5)


def test_general_framework_sigmoid():
    rep = V.check_general_framework(make_activation("sigmoid"), 1)
    assert rep.passed and rep.config["M"] == pytest.approx(0.25)
    assert rep.config["N"] == pytest.approx(0.25)


def test_general_framework_gelu_halving():
    rep = V.check_general_framework(make_activation("gelu"), 2, (1.0, 0.5))
    assert rep.passed
    l1 = [c.measured for c in rep.checks if c.name.startswith("l1")]
    assert l1[1] <= l1[0] / 4 * 1.25


def test_screening_rejects_repu():
    with pytest.raises(V.ScreeningError):
        V.general_framework_constants(make_activation("repu", q=1), 2)


def test_rate_study_degenerate():
    cb = ComposedB.of(make_activation("repu", q=1), 1)
    res = V.rate_study(zero(1), cb, [64, 256], trials=8)
    assert res.degenerate and res.slope is None
    assert all(e == 0 for row in res.errors for e in row)


def test_rate_study_deterministic_and_methods_agree():
    cb = ComposedB.of(make_activation("repu", q=1), 1)
    a = V.rate_study(hat(1), cb, [64, 256], trials=8, seed=3, theta_fn=lambda N: 0.1)
    b = V.rate_study(hat(1), cb, [64, 256], trials=8, seed=3, theta_fn=lambda N: 0.1, method="network")
    np.testing.assert_allclose(a.errors, b.errors, rtol=1e-9)
    c = V.rate_study(hat(1), cb, [64, 256], trials=8, seed=3, theta_fn=lambda N: 0.1, workers=3)
    assert a.errors == c.errors
    assert all(e >= 0 for row in a.errors for e in row) and math.isfinite(a.slope)


def test_failure_fraction_stabilizes():
    cb = ComposedB.of(make_activation("repu", q=1), 1)
    fr = [V.rate_study(hat(1), cb, [256], trials=t, seed=1, theta_fn=lambda N: 0.1, c_prime=3.0).failure_fraction[0]
          for t in (64, 256)]
    assert abs(fr[0] - fr[1]) < 0.15


def test_rate_study_warns_few_trials():
    cb = ComposedB.of(make_activation("repu", q=1), 1)
    res = V.rate_study(hat(1), cb, [64, 128], trials=1, theta_fn=lambda N: 0.1)
    assert any("trial" in w for w in res.warnings)


def test_verify_all_passes():
    assert V.verify_all(1e-6).passed

import math

import numpy as np
import pytest
from hypothesis import given, strategies as st

from naikit.quadrature import (
    Partition1D,
    QuadratureError,
    modulus_of_continuity,
    quadrature_error_bound,
    riemann_sum,
    tensor_nodes,
    uniform_partition,
)
from naikit.targets import constant, get_target, hat, radial_bump, sampled


def test_uniform_partition():
    P = uniform_partition(4)
    assert P.knots.tolist() == [-1.0, -0.5, 0.0, 0.5, 1.0]
    assert P.points.tolist() == [-0.75, -0.25, 0.25, 0.75]
    assert P.norm == 0.5
    assert uniform_partition(3, "left").points[0] == -1.0


@pytest.mark.parametrize("knots,pts", [([-1, 0.5], [0.0]), ([-1, 0, 1], [0.5]), ([-1, 0, 1], [0.5, 0.2]),
                                       ([-1, 1, 0, 1], [0, 0.5, 0.5])])
def test_invalid_partitions(knots, pts):
    with pytest.raises(QuadratureError):
        Partition1D(np.array(knots, float), np.array(pts, float))


def test_riemann_sum_linear_exact():
    f = lambda X: 3.0 * X[:, 0] + 1.0
    assert riemann_sum(f, uniform_partition(7)) == pytest.approx(2.0, abs=1e-14)


def test_tensor_sum_2d():
    P = uniform_partition(40)
    v = riemann_sum(lambda X: X[:, 0] ** 2 * X[:, 1] ** 2, [P, P])
    assert v == pytest.approx((2 / 3) ** 2, rel=2e-3)
    nodes, W = tensor_nodes([P, uniform_partition(3)])
    assert nodes.shape == (120, 2) and math.fsum(W) == pytest.approx(4.0)


@given(st.integers(1, 200))
def test_riemann_error_bound(m):
    f = hat(1)
    P = uniform_partition(m)
    err = abs(riemann_sum(f, P) - 1.0)
    assert err <= quadrature_error_bound(1, f.modulus(P.norm)) + 1e-14


@given(st.floats(1e-3, 0.5), st.integers(0, 100))
def test_sampled_modulus_is_lower_estimate(h, seed):
    f = hat(1)
    est = modulus_of_continuity(f, h, "sampled", budget=500, seed=seed)
    assert est.lower_estimate and est.value <= h + 1e-12


def test_modulus_lipschitz_mode():
    assert modulus_of_continuity(None, 0.25, lipschitz=2.0).value == 0.5
    with pytest.raises(QuadratureError):
        modulus_of_continuity(None, 0.25)


def test_targets():
    assert hat(1)(np.array([0.0]))[0] == 1.0
    assert radial_bump(2)(np.array([[0.0, 0.0], [1.0, 0.0]])).tolist() == [1.0, 0.0]
    assert constant(2, 3.0)(np.array([[0.5, 0.5], [2.0, 0.0]])).tolist() == [3.0, 0.0]
    with pytest.raises(ValueError):
        get_target("nope", 1)


def test_sampled_target(tmp_path):
    p = tmp_path / "f.csv"
    p.write_text("x,f\n-1,0\n0,1\n1,0\n")
    f = sampled(p, 1.0)
    np.testing.assert_allclose(f(np.array([-0.5, 0.0, 0.25, 1.5])), [0.5, 1.0, 0.75, 0.0])

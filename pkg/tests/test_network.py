import json

import numpy as np
import pytest
from hypothesis import given, strategies as st

from naikit.activations import custom_activation, make_activation
from naikit.bfunction import build_bfunction
from naikit.composed import ComposedB
from naikit.network import (
    NetworkError,
    SchemaError,
    build_mc_network,
    build_quadrature_network_1d,
    compactify_target,
    draw_samples,
    error_budget,
    eval_network,
    export_network,
    import_network,
    mc_formula,
    quadrature_formula,
)
from naikit.quadrature import uniform_partition
from naikit.targets import hat, radial_bump, zero


@pytest.fixture(scope="module")
def relu_b():
    return build_bfunction(make_activation("repu", q=1), 1.0)


def test_single_cell_network(relu_b):
    # m = 1: width 2, tag 0, so N(x) = 2 f(0) B_theta(x)
    net = build_quadrature_network_1d(hat(1), relu_b, 0.5, 1)
    x = np.linspace(-1, 1, 9)[:, None]
    np.testing.assert_allclose(eval_network(net, x), 2.0 * relu_b(x[:, 0] / 0.5) / 0.5, atol=1e-15)


@given(st.integers(1, 60), st.floats(0.02, 1.0))
def test_quadrature_network_equals_formula(m, theta):
    B = build_bfunction(make_activation("sigmoid"), 1.0)
    f = hat(1)
    net = build_quadrature_network_1d(f, B, theta, m)
    X = np.linspace(-1.3, 1.3, 50)[:, None]
    ref = quadrature_formula(f, B, theta, uniform_partition(m), X, net.metadata["normalizer"])
    np.testing.assert_allclose(eval_network(net, X), ref, rtol=1e-11, atol=1e-12)


def test_neuron_count(relu_b):
    net = build_quadrature_network_1d(hat(1), relu_b, 0.1, 20)
    assert net.neuron_count == 60 == net.metadata["neuron_count"]


def test_zero_target(relu_b):
    net = build_quadrature_network_1d(zero(1), relu_b, 0.1, 10)
    assert np.all(eval_network(net, np.linspace(-1, 1, 11)[:, None]) == 0.0)


def test_bad_theta(relu_b):
    with pytest.raises(NetworkError):
        build_quadrature_network_1d(hat(1), relu_b, 0.0, 10)


def test_mc_network_matches_formula():
    cb = ComposedB.of(make_activation("repu", q=1), 2)
    f = radial_bump(2)
    net = build_mc_network(f, cb, 0.3, 500, seed=9, budget=100_000)
    X = np.random.default_rng(0).uniform(-1, 1, (200, 2))
    ref = mc_formula(f, cb, 0.3, 500, 9, net.metadata["normalizer"], X)
    np.testing.assert_allclose(eval_network(net, X), ref, rtol=1e-10, atol=1e-13)
    assert net.neuron_count == 500 * 2 * 3


def test_samples_deterministic():
    assert np.array_equal(draw_samples(10, 2, 3), draw_samples(10, 2, 3))


def test_json_roundtrip():
    cb = ComposedB.of(make_activation("sigmoid"), 2)
    net = build_mc_network(radial_bump(2), cb, 0.25, 64, seed=1, budget=50_000)
    text = export_network(net)
    back = import_network(text)
    X = np.random.default_rng(2).uniform(-1, 1, (50, 2))
    assert np.array_equal(eval_network(back, X), eval_network(net, X))
    assert export_network(back) == text
    doc = json.loads(text)
    assert {"version", "activation", "theta", "dims", "layers", "output_coefficients", "metadata"} <= set(doc)
    assert {"N", "seed", "recipe", "neuron_count"} <= set(doc["metadata"])


@pytest.mark.parametrize("mutate", [lambda d: d.pop("theta"), lambda d: d.update(version=99),
                                    lambda d: d["layers"][0].update(biases=[0.0]),
                                    lambda d: d.update(activation={"id": "nope"})])
def test_schema_errors(relu_b, mutate):
    d = json.loads(export_network(build_quadrature_network_1d(hat(1), relu_b, 0.2, 4)))
    mutate(d)
    with pytest.raises(SchemaError):
        import_network(json.dumps(d))


def test_custom_not_serializable():
    c = custom_activation(np.tanh, 1, name="t")
    B = build_bfunction(c, 1.0)
    net = build_quadrature_network_1d(hat(1), B, 0.2, 4)
    with pytest.raises(NetworkError):
        export_network(net)


def test_error_budget_terms(relu_b):
    f = hat(1)
    b = error_budget(f.modulus, 0.1, 0.05, relu_b, 0.02, 1.0, 1)
    assert b.modulus_delta == pytest.approx(0.1)
    assert b.modulus_partition == pytest.approx(0.1)
    assert b.tail == 0.0
    assert b.total == pytest.approx(0.2)


def test_compactify():
    g = lambda X: np.ones(len(X))
    f = compactify_target(g, 0.5, 1)
    v = f(np.array([[0.0], [0.5], [0.99], [1.0], [1.5]]))
    assert v[0] == 1.0 and v[1] == 1.0 and v[-1] == 0.0 and v[-2] == 0.0
    with pytest.raises(NetworkError):
        compactify_target(g, 0.8, 1)

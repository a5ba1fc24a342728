import math

import numpy as np
import pytest

from blocknet.gradcheck import max_relative_error
from blocknet.network import (
    RELU, SIGMOID, DenseLayer, LayerSpec, Network, evaluate, init_network, loss, mlp, mlp_specs,
    param_count,
)


def _layer(w, b, act=RELU, frozen=False):
    return DenseLayer(np.array(w, dtype=float), np.array(b, dtype=float), act, frozen)


def _randomize_biases(net, seed):
    rs = np.random.default_rng(seed)
    for layer in net.layers:
        layer.biases[:] = rs.normal(0.0, 0.1, layer.biases.shape)
    return net


def test_paper_sized_shapes():
    net = mlp((200, 100, 50), seed=1)
    assert [l.weights.shape for l in net.layers] == [(200, 1024), (100, 200), (50, 100), (1, 50)]
    assert all(not l.biases.any() for l in net.layers)


def test_init_deterministic():
    a, b = mlp((8, 4), 6, seed=5), mlp((8, 4), 6, seed=5)
    for la, lb in zip(a.layers, b.layers):
        assert np.array_equal(la.weights, lb.weights)
    c = mlp((8, 4), 6, seed=6)
    assert not np.array_equal(a.layers[0].weights, c.layers[0].weights)


def test_init_bound():
    w = mlp((200, 100, 50), seed=2).layers[0].weights
    bound = math.sqrt(6.0 / (1024 + 200))
    assert bound == pytest.approx(0.0700, abs=1e-4)
    assert np.abs(w).max() <= bound
    assert np.abs(w).max() > 0.95 * bound


def test_init_rejects_non_chaining():
    with pytest.raises(ValueError):
        init_network([LayerSpec(4, 3), LayerSpec(2, 1, SIGMOID)], 0)
    with pytest.raises(ValueError):
        LayerSpec(0, 3)


def test_network_requires_sigmoid_output():
    with pytest.raises(ValueError):
        Network([_layer([[1.0]], [0.0], RELU)])
    with pytest.raises(ValueError):
        Network([_layer([[1.0, 1.0]], [0.0], RELU), _layer([[1.0], [1.0]], [0.0, 0.0], SIGMOID)])


def test_zero_network_outputs_half():
    net = mlp((5, 3), 7, seed=0)
    for l in net.layers:
        l.weights[:] = 0.0
    prob, _ = net.forward(np.random.default_rng(0).normal(size=(4, 7)))
    assert np.array_equal(prob, np.full(4, 0.5))


def test_hand_computed_chain():
    w_out = -0.75
    net = Network([_layer([[1.0]], [0.0]), _layer([[w_out]], [0.0], SIGMOID)])
    prob, cache = net.forward(np.array([[2.0]]))
    assert cache.acts[1][0, 0] == 2.0
    assert prob[0] == pytest.approx(1.0 / (1.0 + math.exp(-w_out * 2.0)))


def test_batch_matches_single_examples():
    net = _randomize_biases(mlp((16, 8, 4), 12, seed=3), 0)
    x = np.random.default_rng(1).normal(size=(9, 12))
    batch, _ = net.forward(x)
    single = np.array([net.forward(row[None, :])[0][0] for row in x])
    np.testing.assert_allclose(batch, single, rtol=1e-12, atol=0)


def test_forward_shape_mismatch():
    with pytest.raises(ValueError):
        mlp((4,), 6, seed=0).forward(np.zeros((2, 5)))


def test_loss_values():
    assert loss(0.5, 1) == pytest.approx(math.log(2.0))
    assert loss(0.9, 0) == pytest.approx(-math.log(0.1))
    assert loss(0.9, 0) == pytest.approx(2.3026, abs=1e-4)
    assert loss(1.0 - 1e-15, 1) < 1e-11
    assert np.isfinite(loss(0.0, 1)) and np.isfinite(loss(1.0, 0))


def test_gradient_check_small_net():
    net = _randomize_biases(mlp((8, 4), 5, seed=11), 1)
    rs = np.random.default_rng(2)
    x, y = rs.normal(size=(5, 5)), rs.integers(0, 2, 5)
    assert max_relative_error(net, x, y) < 1e-6


def test_gradient_check_sigmoid_hidden_layers():
    net = init_network(mlp_specs((6, 3), 4, activation=SIGMOID), 3)
    rs = np.random.default_rng(3)
    assert max_relative_error(net, rs.normal(size=(4, 4)), rs.integers(0, 2, 4)) < 1e-6


def test_frozen_layers_get_no_gradient():
    net = mlp((6, 4), 3, seed=1)
    x, y = np.ones((2, 3)), np.array([0, 1])
    for l in net.layers:
        l.frozen = True
    _, cache = net.forward(x)
    assert net.backward(cache, y) == {}
    net.layers[2].frozen = False
    _, cache = net.forward(x)
    assert set(net.backward(cache, y)) == {2}


def test_duplicated_example_gives_same_gradient():
    net = _randomize_biases(mlp((6, 4), 3, seed=4), 2)
    x, y = np.array([[0.3, -1.0, 2.0]]), np.array([1])
    _, c1 = net.forward(x)
    g1 = net.backward(c1, y)
    _, c2 = net.forward(np.vstack([x, x]))
    g2 = net.backward(c2, np.array([1, 1]))
    for k in g1:
        np.testing.assert_allclose(g1[k][0], g2[k][0], rtol=1e-14)
        np.testing.assert_allclose(g1[k][1], g2[k][1], rtol=1e-14)


def test_backward_rejects_stale_cache():
    net = mlp((4,), 3, seed=0)
    _, cache = net.forward(np.zeros((3, 3)))
    with pytest.raises(ValueError):
        net.backward(cache, np.zeros(2))


def test_param_counts():
    assert param_count(mlp((60, 40, 20), seed=0)) == 64_781
    assert 1024 * 60 + 60 + 60 * 40 + 40 + 40 * 20 + 20 + 20 + 1 == 64_781
    assert param_count(mlp((200, 100, 50), seed=0)) == 230_201
    assert param_count(mlp((1,), 1, seed=0)) == 4


def test_evaluate_constant_half_network():
    net = mlp((3,), 4, seed=0)
    for l in net.layers:
        l.weights[:] = 0.0
    labels = np.array([0, 1] * 10)
    assert evaluate(net, np.zeros((20, 4)), labels) == 50.0


def test_evaluate_threshold():
    # a single sigmoid reading the first input: x=0 gives exactly 0.5 -> class 1
    net = Network([_layer([[1.0, 0.0]], [0.0], RELU), _layer([[1.0]], [0.0], SIGMOID)])
    x = np.array([[0.0, 0.0], [3.0, 0.0]])
    assert evaluate(net, x, np.array([1, 1])) == 0.0
    assert evaluate(net, x, np.array([0, 0])) == 100.0
    with pytest.raises(ValueError):
        evaluate(net, np.zeros((0, 2)), np.array([]))

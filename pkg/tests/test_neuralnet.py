import numpy as np
import pytest
from hypothesis import given, settings, strategies as st

from conftest import gradient_check_error, random_net
from rlrrt.neuralnet import (
    NeuralNet,
    TrainConfig,
    l2_loss_grad,
    load_weights,
    save_weights,
    train,
)


def test_zero_weights_give_zero_output():
    net = NeuralNet([4, 6, 3])
    for w in net.weights:
        w[...] = 0
    assert np.all(net.forward(np.ones(4)) == 0)


def test_identity_linear_layer():
    net = NeuralNet([3, 3])
    net.weights[0][...] = np.eye(3)
    x = np.array([1.5, -2.0, 0.25])
    assert np.array_equal(net.forward(x), x)


def test_dropout_seeded_determinism():
    net = NeuralNet([5, 20, 20, 1], dropout=0.5, seed=1)
    x = np.linspace(-1, 1, 5)
    a = net.forward(x, train_mode=True, rng=np.random.default_rng(9))
    b = net.forward(x, train_mode=True, rng=np.random.default_rng(9))
    assert np.array_equal(a, b)


def test_dropout_only_in_train_mode():
    net = NeuralNet([5, 50, 1], dropout=0.5, seed=1)
    x = np.linspace(-1, 1, 5)
    assert np.array_equal(net.forward(x), net.forward(x))
    rng = np.random.default_rng(0)
    samples = [net.forward(x, train_mode=True, rng=rng)[0] for _ in range(4000)]
    # inverted dropout keeps the expected output equal to the inference output
    assert np.mean(samples) == pytest.approx(net.forward(x)[0], abs=0.05 * max(1.0, abs(net.forward(x)[0])))
    assert np.std(samples) > 0


def test_dimension_mismatch():
    net = NeuralNet([3, 2])
    with pytest.raises(ValueError):
        net.forward(np.zeros(4))


@pytest.mark.parametrize("kw", [dict(layer_dims=[3]), dict(layer_dims=[3, 4, 1], dropout=1.0),
                                dict(layer_dims=[3, 1], output_activation="relu")])
def test_constructor_invariants(kw):
    with pytest.raises(ValueError):
        NeuralNet(**kw)


def test_loss_zero_at_target():
    net = NeuralNet([3, 4, 2], seed=3)
    x = np.random.default_rng(0).normal(size=(6, 3))
    loss, grads = l2_loss_grad(net, x, net.forward(x))
    assert loss == 0.0
    assert all(np.all(g == 0) for g in grads)


def test_scalar_linear_gradient_by_hand():
    net = NeuralNet([1, 1])
    net.weights[0][...] = 2.0
    x = np.array([[1.0], [3.0]])
    t = np.array([1.0, 2.0])
    loss, grads = l2_loss_grad(net, x, t)
    residual = 2.0 * x[:, 0] - t
    assert loss == pytest.approx(np.mean(residual**2))
    assert grads[0][0, 0] == pytest.approx(np.mean(2 * residual * x[:, 0]))
    assert grads[1][0] == pytest.approx(np.mean(2 * residual))


def test_empty_batch_raises():
    with pytest.raises(ValueError):
        l2_loss_grad(NeuralNet([2, 1]), np.zeros((0, 2)), np.zeros(0))


@settings(max_examples=15, deadline=None)
@given(st.integers(0, 10_000), st.sampled_from(["identity", "tanh"]))
def test_gradients_match_finite_differences(seed, act):
    rng = np.random.default_rng(seed)
    dims = [int(rng.integers(2, 5))] + list(rng.integers(2, 6, size=int(rng.integers(1, 3)))) + [int(rng.integers(1, 3))]
    net = random_net(dims, act, seed)
    x = rng.normal(size=(4, dims[0]))
    t = rng.normal(size=(4, dims[-1]))
    assert gradient_check_error(net, x, t) < 1e-4


def test_gradients_with_fixed_dropout_mask():
    rng = np.random.default_rng(5)
    net = random_net([3, 6, 5, 1], dropout=0.3, seed=2)
    assert gradient_check_error(net, rng.normal(size=(5, 3)), rng.normal(size=5), dropout_seed=11) < 1e-4


def test_l2_weight_decay_gradient():
    rng = np.random.default_rng(0)
    net = NeuralNet([2, 3, 1], seed=0)
    x, t = rng.normal(size=(3, 2)), rng.normal(size=3)
    _, plain = l2_loss_grad(net, x, t)
    _, decayed = l2_loss_grad(net, x, t, l2_weight=0.1)
    assert np.allclose(decayed[0] - plain[0], 0.1 * net.weights[0])
    assert np.array_equal(decayed[1], plain[1])


def synthetic_norm_data(n=1000, seed=0):
    x = np.random.default_rng(seed).uniform(-1, 1, size=(n, 3))
    return x, np.linalg.norm(x, axis=1)


def test_train_fits_norm():
    x, y = synthetic_norm_data()
    net = NeuralNet([3, 32, 32, 1], seed=0)
    initial = l2_loss_grad(net, x, y)[0]
    train(net, x, y, TrainConfig(learning_rate=3e-3, batch_size=64, epochs=40))
    assert l2_loss_grad(net, x, y)[0] < 0.1 * initial


def test_zero_learning_rate_keeps_weights():
    x, y = synthetic_norm_data(100)
    net = NeuralNet([3, 8, 1], seed=0)
    before = [p.copy() for p in net.params]
    train(net, x, y, TrainConfig(learning_rate=0.0, epochs=3))
    assert all(np.array_equal(a, b) for a, b in zip(before, net.params))


def test_training_reproducible():
    x, y = synthetic_norm_data(200)
    cfg = TrainConfig(epochs=5, batch_size=32, seed=4)
    a = train(NeuralNet([3, 8, 8, 1], dropout=0.2, seed=1), x, y, cfg)
    b = train(NeuralNet([3, 8, 8, 1], dropout=0.2, seed=1), x, y, cfg)
    assert a.losses == b.losses
    assert all(np.array_equal(p, q) for p, q in zip(a.net.params, b.net.params))


@pytest.mark.filterwarnings("ignore::RuntimeWarning")
def test_non_finite_loss_aborts():
    x = np.array([[1e200, 1e200]])
    with pytest.raises(FloatingPointError):
        train(NeuralNet([2, 1], seed=0), x, np.array([0.0]), TrainConfig(epochs=1))


def test_weight_round_trip_is_bit_exact(tmp_path):
    net = NeuralNet([7, 5, 4, 2], output_activation="tanh", dropout=[0.5, 0.25], seed=8)
    save_weights(net, tmp_path / "w.bin", {"seed": 8, "robot_kind": "car"})
    back, meta = load_weights(tmp_path / "w.bin")
    assert back.layer_dims == net.layer_dims and back.dropout == net.dropout
    assert back.output_activation == "tanh"
    assert all(p.tobytes() == q.tobytes() for p, q in zip(net.params, back.params))
    assert meta["robot_kind"] == "car" and meta["layer_dims"] == [7, 5, 4, 2]
    x = np.linspace(0, 1, 7)
    assert np.array_equal(net.forward(x), back.forward(x))


def test_corrupt_weight_file(tmp_path):
    net = NeuralNet([2, 2])
    save_weights(net, tmp_path / "w.bin")
    data = (tmp_path / "w.bin").read_bytes()
    (tmp_path / "w.bin").write_bytes(data + b"\0")
    with pytest.raises(ValueError, match="trailing"):
        load_weights(tmp_path / "w.bin")
    (tmp_path / "w.bin").write_bytes(b"XXXX" + data[4:])
    with pytest.raises(ValueError):
        load_weights(tmp_path / "w.bin")

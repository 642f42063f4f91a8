import math

import numpy as np
import pytest
from hypothesis import given, settings, strategies as st

from neurocrypt.ciphers import ConfigurationError
from neurocrypt.mimicnet import (
    ACTIVATIONS,
    ARCH_KINDS,
    SGD,
    Adam,
    ArchitectureSpec,
    CheckpointError,
    MimicNetwork,
    NumericError,
    PredictionBatch,
    build,
    dumps,
    forward,
    loads,
    loss_and_gradients,
    make_optimizer,
    optimizer_step,
    predict_bits,
    with_skip,
    zeros_like_network,
)


def test_fat_shallow_shapes():
    net = build(ArchitectureSpec.preset("fat_shallow", 64, 64), seed=0)
    (w, b), = net.layers
    assert w.shape == (64, 1000) and b.shape == (1000,)
    hw, hb = net.heads
    assert hw.shape == (1000, 64, 2) and hb.shape == (64, 2)


def test_deep_thin_shapes():
    net = build(ArchitectureSpec.preset("deep_thin", 48, 1), seed=0)
    assert [w.shape[1] for w, _ in net.layers] == [128] * 4
    assert net.heads[0].shape == (128, 1, 2)


def test_cascade_fan_in():
    spec = ArchitectureSpec.preset("cascade", 64, 64)
    assert spec.hidden_sizes == (128, 256, 256, 128) and spec.cascade_skip
    # hidden layers counted from 0: layer 3 reads layers 2 and 1
    assert spec.fan_in(3) == 256 + 256
    assert [spec.fan_in(i) for i in range(4)] == [64, 128 + 64, 256 + 128, 256 + 256]
    assert spec.head_fan_in() == 128 + 256


def test_cascade_without_skip_is_plain_stack():
    spec = with_skip(ArchitectureSpec.preset("cascade", 64, 64), False)
    assert spec.param_shapes() == [
        (64, 128), (128,), (128, 256), (256,), (256, 256), (256,), (256, 128), (128,), (128, 128), (128,)
    ]


def test_spec_validation():
    with pytest.raises(ConfigurationError):
        ArchitectureSpec("wide", 8, 8)
    with pytest.raises(ConfigurationError):
        ArchitectureSpec("fat_shallow", 8, 8, (10, 10))
    with pytest.raises(ConfigurationError):
        ArchitectureSpec("deep_thin", 8, 8, (10, 20, 10, 10))
    with pytest.raises(ConfigurationError):
        ArchitectureSpec.preset("fat_shallow", 8, 8, "softplus")
    with pytest.raises(ConfigurationError):
        ArchitectureSpec("fat_shallow", 8, 8, cascade_skip=True)


def test_zero_net_is_uniform():
    net = zeros_like_network(ArchitectureSpec.preset("cascade", 16, 5))
    x = np.random.default_rng(0).integers(0, 2, (7, 16)).astype(float)
    pred = forward(net, x)
    assert pred.probs.shape == (7, 5, 2) and len(pred) == 7
    assert np.all(pred.probs == 0.5)
    assert np.all(predict_bits(net, x) == 0)
    loss, _ = loss_and_gradients(net, x, np.ones((7, 5), np.uint8))
    assert loss == pytest.approx(5 * math.log(2))


def test_hand_calculated_forward():
    spec = ArchitectureSpec("fat_shallow", 1, 1, (1,))
    w1, b1 = np.array([[2.0]]), np.array([-1.0])
    wh, bh = np.array([[0.5, -1.5]]), np.array([0.25, 0.0])
    net = MimicNetwork(spec, [w1, b1, wh, bh])
    # x = 1: h = sigmoid(1) = 0.7310586, logits (0.6155293, -1.0965879), p1 = 1 / (1 + e^1.7121172)
    h = 1 / (1 + math.exp(-1.0))
    z0, z1 = 0.5 * h + 0.25, -1.5 * h
    p1 = math.exp(z1) / (math.exp(z0) + math.exp(z1))
    assert p1 == pytest.approx(0.152889, abs=1e-6)
    pred = net.forward(np.array([[1.0]]))
    assert pred.p1[0, 0] == pytest.approx(p1, rel=1e-12)
    loss, _ = net.loss_and_gradients(np.array([[1.0]]), np.array([[1]]))
    assert loss == pytest.approx(-math.log(p1), rel=1e-12)


def test_prediction_tie_rule():
    probs = np.array([[[0.2, 0.8], [0.5, 0.5], [0.9, 0.1]]])
    assert PredictionBatch(probs).bits().tolist() == [[1, 0, 0]]


def test_perfect_predictor_loss():
    spec = ArchitectureSpec("fat_shallow", 2, 2, (2,))
    net = MimicNetwork(spec, [np.eye(2) * 40, np.full(2, -20.0), np.zeros((2, 4)), np.zeros(4)])
    # identity map: head j votes for its input bit with large logits
    net.params[2][0, 1], net.params[2][0, 0] = 60.0, -60.0
    net.params[2][1, 3], net.params[2][1, 2] = 60.0, -60.0
    net.params[3][:] = [30.0, -30.0, 30.0, -30.0]
    x = np.array([[0, 0], [0, 1], [1, 0], [1, 1]], float)
    loss, _ = net.loss_and_gradients(x, x.astype(np.uint8))
    assert loss < 1e-10
    assert np.array_equal(net.predict_bits(x), x.astype(np.uint8))


def _numeric_grad(net, x, y, idx, eps=1e-6):
    p = net.params[idx]
    g = np.zeros_like(p)
    it = np.nditer(p, flags=["multi_index"])
    for _ in it:
        i = it.multi_index
        old = p[i]
        p[i] = old + eps
        up = net.loss(x, y)
        p[i] = old - eps
        down = net.loss(x, y)
        p[i] = old
        g[i] = (up - down) / (2 * eps)
    return g


@pytest.mark.parametrize("kind", ARCH_KINDS)
@pytest.mark.parametrize("activation", ACTIVATIONS)
def test_gradients_match_finite_differences(kind, activation):
    hidden = {"fat_shallow": (6,), "deep_thin": (4, 4, 4, 4), "cascade": (3, 5, 4, 3)}[kind]
    spec = ArchitectureSpec(kind, 5, 3, hidden, activation)
    net = build(spec, seed=1, dtype=np.float64)
    r = np.random.default_rng(2)
    for p in net.params:
        p += r.normal(0, 0.3, p.shape)
    x = r.integers(0, 2, (6, 5)).astype(float) + r.normal(0, 0.05, (6, 5))
    y = r.integers(0, 2, (6, 3)).astype(np.uint8)
    _, grads = net.loss_and_gradients(x, y)
    for i, g in enumerate(grads):
        num = _numeric_grad(net, x, y, i)
        scale = np.maximum(np.abs(num), np.abs(g)).max()
        assert np.abs(num - g).max() <= 1e-4 * max(scale, 1e-8), (kind, activation, i)


def test_sgd_update():
    opt = SGD(lr=0.1)
    w = [np.array([1.0])]
    opt.step(w, [np.array([2.0])])
    assert w[0][0] == pytest.approx(0.8)


def test_zero_gradient_fixed_point():
    net = build(ArchitectureSpec.preset("deep_thin", 6, 2), seed=3)
    before = [p.copy() for p in net.params]
    for opt in (make_optimizer("sgd"), make_optimizer("adam")):
        optimizer_step(net, [np.zeros_like(p) for p in net.params], opt)
    assert all(np.array_equal(a, b) for a, b in zip(before, net.params))


def test_adam_hand_calculation():
    opt = Adam()
    w = [np.array([1.0])]
    opt.step(w, [np.array([2.0])])
    # m_hat = 2, v_hat = 4 after bias correction
    assert w[0][0] == pytest.approx(1 - 1e-3 * 2 / (2 + 1e-8), abs=1e-15)
    opt.step(w, [np.array([-1.0])])
    m = 0.9 * 0.2 + 0.1 * -1.0
    v = 0.999 * 0.004 + 0.001 * 1.0
    m_hat, v_hat = m / (1 - 0.9 ** 2), v / (1 - 0.999 ** 2)
    expected = 1 - 1e-3 * 2 / (2 + 1e-8) - 1e-3 * m_hat / (math.sqrt(v_hat) + 1e-8)
    assert w[0][0] == pytest.approx(expected, abs=1e-15)


def test_optimizer_step_shape_check():
    net = build(ArchitectureSpec.preset("fat_shallow", 4, 1), seed=0)
    with pytest.raises(ValueError):
        optimizer_step(net, [np.zeros(3)], make_optimizer())
    with pytest.raises(ConfigurationError):
        make_optimizer("rmsprop")


def test_shape_errors_and_numeric_error():
    net = build(ArchitectureSpec.preset("fat_shallow", 4, 2), seed=0, dtype=np.float64)
    with pytest.raises(ValueError):
        net.forward(np.zeros((3, 5)))
    with pytest.raises(ValueError):
        net.loss_and_gradients(np.zeros((3, 4)), np.zeros((3, 3)))
    net.params[-1][:] = np.nan
    with pytest.raises(NumericError):
        net.loss_and_gradients(np.zeros((3, 4)), np.zeros((3, 2), np.uint8))


def test_build_is_seeded():
    spec = ArchitectureSpec.preset("cascade", 10, 3)
    a, b, c = build(spec, 5), build(spec, 5), build(spec, 6)
    assert all(np.array_equal(p, q) for p, q in zip(a.params, b.params))
    assert not np.array_equal(a.params[0], c.params[0])
    assert all(not p.any() for p in a.params[1::2])


@given(st.sampled_from(ARCH_KINDS), st.sampled_from(ACTIVATIONS), st.integers(1, 70), st.integers(1, 9))
@settings(max_examples=20, deadline=None)
def test_checkpoint_round_trip(kind, activation, m, n):
    net = build(ArchitectureSpec.preset(kind, m, n, activation), seed=m * n)
    back = loads(dumps(net))
    assert back.spec == net.spec and back.parameter_seed == net.parameter_seed
    assert all(np.array_equal(p, q) for p, q in zip(net.params, back.params))


def test_checkpoint_errors(tmp_path):
    net = build(ArchitectureSpec.preset("fat_shallow", 4, 1), seed=0)
    data = dumps(net)
    with pytest.raises(CheckpointError):
        loads(b"XXXX" + data[4:])
    with pytest.raises(CheckpointError):
        loads(data[:-4])
    with pytest.raises(CheckpointError):
        loads(data + b"\0")
    path = tmp_path / "n.ncmn"
    net.save(path)
    assert np.array_equal(MimicNetwork.load(path).params[0], net.params[0])

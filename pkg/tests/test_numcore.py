import numpy as np
import pytest

from corrbench import numcore as nc
from corrbench.numcore.layers import conv_params, dense_params, lstm_params, layer_norm_params


def rng(seed=0):
    return np.random.default_rng(seed)


# ---------------------------------------------------------------------------
# basic backward correctness


def test_sum_gradient_is_ones():
    x = nc.tensor(rng().normal(size=(3, 4)), requires_grad=True)
    loss = nc.reduce_sum(x)
    nc.backward(loss)
    assert np.array_equal(x.grad, np.ones((3, 4)))


def test_half_squared_norm_gradient_is_identity():
    x = nc.tensor([1.0, -2.0, 3.0], requires_grad=True)
    loss = nc.affine(nc.reduce_sum(nc.square(x)), 0.5)
    nc.backward(loss)
    assert np.allclose(x.grad, [1.0, -2.0, 3.0])


def test_non_scalar_loss_rejected():
    x = nc.tensor([1.0, 2.0], requires_grad=True)
    with pytest.raises(nc.ShapeError):
        nc.backward(nc.square(x))


def test_shape_mismatch_rejected():
    a = nc.tensor(np.zeros((2, 3)), requires_grad=True)
    b = nc.tensor(np.zeros((4, 5)))
    with pytest.raises(nc.ShapeError):
        nc.add(a, b)
    with pytest.raises(nc.ShapeError):
        nc.matmul(a, b)


def test_repeated_backward_after_clearing_is_deterministic():
    r = rng(7)
    x = nc.tensor(r.normal(size=(5,)), requires_grad=True)
    w = nc.tensor(r.normal(size=(5, 3)), requires_grad=True)

    def run():
        nc.zero_grads([x, w])
        loss = nc.reduce_sum(nc.tanh(nc.matmul(nc.reshape(x, (1, 5)), w)))
        nc.backward(loss)
        return x.grad.copy(), w.grad.copy()

    g1 = run()
    g2 = run()
    assert np.array_equal(g1[0], g2[0]) and np.array_equal(g1[1], g2[1])


def test_three_layer_network_matches_finite_differences():
    r = rng(3)
    w1, b1 = dense_params(r, 6, 5)
    w2, b2 = dense_params(r, 5, 4)
    w3, b3 = dense_params(r, 4, 1)

    def f(x):
        h = nc.tanh(nc.linear(nc.reshape(x, (2, 6)), w1, b1))
        h = nc.tanh(nc.linear(h, w2, b2))
        return nc.reduce_sum(nc.linear(h, w3, b3))

    ok, err = nc.finite_difference_check(f, r.normal(size=(12,)), h=1e-5,
                                         tolerance=1e-3)
    assert ok, f"max relative error {err}"


# ---------------------------------------------------------------------------
# per-op finite-difference suite (small random tensors)


def _check(fn, point, tol=1e-3, **kw):
    ok, err = nc.finite_difference_check(fn, point, h=1e-5, tolerance=tol, **kw)
    assert ok, f"max relative error {err}"


def test_fd_elementwise_ops():
    r = rng(11)
    x0 = r.normal(size=(4, 5))
    x0 += 0.2 * np.sign(x0)  # keep away from relu/abs kinks
    _check(lambda x: nc.reduce_sum(nc.relu(x)), x0)
    _check(lambda x: nc.reduce_sum(nc.tanh(x)), x0)
    _check(lambda x: nc.reduce_sum(nc.sigmoid(x)), x0)
    _check(lambda x: nc.reduce_sum(nc.square(x)), x0)
    _check(lambda x: nc.reduce_sum(nc.absolute(x)), x0)
    _check(lambda x: nc.reduce_sum(nc.sqrt(nc.square(x), eps=1e-12)), x0)
    _check(lambda x: nc.reduce_mean(nc.mul(x, x)), x0)


def test_fd_add_mul_broadcast():
    r = rng(12)
    b = nc.tensor(r.normal(size=(5,)))
    _check(lambda x: nc.reduce_sum(nc.add(x, b)), r.normal(size=(4, 5)))
    _check(lambda x: nc.reduce_sum(nc.mul(x, b)), r.normal(size=(4, 5)))


def test_fd_matmul_concat_narrow_gather():
    r = rng(13)
    w = nc.tensor(r.normal(size=(4, 3)))

    def f(x):
        m = nc.matmul(nc.reshape(x, (2, 4)), w)
        c = nc.concat([m, m], axis=1)
        s = nc.narrow(c, 1, 1, 3)
        g = nc.gather_rows(s, [1, 0, 1])
        return nc.reduce_sum(nc.square(g))

    _check(f, r.normal(size=(8,)))


def test_fd_softmax_and_reductions():
    r = rng(14)
    weights = nc.constant(r.normal(size=(3, 6)))
    _check(lambda x: nc.reduce_sum(nc.mul(nc.softmax(x, axis=1), weights)),
           r.normal(size=(3, 6)))
    _check(lambda x: nc.reduce_sum(nc.square(nc.reduce_mean(x, axis=0))),
           r.normal(size=(3, 6)))


def test_fd_layer_norm():
    r = rng(15)
    g, b = layer_norm_params(6)
    g.data = r.normal(1.0, 0.2, size=6)
    b.data = r.normal(0.0, 0.2, size=6)
    _check(lambda x: nc.reduce_sum(nc.square(nc.layer_norm(x, g, b))),
           r.normal(size=(4, 6)))


def test_fd_dropout_with_fixed_mask():
    r = rng(16)

    def f(x):
        d = nc.dropout(x, 0.4, np.random.default_rng(99), training=True)
        return nc.reduce_sum(nc.square(d))

    _check(f, r.normal(size=(5, 4)))


def test_dropout_eval_is_identity_and_train_scales():
    x = nc.tensor(np.ones((200, 10)), requires_grad=True)
    out = nc.dropout(x, 0.3, None, training=False)
    assert out is x
    d = nc.dropout(x, 0.3, np.random.default_rng(1), training=True)
    # inverted scaling keeps the expectation at 1
    assert abs(d.data.mean() - 1.0) < 0.05
    kept = d.data[d.data > 0]
    assert np.allclose(kept, 1.0 / 0.7)


def test_fd_conv2d_stride1_and_stride2():
    r = rng(17)
    for stride in (1, 2):
        w, b = conv_params(r, 3, 3, 2, 3)

        def f(x, w=w, b=b, stride=stride):
            y = nc.conv2d(nc.reshape(x, (1, 6, 8, 2)), w, b, stride=stride, pad=1)
            return nc.reduce_sum(nc.square(y))

        _check(f, r.normal(size=(6 * 8 * 2,)))


def test_conv2d_weight_and_bias_grads_match_fd():
    r = rng(18)
    x = nc.constant(r.normal(size=(1, 5, 6, 2)))

    def f(wflat):
        w = nc.reshape(wflat, (3, 3, 2, 2))
        b = nc.constant(np.zeros(2))
        return nc.reduce_sum(nc.square(nc.conv2d(x, w, b, stride=1, pad=1)))

    _check(f, r.normal(size=(3 * 3 * 2 * 2,)))


def test_fd_upsample_bilinear():
    r = rng(19)

    def f(x):
        y = nc.upsample_bilinear(nc.reshape(x, (1, 3, 4, 2)), 9, 12)
        return nc.reduce_sum(nc.square(y))

    _check(f, r.normal(size=(24,)))


def test_fd_spatial_softmax_expectation_path():
    r = rng(20)
    h, w = 4, 6
    uu, vv = np.meshgrid(np.arange(w, dtype=float), np.arange(h, dtype=float))
    coords = nc.constant(np.stack([uu.ravel(), vv.ravel()], axis=1))  # [HW,2]

    def f(x):
        p = nc.spatial_softmax(nc.reshape(x, (1, h, w, 2)))
        pf = nc.reshape(p, (h * w, 2))
        c0 = nc.matmul(nc.reshape(nc.narrow(pf, 1, 0, 1), (1, h * w)), coords)
        c1 = nc.matmul(nc.reshape(nc.narrow(pf, 1, 1, 1), (1, h * w)), coords)
        return nc.reduce_sum(nc.square(nc.concat([c0, c1], axis=0)))

    _check(f, r.normal(size=(h * w * 2,)))


def test_fd_lstm_cell():
    r = rng(21)
    w, b = lstm_params(r, 3, 4)
    h0 = nc.constant(r.normal(size=(2, 4)) * 0.1)
    c0 = nc.constant(r.normal(size=(2, 4)) * 0.1)

    def f(x):
        h1, c1 = nc.lstm_cell(nc.reshape(x, (2, 3)), h0, c0, w, b)
        return nc.reduce_sum(nc.square(h1)) + nc.reduce_sum(nc.square(c1))

    _check(f, r.normal(size=(6,)))


def test_fd_lstm_cell_loss_wrt_params():
    r = rng(22)
    x = nc.constant(r.normal(size=(1, 4)))
    h0 = nc.constant(np.zeros((1, 4)))
    c0 = nc.constant(np.zeros((1, 4)))

    def f(wflat):
        w = nc.reshape(wflat, (8, 16))
        b = nc.constant(np.zeros(16))
        h1, _ = nc.lstm_cell(x, h0, c0, w, b)
        return nc.reduce_sum(nc.square(h1))

    _check(f, rng(23).normal(size=(8 * 16,)))


def test_fd_squared_and_absolute_error():
    r = rng(24)
    target = nc.constant(r.normal(size=(3, 4)))
    x0 = r.normal(size=(3, 4)) + 5.0  # keep |x - target| away from 0
    _check(lambda x: nc.squared_error(x, target), x0)
    _check(lambda x: nc.absolute_error(x, target), x0)


def test_finite_difference_check_hand_cases():
    ok, err = nc.finite_difference_check(lambda x: nc.reduce_sum(x),
                                         np.array([1.0, 2.0, 3.0]))
    assert ok and err < 1e-9
    # f(x)=||x||^2 at (1,2): analytic (2,4)
    x = nc.tensor([1.0, 2.0], requires_grad=True)
    loss = nc.reduce_sum(nc.square(x))
    nc.backward(loss)
    assert np.allclose(x.grad, [2.0, 4.0], atol=1e-12)
    ok, err = nc.finite_difference_check(lambda t: nc.reduce_sum(nc.square(t)),
                                         np.array([1.0, 2.0]))
    assert ok and err < 1e-6


# ---------------------------------------------------------------------------
# optimizer


def test_rmsprop_zero_grad_leaves_params_unchanged():
    p = nc.tensor([1.0, -2.0], requires_grad=True)
    state = nc.RmsPropState(alpha=0.9, learning_rate=0.1)
    nc.rmsprop_step(state, {"p": p}, {"p": np.zeros(2)})
    assert np.array_equal(p.data, [1.0, -2.0])


def test_rmsprop_hand_computed_first_step():
    p = nc.tensor([1.0], requires_grad=True)
    state = nc.RmsPropState(alpha=0.9, learning_rate=0.1)
    nc.rmsprop_step(state, {"p": p}, {"p": np.array([1.0])})
    assert np.allclose(state.accumulators["p"], [0.1])
    expected = 1.0 - 0.1 * 1.0 / (np.sqrt(0.1) + 1e-8)
    assert abs(p.data[0] - expected) < 1e-12
    assert abs(p.data[0] - 0.68377) < 1e-4


def test_clip_global_norm_hand_case():
    grads = {"g": np.array([3.0, 4.0])}
    clipped = nc.clip_gradients(grads, 1.0, "global_norm")
    assert np.allclose(clipped["g"], [0.6, 0.8])


def test_clip_safety_property():
    r = rng(30)
    for _ in range(20):
        grads = {f"g{i}": r.normal(size=r.integers(1, 5)) * 10 for i in range(3)}
        clipped = nc.clip_gradients(grads, 1.0, "global_norm")
        norm = np.sqrt(sum((g ** 2).sum() for g in clipped.values()))
        assert norm <= 1.0 + 1e-9


def test_clip_per_element_mode():
    grads = {"g": np.array([3.0, -0.5])}
    clipped = nc.clip_gradients(grads, 1.0, "per_element")
    assert np.allclose(clipped["g"], [1.0, -0.5])


def test_lr_schedule_exact_powers():
    state = nc.RmsPropState(alpha=0.9, learning_rate=2e-3, decay_factor=0.75,
                            decay_interval=10)
    for k in range(5):
        state.step = 10 * k
        assert nc.current_lr(state) == 2e-3 * 0.75 ** k


def test_rmsprop_shape_mismatch_raises():
    p = nc.tensor([1.0, 2.0], requires_grad=True)
    state = nc.RmsPropState()
    with pytest.raises(ValueError):
        nc.rmsprop_step(state, {"p": p}, {"p": np.zeros(3)})


def test_optimizer_determinism_bit_identical():
    def train(seed):
        r = np.random.default_rng(seed)
        w, b = dense_params(r, 4, 3)
        state = nc.RmsPropState(alpha=0.9, learning_rate=1e-3,
                                decay_factor=0.5, decay_interval=5)
        data_rng = np.random.default_rng(seed + 1)
        for _ in range(20):
            x = nc.constant(data_rng.normal(size=(2, 4)))
            y = nc.constant(data_rng.normal(size=(2, 3)))
            nc.zero_grads([w, b])
            loss = nc.squared_error(nc.linear(x, w, b), y)
            nc.backward(loss)
            nc.rmsprop_step(state, {"w": w, "b": b})
        return w.data.copy(), b.data.copy()

    w1, b1 = train(42)
    w2, b2 = train(42)
    assert np.array_equal(w1, w2) and np.array_equal(b1, b2)


# ---------------------------------------------------------------------------
# checkpoints


def test_checkpoint_round_trip(tmp_path):
    r = rng(40)
    tensors = {"a": r.normal(size=(3, 2)), "b": r.normal(size=(5,))}
    scalars = {"step": 7, "lr": 1e-4}
    extra = {"note": "unit", "nested": {"k": [1, 2]}}
    nc.save_checkpoint(tmp_path / "ck", tensors, scalars, extra)
    loaded, s, e = nc.load_checkpoint(tmp_path / "ck")
    assert np.array_equal(loaded["a"], tensors["a"])
    assert np.array_equal(loaded["b"], tensors["b"])
    assert s == {"step": 7, "lr": 1e-4} and e["note"] == "unit"


def test_checkpoint_blob_is_little_endian_f8(tmp_path):
    nc.save_checkpoint(tmp_path / "ck", {"x": np.array([1.5, -2.0])})
    raw = (tmp_path / "ck" / "params.bin").read_bytes()
    assert np.frombuffer(raw, dtype="<f8").tolist() == [1.5, -2.0]

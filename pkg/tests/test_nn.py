import numpy as np
import pytest

from pedworld.nn import (
    AdamState, ShapeError, Tape, Tensor, adam_step, backward, load_weights,
    lstm_params, ops, parameter, save_weights,
)
from pedworld.nn.gradcheck import finite_difference_check


def rng():
    return np.random.default_rng(1234)


def randt(r, *shape, lo=-1.0, hi=1.0, name=""):
    return parameter(r.uniform(lo, hi, size=shape).astype(np.float32), name or f"p{shape}")


# ---------------------------------------------------------------------------
# forward oracles


def test_relu_values():
    y = ops.relu(None, Tensor([-3.0, 0.0, 5.0]))
    assert np.array_equal(y.data, [0.0, 0.0, 5.0])


def test_softmax_equal_logits_is_uniform():
    y = ops.softmax(None, Tensor(np.zeros((2, 7), np.float32)))
    assert np.allclose(y.data, 1.0 / 7.0, atol=1e-7)


def test_conv2d_local_sums():
    # 3x3 input, 2x2 kernel of ones, stride 1, no padding -> 2x2 local sums
    x = Tensor(np.arange(9, dtype=np.float32).reshape(1, 3, 3, 1))
    w = Tensor(np.ones((2, 2, 1, 1), np.float32))
    y = ops.conv2d(None, x, w, stride=1, padding=0)
    expected = np.array([[0 + 1 + 3 + 4, 1 + 2 + 4 + 5], [3 + 4 + 6 + 7, 4 + 5 + 7 + 8]], np.float32)
    assert np.array_equal(y.data[0, :, :, 0], expected)


def test_conv2d_shape_error_names_operation():
    x = Tensor(np.zeros((1, 3, 3, 2), np.float32))
    w = Tensor(np.zeros((2, 2, 5, 1), np.float32))
    with pytest.raises(ShapeError, match="conv2d"):
        ops.conv2d(None, x, w)


def test_conv2d_transpose_inverts_conv_shapes():
    # encoder 11 -> 5 at k=4 s=2 p=1; adjoint must map 5 -> 11 exactly
    x = Tensor(np.zeros((2, 5, 10, 3), np.float32))
    w = Tensor(np.zeros((4, 4, 6, 3), np.float32))
    y = ops.conv2d_transpose(None, x, w, stride=2, padding=1, out_hw=(11, 21))
    assert y.shape == (2, 11, 21, 6)


def test_lstm_cell_paper_state_shapes():
    r = rng()
    wx, wh, b = lstm_params(r, 53, 512, "lstm")
    x = Tensor(r.standard_normal((2, 53)).astype(np.float32))
    h = Tensor(np.zeros((2, 512), np.float32))
    c = Tensor(np.zeros((2, 512), np.float32))
    h2, c2 = ops.lstm_cell(None, x, h, c, wx, wh, b)
    assert h2.shape == (2, 512) and c2.shape == (2, 512)


# ---------------------------------------------------------------------------
# backward basics


def test_backward_sum_of_squares():
    w = parameter(np.array([1.0, 2.0], np.float32), "w")
    tape = Tape()
    loss = ops.reduce_sum(tape, ops.mul(tape, w, w))
    backward(tape, loss)
    assert np.allclose(w.grad, [2.0, 4.0])


def test_backward_unreachable_param_has_zero_grad():
    w = parameter(np.array([1.0, 2.0], np.float32), "w")
    other = parameter(np.array([3.0], np.float32), "other")
    tape = Tape()
    loss = ops.reduce_sum(tape, ops.mul(tape, w, w))
    backward(tape, loss)
    assert np.array_equal(other.grad, [0.0])


def test_backward_rejects_non_scalar_loss():
    w = parameter(np.array([1.0, 2.0], np.float32), "w")
    tape = Tape()
    y = ops.mul(tape, w, w)
    with pytest.raises(ShapeError):
        backward(tape, y)


# ---------------------------------------------------------------------------
# finite-difference checks, one per primitive (A2 ground)


def _check(fn, params, tol=1e-3, h=1e-3):
    err = finite_difference_check(fn, params, h=h)
    assert err <= tol, f"max relative gradient error {err:.3e} > {tol}"


def test_grad_add_mul_broadcast():
    r = rng()
    a, b = randt(r, 3, 4, name="a"), randt(r, 4, name="b")

    def f(tape, ps):
        return ops.reduce_sum(tape, ops.mul(tape, ops.add(tape, ps[0], ps[1]), ps[0]))

    _check(f, [a, b])


def test_grad_relu():
    r = rng()
    # keep points away from the kink at 0
    x = parameter((r.uniform(0.2, 1.0, (3, 4)) * r.choice([-1.0, 1.0], (3, 4))).astype(np.float32), "x")

    def f(tape, ps):
        return ops.reduce_sum(tape, ops.mul(tape, ops.relu(tape, ps[0]), Tensor(np.full((3, 4), 0.7, np.float32))))

    _check(f, [x])


def test_grad_sigmoid_tanh_exp_log():
    r = rng()
    x = randt(r, 2, 5, name="x")
    pos = randt(r, 2, 5, lo=0.5, hi=2.0, name="pos")

    def f(tape, ps):
        s = ops.sigmoid(tape, ps[0])
        t = ops.tanh(tape, ps[0])
        e = ops.exp(tape, ops.scale(tape, ps[0], 0.5))
        lg = ops.log(tape, ps[1])
        return ops.reduce_sum(tape, ops.add(tape, ops.add(tape, s, t), ops.add(tape, e, lg)))

    _check(f, [x, pos])


def test_grad_softmax_logsumexp():
    r = rng()
    x = randt(r, 3, 5, name="x")
    mix = Tensor(r.uniform(-1, 1, (3, 5)).astype(np.float32))

    def f(tape, ps):
        sm = ops.softmax(tape, ps[0], axis=-1)
        lse = ops.logsumexp(tape, ps[0], axis=-1)
        return ops.add(tape, ops.reduce_sum(tape, ops.mul(tape, sm, mix)), ops.reduce_sum(tape, lse))

    _check(f, [x])


def test_grad_reduce_sum_axis():
    r = rng()
    x = randt(r, 2, 3, 4, name="x")
    mix = Tensor(r.uniform(-1, 1, (2, 4)).astype(np.float32))

    def f(tape, ps):
        return ops.reduce_sum(tape, ops.mul(tape, ops.reduce_sum(tape, ps[0], axis=1), mix))

    _check(f, [x])


def test_grad_clamp_interior():
    r = rng()
    x = randt(r, 3, 3, lo=-0.8, hi=0.8, name="x")

    def f(tape, ps):
        return ops.reduce_sum(tape, ops.square(tape, ops.clamp(tape, ps[0], -1.0, 1.0)))

    _check(f, [x])


def test_grad_reshape_concat():
    r = rng()
    a, b = randt(r, 2, 3, name="a"), randt(r, 2, 2, name="b")
    mix = Tensor(r.uniform(-1, 1, (2, 5)).astype(np.float32))

    def f(tape, ps):
        cat = ops.concat(tape, [ps[0], ps[1]], axis=1)
        return ops.reduce_sum(tape, ops.mul(tape, ops.reshape(tape, cat, (2, 5)), mix))

    _check(f, [a, b])


def test_grad_dense():
    r = rng()
    x, w, b = randt(r, 3, 4, name="x"), randt(r, 4, 2, name="w"), randt(r, 2, name="b")
    mix = Tensor(r.uniform(-1, 1, (3, 2)).astype(np.float32))

    def f(tape, ps):
        return ops.reduce_sum(tape, ops.mul(tape, ops.dense(tape, ps[0], ps[1], ps[2]), mix))

    _check(f, [x, w, b])


def test_grad_conv2d():
    r = rng()
    x = randt(r, 2, 5, 6, 3, name="x")
    w = randt(r, 3, 3, 3, 2, name="w")
    b = randt(r, 2, name="b")
    mix = Tensor(r.uniform(-1, 1, (2, 3, 3, 2)).astype(np.float32))

    def f(tape, ps):
        y = ops.conv2d(tape, ps[0], ps[1], ps[2], stride=2, padding=1)
        return ops.reduce_sum(tape, ops.mul(tape, y, mix))

    _check(f, [x, w, b])


def test_grad_conv2d_transpose():
    r = rng()
    x = randt(r, 2, 3, 3, 2, name="x")
    w = randt(r, 3, 3, 3, 2, name="w")
    b = randt(r, 3, name="b")
    mix = Tensor(r.uniform(-1, 1, (2, 5, 6, 3)).astype(np.float32))

    def f(tape, ps):
        y = ops.conv2d_transpose(tape, ps[0], ps[1], ps[2], stride=2, padding=1, out_hw=(5, 6))
        return ops.reduce_sum(tape, ops.mul(tape, y, mix))

    _check(f, [x, w, b])


def test_grad_lstm_cell():
    r = rng()
    n_in, hidden = 4, 3
    x = randt(r, 2, n_in, name="x")
    h = randt(r, 2, hidden, lo=-0.5, hi=0.5, name="h")
    c = randt(r, 2, hidden, lo=-0.5, hi=0.5, name="c")
    wx = randt(r, n_in, 4 * hidden, lo=-0.5, hi=0.5, name="wx")
    wh = randt(r, hidden, 4 * hidden, lo=-0.5, hi=0.5, name="wh")
    b = randt(r, 4 * hidden, lo=-0.3, hi=0.3, name="b")
    mh = Tensor(r.uniform(-1, 1, (2, hidden)).astype(np.float32))
    mc = Tensor(r.uniform(-1, 1, (2, hidden)).astype(np.float32))

    def f(tape, ps):
        h2, c2 = ops.lstm_cell(tape, *ps)
        return ops.add(tape, ops.reduce_sum(tape, ops.mul(tape, h2, mh)),
                       ops.reduce_sum(tape, ops.mul(tape, c2, mc)))

    _check(f, [x, h, c, wx, wh, b])


# ---------------------------------------------------------------------------
# Adam


def test_adam_zero_gradient_leaves_params_unchanged():
    p = parameter(np.array([1.0, -2.0], np.float32), "p")
    state = AdamState(lr=0.1)
    adam_step([p], state)
    assert np.array_equal(p.data, [1.0, -2.0])


def test_adam_first_step_is_signed_learning_rate():
    p = parameter(np.array([1.0, 1.0], np.float32), "p")
    p.grad = np.array([0.3, -0.001], np.float32)
    state = AdamState(lr=1e-2)
    adam_step([p], state)
    # bias-corrected first step: lr * g / (|g| + eps) ~ lr * sign(g)
    assert np.allclose(p.data, [1.0 - 1e-2, 1.0 + 1e-2], atol=1e-6)


def test_adam_non_finite_gradient_names_parameter():
    p = parameter(np.array([1.0], np.float32), "enc/w")
    p.grad = np.array([np.nan], np.float32)
    with pytest.raises(FloatingPointError, match="enc/w"):
        adam_step([p], AdamState())


def test_adam_two_runs_identical():
    def run():
        r = np.random.default_rng(5)
        p = parameter(r.standard_normal(8).astype(np.float32), "p")
        state = AdamState(lr=1e-3)
        for _ in range(25):
            p.grad = (p.data * 0.5 + 0.1).astype(np.float32)
            adam_step([p], state)
        return p.data.tobytes()

    assert run() == run()


# ---------------------------------------------------------------------------
# checkpoints


def test_checkpoint_round_trip(tmp_path):
    r = rng()
    tensors = {
        "enc/w": r.standard_normal((3, 4, 2, 5)).astype(np.float32),
        "enc/b": r.standard_normal(5).astype(np.float32),
        "scalar": np.float32(3.25).reshape(()),
    }
    path = tmp_path / "model.wts"
    save_weights(path, tensors)
    loaded = load_weights(path)
    assert set(loaded) == set(tensors)
    for k in tensors:
        assert np.array_equal(loaded[k], tensors[k])


def test_checkpoint_bad_magic(tmp_path):
    path = tmp_path / "junk.wts"
    path.write_bytes(b"NOPE" + b"\x00" * 16)
    with pytest.raises(Exception, match="magic"):
        load_weights(path)

"""Tape mechanics and per-op gradient correctness against central differences."""

import numpy as np
import pytest

import pdegnn.autodiff as ad
from pdegnn.autodiff import Parameter, Tape, Tensor
from pdegnn.oracle import fd_gradient
from pdegnn.sparse import Graph, build_gradient


def scalar(v):
    return Tensor(np.asarray(float(v)), requires_grad=True)


def test_square_sum_gradient():
    # loss = sum(x ⊙ x) at x = 3 has gradient 2x = 6
    tape = Tape()
    x = Tensor(np.array([3.0]), requires_grad=True)
    loss = ad.ssum(tape, ad.hadamard(tape, x, x))
    tape.backward(loss)
    assert np.allclose(x.grad, 6.0)


def test_dead_relu_gradient_is_zero():
    tape = Tape()
    x = Tensor(np.array([-5.0]), requires_grad=True)
    loss = ad.half_sumsq(tape, ad.relu(tape, x))
    tape.backward(loss)
    assert np.array_equal(x.grad, [0.0])


def test_relu_subgradient_at_zero_is_zero():
    tape = Tape()
    x = Tensor(np.array([0.0]), requires_grad=True)
    out = ad.relu(tape, x)
    loss = ad.half_sumsq(tape, ad.add(tape, out, Tensor(np.array([1.0]))))
    tape.backward(loss)
    assert np.array_equal(x.grad, [0.0])


def test_backward_requires_scalar():
    tape = Tape()
    x = Tensor(np.zeros((2, 2)), requires_grad=True)
    y = ad.scale(tape, x, 2.0)
    with pytest.raises(ValueError, match="scalar"):
        tape.backward(y)


def test_add_scale_linearity_exact():
    # hand-built Jacobians on 2x2 inputs: d(a + 3b)/da = I, /db = 3I
    tape = Tape()
    a = Tensor(np.array([[1.0, 2.0], [3.0, 4.0]]), requires_grad=True)
    b = Tensor(np.array([[5.0, 6.0], [7.0, 8.0]]), requires_grad=True)
    out = ad.add(tape, a, ad.scale(tape, b, 3.0))
    w = Tensor(np.array([[1.0, 10.0], [100.0, 1000.0]]))
    loss = ad.half_sumsq(tape, ad.hadamard(tape, out, w))  # weighted probe
    tape.backward(loss)
    assert np.array_equal(a.grad, out.values * w.values * w.values)
    assert np.array_equal(b.grad, 3.0 * out.values * w.values * w.values)


def test_grads_reset_between_backward_passes():
    x = Tensor(np.array([2.0]), requires_grad=True)
    for _ in range(3):
        tape = Tape()
        loss = ad.half_sumsq(tape, x)
        tape.backward(loss)
        assert np.array_equal(x.grad, [2.0])  # no accumulation across tapes


def test_forward_backward_bitwise_reproducible():
    def run():
        rng = np.random.default_rng(42)
        tape = Tape()
        x = Tensor(rng.standard_normal((5, 3)), requires_grad=True)
        w = Tensor(rng.standard_normal((3, 3)), requires_grad=True)
        y = ad.dropout(tape, ad.relu(tape, ad.matmul(tape, x, w)), 0.3,
                       training=True, rng=rng)
        loss = ad.half_sumsq(tape, y)
        tape.backward(loss)
        return loss.values.copy(), x.grad.copy(), w.grad.copy()

    first = run()
    second = run()
    for a, b in zip(first, second):
        assert np.array_equal(a, b)


def test_dropout_eval_is_identity_and_consumes_no_rng():
    tape = Tape()
    x = Tensor(np.ones((4, 4)))
    out = ad.dropout(tape, x, 0.5, training=False, rng=None)
    assert out is x

    rng = np.random.default_rng(0)
    before = rng.bit_generator.state["state"]["state"]
    ad.dropout(tape, x, 0.5, training=False, rng=rng)
    assert rng.bit_generator.state["state"]["state"] == before


def test_dropout_train_scales_by_keep_probability():
    rng = np.random.default_rng(3)
    tape = Tape()
    x = Tensor(np.ones((2000, 1)))
    out = ad.dropout(tape, x, 0.25, training=True, rng=rng)
    kept = out.values[out.values != 0]
    assert np.allclose(kept, 1.0 / 0.75)
    assert abs(len(kept) / 2000 - 0.75) < 0.05


def test_spmm_const_gradient_is_transpose_product():
    g = Graph(3, [(0, 1), (1, 2)])
    G = build_gradient(g)
    tape = Tape()
    x = Tensor(np.array([[1.0], [2.0], [4.0]]), requires_grad=True)
    y = ad.spmm_const(tape, G, x)
    w = Tensor(np.array([[2.0], [5.0]]))
    loss = ad.half_sumsq(tape, ad.hadamard(tape, y, w))
    tape.backward(loss)
    d_y = y.values * w.values * w.values
    assert np.allclose(x.grad, G.to_dense().T @ d_y)


@pytest.mark.parametrize("op_name", ["matmul", "matmul_t", "add", "sub",
                                     "hadamard", "smul", "row_scale", "relu",
                                     "tanh", "elu", "sigmoid", "scale",
                                     "rsub_const"])
def test_op_gradients_match_finite_differences(op_name):
    rng = np.random.default_rng(hash(op_name) % 2**31)
    shape = (4, 3)
    a0 = rng.uniform(0.2, 1.0, shape) * rng.choice([-1.0, 1.0], shape)
    b0 = rng.uniform(0.2, 1.0, shape) * rng.choice([-1.0, 1.0], shape)
    w0 = rng.standard_normal((3, 5))

    def build(tape, a, b):
        if op_name == "matmul":
            return ad.matmul(tape, a, Tensor(w0))
        if op_name == "matmul_t":
            return ad.matmul_t(tape, a, Tensor(w0.T))
        if op_name == "add":
            return ad.add(tape, a, b)
        if op_name == "sub":
            return ad.sub(tape, a, b)
        if op_name == "hadamard":
            return ad.hadamard(tape, a, b)
        if op_name == "smul":
            return ad.smul(tape, Tensor(np.asarray(0.7), requires_grad=False), a)
        if op_name == "row_scale":
            d = Tensor(np.array([0.5, 1.5, -0.3, 2.0]), requires_grad=False)
            return ad.row_scale(tape, d, a)
        if op_name == "scale":
            return ad.scale(tape, a, -1.7)
        if op_name == "rsub_const":
            return ad.rsub_const(tape, 2.5, a)
        return getattr(ad, op_name)(tape, a)

    probe_shape = build(Tape(), Tensor(a0), Tensor(b0)).values.shape
    probe = rng.standard_normal(probe_shape)

    def loss_fn(avals):
        tape = Tape()
        out = build(tape, Tensor(avals), Tensor(b0))
        return float(ad.half_sumsq(tape, ad.hadamard(tape, out,
                                                     Tensor(probe))).values)

    tape = Tape()
    a = Tensor(a0.copy(), requires_grad=True)
    out = build(tape, a, Tensor(b0))
    loss = ad.half_sumsq(tape, ad.hadamard(tape, out, Tensor(probe)))
    tape.backward(loss)
    want = fd_gradient(loss_fn, a0.copy())
    assert np.max(np.abs(a.grad - want)) < 1e-6 * max(1.0, np.abs(want).max())


def test_row_scale_gradient_to_weights():
    rng = np.random.default_rng(8)
    x0 = rng.standard_normal((4, 3))
    d0 = rng.uniform(0.5, 1.5, 4)

    def loss_fn(dvals):
        tape = Tape()
        out = ad.row_scale(tape, Tensor(dvals), Tensor(x0))
        return float(ad.half_sumsq(tape, out).values)

    tape = Tape()
    d = Tensor(d0.copy(), requires_grad=True)
    loss = ad.half_sumsq(tape, ad.row_scale(tape, d, Tensor(x0)))
    tape.backward(loss)
    want = fd_gradient(loss_fn, d0.copy())
    assert np.max(np.abs(d.grad - want)) < 1e-6


def test_softmax_cross_entropy_value_and_gradient():
    rng = np.random.default_rng(11)
    logits0 = rng.standard_normal((6, 4))
    labels = rng.integers(0, 4, 6)
    mask = np.array([True, False, True, True, False, True])

    # independent value oracle
    idx = np.flatnonzero(mask)
    z = logits0[idx]
    probs = np.exp(z) / np.exp(z).sum(axis=1, keepdims=True)
    want_val = -np.mean(np.log(probs[np.arange(len(idx)), labels[idx]]))

    tape = Tape()
    logits = Tensor(logits0.copy(), requires_grad=True)
    loss = ad.softmax_cross_entropy(tape, logits, labels, mask)
    assert abs(float(loss.values) - want_val) < 1e-12
    tape.backward(loss)

    def loss_fn(vals):
        t = Tape()
        return float(ad.softmax_cross_entropy(t, Tensor(vals), labels,
                                              mask).values)

    want = fd_gradient(loss_fn, logits0.copy())
    assert np.max(np.abs(logits.grad - want)) < 1e-6
    assert np.all(logits.grad[~mask] == 0.0)


def test_softmax_cross_entropy_handles_huge_logits():
    tape = Tape()
    logits = Tensor(np.array([[1000.0, 0.0], [0.0, 1000.0]]))
    loss = ad.softmax_cross_entropy(tape, logits, np.array([0, 1]),
                                    np.array([True, True]))
    assert np.isfinite(float(loss.values))
    assert float(loss.values) < 1e-10


def test_parameter_flags():
    p = Parameter(np.zeros((2, 2)), "w", weight_decay_eligible=True)
    q = Parameter(np.asarray(0.0), "alpha", weight_decay_eligible=False)
    assert p.tensor.requires_grad and q.tensor.requires_grad
    assert p.weight_decay_eligible and not q.weight_decay_eligible


def test_sigmoid_values_stable_at_extremes():
    x = np.array([-800.0, -30.0, 0.0, 30.0, 800.0])
    y = ad.sigmoid_values(x)
    assert np.all(np.isfinite(y))
    assert y[0] == 0.0 and y[-1] == 1.0
    assert y[2] == 0.5

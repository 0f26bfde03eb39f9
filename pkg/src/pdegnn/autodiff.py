"""Reverse-mode automatic differentiation over a fixed operation set.

A Tape is a Wengert list: every operation appends one record holding its
output, its inputs, and a backward closure.  Records are appended in
evaluation order, so inputs always precede their consumers and the backward
pass is a single reverse sweep.  One tape lives for one forward/backward
round; parameters persist across tapes.

Dtype policy: tensors keep whatever float dtype their values carry.  Tests
run everything in float64 so finite-difference checks are meaningful;
training may use float32.
"""

from __future__ import annotations

import numpy as np

from .sparse import SparseOperator


class Tensor:
    """Dense matrix (or scalar) with a gradient accumulator."""

    __slots__ = ("values", "grad", "requires_grad")

    def __init__(self, values, requires_grad: bool = False) -> None:
        self.values = np.asarray(values)
        self.grad = None
        self.requires_grad = bool(requires_grad)

    @property
    def shape(self):
        return self.values.shape

    def __repr__(self) -> str:
        return f"Tensor(shape={self.values.shape}, requires_grad={self.requires_grad})"


class Parameter:
    """Named trainable tensor; ``weight_decay_eligible`` marks matrix weights."""

    __slots__ = ("tensor", "name", "weight_decay_eligible")

    def __init__(self, values, name: str, weight_decay_eligible: bool = True) -> None:
        self.tensor = Tensor(values, requires_grad=True)
        self.name = name
        self.weight_decay_eligible = bool(weight_decay_eligible)

    @property
    def values(self) -> np.ndarray:
        return self.tensor.values

    @values.setter
    def values(self, v) -> None:
        self.tensor.values = np.asarray(v)

    @property
    def grad(self):
        return self.tensor.grad

    def __repr__(self) -> str:
        return f"Parameter({self.name}, shape={self.tensor.values.shape})"


class Tape:
    """Ordered record of operations for one backward sweep."""

    def __init__(self) -> None:
        self._records: list[tuple[Tensor, tuple[Tensor, ...], object]] = []

    def record(self, out: Tensor, inputs: tuple[Tensor, ...], backward) -> None:
        # outputs inherit grad tracking, so the backward sweep can skip
        # whole subgraphs that no parameter feeds (e.g. the raw features)
        out.requires_grad = any(t.requires_grad for t in inputs)
        self._records.append((out, inputs, backward))

    def __len__(self) -> int:
        return len(self._records)

    def backward(self, loss: Tensor) -> None:
        """Populate grads of every tensor reachable from ``loss``.

        Grads of all tensors touched by this tape are reset first, so stale
        gradients from a previous step can never leak in; accumulators are
        materialized lazily on first contribution (tensors the loss never
        reaches keep grad = None, read as zero).
        """
        if loss.values.size != 1:
            raise ValueError("backward requires a scalar loss")
        touched = {id(loss): loss}
        for out, inputs, _ in self._records:
            touched[id(out)] = out
            for t in inputs:
                touched[id(t)] = t
        for t in touched.values():
            t.grad = None
        loss.grad = np.ones_like(loss.values)
        for out, inputs, backward in reversed(self._records):
            if out.grad is None or not out.requires_grad:
                continue
            backward(out.grad)
        # reachable grad-tracked tensors with no contribution read as zero
        for t in touched.values():
            if t.requires_grad and t.grad is None:
                t.grad = np.zeros_like(t.values)


def _accum(t: Tensor, g) -> None:
    if not t.requires_grad:
        return
    if t.grad is None:
        t.grad = np.array(g)  # own the buffer; g may alias an output grad
    else:
        t.grad += g


# ---------------------------------------------------------------------------
# linear operations


def matmul(tape: Tape, a: Tensor, b: Tensor) -> Tensor:
    out = Tensor(a.values @ b.values)

    def backward(g):
        if a.requires_grad:
            _accum(a, g @ b.values.T)
        if b.requires_grad:
            _accum(b, a.values.T @ g)

    tape.record(out, (a, b), backward)
    return out


def matmul_t(tape: Tape, a: Tensor, b: Tensor) -> Tensor:
    """a @ b.T without materializing the transpose on the tape."""
    out = Tensor(a.values @ b.values.T)

    def backward(g):
        if a.requires_grad:
            _accum(a, g @ b.values)
        if b.requires_grad:
            _accum(b, g.T @ a.values)

    tape.record(out, (a, b), backward)
    return out


def spmm_const(tape: Tape, op: SparseOperator, x: Tensor,
               transposed: bool = False) -> Tensor:
    """Apply a constant sparse operator; gradient flows only to ``x``."""
    if transposed:
        out = Tensor(op.apply_transposed(x.values))

        def backward(g):
            if x.requires_grad:
                _accum(x, op.apply(g))
    else:
        out = Tensor(op.apply(x.values))

        def backward(g):
            if x.requires_grad:
                _accum(x, op.apply_transposed(g))

    tape.record(out, (x,), backward)
    return out


def add(tape: Tape, a: Tensor, b: Tensor) -> Tensor:
    out = Tensor(a.values + b.values)

    def backward(g):
        _accum(a, g)
        _accum(b, g)

    tape.record(out, (a, b), backward)
    return out


def sub(tape: Tape, a: Tensor, b: Tensor) -> Tensor:
    out = Tensor(a.values - b.values)

    def backward(g):
        _accum(a, g)
        _accum(b, -g)

    tape.record(out, (a, b), backward)
    return out


def scale(tape: Tape, a: Tensor, s: float) -> Tensor:
    """Multiply by a plain (non-trainable) scalar constant."""
    out = Tensor(a.values * s)

    def backward(g):
        _accum(a, g * s)

    tape.record(out, (a,), backward)
    return out


def sub_scaled(tape: Tape, a: Tensor, b: Tensor, s: float) -> Tensor:
    """Fused a - s * b for a plain scalar constant s."""
    out = Tensor(a.values - s * b.values)

    def backward(g):
        _accum(a, g)
        if b.requires_grad:
            _accum(b, -s * g)

    tape.record(out, (a, b), backward)
    return out


def sub_smul(tape: Tape, a: Tensor, s: Tensor, b: Tensor) -> Tensor:
    """Fused a - s * b for a scalar tensor s (trainable coefficient)."""
    if s.values.size != 1:
        raise ValueError("sub_smul expects a scalar coefficient tensor")
    out = Tensor(a.values - s.values * b.values)

    def backward(g):
        _accum(a, g)
        if s.requires_grad:
            _accum(s, -np.sum(g * b.values, dtype=b.values.dtype))
        if b.requires_grad:
            _accum(b, -s.values * g)

    tape.record(out, (a, s, b), backward)
    return out


def rsub_const(tape: Tape, c: float, a: Tensor) -> Tensor:
    """c - a for a scalar constant c."""
    out = Tensor(c - a.values)

    def backward(g):
        _accum(a, -g)

    tape.record(out, (a,), backward)
    return out


def smul(tape: Tape, s: Tensor, x: Tensor) -> Tensor:
    """Broadcast multiply by a scalar tensor (e.g. the trainable mix weight)."""
    if s.values.size != 1:
        raise ValueError("smul expects a scalar tensor")
    out = Tensor(s.values * x.values)

    def backward(g):
        if s.requires_grad:
            _accum(s, np.sum(g * x.values, dtype=x.values.dtype))
        if x.requires_grad:
            _accum(x, s.values * g)

    tape.record(out, (s, x), backward)
    return out


def hadamard(tape: Tape, a: Tensor, b: Tensor) -> Tensor:
    out = Tensor(a.values * b.values)

    def backward(g):
        if a.requires_grad:
            _accum(a, g * b.values)
        if b.requires_grad:
            _accum(b, g * a.values)

    tape.record(out, (a, b), backward)
    return out


def row_scale(tape: Tape, d: Tensor, x: Tensor) -> Tensor:
    """Scale row e of x by d[e]; d is a length-m vector (edge weights)."""
    if d.values.ndim != 1 or d.values.shape[0] != x.values.shape[0]:
        raise ValueError("row_scale weight must be a vector matching x rows")
    out = Tensor(d.values[:, None] * x.values)

    def backward(g):
        if d.requires_grad:
            _accum(d, np.sum(g * x.values, axis=1))
        if x.requires_grad:
            _accum(x, d.values[:, None] * g)

    tape.record(out, (d, x), backward)
    return out


# ---------------------------------------------------------------------------
# nonlinearities


def relu(tape: Tape, x: Tensor) -> Tensor:
    out = Tensor(np.maximum(x.values, 0))

    def backward(g):
        _accum(x, g * (x.values > 0))  # subgradient 0 at exactly 0

    tape.record(out, (x,), backward)
    return out


def tanh(tape: Tape, x: Tensor) -> Tensor:
    y = np.tanh(x.values)
    out = Tensor(y)

    def backward(g):
        _accum(x, g * (1.0 - y * y))

    tape.record(out, (x,), backward)
    return out


def elu(tape: Tape, x: Tensor) -> Tensor:
    neg = x.values < 0
    y = np.where(neg, np.expm1(x.values), x.values)
    out = Tensor(y)

    def backward(g):
        _accum(x, g * np.where(neg, y + 1.0, np.ones_like(y)))

    tape.record(out, (x,), backward)
    return out


def sigmoid(tape: Tape, x: Tensor) -> Tensor:
    y = sigmoid_values(x.values)
    out = Tensor(y)

    def backward(g):
        _accum(x, g * y * (1.0 - y))

    tape.record(out, (x,), backward)
    return out


def sigmoid_values(x: np.ndarray) -> np.ndarray:
    """Plain-array sigmoid; shared so taped and clamped paths agree bitwise."""
    x = np.asarray(x)
    out = np.empty_like(x, dtype=x.dtype)
    pos = x >= 0
    out[pos] = 1.0 / (1.0 + np.exp(-x[pos]))
    ex = np.exp(x[~pos])
    out[~pos] = ex / (1.0 + ex)
    return out


def dropout(tape: Tape, x: Tensor, p: float, training: bool, rng) -> Tensor:
    """Inverted dropout: scaled by 1/(1-p) at train time, identity in eval."""
    if not training or p <= 0.0:
        return x
    if not 0.0 <= p < 1.0:
        raise ValueError(f"dropout probability must be in [0, 1), got {p}")
    draw_dtype = x.values.dtype if x.values.dtype in (np.float32, np.float64) \
        else np.float64
    keep = (rng.random(x.values.shape, dtype=draw_dtype) >= p)
    factor = np.asarray(1.0 / (1.0 - p), dtype=x.values.dtype)
    mask = keep.astype(x.values.dtype) * factor
    out = Tensor(x.values * mask)

    def backward(g):
        _accum(x, g * mask)

    tape.record(out, (x,), backward)
    return out


# ---------------------------------------------------------------------------
# reductions / loss


def ssum(tape: Tape, x: Tensor) -> Tensor:
    """Sum of all entries, as a scalar tensor."""
    out = Tensor(np.asarray(np.sum(x.values, dtype=x.values.dtype)))

    def backward(g):
        _accum(x, np.broadcast_to(g, x.values.shape).astype(x.values.dtype))

    tape.record(out, (x,), backward)
    return out


def half_sumsq(tape: Tape, x: Tensor) -> Tensor:
    """0.5 * sum of squares, as a scalar tensor."""
    out = Tensor(np.asarray(0.5 * np.sum(x.values * x.values,
                                         dtype=x.values.dtype)))

    def backward(g):
        _accum(x, g * x.values)

    tape.record(out, (x,), backward)
    return out


def softmax_cross_entropy(tape: Tape, logits: Tensor, labels: np.ndarray,
                          mask: np.ndarray) -> Tensor:
    """Mean cross-entropy over masked rows, stabilized by row-max subtraction."""
    idx = np.flatnonzero(np.asarray(mask))
    if idx.size == 0:
        raise ValueError("loss mask selects no rows")
    lbl = np.asarray(labels)[idx]
    z = logits.values[idx]
    zmax = z.max(axis=1, keepdims=True)
    shifted = z - zmax
    ez = np.exp(shifted)
    denom = ez.sum(axis=1, keepdims=True)
    logp = shifted - np.log(denom)
    n = idx.size
    out = Tensor(np.asarray(-logp[np.arange(n), lbl].mean(),
                            dtype=logits.values.dtype))
    probs = ez / denom

    def backward(g):
        d = probs.copy()
        d[np.arange(n), lbl] -= 1.0
        d *= g / n
        full = np.zeros_like(logits.values)
        full[idx] = d
        _accum(logits, full)

    tape.record(out, (logits,), backward)
    return out


ACTIVATIONS = {
    "relu": relu,
    "identity": lambda tape, x: x,
    "elu": elu,
    "tanh": tanh,
}

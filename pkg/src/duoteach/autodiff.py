"""Reverse-mode automatic differentiation over 2-D float64 arrays.

A deliberately small engine: rank-2 tensors only, one explicit :class:`Tape`
per training step, and a hand-derived adjoint per operation. Dense kernels
delegate to numpy; nothing here touches more than the ops the models need.

Typical step::

    tape = Tape()
    w = tape.watch(param)                  # leaf hooked to a Parameter
    loss = cross_entropy(log_softmax_rows(matmul(x, w)), labels, train_idx)
    backward(loss)
    adam_step([param], lr=1e-3, weight_decay=5e-4)
    zero_grads([param])
"""

from __future__ import annotations

import os

import numpy as np

from .errors import ConfigError, DimensionError, TapeError
from .sparsemat import SparseRowMatrix

Array = np.ndarray


def _adam_loop(value, grad, m, v, decay, scale, b1, b2, c2, eps):
    # one fused pass; the imputation/encoding tables are feature-matrix sized
    for i in range(value.shape[0]):
        g = grad[i]
        m[i] = b1 * m[i] + (1.0 - b1) * g
        v[i] = b2 * v[i] + (1.0 - b2) * (g * g)
        value[i] = value[i] * decay - scale * m[i] / (np.sqrt(v[i] / c2) + eps)


if os.environ.get("DUOTEACH_NO_NUMBA"):
    _adam_fused = None
else:
    try:
        from numba import njit

        _adam_fused = njit(cache=True)(_adam_loop)
    except ImportError:  # pragma: no cover
        _adam_fused = None


def as_matrix(value) -> Array:
    """Coerce to a 2-D float64 array (scalars -> 1x1, vectors -> 1xN rows)."""
    arr = np.asarray(value, dtype=np.float64)
    if arr.ndim == 0:
        return arr.reshape(1, 1)
    if arr.ndim == 1:
        return arr.reshape(1, -1)
    if arr.ndim != 2:
        raise DimensionError(f"expected rank <= 2, got shape {arr.shape}")
    return arr


class Parameter:
    """Trainable dense matrix carrying its gradient accumulator and Adam state."""

    __slots__ = ("name", "value", "grad", "adam_m", "adam_v", "adam_steps")

    def __init__(self, value, name: str = ""):
        self.name = name
        self.value = as_matrix(value).copy()
        self.grad = np.zeros_like(self.value)
        self.adam_m = np.zeros_like(self.value)
        self.adam_v = np.zeros_like(self.value)
        self.adam_steps = 0

    @property
    def shape(self):
        return self.value.shape

    def __repr__(self):
        return f"Parameter({self.name or 'unnamed'}, shape={self.value.shape})"


class Tensor:
    """A value in the computation; tape=None means a constant."""

    __slots__ = ("value", "tape")

    def __init__(self, value, tape: "Tape | None" = None):
        self.value = as_matrix(value)
        self.tape = tape

    @property
    def shape(self):
        return self.value.shape

    def item(self) -> float:
        if self.value.size != 1:
            raise TapeError(f"item() on non-scalar tensor of shape {self.value.shape}")
        return float(self.value[0, 0])

    def __repr__(self):
        kind = "const" if self.tape is None else "tracked"
        return f"Tensor({kind}, shape={self.value.shape})"


def constant(value) -> Tensor:
    return Tensor(value, None)


class Tape:
    """Ordered record of differentiable operations, replayed in reverse."""

    def __init__(self):
        self._records: list[tuple[Tensor, tuple[Tensor, ...], object]] = []
        self._watched: list[tuple[Parameter, Tensor]] = []
        self._spent = False

    def watch(self, param: Parameter) -> Tensor:
        """Create a leaf tensor for ``param``; its gradient lands in param.grad."""
        leaf = Tensor(param.value, self)
        self._watched.append((param, leaf))
        return leaf

    def record(self, out_value: Array, inputs: tuple[Tensor, ...], backward) -> Tensor:
        if self._spent:
            raise TapeError("tape already consumed by backward()")
        out = Tensor(out_value, self)
        self._records.append((out, inputs, backward))
        return out

    def reset(self) -> None:
        self._records.clear()
        self._watched.clear()
        self._spent = False

    def backward(self, loss: Tensor) -> None:
        if loss.tape is not self:
            raise TapeError("loss does not belong to this tape")
        if loss.value.size != 1:
            raise TapeError(f"backward() needs a scalar loss, got shape {loss.value.shape}")
        if self._spent:
            raise TapeError("backward() already called on this tape")
        self._spent = True

        grads: dict[int, Array] = {id(loss): np.ones((1, 1))}
        for out, inputs, backward_fn in reversed(self._records):
            g_out = grads.pop(id(out), None)
            if g_out is None:
                continue
            g_inputs = backward_fn(g_out)
            for tensor, g in zip(inputs, g_inputs):
                if g is None or tensor.tape is None:
                    continue
                acc = grads.get(id(tensor))
                # out-of-place: adjoints may alias each other (e.g. add returns g twice)
                grads[id(tensor)] = g if acc is None else acc + g
        for param, leaf in self._watched:
            g = grads.get(id(leaf))
            if g is not None:
                param.grad += g


def backward(loss: Tensor) -> None:
    """Run reverse-mode accumulation from a scalar loss into watched parameters."""
    if loss.tape is None:
        raise TapeError("backward() on a constant: nothing is watched")
    loss.tape.backward(loss)


def _emit(value: Array, inputs: tuple[Tensor, ...], backward_fn) -> Tensor:
    tape = None
    for t in inputs:
        if t.tape is None:
            continue
        if tape is None:
            tape = t.tape
        elif tape is not t.tape:
            raise TapeError("operands belong to different tapes")
    if tape is None:
        return Tensor(value, None)
    return tape.record(value, inputs, backward_fn)


# Other modules build fused ops (losses, imputation, ...) through this hook.
def emit(value, inputs: tuple[Tensor, ...], backward_fn) -> Tensor:
    """Record a custom differentiable op: backward_fn(g) -> per-input adjoints."""
    return _emit(as_matrix(value), inputs, backward_fn)


# ---------------------------------------------------------------------------
# core ops


def matmul(a: Tensor, b: Tensor) -> Tensor:
    av, bv = a.value, b.value
    if av.shape[1] != bv.shape[0]:
        raise DimensionError(f"matmul: {av.shape} x {bv.shape}")

    def bwd(g):
        return g @ bv.T, av.T @ g

    return _emit(av @ bv, (a, b), bwd)


def sparse_matmul(s: SparseRowMatrix, d: Tensor) -> Tensor:
    """Constant sparse matrix times dense tensor; no gradient flows into s."""
    if s.cols != d.value.shape[0]:
        raise DimensionError(f"sparse_matmul: {(s.rows, s.cols)} x {d.value.shape}")
    handle = s.to_scipy()
    handle_t = s.transpose_scipy()
    dv = d.value

    def bwd(g):
        return (handle_t @ g,)

    return _emit(handle @ dv, (d,), bwd)


def add(a: Tensor, b: Tensor) -> Tensor:
    if a.value.shape != b.value.shape:
        raise DimensionError(f"add: {a.value.shape} vs {b.value.shape}")

    def bwd(g):
        return g, g

    return _emit(a.value + b.value, (a, b), bwd)


def add_bias(x: Tensor, b: Tensor) -> Tensor:
    """Add a 1xK bias row to every row of x."""
    if b.value.shape != (1, x.value.shape[1]):
        raise DimensionError(f"add_bias: bias {b.value.shape} vs input {x.value.shape}")

    def bwd(g):
        return g, g.sum(axis=0, keepdims=True)

    return _emit(x.value + b.value, (x, b), bwd)


def scale(x: Tensor, c: float) -> Tensor:
    c = float(c)

    def bwd(g):
        return (g * c,)

    return _emit(x.value * c, (x,), bwd)


def mul(a: Tensor, b: Tensor) -> Tensor:
    if a.value.shape != b.value.shape:
        raise DimensionError(f"mul: {a.value.shape} vs {b.value.shape}")
    av, bv = a.value, b.value

    def bwd(g):
        return g * bv, g * av

    return _emit(av * bv, (a, b), bwd)


def scale_rows(x: Tensor, s: Tensor) -> Tensor:
    """Multiply row i of x by scalar s[i, 0]."""
    if s.value.shape != (x.value.shape[0], 1):
        raise DimensionError(f"scale_rows: scales {s.value.shape} vs input {x.value.shape}")
    xv, sv = x.value, s.value

    def bwd(g):
        return g * sv, (g * xv).sum(axis=1, keepdims=True)

    return _emit(xv * sv, (x, s), bwd)


def relu(x: Tensor) -> Tensor:
    mask = x.value > 0

    def bwd(g):
        return (g * mask,)

    return _emit(np.where(mask, x.value, 0.0), (x,), bwd)


def leaky_relu(x: Tensor, slope: float = 0.2) -> Tensor:
    factor = np.where(x.value > 0, 1.0, slope)

    def bwd(g):
        return (g * factor,)

    return _emit(x.value * factor, (x,), bwd)


def elu(x: Tensor, alpha: float = 1.0) -> Tensor:
    pos = x.value > 0
    out = np.where(pos, x.value, alpha * np.expm1(x.value))
    factor = np.where(pos, 1.0, out + alpha)  # d/dx alpha*(e^x - 1) = out + alpha

    def bwd(g):
        return (g * factor,)

    return _emit(out, (x,), bwd)


def log_softmax_rows(x: Tensor) -> Tensor:
    shifted = x.value - x.value.max(axis=1, keepdims=True)
    log_probs = shifted - np.log(np.exp(shifted).sum(axis=1, keepdims=True))
    probs = np.exp(log_probs)

    def bwd(g):
        return (g - probs * g.sum(axis=1, keepdims=True),)

    return _emit(log_probs, (x,), bwd)


def dropout(x: Tensor, p: float, training: bool, rng: np.random.Generator | None = None) -> Tensor:
    if not 0.0 <= p < 1.0:
        raise ConfigError(f"dropout rate must be in [0, 1), got {p}")
    if not training or p == 0.0:
        return x
    if rng is None:
        raise ConfigError("dropout in training mode needs an rng")
    keep = (rng.random(x.value.shape) >= p) / (1.0 - p)

    def bwd(g):
        return (g * keep,)

    return _emit(x.value * keep, (x,), bwd)


def transpose(x: Tensor) -> Tensor:
    def bwd(g):
        return (g.T,)

    return _emit(x.value.T, (x,), bwd)


def concat_cols(parts: list[Tensor]) -> Tensor:
    rows = parts[0].value.shape[0]
    for p in parts:
        if p.value.shape[0] != rows:
            raise DimensionError("concat_cols: row counts differ")
    widths = [p.value.shape[1] for p in parts]
    bounds = np.cumsum([0] + widths)

    def bwd(g):
        return tuple(g[:, bounds[i]:bounds[i + 1]] for i in range(len(parts)))

    return _emit(np.hstack([p.value for p in parts]), tuple(parts), bwd)


def gather_rows(x: Tensor, idx: Array) -> Tensor:
    idx = np.asarray(idx, dtype=np.int64)
    shape = x.value.shape

    def bwd(g):
        out = np.zeros(shape)
        np.add.at(out, idx, g)
        return (out,)

    return _emit(x.value[idx], (x,), bwd)


def segment_sum(x: Tensor, segments: Array, num_segments: int) -> Tensor:
    """Sum rows of x into num_segments buckets given by the segments index array."""
    segments = np.asarray(segments, dtype=np.int64)
    if segments.shape[0] != x.value.shape[0]:
        raise DimensionError("segment_sum: one segment id per row required")
    out = np.zeros((num_segments, x.value.shape[1]))
    np.add.at(out, segments, x.value)

    def bwd(g):
        return (g[segments],)

    return _emit(out, (x,), bwd)


def segment_softmax(scores: Tensor, segments: Array, num_segments: int) -> Tensor:
    """Numerically stable softmax over rows sharing a segment id (scores are Ex1)."""
    if scores.value.shape[1] != 1:
        raise DimensionError("segment_softmax expects an Ex1 score column")
    segments = np.asarray(segments, dtype=np.int64)
    col = scores.value[:, 0]
    seg_max = np.full(num_segments, -np.inf)
    np.maximum.at(seg_max, segments, col)
    exp = np.exp(col - seg_max[segments])
    denom = np.zeros(num_segments)
    np.add.at(denom, segments, exp)
    out = (exp / denom[segments])[:, None]

    def bwd(g):
        weighted = np.zeros(num_segments)
        np.add.at(weighted, segments, (out * g)[:, 0])
        return (out * (g - weighted[segments][:, None]),)

    return _emit(out, (scores,), bwd)


def sum_all(x: Tensor) -> Tensor:
    shape = x.value.shape

    def bwd(g):
        return (np.full(shape, g[0, 0]),)

    return _emit(np.array([[x.value.sum()]]), (x,), bwd)


def cross_entropy(log_probs: Tensor, labels: Array, index_set: Array) -> Tensor:
    """Mean negative log-likelihood of the true class over index_set."""
    labels = np.asarray(labels, dtype=np.int64)
    idx = np.asarray(index_set, dtype=np.int64)
    if idx.size == 0:
        raise ConfigError("cross_entropy: empty index set")
    n, classes = log_probs.value.shape
    picked = labels[idx]
    if picked.min() < 0 or picked.max() >= classes:
        raise ConfigError(f"cross_entropy: labels outside [0, {classes})")
    value = -log_probs.value[idx, picked].mean()

    def bwd(g):
        out = np.zeros((n, classes))
        out[idx, picked] = -g[0, 0] / idx.size
        return (out,)

    return _emit(np.array([[value]]), (log_probs,), bwd)


# ---------------------------------------------------------------------------
# optimizer


def adam_step(params, lr, weight_decay=0.0, beta1=0.9, beta2=0.999, eps=1e-8) -> None:
    """One Adam update per parameter; weight decay is decoupled (applied first).

    Moment buffers are updated in place, via a single fused pass when numba is
    available: imputation tables are as large as the feature matrix, so
    per-step temporaries dominate the optimizer cost.
    """
    for p in params:
        p.adam_steps += 1
        decay = 1.0 - lr * weight_decay
        scale = lr / (1.0 - beta1 ** p.adam_steps)
        c2 = 1.0 - beta2 ** p.adam_steps
        if _adam_fused is not None:
            _adam_fused(p.value.reshape(-1), p.grad.reshape(-1),
                        p.adam_m.reshape(-1), p.adam_v.reshape(-1),
                        decay, scale, beta1, beta2, c2, eps)
            continue
        if weight_decay:
            p.value *= decay
        p.adam_m *= beta1
        p.adam_m += (1.0 - beta1) * p.grad
        p.adam_v *= beta2
        p.adam_v += (1.0 - beta2) * np.square(p.grad)
        denom = np.sqrt(p.adam_v / c2)
        denom += eps
        p.value -= scale * p.adam_m / denom


def zero_grads(params) -> None:
    for p in params:
        p.grad[...] = 0.0

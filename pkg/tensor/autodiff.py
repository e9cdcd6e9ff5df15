"""
Dense float64 matrices recorded on a reverse-mode differentiation tape.

Every forward op that touches a tape-bound Tensor appends exactly one
TapeRecord holding the ids of its inputs, the id of its output and a
backward rule mapping the output gradient to one gradient per input.
Tensors with no tape are plain constants; ops on them record nothing.
"""
import logging
from dataclasses import dataclass
from typing import Callable, Dict, List, Optional, Sequence, Tuple

import numpy as np
from scipy.special import expit, log_softmax, softmax

from utils.errors import ShapeError, UsageError

logger = logging.getLogger("LDGCN")


class Tensor:
    """A read-only 2-D float64 array, optionally bound to a Tape node."""

    __slots__ = ("values", "tape", "node_id")

    def __init__(self, values, tape=None, node_id=None, copy=True):
        arr = np.array(values, dtype=np.float64, copy=copy)
        if arr.ndim == 0:
            arr = arr.reshape(1, 1)
        elif arr.ndim == 1:
            arr = arr.reshape(1, -1)
        if arr.ndim != 2 or 0 in arr.shape:
            raise ShapeError(f"Tensor needs a non-empty 2-D shape, got {arr.shape}")
        arr.setflags(write=False)
        self.values = arr
        self.tape = tape
        self.node_id = node_id

    @property
    def shape(self) -> List[int]:
        return list(self.values.shape)

    @property
    def rows(self) -> int:
        return self.values.shape[0]

    @property
    def cols(self) -> int:
        return self.values.shape[1]

    def item(self) -> float:
        if self.values.size != 1:
            raise ShapeError(f"item() needs a single value, tensor has shape {self.shape}")
        return float(self.values[0, 0])

    def numpy(self) -> np.ndarray:
        return self.values.copy()

    def detach(self) -> "Tensor":
        return Tensor(self.values, copy=False)

    def __repr__(self):
        bound = f", node={self.node_id}" if self.tape is not None else ""
        return f"Tensor(shape={self.shape}{bound})"


@dataclass(frozen=True)
class TapeRecord:
    op: str
    inputs: Tuple[Optional[int], ...]
    output: int
    backward: Callable[[np.ndarray], Sequence[Optional[np.ndarray]]]


class Tape:
    """Ordered log of forward ops for one training step on one thread."""

    def __init__(self, counter=None):
        self.records: List[TapeRecord] = []
        self.counter = counter
        self._next_id = 0
        self._params: Dict[str, Tensor] = {}

    def _new_id(self) -> int:
        node_id = self._next_id
        self._next_id += 1
        return node_id

    def constant(self, values) -> Tensor:
        """A leaf that takes part in the graph but is not a parameter."""
        return Tensor(values, tape=self, node_id=self._new_id())

    def watch(self, name: str, values) -> Tensor:
        """The parameter leaf for `name`; every lookup of a name shares one node."""
        if name not in self._params:
            self._params[name] = Tensor(values, tape=self, node_id=self._new_id())
        return self._params[name]

    def record(self, op: str, inputs: Sequence[Tensor], values: np.ndarray, backward) -> Tensor:
        out = Tensor(values, tape=self, node_id=self._new_id(), copy=False)
        self.records.append(
            TapeRecord(op, tuple(t.node_id if t.tape is self else None for t in inputs), out.node_id, backward)
        )
        return out

    @property
    def param_names(self) -> List[str]:
        return list(self._params)

    def touched_params(self) -> List[str]:
        """Names of parameters that some recorded op consumed."""
        used = {node_id for rec in self.records for node_id in rec.inputs}
        return [name for name, t in self._params.items() if t.node_id in used]


def backward(tape: Tape, loss: Tensor) -> Dict[str, np.ndarray]:
    """Gradients of a scalar loss with respect to every parameter watched on `tape`."""
    if loss.values.size != 1:
        raise ShapeError(f"backward() needs a scalar loss, got shape {loss.shape}")
    if loss.tape is not tape:
        raise UsageError("loss was not produced on this tape")

    grads: Dict[int, np.ndarray] = {loss.node_id: np.ones_like(loss.values)}
    for rec in reversed(tape.records):
        g = grads.pop(rec.output, None)
        if g is None:
            continue
        for node_id, gi in zip(rec.inputs, rec.backward(g)):
            if node_id is None or gi is None:
                continue
            grads[node_id] = grads[node_id] + gi if node_id in grads else gi

    return {
        name: grads.get(t.node_id, np.zeros_like(t.values))
        for name, t in tape._params.items()
    }


def _tape_of(*tensors: Tensor) -> Optional[Tape]:
    tape = None
    for t in tensors:
        if t.tape is None:
            continue
        if tape is None:
            tape = t.tape
        elif t.tape is not tape:
            raise UsageError("operands are bound to different tapes")
    return tape


def _emit(op, inputs, values, backward_rule) -> Tensor:
    tape = _tape_of(*inputs)
    if tape is None:
        return Tensor(values, copy=False)
    return tape.record(op, inputs, values, backward_rule)


def _counter_of(*tensors: Tensor):
    tape = _tape_of(*tensors)
    return tape.counter if tape is not None else None


# --- forward ops -----------------------------------------------------------


def matmul(a: Tensor, b: Tensor, counter=None) -> Tensor:
    if a.cols != b.rows:
        raise ShapeError(f"matmul: {a.shape} x {b.shape}")
    counter = counter or _counter_of(a, b)
    if counter is not None:
        counter.track_dense(a.rows, a.cols, b.cols)
    av, bv = a.values, b.values
    return _emit("matmul", (a, b), av @ bv, lambda g: (g @ bv.T, av.T @ g))


def spmm(matrix, h: Tensor, counter=None) -> Tensor:
    """Sparse (scipy) times dense; only the dense operand is differentiable."""
    if matrix.shape[1] != h.rows:
        raise ShapeError(f"spmm: sparse {matrix.shape} x {h.shape}")
    counter = counter or _counter_of(h)
    if counter is not None:
        counter.track_sparse(matrix.nnz, h.cols)
    out = np.asarray(matrix @ h.values)
    return _emit("spmm", (h,), out, lambda g: (np.asarray(matrix.T @ g),))


def add(a: Tensor, b: Tensor) -> Tensor:
    """Elementwise sum; `b` may also be a 1-row bias broadcast over a's rows."""
    if a.shape == b.shape:
        return _emit("add", (a, b), a.values + b.values, lambda g: (g, g))
    if b.rows == 1 and b.cols == a.cols:
        return _emit(
            "add_bias", (a, b), a.values + b.values, lambda g: (g, g.sum(axis=0, keepdims=True))
        )
    raise ShapeError(f"add: {a.shape} + {b.shape}")


def sub(a: Tensor, b: Tensor) -> Tensor:
    if a.shape != b.shape:
        raise ShapeError(f"sub: {a.shape} - {b.shape}")
    return _emit("sub", (a, b), a.values - b.values, lambda g: (g, -g))


def mul(a: Tensor, b: Tensor) -> Tensor:
    if a.shape != b.shape:
        raise ShapeError(f"mul: {a.shape} * {b.shape}")
    av, bv = a.values, b.values
    return _emit("mul", (a, b), av * bv, lambda g: (g * bv, g * av))


def scalar_mul(x: Tensor, c: float) -> Tensor:
    c = float(c)
    return _emit("scalar_mul", (x,), x.values * c, lambda g: (g * c,))


def add_scalar(x: Tensor, c: float) -> Tensor:
    c = float(c)
    return _emit("add_scalar", (x,), x.values + c, lambda g: (g,))


def concat_cols(tensors: Sequence[Tensor]) -> Tensor:
    if not tensors:
        raise ShapeError("concat_cols of nothing")
    rows = tensors[0].rows
    if any(t.rows != rows for t in tensors):
        raise ShapeError(f"concat_cols: row counts differ {[t.shape for t in tensors]}")
    bounds = np.cumsum([0] + [t.cols for t in tensors])

    def rule(g):
        return tuple(g[:, bounds[i]:bounds[i + 1]] for i in range(len(tensors)))

    return _emit("concat_cols", tuple(tensors), np.concatenate([t.values for t in tensors], axis=1), rule)


def slice_cols(x: Tensor, start: int, stop: int) -> Tensor:
    if not 0 <= start < stop <= x.cols:
        raise ShapeError(f"slice_cols [{start}:{stop}] of {x.shape}")

    def rule(g):
        full = np.zeros_like(x.values)
        full[:, start:stop] = g
        return (full,)

    return _emit("slice_cols", (x,), x.values[:, start:stop].copy(), rule)


def transpose(x: Tensor) -> Tensor:
    return _emit("transpose", (x,), x.values.T.copy(), lambda g: (g.T,))


def sigmoid(x: Tensor) -> Tensor:
    s = expit(x.values)
    return _emit("sigmoid", (x,), s, lambda g: (g * s * (1.0 - s),))


def relu(x: Tensor) -> Tensor:
    mask = x.values > 0
    return _emit("relu", (x,), np.where(mask, x.values, 0.0), lambda g: (g * mask,))


def tanh(x: Tensor) -> Tensor:
    t = np.tanh(x.values)
    return _emit("tanh", (x,), t, lambda g: (g * (1.0 - t * t),))


def identity(x: Tensor) -> Tensor:
    return x


def dropout(x: Tensor, rate: float, rng: np.random.Generator) -> Tensor:
    """
    Inverted dropout: zeroes each entry with probability `rate` and scales the
    survivors by 1 / (1 - rate). Rate 0 returns x itself and draws nothing.
    """
    if not 0.0 <= rate < 1.0:
        raise UsageError(f"dropout rate must lie in [0, 1), got {rate}")
    if rate == 0.0:
        return x
    mask = (rng.random(x.values.shape) >= rate) / (1.0 - rate)
    return _emit("dropout", (x,), x.values * mask, lambda g: (g * mask,))


ACTIVATIONS = {"relu": relu, "tanh": tanh, "identity": identity}


def activation(name: str):
    try:
        return ACTIVATIONS[name]
    except KeyError:
        raise UsageError(f"unknown activation {name!r}; expected one of {sorted(ACTIVATIONS)}")


def softmax_rows(x: Tensor) -> Tensor:
    s = softmax(x.values, axis=1)

    def rule(g):
        return (s * (g - (g * s).sum(axis=1, keepdims=True)),)

    return _emit("softmax_rows", (x,), s, rule)


def sum_all(x: Tensor) -> Tensor:
    return _emit("sum_all", (x,), np.array([[x.values.sum()]]), lambda g: (np.full_like(x.values, g[0, 0]),))


def mean_rows(x: Tensor) -> Tensor:
    """Column means as a 1-row tensor."""
    n = x.rows
    return _emit(
        "mean_rows", (x,), x.values.mean(axis=0, keepdims=True), lambda g: (np.repeat(g / n, n, axis=0),)
    )


def take_rows(table: Tensor, indices: Sequence[int]) -> Tensor:
    """Row lookup; the gradient scatters back onto the looked-up rows only."""
    idx = np.asarray(indices, dtype=np.int64)

    def rule(g):
        full = np.zeros_like(table.values)
        np.add.at(full, idx, g)
        return (full,)

    return _emit("take_rows", (table,), table.values[idx], rule)


def cross_entropy(logits: Tensor, targets: Sequence[int]) -> Tensor:
    """Summed negative log-likelihood of one target index per logits row."""
    idx = np.asarray(targets, dtype=np.int64)
    if idx.shape != (logits.rows,):
        raise ShapeError(f"cross_entropy: {len(idx)} targets for {logits.rows} rows")
    logp = log_softmax(logits.values, axis=1)
    rows = np.arange(logits.rows)
    loss = -logp[rows, idx].sum()

    def rule(g):
        grad = np.exp(logp)
        grad[rows, idx] -= 1.0
        return (grad * g[0, 0],)

    return _emit("cross_entropy", (logits,), np.array([[loss]]), rule)

"""Dense float64 arrays with tape-based reverse-mode differentiation.

Every op accepts plain arrays or :class:`Var` handles. When no input is a
``Var`` the op just computes and returns an ndarray, so the same expression
code serves both the differentiable and the value-only path::

    tape = Tape()
    x = tape.variable([1.0, 2.0, 3.0])
    y = ad.sum(x * x)
    grads = tape.backward(y)
    grads[x]            # array([2., 4., 6.])

Broadcasting follows numpy for the elementwise binary ops only.
"""

from __future__ import annotations

import math
from dataclasses import dataclass, field
from typing import Callable, Sequence

import numpy as np

from . import kernels

LN2 = math.log(2.0)


class AutodiffError(Exception):
    """Base class for errors raised by the differentiation engine."""


class ShapeError(AutodiffError, ValueError):
    def __init__(self, op: str, *shapes):
        self.op = op
        self.shapes = shapes
        pretty = ", ".join(str(tuple(s)) for s in shapes)
        super().__init__(f"{op}: incompatible shapes {pretty}")


class NonFiniteError(AutodiffError, FloatingPointError):
    def __init__(self, op: str):
        self.op = op
        super().__init__(f"{op}: produced a non-finite value")


class DomainError(AutodiffError, ValueError):
    pass


class DetachedError(AutodiffError):
    pass


@dataclass
class _Node:
    kind: str
    parents: tuple  # tape indices, or None for constant inputs
    vjp: Callable | None = field(default=None, repr=False)


class Var:
    """Handle to a value recorded on a :class:`Tape`."""

    __slots__ = ("tape", "index", "value")
    __array_priority__ = 1000

    def __init__(self, tape: "Tape", index: int, value: np.ndarray):
        self.tape = tape
        self.index = index
        self.value = value

    @property
    def shape(self):
        return self.value.shape

    @property
    def ndim(self):
        return self.value.ndim

    @property
    def size(self):
        return self.value.size

    @property
    def T(self):
        return transpose(self)

    def __repr__(self):
        return f"Var(#{self.index}, shape={self.value.shape})"

    def __float__(self):
        return float(self.value)

    def __add__(self, other):
        return add(self, other)

    def __radd__(self, other):
        return add(other, self)

    def __sub__(self, other):
        return sub(self, other)

    def __rsub__(self, other):
        return sub(other, self)

    def __mul__(self, other):
        return mul(self, other)

    def __rmul__(self, other):
        return mul(other, self)

    def __truediv__(self, other):
        return div(self, other)

    def __rtruediv__(self, other):
        return div(other, self)

    def __matmul__(self, other):
        return matmul(self, other)

    def __rmatmul__(self, other):
        return matmul(other, self)

    def __neg__(self):
        return scalar_mul(self, -1.0)


class Tape:
    """Ordered record of differentiable operations.

    Nodes are appended in execution order, which is a topological order by
    construction. ``backward`` walks it once in reverse.
    """

    def __init__(self):
        self.nodes: list[_Node] = []
        self.leaves: list[Var] = []

    def __len__(self):
        return len(self.nodes)

    def variable(self, value) -> Var:
        arr = _freeze(np.array(value, dtype=np.float64))
        if not np.all(np.isfinite(arr)):
            raise NonFiniteError("variable")
        var = Var(self, len(self.nodes), arr)
        self.nodes.append(_Node("leaf", ()))
        self.leaves.append(var)
        return var

    def _record(self, kind, parents, value, vjp) -> Var:
        var = Var(self, len(self.nodes), value)
        self.nodes.append(_Node(kind, parents, vjp))
        return var

    def backward(self, output: Var, grad_output=None) -> dict[Var, np.ndarray]:
        """Gradients of ``output`` with respect to every leaf variable.

        ``output`` must be a single-element value unless ``grad_output`` is
        given, in which case the result is the vector-Jacobian product with
        that seed.
        """
        if not isinstance(output, Var) or output.tape is not self:
            raise DetachedError("output was not recorded on this tape")
        if grad_output is None:
            if output.size != 1:
                raise ShapeError("backward (non-scalar output)", output.shape)
            seed = np.ones_like(output.value)
        else:
            seed = np.asarray(grad_output, dtype=np.float64)
            if seed.shape != output.shape:
                raise ShapeError("backward (seed)", seed.shape, output.shape)

        grads: list[np.ndarray | None] = [None] * (output.index + 1)
        grads[output.index] = seed
        for idx in range(output.index, -1, -1):
            g = grads[idx]
            node = self.nodes[idx]
            if g is None or node.vjp is None:
                continue
            for parent, pg in zip(node.parents, node.vjp(g)):
                if parent is None or pg is None:
                    continue
                grads[parent] = pg if grads[parent] is None else grads[parent] + pg

        out = {}
        for leaf in self.leaves:
            g = grads[leaf.index] if leaf.index <= output.index else None
            out[leaf] = np.zeros_like(leaf.value) if g is None else np.asarray(g)
        return out


def _freeze(arr: np.ndarray) -> np.ndarray:
    arr.flags.writeable = False
    return arr


def value_of(x) -> np.ndarray:
    """Underlying ndarray of a Var or array-like."""
    if isinstance(x, Var):
        return x.value
    return np.asarray(x, dtype=np.float64)


def _unbroadcast(g: np.ndarray, shape) -> np.ndarray:
    while g.ndim > len(shape):
        g = g.sum(axis=0)
    for axis, size in enumerate(shape):
        if size == 1 and g.shape[axis] != 1:
            g = g.sum(axis=axis, keepdims=True)
    return g


# -- op table ---------------------------------------------------------------
# Each entry: forward(*values, **params) -> out
#             vjp(g, out, *values, **params) -> tuple of input gradients


def _check_broadcast(op, a, b):
    try:
        np.broadcast_shapes(a.shape, b.shape)
    except ValueError:
        raise ShapeError(op, a.shape, b.shape) from None


def _add_fwd(a, b):
    _check_broadcast("add", a, b)
    return a + b


def _add_vjp(g, out, a, b):
    return _unbroadcast(g, a.shape), _unbroadcast(g, b.shape)


def _sub_fwd(a, b):
    _check_broadcast("sub", a, b)
    return a - b


def _sub_vjp(g, out, a, b):
    return _unbroadcast(g, a.shape), _unbroadcast(-g, b.shape)


def _mul_fwd(a, b):
    _check_broadcast("mul", a, b)
    return a * b


def _mul_vjp(g, out, a, b):
    return _unbroadcast(g * b, a.shape), _unbroadcast(g * a, b.shape)


def _div_fwd(a, b):
    _check_broadcast("div", a, b)
    return a / b


def _div_vjp(g, out, a, b):
    return _unbroadcast(g / b, a.shape), _unbroadcast(-g * out / b, b.shape)


def _matmul_fwd(a, b):
    if not (1 <= a.ndim <= 2 and 1 <= b.ndim <= 2) or a.shape[-1] != b.shape[0]:
        raise ShapeError("matmul", a.shape, b.shape)
    return a @ b


def _matmul_vjp(g, out, a, b):
    if a.ndim == 2 and b.ndim == 2:
        return g @ b.T, a.T @ g
    if a.ndim == 2:  # matrix @ vector
        return np.outer(g, b), a.T @ g
    if b.ndim == 2:  # vector @ matrix
        return b @ g, np.outer(a, g)
    return g * b, g * a


def _scalar_mul_fwd(x, c):
    return x * c


def _scalar_mul_vjp(g, out, x, c):
    return (g * c,)


def _exp_vjp(g, out, x):
    return (g * out,)


def _log2_fwd(x):
    if np.any(x <= 0):
        raise DomainError("log2: input must be strictly positive")
    return np.log2(x)


def _log2_vjp(g, out, x):
    return (g / (x * LN2),)


def _sqrt_fwd(x):
    if np.any(x < 0):
        raise DomainError("sqrt: input must be non-negative")
    return np.sqrt(x)


def _sqrt_vjp(g, out, x):
    # subgradient 0 at the origin
    safe = np.where(out > 0, out, 1.0)
    return (np.where(out > 0, 0.5 * g / safe, 0.0),)


def _abs_vjp(g, out, x):
    return (g * np.sign(x),)


def _pow2m1_fwd(x):
    return np.exp2(x) - 1.0


def _pow2m1_vjp(g, out, x):
    return (g * LN2 * (out + 1.0),)


def _softmax_fwd(x):
    if x.ndim != 2:
        raise ShapeError("softmax_rows", x.shape)
    return kernels.softmax_rows(x)


def _softmax_vjp(g, out, x):
    return (kernels.softmax_rows_vjp(out, g),)


def _sum_fwd(x):
    return np.asarray(x.sum())


def _sum_vjp(g, out, x):
    return (np.broadcast_to(g, x.shape).copy(),)


def _sum_axis_fwd(x, axis, keepdims=False):
    if not -x.ndim <= axis < x.ndim:
        raise ShapeError(f"sum_axis(axis={axis})", x.shape)
    return x.sum(axis=axis, keepdims=keepdims)


def _sum_axis_vjp(g, out, x, axis, keepdims=False):
    if not keepdims:
        g = np.expand_dims(g, axis)
    return (np.broadcast_to(g, x.shape).copy(),)


def _transpose_fwd(x):
    if x.ndim != 2:
        raise ShapeError("transpose", x.shape)
    return x.T.copy()


def _transpose_vjp(g, out, x):
    return (g.T,)


def _tanh_vjp(g, out, x):
    return (g * (1.0 - out * out),)


def _sigmoid_fwd(x):
    return 0.5 * (1.0 + np.tanh(0.5 * x))


def _sigmoid_vjp(g, out, x):
    return (g * out * (1.0 - out),)


def _softplus_fwd(x):
    return np.logaddexp(0.0, x)


def _softplus_vjp(g, out, x):
    return (g * _sigmoid_fwd(x),)


def _clamp_fwd(x, lo=-np.inf, hi=np.inf):
    return np.clip(x, lo, hi)


def _clamp_vjp(g, out, x, lo=-np.inf, hi=np.inf):
    return (g * ((x >= lo) & (x <= hi)),)


def _reshape_fwd(x, shape):
    try:
        return x.reshape(shape)
    except ValueError:
        raise ShapeError(f"reshape(to={tuple(shape)})", x.shape) from None


def _reshape_vjp(g, out, x, shape):
    return (g.reshape(x.shape),)


def _take_fwd(x, indices):
    idx = np.asarray(indices, dtype=np.int64)
    if idx.size and (idx.min() < -x.shape[0] or idx.max() >= x.shape[0]):
        raise ShapeError("take (index out of range)", x.shape, idx.shape)
    return x[idx]


def _take_vjp(g, out, x, indices):
    gx = np.zeros_like(x)
    np.add.at(gx, np.asarray(indices, dtype=np.int64), g)
    return (gx,)


OPS: dict[str, tuple[Callable, Callable]] = {
    "add": (_add_fwd, _add_vjp),
    "sub": (_sub_fwd, _sub_vjp),
    "mul": (_mul_fwd, _mul_vjp),
    "div": (_div_fwd, _div_vjp),
    "matmul": (_matmul_fwd, _matmul_vjp),
    "scalar_mul": (_scalar_mul_fwd, _scalar_mul_vjp),
    "exp": (np.exp, _exp_vjp),
    "log2": (_log2_fwd, _log2_vjp),
    "sqrt": (_sqrt_fwd, _sqrt_vjp),
    "abs": (np.abs, _abs_vjp),
    "power_of_two_minus_one": (_pow2m1_fwd, _pow2m1_vjp),
    "softmax_rows": (_softmax_fwd, _softmax_vjp),
    "sum": (_sum_fwd, _sum_vjp),
    "sum_axis": (_sum_axis_fwd, _sum_axis_vjp),
    "transpose": (_transpose_fwd, _transpose_vjp),
    "tanh": (np.tanh, _tanh_vjp),
    "sigmoid": (_sigmoid_fwd, _sigmoid_vjp),
    "softplus": (_softplus_fwd, _softplus_vjp),
    "clamp": (_clamp_fwd, _clamp_vjp),
    "reshape": (_reshape_fwd, _reshape_vjp),
    "take": (_take_fwd, _take_vjp),
}


def forward_op(kind: str, *inputs, **params):
    """Apply op ``kind``; record it on the inputs' tape if any input is a Var."""
    try:
        fwd, vjp = OPS[kind]
    except KeyError:
        raise AutodiffError(f"unknown op {kind!r}") from None

    tape = None
    for x in inputs:
        if isinstance(x, Var):
            if tape is None:
                tape = x.tape
            elif x.tape is not tape:
                raise DetachedError(f"{kind}: inputs come from different tapes")
    values = [value_of(x) for x in inputs]

    with np.errstate(all="ignore"):
        out = np.asarray(fwd(*values, **params), dtype=np.float64)
    if not np.all(np.isfinite(out)):
        raise NonFiniteError(kind)
    if tape is None:
        return out

    out = _freeze(out)
    parents = tuple(x.index if isinstance(x, Var) else None for x in inputs)

    def node_vjp(g, _out=out, _values=values, _params=params):
        with np.errstate(all="ignore"):
            return vjp(g, _out, *_values, **_params)

    return tape._record(kind, parents, out, node_vjp)


# -- public op functions ----------------------------------------------------


def add(a, b):
    return forward_op("add", a, b)


def sub(a, b):
    return forward_op("sub", a, b)


def mul(a, b):
    return forward_op("mul", a, b)


def div(a, b):
    return forward_op("div", a, b)


def matmul(a, b):
    return forward_op("matmul", a, b)


def scalar_mul(x, c: float):
    return forward_op("scalar_mul", x, c=float(c))


def exp(x):
    return forward_op("exp", x)


def log2(x):
    return forward_op("log2", x)


def log(x):
    """Natural log, expressed through log2."""
    return scalar_mul(log2(x), LN2)


def sqrt(x):
    return forward_op("sqrt", x)


def abs(x):  # noqa: A001 - mirrors numpy naming
    return forward_op("abs", x)


def power_of_two_minus_one(x):
    return forward_op("power_of_two_minus_one", x)


def softmax_rows(x):
    return forward_op("softmax_rows", x)


def sum(x):  # noqa: A001
    return forward_op("sum", x)


def sum_axis(x, axis: int, keepdims: bool = False):
    return forward_op("sum_axis", x, axis=axis, keepdims=keepdims)


def transpose(x):
    return forward_op("transpose", x)


def tanh(x):
    return forward_op("tanh", x)


def sigmoid(x):
    return forward_op("sigmoid", x)


def softplus(x):
    return forward_op("softplus", x)


def clamp(x, lo: float = -np.inf, hi: float = np.inf):
    return forward_op("clamp", x, lo=lo, hi=hi)


def relu(x):
    return clamp(x, 0.0, np.inf)


def reshape(x, shape: Sequence[int]):
    return forward_op("reshape", x, shape=tuple(shape))


def take(x, indices):
    return forward_op("take", x, indices=np.asarray(indices, dtype=np.int64))


def mean(x):
    return scalar_mul(sum(x), 1.0 / value_of(x).size)


# -- gradient checking -----------------------------------------------------


def grad_check(f: Callable, x, h: float = 1e-5) -> float:
    """Max relative error between the tape gradient of ``f`` and central differences.

    ``f`` must build its result from the ops in this module so that it can
    run both on a Var (analytic path) and on a plain array (numeric path).
    The per-coordinate error is ``|a - n| / max(|a|, |n|, 1e-8)``.
    """
    if h <= 0:
        raise ValueError("step h must be positive")
    x = np.array(x, dtype=np.float64)
    tape = Tape()
    v = tape.variable(x)
    analytic = tape.backward(f(v))[v]

    numeric = np.empty_like(x)
    flat = numeric.reshape(-1)
    for i in range(x.size):
        xp = x.copy().reshape(-1)
        xm = x.copy().reshape(-1)
        xp[i] += h
        xm[i] -= h
        fp = float(value_of(f(xp.reshape(x.shape))))
        fm = float(value_of(f(xm.reshape(x.shape))))
        if not (math.isfinite(fp) and math.isfinite(fm)):
            raise NonFiniteError(f"grad_check (coordinate {i})")
        flat[i] = (fp - fm) / (2.0 * h)

    denom = np.maximum(np.maximum(np.abs(analytic), np.abs(numeric)), 1e-8)
    return float(np.max(np.abs(analytic - numeric) / denom))

"""Dense float64 matrices with reverse-mode automatic differentiation.

Values are plain 2-D numpy arrays, treated as immutable once wrapped in a
Node.  Every op computes its result eagerly and records a closure that
pushes gradients to its parents; ``backward`` walks the tape in reverse
topological order.  The traversal order is fully determined by the tape,
so running ``backward`` twice on the same tape (with a gradient reset in
between) yields bit-identical gradients.

Subgradient conventions: 0 at the kink of both ``relu`` and ``abs_diff``.
"""

from __future__ import annotations

from typing import Callable, Iterable, Sequence

import numpy as np

# Lower clamp applied to probabilities inside cross_entropy before the log.
CLAMP_EPS = 1e-12


class DimensionError(ValueError):
    """Operand shapes are incompatible."""


class ParameterError(ValueError):
    """An op parameter is outside its valid range."""


class UsageError(RuntimeError):
    """An op was driven outside its contract."""


def as_matrix(data) -> np.ndarray:
    """Coerce to a 2-D float64 array; 1-D input becomes a single row."""
    a = np.asarray(data, dtype=np.float64)
    if a.ndim == 1:
        a = a.reshape(1, -1)
    if a.ndim != 2:
        raise DimensionError(f"expected a matrix, got ndim={a.ndim}")
    return np.ascontiguousarray(a)


class Node:
    """One tape entry: a value plus how to push gradients to its parents.

    ``_vjp`` maps the upstream gradient to one gradient array per parent
    (``None`` for parents that do not require grad).
    """

    __slots__ = ("value", "grad", "op", "parents", "_vjp", "requires_grad")

    def __init__(
        self,
        value: np.ndarray,
        op: str = "leaf",
        parents: tuple["Node", ...] = (),
        vjp: Callable[[np.ndarray], Sequence[np.ndarray | None]] | None = None,
        requires_grad: bool = False,
    ) -> None:
        self.value = value
        self.grad: np.ndarray | None = None
        self.op = op
        self.parents = parents
        self._vjp = vjp
        self.requires_grad = requires_grad or any(p.requires_grad for p in parents)

    @property
    def shape(self) -> tuple[int, int]:
        return self.value.shape

    def __repr__(self) -> str:
        return f"Node(op={self.op!r}, shape={self.value.shape})"


def parameter(data) -> Node:
    """A trainable leaf."""
    return Node(as_matrix(data), op="param", requires_grad=True)


def constant(data) -> Node:
    """A non-trainable leaf (inputs, targets, fixed matrices)."""
    return Node(as_matrix(data), op="const")


def _require_same_shape(a: Node, b: Node, op: str) -> None:
    if a.value.shape != b.value.shape:
        raise DimensionError(f"{op}: shape mismatch {a.value.shape} vs {b.value.shape}")


def matmul(a: Node, b: Node) -> Node:
    """Matrix product a @ b."""
    if a.value.shape[1] != b.value.shape[0]:
        raise DimensionError(
            f"matmul: inner dims differ, {a.value.shape} @ {b.value.shape}"
        )
    av, bv = a.value, b.value

    def vjp(g: np.ndarray):
        return g @ bv.T, av.T @ g

    return Node(av @ bv, op="matmul", parents=(a, b), vjp=vjp)


def add(a: Node, b: Node) -> Node:
    """Elementwise sum of two same-shape matrices."""
    _require_same_shape(a, b, "add")

    def vjp(g: np.ndarray):
        return g, g

    return Node(a.value + b.value, op="add", parents=(a, b), vjp=vjp)


def mul(a: Node, b: Node) -> Node:
    """Elementwise (Hadamard) product."""
    _require_same_shape(a, b, "mul")
    av, bv = a.value, b.value

    def vjp(g: np.ndarray):
        return g * bv, g * av

    return Node(av * bv, op="mul", parents=(a, b), vjp=vjp)


def scale(a: Node, c: float) -> Node:
    """Multiply by a Python scalar."""
    c = float(c)

    def vjp(g: np.ndarray):
        return (g * c,)

    return Node(a.value * c, op="scale", parents=(a,), vjp=vjp)


def add_row(a: Node, row: Node) -> Node:
    """Add a 1 x cols row vector to every row of ``a`` (bias broadcast)."""
    if row.value.shape != (1, a.value.shape[1]):
        raise DimensionError(
            f"add_row: bias shape {row.value.shape} does not broadcast over {a.value.shape}"
        )

    def vjp(g: np.ndarray):
        return g, g.sum(axis=0, keepdims=True)

    return Node(a.value + row.value, op="add_row", parents=(a, row), vjp=vjp)


def relu(a: Node) -> Node:
    """max(0, x); gradient passes only where x > 0."""
    mask = a.value > 0.0

    def vjp(g: np.ndarray):
        return (g * mask,)

    return Node(np.where(mask, a.value, 0.0), op="relu", parents=(a,), vjp=vjp)


def abs_diff(a: Node, b: Node) -> Node:
    """Elementwise |a - b| with subgradient 0 where a == b."""
    _require_same_shape(a, b, "abs_diff")
    sgn = np.sign(a.value - b.value)

    def vjp(g: np.ndarray):
        return g * sgn, -g * sgn

    return Node(np.abs(a.value - b.value), op="abs_diff", parents=(a, b), vjp=vjp)


def pairwise_abs_diff(a: Node) -> Node:
    """All ordered-pair row differences |a_i - a_j|, stacked i-major.

    For an n x k input the result is (n*n) x k with row i*n+j holding
    |a_i - a_j|.  Shares abs_diff's subgradient convention.
    """
    x = a.value
    n, k = x.shape
    diff = x[:, None, :] - x[None, :, :]

    def vjp(g: np.ndarray):
        g3 = g.reshape(n, n, k)
        sgn = np.sign(diff)
        return ((sgn * (g3 + g3.transpose(1, 0, 2))).sum(axis=1),)

    return Node(
        np.abs(diff).reshape(n * n, k), op="pairwise_abs_diff", parents=(a,), vjp=vjp
    )


def row_softmax(a: Node, temperature: float = 1.0) -> Node:
    """Per-row softmax of a / temperature, stabilized by max subtraction."""
    t = float(temperature)
    if t <= 0.0:
        raise ParameterError(f"row_softmax: temperature must be > 0, got {t}")
    z = a.value / t
    z = z - z.max(axis=1, keepdims=True)
    e = np.exp(z)
    y = e / e.sum(axis=1, keepdims=True)

    def vjp(g: np.ndarray):
        inner = (g * y).sum(axis=1, keepdims=True)
        return (y * (g - inner) / t,)

    return Node(y, op="row_softmax", parents=(a,), vjp=vjp)


def row_sum(a: Node) -> Node:
    """Sum each row; result is n x 1."""
    def vjp(g: np.ndarray):
        return (np.broadcast_to(g, a.value.shape).copy(),)

    return Node(a.value.sum(axis=1, keepdims=True), op="row_sum", parents=(a,), vjp=vjp)


def rsqrt(a: Node) -> Node:
    """Elementwise x^(-1/2); input must be strictly positive."""
    if np.any(a.value <= 0.0):
        raise ParameterError("rsqrt: input must be strictly positive")
    y = 1.0 / np.sqrt(a.value)

    def vjp(g: np.ndarray):
        return (g * (-0.5) * y**3,)

    return Node(y, op="rsqrt", parents=(a,), vjp=vjp)


def transpose(a: Node) -> Node:
    def vjp(g: np.ndarray):
        return (np.ascontiguousarray(g.T),)

    return Node(np.ascontiguousarray(a.value.T), op="transpose", parents=(a,), vjp=vjp)


def reshape(a: Node, rows: int, cols: int) -> Node:
    if rows * cols != a.value.size:
        raise DimensionError(
            f"reshape: cannot view {a.value.shape} as ({rows}, {cols})"
        )
    shape = a.value.shape

    def vjp(g: np.ndarray):
        return (g.reshape(shape),)

    return Node(a.value.reshape(rows, cols), op="reshape", parents=(a,), vjp=vjp)


def gather_rows(a: Node, rows) -> Node:
    """Select rows by index; gradient scatter-adds back."""
    idx = np.asarray(rows, dtype=np.intp)
    if idx.ndim != 1:
        raise DimensionError("gather_rows: index must be 1-D")
    shape = a.value.shape

    def vjp(g: np.ndarray):
        out = np.zeros(shape)
        np.add.at(out, idx, g)
        return (out,)

    return Node(a.value[idx].copy(), op="gather_rows", parents=(a,), vjp=vjp)


def sum_all(a: Node) -> Node:
    """Sum of every entry; result is 1 x 1."""
    shape = a.value.shape

    def vjp(g: np.ndarray):
        return (np.full(shape, g[0, 0]),)

    return Node(np.array([[a.value.sum()]]), op="sum_all", parents=(a,), vjp=vjp)


def cross_entropy(pred: Node, target: Node) -> Node:
    """Mean-over-rows cross entropy -(1/n) sum_i sum_y t_iy log p_iy.

    Predictions are clamped below at CLAMP_EPS before the log; the clamp
    region carries zero gradient.
    """
    _require_same_shape(pred, target, "cross_entropy")
    n = pred.value.shape[0]
    p = np.maximum(pred.value, CLAMP_EPS)
    logp = np.log(p)
    active = pred.value > CLAMP_EPS
    tv = target.value

    def vjp(g: np.ndarray):
        s = g[0, 0] / n
        return -s * tv / p * active, -s * logp

    value = np.array([[-(tv * logp).sum() / n]])
    return Node(value, op="cross_entropy", parents=(pred, target), vjp=vjp)


def _topo_order(root: Node) -> list[Node]:
    order: list[Node] = []
    seen: set[int] = set()
    stack: list[tuple[Node, bool]] = [(root, False)]
    while stack:
        node, expanded = stack.pop()
        if expanded:
            order.append(node)
            continue
        if id(node) in seen:
            continue
        seen.add(id(node))
        stack.append((node, True))
        for p in node.parents:
            stack.append((p, False))
    return order  # parents precede children


def backward(root: Node) -> None:
    """Accumulate d(root)/d(node) into .grad for every node that requires it.

    ``root`` must be a 1 x 1 scalar.  Gradients accumulate across calls;
    use ``zero_grad`` between passes.
    """
    if root.value.shape != (1, 1):
        raise UsageError(f"backward: root must be scalar 1x1, got {root.value.shape}")
    order = _topo_order(root)
    pending: dict[int, np.ndarray] = {id(root): np.ones((1, 1))}
    for node in reversed(order):
        g = pending.pop(id(node), None)
        if g is None or not node.requires_grad:
            continue
        if node.grad is None:
            node.grad = g.copy()
        else:
            node.grad = node.grad + g
        if node._vjp is None:
            continue
        parent_grads = node._vjp(g)
        for p, pg in zip(node.parents, parent_grads):
            if pg is None or not p.requires_grad:
                continue
            acc = pending.get(id(p))
            pending[id(p)] = pg if acc is None else acc + pg


def zero_grad(nodes: Iterable[Node]) -> None:
    for n in nodes:
        n.grad = None

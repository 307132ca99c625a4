"""Learnable text graph: edge scoring, row-softmax adjacency, GCN layers.

Edge scores come from a bias-free MLP over the absolute difference of two
node representations, so identical representations always score 0.  The
adjacency is the row softmax of the dense score matrix; message passing
uses the symmetric normalization D^(-1/2) (A + I) D^(-1/2).  The graph is
rebuilt from the refined representations before every message-passing
iteration, which is why each iteration owns its own edge network (the
representation width changes across layers).
"""

from __future__ import annotations

from dataclasses import dataclass
from typing import Sequence

import numpy as np

from .autodiff import (
    DimensionError,
    Node,
    abs_diff,
    add,
    constant,
    matmul,
    mul,
    pairwise_abs_diff,
    parameter,
    relu,
    reshape,
    row_softmax,
    row_sum,
    rsqrt,
    transpose,
)

EDGE_HIDDEN = 64
GCN_WIDTHS = (32, 32)


def glorot_uniform(rng: np.random.Generator, rows: int, cols: int) -> np.ndarray:
    limit = np.sqrt(6.0 / (rows + cols))
    return rng.uniform(-limit, limit, size=(rows, cols))


class EdgeNetwork:
    """Bias-free MLP mapping |x_i - x_j| to a scalar edge score.

    Hidden layers use ReLU; the last layer is linear.
    """

    def __init__(self, in_dim: int, hidden: int = EDGE_HIDDEN, *, rng: np.random.Generator):
        self.in_dim = in_dim
        self.weights = [
            parameter(glorot_uniform(rng, in_dim, hidden)),
            parameter(glorot_uniform(rng, hidden, 1)),
        ]

    def scores(self, diffs: Node) -> Node:
        """Score a batch of |x_i - x_j| rows; result is rows x 1."""
        if diffs.value.shape[1] != self.in_dim:
            raise DimensionError(
                f"edge network expects width {self.in_dim}, got {diffs.value.shape[1]}"
            )
        h = diffs
        for w in self.weights[:-1]:
            h = relu(matmul(h, w))
        return matmul(h, self.weights[-1])


def edge_score(net: EdgeNetwork, xi: Node, xj: Node) -> Node:
    """Score one pair of row vectors; symmetric in its arguments."""
    return net.scores(abs_diff(xi, xj))


@dataclass
class TextGraph:
    """Dense graph over one episode's node set (all fields are tape nodes)."""

    x: Node            # node representations, n x d
    scores: Node       # raw edge scores E, n x n (symmetric)
    adjacency: Node    # row softmax of E, row-stochastic
    normalized: Node   # D^(-1/2) (A + I) D^(-1/2)

    @property
    def n(self) -> int:
        return self.x.value.shape[0]


def build_adjacency(net: EdgeNetwork, x: Node) -> TextGraph:
    """Score every ordered pair, softmax each row, and normalize."""
    n = x.value.shape[0]
    e = reshape(net.scores(pairwise_abs_diff(x)), n, n)
    a = row_softmax(e, 1.0)
    a_hat = add(a, constant(np.eye(n)))
    s = rsqrt(row_sum(a_hat))
    a_tilde = mul(a_hat, matmul(s, transpose(s)))
    return TextGraph(x=x, scores=e, adjacency=a, normalized=a_tilde)


def message_pass(graph: TextGraph, weight: Node) -> Node:
    """One aggregation step: relu(A_norm @ X @ W)."""
    return relu(matmul(matmul(graph.normalized, graph.x), weight))


def refine(
    edge_nets: Sequence[EdgeNetwork],
    weights: Sequence[Node],
    x0: Node,
    iterations: int,
    collect: list[TextGraph] | None = None,
) -> Node:
    """Alternate graph reconstruction and message passing.

    Each iteration rebuilds the graph from the current representations and
    aggregates once; ``iterations`` must not exceed the number of edge
    networks / GCN weights supplied.  ``collect``, when given, receives the
    per-iteration graphs (for debug export).
    """
    if iterations > min(len(edge_nets), len(weights)):
        raise DimensionError(
            f"refine: {iterations} iterations but only "
            f"{min(len(edge_nets), len(weights))} layer(s) configured"
        )
    x = x0
    for h in range(iterations):
        graph = build_adjacency(edge_nets[h], x)
        if collect is not None:
            collect.append(graph)
        x = message_pass(graph, weights[h])
    return x

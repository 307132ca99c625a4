"""Central finite-difference checking of tape gradients.

``check_gradients`` rebuilds the loss from scratch for every perturbed
entry, so the closure must reference the parameter Nodes it is handed.
Relative errors use a small floor in the denominator so that exactly-zero
gradients (dead ReLU paths) are not flagged by finite-difference noise.
"""

from __future__ import annotations

from typing import Callable

import numpy as np

from .autodiff import Node, add, backward, gather_rows, row_softmax, scale, zero_grad
from .corpus import assemble_matrix
from .distill import distillation_loss, supervised_loss
from .model import AttributeModel, trainable_parameters


def relative_error(a: np.ndarray, b: np.ndarray, floor: float = 1e-6) -> float:
    """Max over entries of |a - b| / max(|a|, |b|, floor)."""
    denom = np.maximum(np.maximum(np.abs(a), np.abs(b)), floor)
    return float(np.max(np.abs(a - b) / denom))


def numeric_gradient(
    loss_fn: Callable[[], Node], param: Node, h: float = 1e-5
) -> np.ndarray:
    """Central differences of the scalar loss w.r.t. every entry of ``param``."""
    grad = np.zeros_like(param.value)
    base = param.value
    it = np.nditer(base, flags=["multi_index"])
    while not it.finished:
        ix = it.multi_index
        orig = base[ix]
        base[ix] = orig + h
        up = float(loss_fn().value[0, 0])
        base[ix] = orig - h
        down = float(loss_fn().value[0, 0])
        base[ix] = orig
        grad[ix] = (up - down) / (2.0 * h)
        it.iternext()
    return grad


def check_gradients(
    loss_fn: Callable[[], Node],
    params: dict[str, Node],
    h: float = 1e-5,
    floor: float = 1e-6,
) -> dict[str, float]:
    """Max relative error per parameter block, backward vs central differences."""
    zero_grad(params.values())
    backward(loss_fn())
    analytic = {name: np.array(p.grad) for name, p in params.items()}
    errors = {}
    for name, p in params.items():
        errors[name] = relative_error(analytic[name], numeric_gradient(loss_fn, p, h), floor)
    return errors


def episode_gradcheck(
    nodes: int = 6,
    k1: int = 8,
    k2: int = 2,
    *,
    gcn_widths: tuple[int, ...] = (32, 32),
    edge_hidden: int = 64,
    tau: float = 3.0,
    lam: float = 0.3,
    seed: int = 0,
    h: float = 1e-5,
) -> dict[str, float]:
    """Finite-difference check of the combined episode loss.

    Builds a tiny random transductive episode (2 labeled nodes, the rest
    unlabeled with fixed random soft targets) and checks every trainable
    parameter of a fresh model against central differences of
    (1 - lam) * hard-label loss + lam * distillation loss.
    """
    if nodes < 3:
        raise ValueError("need at least 3 nodes (2 labeled + 1 unlabeled)")
    rng = np.random.default_rng(seed)
    n_labeled = k2
    labels = np.arange(k2) % k2
    emb = rng.normal(size=(nodes, k1))
    x0 = assemble_matrix(emb, list(labels) + [None] * (nodes - n_labeled), k2)
    soft_rows = rng.dirichlet(np.ones(k2), size=nodes - n_labeled)
    labeled_rows = np.arange(n_labeled)
    pool_rows = np.arange(n_labeled, nodes)

    model = AttributeModel(
        k1, k2, gcn_widths=gcn_widths, edge_hidden=edge_hidden, seed=seed
    )

    def loss_fn() -> Node:
        logits = model.forward(x0)
        l_s = supervised_loss(row_softmax(gather_rows(logits, labeled_rows), 1.0), labels)
        l_t = distillation_loss(row_softmax(gather_rows(logits, pool_rows), tau), soft_rows)
        return add(scale(l_s, 1.0 - lam), scale(l_t, lam))

    return check_gradients(loss_fn, trainable_parameters(model), h=h)

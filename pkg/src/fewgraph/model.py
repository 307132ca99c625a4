"""End-to-end classifier: graph refinement stack plus a linear head.

The model owns every trainable tensor by name; freezing is a name set that
optimizers must respect.  ``forward`` returns raw logits so callers apply
their own softmax temperature.  Checkpoints are plain text with repr-level
float precision, so save -> load reproduces forward outputs bit-identically.
"""

from __future__ import annotations

import numpy as np

from .autodiff import DimensionError, Node, add_row, constant, matmul, parameter, row_softmax
from .graphnet import EDGE_HIDDEN, GCN_WIDTHS, EdgeNetwork, TextGraph, glorot_uniform, refine

CHECKPOINT_HEADER = "#fewgraph-model v1"


class CheckpointError(ValueError):
    """Malformed model checkpoint file."""


class AttributeModel:
    """Per-iteration edge networks, GCN weights, and a classification head.

    With ``use_graph=False`` the model degenerates to a linear head over the
    embedding channel alone (the representation-only ablation variant).
    """

    def __init__(
        self,
        k1: int,
        k2: int,
        *,
        gcn_widths: tuple[int, ...] = GCN_WIDTHS,
        edge_hidden: int = EDGE_HIDDEN,
        use_graph: bool = True,
        seed: int = 0,
    ) -> None:
        if k1 < 1 or k2 < 2:
            raise DimensionError(f"need k1 >= 1 and k2 >= 2, got k1={k1}, k2={k2}")
        self.k1 = k1
        self.k2 = k2
        self.gcn_widths = tuple(gcn_widths)
        self.edge_hidden = edge_hidden
        self.use_graph = use_graph
        self.frozen: set[str] = set()
        self.trained = False

        rng = np.random.default_rng(seed)
        self._params: dict[str, Node] = {}
        self.edge_nets: list[EdgeNetwork] = []
        self.gcn_weights: list[Node] = []

        if use_graph:
            widths = (k1 + k2,) + self.gcn_widths
            for h in range(len(self.gcn_widths)):
                net = EdgeNetwork(widths[h], edge_hidden, rng=rng)
                self.edge_nets.append(net)
                for j, w in enumerate(net.weights):
                    self._params[f"edge{h}.w{j}"] = w
                w = parameter(glorot_uniform(rng, widths[h], widths[h + 1]))
                self.gcn_weights.append(w)
                self._params[f"gcn{h}.w"] = w
            head_in = self.gcn_widths[-1]
        else:
            head_in = k1

        self.head_w = parameter(glorot_uniform(rng, head_in, k2))
        self.head_b = parameter(np.zeros((1, k2)))
        self._params["head.w"] = self.head_w
        self._params["head.b"] = self.head_b

    @property
    def iterations(self) -> int:
        return len(self.gcn_weights)

    def parameters(self) -> dict[str, Node]:
        return dict(self._params)

    def _check_input(self, x0: np.ndarray) -> np.ndarray:
        x0 = np.asarray(x0, dtype=np.float64)
        if x0.ndim != 2 or x0.shape[1] != self.k1 + self.k2:
            raise DimensionError(
                f"expected representations of width {self.k1 + self.k2}, got {x0.shape}"
            )
        return x0

    def features(self, x0: np.ndarray, collect: list[TextGraph] | None = None) -> Node:
        """Refined representations feeding the head (tape node)."""
        x0 = self._check_input(x0)
        if not self.use_graph:
            return constant(x0[:, : self.k1])
        return refine(self.edge_nets, self.gcn_weights, constant(x0), self.iterations, collect)

    def head(self, feats: Node) -> Node:
        return add_row(matmul(feats, self.head_w), self.head_b)

    def forward(self, x0: np.ndarray, collect: list[TextGraph] | None = None) -> Node:
        """Raw per-node logits, n x k2."""
        return self.head(self.features(x0, collect))

    def predict(self, x0: np.ndarray) -> np.ndarray:
        """Argmax class per node; ties resolve to the lowest class index."""
        return np.argmax(self.forward(x0).value, axis=1)

    def soft_predict(self, x0: np.ndarray, tau: float) -> Node:
        """Row softmax of logits / tau."""
        return row_softmax(self.forward(x0), tau)

    def clone(self) -> "AttributeModel":
        other = AttributeModel(
            self.k1,
            self.k2,
            gcn_widths=self.gcn_widths,
            edge_hidden=self.edge_hidden,
            use_graph=self.use_graph,
            seed=0,
        )
        for name, node in self._params.items():
            other._params[name].value = node.value.copy()
        other.frozen = set(self.frozen)
        other.trained = self.trained
        return other


def freeze_all_except_head(model: AttributeModel) -> None:
    """Keep only the head weight and bias trainable."""
    model.frozen = {name for name in model._params if not name.startswith("head.")}


def trainable_parameters(model: AttributeModel) -> dict[str, Node]:
    return {name: p for name, p in model._params.items() if name not in model.frozen}


def save_model(model: AttributeModel, path) -> None:
    lines = [
        CHECKPOINT_HEADER,
        f"k1 {model.k1}",
        f"k2 {model.k2}",
        f"edge_hidden {model.edge_hidden}",
        f"gcn_widths {','.join(str(w) for w in model.gcn_widths)}",
        f"use_graph {int(model.use_graph)}",
        f"trained {int(model.trained)}",
        f"frozen {','.join(sorted(model.frozen)) if model.frozen else '-'}",
    ]
    for name, node in model._params.items():
        rows, cols = node.value.shape
        lines.append(f"param {name} {rows} {cols}")
        for row in node.value:
            lines.append(" ".join(repr(float(v)) for v in row))
    with open(path, "w", encoding="utf-8") as fh:
        fh.write("\n".join(lines) + "\n")


def load_model(path) -> AttributeModel:
    with open(path, "r", encoding="utf-8") as fh:
        lines = fh.read().splitlines()
    if not lines or lines[0] != CHECKPOINT_HEADER:
        raise CheckpointError(f"{path}: not a fewgraph model checkpoint")
    meta: dict[str, str] = {}
    i = 1
    while i < len(lines) and not lines[i].startswith("param "):
        key, _, value = lines[i].partition(" ")
        meta[key] = value
        i += 1
    try:
        model = AttributeModel(
            int(meta["k1"]),
            int(meta["k2"]),
            gcn_widths=tuple(int(w) for w in meta["gcn_widths"].split(",") if w),
            edge_hidden=int(meta["edge_hidden"]),
            use_graph=bool(int(meta["use_graph"])),
            seed=0,
        )
    except (KeyError, ValueError) as exc:
        raise CheckpointError(f"{path}: bad metadata ({exc})") from None
    model.trained = bool(int(meta.get("trained", "0")))
    frozen = meta.get("frozen", "-")
    model.frozen = set() if frozen == "-" else set(frozen.split(","))

    seen = set()
    while i < len(lines):
        parts = lines[i].split()
        if len(parts) != 4 or parts[0] != "param":
            raise CheckpointError(f"{path}: line {i + 1}: expected a param block header")
        name, rows, cols = parts[1], int(parts[2]), int(parts[3])
        if name not in model._params:
            raise CheckpointError(f"{path}: unknown parameter {name!r}")
        if model._params[name].value.shape != (rows, cols):
            raise CheckpointError(
                f"{path}: parameter {name!r} has shape ({rows}, {cols}), "
                f"expected {model._params[name].value.shape}"
            )
        block = lines[i + 1 : i + 1 + rows]
        if len(block) != rows:
            raise CheckpointError(f"{path}: truncated block for {name!r}")
        model._params[name].value = np.array(
            [[float(v) for v in row.split()] for row in block]
        ).reshape(rows, cols)
        seen.add(name)
        i += 1 + rows
    missing = set(model._params) - seen
    if missing:
        raise CheckpointError(f"{path}: missing parameter blocks {sorted(missing)}")
    return model

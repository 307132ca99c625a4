"""Two-level knowledge distillation training.

Phase 1 (cross-domain): a teacher is trained on the few labeled target
texts, produces temperature-softened pseudo labels for the unlabeled
target pool once, and a student is trained on the joint episode of source
labeled + target unlabeled texts, minimizing hard-label loss on the source
rows plus distillation loss on the target rows.

Phase 2 (target-domain): the student becomes the base model; everything
but the classification head is frozen, the graph is refined once on the
full target episode, and the head is tuned against hard-label loss and
distillation loss from the base model's own softened predictions, weighted
by (1 - lam) and lam respectively.

Hard-label losses use plain softmax probabilities; distillation losses use
temperature tau on both the teacher and student side, with no extra tau^2
gradient rescaling.
"""

from __future__ import annotations

from dataclasses import dataclass

import numpy as np

from .autodiff import (
    Node,
    UsageError,
    add,
    backward,
    constant,
    cross_entropy,
    gather_rows,
    row_softmax,
    scale,
    zero_grad,
)
from .corpus import assemble_matrix
from .model import AttributeModel, freeze_all_except_head, trainable_parameters

KD_MODES = ("unlabeled_soft", "labeled_split")


class ConfigError(ValueError):
    """Inconsistent training configuration."""


@dataclass
class DistillConfig:
    tau: float = 3.0
    lam: float = 0.3
    epochs: int = 200
    lr: float = 1e-3
    shots: int = 15
    target_kd_mode: str = "unlabeled_soft"

    def validate(self) -> None:
        if self.tau <= 0:
            raise ConfigError(f"tau must be > 0, got {self.tau}")
        if not 0.0 <= self.lam <= 1.0:
            raise ConfigError(f"lambda must be in [0, 1], got {self.lam}")
        if self.epochs < 1:
            raise ConfigError(f"epochs must be >= 1, got {self.epochs}")
        if self.lr <= 0:
            raise ConfigError(f"learning rate must be > 0, got {self.lr}")
        if self.shots < 1:
            raise ConfigError(f"shots must be >= 1, got {self.shots}")
        if self.target_kd_mode not in KD_MODES:
            raise ConfigError(f"target_kd_mode must be one of {KD_MODES}")


@dataclass
class EpochLoss:
    """One epoch's loss report; unused components stay at 0."""

    phase: str
    epoch: int
    l_cs: float = 0.0
    l_ct: float = 0.0
    l_c: float = 0.0
    l_s: float = 0.0
    l_t: float = 0.0
    l: float = 0.0
    train_acc: float = 0.0

    def line(self) -> str:
        return (
            f"phase={self.phase} epoch={self.epoch} "
            f"L_CS={self.l_cs:.10g} L_CT={self.l_ct:.10g} "
            f"L_S={self.l_s:.10g} L_T={self.l_t:.10g} "
            f"L={self.l:.10g} acc={self.train_acc:.6f}"
        )


class Adam:
    """Per-parameter adaptive gradient steps over a fixed parameter dict."""

    def __init__(self, params: dict[str, Node], lr: float, beta1: float = 0.9,
                 beta2: float = 0.999, eps: float = 1e-8) -> None:
        self.params = params
        self.lr = lr
        self.beta1 = beta1
        self.beta2 = beta2
        self.eps = eps
        self.t = 0
        self.m = {name: np.zeros_like(p.value) for name, p in params.items()}
        self.v = {name: np.zeros_like(p.value) for name, p in params.items()}

    def step(self) -> None:
        self.t += 1
        b1t = 1.0 - self.beta1**self.t
        b2t = 1.0 - self.beta2**self.t
        for name, p in self.params.items():
            g = p.grad
            if g is None:
                continue
            m = self.m[name] = self.beta1 * self.m[name] + (1 - self.beta1) * g
            v = self.v[name] = self.beta2 * self.v[name] + (1 - self.beta2) * g * g
            p.value = p.value - self.lr * (m / b1t) / (np.sqrt(v / b2t) + self.eps)


def one_hot(labels: np.ndarray, k2: int) -> np.ndarray:
    out = np.zeros((len(labels), k2))
    out[np.arange(len(labels)), labels] = 1.0
    return out


def supervised_loss(student_probs: Node, labels: np.ndarray) -> Node:
    """Mean cross entropy against one-hot ground truth."""
    k2 = student_probs.value.shape[1]
    return cross_entropy(student_probs, constant(one_hot(np.asarray(labels), k2)))


def distillation_loss(student_probs: Node, teacher_probs) -> Node:
    """Mean cross entropy with the teacher's soft rows as targets."""
    target = teacher_probs if isinstance(teacher_probs, Node) else constant(teacher_probs)
    return cross_entropy(student_probs, target)


def pseudo_labels(teacher: AttributeModel, x0: np.ndarray, rows, tau: float) -> np.ndarray:
    """Teacher's softened predictions over the given rows of its episode."""
    if not teacher.trained:
        raise UsageError("pseudo_labels: teacher has not been trained")
    probs = teacher.soft_predict(x0, tau).value
    return probs[np.asarray(rows, dtype=np.intp)]


def _zero_loss() -> Node:
    return constant(np.zeros((1, 1)))


def _accuracy(logits: np.ndarray, rows: np.ndarray, labels: np.ndarray) -> float:
    if len(rows) == 0:
        return 0.0
    return float(np.mean(np.argmax(logits[rows], axis=1) == labels))


def train_supervised(
    model: AttributeModel,
    x0: np.ndarray,
    labeled_rows,
    labels,
    cfg: DistillConfig,
    phase: str = "base",
) -> list[EpochLoss]:
    """Plain transductive training: hard-label loss over the labeled rows.

    The graph is rebuilt from scratch on every forward pass.
    """
    cfg.validate()
    labeled_rows = np.asarray(labeled_rows, dtype=np.intp)
    labels = np.asarray(labels, dtype=np.intp)
    params = trainable_parameters(model)
    opt = Adam(params, cfg.lr)
    reports = []
    for epoch in range(1, cfg.epochs + 1):
        logits = model.forward(x0)
        probs = row_softmax(gather_rows(logits, labeled_rows), 1.0)
        loss = supervised_loss(probs, labels)
        zero_grad(params.values())
        backward(loss)
        opt.step()
        value = float(loss.value[0, 0])
        reports.append(
            EpochLoss(
                phase=phase,
                epoch=epoch,
                l_s=value,
                l=value,
                train_acc=_accuracy(logits.value, labeled_rows, labels),
            )
        )
    model.trained = True
    return reports


def train_base(
    source_emb: np.ndarray,
    source_labels,
    target_labeled_emb: np.ndarray,
    target_labeled_labels,
    target_unlabeled_emb: np.ndarray,
    num_classes: int,
    cfg: DistillConfig,
    *,
    teacher_seed: int = 0,
    student_seed: int = 1,
    gcn_widths=None,
    edge_hidden=None,
) -> tuple[AttributeModel, AttributeModel, list[EpochLoss]]:
    """Cross-domain phase: teacher on the target episode, student on the joint one.

    Returns (student, teacher, per-epoch reports).  The student's loss is
    the sum of the hard-label term over source rows and the distillation
    term over target rows; the latter is 0 when the unlabeled pool is empty.
    """
    cfg.validate()
    source_emb = np.asarray(source_emb, dtype=np.float64)
    source_labels = np.asarray(source_labels, dtype=np.intp)
    target_labeled_labels = np.asarray(target_labeled_labels, dtype=np.intp)
    if source_emb.shape[1] != target_labeled_emb.shape[1]:
        raise ConfigError(
            "source and target embedding widths differ: "
            f"{source_emb.shape[1]} vs {target_labeled_emb.shape[1]}"
        )
    if len(source_labels) and source_labels.max() >= num_classes:
        raise ConfigError("source labels fall outside the shared label space")

    k1 = target_labeled_emb.shape[1]
    kwargs = {}
    if gcn_widths is not None:
        kwargs["gcn_widths"] = tuple(gcn_widths)
    if edge_hidden is not None:
        kwargs["edge_hidden"] = edge_hidden

    # Teacher: trained on the target episode (labeled shots + unlabeled pool).
    n_m = len(target_labeled_labels)
    n_n = len(target_unlabeled_emb)
    teacher = AttributeModel(k1, num_classes, seed=teacher_seed, **kwargs)
    x_target = assemble_matrix(
        np.concatenate([target_labeled_emb, target_unlabeled_emb])
        if n_n
        else target_labeled_emb,
        list(target_labeled_labels) + [None] * n_n,
        num_classes,
    )
    reports = train_supervised(
        teacher, x_target, np.arange(n_m), target_labeled_labels, cfg, phase="teacher"
    )

    # Pseudo labels for the unlabeled pool, computed once.
    unlabeled_rows = np.arange(n_m, n_m + n_n)
    soft = (
        pseudo_labels(teacher, x_target, unlabeled_rows, cfg.tau)
        if n_n
        else np.zeros((0, num_classes))
    )

    # Student: joint episode of source labeled + target unlabeled texts.
    n_s = len(source_labels)
    student = AttributeModel(k1, num_classes, seed=student_seed, **kwargs)
    x_joint = assemble_matrix(
        np.concatenate([source_emb, target_unlabeled_emb]) if n_n else source_emb,
        list(source_labels) + [None] * n_n,
        num_classes,
    )
    src_rows = np.arange(n_s)
    tgt_rows = np.arange(n_s, n_s + n_n)

    params = trainable_parameters(student)
    opt = Adam(params, cfg.lr)
    for epoch in range(1, cfg.epochs + 1):
        logits = student.forward(x_joint)
        l_cs = supervised_loss(row_softmax(gather_rows(logits, src_rows), 1.0), source_labels)
        if n_n:
            l_ct = distillation_loss(
                row_softmax(gather_rows(logits, tgt_rows), cfg.tau), soft
            )
        else:
            l_ct = _zero_loss()
        l_c = add(l_cs, l_ct)
        zero_grad(params.values())
        backward(l_c)
        opt.step()
        reports.append(
            EpochLoss(
                phase="base",
                epoch=epoch,
                l_cs=float(l_cs.value[0, 0]),
                l_ct=float(l_ct.value[0, 0]),
                l_c=float(l_c.value[0, 0]),
                l=float(l_c.value[0, 0]),
                train_acc=_accuracy(logits.value, src_rows, source_labels),
            )
        )
    student.trained = True
    return student, teacher, reports


def train_final(
    base: AttributeModel,
    labeled_emb: np.ndarray,
    labels,
    pool_emb: np.ndarray,
    cfg: DistillConfig,
    *,
    kd: bool = True,
) -> tuple[AttributeModel, list[EpochLoss]]:
    """Target-domain phase: freeze everything but the head and tune it.

    With ``kd`` the objective is (1 - lam) * hard-label loss + lam *
    distillation loss against the base model's softened predictions over
    the unlabeled pool; without it the objective is the hard-label loss
    alone.  The refined representations are computed once up front - the
    parameters they depend on are frozen, so recomputing them every epoch
    would reproduce the same values.
    """
    cfg.validate()
    if not base.trained:
        raise UsageError("train_final: base model has not been trained")
    labels = np.asarray(labels, dtype=np.intp)
    n_m = len(labels)
    n_pool = len(pool_emb)

    model = base.clone()
    freeze_all_except_head(model)
    x0 = assemble_matrix(
        np.concatenate([labeled_emb, pool_emb]) if n_pool else labeled_emb,
        list(labels) + [None] * n_pool,
        base.k2,
    )
    feats = model.features(x0).value
    labeled_rows = np.arange(n_m)
    pool_rows = np.arange(n_m, n_m + n_pool)

    if kd and cfg.target_kd_mode == "labeled_split":
        return _train_final_labeled_split(model, feats, labeled_rows, labels, cfg)

    # Teacher soft labels from the base model itself, computed once.
    if kd and n_pool:
        base_logits = feats @ base.head_w.value + base.head_b.value
        soft = row_softmax(constant(base_logits[pool_rows]), cfg.tau).value
    else:
        soft = None

    params = trainable_parameters(model)
    opt = Adam(params, cfg.lr)
    reports = []
    for epoch in range(1, cfg.epochs + 1):
        logits = model.head(constant(feats))
        l_s = supervised_loss(row_softmax(gather_rows(logits, labeled_rows), 1.0), labels)
        if kd:
            if soft is not None:
                l_t = distillation_loss(
                    row_softmax(gather_rows(logits, pool_rows), cfg.tau), soft
                )
            else:
                l_t = _zero_loss()
            total = add(scale(l_s, 1.0 - cfg.lam), scale(l_t, cfg.lam))
        else:
            l_t = _zero_loss()
            total = l_s
        zero_grad(params.values())
        backward(total)
        opt.step()
        reports.append(
            EpochLoss(
                phase="final",
                epoch=epoch,
                l_s=float(l_s.value[0, 0]),
                l_t=float(l_t.value[0, 0]),
                l=float(total.value[0, 0]),
                train_acc=_accuracy(logits.value, labeled_rows, labels),
            )
        )
    model.trained = True
    return model, reports


def _train_final_labeled_split(
    model: AttributeModel,
    feats: np.ndarray,
    labeled_rows: np.ndarray,
    labels: np.ndarray,
    cfg: DistillConfig,
) -> tuple[AttributeModel, list[EpochLoss]]:
    """Literal variant: split the labeled texts into teacher/student halves.

    A teacher head is tuned on the first half, its softened predictions on
    the second half become distillation targets, and the returned model's
    head is tuned on the second half only.
    """
    per_class: dict[int, list[int]] = {}
    for row, lab in zip(labeled_rows, labels):
        per_class.setdefault(int(lab), []).append(int(row))
    teacher_rows, student_rows = [], []
    for lab in sorted(per_class):
        rows = per_class[lab]
        half = (len(rows) + 1) // 2
        teacher_rows.extend(rows[:half])
        student_rows.extend(rows[half:])
    if not student_rows:
        raise ConfigError("labeled_split needs at least 2 shots per class")
    teacher_rows = np.asarray(teacher_rows, dtype=np.intp)
    student_rows = np.asarray(student_rows, dtype=np.intp)
    row_to_label = dict(zip(labeled_rows.tolist(), labels.tolist()))

    teacher = model.clone()
    t_labels = np.asarray([row_to_label[r] for r in teacher_rows.tolist()], dtype=np.intp)
    t_params = trainable_parameters(teacher)
    t_opt = Adam(t_params, cfg.lr)
    for _ in range(cfg.epochs):
        logits = teacher.head(constant(feats))
        loss = supervised_loss(row_softmax(gather_rows(logits, teacher_rows), 1.0), t_labels)
        zero_grad(t_params.values())
        backward(loss)
        t_opt.step()

    t_logits = feats @ teacher.head_w.value + teacher.head_b.value
    soft = row_softmax(constant(t_logits[student_rows]), cfg.tau).value

    s_labels = np.asarray([row_to_label[r] for r in student_rows.tolist()], dtype=np.intp)
    params = trainable_parameters(model)
    opt = Adam(params, cfg.lr)
    reports = []
    for epoch in range(1, cfg.epochs + 1):
        logits = model.head(constant(feats))
        l_s = supervised_loss(row_softmax(gather_rows(logits, student_rows), 1.0), s_labels)
        l_t = distillation_loss(row_softmax(gather_rows(logits, student_rows), cfg.tau), soft)
        total = add(scale(l_s, 1.0 - cfg.lam), scale(l_t, cfg.lam))
        zero_grad(params.values())
        backward(total)
        opt.step()
        reports.append(
            EpochLoss(
                phase="final",
                epoch=epoch,
                l_s=float(l_s.value[0, 0]),
                l_t=float(l_t.value[0, 0]),
                l=float(total.value[0, 0]),
                train_acc=_accuracy(logits.value, student_rows, s_labels),
            )
        )
    model.trained = True
    return model, reports

"""End-to-end runs: episode sampling, two-phase training, evaluation.

A single run samples a few-shot episode from the target corpus, trains per
the configured variant, and scores the held-out test records.  Test texts
sit in the transductive graph as unlabeled nodes throughout (uniform label
channel); their ground truth is touched only by the metrics.
"""

from __future__ import annotations

from dataclasses import dataclass, field, replace
from typing import TYPE_CHECKING

import numpy as np

from .corpus import Corpus, DataError, Episode, assemble_matrix, sample_episode
from .distill import (
    ConfigError,
    DistillConfig,
    EpochLoss,
    train_base,
    train_final,
    train_supervised,
)
from .graphnet import EDGE_HIDDEN, GCN_WIDTHS, TextGraph
from .model import AttributeModel

if TYPE_CHECKING:
    from .metrics import EvalResult

VARIANTS = ("repr-only", "graph", "graph+kd1", "graph+kd2", "full")


@dataclass
class RunConfig:
    """Everything one experiment needs; paths are used only by the CLI."""

    target_path: str | None = None
    source_path: str | None = None
    out_dir: str | None = None
    # episode
    shots: int = 15
    test_fraction: float = 0.2
    unlabeled_cap: int = 200
    source_cap: int = 200
    # distillation
    tau: float = 3.0
    lam: float = 0.3
    epochs: int = 200
    lr: float = 1e-3
    target_kd_mode: str = "unlabeled_soft"
    # variant toggles
    use_graph: bool = True
    use_kd1: bool = True
    use_kd2: bool = True
    # model shape
    gcn_widths: tuple[int, ...] = GCN_WIDTHS
    edge_hidden: int = EDGE_HIDDEN
    # misc
    seed: int = 0
    jobs: int = 1
    export_graph: bool = False

    def distill(self) -> DistillConfig:
        cfg = DistillConfig(
            tau=self.tau,
            lam=self.lam,
            epochs=self.epochs,
            lr=self.lr,
            shots=self.shots,
            target_kd_mode=self.target_kd_mode,
        )
        cfg.validate()
        return cfg

    def validate(self) -> None:
        self.distill()
        if not 0.0 < self.test_fraction < 1.0:
            raise ConfigError(f"test_fraction must be in (0, 1), got {self.test_fraction}")
        if self.unlabeled_cap < 0 or self.source_cap < 1:
            raise ConfigError("unlabeled_cap must be >= 0 and source_cap >= 1")
        if self.jobs < 1:
            raise ConfigError(f"jobs must be >= 1, got {self.jobs}")


def variant_config(cfg: RunConfig, name: str) -> RunConfig:
    """Toggle graph/KD switches for one ablation variant."""
    if name == "repr-only":
        return replace(cfg, use_graph=False, use_kd1=False, use_kd2=False)
    if name == "graph":
        return replace(cfg, use_graph=True, use_kd1=False, use_kd2=False)
    if name == "graph+kd1":
        return replace(cfg, use_graph=True, use_kd1=True, use_kd2=False)
    if name == "graph+kd2":
        return replace(cfg, use_graph=True, use_kd1=False, use_kd2=True)
    if name == "full":
        return replace(cfg, use_graph=True, use_kd1=True, use_kd2=True)
    raise ConfigError(f"unknown variant {name!r}; choose from {VARIANTS}")


def _derived_seed(seed: int, stream: int) -> int:
    return int(np.random.SeedSequence([seed, stream]).generate_state(1)[0])


def _sample_source_rows(source: Corpus, cap: int, seed: int) -> list[int]:
    rows = [i for i, r in enumerate(source.records) if r.label is not None]
    if not rows:
        raise DataError("source corpus has no labeled records")
    if len(rows) > cap:
        rng = np.random.default_rng(seed)
        pick = rng.choice(len(rows), size=cap, replace=False)
        rows = sorted(rows[j] for j in pick)
    return rows


@dataclass
class RunResult:
    accuracy: float
    macro_f1: float
    eval: EvalResult
    episode: Episode
    model: AttributeModel
    base: AttributeModel | None
    reports: list[EpochLoss]
    graphs: list[TextGraph] = field(default_factory=list)


def run_pipeline(
    target: Corpus,
    source: Corpus | None,
    cfg: RunConfig,
    seed: int | None = None,
) -> RunResult:
    """Run the configured variant once and evaluate on the test split."""
    from .metrics import evaluate  # local import to avoid a cycle

    cfg.validate()
    if seed is None:
        seed = cfg.seed
    dcfg = cfg.distill()
    episode = sample_episode(
        target, cfg.shots, cfg.test_fraction, seed=seed, unlabeled_cap=cfg.unlabeled_cap
    )
    k1, k2 = target.dim, target.labels.k2

    labeled_emb = target.embedding_matrix(episode.labeled)
    labels = target.labels_of(episode.labeled)
    pool_idx = list(episode.unlabeled) + list(episode.test)
    pool_emb = (
        target.embedding_matrix(pool_idx) if pool_idx else np.zeros((0, k1))
    )
    test_labels = target.labels_of(episode.test)

    x_eval = assemble_matrix(
        np.concatenate([labeled_emb, pool_emb]) if len(pool_emb) else labeled_emb,
        list(labels) + [None] * len(pool_emb),
        k2,
    )
    n_labeled = len(labels)
    test_rows = np.arange(len(x_eval) - len(episode.test), len(x_eval))

    shape_kwargs = dict(gcn_widths=cfg.gcn_widths, edge_hidden=cfg.edge_hidden)
    reports: list[EpochLoss] = []
    base: AttributeModel | None = None

    if not cfg.use_graph:
        model = AttributeModel(
            k1, k2, use_graph=False, seed=_derived_seed(seed, 1)
        )
        reports += train_supervised(
            model, x_eval, np.arange(n_labeled), labels, dcfg, phase="base"
        )
        final = model
    else:
        if cfg.use_kd1 and source is not None:
            if source.labels.k2 != k2:
                raise ConfigError(
                    f"source has {source.labels.k2} classes, target has {k2}; "
                    "cross-domain training shares one head"
                )
            if source.dim != k1:
                raise ConfigError(
                    f"source embedding width {source.dim} != target width {k1}"
                )
            src_rows = _sample_source_rows(source, cfg.source_cap, _derived_seed(seed, 2))
            base, _teacher, base_reports = train_base(
                source.embedding_matrix(src_rows),
                source.labels_of(src_rows),
                labeled_emb,
                labels,
                pool_emb,
                k2,
                dcfg,
                teacher_seed=_derived_seed(seed, 3),
                student_seed=_derived_seed(seed, 4),
                **shape_kwargs,
            )
            reports += base_reports
        else:
            base = AttributeModel(k1, k2, seed=_derived_seed(seed, 3), **shape_kwargs)
            reports += train_supervised(
                base, x_eval, np.arange(n_labeled), labels, dcfg, phase="base"
            )

        ran_kd1 = cfg.use_kd1 and source is not None
        if ran_kd1 or cfg.use_kd2:
            final, final_reports = train_final(
                base, labeled_emb, labels, pool_emb, dcfg, kd=cfg.use_kd2
            )
            reports += final_reports
        else:
            final = base

    graphs: list[TextGraph] = []
    if cfg.export_graph and final.use_graph:
        final.features(x_eval, collect=graphs)
    preds = final.predict(x_eval)[test_rows]
    result = evaluate(preds, test_labels, k2)
    return RunResult(
        accuracy=result.accuracy,
        macro_f1=result.macro_f1,
        eval=result,
        episode=episode,
        model=final,
        base=base if base is not final else None,
        reports=reports,
        graphs=graphs,
    )

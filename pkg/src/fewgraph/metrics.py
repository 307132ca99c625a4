"""Evaluation, hyperparameter sweeps, and the component ablation harness."""

from __future__ import annotations

from concurrent.futures import ProcessPoolExecutor
from dataclasses import dataclass, replace

import numpy as np

from .autodiff import UsageError
from .corpus import Corpus
from .pipeline import VARIANTS, RunConfig, run_pipeline, variant_config

SWEEP_PARAMS = ("shots", "tau", "lambda")


@dataclass
class EvalResult:
    accuracy: float
    macro_f1: float
    precision: np.ndarray  # per class
    recall: np.ndarray
    f1: np.ndarray
    confusion: np.ndarray  # counts, truth x predicted


def evaluate(pred, truth, num_classes: int) -> EvalResult:
    """Accuracy, per-class precision/recall, and macro-averaged F1.

    A class with neither predicted nor actual positives contributes F1 = 0.
    """
    pred = np.asarray(pred, dtype=np.intp)
    truth = np.asarray(truth, dtype=np.intp)
    if pred.shape != truth.shape or pred.ndim != 1:
        raise UsageError("evaluate: pred and truth must be equal-length vectors")
    if len(pred) == 0:
        raise UsageError("evaluate: empty input")
    confusion = np.zeros((num_classes, num_classes), dtype=np.int64)
    np.add.at(confusion, (truth, pred), 1)
    tp = np.diag(confusion).astype(np.float64)
    pred_pos = confusion.sum(axis=0).astype(np.float64)
    actual_pos = confusion.sum(axis=1).astype(np.float64)
    with np.errstate(invalid="ignore", divide="ignore"):
        precision = np.where(pred_pos > 0, tp / pred_pos, 0.0)
        recall = np.where(actual_pos > 0, tp / actual_pos, 0.0)
        denom = precision + recall
        f1 = np.where(denom > 0, 2 * precision * recall / denom, 0.0)
    return EvalResult(
        accuracy=float(tp.sum() / len(pred)),
        macro_f1=float(f1.mean()),
        precision=precision,
        recall=recall,
        f1=f1,
        confusion=confusion,
    )


@dataclass
class SweepRow:
    value: float
    mean: float
    std: float
    scores: list[float]


def _apply_param(cfg: RunConfig, param: str, value) -> RunConfig:
    if param == "shots":
        return replace(cfg, shots=int(value))
    if param == "tau":
        return replace(cfg, tau=float(value))
    if param == "lambda":
        return replace(cfg, lam=float(value))
    raise UsageError(f"sweep parameter must be one of {SWEEP_PARAMS}, got {param!r}")


def _run_accuracy(args) -> float:
    target, source, cfg, seed = args
    return run_pipeline(target, source, cfg, seed=seed).accuracy


def sweep(
    param: str,
    values,
    seeds,
    cfg: RunConfig,
    target: Corpus,
    source: Corpus | None = None,
    jobs: int = 1,
) -> list[SweepRow]:
    """Run the full pipeline per (value, seed) and aggregate mean/std accuracy."""
    values = list(values)
    seeds = list(seeds)
    if not values or not seeds:
        raise UsageError("sweep needs at least one value and one seed")
    tasks = [
        (target, source, _apply_param(cfg, param, v), s) for v in values for s in seeds
    ]
    if jobs > 1:
        with ProcessPoolExecutor(max_workers=jobs) as pool:
            flat = list(pool.map(_run_accuracy, tasks))
    else:
        flat = [_run_accuracy(t) for t in tasks]
    rows = []
    for i, v in enumerate(values):
        scores = flat[i * len(seeds) : (i + 1) * len(seeds)]
        rows.append(
            SweepRow(
                value=float(v),
                mean=float(np.mean(scores)),
                std=float(np.std(scores)),
                scores=scores,
            )
        )
    return rows


@dataclass
class AblationRow:
    variant: str
    mean: float
    std: float
    scores: list[float]


def ablate(
    cfg: RunConfig,
    target: Corpus,
    source: Corpus | None = None,
    seeds=(0,),
    variants=VARIANTS,
) -> list[AblationRow]:
    """Accuracy per pipeline variant, averaged over seeds."""
    rows = []
    for name in variants:
        vcfg = variant_config(cfg, name)
        scores = [run_pipeline(target, source, vcfg, seed=s).accuracy for s in seeds]
        rows.append(
            AblationRow(
                variant=name,
                mean=float(np.mean(scores)),
                std=float(np.std(scores)),
                scores=scores,
            )
        )
    return rows


def format_table(header: list[str], rows: list[list[str]]) -> str:
    """Plain-text table with aligned columns."""
    table = [header] + rows
    widths = [max(len(r[i]) for r in table) for i in range(len(header))]
    lines = []
    for i, row in enumerate(table):
        lines.append("  ".join(cell.ljust(w) for cell, w in zip(row, widths)).rstrip())
        if i == 0:
            lines.append("  ".join("-" * w for w in widths))
    return "\n".join(lines)


def write_csv(path, header: list[str], rows: list[list[str]]) -> None:
    with open(path, "w", encoding="utf-8") as fh:
        fh.write(",".join(header) + "\n")
        for row in rows:
            fh.write(",".join(row) + "\n")

"""Command-line entry point.

Subcommands: synth, train, eval, sweep, ablate, gradcheck.  Values come
from built-in defaults, overridden by a ``key = value`` config file
(--config), overridden by explicit flags.  All randomness is governed by
--seed; identical config + seed reproduces identical output artifacts
byte for byte.  FEWGRAPH_LOG sets log verbosity (DEBUG/INFO/WARNING).
"""

from __future__ import annotations

import argparse
import logging
import os
import sys
from pathlib import Path

import numpy as np

from . import __version__
from .corpus import (
    Corpus,
    CorpusFormatError,
    DataError,
    ParameterError,
    assemble_matrix,
    generate_synthetic,
    load_corpus,
    sample_episode,
    save_corpus,
)
from .distill import ConfigError
from .fdcheck import episode_gradcheck
from .metrics import SWEEP_PARAMS, ablate, evaluate, format_table, sweep, write_csv
from .model import load_model, save_model
from .pipeline import VARIANTS, RunConfig, run_pipeline

log = logging.getLogger("fewgraph")

_BOOL_KEYS = {"use_graph", "use_kd1", "use_kd2", "export_graph"}
_INT_KEYS = {"shots", "unlabeled_cap", "source_cap", "epochs", "seed", "jobs", "edge_hidden"}
_FLOAT_KEYS = {"test_fraction", "tau", "lambda", "lr"}
_STR_KEYS = {"target", "source", "out", "target_kd_mode", "variants", "param", "values", "seeds"}


class CliError(ValueError):
    pass


def _parse_value(key: str, raw: str):
    raw = raw.strip()
    if key in _BOOL_KEYS:
        if raw.lower() in ("1", "true", "yes", "on"):
            return True
        if raw.lower() in ("0", "false", "no", "off"):
            return False
        raise CliError(f"config key {key!r}: expected a boolean, got {raw!r}")
    try:
        if key in _INT_KEYS:
            return int(raw)
        if key in _FLOAT_KEYS:
            return float(raw)
    except ValueError:
        raise CliError(f"config key {key!r}: bad value {raw!r}") from None
    if key in _STR_KEYS:
        return raw
    raise CliError(f"unknown config key {key!r}")


def read_config_file(path: str) -> dict:
    values = {}
    with open(path, "r", encoding="utf-8") as fh:
        for lineno, line in enumerate(fh, start=1):
            line = line.split("#", 1)[0].strip()
            if not line:
                continue
            if "=" not in line:
                raise CliError(f"{path}: line {lineno}: expected 'key = value'")
            key, _, raw = line.partition("=")
            values[key.strip()] = _parse_value(key.strip(), raw)
    return values


def merge_settings(args: argparse.Namespace) -> dict:
    """Precedence: flag > config file > default."""
    settings: dict = {}
    if getattr(args, "config", None):
        settings.update(read_config_file(args.config))
    for key in (
        "target source out shots test_fraction unlabeled_cap source_cap tau "
        "epochs lr seed jobs target_kd_mode variants param values seeds edge_hidden"
    ).split():
        value = getattr(args, key, None)
        if value is not None:
            settings[key] = value
    if getattr(args, "lam", None) is not None:
        settings["lambda"] = args.lam
    for key in _BOOL_KEYS:
        if getattr(args, key, None) is not None:
            settings[key] = getattr(args, key)
    return settings


def build_run_config(settings: dict) -> RunConfig:
    cfg = RunConfig(
        target_path=settings.get("target"),
        source_path=settings.get("source"),
        out_dir=settings.get("out"),
        shots=settings.get("shots", 15),
        test_fraction=settings.get("test_fraction", 0.2),
        unlabeled_cap=settings.get("unlabeled_cap", 200),
        source_cap=settings.get("source_cap", 200),
        tau=settings.get("tau", 3.0),
        lam=settings.get("lambda", 0.3),
        epochs=settings.get("epochs", 200),
        lr=settings.get("lr", 1e-3),
        target_kd_mode=settings.get("target_kd_mode", "unlabeled_soft"),
        use_graph=settings.get("use_graph", True),
        use_kd1=settings.get("use_kd1", True),
        use_kd2=settings.get("use_kd2", True),
        edge_hidden=settings.get("edge_hidden", 64),
        seed=settings.get("seed", 0),
        jobs=settings.get("jobs", 1),
        export_graph=settings.get("export_graph", False),
    )
    cfg.validate()
    return cfg


def _require(settings: dict, key: str) -> str:
    if not settings.get(key):
        raise CliError(f"missing required setting {key!r}")
    return settings[key]


def _load_corpora(cfg: RunConfig) -> tuple[Corpus, Corpus | None]:
    if not cfg.target_path:
        raise CliError("missing required setting 'target'")
    if not Path(cfg.target_path).exists():
        raise CliError(f"target corpus not found: {cfg.target_path}")
    target = load_corpus(cfg.target_path)
    source = None
    if cfg.source_path:
        if not Path(cfg.source_path).exists():
            raise CliError(f"source corpus not found: {cfg.source_path}")
        source = load_corpus(cfg.source_path)
    return target, source


def _parse_list(raw: str, cast) -> list:
    out = []
    for tok in str(raw).split(","):
        tok = tok.strip()
        if not tok:
            continue
        if ".." in tok and cast is int:
            lo, _, hi = tok.partition("..")
            out.extend(range(int(lo), int(hi) + 1))
        else:
            out.append(cast(tok))
    if not out:
        raise CliError(f"empty list {raw!r}")
    return out


def _write_matrix(path: Path, matrix: np.ndarray) -> None:
    with open(path, "w", encoding="utf-8") as fh:
        for row in matrix:
            fh.write(" ".join(repr(float(v)) for v in row) + "\n")


def cmd_synth(args) -> int:
    settings = merge_settings(args)
    out = _require(settings, "out")
    corpus = generate_synthetic(
        classes=args.classes,
        per_class=args.per_class,
        dim=args.dim,
        separation=args.separation,
        seed=settings.get("seed", 0),
        domain=args.domain,
    )
    save_corpus(corpus, out)
    print(f"wrote {len(corpus)} records ({args.classes} classes, dim {args.dim}) to {out}")
    return 0


def cmd_train(args) -> int:
    settings = merge_settings(args)
    cfg = build_run_config(settings)
    target, source = _load_corpora(cfg)
    out_dir = Path(_require(settings, "out"))
    out_dir.mkdir(parents=True, exist_ok=True)

    result = run_pipeline(target, source, cfg)
    with open(out_dir / "losses.txt", "w", encoding="utf-8") as fh:
        for report in result.reports:
            fh.write(report.line() + "\n")
    if result.base is not None:
        save_model(result.base, out_dir / "base.ckpt")
    save_model(result.model, out_dir / "model.ckpt")
    if cfg.export_graph and result.graphs:
        final = result.graphs[-1]
        _write_matrix(out_dir / "graph_E.txt", final.scores.value)
        _write_matrix(out_dir / "graph_A.txt", final.adjacency.value)
    print(
        f"trained on {len(result.episode.labeled)} labeled / "
        f"{len(result.episode.unlabeled)} unlabeled nodes; "
        f"test accuracy={result.accuracy:.4f} macro_f1={result.macro_f1:.4f}; "
        f"checkpoint: {out_dir / 'model.ckpt'}"
    )
    return 0


def cmd_eval(args) -> int:
    settings = merge_settings(args)
    cfg = build_run_config(settings)
    target, _ = _load_corpora(cfg)
    if not args.model or not Path(args.model).exists():
        raise CliError(f"model checkpoint not found: {args.model}")
    model = load_model(args.model)

    episode = sample_episode(
        target, cfg.shots, cfg.test_fraction, seed=cfg.seed, unlabeled_cap=cfg.unlabeled_cap
    )
    labels = target.labels_of(episode.labeled)
    pool_idx = list(episode.unlabeled) + list(episode.test)
    x0 = assemble_matrix(
        np.concatenate(
            [target.embedding_matrix(episode.labeled), target.embedding_matrix(pool_idx)]
        ),
        list(labels) + [None] * len(pool_idx),
        target.labels.k2,
    )
    test_rows = np.arange(len(x0) - len(episode.test), len(x0))
    graphs = []
    preds = (
        model.head(model.features(x0, collect=graphs if cfg.export_graph else None))
        .value[test_rows]
        .argmax(axis=1)
    )
    result = evaluate(preds, target.labels_of(episode.test), target.labels.k2)
    if cfg.export_graph and graphs:
        out_dir = Path(settings.get("out") or ".")
        out_dir.mkdir(parents=True, exist_ok=True)
        _write_matrix(out_dir / "graph_E.txt", graphs[-1].scores.value)
        _write_matrix(out_dir / "graph_A.txt", graphs[-1].adjacency.value)
    print(f"accuracy={result.accuracy:.4f} macro_f1={result.macro_f1:.4f}")
    for c, name in enumerate(target.labels.classes):
        print(
            f"  class {name}: precision={result.precision[c]:.4f} "
            f"recall={result.recall[c]:.4f} f1={result.f1[c]:.4f}"
        )
    return 0


def cmd_sweep(args) -> int:
    settings = merge_settings(args)
    cfg = build_run_config(settings)
    target, source = _load_corpora(cfg)
    param = _require(settings, "param")
    if param not in SWEEP_PARAMS:
        raise CliError(f"--param must be one of {SWEEP_PARAMS}")
    cast = int if param == "shots" else float
    values = _parse_list(_require(settings, "values"), cast)
    seeds = _parse_list(settings.get("seeds", str(cfg.seed)), int)

    rows = sweep(param, values, seeds, cfg, target, source, jobs=cfg.jobs)
    header = [param, "mean_acc", "std", "runs"]
    cells = [[f"{r.value:g}", f"{r.mean:.4f}", f"{r.std:.4f}", str(len(r.scores))] for r in rows]
    print(format_table(header, cells))
    if settings.get("out"):
        write_csv(settings["out"], header, cells)
        print(f"wrote {settings['out']}")
    return 0


def cmd_ablate(args) -> int:
    settings = merge_settings(args)
    cfg = build_run_config(settings)
    target, source = _load_corpora(cfg)
    variants = (
        [v.strip() for v in settings["variants"].split(",")]
        if settings.get("variants")
        else list(VARIANTS)
    )
    for v in variants:
        if v not in VARIANTS:
            raise CliError(f"unknown variant {v!r}; choose from {VARIANTS}")
    seeds = _parse_list(settings.get("seeds", str(cfg.seed)), int)
    rows = ablate(cfg, target, source, seeds=seeds, variants=variants)
    header = ["variant", "mean_acc", "std", "runs"]
    cells = [[r.variant, f"{r.mean:.4f}", f"{r.std:.4f}", str(len(r.scores))] for r in rows]
    print(format_table(header, cells))
    if settings.get("out"):
        write_csv(settings["out"], header, cells)
        print(f"wrote {settings['out']}")
    return 0


def cmd_gradcheck(args) -> int:
    settings = merge_settings(args)
    errors = episode_gradcheck(
        nodes=args.nodes,
        k1=args.k1,
        k2=args.k2,
        edge_hidden=settings.get("edge_hidden", 64),
        tau=settings.get("tau", 3.0),
        lam=settings.get("lambda", 0.3),
        seed=settings.get("seed", 0),
        h=args.h,
    )
    worst = max(errors.values())
    for name in sorted(errors):
        print(f"  {name}: max rel err {errors[name]:.3e}")
    status = "PASS" if worst < args.tol else "FAIL"
    print(f"gradcheck {status}: max relative error {worst:.3e} (tolerance {args.tol:g})")
    return 0 if worst < args.tol else 1


def build_parser() -> argparse.ArgumentParser:
    parser = argparse.ArgumentParser(
        prog="fewgraph",
        description="Few-shot text attribute inference over a learnable text graph.",
    )
    parser.add_argument("--version", action="version", version=f"fewgraph {__version__}")
    sub = parser.add_subparsers(dest="command", required=True)

    def common(p: argparse.ArgumentParser) -> None:
        p.add_argument("--config", help="key = value config file")
        p.add_argument("--seed", type=int)
        p.add_argument("--shots", type=int)
        p.add_argument("--tau", type=float)
        p.add_argument("--lambda", dest="lam", type=float)
        p.add_argument("--epochs", type=int)
        p.add_argument("--lr", type=float)
        p.add_argument("--test-fraction", dest="test_fraction", type=float)
        p.add_argument("--unlabeled-cap", dest="unlabeled_cap", type=int)
        p.add_argument("--source-cap", dest="source_cap", type=int)
        p.add_argument("--source")
        p.add_argument("--target")
        p.add_argument("--out")
        p.add_argument("--jobs", type=int)
        p.add_argument("--export-graph", dest="export_graph", action="store_const", const=True)
        p.add_argument("--no-graph", dest="use_graph", action="store_const", const=False)
        p.add_argument("--no-kd1", dest="use_kd1", action="store_const", const=False)
        p.add_argument("--no-kd2", dest="use_kd2", action="store_const", const=False)
        p.add_argument("--target-kd-mode", dest="target_kd_mode")

    p = sub.add_parser("synth", help="generate a synthetic Gaussian-cluster corpus")
    common(p)
    p.add_argument("--classes", type=int, default=2)
    p.add_argument("--per-class", dest="per_class", type=int, default=100)
    p.add_argument("--dim", type=int, default=16)
    p.add_argument("--separation", type=float, default=4.0)
    p.add_argument("--domain", choices=["S", "T"], default="T")
    p.set_defaults(func=cmd_synth)

    p = sub.add_parser("train", help="run the two-phase training pipeline")
    common(p)
    p.set_defaults(func=cmd_train)

    p = sub.add_parser("eval", help="evaluate a checkpoint on a sampled episode")
    common(p)
    p.add_argument("--model", required=True)
    p.set_defaults(func=cmd_eval)

    p = sub.add_parser("sweep", help="sweep shots, tau, or lambda over seeds")
    common(p)
    p.add_argument("--param", choices=list(SWEEP_PARAMS))
    p.add_argument("--values", help="comma list; int ranges like 1..5 allowed for shots")
    p.add_argument("--seeds", help="comma list of seeds; ranges like 0..9 allowed")
    p.set_defaults(func=cmd_sweep)

    p = sub.add_parser("ablate", help="compare pipeline variants")
    common(p)
    p.add_argument("--variants", help=f"comma list from {','.join(VARIANTS)}")
    p.add_argument("--seeds", help="comma list of seeds")
    p.set_defaults(func=cmd_ablate)

    p = sub.add_parser("gradcheck", help="finite-difference check on a tiny episode")
    common(p)
    p.add_argument("--nodes", type=int, default=6)
    p.add_argument("--k1", type=int, default=8)
    p.add_argument("--k2", type=int, default=2)
    p.add_argument("--edge-hidden", dest="edge_hidden", type=int)
    p.add_argument("--h", type=float, default=1e-5)
    p.add_argument("--tol", type=float, default=1e-4)
    p.set_defaults(func=cmd_gradcheck)

    return parser


def main(argv=None) -> int:
    level = os.environ.get("FEWGRAPH_LOG", "WARNING").upper()
    logging.basicConfig(level=getattr(logging, level, logging.WARNING))
    parser = build_parser()
    args = parser.parse_args(argv)
    try:
        return args.func(args)
    except (CliError, ConfigError, CorpusFormatError, DataError, ParameterError) as exc:
        print(f"error: {exc}", file=sys.stderr)
        return 2
    except OSError as exc:
        print(f"error: {exc}", file=sys.stderr)
        return 2


if __name__ == "__main__":
    sys.exit(main())

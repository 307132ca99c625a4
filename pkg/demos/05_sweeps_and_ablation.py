#!/usr/bin/env python3
"""Reproduce the experiment harness at desk scale: a shot-count sweep and
the five-variant component ablation."""

from fewgraph.corpus import generate_synthetic
from fewgraph.metrics import ablate, format_table, sweep
from fewgraph.pipeline import RunConfig

target = generate_synthetic(2, 60, 8, 2.0, seed=3)
source = generate_synthetic(2, 60, 8, 2.0, seed=4, domain="S")
cfg = RunConfig(shots=5, epochs=20, lr=0.02, unlabeled_cap=30, source_cap=40)
seeds = [0, 1, 2]

print("shot-count sweep (3 seeds):")
rows = sweep("shots", [1, 3, 5], seeds, cfg, target)
print(
    format_table(
        ["shots", "mean_acc", "std"],
        [[f"{int(r.value)}", f"{r.mean:.4f}", f"{r.std:.4f}"] for r in rows],
    )
)

print("\ncomponent ablation (3 seeds):")
rows = ablate(cfg, target, source, seeds=seeds)
print(
    format_table(
        ["variant", "mean_acc", "std"],
        [[r.variant, f"{r.mean:.4f}", f"{r.std:.4f}"] for r in rows],
    )
)

"""Few-shot text attribute inference over a learnable text graph.

Texts arrive as precomputed embeddings; the package concatenates a label
channel, learns a dense graph over the episode's nodes, refines it with
GCN message passing, and trains with two-level knowledge distillation
(cross-domain, then target-domain).
"""

__version__ = "0.1.0"

from .corpus import (
    Corpus,
    Episode,
    LabelSpace,
    TextRecord,
    generate_synthetic,
    load_corpus,
    sample_episode,
    save_corpus,
)
from .distill import DistillConfig, train_base, train_final, train_supervised
from .metrics import EvalResult, ablate, evaluate, sweep
from .model import (
    AttributeModel,
    freeze_all_except_head,
    load_model,
    save_model,
    trainable_parameters,
)
from .pipeline import RunConfig, RunResult, run_pipeline

__all__ = [
    "AttributeModel",
    "Corpus",
    "DistillConfig",
    "Episode",
    "EvalResult",
    "LabelSpace",
    "RunConfig",
    "RunResult",
    "TextRecord",
    "ablate",
    "evaluate",
    "freeze_all_except_head",
    "generate_synthetic",
    "load_corpus",
    "load_model",
    "run_pipeline",
    "sample_episode",
    "save_corpus",
    "save_model",
    "sweep",
    "trainable_parameters",
    "train_base",
    "train_final",
    "train_supervised",
]

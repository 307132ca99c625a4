"""Corpus handling: records, representation assembly, episodes, file I/O.

Corpus file format (line-oriented text)::

    #fewgraph-corpus v1 dim=<k1> classes=<name1,name2,...>
    <id> TAB <label-name or "?"> TAB <S|T> TAB <k1 space-separated floats>

Floats are serialized with ``repr`` so the file round-trips exactly.
Every text is represented as the concatenation of its embedding and a
label channel: one-hot for labeled records, the uniform vector 1/k2 for
unlabeled ones.
"""

from __future__ import annotations

import math
from dataclasses import dataclass, field

import numpy as np

DOMAINS = ("S", "T")

HEADER_PREFIX = "#fewgraph-corpus v1 "


class CorpusFormatError(ValueError):
    """Malformed corpus file; the message names the offending line."""


class DataError(ValueError):
    """The corpus cannot satisfy the requested episode."""


class ParameterError(ValueError):
    """Invalid generation/sampling parameter."""


@dataclass(frozen=True, eq=False)
class TextRecord:
    id: str
    embedding: np.ndarray  # (k1,) float64
    label: int | None
    domain: str  # "S" or "T"

    def __eq__(self, other) -> bool:
        return (
            isinstance(other, TextRecord)
            and self.id == other.id
            and self.label == other.label
            and self.domain == other.domain
            and np.array_equal(self.embedding, other.embedding)
        )


@dataclass(frozen=True)
class LabelSpace:
    classes: tuple[str, ...]

    def __post_init__(self) -> None:
        if len(self.classes) < 2:
            raise ParameterError("label space needs at least 2 classes")
        if len(set(self.classes)) != len(self.classes):
            raise ParameterError("class names must be unique")
        for name in self.classes:
            if not name or any(c.isspace() or c == "," for c in name):
                raise ParameterError(f"invalid class name {name!r}")

    @property
    def k2(self) -> int:
        return len(self.classes)

    def index(self, name: str) -> int:
        try:
            return self.classes.index(name)
        except ValueError:
            raise KeyError(f"unknown class {name!r}") from None


@dataclass(frozen=True, eq=False)
class Corpus:
    records: tuple[TextRecord, ...]
    labels: LabelSpace

    def __post_init__(self) -> None:
        if not self.records:
            raise DataError("corpus is empty")
        dim = self.records[0].embedding.shape[0]
        for i, r in enumerate(self.records):
            if r.embedding.shape != (dim,):
                raise DataError(
                    f"record {r.id!r} has embedding length {r.embedding.shape[0]}, expected {dim}"
                )
            if r.label is not None and not (0 <= r.label < self.labels.k2):
                raise DataError(f"record {r.id!r} has label {r.label} outside the label space")
            if r.domain not in DOMAINS:
                raise DataError(f"record {r.id!r} has unknown domain {r.domain!r}")

    def __len__(self) -> int:
        return len(self.records)

    def __eq__(self, other) -> bool:
        return (
            isinstance(other, Corpus)
            and self.labels == other.labels
            and len(self.records) == len(other.records)
            and all(a == b for a, b in zip(self.records, other.records))
        )

    @property
    def dim(self) -> int:
        return self.records[0].embedding.shape[0]

    def embedding_matrix(self, indices) -> np.ndarray:
        return np.stack([self.records[i].embedding for i in indices])

    def labels_of(self, indices) -> np.ndarray:
        out = []
        for i in indices:
            lab = self.records[i].label
            if lab is None:
                raise DataError(f"record {self.records[i].id!r} has no label")
            out.append(lab)
        return np.asarray(out, dtype=np.intp)


def label_channel(label: int | None, k2: int) -> np.ndarray:
    """One-hot vector for a labeled text, uniform 1/k2 for an unlabeled one."""
    if label is None:
        return np.full(k2, 1.0 / k2)
    ch = np.zeros(k2)
    ch[label] = 1.0
    return ch


def assemble_representation(record: TextRecord, labels: LabelSpace) -> np.ndarray:
    """Concatenate the embedding channel with the label channel."""
    return np.concatenate([record.embedding, label_channel(record.label, labels.k2)])


def assemble_matrix(embeddings: np.ndarray, labels_seq, k2: int) -> np.ndarray:
    """Stack representations for a batch; ``labels_seq`` entries may be None."""
    channels = np.stack([label_channel(lab, k2) for lab in labels_seq])
    return np.concatenate([np.asarray(embeddings, dtype=np.float64), channels], axis=1)


@dataclass(frozen=True)
class Episode:
    """One few-shot task: index sets into a corpus, mutually disjoint."""

    labeled: tuple[int, ...]
    unlabeled: tuple[int, ...]
    test: tuple[int, ...]
    source_labeled: tuple[int, ...] = field(default=())

    def __post_init__(self) -> None:
        sets = [set(self.labeled), set(self.unlabeled), set(self.test)]
        total = sum(len(s) for s in sets)
        if len(set().union(*sets)) != total:
            raise DataError("episode index sets must be disjoint")


def sample_episode(
    corpus: Corpus,
    shots: int,
    test_fraction: float = 0.2,
    seed: int = 0,
    unlabeled_cap: int = 200,
) -> Episode:
    """Draw a class-balanced labeled set, a test set, and an unlabeled pool.

    The test set is ``floor(test_fraction * remaining)`` records drawn from
    the label-bearing remainder (ground truth is needed for metrics); all
    other remaining records become unlabeled transductive nodes, capped at
    ``unlabeled_cap``.  Deterministic per seed.
    """
    if shots < 1:
        raise ParameterError("shots must be >= 1")
    if not 0.0 < test_fraction < 1.0:
        raise ParameterError("test_fraction must be in (0, 1)")
    rng = np.random.default_rng(seed)
    k2 = corpus.labels.k2

    by_class: list[list[int]] = [[] for _ in range(k2)]
    for i, r in enumerate(corpus.records):
        if r.label is not None:
            by_class[r.label].append(i)

    labeled: list[int] = []
    for c, candidates in enumerate(by_class):
        if len(candidates) < shots:
            raise DataError(
                f"class {corpus.labels.classes[c]!r} has {len(candidates)} labeled "
                f"records, need {shots}"
            )
        pick = rng.choice(len(candidates), size=shots, replace=False)
        labeled.extend(candidates[j] for j in sorted(pick))

    taken = set(labeled)
    remaining = [i for i in range(len(corpus)) if i not in taken]
    n_test = math.floor(test_fraction * len(remaining))
    with_labels = [i for i in remaining if corpus.records[i].label is not None]
    if n_test > len(with_labels):
        raise DataError(
            f"need {n_test} labeled records for the test split, only {len(with_labels)} left"
        )
    pick = rng.choice(len(with_labels), size=n_test, replace=False)
    test = sorted(with_labels[j] for j in pick)

    test_set = set(test)
    unlabeled = [i for i in remaining if i not in test_set]
    if len(unlabeled) > unlabeled_cap:
        pick = rng.choice(len(unlabeled), size=unlabeled_cap, replace=False)
        unlabeled = sorted(unlabeled[j] for j in sorted(pick))

    return Episode(labeled=tuple(labeled), unlabeled=tuple(unlabeled), test=tuple(test))


def generate_synthetic(
    classes: int,
    per_class: int,
    dim: int,
    separation: float,
    seed: int = 0,
    domain: str = "T",
) -> Corpus:
    """Isotropic unit-variance Gaussian clusters, one per class.

    Class ``c``'s mean sits at ``separation`` along basis direction ``c``,
    so the means are mutually orthogonal; requires ``dim >= classes``.
    All points carry labels (masking happens at episode sampling).
    """
    if separation < 0:
        raise ParameterError("separation must be >= 0")
    if dim < classes:
        raise ParameterError(
            f"dim={dim} < classes={classes}: orthogonal class means are impossible"
        )
    if domain not in DOMAINS:
        raise ParameterError(f"domain must be one of {DOMAINS}")
    rng = np.random.default_rng(seed)
    records = []
    for c in range(classes):
        mean = np.zeros(dim)
        mean[c] = separation
        points = rng.normal(loc=0.0, scale=1.0, size=(per_class, dim)) + mean
        for i in range(per_class):
            records.append(
                TextRecord(
                    id=f"synth-{c}-{i:04d}",
                    embedding=points[i],
                    label=c,
                    domain=domain,
                )
            )
    space = LabelSpace(tuple(f"c{c}" for c in range(classes)))
    return Corpus(records=tuple(records), labels=space)


def save_corpus(corpus: Corpus, path) -> None:
    lines = [
        HEADER_PREFIX
        + f"dim={corpus.dim} classes={','.join(corpus.labels.classes)}"
    ]
    for r in corpus.records:
        name = "?" if r.label is None else corpus.labels.classes[r.label]
        floats = " ".join(repr(float(v)) for v in r.embedding)
        lines.append(f"{r.id}\t{name}\t{r.domain}\t{floats}")
    with open(path, "w", encoding="utf-8") as fh:
        fh.write("\n".join(lines) + "\n")


def load_corpus(path) -> Corpus:
    with open(path, "r", encoding="utf-8") as fh:
        raw = fh.read().splitlines()
    if not raw:
        raise CorpusFormatError(f"{path}: empty file")
    header = raw[0]
    if not header.startswith(HEADER_PREFIX):
        raise CorpusFormatError(f"{path}: line 1: bad header {header!r}")
    dim = None
    classes: tuple[str, ...] | None = None
    for tok in header[len(HEADER_PREFIX):].split():
        if tok.startswith("dim="):
            try:
                dim = int(tok[4:])
            except ValueError:
                raise CorpusFormatError(f"{path}: line 1: bad dim {tok!r}") from None
        elif tok.startswith("classes="):
            classes = tuple(tok[8:].split(","))
    if dim is None or dim < 1 or not classes:
        raise CorpusFormatError(f"{path}: line 1: header must declare dim and classes")
    try:
        space = LabelSpace(classes)
    except ParameterError as exc:
        raise CorpusFormatError(f"{path}: line 1: {exc}") from None

    records = []
    for lineno, line in enumerate(raw[1:], start=2):
        parts = line.split("\t")
        if len(parts) != 4:
            raise CorpusFormatError(
                f"{path}: line {lineno}: expected 4 tab-separated fields, got {len(parts)}"
            )
        rec_id, name, dom, floats = parts
        if not rec_id:
            raise CorpusFormatError(f"{path}: line {lineno}: empty id")
        if name == "?":
            label = None
        else:
            try:
                label = space.index(name)
            except KeyError:
                raise CorpusFormatError(
                    f"{path}: line {lineno}: label {name!r} not in {classes}"
                ) from None
        if dom not in DOMAINS:
            raise CorpusFormatError(f"{path}: line {lineno}: domain must be S or T")
        values = floats.split()
        if len(values) != dim:
            raise CorpusFormatError(
                f"{path}: line {lineno}: expected {dim} floats, got {len(values)}"
            )
        try:
            emb = np.array([float(v) for v in values])
        except ValueError:
            raise CorpusFormatError(f"{path}: line {lineno}: unparseable float") from None
        if not np.all(np.isfinite(emb)):
            raise CorpusFormatError(f"{path}: line {lineno}: non-finite embedding value")
        records.append(TextRecord(id=rec_id, embedding=emb, label=label, domain=dom))
    if not records:
        raise CorpusFormatError(f"{path}: no records after header")
    return Corpus(records=tuple(records), labels=space)

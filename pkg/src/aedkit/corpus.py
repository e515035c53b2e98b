"""Corpus model: documents, units, noise injection, fold assignment.

A corpus holds annotated documents for exactly one task. Detection methods
never look at documents directly; they consume the flat unit list produced
by :func:`extract_units`. A unit is whatever carries one label: the whole
text, a single token, or a span.
"""

from __future__ import annotations

import hashlib
import math
from dataclasses import dataclass, field
from enum import Enum

import numpy as np


class ConfigError(Exception):
    """Bad configuration or arguments (CLI exit code 2)."""


class DataError(Exception):
    """Malformed or inconsistent data (CLI exit code 3)."""


class Task(str, Enum):
    TEXT = "text"
    TOKEN = "token"
    SPAN = "span"


# Class name reserved for "no entity here" in span-task probability rows.
# It is a legal prediction target but never a legal annotation.
NO_ENTITY = "O"


# ---------------------------------------------------------------------------
# documents and units
# ---------------------------------------------------------------------------


@dataclass(frozen=True, order=True)
class Span:
    """Half-open token interval [begin, end) with a label."""

    begin: int
    end: int
    label: str
    gold_label: str | None = None


@dataclass(frozen=True)
class Document:
    """One annotated document.

    For text classification ``tokens`` holds a single element, the raw text,
    and ``label`` is set. Token labeling fills ``token_labels`` (aligned with
    ``tokens``), span labeling fills ``spans``. Gold fields are optional and
    only present when ground truth is known (e.g. after noise injection).
    """

    id: str
    tokens: tuple[str, ...]
    label: str | None = None
    gold_label: str | None = None
    token_labels: tuple[str, ...] | None = None
    token_gold_labels: tuple[str, ...] | None = None
    spans: tuple[Span, ...] = ()

    @property
    def text(self) -> str:
        return self.tokens[0] if len(self.tokens) == 1 else " ".join(self.tokens)


@dataclass(frozen=True)
class Unit:
    """One labeled thing, addressed by a stable uid.

    ``position`` is (start, end) in token space; text units use (0, 1) and
    token units (i, i+1), so units of any task sort the same way.
    """

    uid: str
    doc_id: str
    kind: Task
    position: tuple[int, int]
    label: str
    gold_label: str | None = None
    is_error: bool | None = None


@dataclass(frozen=True)
class Corpus:
    task: Task
    classes: tuple[str, ...]
    documents: tuple[Document, ...]
    provenance: str = field(default="", compare=False)

    @property
    def annotatable_classes(self) -> tuple[str, ...]:
        """Classes a unit may actually carry (drops NO_ENTITY for spans)."""
        if self.task is Task.SPAN:
            return tuple(c for c in self.classes if c != NO_ENTITY)
        return self.classes

    def class_index(self) -> dict[str, int]:
        return {c: i for i, c in enumerate(self.classes)}


# ---------------------------------------------------------------------------
# validation
# ---------------------------------------------------------------------------


def validate_corpus(corpus: Corpus) -> None:
    """Check structural invariants, raising DataError on the first violation."""
    if not corpus.documents:
        raise DataError("corpus has no documents")
    if len(set(corpus.classes)) != len(corpus.classes):
        raise DataError("duplicate entries in class list")
    known = set(corpus.classes)
    seen_ids: set[str] = set()
    for doc in corpus.documents:
        if doc.id in seen_ids:
            raise DataError(f"duplicate document id {doc.id!r}")
        seen_ids.add(doc.id)
        if corpus.task is Task.TEXT:
            if doc.label is None:
                raise DataError(f"document {doc.id!r} has no label")
            if doc.label not in known:
                raise DataError(f"unit {doc.id!r}#0: label {doc.label!r} not in classes")
            if doc.gold_label is not None and doc.gold_label not in known:
                raise DataError(f"unit {doc.id!r}#0: gold label {doc.gold_label!r} not in classes")
        elif corpus.task is Task.TOKEN:
            if not doc.tokens:
                raise DataError(f"document {doc.id!r} has zero tokens")
            if doc.token_labels is None or len(doc.token_labels) != len(doc.tokens):
                raise DataError(f"document {doc.id!r}: token labels missing or misaligned")
            for i, lab in enumerate(doc.token_labels):
                if lab not in known:
                    raise DataError(f"unit {doc.id!r}#{i}: label {lab!r} not in classes")
            if doc.token_gold_labels is not None:
                if len(doc.token_gold_labels) != len(doc.tokens):
                    raise DataError(f"document {doc.id!r}: gold labels misaligned")
                for i, lab in enumerate(doc.token_gold_labels):
                    if lab not in known:
                        raise DataError(f"unit {doc.id!r}#{i}: gold label {lab!r} not in classes")
        else:
            if not doc.tokens:
                raise DataError(f"document {doc.id!r} has zero tokens")
            last_end = 0
            for sp in sorted(doc.spans):
                uid = f"{doc.id}#{sp.begin}-{sp.end}"
                if not (0 <= sp.begin < sp.end <= len(doc.tokens)):
                    raise DataError(f"unit {uid}: span outside document bounds")
                if sp.begin < last_end:
                    raise DataError(f"unit {uid}: overlapping spans in document {doc.id!r}")
                last_end = sp.end
                if sp.label not in known or sp.label == NO_ENTITY:
                    raise DataError(f"unit {uid}: label {sp.label!r} not an annotatable class")
                if sp.gold_label is not None and (sp.gold_label not in known or sp.gold_label == NO_ENTITY):
                    raise DataError(f"unit {uid}: gold label {sp.gold_label!r} not an annotatable class")


def extract_units(corpus: Corpus) -> list[Unit]:
    """Flatten a corpus into its units, sorted by (doc_id, position).

    is_error is derived as label != gold_label wherever gold is known.
    """
    units: list[Unit] = []
    for doc in corpus.documents:
        if corpus.task is Task.TEXT:
            units.append(_make_unit(f"{doc.id}#0", doc.id, Task.TEXT, (0, 1), doc.label, doc.gold_label))
        elif corpus.task is Task.TOKEN:
            golds = doc.token_gold_labels or (None,) * len(doc.tokens)
            for i, (lab, gold) in enumerate(zip(doc.token_labels, golds)):
                units.append(_make_unit(f"{doc.id}#{i}", doc.id, Task.TOKEN, (i, i + 1), lab, gold))
        else:
            for sp in doc.spans:
                uid = f"{doc.id}#{sp.begin}-{sp.end}"
                units.append(_make_unit(uid, doc.id, Task.SPAN, (sp.begin, sp.end), sp.label, sp.gold_label))
    units.sort(key=lambda u: (u.doc_id, u.position))
    seen: set[str] = set()
    for u in units:
        if u.uid in seen:
            raise DataError(f"duplicate unit id {u.uid}")
        seen.add(u.uid)
    return units


def _make_unit(uid, doc_id, kind, position, label, gold) -> Unit:
    err = None if gold is None else (label != gold)
    return Unit(uid=uid, doc_id=doc_id, kind=kind, position=position,
                label=label, gold_label=gold, is_error=err)


def documents_by_id(corpus: Corpus) -> dict[str, Document]:
    return {doc.id: doc for doc in corpus.documents}


def unit_tokens(doc: Document, unit: Unit) -> tuple[str, ...]:
    """Surface tokens covered by a unit (the raw text for text units)."""
    if unit.kind is Task.TEXT:
        return (doc.text,)
    return doc.tokens[unit.position[0]:unit.position[1]]


# ---------------------------------------------------------------------------
# noise injection
# ---------------------------------------------------------------------------


def inject_noise(corpus: Corpus, rate: float, seed: int) -> Corpus:
    """Flip labels of round(rate * n) units, chosen without replacement.

    Replacement labels are drawn uniformly from the other annotatable
    classes. Every unit in the result carries a gold label (the original),
    so is_error is defined everywhere. Span boundaries are never altered.
    """
    if not (0.0 <= rate <= 1.0):
        raise ConfigError(f"noise rate {rate} outside [0, 1]")
    choices = corpus.annotatable_classes
    if len(choices) < 2:
        raise ConfigError("noise injection needs at least 2 classes")
    validate_corpus(corpus)

    units = extract_units(corpus)
    n = len(units)
    n_flip = int(math.floor(rate * n + 0.5))
    rng = np.random.default_rng(seed)
    picked = set(rng.choice(n, size=n_flip, replace=False).tolist()) if n_flip else set()

    flipped: dict[str, str] = {}
    for idx in sorted(picked):
        u = units[idx]
        others = [c for c in choices if c != u.label]
        flipped[u.uid] = others[int(rng.integers(len(others)))]

    docs = tuple(_corrupt_document(corpus.task, doc, flipped) for doc in corpus.documents)
    note = f"noise(rate={rate},seed={seed})"
    prov = f"{corpus.provenance}+{note}" if corpus.provenance else note
    return Corpus(task=corpus.task, classes=corpus.classes, documents=docs, provenance=prov)


def _corrupt_document(task: Task, doc: Document, flipped: dict[str, str]) -> Document:
    if task is Task.TEXT:
        new = flipped.get(f"{doc.id}#0", doc.label)
        return Document(id=doc.id, tokens=doc.tokens, label=new, gold_label=doc.label)
    if task is Task.TOKEN:
        labels = tuple(flipped.get(f"{doc.id}#{i}", lab) for i, lab in enumerate(doc.token_labels))
        return Document(id=doc.id, tokens=doc.tokens, token_labels=labels,
                        token_gold_labels=doc.token_labels)
    spans = tuple(
        Span(sp.begin, sp.end, flipped.get(f"{doc.id}#{sp.begin}-{sp.end}", sp.label), gold_label=sp.label)
        for sp in doc.spans
    )
    return Document(id=doc.id, tokens=doc.tokens, spans=spans)


# ---------------------------------------------------------------------------
# folds
# ---------------------------------------------------------------------------


@dataclass(frozen=True)
class FoldAssignment:
    k: int
    seed: int
    fold_of: dict[str, int]

    def train_ids(self, fold: int) -> list[str]:
        return [d for d, f in self.fold_of.items() if f != fold]

    def holdout_ids(self, fold: int) -> list[str]:
        return [d for d, f in self.fold_of.items() if f == fold]


def make_folds(corpus: Corpus, k: int, seed: int) -> FoldAssignment:
    """Assign whole documents to k folds: seeded shuffle, then round-robin.

    Fold sizes differ by at most one. All units of a document share its fold.
    """
    if k < 2:
        raise ConfigError(f"fold count {k} must be at least 2")
    ids = [doc.id for doc in corpus.documents]
    if k > len(ids):
        raise ConfigError(f"fold count {k} exceeds document count {len(ids)}")
    rng = np.random.default_rng(seed)
    order = rng.permutation(len(ids))
    fold_of = {ids[int(order[i])]: i % k for i in range(len(ids))}
    return FoldAssignment(k=k, seed=seed, fold_of=fold_of)


def corpus_digest(corpus: Corpus) -> str:
    """Content hash tying derived artifacts (folds, bundles) to their corpus."""
    h = hashlib.sha256()
    h.update(corpus.task.value.encode())
    h.update(b"\x00".join(c.encode() for c in corpus.classes))
    for doc in corpus.documents:
        h.update(b"\x01" + doc.id.encode())
        h.update(b"\x00".join(t.encode() for t in doc.tokens))
        if corpus.task is Task.TEXT:
            h.update(f"\x02{doc.label}\x03{doc.gold_label}".encode())
        elif corpus.task is Task.TOKEN:
            h.update(b"\x02" + b"\x00".join(t.encode() for t in doc.token_labels))
            if doc.token_gold_labels:
                h.update(b"\x03" + b"\x00".join(t.encode() for t in doc.token_gold_labels))
        else:
            for sp in doc.spans:
                h.update(f"\x02{sp.begin},{sp.end},{sp.label},{sp.gold_label}".encode())
    return h.hexdigest()

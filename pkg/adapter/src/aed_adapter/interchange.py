"""Reader/writer half of the aedkit interchange contract.

Implemented from FORMATS.md alone, on purpose: this package must run
anywhere the file formats do, with no dependency on the toolkit itself.
The corpus digest is recomputed here so a fold file can be verified
against the corpus it claims to partition before any training happens.
"""

from __future__ import annotations

import hashlib
import json
from dataclasses import dataclass
from pathlib import Path
from typing import Iterable, Mapping

import numpy as np

FLOAT_FMT = "%.12g"
NO_ENTITY = "O"
TASKS = ("text", "token", "span")


class ConfigError(Exception):
    """Bad request: wrong flags, wrong recipe, wrong kind."""


class DataError(Exception):
    """Bad or missing input files."""


# ---------------------------------------------------------------------------
# corpus model
# ---------------------------------------------------------------------------


@dataclass(frozen=True)
class Unit:
    """One annotatable thing: a document, a token, or a span.

    ``doc`` indexes into the corpus document lists; ``begin``/``end`` slice
    that document's tokens (text units cover the single pseudo-token).
    """

    uid: str
    doc: int
    begin: int
    end: int
    label: str


@dataclass
class Doc:
    id: str
    tokens: tuple[str, ...]
    label: str | None = None                 # text task
    gold: str | None = None
    tags: tuple[str, ...] | None = None      # token task
    gold_tags: tuple[str, ...] | None = None
    spans: tuple[tuple[int, int, str, str | None], ...] | None = None


@dataclass
class Corpus:
    task: str
    classes: tuple[str, ...]
    docs: list[Doc]
    units: list[Unit]


def read_corpus(path, task: str) -> Corpus:
    if task not in TASKS:
        raise ConfigError(f"task must be one of {list(TASKS)}, got {task!r}")
    if not Path(path).exists():
        raise DataError(f"missing corpus file {path}")
    if task == "text":
        return _read_text(path)
    return _read_columns(path, task)


def _read_text(path) -> Corpus:
    docs: list[Doc] = []
    units: list[Unit] = []
    labels: set[str] = set()
    with open(path, encoding="utf-8") as fh:
        for lineno, line in enumerate(fh, start=1):
            if not line.strip():
                continue
            try:
                rec = json.loads(line)
            except json.JSONDecodeError as exc:
                raise DataError(f"{path}:{lineno}: not valid JSON ({exc})") from None
            try:
                doc_id, text, label = str(rec["id"]), str(rec["text"]), str(rec["label"])
            except (TypeError, KeyError):
                raise DataError(f"{path}:{lineno}: record needs id, text, label") from None
            gold = rec.get("gold_label")
            gold = None if gold is None else str(gold)
            labels.add(label)
            if gold is not None:
                labels.add(gold)
            units.append(Unit(uid=f"{doc_id}#0", doc=len(docs), begin=0, end=1, label=label))
            docs.append(Doc(id=doc_id, tokens=(text,), label=label, gold=gold))
    if not docs:
        raise DataError(f"{path}: empty corpus file")
    return Corpus(task="text", classes=tuple(sorted(labels)), docs=docs, units=units)


def _read_columns(path, task: str) -> Corpus:
    sentences: list[list[tuple[str, str, str | None]]] = []
    current: list[tuple[str, str, str | None]] = []
    has_gold = False
    with open(path, encoding="utf-8") as fh:
        for lineno, raw in enumerate(fh, start=1):
            line = raw.rstrip("\n")
            if not line.strip():
                if current:
                    sentences.append(current)
                    current = []
                continue
            cols = line.split("\t")
            if len(cols) == 2:
                current.append((cols[0], cols[1], None))
            elif len(cols) == 3:
                current.append((cols[0], cols[1], cols[2]))
                has_gold = True
            else:
                raise DataError(f"{path}:{lineno}: expected 2 or 3 columns, got {len(cols)}")
    if current:
        sentences.append(current)
    if not sentences:
        raise DataError(f"{path}: empty corpus file")

    docs: list[Doc] = []
    units: list[Unit] = []
    labels: set[str] = set()
    for idx, sent in enumerate(sentences):
        doc_id = f"s{idx:05d}"
        tokens = tuple(t for t, _, _ in sent)
        tags = tuple(tag for _, tag, _ in sent)
        golds = tuple(g for _, _, g in sent) if has_gold else None
        if golds is not None and any(g is None for g in golds):
            raise DataError(f"{path}: sentence {idx}: gold column present for some rows only")
        if task == "token":
            labels.update(tags)
            if golds:
                labels.update(golds)
            for i, tag in enumerate(tags):
                units.append(Unit(uid=f"{doc_id}#{i}", doc=idx, begin=i, end=i + 1, label=tag))
            docs.append(Doc(id=doc_id, tokens=tokens, tags=tags, gold_tags=golds))
        else:
            spans = _decode_bio(tags, path, idx)
            gold_of = {}
            if golds:
                gold_of = {(b, e): lab for b, e, lab in _decode_bio(golds, path, idx)}
                labels.update(gold_of.values())
            full = tuple((b, e, lab, gold_of.get((b, e))) for b, e, lab in spans)
            labels.update(lab for _, _, lab in spans)
            for b, e, lab, _ in full:
                units.append(Unit(uid=f"{doc_id}#{b}-{e}", doc=idx, begin=b, end=e, label=lab))
            docs.append(Doc(id=doc_id, tokens=tokens, spans=full))

    classes = tuple(sorted(labels)) + ((NO_ENTITY,) if task == "span" else ())
    return Corpus(task=task, classes=classes, docs=docs, units=units)


def _decode_bio(tags: Iterable[str], path, sent_idx: int) -> list[tuple[int, int, str]]:
    # repair policy per the contract: an orphan I-X opens a span like B-X
    spans: list[tuple[int, int, str]] = []
    begin, label = -1, ""
    tags = list(tags)
    for i, tag in enumerate(tags):
        if tag == NO_ENTITY:
            prefix, name = "O", ""
        elif len(tag) > 2 and tag[1] == "-" and tag[0] in ("B", "I"):
            prefix, name = tag[0], tag[2:]
        else:
            raise DataError(f"{path}: sentence {sent_idx}: malformed BIO tag {tag!r}")
        if prefix == "I" and label == name:
            continue
        if begin >= 0:
            spans.append((begin, i, label))
            begin, label = -1, ""
        if prefix in ("B", "I"):
            begin, label = i, name
    if begin >= 0:
        spans.append((begin, len(tags), label))
    return spans


# ---------------------------------------------------------------------------
# corpus digest and fold files
# ---------------------------------------------------------------------------


def corpus_digest(corpus: Corpus) -> str:
    """SHA-256 of the canonical corpus content, per the FORMATS.md recipe."""
    h = hashlib.sha256()
    h.update(corpus.task.encode())
    h.update(b"\x00".join(c.encode() for c in corpus.classes))
    for doc in corpus.docs:
        h.update(b"\x01" + doc.id.encode())
        h.update(b"\x00".join(t.encode() for t in doc.tokens))
        if corpus.task == "text":
            h.update(f"\x02{doc.label}\x03{doc.gold}".encode())
        elif corpus.task == "token":
            h.update(b"\x02" + b"\x00".join(t.encode() for t in doc.tags))
            if doc.gold_tags:
                h.update(b"\x03" + b"\x00".join(t.encode() for t in doc.gold_tags))
        else:
            for b, e, lab, gold in doc.spans:
                h.update(f"\x02{b},{e},{lab},{gold}".encode())
    return h.hexdigest()


def _parse_header(line: str, magic: str, path) -> dict[str, str]:
    parts = line.strip().split(" ")
    if len(parts) < 2 or parts[0] != magic or parts[1] != "v1":
        raise DataError(f"{path}: expected a '{magic} v1' header, got {line.strip()!r}")
    fields: dict[str, str] = {}
    for part in parts[2:]:
        if "=" not in part:
            raise DataError(f"{path}: malformed header field {part!r}")
        key, _, value = part.partition("=")
        fields[key] = value
    return fields


@dataclass
class Folds:
    k: int
    fold_of: dict[str, int]


def read_folds(path, corpus: Corpus) -> Folds:
    """Load a fold file, refusing one built for a different corpus."""
    if not Path(path).exists():
        raise DataError(f"missing fold file {path}")
    lines = Path(path).read_text(encoding="utf-8").split("\n")
    if not lines or not lines[0].strip():
        raise DataError(f"{path}: empty fold file")
    fields = _parse_header(lines[0], "#aed-folds", path)
    for required in ("k", "seed", "corpus"):
        if required not in fields:
            raise DataError(f"{path}: header lacks {required}=")
    digest = corpus_digest(corpus)
    if fields["corpus"] != digest:
        raise DataError(
            f"{path}: fold file digest {fields['corpus'][:12]}... does not match "
            f"corpus digest {digest[:12]}...; it partitions a different corpus"
        )
    k = int(fields["k"])
    fold_of: dict[str, int] = {}
    for lineno, line in enumerate(lines[1:], start=2):
        if not line.strip():
            continue
        cols = line.split("\t")
        if len(cols) != 2 or not cols[1].isdigit():
            raise DataError(f"{path}:{lineno}: expected doc_id<TAB>fold")
        if cols[0] in fold_of:
            raise DataError(f"{path}:{lineno}: duplicate document {cols[0]!r}")
        fold = int(cols[1])
        if fold >= k:
            raise DataError(f"{path}:{lineno}: fold {fold} out of range for k={k}")
        fold_of[cols[0]] = fold
    missing = {doc.id for doc in corpus.docs} - set(fold_of)
    if missing:
        raise DataError(f"{path}: fold file lacks {len(missing)} documents "
                        f"(e.g. {sorted(missing)[:3]})")
    return Folds(k=k, fold_of=fold_of)


# ---------------------------------------------------------------------------
# bundle and embedding writers
# ---------------------------------------------------------------------------


def _header(magic: str, fields: dict[str, str]) -> str:
    for key, value in fields.items():
        if any(ch.isspace() for ch in value):
            raise DataError(f"header field {key}={value!r} may not contain whitespace")
    return " ".join([magic, "v1"] + [f"{k}={v}" for k, v in fields.items()])


def write_predictions(path, model: str, kind: str,
                      classes: tuple[str, ...],
                      rows: Mapping[str, np.ndarray]) -> None:
    """Write a prediction bundle; ``rows`` maps uid to a (passes, C) array.

    ``kind`` is the header token (``single``, ``repeated:T``, ``epochs:E``)
    and fixes the row shape: single rows drop the pass index column.
    """
    header = _header("#aed-pred", {
        "model": model, "kind": kind, "classes": ",".join(classes),
    })
    single = kind == "single"
    with open(path, "w", encoding="utf-8") as fh:
        fh.write(header + "\n")
        for uid, arr in rows.items():
            if single:
                fh.write(uid + "\t" + "\t".join(FLOAT_FMT % p for p in arr[0]) + "\n")
            else:
                for t in range(arr.shape[0]):
                    fh.write(f"{uid}\t{t}\t"
                             + "\t".join(FLOAT_FMT % p for p in arr[t]) + "\n")


def write_embeddings(path, name: str, vectors: Mapping[str, np.ndarray]) -> None:
    dims = {v.shape[0] for v in vectors.values()}
    if len(dims) != 1:
        raise DataError(f"embedding vectors disagree on dimension: {sorted(dims)}")
    header = _header("#aed-emb", {"name": name, "dim": str(dims.pop())})
    with open(path, "w", encoding="utf-8") as fh:
        fh.write(header + "\n")
        for uid, vec in vectors.items():
            fh.write(uid + "\t" + "\t".join(FLOAT_FMT % x for x in vec) + "\n")

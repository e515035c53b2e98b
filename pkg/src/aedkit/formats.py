"""File formats: corpora, prediction bundles, embeddings, folds, detector output.

Everything on disk is line-oriented UTF-8. Derived artifacts start with a
versioned header line (``#aed-pred v1 ...``) whose remaining fields are
``key=value`` pairs. Corpora use JSON lines for text classification and
blank-line-separated TSV columns for token and span tasks.

These formats are the seam between this package and external tooling:
anything that can write them can feed models into the detectors here.
"""

from __future__ import annotations

import json
import math
from dataclasses import dataclass
from pathlib import Path
from typing import Iterable, Sequence

import numpy as np

from .corpus import (
    Corpus,
    DataError,
    Document,
    FoldAssignment,
    NO_ENTITY,
    Span,
    Task,
    corpus_digest,
    extract_units,
    validate_corpus,
)
from .span_align import bio_to_spans, spans_to_bio
from .vectors import FlagVector, Polarity, ScoreVector

ROW_SUM_TOL = 1e-6
FLOAT_FMT = "%.12g"

KIND_SINGLE = "single"
KIND_REPEATED = "repeated"
KIND_EPOCHS = "epochs"


# ---------------------------------------------------------------------------
# bundle and embedding containers
# ---------------------------------------------------------------------------


@dataclass
class PredictionBundle:
    """Class probabilities for every unit of one corpus.

    ``rows`` maps uid to a (passes, C) array: one row for a plain prediction,
    T rows for stochastic repeats, E rows for per-epoch snapshots.
    """

    model: str
    kind: str
    passes: int
    classes: tuple[str, ...]
    rows: dict[str, np.ndarray]

    def matrix(self, uids: Sequence[str]) -> np.ndarray:
        return np.stack([self.rows[u] for u in uids])

    def single_matrix(self, uids: Sequence[str]) -> np.ndarray:
        if self.passes != 1:
            raise DataError(f"bundle {self.model!r} has {self.passes} passes where one was expected")
        return np.stack([self.rows[u][0] for u in uids])

    def kind_token(self) -> str:
        return self.kind if self.kind == KIND_SINGLE else f"{self.kind}:{self.passes}"


@dataclass
class EmbeddingSet:
    name: str
    dim: int
    vectors: dict[str, np.ndarray]

    def matrix(self, uids: Sequence[str]) -> np.ndarray:
        return np.stack([self.vectors[u] for u in uids])


# ---------------------------------------------------------------------------
# header plumbing
# ---------------------------------------------------------------------------


def _format_header(magic: str, fields: dict[str, str]) -> str:
    parts = [magic, "v1"]
    for key, value in fields.items():
        if any(ch.isspace() for ch in value):
            raise DataError(f"header field {key}={value!r} may not contain whitespace")
        parts.append(f"{key}={value}")
    return " ".join(parts)


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


def _read_lines(path) -> list[str]:
    text = Path(path).read_text(encoding="utf-8")
    return text.split("\n")


def _join_classes(classes: Iterable[str]) -> str:
    out = []
    for c in classes:
        if "," in c or any(ch.isspace() for ch in c):
            raise DataError(f"class name {c!r} cannot appear in a header (comma or whitespace)")
        out.append(c)
    return ",".join(out)


# ---------------------------------------------------------------------------
# corpora
# ---------------------------------------------------------------------------


def read_corpus(path, task: Task) -> Corpus:
    if task is Task.TEXT:
        return _read_text_corpus(path)
    return _read_column_corpus(path, task)


def write_corpus(corpus: Corpus, path) -> None:
    validate_corpus(corpus)
    if corpus.task is Task.TEXT:
        _write_text_corpus(corpus, path)
    else:
        _write_column_corpus(corpus, path)


def _read_text_corpus(path) -> Corpus:
    docs: list[Document] = []
    labels: set[str] = set()
    with open(path, encoding="utf-8") as fh:
        for lineno, line in enumerate(fh, start=1):
            if not line.strip():
                continue
            try:
                rec = json.loads(line)
            except json.JSONDecodeError as exc:
                raise DataError(f"{path}:{lineno}: not valid JSON ({exc})") from None
            if not isinstance(rec, dict):
                raise DataError(f"{path}:{lineno}: record is not an object")
            try:
                doc_id, text, label = str(rec["id"]), str(rec["text"]), str(rec["label"])
            except KeyError as exc:
                raise DataError(f"{path}:{lineno}: missing field {exc.args[0]!r}") from None
            gold = rec.get("gold_label")
            gold = None if gold is None else str(gold)
            labels.add(label)
            if gold is not None:
                labels.add(gold)
            docs.append(Document(id=doc_id, tokens=(text,), label=label, gold_label=gold))
    if not docs:
        raise DataError(f"{path}: empty corpus file")
    corpus = Corpus(task=Task.TEXT, classes=tuple(sorted(labels)),
                    documents=tuple(docs), provenance=str(path))
    validate_corpus(corpus)
    return corpus


def _write_text_corpus(corpus: Corpus, path) -> None:
    with open(path, "w", encoding="utf-8") as fh:
        for doc in corpus.documents:
            rec = {"id": doc.id, "text": doc.text, "label": doc.label}
            if doc.gold_label is not None:
                rec["gold_label"] = doc.gold_label
            fh.write(json.dumps(rec, ensure_ascii=False) + "\n")


def _read_column_corpus(path, task: Task) -> Corpus:
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
                token, tag, gold = cols[0], cols[1], None
            elif len(cols) == 3:
                token, tag, gold = cols
                has_gold = True
            else:
                raise DataError(f"{path}:{lineno}: expected 2 or 3 tab-separated columns, got {len(cols)}")
            if not token:
                raise DataError(f"{path}:{lineno}: empty token")
            current.append((token, tag, gold))
    if current:
        sentences.append(current)
    if not sentences:
        raise DataError(f"{path}: empty corpus file")
    if has_gold:
        for idx, sent in enumerate(sentences):
            for token, tag, gold in sent:
                if gold is None:
                    raise DataError(f"{path}: sentence {idx}: gold column present for some rows but not all")

    docs: list[Document] = []
    labels: set[str] = set()
    for idx, sent in enumerate(sentences):
        doc_id = f"s{idx:05d}"
        tokens = tuple(t for t, _, _ in sent)
        tags = [tag for _, tag, _ in sent]
        golds = [g for _, _, g in sent]
        if task is Task.TOKEN:
            labels.update(tags)
            gold_tuple = None
            if has_gold:
                labels.update(golds)
                gold_tuple = tuple(golds)
            docs.append(Document(id=doc_id, tokens=tokens, token_labels=tuple(tags),
                                 token_gold_labels=gold_tuple))
        else:
            spans = bio_to_spans(tags)
            if has_gold:
                gold_of = {(g.begin, g.end): g.label for g in bio_to_spans(golds)}
                spans = [
                    Span(sp.begin, sp.end, sp.label, gold_label=gold_of.get((sp.begin, sp.end)))
                    for sp in spans
                ]
                labels.update(gold_of.values())
            labels.update(sp.label for sp in spans)
            docs.append(Document(id=doc_id, tokens=tokens, spans=tuple(spans)))

    if task is Task.SPAN:
        classes = tuple(sorted(labels)) + (NO_ENTITY,)
    else:
        classes = tuple(sorted(labels))
    corpus = Corpus(task=task, classes=classes, documents=tuple(docs), provenance=str(path))
    validate_corpus(corpus)
    return corpus


def _write_column_corpus(corpus: Corpus, path) -> None:
    if corpus.task is Task.TOKEN:
        with_gold = [doc.token_gold_labels is not None for doc in corpus.documents]
    else:
        with_gold = [all(sp.gold_label is not None for sp in doc.spans) for doc in corpus.documents]
    if any(with_gold) and not all(with_gold):
        raise DataError("gold labels present for some documents only; refusing to write a mixed file")
    gold_mode = all(with_gold)

    with open(path, "w", encoding="utf-8") as fh:
        for doc in corpus.documents:
            if corpus.task is Task.TOKEN:
                tags = doc.token_labels
                golds = doc.token_gold_labels
            else:
                tags = spans_to_bio(doc.spans, len(doc.tokens))
                golds = spans_to_bio(doc.spans, len(doc.tokens), gold=True) if gold_mode else None
            for i, token in enumerate(doc.tokens):
                if gold_mode:
                    fh.write(f"{token}\t{tags[i]}\t{golds[i]}\n")
                else:
                    fh.write(f"{token}\t{tags[i]}\n")
            fh.write("\n")


# ---------------------------------------------------------------------------
# prediction bundles
# ---------------------------------------------------------------------------


def write_predictions(bundle: PredictionBundle, path) -> None:
    header = _format_header("#aed-pred", {
        "model": bundle.model,
        "kind": bundle.kind_token(),
        "classes": _join_classes(bundle.classes),
    })
    with open(path, "w", encoding="utf-8") as fh:
        fh.write(header + "\n")
        for uid, rows in bundle.rows.items():
            if bundle.kind == KIND_SINGLE:
                fh.write(uid + "\t" + "\t".join(FLOAT_FMT % p for p in rows[0]) + "\n")
            else:
                for t in range(bundle.passes):
                    fh.write(f"{uid}\t{t}\t" + "\t".join(FLOAT_FMT % p for p in rows[t]) + "\n")


def _parse_kind(token: str, path) -> tuple[str, int]:
    if token == KIND_SINGLE:
        return KIND_SINGLE, 1
    kind, _, count = token.partition(":")
    if kind in (KIND_REPEATED, KIND_EPOCHS) and count.isdigit() and int(count) >= 1:
        return kind, int(count)
    raise DataError(f"{path}: unknown bundle kind {token!r}")


def read_predictions(path, corpus: Corpus) -> PredictionBundle:
    """Read and validate a bundle against its corpus.

    Row sums may stray from 1 by at most ROW_SUM_TOL and are renormalized;
    anything worse is rejected. The uid set must match the corpus exactly,
    with a complete set of pass indices per uid for multi-pass kinds.
    """
    lines = _read_lines(path)
    if not lines or not lines[0].strip():
        raise DataError(f"{path}: empty bundle file")
    fields = _parse_header(lines[0], "#aed-pred", path)
    for required in ("model", "kind", "classes"):
        if required not in fields:
            raise DataError(f"{path}: header lacks {required}=")
    kind, passes = _parse_kind(fields["kind"], path)
    classes = tuple(fields["classes"].split(","))
    if classes != corpus.classes:
        raise DataError(
            f"{path}: bundle classes {list(classes)} do not match corpus classes {list(corpus.classes)}"
        )
    n_cols = len(classes)

    rows: dict[str, np.ndarray] = {}
    seen: dict[str, set[int]] = {}
    for lineno, line in enumerate(lines[1:], start=2):
        if not line.strip():
            continue
        cols = line.split("\t")
        expected = 1 + n_cols if kind == KIND_SINGLE else 2 + n_cols
        if len(cols) != expected:
            raise DataError(f"{path}:{lineno}: expected {expected} columns, got {len(cols)}")
        uid = cols[0]
        if kind == KIND_SINGLE:
            t = 0
        else:
            if not cols[1].isdigit():
                raise DataError(f"{path}:{lineno}: pass index {cols[1]!r} is not an integer")
            t = int(cols[1])
            if t >= passes:
                raise DataError(f"{path}:{lineno}: pass index {t} out of range for {fields['kind']}")
        try:
            probs = np.array([float(c) for c in cols[-n_cols:]], dtype=float)
        except ValueError:
            raise DataError(f"{path}:{lineno}: non-numeric probability") from None
        if not np.all(np.isfinite(probs)) or np.any(probs < 0):
            raise DataError(f"{path}:{lineno}: unit {uid}: probabilities must be finite and non-negative")
        total = probs.sum()
        if not math.isclose(total, 1.0, rel_tol=0.0, abs_tol=ROW_SUM_TOL):
            raise DataError(f"{path}:{lineno}: unit {uid}: row sums to {total:.7f}, not 1")
        if uid not in rows:
            rows[uid] = np.zeros((passes, n_cols))
            seen[uid] = set()
        if t in seen[uid]:
            raise DataError(f"{path}:{lineno}: duplicate row for unit {uid} pass {t}")
        seen[uid].add(t)
        rows[uid][t] = probs / total

    unit_uids = [u.uid for u in extract_units(corpus)]
    _check_cover(set(rows), set(unit_uids), path, "bundle")
    for uid, got in seen.items():
        if len(got) != passes:
            raise DataError(f"{path}: unit {uid} has {len(got)} of {passes} passes")
    return PredictionBundle(model=fields["model"], kind=kind, passes=passes,
                            classes=classes, rows=rows)


def _check_cover(got: set[str], want: set[str], path, what: str) -> None:
    missing = want - got
    extra = got - want
    if missing:
        raise DataError(f"{path}: {what} lacks {len(missing)} corpus units (e.g. {sorted(missing)[:3]})")
    if extra:
        raise DataError(f"{path}: {what} has {len(extra)} unknown units (e.g. {sorted(extra)[:3]})")


# ---------------------------------------------------------------------------
# embeddings
# ---------------------------------------------------------------------------


def write_embeddings(emb: EmbeddingSet, path) -> None:
    header = _format_header("#aed-emb", {"name": emb.name, "dim": str(emb.dim)})
    with open(path, "w", encoding="utf-8") as fh:
        fh.write(header + "\n")
        for uid, vec in emb.vectors.items():
            fh.write(uid + "\t" + "\t".join(FLOAT_FMT % x for x in vec) + "\n")


def read_embeddings(path, corpus: Corpus) -> EmbeddingSet:
    lines = _read_lines(path)
    if not lines or not lines[0].strip():
        raise DataError(f"{path}: empty embeddings file")
    fields = _parse_header(lines[0], "#aed-emb", path)
    if "name" not in fields or "dim" not in fields:
        raise DataError(f"{path}: header lacks name= or dim=")
    if not fields["dim"].isdigit() or int(fields["dim"]) < 1:
        raise DataError(f"{path}: bad dim {fields['dim']!r}")
    dim = int(fields["dim"])

    vectors: dict[str, np.ndarray] = {}
    for lineno, line in enumerate(lines[1:], start=2):
        if not line.strip():
            continue
        cols = line.split("\t")
        if len(cols) != 1 + dim:
            raise DataError(f"{path}:{lineno}: expected {1 + dim} columns, got {len(cols)}")
        uid = cols[0]
        if uid in vectors:
            raise DataError(f"{path}:{lineno}: duplicate vector for unit {uid}")
        try:
            vec = np.array([float(c) for c in cols[1:]], dtype=float)
        except ValueError:
            raise DataError(f"{path}:{lineno}: non-numeric component") from None
        if not np.all(np.isfinite(vec)):
            raise DataError(f"{path}:{lineno}: unit {uid}: vector has non-finite components")
        vectors[uid] = vec

    unit_uids = {u.uid for u in extract_units(corpus)}
    _check_cover(set(vectors), unit_uids, path, "embedding set")
    return EmbeddingSet(name=fields["name"], dim=dim, vectors=vectors)


# ---------------------------------------------------------------------------
# folds
# ---------------------------------------------------------------------------


def write_folds(folds: FoldAssignment, corpus: Corpus, path) -> None:
    header = _format_header("#aed-folds", {
        "k": str(folds.k),
        "seed": str(folds.seed),
        "corpus": corpus_digest(corpus),
    })
    with open(path, "w", encoding="utf-8") as fh:
        fh.write(header + "\n")
        for doc in corpus.documents:
            fh.write(f"{doc.id}\t{folds.fold_of[doc.id]}\n")


def read_folds(path, corpus: Corpus) -> FoldAssignment:
    lines = _read_lines(path)
    if not lines or not lines[0].strip():
        raise DataError(f"{path}: empty fold file")
    fields = _parse_header(lines[0], "#aed-folds", path)
    for required in ("k", "seed", "corpus"):
        if required not in fields:
            raise DataError(f"{path}: header lacks {required}=")
    if fields["corpus"] != corpus_digest(corpus):
        raise DataError(f"{path}: fold file was built for a different corpus")
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
    doc_ids = {doc.id for doc in corpus.documents}
    _check_cover(set(fold_of), doc_ids, path, "fold file")
    return FoldAssignment(k=k, seed=int(fields["seed"]), fold_of=fold_of)


# ---------------------------------------------------------------------------
# detector output
# ---------------------------------------------------------------------------


def write_flags(flags: FlagVector, path) -> None:
    header = _format_header("#aed-flags", {"method": flags.method})
    with open(path, "w", encoding="utf-8") as fh:
        fh.write(header + "\n")
        for uid, value in flags.flags.items():
            fh.write(f"{uid}\t{int(value)}\n")


def read_flags(path, corpus: Corpus) -> FlagVector:
    lines = _read_lines(path)
    if not lines or not lines[0].strip():
        raise DataError(f"{path}: empty flag file")
    fields = _parse_header(lines[0], "#aed-flags", path)
    if "method" not in fields:
        raise DataError(f"{path}: header lacks method=")
    flags: dict[str, bool] = {}
    for lineno, line in enumerate(lines[1:], start=2):
        if not line.strip():
            continue
        cols = line.split("\t")
        if len(cols) != 2 or cols[1] not in ("0", "1"):
            raise DataError(f"{path}:{lineno}: expected uid<TAB>0|1")
        if cols[0] in flags:
            raise DataError(f"{path}:{lineno}: duplicate unit {cols[0]}")
        flags[cols[0]] = cols[1] == "1"
    _check_cover(set(flags), {u.uid for u in extract_units(corpus)}, path, "flag file")
    return FlagVector(method=fields["method"], flags=flags)


def write_scores(scores: ScoreVector, path) -> None:
    header = _format_header("#aed-scores", {
        "method": scores.method,
        "polarity": scores.polarity.value,
    })
    with open(path, "w", encoding="utf-8") as fh:
        fh.write(header + "\n")
        for uid, value in scores.scores.items():
            fh.write(f"{uid}\t{FLOAT_FMT % value}\n")


def read_scores(path, corpus: Corpus) -> ScoreVector:
    lines = _read_lines(path)
    if not lines or not lines[0].strip():
        raise DataError(f"{path}: empty score file")
    fields = _parse_header(lines[0], "#aed-scores", path)
    if "method" not in fields or "polarity" not in fields:
        raise DataError(f"{path}: header lacks method= or polarity=")
    try:
        polarity = Polarity(fields["polarity"])
    except ValueError:
        raise DataError(f"{path}: unknown polarity {fields['polarity']!r}") from None
    scores: dict[str, float] = {}
    for lineno, line in enumerate(lines[1:], start=2):
        if not line.strip():
            continue
        cols = line.split("\t")
        if len(cols) != 2:
            raise DataError(f"{path}:{lineno}: expected uid<TAB>score")
        if cols[0] in scores:
            raise DataError(f"{path}:{lineno}: duplicate unit {cols[0]}")
        try:
            value = float(cols[1])
        except ValueError:
            raise DataError(f"{path}:{lineno}: non-numeric score") from None
        if not math.isfinite(value):
            raise DataError(f"{path}:{lineno}: unit {cols[0]}: score is not finite")
        scores[cols[0]] = value
    _check_cover(set(scores), {u.uid for u in extract_units(corpus)}, path, "score file")
    return ScoreVector(method=fields["method"], scores=scores, polarity=polarity)

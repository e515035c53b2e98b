"""Hashed sparse features for the built-in baseline families.

Three text families (word bag, character n-grams, tf-idf weighted words) and
three per-token families (context window, suffix shape, character n-grams).
Feature strings are hashed into a fixed-width space with a keyed stable hash,
so vectors are reproducible across processes regardless of PYTHONHASHSEED.
"""

from __future__ import annotations

import hashlib
import re
from dataclasses import dataclass

import numpy as np
from scipy import sparse

from ..corpus import ConfigError, Corpus, Task

WORD_RE = re.compile(r"[a-z0-9']+")

TEXT_FAMILIES = ("lr_bow", "lr_char", "lr_tfidf")
TOKEN_FAMILIES = ("maxent_window", "maxent_suffix", "maxent_char")
ALL_FAMILIES = TEXT_FAMILIES + TOKEN_FAMILIES

MIN_HASH_BITS = 12
MAX_HASH_BITS = 24


def check_family(family: str, task: Task) -> None:
    if family not in ALL_FAMILIES:
        raise ConfigError(f"unknown model family {family!r}; choose from {ALL_FAMILIES}")
    if task is Task.TEXT and family not in TEXT_FAMILIES:
        raise ConfigError(f"family {family!r} labels tokens; a text corpus needs one of {TEXT_FAMILIES}")
    if task is not Task.TEXT and family not in TOKEN_FAMILIES:
        raise ConfigError(f"family {family!r} labels texts; this corpus needs one of {TOKEN_FAMILIES}")


def stable_hash(feature: str, bits: int) -> int:
    digest = hashlib.blake2b(feature.encode("utf-8"), digest_size=8).digest()
    return int.from_bytes(digest, "little") & ((1 << bits) - 1)


# ---------------------------------------------------------------------------
# per-family feature extraction
# ---------------------------------------------------------------------------


def text_features(text: str, family: str) -> dict[str, float]:
    counts: dict[str, float] = {}
    lowered = text.lower()
    if family in ("lr_bow", "lr_tfidf"):
        for tok in WORD_RE.findall(lowered):
            key = "w=" + tok
            counts[key] = counts.get(key, 0.0) + 1.0
    else:
        for n in (3, 4, 5):
            for i in range(len(lowered) - n + 1):
                key = "c=" + lowered[i:i + n]
                counts[key] = counts.get(key, 0.0) + 1.0
    counts["<bias>"] = 1.0
    return counts


def token_features(tokens: tuple[str, ...], i: int, family: str) -> dict[str, float]:
    lc = tokens[i].lower()
    counts: dict[str, float] = {"<bias>": 1.0}

    def put(key: str) -> None:
        counts[key] = counts.get(key, 0.0) + 1.0

    if family == "maxent_window":
        put("w0=" + lc)
        put("wm1=" + (tokens[i - 1].lower() if i >= 1 else "<s>"))
        put("wm2=" + (tokens[i - 2].lower() if i >= 2 else "<s>"))
        put("wp1=" + (tokens[i + 1].lower() if i + 1 < len(tokens) else "</s>"))
        put("wp2=" + (tokens[i + 2].lower() if i + 2 < len(tokens) else "</s>"))
        put("pre=" + lc[:3])
        put("suf=" + lc[-3:])
    elif family == "maxent_suffix":
        put("w0=" + lc)
        for n in (1, 2, 3, 4):
            put(f"s{n}=" + lc[-n:])
        raw = tokens[i]
        if raw.istitle():
            put("shape=title")
        if raw.isupper():
            put("shape=upper")
        if raw.isdigit():
            put("shape=digit")
    else:  # maxent_char
        padded = f"^{lc}$"
        for n in (2, 3, 4):
            for j in range(max(1, len(padded) - n + 1)):
                put("c=" + padded[j:j + n])
        put(f"len={min(len(lc), 8)}")
    return counts


# ---------------------------------------------------------------------------
# corpus-level assembly
# ---------------------------------------------------------------------------


@dataclass
class Featurized:
    """Sparse design matrix plus the bookkeeping to find a unit's rows.

    Text corpora get one row per unit, in unit order. Token and span corpora
    get one row per token; ``doc_rows`` maps a document id to its [start,
    stop) row range, in document token order.
    """

    X: sparse.csr_matrix
    needs_idf: bool
    doc_rows: dict[str, tuple[int, int]]

    def rows_for_doc(self, doc_id: str) -> np.ndarray:
        start, stop = self.doc_rows[doc_id]
        return np.arange(start, stop)


def featurize(corpus: Corpus, family: str, hash_bits: int) -> Featurized:
    check_family(family, corpus.task)
    if not (MIN_HASH_BITS <= hash_bits <= MAX_HASH_BITS):
        raise ConfigError(f"hash_bits {hash_bits} outside [{MIN_HASH_BITS}, {MAX_HASH_BITS}]")
    dim = 1 << hash_bits
    data: list[float] = []
    indices: list[int] = []
    indptr: list[int] = [0]
    doc_rows: dict[str, tuple[int, int]] = {}
    row = 0

    def push(counts: dict[str, float]) -> None:
        nonlocal row
        for key, value in counts.items():
            indices.append(stable_hash(key, hash_bits))
            data.append(value)
        indptr.append(len(data))
        row += 1

    for doc in corpus.documents:
        start = row
        if corpus.task is Task.TEXT:
            push(text_features(doc.text, family))
        else:
            for i in range(len(doc.tokens)):
                push(token_features(doc.tokens, i, family))
        doc_rows[doc.id] = (start, row)

    X = sparse.csr_matrix(
        (np.array(data), np.array(indices, dtype=np.int64), np.array(indptr, dtype=np.int64)),
        shape=(row, dim),
    )
    X.sum_duplicates()
    needs_idf = family == "lr_tfidf"
    if not needs_idf:
        X = _l2_normalize(X)
    return Featurized(X=X, needs_idf=needs_idf, doc_rows=doc_rows)


def _l2_normalize(X: sparse.csr_matrix) -> sparse.csr_matrix:
    norms = np.sqrt(np.asarray(X.multiply(X).sum(axis=1)).ravel())
    norms[norms == 0.0] = 1.0
    inv = sparse.diags(1.0 / norms)
    return (inv @ X).tocsr()


def apply_idf(X_all: sparse.csr_matrix, train_rows: np.ndarray) -> sparse.csr_matrix:
    """Weight counts by idf fitted on the training rows, then length-normalize.

    Fitting on the training rows only keeps held-out documents from leaking
    corpus statistics into the model that scores them.
    """
    X_train = X_all[train_rows]
    df = np.asarray((X_train > 0).sum(axis=0)).ravel()
    n = X_train.shape[0]
    idf = np.log((1.0 + n) / (1.0 + df)) + 1.0
    return _l2_normalize((X_all @ sparse.diags(idf)).tocsr())

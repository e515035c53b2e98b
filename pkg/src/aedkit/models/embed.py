"""Built-in unit embeddings and the projected logistic-regression ensemble.

The embedder is deliberately cheap: TF-IDF weights over a small context bag
per unit, pushed through a seeded random projection so every corpus lands in
the same fixed dimension. Externally computed vectors enter through the io
module instead and these functions never assume which source they came from.
"""

from __future__ import annotations

import numpy as np

from ..corpus import ConfigError, Corpus, DataError, FoldAssignment, Task, extract_units
from ..formats import EmbeddingSet, KIND_SINGLE, PredictionBundle
from .features import WORD_RE, stable_hash
from .linear import SGDClassifier

EMBED_DIM = 256
EMBED_NAME = "tfidf-proj-256"
NULL_FEATURE = "<null>"

ENSEMBLE_SIZE = 17
PROJ_DIM = 64


# ---------------------------------------------------------------------------
# built-in embedder
# ---------------------------------------------------------------------------


def _unit_bags(corpus: Corpus) -> tuple[list[str], list[dict[str, float]]]:
    """Context bag per unit: the text's words, a token window, or span±1."""
    units = extract_units(corpus)
    docs = {d.id: d for d in corpus.documents}
    uids: list[str] = []
    bags: list[dict[str, float]] = []
    for unit in units:
        doc = docs[unit.doc_id]
        bag: dict[str, float] = {NULL_FEATURE: 1.0}
        if corpus.task is Task.TEXT:
            for tok in WORD_RE.findall(doc.text.lower()):
                bag[tok] = bag.get(tok, 0.0) + 1.0
        elif corpus.task is Task.TOKEN:
            i = unit.position[0]
            bag["c=" + doc.tokens[i].lower()] = 1.0
            for off in (-2, -1, 1, 2):
                j = i + off
                if 0 <= j < len(doc.tokens):
                    tok = doc.tokens[j].lower()
                    bag[tok] = bag.get(tok, 0.0) + 1.0
        else:
            lo, hi = unit.position
            for j in range(lo, hi):
                tok = doc.tokens[j].lower()
                bag["c=" + tok] = bag.get("c=" + tok, 0.0) + 1.0
            for j in (lo - 1, hi):
                if 0 <= j < len(doc.tokens):
                    tok = doc.tokens[j].lower()
                    bag[tok] = bag.get(tok, 0.0) + 1.0
        uids.append(unit.uid)
        bags.append(bag)
    return uids, bags


def builtin_embed(corpus: Corpus, seed: int = 0, dim: int = EMBED_DIM) -> EmbeddingSet:
    """Deterministic TF-IDF unit vectors projected to a fixed dimension.

    Each distinct feature owns a cached Gaussian direction seeded from its
    hash, so two corpora sharing vocabulary share directions. The constant
    null feature keeps empty contexts away from the zero vector.
    """
    uids, bags = _unit_bags(corpus)
    n = len(bags)

    df: dict[str, int] = {}
    for bag in bags:
        for f in bag:
            df[f] = df.get(f, 0) + 1

    directions: dict[str, np.ndarray] = {}

    def direction(f: str) -> np.ndarray:
        vec = directions.get(f)
        if vec is None:
            rng = np.random.default_rng((seed, stable_hash(f, 64)))
            vec = rng.standard_normal(dim) / np.sqrt(dim)
            directions[f] = vec
        return vec

    vectors: dict[str, np.ndarray] = {}
    for uid, bag in zip(uids, bags):
        out = np.zeros(dim)
        for f, tf in bag.items():
            idf = np.log((1.0 + n) / (1.0 + df[f])) + 1.0
            out += tf * idf * direction(f)
        norm = np.linalg.norm(out)
        if norm > 0:
            out = out / norm
        vectors[uid] = out
    return EmbeddingSet(name=EMBED_NAME, dim=dim, vectors=vectors)


# ---------------------------------------------------------------------------
# projected logistic-regression ensemble
# ---------------------------------------------------------------------------


def gaussian_projection_ensemble(corpus: Corpus, embeddings: EmbeddingSet,
                                 folds: FoldAssignment, n_members: int = ENSEMBLE_SIZE,
                                 d_proj: int = PROJ_DIM, seed: int = 0,
                                 epochs: int = 10, lr: float = 0.5, l2: float = 1e-4,
                                 ) -> list[PredictionBundle]:
    """One logistic regression per random projection of the embeddings.

    Members differ only in their projection matrix, which is enough spread
    for majority voting downstream. Training follows the usual held-out-fold
    protocol so no member predicts a document it trained on.
    """
    if n_members < 1:
        raise ConfigError(f"ensemble needs at least 1 member, got {n_members}")
    if d_proj < 1 or d_proj > embeddings.dim:
        raise ConfigError(
            f"projection dimension {d_proj} outside [1, {embeddings.dim}]"
        )
    units = extract_units(corpus)
    missing = [u.uid for u in units if u.uid not in embeddings.vectors]
    if missing:
        raise DataError(f"embeddings missing {len(missing)} units, first {missing[0]!r}")

    E = np.stack([embeddings.vectors[u.uid] for u in units])
    class_idx = {c: i for i, c in enumerate(corpus.classes)}
    y = np.array([class_idx[u.label] for u in units], dtype=np.int64)
    fold_rows = {
        f: np.array([i for i, u in enumerate(units) if folds.fold_of[u.doc_id] == f])
        for f in range(folds.k)
    }

    bundles = []
    for j in range(n_members):
        rng = np.random.default_rng((seed, j))
        P = rng.standard_normal((embeddings.dim, d_proj)) / np.sqrt(d_proj)
        Z = E @ P
        rows = np.zeros((len(units), len(corpus.classes)))
        for fold in range(folds.k):
            hold = fold_rows[fold]
            train = np.array([i for i in range(len(units))
                              if folds.fold_of[units[i].doc_id] != fold])
            model = SGDClassifier(dim=d_proj, n_classes=len(corpus.classes),
                                  lr=lr, l2=l2, seed=(seed ^ fold) + j)
            model.fit(Z, y, train, epochs)
            if len(hold):
                rows[hold] = model.predict_proba(Z[hold])
        bundles.append(PredictionBundle(
            model=f"proj-lr-{j}", kind=KIND_SINGLE, passes=1, classes=corpus.classes,
            rows={u.uid: rows[i][None, :] for i, u in enumerate(units)},
        ))
    return bundles

"""Scorers: graded suspicion per unit, each with an explicit polarity.

Model-based scorers read prediction bundles, surface-form scorers read only
the corpus, distance scorers read embeddings, and the training-dynamics pair
reads traces. Borda sits on top and fuses any of them.
"""

from __future__ import annotations

import numpy as np

from ..corpus import ConfigError, Corpus, DataError, Task, documents_by_id, extract_units
from ..formats import EmbeddingSet, KIND_EPOCHS, KIND_REPEATED, PredictionBundle
from ..models.training import EpochTraces
from ..vectors import Polarity, ScoreVector
from .flaggers import check_cover

KNN_K = 10
BORDA_TOP = 3


# ---------------------------------------------------------------------------
# model-probability scorers
# ---------------------------------------------------------------------------


def classification_uncertainty(corpus: Corpus, bundle: PredictionBundle) -> ScoreVector:
    """1 - p(observed label): high when the model doubts the annotation."""
    units = check_cover(corpus, bundle)
    class_idx = corpus.class_index()
    probs = bundle.single_matrix([u.uid for u in units])
    scores = {
        u.uid: float(1.0 - probs[i, class_idx[u.label]]) for i, u in enumerate(units)
    }
    return ScoreVector(method="classification_uncertainty", scores=scores,
                       polarity=Polarity.HIGH)


def prediction_margin(corpus: Corpus, bundle: PredictionBundle) -> ScoreVector:
    """Gap between the two best classes; a small gap means an unsure model."""
    units = check_cover(corpus, bundle)
    probs = bundle.single_matrix([u.uid for u in units])
    if probs.shape[1] < 2:
        scores = {u.uid: 1.0 for u in units}
    else:
        part = np.sort(probs, axis=1)
        margin = part[:, -1] - part[:, -2]
        scores = {u.uid: float(margin[i]) for i, u in enumerate(units)}
    return ScoreVector(method="prediction_margin", scores=scores,
                       polarity=Polarity.LOW)


def dropout_uncertainty(corpus: Corpus, bundle: PredictionBundle) -> ScoreVector:
    """Mean entropy over stochastic passes."""
    if bundle.kind != KIND_REPEATED:
        raise DataError(f"dropout uncertainty expects repeated passes, got {bundle.kind!r}")
    units = check_cover(corpus, bundle)
    scores = {}
    for u in units:
        rows = bundle.rows[u.uid]
        ent = -(rows * np.log(np.clip(rows, 1e-12, None))).sum(axis=1)
        scores[u.uid] = float(ent.mean())
    return ScoreVector(method="dropout_uncertainty", scores=scores,
                       polarity=Polarity.HIGH)


def datamap_confidence(corpus: Corpus, bundle: PredictionBundle) -> ScoreVector:
    """Mean p(observed label) across training epochs; confident units score high."""
    if corpus.task is not Task.TEXT:
        raise ConfigError("datamap confidence applies to text classification only")
    if bundle.kind != KIND_EPOCHS:
        raise DataError(f"datamap confidence expects per-epoch rows, got {bundle.kind!r}")
    units = check_cover(corpus, bundle)
    class_idx = corpus.class_index()
    scores = {
        u.uid: float(bundle.rows[u.uid][:, class_idx[u.label]].mean()) for u in units
    }
    return ScoreVector(method="datamap_confidence", scores=scores,
                       polarity=Polarity.LOW)


# ---------------------------------------------------------------------------
# training-dynamics scorers
# ---------------------------------------------------------------------------


def curriculum_spotter(corpus: Corpus, traces: EpochTraces) -> ScoreVector:
    """Mean loss over the epochs a unit actually trained in."""
    if traces.schedule != "curriculum":
        raise DataError(f"curriculum spotter needs curriculum traces, got {traces.schedule!r}")
    units = extract_units(corpus)
    scores = {}
    for u in units:
        trace = traces.losses.get(u.uid)
        if trace is None:
            raise DataError(f"traces missing unit {u.uid!r}")
        live = trace[~np.isnan(trace)]
        if len(live) == 0:
            raise DataError(f"unit {u.uid!r} was never included in training")
        scores[u.uid] = float(live.mean())
    return ScoreVector(method="curriculum_spotter", scores=scores,
                       polarity=Polarity.HIGH)


def leitner_spotter(corpus: Corpus, traces: EpochTraces) -> ScoreVector:
    """Fraction of epochs spent in the relearning deck."""
    if traces.schedule != "leitner":
        raise DataError(f"leitner spotter needs leitner traces, got {traces.schedule!r}")
    units = extract_units(corpus)
    scores = {}
    for u in units:
        decks = traces.decks.get(u.uid) if traces.decks else None
        if decks is None:
            raise DataError(f"traces missing unit {u.uid!r}")
        scores[u.uid] = float((decks == 0).mean())
    return ScoreVector(method="leitner_spotter", scores=scores,
                       polarity=Polarity.HIGH)


# ---------------------------------------------------------------------------
# surface-form scorers
# ---------------------------------------------------------------------------


def _surface_form(corpus: Corpus, unit, docs) -> str:
    doc = docs[unit.doc_id]
    lo, hi = unit.position
    return " ".join(t.lower() for t in doc.tokens[lo:hi])


def _surface_stats(corpus: Corpus):
    if corpus.task is Task.TEXT:
        raise ConfigError("surface-form scorers need token or span units")
    units = extract_units(corpus)
    docs = documents_by_id(corpus)
    counts: dict[str, dict[str, int]] = {}
    forms = {}
    for u in units:
        form = _surface_form(corpus, u, docs)
        forms[u.uid] = form
        by_label = counts.setdefault(form, {})
        by_label[u.label] = by_label.get(u.label, 0) + 1
    return units, forms, counts


def _is_unique_modal(by_label: dict[str, int], label: str) -> bool:
    top = max(by_label.values())
    winners = [lab for lab, c in by_label.items() if c == top]
    return len(winners) == 1 and winners[0] == label


def label_entropy(corpus: Corpus) -> ScoreVector:
    """Entropy of the label histogram for the unit's surface form.

    A unit carrying the unique majority label for its form is exempt and
    scores 0; everything else inherits the form's entropy.
    """
    units, forms, counts = _surface_stats(corpus)
    scores = {}
    for u in units:
        by_label = counts[forms[u.uid]]
        if len(by_label) < 2 or _is_unique_modal(by_label, u.label):
            scores[u.uid] = 0.0
            continue
        c = np.array(list(by_label.values()), dtype=float)
        p = c / c.sum()
        scores[u.uid] = float(-(p * np.log(p)).sum())
    return ScoreVector(method="label_entropy", scores=scores, polarity=Polarity.HIGH)


def weighted_discrepancy(corpus: Corpus) -> ScoreVector:
    """Spread between the most and least frequent label of the surface form."""
    units, forms, counts = _surface_stats(corpus)
    scores = {}
    for u in units:
        by_label = counts[forms[u.uid]]
        if len(by_label) < 2 or _is_unique_modal(by_label, u.label):
            scores[u.uid] = 0.0
            continue
        c = np.array(list(by_label.values()), dtype=float)
        scores[u.uid] = float((c.max() - c.min()) / c.sum())
    return ScoreVector(method="weighted_discrepancy", scores=scores,
                       polarity=Polarity.HIGH)


# ---------------------------------------------------------------------------
# embedding-distance scorers
# ---------------------------------------------------------------------------


def _embedding_matrix(corpus: Corpus, embeddings: EmbeddingSet):
    units = extract_units(corpus)
    missing = [u.uid for u in units if u.uid not in embeddings.vectors]
    if missing:
        raise DataError(
            f"embeddings missing {len(missing)} units, first {missing[0]!r}"
        )
    return units, embeddings.matrix([u.uid for u in units])


def mean_distance(corpus: Corpus, embeddings: EmbeddingSet) -> ScoreVector:
    """Euclidean distance to the centroid of the unit's own labeled class."""
    units, X = _embedding_matrix(corpus, embeddings)
    labels = np.array([u.label for u in units])
    centroids = {lab: X[labels == lab].mean(axis=0) for lab in set(labels)}
    scores = {
        u.uid: float(np.linalg.norm(X[i] - centroids[u.label]))
        for i, u in enumerate(units)
    }
    return ScoreVector(method="mean_distance", scores=scores, polarity=Polarity.HIGH)


def knn_entropy(corpus: Corpus, embeddings: EmbeddingSet, k: int = KNN_K) -> ScoreVector:
    """Entropy of the softmax-weighted label distribution of the k neighbors."""
    if k < 1:
        raise ConfigError(f"k must be positive, got {k}")
    units, X = _embedding_matrix(corpus, embeddings)
    n = len(units)
    labels = np.array([u.label for u in units])
    classes = sorted(set(labels))
    lab_idx = np.array([classes.index(l) for l in labels])
    # tie-break neighbors at equal distance by uid
    uid_rank = np.empty(n, dtype=np.int64)
    uid_rank[np.array(sorted(range(n), key=lambda j: units[j].uid))] = np.arange(n)
    scores = {}
    k_eff = min(k, n - 1)
    for i, u in enumerate(units):
        if k_eff == 0:
            scores[u.uid] = 0.0
            continue
        d = np.linalg.norm(X - X[i], axis=1)
        d[i] = np.inf
        order = np.lexsort((uid_rank, d))[:k_eff]
        w = np.exp(-(d[order] - d[order].min()))
        w = w / w.sum()
        q = np.bincount(lab_idx[order], weights=w, minlength=len(classes))
        live = q[q > 0]
        scores[u.uid] = float(-(live * np.log(live)).sum())
    return ScoreVector(method="knn_entropy", scores=scores, polarity=Polarity.HIGH)


# ---------------------------------------------------------------------------
# rank fusion
# ---------------------------------------------------------------------------


def borda_count(scorers: list[ScoreVector], n_top: int = BORDA_TOP) -> ScoreVector:
    """Sum rank points over the first n_top scorers of the list.

    Each scorer orders units most-suspicious-first; rank r earns N - r + 1
    points and tied units share the mean of the points they span.
    """
    if not scorers:
        raise DataError("borda count needs at least one scorer")
    members = scorers[:n_top]
    # keep the first member's row order so output bytes are reproducible
    uids = list(members[0].scores)
    cover = set(uids)
    for sv in members[1:]:
        if set(sv.scores) != cover:
            raise DataError(
                f"scorer {sv.method!r} covers a different unit set than "
                f"{members[0].method!r}"
            )
    N = len(uids)
    totals = {uid: 0.0 for uid in uids}
    for sv in members:
        susp = {uid: sv.suspicion(uid) for uid in uids}
        ordered = sorted(uids, key=lambda uid: (-susp[uid], uid))
        i = 0
        while i < N:
            j = i
            while j + 1 < N and susp[ordered[j + 1]] == susp[ordered[i]]:
                j += 1
            # ranks i+1 .. j+1 share points (N-i) .. (N-j)
            share = (2 * N - i - j) / 2.0
            for uid in ordered[i:j + 1]:
                totals[uid] += share
            i = j + 1
    return ScoreVector(method="borda_count", scores=totals, polarity=Polarity.HIGH)

"""Label aggregation over repeated predictions, Dawid-Skene style.

Each stochastic pass acts as one annotator; EM jointly estimates class
priors, per-annotator confusion matrices, and a posterior true label per
unit. Units whose consensus label disagrees with the observed one get
flagged.
"""

from __future__ import annotations

import numpy as np

from ..corpus import Corpus, DataError
from ..formats import KIND_REPEATED, PredictionBundle
from ..vectors import FlagVector
from .flaggers import check_cover

MAX_ITERS = 100
TOL = 1e-6
SMOOTH = 1e-8


def aggregate_repeated_labels(votes: np.ndarray, n_classes: int) -> np.ndarray:
    """Dawid-Skene EM over a (units, annotators) vote matrix of class indices.

    Initialization is the per-unit vote share, which equals a soft majority
    vote. Returns the posterior over true classes per unit.
    """
    n, T = votes.shape
    post = np.zeros((n, n_classes))
    for t in range(T):
        post[np.arange(n), votes[:, t]] += 1.0
    post /= T

    prev_ll = -np.inf
    for _ in range(MAX_ITERS):
        prior = post.mean(axis=0)
        prior = np.clip(prior, SMOOTH, None)
        prior /= prior.sum()
        # confusion[t, true, observed]
        confusion = np.full((T, n_classes, n_classes), SMOOTH)
        for t in range(T):
            for j in range(n_classes):
                mask = votes[:, t] == j
                if mask.any():
                    confusion[t, :, j] += post[mask].sum(axis=0)
        confusion /= confusion.sum(axis=2, keepdims=True)

        log_like = np.tile(np.log(prior), (n, 1))
        for t in range(T):
            log_like += np.log(confusion[t, :, votes[:, t]])
        shift = log_like.max(axis=1, keepdims=True)
        post = np.exp(log_like - shift)
        post /= post.sum(axis=1, keepdims=True)

        ll = float((shift[:, 0] + np.log(np.exp(log_like - shift).sum(axis=1))).sum())
        if abs(ll - prev_ll) < TOL:
            break
        prev_ll = ll
    return post


def label_aggregation(corpus: Corpus, bundle: PredictionBundle) -> FlagVector:
    """Flag units whose aggregated label across passes is not the observed one."""
    if bundle.kind != KIND_REPEATED or bundle.passes < 2:
        raise DataError(
            f"label aggregation needs repeated passes (>= 2), got "
            f"{bundle.kind_token()}"
        )
    units = check_cover(corpus, bundle)
    class_idx = corpus.class_index()
    C = len(corpus.classes)
    votes = np.stack([bundle.rows[u.uid].argmax(axis=1) for u in units])
    post = aggregate_repeated_labels(votes, C)
    flags = {}
    for i, unit in enumerate(units):
        consensus = int(post[i].argmax())       # ties fall to the lower index
        flags[unit.uid] = consensus != class_idx[unit.label]
    return FlagVector(method="label_aggregation", flags=flags)

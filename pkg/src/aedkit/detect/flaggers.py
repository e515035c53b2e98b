"""Flaggers: binary error judgements per unit.

All of them compare some model-derived label against the observed one. They
share a cover check so a bundle predicted on a different corpus fails loudly
instead of silently misaligning.
"""

from __future__ import annotations

import numpy as np

from ..corpus import Corpus, DataError, extract_units
from ..formats import PredictionBundle
from ..models.irt import IrtFit
from ..vectors import FlagVector


def check_cover(corpus: Corpus, bundle: PredictionBundle) -> list:
    units = extract_units(corpus)
    missing = [u.uid for u in units if u.uid not in bundle.rows]
    if missing:
        raise DataError(
            f"bundle {bundle.model!r} missing {len(missing)} corpus units, "
            f"first {missing[0]!r}"
        )
    if len(bundle.rows) != len(units):
        raise DataError(
            f"bundle {bundle.model!r} carries {len(bundle.rows)} rows for "
            f"{len(units)} corpus units"
        )
    if bundle.classes != corpus.classes:
        raise DataError(
            f"bundle classes {list(bundle.classes)} != corpus classes "
            f"{list(corpus.classes)}"
        )
    return units


def retag(corpus: Corpus, bundle: PredictionBundle) -> FlagVector:
    """Flag units whose predicted label disagrees with the observed one."""
    units = check_cover(corpus, bundle)
    class_idx = corpus.class_index()
    probs = bundle.single_matrix([u.uid for u in units])
    preds = probs.argmax(axis=1)
    flags = {u.uid: int(preds[i]) != class_idx[u.label] for i, u in enumerate(units)}
    return FlagVector(method="retag", flags=flags)


def confident_learning(corpus: Corpus, bundle: PredictionBundle) -> FlagVector:
    """Threshold-based relabeling: flag units the confident joint moves off-diagonal.

    Per class j the threshold t_j is the mean probability of j over units
    observed as j. A unit's candidate classes are those whose probability
    meets their own threshold; the best candidate (highest probability,
    lower index on ties) becomes the presumed truth. No candidates means
    abstain: the unit stays unflagged.
    """
    units = check_cover(corpus, bundle)
    class_idx = corpus.class_index()
    C = len(corpus.classes)
    probs = bundle.single_matrix([u.uid for u in units])
    labels = np.array([class_idx[u.label] for u in units])

    thresholds = np.full(C, np.inf)
    for j in range(C):
        mask = labels == j
        if mask.any():
            thresholds[j] = probs[mask, j].mean()

    flags = {}
    for i, unit in enumerate(units):
        candidates = np.flatnonzero(probs[i] >= thresholds)
        if len(candidates) == 0:
            flags[unit.uid] = False
            continue
        best = candidates[int(probs[i][candidates].argmax())]
        flags[unit.uid] = int(best) != int(labels[i])
    return FlagVector(method="confident_learning", flags=flags)


def _plurality_flags(corpus: Corpus, bundles: list[PredictionBundle],
                     method: str) -> FlagVector:
    units = None
    for bundle in bundles:
        units = check_cover(corpus, bundle)
    uids = [u.uid for u in units]
    class_idx = corpus.class_index()
    argmaxes = np.stack([b.single_matrix(uids).argmax(axis=1) for b in bundles])
    flags = {}
    for i, unit in enumerate(units):
        votes = np.bincount(argmaxes[:, i], minlength=len(corpus.classes))
        winners = np.flatnonzero(votes == votes.max())
        if len(winners) > 1:
            flags[unit.uid] = False      # plurality tie: stay conservative
        else:
            flags[unit.uid] = int(winners[0]) != class_idx[unit.label]
    return FlagVector(method=method, flags=flags)


def diverse_ensemble(corpus: Corpus, bundles: list[PredictionBundle]) -> FlagVector:
    """Plurality vote over argmaxes of architecturally distinct members."""
    if len(bundles) < 2:
        raise DataError(f"ensemble needs at least 2 members, got {len(bundles)}")
    return _plurality_flags(corpus, bundles, "diverse_ensemble")


def projection_ensemble(corpus: Corpus, bundles: list[PredictionBundle]) -> FlagVector:
    """Same vote, members being projected logistic regressions."""
    if len(bundles) < 2:
        raise DataError(f"ensemble needs at least 2 members, got {len(bundles)}")
    return _plurality_flags(corpus, bundles, "projection_ensemble")


def irt_flag(corpus: Corpus, fit: IrtFit) -> FlagVector:
    """Flag items with strictly negative discrimination."""
    units = extract_units(corpus)
    if len(fit.a) != len(units):
        raise DataError(
            f"IRT fit has {len(fit.a)} items for {len(units)} corpus units"
        )
    flags = {u.uid: bool(fit.a[i] < 0) for i, u in enumerate(units)}
    return FlagVector(method="irt", flags=flags)

"""Post-hoc probability calibration and its measurement.

A fitted calibrator is a full logistic map over log-probabilities, trained on
held-out predictions against the observed labels of the same fold and then
applied to exactly those rows. Calibrated bundles are new objects; detectors
that should see calibrated inputs are re-run on them, never patched in place.
"""

from __future__ import annotations

from dataclasses import dataclass

import numpy as np

from .corpus import Corpus, DataError, FoldAssignment, extract_units
from .formats import PredictionBundle
from .models.linear import softmax

LOG_EPS = 1e-12
FIT_ITERS = 500
FIT_LR = 0.1


@dataclass
class CalibratorParams:
    W: np.ndarray    # class x class
    b: np.ndarray    # class


def fit_calibrator(probs: np.ndarray, labels: np.ndarray,
                   n_iters: int = FIT_ITERS, lr: float = FIT_LR) -> CalibratorParams:
    """Fit p' = softmax(W log(p + eps) + b) by full-batch descent on NLL.

    Starts at the identity map, so an already calibrated input stays put.
    """
    probs = np.asarray(probs, dtype=float)
    labels = np.asarray(labels, dtype=np.int64)
    if probs.ndim != 2 or probs.shape[0] != labels.shape[0]:
        raise DataError(
            f"probs {probs.shape} and labels {labels.shape} do not line up"
        )
    n, C = probs.shape
    if len(np.unique(labels)) < 2:
        raise DataError("calibration needs at least two observed classes")

    X = np.log(probs + LOG_EPS)
    Y = np.zeros((n, C))
    Y[np.arange(n), labels] = 1.0
    W = np.eye(C)
    b = np.zeros(C)
    for _ in range(n_iters):
        Z = X @ W.T + b
        resid = (softmax(Z) - Y) / n
        W = W - lr * (resid.T @ X)
        b = b - lr * resid.sum(axis=0)
    return CalibratorParams(W=W, b=b)


def apply_calibrator(params: CalibratorParams, probs: np.ndarray) -> np.ndarray:
    probs = np.asarray(probs, dtype=float)
    return softmax(np.log(probs + LOG_EPS) @ params.W.T + params.b)


def expected_calibration_error(probs: np.ndarray, labels: np.ndarray,
                               bins: int = 10) -> float:
    """Binned gap between confidence and accuracy, weighted by bin mass."""
    probs = np.asarray(probs, dtype=float)
    labels = np.asarray(labels, dtype=np.int64)
    if bins < 1:
        raise DataError(f"need at least 1 bin, got {bins}")
    if probs.ndim != 2 or probs.shape[0] == 0:
        raise DataError("ECE needs a non-empty 2-d probability matrix")
    conf = probs.max(axis=1)
    correct = probs.argmax(axis=1) == labels
    which = np.minimum((conf * bins).astype(np.int64), bins - 1)
    n = len(conf)
    total = 0.0
    for k in range(bins):
        mask = which == k
        if not mask.any():
            continue
        total += (mask.sum() / n) * abs(correct[mask].mean() - conf[mask].mean())
    return float(total)


def calibrate_bundles(corpus: Corpus, folds: FoldAssignment,
                      fit_bundle: PredictionBundle,
                      bundles: list[PredictionBundle]) -> list[PredictionBundle]:
    """Per-fold calibration of one or more bundles.

    The calibrator for fold f is fit on ``fit_bundle``'s rows for the units
    of fold f (each predicted by the model that held that fold out) against
    their observed labels, then applied to every listed bundle's rows for
    those same units, all passes included.
    """
    if fit_bundle.passes != 1:
        raise DataError("calibration fits on a single-pass bundle")
    units = extract_units(corpus)
    class_idx = {c: i for i, c in enumerate(fit_bundle.classes)}
    by_fold: dict[int, list] = {f: [] for f in range(folds.k)}
    for unit in units:
        by_fold[folds.fold_of[unit.doc_id]].append(unit)

    calibrated = [
        {uid: rows.copy() for uid, rows in bundle.rows.items()} for bundle in bundles
    ]
    for f in range(folds.k):
        fold_units = by_fold[f]
        if not fold_units:
            continue
        fit_probs = np.stack([fit_bundle.rows[u.uid][0] for u in fold_units])
        fit_labels = np.array([class_idx[u.label] for u in fold_units])
        params = fit_calibrator(fit_probs, fit_labels)
        for bundle, rows in zip(bundles, calibrated):
            for u in fold_units:
                rows[u.uid] = apply_calibrator(params, bundle.rows[u.uid])
    return [
        PredictionBundle(model=f"{bundle.model}+cal", kind=bundle.kind,
                         passes=bundle.passes, classes=bundle.classes, rows=rows)
        for bundle, rows in zip(bundles, calibrated)
    ]

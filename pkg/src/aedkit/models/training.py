"""Training drivers that turn baseline models into prediction bundles.

Cross-validated prediction is the default route: every unit is scored by a model
that never saw its document. The in-sample variant exists for the ablation
story and trains one model on everything. Per-epoch recording powers the
training-dynamics scorers and supports three schedules (plain, curriculum,
spaced-repetition decks).
"""

from __future__ import annotations

from dataclasses import dataclass, field

import numpy as np

from ..corpus import (
    ConfigError,
    Corpus,
    DataError,
    FoldAssignment,
    NO_ENTITY,
    Task,
    extract_units,
)
from ..formats import KIND_EPOCHS, KIND_REPEATED, KIND_SINGLE, PredictionBundle
from ..span_align import span_label_distribution
from .features import Featurized, apply_idf, check_family, featurize
from .linear import SGDClassifier, dropout_rows

SCHEDULES = ("plain", "curriculum", "leitner")
N_DECKS = 5
LOSS_EPS = 1e-12


@dataclass
class BaselineSpec:
    """A baseline model family plus its training knobs."""

    family: str
    epochs: int = 10
    lr: float = 0.5
    l2: float = 1e-4
    seed: int = 0
    hash_bits: int = 18


@dataclass
class EpochTraces:
    """Per-unit training dynamics recorded by record_epoch_probs.

    ``losses[uid]`` has one entry per epoch; entries before a unit joined
    training are NaN. ``decks`` is present only for the leitner schedule and
    holds the deck a unit sat in during each epoch.
    """

    schedule: str
    n_epochs: int
    losses: dict[str, np.ndarray]
    included_at: dict[str, int] = field(default_factory=dict)
    decks: dict[str, np.ndarray] | None = None
    prelim_loss: dict[str, float] | None = None


# ---------------------------------------------------------------------------
# shared plumbing
# ---------------------------------------------------------------------------


@dataclass
class _Prepared:
    units: list
    feats: Featurized
    targets: np.ndarray          # per feature row
    model_classes: tuple[str, ...]  # class space the model is trained over
    unit_rows: dict[str, np.ndarray]  # uid -> feature rows backing that unit


def _prepare(corpus: Corpus, spec: BaselineSpec) -> _Prepared:
    check_family(spec.family, corpus.task)
    units = extract_units(corpus)
    feats = featurize(corpus, spec.family, spec.hash_bits)

    if corpus.task is Task.SPAN:
        model_classes = _bio_classes(corpus)
    else:
        model_classes = corpus.classes
    class_idx = {c: i for i, c in enumerate(model_classes)}

    targets = np.zeros(feats.X.shape[0], dtype=np.int64)
    if corpus.task is Task.TEXT:
        unit_rows = {}
        for i, unit in enumerate(units):
            targets[i] = class_idx[unit.label]
            unit_rows[unit.uid] = np.array([i])
    else:
        by_doc: dict[str, list] = {}
        for unit in units:
            by_doc.setdefault(unit.doc_id, []).append(unit)
        unit_rows = {}
        for doc in corpus.documents:
            start, _ = feats.doc_rows[doc.id]
            if corpus.task is Task.TOKEN:
                for i, lab in enumerate(doc.token_labels):
                    targets[start + i] = class_idx[lab]
            else:
                for sp in doc.spans:
                    targets[start + sp.begin] = class_idx[f"B-{sp.label}"]
                    for i in range(sp.begin + 1, sp.end):
                        targets[start + i] = class_idx[f"I-{sp.label}"]
            for unit in by_doc.get(doc.id, []):
                lo, hi = unit.position
                unit_rows[unit.uid] = np.arange(start + lo, start + hi)
    return _Prepared(units=units, feats=feats, targets=targets,
                     model_classes=model_classes, unit_rows=unit_rows)


def _bio_classes(corpus: Corpus) -> tuple[str, ...]:
    out = [NO_ENTITY]
    for label in corpus.annotatable_classes:
        out.extend((f"B-{label}", f"I-{label}"))
    return tuple(out)


def _doc_row_split(corpus: Corpus, prep: _Prepared, folds: FoldAssignment, fold: int):
    train_rows: list[np.ndarray] = []
    hold_uids: list[str] = []
    for doc in corpus.documents:
        if folds.fold_of[doc.id] != fold:
            train_rows.append(prep.feats.rows_for_doc(doc.id))
    for unit in prep.units:
        if folds.fold_of[unit.doc_id] == fold:
            hold_uids.append(unit.uid)
    rows = np.concatenate(train_rows) if train_rows else np.array([], dtype=np.int64)
    return rows, hold_uids


def _design_matrix(prep: _Prepared, train_rows: np.ndarray):
    if prep.feats.needs_idf:
        return apply_idf(prep.feats.X, train_rows)
    return prep.feats.X


def _fit(X, prep: _Prepared, train_rows: np.ndarray, spec: BaselineSpec, seed: int) -> SGDClassifier:
    model = SGDClassifier(dim=X.shape[1], n_classes=len(prep.model_classes),
                          lr=spec.lr, l2=spec.l2, seed=seed)
    return model.fit(X, prep.targets, train_rows, spec.epochs)


def _unit_row(corpus: Corpus, prep: _Prepared, uid: str, token_probs: np.ndarray,
              aggregate: str) -> np.ndarray:
    """Probability row for one unit given rows predicted for its tokens."""
    if corpus.task is not Task.SPAN:
        return token_probs[0]
    classes, row = span_label_distribution(token_probs, prep.model_classes, mode=aggregate)
    if tuple(classes) != corpus.classes:
        raise DataError(
            f"span class rollup produced {classes}, corpus declares {list(corpus.classes)}"
        )
    return row


# ---------------------------------------------------------------------------
# cross-validated and in-sample prediction
# ---------------------------------------------------------------------------


def train_and_predict_cv(corpus: Corpus, spec: BaselineSpec, folds: FoldAssignment,
                         aggregate: str = "mean") -> PredictionBundle:
    """One probability row per unit, each predicted by its held-out fold model."""
    prep = _prepare(corpus, spec)
    rows: dict[str, np.ndarray] = {}
    for fold in range(folds.k):
        train_rows, hold_uids = _doc_row_split(corpus, prep, folds, fold)
        X = _design_matrix(prep, train_rows)
        model = _fit(X, prep, train_rows, spec, seed=spec.seed ^ fold)
        for uid in hold_uids:
            probs = model.predict_proba(X[prep.unit_rows[uid]])
            rows[uid] = _unit_row(corpus, prep, uid, probs, aggregate)[None, :]
    ordered = {u.uid: rows[u.uid] for u in prep.units}
    return PredictionBundle(model=spec.family, kind=KIND_SINGLE, passes=1,
                            classes=corpus.classes, rows=ordered)


def train_and_predict_insample(corpus: Corpus, spec: BaselineSpec,
                               aggregate: str = "mean") -> PredictionBundle:
    """Train on everything, predict the same units. Kept for comparison runs."""
    prep = _prepare(corpus, spec)
    all_rows = np.arange(prep.feats.X.shape[0])
    X = _design_matrix(prep, all_rows)
    model = _fit(X, prep, all_rows, spec, seed=spec.seed)
    rows = {}
    for unit in prep.units:
        probs = model.predict_proba(X[prep.unit_rows[unit.uid]])
        rows[unit.uid] = _unit_row(corpus, prep, unit.uid, probs, aggregate)[None, :]
    return PredictionBundle(model=f"{spec.family}-insample", kind=KIND_SINGLE, passes=1,
                            classes=corpus.classes, rows=rows)


def predict_mc_dropout(corpus: Corpus, spec: BaselineSpec, folds: FoldAssignment,
                       n_passes: int = 10, drop_rate: float = 0.1,
                       aggregate: str = "mean") -> PredictionBundle:
    """T stochastic predictions per unit from feature dropout at inference."""
    if n_passes < 2:
        raise ConfigError(f"mc dropout needs at least 2 passes, got {n_passes}")
    if not (0.0 <= drop_rate < 1.0):
        raise ConfigError(f"drop_rate {drop_rate} outside [0, 1)")
    prep = _prepare(corpus, spec)
    rows: dict[str, np.ndarray] = {
        u.uid: np.zeros((n_passes, len(corpus.classes))) for u in prep.units
    }
    for fold in range(folds.k):
        train_rows, hold_uids = _doc_row_split(corpus, prep, folds, fold)
        X = _design_matrix(prep, train_rows)
        model = _fit(X, prep, train_rows, spec, seed=spec.seed ^ fold)
        for t in range(n_passes):
            rng = np.random.default_rng((spec.seed ^ fold, 1000 + t))
            for uid in hold_uids:
                dropped = dropout_rows(X, prep.unit_rows[uid], drop_rate, rng)
                probs = model.predict_proba(dropped)
                rows[uid][t] = _unit_row(corpus, prep, uid, probs, aggregate)
    return PredictionBundle(model=f"{spec.family}-mc", kind=KIND_REPEATED, passes=n_passes,
                            classes=corpus.classes, rows=rows)


# ---------------------------------------------------------------------------
# per-epoch recording
# ---------------------------------------------------------------------------


def record_epoch_probs(corpus: Corpus, spec: BaselineSpec, schedule: str = "plain",
                       folds: FoldAssignment | None = None,
                       ) -> tuple[PredictionBundle, EpochTraces]:
    """Snapshot class probabilities for every unit after every epoch.

    Text classification only. The curriculum and leitner schedules describe
    training dynamics, which only exist for units the model trains on, so
    they require folds=None; plain recording accepts folds and then snapshots
    each unit from its held-out fold model.
    """
    if corpus.task is not Task.TEXT:
        raise ConfigError("per-epoch recording applies to text classification only")
    if schedule not in SCHEDULES:
        raise ConfigError(f"unknown schedule {schedule!r}; choose from {SCHEDULES}")
    if schedule != "plain" and folds is not None:
        raise ConfigError(f"schedule {schedule!r} trains on the full corpus; drop the folds")
    if spec.epochs < 1:
        raise ConfigError("per-epoch recording needs at least 1 epoch")

    prep = _prepare(corpus, spec)
    n = len(prep.units)
    uid_of_row = {i: u.uid for i, u in enumerate(prep.units)}
    E = spec.epochs

    if folds is not None:
        probs, losses = _epochs_cv_plain(corpus, prep, spec, folds)
        bundle = _epoch_bundle(corpus, spec, prep, probs)
        traces = EpochTraces(schedule=schedule, n_epochs=E, losses=losses,
                             included_at={u.uid: 0 for u in prep.units})
        return bundle, traces

    all_rows = np.arange(n)
    X = _design_matrix(prep, all_rows)
    model = SGDClassifier(dim=X.shape[1], n_classes=len(prep.model_classes),
                          lr=spec.lr, l2=spec.l2, seed=spec.seed)

    included_at = {uid_of_row[i]: 0 for i in range(n)}
    decks = None
    deck_state = None
    prelim_loss = None
    if schedule == "curriculum":
        included_at, prelim_loss = _curriculum_inclusion(X, prep, spec, uid_of_row)
    elif schedule == "leitner":
        deck_state = np.zeros(n, dtype=np.int64)
        decks = {uid_of_row[i]: np.zeros(E, dtype=np.int64) for i in range(n)}

    probs = {uid_of_row[i]: np.zeros((E, len(corpus.classes))) for i in range(n)}
    losses = {uid_of_row[i]: np.full(E, np.nan) for i in range(n)}

    for epoch in range(E):
        if schedule == "curriculum":
            active = np.array([i for i in range(n) if included_at[uid_of_row[i]] <= epoch])
        elif schedule == "leitner":
            trained_decks = {q for q in range(N_DECKS) if (epoch + 1) % (1 << q) == 0}
            for i in range(n):
                decks[uid_of_row[i]][epoch] = deck_state[i]
            active = np.array([i for i in range(n) if deck_state[i] in trained_decks])
        else:
            active = all_rows
        model.train_epoch(X, prep.targets, active)
        snapshot = model.predict_proba(X)
        for i in range(n):
            uid = uid_of_row[i]
            probs[uid][epoch] = snapshot[i]
            if included_at.get(uid, 0) <= epoch:
                losses[uid][epoch] = -np.log(snapshot[i, prep.targets[i]] + LOSS_EPS)
        if schedule == "leitner" and len(active):
            correct = snapshot[active].argmax(axis=1) == prep.targets[active]
            deck_state[active] = np.where(
                correct, np.minimum(deck_state[active] + 1, N_DECKS - 1), 0
            )

    bundle = _epoch_bundle(corpus, spec, prep, probs)
    traces = EpochTraces(schedule=schedule, n_epochs=E, losses=losses,
                         included_at=included_at, decks=decks, prelim_loss=prelim_loss)
    return bundle, traces


def _epoch_bundle(corpus, spec, prep, probs) -> PredictionBundle:
    ordered = {u.uid: probs[u.uid] for u in prep.units}
    return PredictionBundle(model=f"{spec.family}-epochs", kind=KIND_EPOCHS,
                            passes=spec.epochs, classes=corpus.classes, rows=ordered)


def _curriculum_inclusion(X, prep: _Prepared, spec: BaselineSpec,
                          uid_of_row: dict[int, str]):
    """Rank units by loss under a one-epoch probe, then stagger deciles in."""
    n = X.shape[0]
    probe = SGDClassifier(dim=X.shape[1], n_classes=len(prep.model_classes),
                          lr=spec.lr, l2=spec.l2, seed=spec.seed ^ 0x5A5A)
    probe.train_epoch(X, prep.targets, np.arange(n))
    snapshot = probe.predict_proba(X)
    loss = -np.log(snapshot[np.arange(n), prep.targets] + LOSS_EPS)
    order = np.argsort(loss, kind="stable")
    included_at: dict[str, int] = {}
    for rank, i in enumerate(order):
        decile = (10 * rank) // n
        included_at[uid_of_row[int(i)]] = (decile * spec.epochs) // 10
    prelim = {uid_of_row[i]: float(loss[i]) for i in range(n)}
    return included_at, prelim


def _epochs_cv_plain(corpus, prep: _Prepared, spec: BaselineSpec, folds: FoldAssignment):
    n = len(prep.units)
    E = spec.epochs
    probs = {u.uid: np.zeros((E, len(corpus.classes))) for u in prep.units}
    losses = {u.uid: np.full(E, np.nan) for u in prep.units}
    row_of = {u.uid: i for i, u in enumerate(prep.units)}
    for fold in range(folds.k):
        train_rows, hold_uids = _doc_row_split(corpus, prep, folds, fold)
        X = _design_matrix(prep, train_rows)
        model = SGDClassifier(dim=X.shape[1], n_classes=len(prep.model_classes),
                              lr=spec.lr, l2=spec.l2, seed=spec.seed ^ fold)
        hold_rows = np.array([row_of[uid] for uid in hold_uids])
        for epoch in range(E):
            model.train_epoch(X, prep.targets, train_rows)
            snapshot = model.predict_proba(X[hold_rows])
            for j, uid in enumerate(hold_uids):
                probs[uid][epoch] = snapshot[j]
                losses[uid][epoch] = -np.log(snapshot[j, prep.targets[row_of[uid]]] + LOSS_EPS)
    return probs, losses

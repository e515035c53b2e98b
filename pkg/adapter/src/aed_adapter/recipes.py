"""Model recipes: scikit-learn estimators exported as interchange bundles.

Each recipe trains one estimator per fold on the out-of-fold units and
predicts the held-in ones, so no unit is ever scored by a model that saw
its label. The kind decides what lands in the file: one row per unit
(``single``), T bootstrap members (``repeated:T``), or one snapshot per
training epoch (``epochs:E``).
"""

from __future__ import annotations

from dataclasses import dataclass

import numpy as np
from sklearn.decomposition import TruncatedSVD
from sklearn.feature_extraction.text import CountVectorizer, TfidfVectorizer
from sklearn.linear_model import LogisticRegression, SGDClassifier

from .interchange import (
    ConfigError,
    Corpus,
    DataError,
    Unit,
    read_corpus,
    read_folds,
    write_embeddings,
    write_predictions,
)

# recipe id -> bundle kinds it can produce
RECIPES = {
    "logreg": ("single", "repeated"),
    "sgd": ("single", "epochs"),
}

BOOTSTRAP_RETRIES = 10


@dataclass(frozen=True)
class ExportJob:
    """One export request, mirroring the command line one to one."""

    task: str
    corpus: str
    out: str
    fold_file: str | None = None
    recipe: str = "logreg"
    kind: str = "single"
    seed: int = 0
    dim: int = 64


def parse_kind(token: str) -> tuple[str, int]:
    if token == "single":
        return "single", 1
    base, _, count = token.partition(":")
    if base in ("repeated", "epochs") and count.isdigit() and int(count) >= 1:
        return base, int(count)
    raise ConfigError(
        f"kind must be single, repeated:T, or epochs:E, got {token!r}")


# ---------------------------------------------------------------------------
# featurization
# ---------------------------------------------------------------------------


def unit_features(corpus: Corpus, unit: Unit) -> list[str]:
    """Sparse feature names for one unit, fed to a count vectorizer."""
    toks = corpus.docs[unit.doc].tokens
    if corpus.task == "text":
        words = toks[0].split()
        return ["w=" + w.lower() for w in words] or ["w=<empty>"]
    if corpus.task == "token":
        i = unit.begin
        feats = [
            "t0=" + toks[i].lower(),
            "suf=" + toks[i][-3:].lower(),
            "shape=" + ("U" if toks[i][:1].isupper() else "l") + ("d" if any(c.isdigit() for c in toks[i]) else ""),
        ]
        for off in (-2, -1, 1, 2):
            j = i + off
            feats.append(f"t{off:+d}=" + (toks[j].lower() if 0 <= j < len(toks) else "<pad>"))
        return feats
    feats = ["in=" + w.lower() for w in toks[unit.begin:unit.end]]
    feats.append("first=" + toks[unit.begin].lower())
    feats.append("last=" + toks[unit.end - 1].lower())
    feats.append("left=" + (toks[unit.begin - 1].lower() if unit.begin > 0 else "<s>"))
    feats.append("right=" + (toks[unit.end].lower() if unit.end < len(toks) else "</s>"))
    feats.append(f"len={min(unit.end - unit.begin, 5)}")
    return feats


def _identity(x):
    return x


# ---------------------------------------------------------------------------
# prediction export
# ---------------------------------------------------------------------------


def export_predictions(job: ExportJob) -> dict:
    """Train under the fold file and write the bundle; returns run stats.

    Stats carry ``disagreements`` for single bundles: the number of units
    whose argmax prediction differs from the observed label, counted on
    the adapter side before anything touches the file.
    """
    if job.recipe not in RECIPES:
        raise ConfigError(
            f"unknown recipe {job.recipe!r}; available: {', '.join(sorted(RECIPES))}")
    kind, passes = parse_kind(job.kind)
    if kind not in RECIPES[job.recipe]:
        capable = [r for r, kinds in sorted(RECIPES.items()) if kind in kinds]
        raise ConfigError(
            f"recipe {job.recipe!r} cannot produce {kind} bundles; "
            f"use {' or '.join(repr(r) for r in capable)}")
    if job.fold_file is None:
        raise ConfigError("prediction export needs a fold file")

    corpus = read_corpus(job.corpus, job.task)
    folds = read_folds(job.fold_file, corpus)
    feats = [unit_features(corpus, u) for u in corpus.units]
    labels = [u.label for u in corpus.units]
    class_col = {c: i for i, c in enumerate(corpus.classes)}
    n_classes = len(corpus.classes)

    rows = {u.uid: np.zeros((passes, n_classes)) for u in corpus.units}
    for f in range(folds.k):
        train, test = _split(corpus, folds.fold_of, f)
        if not test:
            continue
        if len({labels[i] for i in train}) < 2:
            raise DataError(
                f"fold {f} training data has fewer than two label classes; "
                f"use fewer folds or a larger corpus")
        vec = CountVectorizer(analyzer=_identity, lowercase=False)
        X_train = vec.fit_transform([feats[i] for i in train])
        X_test = vec.transform([feats[i] for i in test])
        y_train = [labels[i] for i in train]

        for t, probs, model_classes in _fold_passes(
                job, kind, passes, f, X_train, y_train, X_test):
            full = _expand(probs, model_classes, class_col, n_classes)
            for r, i in enumerate(test):
                rows[corpus.units[i].uid][t] = full[r]

    stats = {"n_units": len(corpus.units), "kind": job.kind, "passes": passes}
    if kind == "single":
        stats["disagreements"] = sum(
            int(np.argmax(rows[u.uid][0]) != class_col[u.label])
            for u in corpus.units)
    write_predictions(job.out, model=job.recipe, kind=job.kind,
                      classes=corpus.classes, rows=rows)
    return stats


def _split(corpus: Corpus, fold_of: dict[str, int], f: int) -> tuple[list[int], list[int]]:
    train, test = [], []
    for i, unit in enumerate(corpus.units):
        doc_id = corpus.docs[unit.doc].id
        (test if fold_of[doc_id] == f else train).append(i)
    return train, test


def _fold_passes(job: ExportJob, kind: str, passes: int, f: int,
                 X_train, y_train, X_test):
    """Yield (pass index, probability matrix, model class order) per pass."""
    if kind == "single":
        if job.recipe == "logreg":
            clf = LogisticRegression(max_iter=1000)
        else:
            clf = SGDClassifier(loss="log_loss", max_iter=1000,
                                random_state=job.seed + f, shuffle=True)
        clf.fit(X_train, y_train)
        yield 0, clf.predict_proba(X_test), clf.classes_
    elif kind == "repeated":
        y_arr = np.asarray(y_train, dtype=object)
        n = X_train.shape[0]
        for t in range(passes):
            rng = np.random.default_rng((job.seed, f, t))
            for attempt in range(BOOTSTRAP_RETRIES):
                idx = rng.integers(0, n, n)
                if len(set(y_arr[idx])) >= 2:
                    break
            else:
                raise DataError(
                    f"fold {f} pass {t}: bootstrap samples keep collapsing to "
                    f"one class; the corpus is too small or too skewed")
            clf = LogisticRegression(max_iter=1000)
            clf.fit(X_train[idx], list(y_arr[idx]))
            yield t, clf.predict_proba(X_test), clf.classes_
    else:
        classes = np.array(sorted(set(y_train)))
        clf = SGDClassifier(loss="log_loss", alpha=1e-4, learning_rate="constant",
                            eta0=0.1, random_state=job.seed + f, shuffle=False)
        rng = np.random.default_rng((job.seed, f))
        y_arr = np.asarray(y_train, dtype=object)
        for e in range(passes):
            order = rng.permutation(X_train.shape[0])
            clf.partial_fit(X_train[order], list(y_arr[order]), classes=classes)
            yield e, clf.predict_proba(X_test), clf.classes_


def _expand(probs: np.ndarray, model_classes, class_col: dict[str, int],
            n_classes: int) -> np.ndarray:
    # a fold's model may never have seen some corpus classes; those columns
    # stay at probability zero
    full = np.zeros((probs.shape[0], n_classes))
    for j, cls in enumerate(model_classes):
        full[:, class_col[cls]] = probs[:, j]
    return full


# ---------------------------------------------------------------------------
# embedding export
# ---------------------------------------------------------------------------


def export_embeddings(job: ExportJob) -> dict:
    """TF-IDF over unit features, reduced by SVD, one unit vector per unit.

    Deterministic featurization means units with identical surface context
    land on identical vectors, which is what downstream duplicate checks
    expect. Vectors are L2-normalized.
    """
    corpus = read_corpus(job.corpus, job.task)
    feats = [unit_features(corpus, u) for u in corpus.units]
    tfidf = TfidfVectorizer(analyzer=_identity, lowercase=False)
    X = tfidf.fit_transform(feats)
    if job.dim >= min(X.shape):
        raise ConfigError(
            f"dim={job.dim} needs more than {job.dim} units and distinct "
            f"features; this corpus supports at most {min(X.shape) - 1}")
    svd = TruncatedSVD(n_components=job.dim, random_state=job.seed)
    reduced = svd.fit_transform(X)
    norms = np.linalg.norm(reduced, axis=1)
    norms[norms == 0.0] = 1.0
    reduced = reduced / norms[:, None]

    vectors = {u.uid: reduced[i] for i, u in enumerate(corpus.units)}
    write_embeddings(job.out, name=f"tfidf-svd{job.dim}", vectors=vectors)
    return {"n_units": len(corpus.units), "dim": job.dim}

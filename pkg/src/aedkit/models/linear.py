"""Multinomial logistic regression on sparse or dense features.

Minibatch SGD with a fixed batch size; nothing adaptive. The trainer exposes
single-epoch steps so schedules can choose which rows participate in each
epoch and snapshot probabilities between epochs.
"""

from __future__ import annotations

import numpy as np
from scipy import sparse

BATCH_SIZE = 32
LOGIT_CLIP = 30.0


def softmax(logits: np.ndarray) -> np.ndarray:
    z = np.clip(logits, -LOGIT_CLIP, LOGIT_CLIP)
    z = z - z.max(axis=-1, keepdims=True)
    e = np.exp(z)
    return e / e.sum(axis=-1, keepdims=True)


class SGDClassifier:
    """Weights live as (dim, n_classes) so updates are X.T @ residual."""

    def __init__(self, dim: int, n_classes: int, lr: float, l2: float, seed: int):
        self.W = np.zeros((dim, n_classes))
        self.b = np.zeros(n_classes)
        self.lr = lr
        self.l2 = l2
        self.rng = np.random.default_rng(seed)
        self.n_classes = n_classes

    def train_epoch(self, X, y: np.ndarray, rows: np.ndarray) -> None:
        """One shuffled pass over ``rows`` in minibatches."""
        if len(rows) == 0:
            return
        order = rows[self.rng.permutation(len(rows))]
        for start in range(0, len(order), BATCH_SIZE):
            batch = order[start:start + BATCH_SIZE]
            Xb = X[batch]
            probs = self.predict_proba(Xb)
            resid = probs
            resid[np.arange(len(batch)), y[batch]] -= 1.0
            resid /= len(batch)
            if self.l2:
                self.W *= 1.0 - self.lr * self.l2
            if sparse.issparse(Xb):
                # update only the columns active in this batch; remapping
                # keeps scipy's accumulation order, so results are bit-equal
                # to the dense X.T @ resid formulation
                cols, inv = np.unique(Xb.indices, return_inverse=True)
                if len(cols):
                    small = sparse.csr_matrix(
                        (Xb.data, inv, Xb.indptr), shape=(Xb.shape[0], len(cols)))
                    self.W[cols] -= self.lr * small.T.dot(resid)
            else:
                self.W -= self.lr * (Xb.T @ resid)
            self.b -= self.lr * resid.sum(axis=0)

    def fit(self, X, y: np.ndarray, rows: np.ndarray, epochs: int) -> "SGDClassifier":
        for _ in range(epochs):
            self.train_epoch(X, y, rows)
        return self

    def predict_proba(self, X) -> np.ndarray:
        logits = X @ self.W + self.b
        if sparse.issparse(logits):
            logits = np.asarray(logits.todense())
        return softmax(np.asarray(logits))


def dropout_rows(X: sparse.csr_matrix, rows: np.ndarray, drop_rate: float,
                 rng: np.random.Generator) -> sparse.csr_matrix:
    """Copy the selected rows, independently zeroing active features."""
    sub = X[rows].tocsr(copy=True)
    if drop_rate > 0.0:
        keep = rng.random(sub.data.shape) >= drop_rate
        sub.data = sub.data * keep
    return sub

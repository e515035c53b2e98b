"""Two-parameter IRT fit over a subjects-by-items response matrix.

R[s, i] is 1 when subject s got item i right. The fit recovers per-subject
ability, per-item difficulty, and per-item discrimination by maximizing the
log posterior with full-batch gradient ascent. Small matrices are the norm
here (a handful of model subjects), hence MAP instead of anything fancier.
"""

from __future__ import annotations

import logging
from dataclasses import dataclass

import numpy as np

from ..corpus import DataError

log = logging.getLogger(__name__)

N_ITERS = 2000
LEARNING_RATE = 0.05
LOGIT_CLIP = 30.0
INIT_JITTER = 1e-6


@dataclass
class IrtFit:
    theta: np.ndarray        # subject ability, shape (S,)
    a: np.ndarray            # item discrimination, shape (I,)
    b: np.ndarray            # item difficulty, shape (I,)
    log_posterior: float
    degenerate_items: tuple[int, ...] = ()


def fit_irt_2pl(R: np.ndarray, n_iters: int = N_ITERS, lr: float = LEARNING_RATE,
                seed: int = 0) -> IrtFit:
    """MAP fit of P(R=1) = sigmoid(a_i * (theta_s - b_i)).

    Priors: theta, b ~ N(0, 1), a ~ N(1, 1). Gradients are averaged within
    each parameter group, which rescales the step without moving the optima.
    The (a, theta, b) -> (-a, -theta, -b) symmetry is resolved at the end by
    flipping so that mean discrimination is non-negative.
    """
    R = np.asarray(R, dtype=float)
    if R.ndim != 2:
        raise DataError(f"response matrix must be 2-d, got shape {R.shape}")
    S, I = R.shape
    if S < 2 or I < 2:
        raise DataError(f"need at least 2 subjects and 2 items, got {S}x{I}")
    if not np.isin(R, (0.0, 1.0)).all():
        raise DataError("response matrix entries must be 0 or 1")

    col_mean = R.mean(axis=0)
    degenerate = tuple(int(i) for i in np.flatnonzero((col_mean == 0) | (col_mean == 1)))
    if degenerate:
        log.warning("IRT: %d items answered uniformly (all right or all wrong); "
                    "their discrimination stays near the prior", len(degenerate))

    rng = np.random.default_rng(seed)
    theta = INIT_JITTER * rng.standard_normal(S)
    b = INIT_JITTER * rng.standard_normal(I)
    a = np.ones(I)

    for _ in range(n_iters):
        z = np.clip(a[None, :] * (theta[:, None] - b[None, :]), -LOGIT_CLIP, LOGIT_CLIP)
        p = 1.0 / (1.0 + np.exp(-z))
        resid = R - p                                      # d loglik / d z
        grad_theta = (resid * a[None, :]).sum(axis=1) - theta
        grad_a = (resid * (theta[:, None] - b[None, :])).sum(axis=0) - (a - 1.0)
        grad_b = (-resid * a[None, :]).sum(axis=0) - b
        theta = theta + lr * grad_theta / I
        a = a + lr * grad_a / S
        b = b + lr * grad_b / S

    if a.mean() < 0:
        a, theta, b = -a, -theta, -b

    z = np.clip(a[None, :] * (theta[:, None] - b[None, :]), -LOGIT_CLIP, LOGIT_CLIP)
    p = 1.0 / (1.0 + np.exp(-z))
    eps = 1e-12
    ll = float((R * np.log(p + eps) + (1 - R) * np.log(1 - p + eps)).sum())
    prior = float(-0.5 * (theta ** 2).sum() - 0.5 * (b ** 2).sum()
                  - 0.5 * ((a - 1.0) ** 2).sum())
    return IrtFit(theta=theta, a=a, b=b, log_posterior=ll + prior,
                  degenerate_items=degenerate)

from .features import (
    ALL_FAMILIES,
    TEXT_FAMILIES,
    TOKEN_FAMILIES,
    check_family,
    featurize,
    stable_hash,
)
from .linear import SGDClassifier, dropout_rows, softmax
from .training import (
    BaselineSpec,
    EpochTraces,
    SCHEDULES,
    predict_mc_dropout,
    record_epoch_probs,
    train_and_predict_cv,
    train_and_predict_insample,
)
from .embed import builtin_embed, gaussian_projection_ensemble
from .irt import IrtFit, fit_irt_2pl

__all__ = [
    "ALL_FAMILIES",
    "TEXT_FAMILIES",
    "TOKEN_FAMILIES",
    "check_family",
    "featurize",
    "stable_hash",
    "SGDClassifier",
    "dropout_rows",
    "softmax",
    "BaselineSpec",
    "EpochTraces",
    "SCHEDULES",
    "predict_mc_dropout",
    "record_epoch_probs",
    "train_and_predict_cv",
    "train_and_predict_insample",
    "builtin_embed",
    "gaussian_projection_ensemble",
    "IrtFit",
    "fit_irt_2pl",
]

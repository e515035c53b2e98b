from ..vectors import FlagVector, Polarity, ScoreVector
from .dawid_skene import aggregate_repeated_labels, label_aggregation
from .flaggers import (
    confident_learning,
    diverse_ensemble,
    irt_flag,
    projection_ensemble,
    retag,
)
from .scorers import (
    borda_count,
    classification_uncertainty,
    curriculum_spotter,
    datamap_confidence,
    dropout_uncertainty,
    knn_entropy,
    label_entropy,
    leitner_spotter,
    mean_distance,
    prediction_margin,
    weighted_discrepancy,
)
from .variation import variation_ngrams

__all__ = [
    "FlagVector",
    "Polarity",
    "ScoreVector",
    "aggregate_repeated_labels",
    "label_aggregation",
    "confident_learning",
    "diverse_ensemble",
    "irt_flag",
    "projection_ensemble",
    "retag",
    "borda_count",
    "classification_uncertainty",
    "curriculum_spotter",
    "datamap_confidence",
    "dropout_uncertainty",
    "knn_entropy",
    "label_entropy",
    "leitner_spotter",
    "mean_distance",
    "prediction_margin",
    "weighted_discrepancy",
    "variation_ngrams",
]

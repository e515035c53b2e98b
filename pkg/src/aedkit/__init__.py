"""Annotation error detection toolkit.

Find mislabeled instances in text classification, token labeling, and span
labeling datasets by combining model-based flaggers and scorers with
model-free heuristics over a small, file-based interchange surface.
"""

from .corpus import (
    ConfigError,
    Corpus,
    DataError,
    Document,
    FoldAssignment,
    NO_ENTITY,
    Span,
    Task,
    Unit,
    corpus_digest,
    extract_units,
    inject_noise,
    make_folds,
    validate_corpus,
)
from .formats import (
    EmbeddingSet,
    PredictionBundle,
    read_corpus,
    read_embeddings,
    read_folds,
    read_predictions,
    write_corpus,
    write_embeddings,
    write_folds,
    write_predictions,
)
from .evaluate import (
    EvalReport,
    ReportDocument,
    assemble_report,
    eval_flagger,
    eval_scorer,
    harmonic_mean,
    harmonic_mean_summary,
    rank_by_suspicion,
    records_to_reports,
    scorer_to_flags,
)
from .vectors import FlagVector, Polarity, ScoreVector

__version__ = "0.1.0"

__all__ = [
    "ConfigError",
    "Corpus",
    "DataError",
    "Document",
    "EmbeddingSet",
    "EvalReport",
    "FlagVector",
    "FoldAssignment",
    "NO_ENTITY",
    "Polarity",
    "PredictionBundle",
    "ReportDocument",
    "ScoreVector",
    "Span",
    "Task",
    "Unit",
    "assemble_report",
    "corpus_digest",
    "eval_flagger",
    "eval_scorer",
    "extract_units",
    "harmonic_mean",
    "harmonic_mean_summary",
    "inject_noise",
    "make_folds",
    "rank_by_suspicion",
    "read_corpus",
    "read_embeddings",
    "read_folds",
    "read_predictions",
    "records_to_reports",
    "scorer_to_flags",
    "validate_corpus",
    "write_corpus",
    "write_embeddings",
    "write_folds",
    "write_predictions",
    "__version__",
]

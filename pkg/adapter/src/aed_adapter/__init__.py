"""Bridge between scikit-learn models and the aedkit interchange formats."""

from .interchange import (
    ConfigError,
    Corpus,
    DataError,
    Folds,
    Unit,
    corpus_digest,
    read_corpus,
    read_folds,
    write_embeddings,
    write_predictions,
)
from .recipes import (
    RECIPES,
    ExportJob,
    export_embeddings,
    export_predictions,
    parse_kind,
    unit_features,
)

__all__ = [
    "ConfigError", "Corpus", "DataError", "Folds", "Unit",
    "corpus_digest", "read_corpus", "read_folds",
    "write_embeddings", "write_predictions",
    "RECIPES", "ExportJob", "export_embeddings", "export_predictions",
    "parse_kind", "unit_features",
]

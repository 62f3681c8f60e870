"""relrep: representation-stack benchmarking for CNN relation extraction."""

__version__ = "0.1.0"

from .corpus import (Dataset, EntitySpan, LabeledSentence, LabelSet, Token,
                     encode_labels, parse_semeval, split_train_dev, tokenize)
from .metrics import (BoxplotStats, MetricsReport, RunSetReport, aggregate,
                      boxplot_stats, confusion, prf, summarize_runs)
from .representations import (CharChannel, ContextualChannel, ContextualStore,
                              PositionChannel, PosTagChannel, RepresentationStack,
                              SentenceMatrix, StaticChannel, StaticTable, compose,
                              load_static_text, lookup_static, pos_onehot,
                              read_ctx_store, relative_positions, write_ctx_store)

__all__ = [
    "__version__",
    "Dataset", "EntitySpan", "LabeledSentence", "LabelSet", "Token",
    "encode_labels", "parse_semeval", "split_train_dev", "tokenize",
    "BoxplotStats", "MetricsReport", "RunSetReport", "aggregate",
    "boxplot_stats", "confusion", "prf", "summarize_runs",
    "CharChannel", "ContextualChannel", "ContextualStore", "PositionChannel",
    "PosTagChannel", "RepresentationStack", "SentenceMatrix", "StaticChannel",
    "StaticTable", "compose", "load_static_text", "lookup_static", "pos_onehot",
    "read_ctx_store", "relative_positions", "write_ctx_store",
]

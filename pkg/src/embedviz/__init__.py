"""Metric-learning embeddings, their generalization to unseen classes, and visual diagnostics."""

__version__ = "0.1.0"

from ._validation import DataError
from .analysis import ScatterPoint, below_diagonal_fraction, recall_at_k, similarity_scatter
from .dataset import (
    EmbeddingSet,
    SyntheticConfig,
    gen_synthetic,
    load_csv,
    normalize_rows,
    save_csv,
    split_by_class,
)
from .mining import MinerConfig, Strategy
from .trainer import LinearEmbedder, TrainConfig
from .tsne import TSNE, TsneConfig
from .yoke import YokeConfig, YokedTSNE

__all__ = [
    "DataError",
    "EmbeddingSet",
    "LinearEmbedder",
    "MinerConfig",
    "ScatterPoint",
    "Strategy",
    "SyntheticConfig",
    "TSNE",
    "TrainConfig",
    "TsneConfig",
    "YokeConfig",
    "YokedTSNE",
    "below_diagonal_fraction",
    "gen_synthetic",
    "load_csv",
    "normalize_rows",
    "recall_at_k",
    "save_csv",
    "similarity_scatter",
    "split_by_class",
]

"""Root-cause ranking of deleted lines in bug-fixing commits.

Pipeline: commit records -> typed change graphs -> homogeneous graphs ->
line embeddings -> relational graph convolution -> pairwise-trained
ranking of deleted lines, evaluated with Recall@N and mean first rank
under stratified cross-validation.
"""
from .dataset import (ChangedLine, CommitRecord, FileChange, FoldAssignment,
                      load_dataset, save_dataset, split_folds)
from .diffgraph import HeteroGraph, RELATION_KINDS, StmtNode, build_graph
from .embedding import FileEmbedder, HashedBagEmbedder, embed_graph
from .estimators import (CommitGraphBuilder, GraphTypeConverter, NodeEmbedder,
                         RootCauseRanker)
from .evaluation import (MetricsReport, cross_validate, mean_first_rank,
                         recall_at_n, render_report)
from .homograph import FeatureStore, HomoGraph, merge
from .ranking import (LossConfig, Ranking, TrainConfig, focal_loss,
                      make_pairs, pair_probability, rank_deletions, train)
from .rgcn import RgcnModel, build_model, compose_weight, model_forward
from .synth import make_synthetic_corpus, write_synthetic_dataset

__all__ = [
    "ChangedLine", "CommitRecord", "FileChange", "FoldAssignment",
    "load_dataset", "save_dataset", "split_folds",
    "HeteroGraph", "RELATION_KINDS", "StmtNode", "build_graph",
    "FileEmbedder", "HashedBagEmbedder", "embed_graph",
    "CommitGraphBuilder", "GraphTypeConverter", "NodeEmbedder", "RootCauseRanker",
    "MetricsReport", "cross_validate", "mean_first_rank", "recall_at_n",
    "render_report",
    "FeatureStore", "HomoGraph", "merge",
    "LossConfig", "Ranking", "TrainConfig", "focal_loss", "make_pairs",
    "pair_probability", "rank_deletions", "train",
    "RgcnModel", "build_model", "compose_weight", "model_forward",
    "make_synthetic_corpus", "write_synthetic_dataset",
]

__version__ = "0.1.0"

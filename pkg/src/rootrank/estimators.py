"""Scikit-learn style estimators over the commit-ranking pipeline.

The transformers expose the graph stages individually so they compose in
sklearn pipelines; RootCauseRanker bundles the whole flow behind
fit/predict and plays well with clone() and get_params() for sweeps.
"""
from __future__ import annotations

from sklearn.base import BaseEstimator, TransformerMixin

from . import embedding, homograph, ranking, rgcn
from .dataset import CommitRecord
from .diffgraph import RELATION_KINDS, HeteroGraph, build_graph
from .homograph import HomoGraph
from .ranking import LossConfig, Ranking, TrainConfig


def _check_records(X) -> list[CommitRecord]:
    records = list(X)
    for item in records:
        if not isinstance(item, CommitRecord):
            raise TypeError(f"expected CommitRecord inputs, got {type(item).__name__}")
    return records


def _check_graphs(X, cls) -> list:
    graphs = list(X)
    for item in graphs:
        if not isinstance(item, cls):
            raise TypeError(f"expected {cls.__name__} inputs, got {type(item).__name__}")
    return graphs


class CommitGraphBuilder(BaseEstimator, TransformerMixin):
    """Commit records -> typed graphs over changed lines."""

    def fit(self, X, y=None):
        return self

    def transform(self, X) -> list[HeteroGraph]:
        return [build_graph(r) for r in _check_records(X)]


class GraphTypeConverter(BaseEstimator, TransformerMixin):
    """Typed graphs -> homogeneous graphs with type vectors."""

    def __init__(self, fill_missing=False):
        self.fill_missing = fill_missing

    def fit(self, X, y=None):
        return self

    def transform(self, X) -> list[HomoGraph]:
        graphs = _check_graphs(X, HeteroGraph)
        return [homograph.merge(g, fill=self.fill_missing) for g in graphs]


class NodeEmbedder(BaseEstimator, TransformerMixin):
    """Replace node features with fixed-length line embeddings."""

    def __init__(self, embedder="hashed", embed_dim=128, embed_seed=0,
                 vectors_path=None, fallback_to_hashed=False):
        self.embedder = embedder
        self.embed_dim = embed_dim
        self.embed_seed = embed_seed
        self.vectors_path = vectors_path
        self.fallback_to_hashed = fallback_to_hashed

    def _build(self) -> embedding.Embedder:
        if self.embedder == "hashed":
            return embedding.HashedBagEmbedder(dim=self.embed_dim,
                                               seed=self.embed_seed)
        if self.embedder == "file":
            if not self.vectors_path:
                raise ValueError("embedder='file' needs vectors_path")
            fallback = None
            if self.fallback_to_hashed:
                dim, _ = embedding.read_embedding_file(self.vectors_path)
                fallback = embedding.HashedBagEmbedder(dim=dim, seed=self.embed_seed)
            return embedding.FileEmbedder(self.vectors_path, fallback=fallback)
        raise ValueError(f"unknown embedder {self.embedder!r}")

    def fit(self, X, y=None):
        return self

    def transform(self, X) -> list[HomoGraph]:
        graphs = _check_graphs(X, HomoGraph)
        emb = self._build()
        return [embedding.embed_graph(g, emb) for g in graphs]


class RootCauseRanker(BaseEstimator):
    """End-to-end ranker: fit on labeled commits, predict per-commit
    rankings of deleted lines.

    Accepts either CommitRecord lists (graphs are built and embedded
    internally) or pre-embedded HomoGraph lists for both fit and predict.
    """

    def __init__(self, hidden_dim=64, layers=2, decomposition="basis",
                 num_bases=30, num_blocks=8, loss="focal", alpha_t=0.25,
                 gamma=2.0, pos_weight=1.0, lr=5e-6, epochs=20,
                 pair_batch=128, seed=0, embedder="hashed", embed_dim=128,
                 vectors_path=None, fill_missing=False):
        self.hidden_dim = hidden_dim
        self.layers = layers
        self.decomposition = decomposition
        self.num_bases = num_bases
        self.num_blocks = num_blocks
        self.loss = loss
        self.alpha_t = alpha_t
        self.gamma = gamma
        self.pos_weight = pos_weight
        self.lr = lr
        self.epochs = epochs
        self.pair_batch = pair_batch
        self.seed = seed
        self.embedder = embedder
        self.embed_dim = embed_dim
        self.vectors_path = vectors_path
        self.fill_missing = fill_missing

    def _decompositions(self) -> list[str]:
        if isinstance(self.decomposition, str):
            parts = [p.strip() for p in self.decomposition.split(",") if p.strip()]
        else:
            parts = list(self.decomposition)
        if len(parts) == 1:
            parts = parts * self.layers
        if len(parts) != self.layers:
            raise ValueError(
                f"{len(parts)} decomposition variants for {self.layers} layers")
        return parts

    def _loss_config(self) -> LossConfig:
        return LossConfig(kind=self.loss, alpha_t=self.alpha_t,
                          gamma=self.gamma, pos_weight=self.pos_weight)

    def _train_config(self) -> TrainConfig:
        return TrainConfig(epochs=self.epochs, pair_batch=self.pair_batch,
                           lr=self.lr, seed=self.seed)

    def prepare_graphs(self, X) -> list[HomoGraph]:
        """Input validation plus the build/convert/embed pipeline."""
        items = list(X)
        if items and isinstance(items[0], HomoGraph):
            return _check_graphs(items, HomoGraph)
        records = _check_records(items)
        hetero = CommitGraphBuilder().transform(records)
        homo = GraphTypeConverter(fill_missing=self.fill_missing).transform(hetero)
        return NodeEmbedder(embedder=self.embedder, embed_dim=self.embed_dim,
                            embed_seed=self.seed,
                            vectors_path=self.vectors_path).transform(homo)

    def fit(self, X, y=None):
        graphs = self.prepare_graphs(X)
        if not graphs:
            raise ValueError("fit needs at least one commit")
        input_dim = graphs[0].x.shape[1]
        num_relations = 2 * len(RELATION_KINDS)  # each kind plus its inverse
        model = rgcn.build_model(
            input_dim=input_dim, hidden_dim=self.hidden_dim,
            num_layers=self.layers, num_relations=num_relations,
            decompositions=self._decompositions(),
            num_bases=self.num_bases, num_blocks=self.num_blocks,
            seed=self.seed)
        head = ranking.ScoreHead.create(dim=self.hidden_dim, seed=self.seed + 1)
        self.history_ = ranking.train(model, head, graphs,
                                      self._train_config(), self._loss_config())
        self.model_ = model
        self.head_ = head
        return self

    def predict(self, X) -> list[Ranking]:
        if not hasattr(self, "model_"):
            raise RuntimeError("RootCauseRanker.predict called before fit")
        graphs = self.prepare_graphs(X)
        return [ranking.rank_deletions(self.model_, self.head_, g)
                for g in graphs]

    def predict_one(self, record: CommitRecord) -> Ranking:
        return self.predict([record])[0]

from __future__ import annotations

import numpy as np
import pytest
from sklearn.base import clone
from sklearn.pipeline import Pipeline

from rootrank.diffgraph import HeteroGraph
from rootrank.estimators import (CommitGraphBuilder, GraphTypeConverter,
                                 NodeEmbedder, RootCauseRanker)
from rootrank.homograph import HomoGraph
from rootrank.synth import make_synthetic_corpus


def test_transformers_compose_like_pipeline(corpus):
    stages = Pipeline([
        ("graphs", CommitGraphBuilder()),
        ("homogeneous", GraphTypeConverter()),
        ("embeddings", NodeEmbedder(embed_dim=32)),
    ])
    graphs = stages.fit_transform(corpus)
    assert len(graphs) == len(corpus)
    assert all(isinstance(g, HomoGraph) for g in graphs)
    assert graphs[0].x.shape[1] == 32


def test_builder_rejects_non_records():
    with pytest.raises(TypeError):
        CommitGraphBuilder().transform(["nope"])
    with pytest.raises(TypeError):
        GraphTypeConverter().transform([object()])


def test_get_params_and_clone_round_trip():
    ranker = RootCauseRanker(hidden_dim=24, layers=1, decomposition="block",
                             num_blocks=4, lr=0.5, seed=13)
    params = ranker.get_params()
    assert params["hidden_dim"] == 24 and params["decomposition"] == "block"
    twin = clone(ranker)
    assert twin.get_params() == params
    twin.set_params(hidden_dim=48)
    assert twin.hidden_dim == 48 and ranker.hidden_dim == 24


def test_decomposition_pairs_resolved():
    assert RootCauseRanker(layers=2, decomposition="basis")._decompositions() \
        == ["basis", "basis"]
    assert RootCauseRanker(layers=2, decomposition="basis,block")._decompositions() \
        == ["basis", "block"]
    with pytest.raises(ValueError):
        RootCauseRanker(layers=3, decomposition="basis,block")._decompositions()


def test_fit_predict_on_records_and_graphs():
    records = make_synthetic_corpus(n_commits=12, seed=2)
    ranker = RootCauseRanker(epochs=2, lr=0.02, embed_dim=32, hidden_dim=16,
                             num_bases=4, seed=0)
    ranker.fit(records[:9])
    rankings = ranker.predict(records[9:])
    assert len(rankings) == 3
    assert all(len(r.entries) >= 1 for r in rankings)

    graphs = ranker.prepare_graphs(records[:9])
    twin = clone(ranker).fit(graphs)
    assert np.array_equal(twin.head_.weight, ranker.head_.weight)


def test_predict_before_fit_rejected():
    with pytest.raises(RuntimeError):
        RootCauseRanker().predict([])


def test_ranking_order_matches_labels_on_separable_data():
    records = make_synthetic_corpus(n_commits=24, seed=5)
    ranker = RootCauseRanker(epochs=6, lr=0.02, embed_dim=32, hidden_dim=16,
                             num_bases=4, seed=1)
    ranker.fit(records[:20])
    hits = sum(r.first_rank == 1 for r in ranker.predict(records[20:]))
    assert hits >= 3  # 4 held-out commits, allow one miss

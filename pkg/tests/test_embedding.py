from __future__ import annotations

import numpy as np
import pytest
from hypothesis import given, settings
from hypothesis import strategies as st

from rootrank.diffgraph import build_graph
from rootrank.embedding import (EmbeddingError, FileEmbedder,
                                HashedBagEmbedder, embed_graph, fnv1a64,
                                read_embedding_file, text_key,
                                write_embedding_file)
from rootrank.homograph import merge

from conftest import motivation_commit


def test_fnv1a64_reference_vectors():
    # published FNV-1a 64-bit test vectors
    assert fnv1a64(b"") == 0xCBF29CE484222325
    assert fnv1a64(b"a") == 0xAF63DC4C8601EC8C
    assert fnv1a64(b"foobar") == 0x85944171F73967E8


def test_hashed_embedder_empty_text_zero_vector():
    emb = HashedBagEmbedder(dim=16, seed=0)
    assert not emb.embed("").any()


def test_hashed_embedder_unit_norm():
    emb = HashedBagEmbedder(dim=32, seed=3)
    for text in ("int m = n;", "return a + b;", "x"):
        assert np.linalg.norm(emb.embed(text)) == pytest.approx(1.0, abs=1e-6)


def test_hashed_embedder_spacing_insensitive():
    emb = HashedBagEmbedder(dim=64, seed=1)
    assert np.array_equal(emb.embed("int m = n;"), emb.embed("int m = n ;"))


def test_hashed_embedder_seed_changes_vectors():
    a = HashedBagEmbedder(dim=64, seed=1).embed("int m = n;")
    b = HashedBagEmbedder(dim=64, seed=2).embed("int m = n;")
    assert not np.array_equal(a, b)


def test_hashed_embedder_min_dim():
    with pytest.raises(EmbeddingError):
        HashedBagEmbedder(dim=4)


@settings(max_examples=60, deadline=None)
@given(st.text(max_size=80))
def test_hashed_embedder_deterministic(text):
    emb = HashedBagEmbedder(dim=16, seed=9)
    first = emb.embed(text)
    assert np.array_equal(first, emb.embed(text))
    assert np.isfinite(first).all()


def test_embedding_file_round_trip(tmp_path):
    emb = HashedBagEmbedder(dim=24, seed=5)
    texts = ["int a = 1;", "use(a);", "return a;"]
    path = tmp_path / "vecs.bin"
    count = write_embedding_file(path, 24, {t: emb.embed(t) for t in texts})
    assert count == 3
    dim, table = read_embedding_file(path)
    assert dim == 24
    assert list(table) == sorted(table)
    for t in texts:
        assert np.array_equal(table[text_key(t)], emb.embed(t))


def test_embedding_file_corrupt_header(tmp_path):
    path = tmp_path / "bad.bin"
    path.write_bytes(b"NOPE" + b"\x00" * 16)
    with pytest.raises(EmbeddingError, match="magic"):
        read_embedding_file(path)


def test_embedding_file_truncated(tmp_path):
    emb = HashedBagEmbedder(dim=8, seed=5)
    path = tmp_path / "t.bin"
    write_embedding_file(path, 8, {"x": emb.embed("x")})
    path.write_bytes(path.read_bytes()[:-4])
    with pytest.raises(EmbeddingError, match="truncated"):
        read_embedding_file(path)


def test_embedding_file_collision_detected(tmp_path, monkeypatch):
    import rootrank.embedding as mod

    monkeypatch.setattr(mod, "text_key", lambda text: 42)
    with pytest.raises(EmbeddingError, match="collision"):
        write_embedding_file(tmp_path / "c.bin", 8,
                             [("a", np.zeros(8)), ("b", np.zeros(8))])


def test_file_embedder_lookup_and_fallback(tmp_path):
    hashed = HashedBagEmbedder(dim=16, seed=2)
    path = tmp_path / "v.bin"
    write_embedding_file(path, 16, {"known();": hashed.embed("known();")})

    strict = FileEmbedder(path)
    assert np.array_equal(strict.embed("known();"), hashed.embed("known();"))
    with pytest.raises(EmbeddingError, match="unknown"):
        strict.embed("unknown();")

    soft = FileEmbedder(path, fallback=hashed)
    assert np.array_equal(soft.embed("unknown();"), hashed.embed("unknown();"))


def test_embed_graph_shape_and_duplicates():
    graph = merge(build_graph(motivation_commit()))
    emb = HashedBagEmbedder(dim=48, seed=0)
    out = embed_graph(graph, emb)
    assert out.x.shape == (12, 48)
    texts = list(out.node_text)
    for i, a in enumerate(texts):
        for j, b in enumerate(texts):
            if a == b:
                assert np.array_equal(out.x[i], out.x[j])


def test_embed_graph_matches_stored_vectors_bit_exact(tmp_path):
    graph = merge(build_graph(motivation_commit()))
    hashed = HashedBagEmbedder(dim=32, seed=11)
    path = tmp_path / "v.bin"
    write_embedding_file(path, 32, {t: hashed.embed(t) for t in graph.node_text})
    out = embed_graph(graph, FileEmbedder(path))
    for i, text in enumerate(graph.node_text):
        assert np.array_equal(out.x[i].astype(np.float32), hashed.embed(text))


def test_embed_graph_rejects_non_finite():
    class BadEmbedder:
        name = "bad"
        dim = 8

        def embed(self, text):
            return np.full(8, np.nan)

    graph = merge(build_graph(motivation_commit()))
    with pytest.raises(EmbeddingError, match="non-finite"):
        embed_graph(graph, BadEmbedder())

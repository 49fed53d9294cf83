"""Fixed-length line embeddings and the precomputed-vector file format.

Two embedders are provided: a seeded feature-hashing bag of tokens (the
self-contained default) and a lookup into a binary file of vectors
produced offline by a code language model. The file format is bit-exact:

    magic "RCEM" | version u32 | dim u32 | count u64     (little-endian)
    count records of: key u64 (FNV-1a of UTF-8 text) | dim * f32

Keys are strictly increasing and unique.
"""
from __future__ import annotations

import struct
from dataclasses import dataclass
from pathlib import Path
from typing import Iterable, Mapping, Protocol

import numpy as np

from . import analyzer
from .homograph import HomoGraph

MAGIC = b"RCEM"
FORMAT_VERSION = 1

_FNV_OFFSET = 0xCBF29CE484222325
_FNV_PRIME = 0x100000001B3
_U64 = 0xFFFFFFFFFFFFFFFF


class EmbeddingError(ValueError):
    pass


def fnv1a64(data: bytes) -> int:
    """64-bit FNV-1a; the key function of the embedding file format."""
    h = _FNV_OFFSET
    for byte in data:
        h ^= byte
        h = (h * _FNV_PRIME) & _U64
    return h


def text_key(text: str) -> int:
    return fnv1a64(text.encode("utf-8"))


class Embedder(Protocol):
    name: str
    dim: int

    def embed(self, text: str) -> np.ndarray: ...


@dataclass(frozen=True)
class HashedBagEmbedder:
    """Signed token-count hashing, L2-normalized; deterministic per seed."""

    dim: int
    seed: int = 0
    name: str = "hashed"

    def __post_init__(self) -> None:
        if self.dim < 8:
            raise EmbeddingError(f"embedding dim {self.dim} must be >= 8")

    def embed(self, text: str) -> np.ndarray:
        vec = np.zeros(self.dim, dtype=np.float64)
        for token in analyzer.tokenize_line(text):
            h = fnv1a64(f"{self.seed}:{token.text}".encode("utf-8"))
            sign = 1.0 if h & (1 << 63) else -1.0
            vec[h % self.dim] += sign
        norm = float(np.linalg.norm(vec))
        if norm > 0.0:
            vec /= norm
        return vec.astype(np.float32)


def write_embedding_file(path: str | Path, dim: int,
                         vectors: Mapping[str, np.ndarray] | Iterable[tuple[str, np.ndarray]]) -> int:
    """Write one record per distinct text; returns the record count.

    Two distinct texts hashing to the same key is a build-time error.
    """
    items = vectors.items() if isinstance(vectors, Mapping) else vectors
    keyed: dict[int, tuple[str, np.ndarray]] = {}
    for text, vec in items:
        vec = np.asarray(vec, dtype="<f4").reshape(-1)
        if vec.shape[0] != dim:
            raise EmbeddingError(
                f"vector for {text!r} has dim {vec.shape[0]}, expected {dim}")
        key = text_key(text)
        if key in keyed:
            prior_text, prior_vec = keyed[key]
            if prior_text != text:
                raise EmbeddingError(
                    f"key collision between {prior_text!r} and {text!r}")
            continue
        keyed[key] = (text, vec)
    path = Path(path)
    with path.open("wb") as fh:
        fh.write(MAGIC)
        fh.write(struct.pack("<IIQ", FORMAT_VERSION, dim, len(keyed)))
        for key in sorted(keyed):
            fh.write(struct.pack("<Q", key))
            fh.write(keyed[key][1].tobytes())
    return len(keyed)


def read_embedding_file(path: str | Path) -> tuple[int, dict[int, np.ndarray]]:
    """Parse and validate an embedding file; returns (dim, key -> vector)."""
    raw = Path(path).read_bytes()
    if len(raw) < 20 or raw[:4] != MAGIC:
        raise EmbeddingError(f"{path}: corrupt header (bad magic)")
    version, dim, count = struct.unpack_from("<IIQ", raw, 4)
    if version != FORMAT_VERSION:
        raise EmbeddingError(f"{path}: unsupported format version {version}")
    record = 8 + 4 * dim
    expected = 20 + record * count
    if len(raw) != expected:
        raise EmbeddingError(
            f"{path}: truncated file ({len(raw)} bytes, expected {expected})")
    table: dict[int, np.ndarray] = {}
    prev_key = -1
    offset = 20
    for _ in range(count):
        (key,) = struct.unpack_from("<Q", raw, offset)
        if key <= prev_key:
            raise EmbeddingError(f"{path}: keys not strictly increasing")
        prev_key = key
        vec = np.frombuffer(raw, dtype="<f4", count=dim, offset=offset + 8)
        table[key] = vec.copy()
        offset += record
    return dim, table


class FileEmbedder:
    """Lookup of precomputed vectors by line-text hash."""

    def __init__(self, path: str | Path, fallback: Embedder | None = None):
        self.dim, self._table = read_embedding_file(path)
        self.name = f"file:{path}"
        self.fallback = fallback
        if fallback is not None and fallback.dim != self.dim:
            raise EmbeddingError(
                f"fallback dim {fallback.dim} != file dim {self.dim}")

    def embed(self, text: str) -> np.ndarray:
        vec = self._table.get(text_key(text))
        if vec is not None:
            return vec
        if self.fallback is not None:
            return self.fallback.embed(text)
        raise EmbeddingError(f"no stored embedding for line {text!r}")


def embed_graph(graph: HomoGraph, embedder: Embedder) -> HomoGraph:
    """Replace the node feature matrix with per-line embeddings."""
    rows = np.zeros((graph.num_nodes, embedder.dim), dtype=np.float64)
    for i, text in enumerate(graph.node_text):
        rows[i] = embedder.embed(text)
    if not np.all(np.isfinite(rows)):
        bad = int(np.argwhere(~np.isfinite(rows).all(axis=1))[0][0])
        raise EmbeddingError(f"non-finite embedding for node {bad} "
                             f"({graph.node_text[bad]!r})")
    return graph.with_x(rows)

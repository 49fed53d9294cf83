"""Conversion of typed graphs into a single homogeneous graph.

Per-type feature columns are scanned for dimension conflicts, optionally
padded with typed dummy values (NaN / False / -1), restricted to keys
present in every type, then row-concatenated in a fixed type order. Type
identity survives as integer node_type / edge_type vectors, so the
conversion is lossless for every retained key.
"""
from __future__ import annotations

import base64
import json
from dataclasses import dataclass, replace
from typing import Mapping

import numpy as np

from .diffgraph import RELATION_KINDS, HeteroGraph

NODE_TYPES = ("deleted", "added")

TypedStore = dict[str, dict[str, np.ndarray]]  # type name -> key -> column


class ConversionError(ValueError):
    pass


@dataclass(frozen=True)
class FeatureStore:
    node: TypedStore
    edge: TypedStore


@dataclass(frozen=True)
class HomoGraph:
    commit_id: str
    num_nodes: int
    edges: np.ndarray                       # (E, 2) int64, re-indexed endpoints
    node_type: np.ndarray                   # (N,) int64
    edge_type: np.ndarray                   # (E,) int64
    node_type_names: tuple[str, ...]
    edge_type_names: tuple[str, ...]
    node_features: Mapping[str, np.ndarray]  # retained keys, original dtypes
    edge_features: Mapping[str, np.ndarray]
    x: np.ndarray                           # (N, D) numeric view / embeddings
    y: np.ndarray                           # (E, D_e) numeric edge view
    node_text: tuple[str, ...]
    node_ref: tuple[tuple[str, int], ...]   # (path, line_no) per node
    node_label: np.ndarray                  # (N,) bool, root-cause flags

    @property
    def num_edges(self) -> int:
        return int(self.edges.shape[0])

    def with_x(self, x: np.ndarray) -> "HomoGraph":
        return replace(self, x=x)


def _column(arr: np.ndarray) -> np.ndarray:
    if arr.ndim == 1:
        return arr.reshape(-1, 1)
    if arr.ndim == 2:
        return arr
    raise ConversionError(f"feature column has unsupported rank {arr.ndim}")


def _dummy_value(dtype: np.dtype):
    if np.issubdtype(dtype, np.floating):
        return np.nan
    if np.issubdtype(dtype, np.bool_):
        return False
    if np.issubdtype(dtype, np.integer):
        return -1
    raise ConversionError(f"no dummy value for dtype {dtype}")


def scan_dims(store: TypedStore) -> dict[str, int]:
    """Width of every key seen anywhere; conflicting widths are an error."""
    widths: dict[str, int] = {}
    for type_name, columns in store.items():
        for key, col in columns.items():
            width = _column(col).shape[1]
            if key in widths and widths[key] != width:
                raise ConversionError(
                    f"key '{key}' has width {width} in type '{type_name}' "
                    f"but {widths[key]} elsewhere")
            widths.setdefault(key, width)
    return widths


def key_presence(store: TypedStore) -> dict[str, int]:
    """Number of types in which each key is present."""
    presence: dict[str, int] = {}
    for columns in store.values():
        for key in columns:
            presence[key] = presence.get(key, 0) + 1
    return presence


def fill_missing(store: TypedStore, counts: Mapping[str, int]) -> TypedStore:
    """Pad keys absent from a type with dummy rows (NaN / False / -1)."""
    widths = scan_dims(store)
    dtypes: dict[str, np.dtype] = {}
    for columns in store.values():
        for key, col in columns.items():
            dtypes.setdefault(key, col.dtype)
    filled: TypedStore = {}
    for type_name, columns in store.items():
        new_columns = dict(columns)
        for key in widths:
            if key not in new_columns:
                dtype = dtypes[key]
                value = _dummy_value(dtype)
                n = counts[type_name]
                new_columns[key] = np.full((n, widths[key]), value, dtype=dtype)
        filled[type_name] = new_columns
    return filled


def valid_keys(store: TypedStore) -> set[str]:
    """Keys present in every type (intersection semantics)."""
    presence = key_presence(store)
    return {key for key, n in presence.items() if n == len(store)}


def store_from_graph(graph: HeteroGraph) -> FeatureStore:
    """Default raw features: line number, version flag, and changed flag on
    nodes; a unit weight on edges. Every type is present, possibly empty."""
    node: TypedStore = {}
    groups = {"deleted": graph.deleted_nodes, "added": graph.added_nodes}
    for type_name in NODE_TYPES:
        members = groups[type_name]
        node[type_name] = {
            "line_no": np.array([n.line_no for n in members], dtype=np.int64),
            "is_old": np.array([n.version == "old" for n in members], dtype=np.bool_),
            "changed": np.array([n.changed for n in members], dtype=np.bool_),
        }
    edge: TypedStore = {}
    for kind in RELATION_KINDS:
        count = sum(1 for e in graph.edges if e.kind == kind)
        edge[kind] = {"weight": np.ones(count, dtype=np.float32)}
    return FeatureStore(node=node, edge=edge)


def merge(graph: HeteroGraph, store: FeatureStore | None = None,
          fill: bool = False) -> HomoGraph:
    """Build the homogeneous graph: fixed type order (deleted, added for
    nodes; relation declaration order for edges), contiguous re-indexed
    ids, and type vectors built by repeating each type id per count."""
    if store is None:
        store = store_from_graph(graph)

    groups = {name: [] for name in NODE_TYPES}
    for pos, node in enumerate(graph.nodes):
        type_name = "deleted" if node.version == "old" else "added"
        groups[type_name].append(pos)
    counts = {name: len(groups[name]) for name in NODE_TYPES}

    node_store = store.node
    if fill:
        node_store = fill_missing(node_store, counts)
    keys = valid_keys(node_store)
    if not keys:
        raise ConversionError("no node feature key is present in every node type")
    scan_dims(node_store)

    id_to_pos = {n.id: i for i, n in enumerate(graph.nodes)}
    global_index: dict[int, int] = {}
    offset = 0
    for type_name in NODE_TYPES:
        for local, pos in enumerate(groups[type_name]):
            global_index[pos] = offset + local
        offset += counts[type_name]
    order = sorted(global_index, key=global_index.get)

    node_features = {}
    for key in sorted(keys):
        parts = [_column(node_store[name][key]) for name in NODE_TYPES]
        for name, part in zip(NODE_TYPES, parts):
            if part.shape[0] != counts[name]:
                raise ConversionError(
                    f"key '{key}' has {part.shape[0]} rows for type "
                    f"'{name}' but the type has {counts[name]} nodes")
        node_features[key] = np.concatenate(parts, axis=0)
    node_type = np.repeat(np.arange(len(NODE_TYPES), dtype=np.int64),
                          [counts[n] for n in NODE_TYPES])

    edge_groups = {kind: [] for kind in RELATION_KINDS}
    for e in graph.edges:
        edge_groups[e.kind].append(e)
    edge_counts = {kind: len(edge_groups[kind]) for kind in RELATION_KINDS}

    edge_store = store.edge
    if fill:
        edge_store = fill_missing(edge_store, edge_counts)
    edge_keys = valid_keys(edge_store)
    scan_dims(edge_store)

    edge_rows = []
    for kind in RELATION_KINDS:
        for e in edge_groups[kind]:
            edge_rows.append((global_index[id_to_pos[e.src]],
                              global_index[id_to_pos[e.dst]]))
    edges = (np.array(edge_rows, dtype=np.int64).reshape(-1, 2)
             if edge_rows else np.zeros((0, 2), dtype=np.int64))
    edge_type = np.repeat(np.arange(len(RELATION_KINDS), dtype=np.int64),
                          [edge_counts[k] for k in RELATION_KINDS])

    edge_features = {}
    for key in sorted(edge_keys):
        parts = [_column(edge_store[kind][key]) for kind in RELATION_KINDS]
        for kind, part in zip(RELATION_KINDS, parts):
            if part.shape[0] != edge_counts[kind]:
                raise ConversionError(
                    f"edge key '{key}' has {part.shape[0]} rows for kind "
                    f"'{kind}' but the kind has {edge_counts[kind]} edges")
        edge_features[key] = np.concatenate(parts, axis=0)

    x = (np.concatenate([node_features[k].astype(np.float64) for k in sorted(keys)], axis=1)
         if keys else np.zeros((len(graph.nodes), 0)))
    y = (np.concatenate([edge_features[k].astype(np.float64) for k in sorted(edge_keys)], axis=1)
         if edge_keys else np.zeros((edges.shape[0], 0)))

    nodes_in_order = [graph.nodes[pos] for pos in order]
    return HomoGraph(
        commit_id=graph.commit_id,
        num_nodes=len(graph.nodes),
        edges=edges,
        node_type=node_type,
        edge_type=edge_type,
        node_type_names=NODE_TYPES,
        edge_type_names=RELATION_KINDS,
        node_features=node_features,
        edge_features=edge_features,
        x=x,
        y=y,
        node_text=tuple(n.text for n in nodes_in_order),
        node_ref=tuple((n.path, n.line_no) for n in nodes_in_order),
        node_label=np.array([n.is_root_cause for n in nodes_in_order], dtype=bool),
    )


def to_json(graph: HomoGraph) -> str:
    def blob(arr: np.ndarray) -> str:
        return base64.b64encode(
            np.ascontiguousarray(arr, dtype="<f4").tobytes()).decode("ascii")

    payload = {
        "commit_id": graph.commit_id,
        "counts": {"nodes": graph.num_nodes, "edges": graph.num_edges},
        "type_maps": {
            "node": {name: i for i, name in enumerate(graph.node_type_names)},
            "edge": {name: i for i, name in enumerate(graph.edge_type_names)},
        },
        "feature_widths": {
            "x": int(graph.x.shape[1]),
            "y": int(graph.y.shape[1]),
        },
        "edges": graph.edges.tolist(),
        "node_type": graph.node_type.tolist(),
        "edge_type": graph.edge_type.tolist(),
        "node_text": list(graph.node_text),
        "node_ref": [[path, line] for path, line in graph.node_ref],
        "node_label": graph.node_label.astype(int).tolist(),
        "x": blob(graph.x),
        "y": blob(graph.y),
    }
    return json.dumps(payload, sort_keys=True)


def from_json(text: str) -> HomoGraph:
    obj = json.loads(text)

    def unblob(b: str, rows: int, cols: int) -> np.ndarray:
        data = np.frombuffer(base64.b64decode(b), dtype="<f4")
        return data.reshape(rows, cols).astype(np.float64)

    n = obj["counts"]["nodes"]
    m = obj["counts"]["edges"]
    node_names = tuple(sorted(obj["type_maps"]["node"], key=obj["type_maps"]["node"].get))
    edge_names = tuple(sorted(obj["type_maps"]["edge"], key=obj["type_maps"]["edge"].get))
    return HomoGraph(
        commit_id=obj.get("commit_id", ""),
        num_nodes=n,
        edges=np.array(obj["edges"], dtype=np.int64).reshape(-1, 2),
        node_type=np.array(obj["node_type"], dtype=np.int64),
        edge_type=np.array(obj["edge_type"], dtype=np.int64),
        node_type_names=node_names,
        edge_type_names=edge_names,
        node_features={},
        edge_features={},
        x=unblob(obj["x"], n, obj["feature_widths"]["x"]),
        y=unblob(obj["y"], m, obj["feature_widths"]["y"]),
        node_text=tuple(obj["node_text"]),
        node_ref=tuple((p, int(l)) for p, l in obj["node_ref"]),
        node_label=np.array(obj["node_label"], dtype=bool),
    )

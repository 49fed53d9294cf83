"""Relational graph convolution with decomposed weights and exact gradients.

Forward propagation per node i at layer l:

    h_i' = sigma( sum_r sum_{j in N_i^r} (1/c_{i,r}) W_r h_j  +  W_0 h_i )

where N_i^r are in-neighbors of i under relation r and c_{i,r} = |N_i^r|.
Per-relation weights are never stored dense: they are composed on demand
from either a shared basis set (W_r = sum_b a_rb V_b) or a block-diagonal
stack of small square matrices. Reverse-mode gradients are implemented by
hand so training has no framework dependency; all math is float64.
"""
from __future__ import annotations

import base64
import json
import math
from dataclasses import dataclass, field
from pathlib import Path
from typing import Sequence

import numpy as np

from .homograph import HomoGraph


class ModelConfigError(ValueError):
    pass


def _glorot(rng: np.random.Generator, shape: tuple[int, ...],
            fan_in: int, fan_out: int) -> np.ndarray:
    bound = math.sqrt(6.0 / (fan_in + fan_out))
    return rng.uniform(-bound, bound, size=shape)


@dataclass
class BasisDecomposition:
    """W_r as a linear combination of shared basis matrices."""

    coeffs: np.ndarray  # (R, B)
    bases: np.ndarray   # (B, d_out, d_in)

    variant = "basis"

    @property
    def num_relations(self) -> int:
        return self.coeffs.shape[0]

    def compose(self, r: int) -> np.ndarray:
        return np.tensordot(self.coeffs[r], self.bases, axes=1)

    def compose_all(self) -> np.ndarray:
        """All relation weights at once, shape (R, d_out, d_in)."""
        return np.tensordot(self.coeffs, self.bases, axes=([1], [0]))

    def parameters(self) -> dict[str, np.ndarray]:
        return {"coeffs": self.coeffs, "bases": self.bases}

    def grads_from_weight_grads(self, weight_grads: np.ndarray) -> dict[str, np.ndarray]:
        # weight_grads: (R, d_out, d_in)
        return {
            "coeffs": np.tensordot(weight_grads, self.bases, axes=([1, 2], [1, 2])),
            "bases": np.tensordot(self.coeffs.T, weight_grads, axes=([1], [0])),
        }


@dataclass
class BlockDecomposition:
    """W_r as a block-diagonal direct sum of small square blocks."""

    blocks: np.ndarray  # (R, B, d_out/B, d_in/B)

    variant = "block"

    @property
    def num_relations(self) -> int:
        return self.blocks.shape[0]

    def compose(self, r: int) -> np.ndarray:
        _, num_blocks, rows, cols = self.blocks.shape
        w = np.zeros((num_blocks * rows, num_blocks * cols))
        for b in range(num_blocks):
            w[b * rows:(b + 1) * rows, b * cols:(b + 1) * cols] = self.blocks[r, b]
        return w

    def compose_all(self) -> np.ndarray:
        num_relations, num_blocks, rows, cols = self.blocks.shape
        w = np.zeros((num_relations, num_blocks * rows, num_blocks * cols))
        for b in range(num_blocks):
            w[:, b * rows:(b + 1) * rows, b * cols:(b + 1) * cols] = self.blocks[:, b]
        return w

    def parameters(self) -> dict[str, np.ndarray]:
        return {"blocks": self.blocks}

    def grads_from_weight_grads(self, weight_grads: np.ndarray) -> dict[str, np.ndarray]:
        _, num_blocks, rows, cols = self.blocks.shape
        grads = np.zeros_like(self.blocks)
        for b in range(num_blocks):
            grads[:, b] = weight_grads[:, b * rows:(b + 1) * rows,
                                       b * cols:(b + 1) * cols]
        return {"blocks": grads}


Decomposition = BasisDecomposition | BlockDecomposition


def compose_weight(dec: Decomposition, r: int) -> np.ndarray:
    """Dense per-relation weight assembled from the decomposition."""
    if r >= dec.num_relations:
        raise ModelConfigError(f"relation index {r} out of range "
                               f"({dec.num_relations} relations)")
    return dec.compose(r)


def make_decomposition(variant: str, num_relations: int, d_in: int, d_out: int,
                       num_bases: int, num_blocks: int,
                       rng: np.random.Generator) -> Decomposition:
    if variant == "basis":
        if num_bases < 1:
            raise ModelConfigError("num_bases must be >= 1")
        bases = _glorot(rng, (num_bases, d_out, d_in), d_in, d_out)
        coeffs = _glorot(rng, (num_relations, num_bases), num_bases, num_relations)
        return BasisDecomposition(coeffs=coeffs, bases=bases)
    if variant == "block":
        if num_blocks < 1:
            raise ModelConfigError("num_blocks must be >= 1")
        if d_in % num_blocks or d_out % num_blocks:
            raise ModelConfigError(
                f"block decomposition needs num_blocks ({num_blocks}) to "
                f"divide both d_in ({d_in}) and d_out ({d_out})")
        rows, cols = d_out // num_blocks, d_in // num_blocks
        blocks = _glorot(rng, (num_relations, num_blocks, rows, cols), cols, rows)
        return BlockDecomposition(blocks=blocks)
    raise ModelConfigError(f"unknown decomposition variant {variant!r}")


@dataclass
class RgcnLayer:
    num_relations: int
    d_in: int
    d_out: int
    w_self: np.ndarray  # (d_out, d_in)
    decomposition: Decomposition
    activation: str  # "relu" | "identity"

    def parameters(self) -> dict[str, np.ndarray]:
        params = {"w_self": self.w_self}
        params.update(self.decomposition.parameters())
        return params


@dataclass
class LayerTrace:
    h_in: np.ndarray
    z: np.ndarray
    messages: list[np.ndarray | None]  # per relation: (N, d_in) aggregate


@dataclass
class ForwardTrace:
    structure: list[tuple[np.ndarray, np.ndarray, np.ndarray]]
    layers: list[LayerTrace] = field(default_factory=list)


def relation_structure(num_nodes: int, edges: np.ndarray, edge_type: np.ndarray,
                       num_relations: int) -> list[tuple[np.ndarray, np.ndarray, np.ndarray]]:
    """Per relation: (src, dst, 1/c) arrays with c = in-degree of dst."""
    if edges.size and int(edge_type.max(initial=0)) >= num_relations:
        raise ModelConfigError(
            f"edge_type {int(edge_type.max())} out of range for "
            f"{num_relations} relations")
    structure = []
    for r in range(num_relations):
        sel = edge_type == r
        if not np.any(sel):
            structure.append((np.zeros(0, dtype=np.int64),
                              np.zeros(0, dtype=np.int64),
                              np.zeros(0)))
            continue
        src = edges[sel, 0]
        dst = edges[sel, 1]
        counts = np.bincount(dst, minlength=num_nodes)
        structure.append((src, dst, 1.0 / counts[dst]))
    return structure


def add_inverse_relations(edges: np.ndarray, edge_type: np.ndarray,
                          num_kinds: int) -> tuple[np.ndarray, np.ndarray]:
    """Append each edge reversed under relation id (kind + num_kinds)."""
    if edges.size == 0:
        return edges.reshape(0, 2), edge_type
    reversed_edges = edges[:, ::-1]
    return (np.concatenate([edges, reversed_edges], axis=0),
            np.concatenate([edge_type, edge_type + num_kinds]))


def layer_forward(layer: RgcnLayer, h: np.ndarray,
                  structure: Sequence[tuple[np.ndarray, np.ndarray, np.ndarray]],
                  ) -> tuple[np.ndarray, LayerTrace]:
    if not np.all(np.isfinite(h)):
        raise ValueError("non-finite node states fed to layer_forward")
    z = h @ layer.w_self.T
    weights = layer.decomposition.compose_all()
    messages: list[np.ndarray | None] = []
    for r in range(layer.num_relations):
        src, dst, inv_count = structure[r]
        if src.size == 0:
            messages.append(None)
            continue
        agg = np.zeros_like(h)
        np.add.at(agg, dst, h[src] * inv_count[:, None])
        messages.append(agg)
        z += agg @ weights[r].T
    if not np.all(np.isfinite(z)):
        bad = int(np.argwhere(~np.isfinite(z).all(axis=1))[0][0])
        raise ValueError(f"non-finite state for node {bad} in layer_forward")
    out = np.maximum(z, 0.0) if layer.activation == "relu" else z
    return out, LayerTrace(h_in=h, z=z, messages=messages)


def layer_backward(layer: RgcnLayer, trace: LayerTrace, grad_out: np.ndarray,
                   structure: Sequence[tuple[np.ndarray, np.ndarray, np.ndarray]],
                   ) -> tuple[dict[str, np.ndarray], np.ndarray]:
    if layer.activation == "relu":
        grad_z = grad_out * (trace.z > 0.0)
    else:
        grad_z = grad_out
    grads = {"w_self": grad_z.T @ trace.h_in}
    grad_h = grad_z @ layer.w_self
    weights = layer.decomposition.compose_all()
    weight_grads = np.zeros((layer.num_relations, layer.d_out, layer.d_in))
    for r in range(layer.num_relations):
        agg = trace.messages[r]
        if agg is None:
            continue
        weight_grads[r] = grad_z.T @ agg
        grad_agg = grad_z @ weights[r]
        src, dst, inv_count = structure[r]
        np.add.at(grad_h, src, grad_agg[dst] * inv_count[:, None])
    grads.update(layer.decomposition.grads_from_weight_grads(weight_grads))
    return grads, grad_h


@dataclass
class RgcnModel:
    layers: list[RgcnLayer]
    seed: int = 0

    @property
    def num_relations(self) -> int:
        return self.layers[0].num_relations

    @property
    def input_dim(self) -> int:
        return self.layers[0].d_in

    @property
    def output_dim(self) -> int:
        return self.layers[-1].d_out

    def parameters(self) -> list[tuple[str, np.ndarray]]:
        out = []
        for i, layer in enumerate(self.layers):
            for name, arr in layer.parameters().items():
                out.append((f"layer{i}.{name}", arr))
        return out

    def forward(self, x: np.ndarray, edges: np.ndarray | None = None,
                edge_type: np.ndarray | None = None,
                structure: list[tuple[np.ndarray, np.ndarray, np.ndarray]] | None = None,
                ) -> tuple[np.ndarray, ForwardTrace]:
        if structure is None:
            if edges is None or edge_type is None:
                raise ValueError("forward needs either edge arrays or a "
                                 "precomputed relation structure")
            structure = relation_structure(x.shape[0], edges, edge_type,
                                           self.num_relations)
        trace = ForwardTrace(structure=structure)
        h = np.asarray(x, dtype=np.float64)
        for layer in self.layers:
            if h.shape[1] != layer.d_in:
                raise ModelConfigError(
                    f"layer expects d_in {layer.d_in}, got {h.shape[1]}")
            h, layer_trace = layer_forward(layer, h, structure)
            trace.layers.append(layer_trace)
        return h, trace

    def backward(self, trace: ForwardTrace, grad_out: np.ndarray,
                 ) -> tuple[list[dict[str, np.ndarray]], np.ndarray]:
        """Gradients for every layer's parameters and the input states."""
        if not trace.layers:
            raise ValueError("backward called before forward")
        grads: list[dict[str, np.ndarray]] = [None] * len(self.layers)  # type: ignore
        grad_h = grad_out
        for i in range(len(self.layers) - 1, -1, -1):
            grads[i], grad_h = layer_backward(self.layers[i], trace.layers[i],
                                              grad_h, trace.structure)
        return grads, grad_h


def model_forward(model: RgcnModel, graph: HomoGraph) -> np.ndarray:
    """Final node states for a converted graph; relation ids are the graph's
    edge kinds plus one inverse relation per kind."""
    num_kinds = len(graph.edge_type_names)
    if model.num_relations != 2 * num_kinds:
        raise ModelConfigError(
            f"model has {model.num_relations} relations; graph with "
            f"{num_kinds} edge kinds needs {2 * num_kinds}")
    edges, edge_type = add_inverse_relations(graph.edges, graph.edge_type, num_kinds)
    h, _ = model.forward(graph.x, edges, edge_type)
    return h


def build_model(input_dim: int, hidden_dim: int, num_layers: int,
                num_relations: int, decompositions: Sequence[str],
                num_bases: int = 30, num_blocks: int = 8,
                seed: int = 0) -> RgcnModel:
    """Stack layers input_dim -> hidden_dim -> ... with ReLU on hidden
    layers and identity on the last; one decomposition variant per layer."""
    if not 1 <= num_layers <= 5:
        raise ModelConfigError(f"layer count {num_layers} outside [1, 5]")
    if len(decompositions) != num_layers:
        raise ModelConfigError(
            f"{len(decompositions)} decomposition variants for "
            f"{num_layers} layers")
    rng = np.random.default_rng(seed)
    layers = []
    d_in = input_dim
    for i in range(num_layers):
        dec = make_decomposition(decompositions[i], num_relations, d_in,
                                 hidden_dim, num_bases, num_blocks, rng)
        w_self = _glorot(rng, (hidden_dim, d_in), d_in, hidden_dim)
        activation = "identity" if i == num_layers - 1 else "relu"
        layers.append(RgcnLayer(num_relations=num_relations, d_in=d_in,
                                d_out=hidden_dim, w_self=w_self,
                                decomposition=dec, activation=activation))
        d_in = hidden_dim
    return RgcnModel(layers=layers, seed=seed)


def _blob(arr: np.ndarray) -> str:
    return base64.b64encode(
        np.ascontiguousarray(arr, dtype="<f4").tobytes()).decode("ascii")


def _unblob(b: str, shape: tuple[int, ...]) -> np.ndarray:
    arr = np.frombuffer(base64.b64decode(b), dtype="<f4").astype(np.float64)
    return arr.reshape(shape)


def save_checkpoint(path: str | Path, model: RgcnModel,
                    extra: dict[str, np.ndarray] | None = None,
                    meta: dict | None = None) -> None:
    """JSON manifest plus base64 f32 parameter blobs."""
    layers = []
    for layer in model.layers:
        entry = {
            "d_in": layer.d_in,
            "d_out": layer.d_out,
            "activation": layer.activation,
            "variant": layer.decomposition.variant,
            "params": {name: {"shape": list(arr.shape), "data": _blob(arr)}
                       for name, arr in layer.parameters().items()},
        }
        layers.append(entry)
    payload = {
        "format": "rootrank-checkpoint-v1",
        "num_relations": model.num_relations,
        "seed": model.seed,
        "layers": layers,
        "extra": {name: {"shape": list(arr.shape), "data": _blob(arr)}
                  for name, arr in (extra or {}).items()},
        "meta": meta or {},
    }
    Path(path).write_text(json.dumps(payload, sort_keys=True), encoding="utf-8")


def load_checkpoint(path: str | Path) -> tuple[RgcnModel, dict[str, np.ndarray], dict]:
    obj = json.loads(Path(path).read_text(encoding="utf-8"))
    if obj.get("format") != "rootrank-checkpoint-v1":
        raise ModelConfigError(f"{path}: not a model checkpoint")
    num_relations = obj["num_relations"]
    layers = []
    for entry in obj["layers"]:
        params = {name: _unblob(spec["data"], tuple(spec["shape"]))
                  for name, spec in entry["params"].items()}
        if entry["variant"] == "basis":
            dec: Decomposition = BasisDecomposition(coeffs=params["coeffs"],
                                                    bases=params["bases"])
        else:
            dec = BlockDecomposition(blocks=params["blocks"])
        layers.append(RgcnLayer(num_relations=num_relations,
                                d_in=entry["d_in"], d_out=entry["d_out"],
                                w_self=params["w_self"], decomposition=dec,
                                activation=entry["activation"]))
    extra = {name: _unblob(spec["data"], tuple(spec["shape"]))
             for name, spec in obj["extra"].items()}
    return RgcnModel(layers=layers, seed=obj.get("seed", 0)), extra, obj["meta"]

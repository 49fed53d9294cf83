"""Pairwise ranking of deleted lines: scoring head, losses, training loop.

A linear head scores every node; training pairs each root-cause deleted
node i with each non-root deleted node j of the same commit and pushes
P(i above j) = sigmoid(s_i - s_j) toward 1 under a configurable
imbalance-aware loss. At inference the raw scores order the deleted lines.
"""
from __future__ import annotations

import logging
import math
import random
from dataclasses import dataclass
from typing import Sequence

import numpy as np

from .homograph import HomoGraph
from .rgcn import RgcnModel, add_inverse_relations, relation_structure

logger = logging.getLogger(__name__)

LOG_CLAMP = 1e-12

DELETED_TYPE = 0  # node_type id of deleted lines under the fixed type order


class TrainingError(RuntimeError):
    pass


@dataclass
class ScoreHead:
    weight: np.ndarray  # (d,)
    bias: np.ndarray    # (1,)

    @classmethod
    def create(cls, dim: int, seed: int = 0) -> "ScoreHead":
        rng = np.random.default_rng(seed)
        bound = math.sqrt(6.0 / (dim + 1))
        return cls(weight=rng.uniform(-bound, bound, size=dim),
                   bias=np.zeros(1))

    def scores(self, h: np.ndarray) -> np.ndarray:
        return h @ self.weight + self.bias[0]

    def parameters(self) -> list[tuple[str, np.ndarray]]:
        return [("head.weight", self.weight), ("head.bias", self.bias)]


@dataclass(frozen=True)
class LossConfig:
    kind: str = "focal"  # "focal" | "bce" | "bce_weighted"
    alpha_t: float = 0.25
    gamma: float = 2.0
    pos_weight: float = 1.0

    def __post_init__(self) -> None:
        if self.kind not in ("focal", "bce", "bce_weighted"):
            raise ValueError(f"unknown loss kind {self.kind!r}")
        if not 0.0 < self.alpha_t <= 1.0:
            raise ValueError(f"alpha_t {self.alpha_t} outside (0, 1]")
        if self.gamma < 0.0:
            raise ValueError(f"gamma {self.gamma} must be >= 0")
        if self.pos_weight <= 0.0:
            raise ValueError(f"pos_weight {self.pos_weight} must be > 0")


@dataclass(frozen=True)
class TrainConfig:
    epochs: int = 20
    pair_batch: int = 128
    lr: float = 5e-6
    beta1: float = 0.9
    beta2: float = 0.999
    eps: float = 1e-8
    seed: int = 0

    def __post_init__(self) -> None:
        if self.epochs < 1:
            raise ValueError(f"epochs {self.epochs} must be >= 1")
        if self.lr < 0.0:
            raise ValueError(f"lr {self.lr} must be >= 0")


@dataclass(frozen=True)
class RankedLine:
    path: str
    line_no: int
    score: float
    is_root_cause: bool


@dataclass(frozen=True)
class Ranking:
    commit_id: str
    entries: tuple[RankedLine, ...]  # descending score
    first_rank: int | None           # 1-based; None when no line is labeled

    def __len__(self) -> int:
        return len(self.entries)


def pair_probability(s_i: float, s_j: float) -> float:
    """P(i ranked above j) = logistic(s_i - s_j), overflow-safe.

    The result is clamped into the open interval (0, 1) at the nearest
    representable doubles so downstream logs never see 0 or 1 exactly.
    """
    d = s_i - s_j
    if not (math.isfinite(s_i) and math.isfinite(s_j)):
        raise ValueError("pair_probability needs finite scores")
    if d >= 0.0:
        p = 1.0 / (1.0 + math.exp(-d)) if d < 745.0 else 1.0
    else:
        e = math.exp(d) if d > -745.0 else 0.0
        p = e / (1.0 + e)
    return min(max(p, 5e-324), math.nextafter(1.0, 0.0))


def focal_loss(p: float, t: int, alpha_t: float, gamma: float) -> float:
    p_t = p if t == 1 else 1.0 - p
    return -alpha_t * (1.0 - p_t) ** gamma * math.log(max(p_t, LOG_CLAMP))


def bce_loss(p: float, t: int, pos_weight: float = 1.0) -> float:
    if t == 1:
        return -pos_weight * math.log(max(p, LOG_CLAMP))
    return -math.log(max(1.0 - p, LOG_CLAMP))


def loss_value(p: float, t: int, cfg: LossConfig) -> float:
    if cfg.kind == "focal":
        return focal_loss(p, t, cfg.alpha_t, cfg.gamma)
    if cfg.kind == "bce":
        return bce_loss(p, t)
    return bce_loss(p, t, pos_weight=cfg.pos_weight)


def loss_grad_wrt_p(p: float, t: int, cfg: LossConfig) -> float:
    """d(loss)/dp for the configured loss."""
    if cfg.kind == "focal":
        p_t = max(p if t == 1 else 1.0 - p, LOG_CLAMP)
        g = -cfg.alpha_t * (1.0 - p_t) ** cfg.gamma / p_t
        if cfg.gamma > 0.0:
            g += cfg.alpha_t * cfg.gamma * (1.0 - p_t) ** (cfg.gamma - 1.0) \
                * math.log(p_t)
        return g if t == 1 else -g
    pos = cfg.pos_weight if cfg.kind == "bce_weighted" else 1.0
    if t == 1:
        return -pos / max(p, LOG_CLAMP)
    return 1.0 / max(1.0 - p, LOG_CLAMP)


@dataclass(frozen=True)
class Pair:
    graph_index: int
    i: int  # node row of the root-cause deleted line
    j: int  # node row of a non-root deleted line
    t: int = 1


def deleted_rows(graph: HomoGraph) -> np.ndarray:
    return np.flatnonzero(graph.node_type == DELETED_TYPE)


def make_pairs(graphs: Sequence[HomoGraph], seed: int) -> list[Pair]:
    """All (root, non-root) crosses per commit, shuffled deterministically.

    Commits without both a root and a non-root deleted line are skipped
    with a warning; they cannot constrain a pairwise objective.
    """
    pairs: list[Pair] = []
    for g_idx, graph in enumerate(graphs):
        rows = deleted_rows(graph)
        roots = [int(r) for r in rows if graph.node_label[r]]
        non_roots = [int(r) for r in rows if not graph.node_label[r]]
        if not roots or not non_roots:
            logger.warning("commit '%s' skipped for training: needs both "
                           "root and non-root deleted lines", graph.commit_id)
            continue
        for i in roots:
            for j in non_roots:
                pairs.append(Pair(graph_index=g_idx, i=i, j=j))
    random.Random(f"pairs|{seed}").shuffle(pairs)
    return pairs


class Adam:
    """Adam with bias correction over named parameter arrays (in place)."""

    def __init__(self, params: list[tuple[str, np.ndarray]], lr: float,
                 beta1: float = 0.9, beta2: float = 0.999, eps: float = 1e-8):
        self.params = params
        self.lr = lr
        self.beta1 = beta1
        self.beta2 = beta2
        self.eps = eps
        self.t = 0
        self.m = {name: np.zeros_like(arr) for name, arr in params}
        self.v = {name: np.zeros_like(arr) for name, arr in params}

    def step(self, grads: dict[str, np.ndarray]) -> None:
        self.t += 1
        b1, b2 = self.beta1, self.beta2
        for name, arr in self.params:
            g = grads[name]
            self.m[name] = b1 * self.m[name] + (1 - b1) * g
            self.v[name] = b2 * self.v[name] + (1 - b2) * g * g
            m_hat = self.m[name] / (1 - b1 ** self.t)
            v_hat = self.v[name] / (1 - b2 ** self.t)
            arr -= self.lr * m_hat / (np.sqrt(v_hat) + self.eps)


@dataclass
class EpochStats:
    epoch: int
    mean_loss: float
    mean_p: float


def graph_structure(graph: HomoGraph, num_relations: int):
    """Relation structure with inverse relations; static per graph."""
    num_kinds = len(graph.edge_type_names)
    edges, edge_type = add_inverse_relations(graph.edges, graph.edge_type,
                                             num_kinds)
    return relation_structure(graph.num_nodes, edges, edge_type, num_relations)


def train(model: RgcnModel, head: ScoreHead, graphs: Sequence[HomoGraph],
          train_cfg: TrainConfig, loss_cfg: LossConfig) -> list[EpochStats]:
    """Optimize model and head in place; returns per-epoch loss history."""
    trainable = list(graphs)
    if not make_pairs(trainable, seed=train_cfg.seed):
        raise TrainingError("no trainable commit: every commit lacks either "
                            "a root-cause or a non-root deleted line")
    structures = [graph_structure(g, model.num_relations) for g in trainable]
    params = model.parameters() + head.parameters()
    optimizer = Adam(params, lr=train_cfg.lr, beta1=train_cfg.beta1,
                     beta2=train_cfg.beta2, eps=train_cfg.eps)
    history: list[EpochStats] = []
    for epoch in range(train_cfg.epochs):
        pairs = make_pairs(trainable, seed=train_cfg.seed * 100003 + epoch)
        losses: list[float] = []
        probs: list[float] = []
        for batch_start in range(0, len(pairs), train_cfg.pair_batch):
            batch = pairs[batch_start:batch_start + train_cfg.pair_batch]
            by_graph: dict[int, list[Pair]] = {}
            for pair in batch:
                by_graph.setdefault(pair.graph_index, []).append(pair)
            grads = {name: np.zeros_like(arr) for name, arr in params}
            for g_idx in sorted(by_graph):
                graph = trainable[g_idx]
                h, trace = model.forward(graph.x, structure=structures[g_idx])
                scores = head.scores(h)
                grad_scores = np.zeros_like(scores)
                for pair in by_graph[g_idx]:
                    p = pair_probability(scores[pair.i], scores[pair.j])
                    value = loss_value(p, pair.t, loss_cfg)
                    if not math.isfinite(value):
                        raise TrainingError(
                            f"non-finite loss at epoch {epoch}, batch "
                            f"{batch_start // train_cfg.pair_batch}")
                    losses.append(value)
                    probs.append(p)
                    g_d = loss_grad_wrt_p(p, pair.t, loss_cfg) * p * (1.0 - p)
                    grad_scores[pair.i] += g_d
                    grad_scores[pair.j] -= g_d
                grad_scores /= len(batch)
                grads["head.weight"] += h.T @ grad_scores
                grads["head.bias"][0] += grad_scores.sum()
                grad_h = np.outer(grad_scores, head.weight)
                layer_grads, _ = model.backward(trace, grad_h)
                for i, layer_grad in enumerate(layer_grads):
                    for name, g in layer_grad.items():
                        grads[f"layer{i}.{name}"] += g
            optimizer.step(grads)
        history.append(EpochStats(epoch=epoch,
                                  mean_loss=float(np.mean(losses)),
                                  mean_p=float(np.mean(probs))))
    return history


def rank_deletions(model: RgcnModel, head: ScoreHead,
                   graph: HomoGraph) -> Ranking:
    """Score and order a commit's deleted lines, ties by (line_no, path)."""
    rows = deleted_rows(graph)
    if rows.size == 0:
        raise ValueError(f"commit '{graph.commit_id}' has no deleted lines to rank")
    h, _ = model.forward(graph.x, structure=graph_structure(graph, model.num_relations))
    scores = head.scores(h)
    entries = []
    for r in rows:
        path, line_no = graph.node_ref[r]
        entries.append(RankedLine(path=path, line_no=line_no,
                                  score=float(scores[r]),
                                  is_root_cause=bool(graph.node_label[r])))
    entries.sort(key=lambda e: (-e.score, e.line_no, e.path))
    first_rank = None
    for pos, entry in enumerate(entries, start=1):
        if entry.is_root_cause:
            first_rank = pos
            break
    return Ranking(commit_id=graph.commit_id, entries=tuple(entries),
                   first_rank=first_rank)

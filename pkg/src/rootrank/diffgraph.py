"""Typed graph construction over the changed lines of one commit.

Deleted and added lines become nodes. Four relation graphs (control flow,
data dependency, calls, class-member references) are built per file and
version over the full source, then edges are lifted onto changed nodes:
two changed nodes are connected when a directed path exists between them
whose intermediate vertices are all unchanged context lines. Deleted and
added nodes are finally joined by line-mapping edges within diff hunks.
"""
from __future__ import annotations

import difflib
import json
from collections import deque
from dataclasses import dataclass
from typing import Iterable, Sequence

from . import analyzer
from .dataset import CommitRecord, FileChange

RELATION_KINDS = ("CFG", "DDG", "CG", "CMFG", "LINEMAP")
STRUCTURAL_KINDS = RELATION_KINDS[:4]
KIND_INDEX = {kind: i for i, kind in enumerate(RELATION_KINDS)}

# Longest chain of context lines a lifted edge may pass through.
MAX_CONTEXT_PATH = 64

# Token-overlap threshold for pairing a deleted line with an added line.
LINE_MAP_THRESHOLD = 0.6


class GraphError(ValueError):
    pass


@dataclass(frozen=True)
class StmtNode:
    id: int
    version: str  # "old" | "new"
    path: str
    line_no: int
    text: str
    changed: bool = True
    is_root_cause: bool = False


@dataclass(frozen=True)
class Edge:
    src: int
    dst: int
    kind: str


@dataclass(frozen=True)
class RelationGraph:
    """Directed relation over statement lines of one file version."""

    kind: str
    version: str
    adjacency: dict[int, tuple[int, ...]]

    def neighbors(self, line_no: int) -> tuple[int, ...]:
        return self.adjacency.get(line_no, ())


@dataclass(frozen=True)
class HeteroGraph:
    commit_id: str
    nodes: tuple[StmtNode, ...]
    edges: tuple[Edge, ...]

    @property
    def deleted_nodes(self) -> tuple[StmtNode, ...]:
        return tuple(n for n in self.nodes if n.version == "old")

    @property
    def added_nodes(self) -> tuple[StmtNode, ...]:
        return tuple(n for n in self.nodes if n.version == "new")


def _is_skippable(text: str) -> bool:
    """Blank and comment-only lines never become nodes."""
    return not analyzer.tokenize_line(text)


def extract_nodes(commit: CommitRecord) -> tuple[list[StmtNode], list[StmtNode]]:
    """Changed lines as nodes: ids dense from 0, deleted before added,
    file order then line order; blank/comment-only lines are skipped."""
    deleted: list[StmtNode] = []
    added: list[StmtNode] = []
    next_id = 0
    for f in commit.files:
        for line in sorted(f.deleted, key=lambda c: c.line_no):
            if _is_skippable(line.text):
                continue
            deleted.append(StmtNode(id=next_id, version="old", path=f.path,
                                    line_no=line.line_no, text=line.text,
                                    is_root_cause=line.is_root_cause))
            next_id += 1
    for f in commit.files:
        for line in sorted(f.added, key=lambda c: c.line_no):
            if _is_skippable(line.text):
                continue
            added.append(StmtNode(id=next_id, version="new", path=f.path,
                                  line_no=line.line_no, text=line.text))
            next_id += 1
    return deleted, added


def build_relation_graphs(source: str, version: str) -> list[RelationGraph]:
    """CFG, DDG, CG, and CMFG over one file version, in that order."""
    analysis = analyzer.analyze_file(source)
    edge_sets = {
        "CFG": analyzer.cfg_edges(analysis),
        "DDG": analyzer.ddg_edges(analysis),
        "CG": analyzer.cg_edges(analysis),
        "CMFG": analyzer.cmfg_edges(analysis),
    }
    graphs = []
    for kind in STRUCTURAL_KINDS:
        adjacency: dict[int, list[int]] = {}
        for src, dst in sorted(edge_sets[kind]):
            adjacency.setdefault(src, []).append(dst)
        graphs.append(RelationGraph(
            kind=kind, version=version,
            adjacency={k: tuple(v) for k, v in adjacency.items()}))
    return graphs


def lift_edges(rel: RelationGraph,
               changed: Sequence[StmtNode]) -> list[tuple[int, int, str]]:
    """Edges between changed nodes joined by a context-only path.

    An edge (u, v, rel.kind) is emitted iff u != v and a directed path
    u ~> v exists in `rel` whose intermediate vertices are all unchanged
    lines. Chains longer than MAX_CONTEXT_PATH context lines are ignored.
    """
    by_line = {n.line_no: n for n in changed}
    for n in changed:
        if n.version != rel.version:
            raise GraphError(f"node version {n.version!r} does not match "
                             f"relation graph version {rel.version!r}")
    out: list[tuple[int, int, str]] = []
    for node in changed:
        reached: set[int] = set()
        visited: set[int] = set()
        queue: deque[tuple[int, int]] = deque()
        for nbr in rel.neighbors(node.line_no):
            queue.append((nbr, 0))
        while queue:
            line, depth = queue.popleft()
            if line in by_line:
                if line != node.line_no:
                    reached.add(line)
                continue
            if line in visited or depth >= MAX_CONTEXT_PATH:
                continue
            visited.add(line)
            for nbr in rel.neighbors(line):
                queue.append((nbr, depth + 1))
        for line in sorted(reached):
            out.append((node.id, by_line[line].id, rel.kind))
    return out


def _token_texts(text: str) -> list[str]:
    return [t.text for t in analyzer.tokenize_line(text)]


def _lcs_len(a: Sequence[str], b: Sequence[str]) -> int:
    if not a or not b:
        return 0
    prev = [0] * (len(b) + 1)
    for x in a:
        cur = [0]
        for j, y in enumerate(b, start=1):
            cur.append(prev[j - 1] + 1 if x == y else max(prev[j], cur[j - 1]))
        prev = cur
    return prev[-1]


def token_similarity(text_a: str, text_b: str) -> float:
    """2*LCS / (len_a + len_b) over token sequences, in [0, 1]."""
    ta, tb = _token_texts(text_a), _token_texts(text_b)
    if not ta and not tb:
        return 0.0
    return 2.0 * _lcs_len(ta, tb) / (len(ta) + len(tb))


def _hunks(fc: FileChange) -> list[tuple[set[int], set[int]]]:
    """(old line set, new line set) per contiguous changed region."""
    old_lines = fc.old_source.splitlines()
    new_lines = fc.new_source.splitlines()
    matcher = difflib.SequenceMatcher(None, old_lines, new_lines, autojunk=False)
    hunks = []
    for tag, i1, i2, j1, j2 in matcher.get_opcodes():
        if tag == "equal":
            continue
        hunks.append((set(range(i1 + 1, i2 + 1)), set(range(j1 + 1, j2 + 1))))
    return hunks


def map_lines(deleted: Sequence[StmtNode], added: Sequence[StmtNode],
              fc: FileChange) -> list[tuple[int, int, str]]:
    """LINEMAP edges: within each hunk, pair deleted and added lines by
    token-LCS similarity >= threshold; each node maps at most once."""
    del_by_line = {n.line_no: n for n in deleted if n.path == fc.path}
    add_by_line = {n.line_no: n for n in added if n.path == fc.path}
    edges: list[tuple[int, int, str]] = []
    for old_set, new_set in _hunks(fc):
        dels = sorted(line for line in old_set if line in del_by_line)
        adds = sorted(line for line in new_set if line in add_by_line)
        if not dels or not adds:
            continue
        candidates = []
        for di, d in enumerate(dels):
            for ai, a in enumerate(adds):
                sim = token_similarity(del_by_line[d].text, add_by_line[a].text)
                if sim >= LINE_MAP_THRESHOLD:
                    candidates.append((-sim, abs(d - a), di, ai, d, a))
        used_d: set[int] = set()
        used_a: set[int] = set()
        for _, _, _, _, d, a in sorted(candidates):
            if d in used_d or a in used_a:
                continue
            used_d.add(d)
            used_a.add(a)
            edges.append((del_by_line[d].id, add_by_line[a].id, "LINEMAP"))
    return edges


def build_graph(commit: CommitRecord) -> HeteroGraph:
    """Compose node extraction, relation lifting, and line mapping."""
    deleted, added = extract_nodes(commit)
    edge_set: set[tuple[int, int, str]] = set()
    for f in commit.files:
        file_deleted = [n for n in deleted if n.path == f.path]
        file_added = [n for n in added if n.path == f.path]
        if file_deleted:
            for rel in build_relation_graphs(f.old_source, "old"):
                edge_set.update(lift_edges(rel, file_deleted))
        if file_added:
            for rel in build_relation_graphs(f.new_source, "new"):
                edge_set.update(lift_edges(rel, file_added))
        edge_set.update(map_lines(deleted, added, f))
    ordered = sorted(edge_set, key=lambda e: (KIND_INDEX[e[2]], e[0], e[1]))
    return HeteroGraph(
        commit_id=commit.commit_id,
        nodes=tuple(deleted + added),
        edges=tuple(Edge(src, dst, kind) for src, dst, kind in ordered),
    )


def to_json(graph: HeteroGraph) -> str:
    payload = {
        "commit_id": graph.commit_id,
        "nodes": [
            {"id": n.id, "version": n.version, "line_no": n.line_no,
             "text": n.text, "changed": n.changed, "path": n.path,
             "is_root_cause": n.is_root_cause}
            for n in graph.nodes
        ],
        "edges": [{"src": e.src, "dst": e.dst, "kind": e.kind} for e in graph.edges],
    }
    return json.dumps(payload, sort_keys=True)


def from_json(text: str) -> HeteroGraph:
    obj = json.loads(text)
    nodes = tuple(
        StmtNode(id=n["id"], version=n["version"], path=n.get("path", ""),
                 line_no=n["line_no"], text=n["text"], changed=n["changed"],
                 is_root_cause=n.get("is_root_cause", False))
        for n in obj["nodes"])
    edges = tuple(Edge(e["src"], e["dst"], e["kind"]) for e in obj["edges"])
    for e in edges:
        if e.kind not in KIND_INDEX:
            raise GraphError(f"unknown edge kind {e.kind!r}")
    return HeteroGraph(commit_id=obj.get("commit_id", ""), nodes=nodes, edges=edges)

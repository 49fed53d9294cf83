"""Shared fixtures: a hand-built six-commit corpus with known structure."""
from __future__ import annotations

from dataclasses import dataclass

import pytest

from rootrank.dataset import ChangedLine, CommitRecord, FileChange


@dataclass(frozen=True)
class Row:
    old: str | None
    new: str | None
    deleted: bool = False
    root: bool = False


def ctx(text: str) -> Row:
    return Row(old=text, new=text)


def file_change(path: str, rows: list[Row]) -> FileChange:
    old_lines: list[str] = []
    new_lines: list[str] = []
    deleted: list[ChangedLine] = []
    added: list[ChangedLine] = []
    for row in rows:
        if row.old is not None:
            old_lines.append(row.old)
            if row.deleted:
                deleted.append(ChangedLine(line_no=len(old_lines), text=row.old,
                                           kind="deleted", is_root_cause=row.root))
        if row.new is not None:
            new_lines.append(row.new)
            if row.deleted or row.old is None:
                added.append(ChangedLine(line_no=len(new_lines), text=row.new,
                                         kind="added"))
    return FileChange(path=path,
                      old_source="\n".join(old_lines) + "\n",
                      new_source="\n".join(new_lines) + "\n",
                      deleted=tuple(deleted), added=tuple(added))


def motivation_commit() -> CommitRecord:
    """Seven deleted and five added lines; the root sits at old line 427."""
    rows: list[Row] = [
        ctx("public class Motivation {"),
        ctx("    int cachedTotal;"),
    ]
    # one-line padding methods occupy lines 3..396
    for i in range(3, 397):
        rows.append(ctx(f"    int pad{i}() {{ return {i}; }}"))
    rows.append(ctx("    void refresh(int m) {"))            # line 397
    rows.append(ctx("        int base = cachedTotal;"))      # line 398
    for i in range(399, 407):
        rows.append(ctx(f"        touch({i});"))
    rows.append(Row(old="        int scale = prepare(m);",   # line 407
                    new=None, deleted=True))
    for i in range(408, 417):
        rows.append(ctx(f"        touch({i});"))
    rows.append(Row(old="        int left = scale + 4;",     # line 417
                    new="        int left = scale + 5;", deleted=True))
    for i in range(418, 420):
        rows.append(ctx(f"        touch({i});"))
    rows.append(Row(old="        int right = scale - 2;",    # line 420
                    new=None, deleted=True))
    rows.append(Row(old="        int mix = left * right;",   # line 421
                    new=None, deleted=True))
    for i in range(422, 427):
        rows.append(ctx(f"        touch({i});"))
    rows.append(Row(old="        cachedTotal = mix + adjust(m);",  # line 427
                    new="        cachedTotal = mix + adjustSafe(m);",
                    deleted=True, root=True))
    rows.append(Row(old="        int out = mix + 1;",        # line 428
                    new="        int out = mix + 2;", deleted=True))
    rows.append(Row(old="        publish(out);",             # line 429
                    new=None, deleted=True))
    rows.append(Row(old=None, new="        log(out);"))
    rows.append(Row(old=None, new="        int guard = out;"))
    rows.append(ctx("        finish();"))                    # line 430
    rows.append(ctx("    }"))
    rows.append(ctx("}"))
    fc = file_change("src/Motivation.java", rows)
    assert fc.old_source.splitlines()[426] == "        cachedTotal = mix + adjust(m);"
    assert len(fc.deleted) == 7 and len(fc.added) == 5
    return CommitRecord(commit_id="fix-motivation", project="closure",
                        files=(fc,))


def single_commit() -> CommitRecord:
    rows = [
        ctx("public class Single {"),
        ctx("    void act() {"),
        Row(old="        halt();", new=None, deleted=True, root=True),
        ctx("    }"),
        ctx("}"),
    ]
    return CommitRecord(commit_id="fix-single", project="closure",
                        files=(file_change("src/Single.java", rows),))


def calls_commit() -> CommitRecord:
    rows = [
        ctx("public class Caller {"),
        Row(old="    int total;", new="    long total;", deleted=True),
        ctx("    void go() {"),
        Row(old="        total = compute(7);",
            new="        total = compute(9);", deleted=True, root=True),
        ctx("        emit();"),
        ctx("    }"),
        Row(old="    int compute(int v) { return v * 3; }",
            new="    int compute(int v) { return v * 4; }", deleted=True),
        ctx("    void emit() { }"),
        ctx("}"),
    ]
    return CommitRecord(commit_id="fix-calls", project="closure",
                        files=(file_change("src/Caller.java", rows),))


def two_file_commit() -> CommitRecord:
    rows_a = [
        ctx("public class Alpha {"),
        ctx("    void go(int m) {"),
        Row(old="        int w = m + 1;", new=None, deleted=True, root=True),
        Row(old="        use(w);", new="        use(m);", deleted=True),
        ctx("    }"),
        ctx("    void use(int v) { }"),
        ctx("}"),
    ]
    rows_b = [
        ctx("public class Beta {"),
        ctx("    void go(int m) {"),
        Row(old="        int w = m + 1;", new=None, deleted=True),
        Row(old="        drop(w);", new=None, deleted=True),
        ctx("    }"),
        ctx("    void drop(int v) { }"),
        ctx("}"),
    ]
    return CommitRecord(commit_id="fix-two-file", project="lucene",
                        files=(file_change("src/Alpha.java", rows_a),
                               file_change("src/Beta.java", rows_b)))


def unlabeled_commit() -> CommitRecord:
    rows = [
        ctx("public class Quiet {"),
        ctx("    void act() {"),
        Row(old="        stop();", new=None, deleted=True),
        Row(old="        int z = 5;", new=None, deleted=True),
        ctx("    }"),
        ctx("}"),
    ]
    return CommitRecord(commit_id="fix-unlabeled", project="lucene",
                        files=(file_change("src/Quiet.java", rows),))


def skipfilter_commit() -> CommitRecord:
    rows = [
        ctx("public class Skippy {"),
        ctx("    void act(int m) {"),
        Row(old="", new=None, deleted=True),
        Row(old="        // stale note", new=None, deleted=True),
        Row(old="        int q = m * 2;", new=None, deleted=True, root=True),
        Row(old=None, new="        // fresh note"),
        ctx("    }"),
        ctx("}"),
    ]
    return CommitRecord(commit_id="fix-skip", project="lucene",
                        files=(file_change("src/Skippy.java", rows),))


def random_hetero(rng):
    """Small random typed graph plus a mixed-dtype feature store."""
    import numpy as np

    from rootrank.diffgraph import Edge, HeteroGraph, StmtNode
    from rootrank.homograph import FeatureStore, NODE_TYPES
    from rootrank.diffgraph import RELATION_KINDS

    n_del = rng.randrange(0, 5)
    n_add = rng.randrange(0 if n_del else 1, 5)
    nodes = []
    for i in range(n_del):
        nodes.append(StmtNode(id=i, version="old", path="a.java",
                              line_no=i + 1, text=f"del{i};",
                              is_root_cause=rng.random() < 0.3))
    for i in range(n_add):
        nodes.append(StmtNode(id=n_del + i, version="new", path="a.java",
                              line_no=i + 1, text=f"add{i};"))
    old_ids = list(range(n_del))
    new_ids = list(range(n_del, n_del + n_add))
    candidates = []
    for kind in RELATION_KINDS[:4]:
        for ids in (old_ids, new_ids):
            candidates += [(s, d, kind) for s in ids for d in ids if s != d]
    candidates += [(s, d, "LINEMAP") for s in old_ids for d in new_ids]
    rng.shuffle(candidates)
    edges = tuple(Edge(*c) for c in candidates[:rng.randrange(0, len(candidates) + 1)])
    graph = HeteroGraph(commit_id=f"rand{rng.randrange(1 << 30)}",
                        nodes=tuple(nodes), edges=edges)

    rng_np = np.random.default_rng(rng.randrange(1 << 31))
    counts = {"deleted": n_del, "added": n_add}
    node_store = {t: {} for t in NODE_TYPES}
    dtype_pool = [np.float32, np.float64, np.int64, np.bool_]
    key_specs = {"base": (np.float32, rng.randrange(1, 4))}
    for extra in ("aux", "flag", "mark"):
        if rng.random() < 0.6:
            key_specs[extra] = (rng.choice(dtype_pool), rng.randrange(1, 3))
    for t in NODE_TYPES:
        for key, (dtype, width) in key_specs.items():
            if key != "base" and rng.random() < 0.4:
                continue  # missing in this type
            if dtype is np.bool_:
                col = rng_np.random((counts[t], width)) < 0.5
            elif dtype in (np.float32, np.float64):
                col = rng_np.standard_normal((counts[t], width)).astype(dtype)
            else:
                col = rng_np.integers(0, 100, size=(counts[t], width)).astype(dtype)
            node_store[t][key] = col
    edge_counts = {k: sum(1 for e in edges if e.kind == k) for k in RELATION_KINDS}
    edge_store = {k: {"weight": np.ones(edge_counts[k], dtype=np.float32)}
                  for k in RELATION_KINDS}
    return graph, FeatureStore(node=node_store, edge=edge_store)


def fixture_records() -> list[CommitRecord]:
    return [
        motivation_commit(),
        single_commit(),
        calls_commit(),
        two_file_commit(),
        unlabeled_commit(),
        skipfilter_commit(),
    ]


@pytest.fixture()
def corpus() -> list[CommitRecord]:
    return fixture_records()


@pytest.fixture()
def corpus_path(tmp_path):
    from rootrank.dataset import save_dataset

    path = tmp_path / "corpus.jsonl"
    save_dataset(fixture_records(), path)
    return path

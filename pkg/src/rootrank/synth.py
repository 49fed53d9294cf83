"""Generator of synthetic labeled commits for benchmarks and demos.

Each commit edits one Java-like file. The root-cause deleted line calls a
fixed marker function and defines a value consumed by two other deleted
lines, making it both lexically distinctive and a data-dependency hub;
non-root deletions are randomized filler statements. A corpus generated
this way is separable, so an end-to-end run has a known target.
"""
from __future__ import annotations

import random
from dataclasses import dataclass
from pathlib import Path

from .dataset import ChangedLine, CommitRecord, FileChange, save_dataset

_NAMES = ("acc", "val", "tmp", "cnt", "buf", "pos", "mix", "agg")
_PROJECTS = ("alder", "birch", "cedar")

MARKER_CALL = "beacon"


@dataclass(frozen=True)
class _Row:
    old: str | None
    new: str | None
    deleted: bool = False
    root: bool = False


def _ctx(text: str) -> _Row:
    return _Row(old=text, new=text)


def _commit(idx: int, rng: random.Random) -> CommitRecord:
    name = lambda: f"{rng.choice(_NAMES)}{rng.randrange(10, 99)}"
    a, probe, u1, u2 = name(), name(), name(), name()
    c1, c2 = rng.randrange(2, 9), rng.randrange(2, 9)

    def filler() -> _Row:
        return _Row(old=f"        int {name()} = {a} * {rng.randrange(2, 9)};",
                    new=None, deleted=True)

    body: list[_Row] = [_ctx(f"        int {a} = seedOf(m);")]
    body += [filler() for _ in range(rng.randrange(0, 3))]
    body.append(_Row(old=f"        int {probe} = {MARKER_CALL}(m);",
                     new=f"        int {probe} = shield(m);",
                     deleted=True, root=True))
    body.append(_Row(old=f"        int {u1} = {probe} + {c1};",
                     new=(f"        int {u1} = {probe} + {c1 + 1};"
                          if rng.random() < 0.5 else None),
                     deleted=True))
    body.append(_Row(old=f"        int {u2} = {probe} - {c2};",
                     new=None, deleted=True))
    body += [filler() for _ in range(rng.randrange(0, 3))]
    body.append(_ctx(f"        sink({u1});"))
    body.append(_ctx(f"        sink({u2});"))

    rows: list[_Row] = [
        _ctx(f"public class W{idx} {{"),
        _ctx(f"    int store{idx};"),
        _ctx("    void run(int m) {"),
        *body,
        _ctx("    }"),
        _ctx("    int seedOf(int v) { return v + 3; }"),
        _ctx(f"    int {MARKER_CALL}(int v) {{ return v * 7; }}"),
        _ctx("    int shield(int v) { return v * 5; }"),
        _ctx("    void sink(int v) { }"),
        _ctx("}"),
    ]

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
        if row.new is not None and (row.deleted or row.old is None):
            new_lines.append(row.new)
            added.append(ChangedLine(line_no=len(new_lines), text=row.new,
                                     kind="added"))
        elif row.new is not None:
            new_lines.append(row.new)

    change = FileChange(path=f"src/W{idx}.java",
                        old_source="\n".join(old_lines) + "\n",
                        new_source="\n".join(new_lines) + "\n",
                        deleted=tuple(deleted), added=tuple(added))
    return CommitRecord(commit_id=f"syn:{idx:04d}",
                        project=_PROJECTS[idx % len(_PROJECTS)],
                        files=(change,))


def make_synthetic_corpus(n_commits: int = 200, seed: int = 7) -> list[CommitRecord]:
    rng = random.Random(f"synth|{seed}")
    return [_commit(idx, rng) for idx in range(n_commits)]


def write_synthetic_dataset(path: str | Path, n_commits: int = 200,
                            seed: int = 7) -> list[CommitRecord]:
    records = make_synthetic_corpus(n_commits=n_commits, seed=seed)
    save_dataset(records, path)
    return records

"""Commit corpus loading, validation, and fold splitting.

A dataset is a UTF-8 JSONL file, one commit per line:

    {"commit_id": str, "project": str, "files": [
        {"path": str, "old_source": str, "new_source": str,
         "deleted": [{"line_no": int, "text": str, "is_root_cause": bool}],
         "added": [{"line_no": int, "text": str}]}]}

Deleted lines index the old source, added lines the new source. Line text
must match the referenced source line up to trailing whitespace; leading
whitespace is significant.
"""
from __future__ import annotations

import json
import logging
import random
from dataclasses import dataclass, field
from pathlib import Path
from typing import Iterable, Iterator

logger = logging.getLogger(__name__)

# Deleted-line-count buckets used as one stratification axis: small,
# medium, large changes. Upper bounds are inclusive; the last is open.
_COUNT_BUCKETS = ((1, 3), (4, 10), (11, None))


class DatasetError(ValueError):
    """Base class for corpus problems."""


class SchemaError(DatasetError):
    """A record does not match the JSONL schema."""


class ValidationError(DatasetError):
    """A structurally well-formed record violates an invariant."""


@dataclass(frozen=True)
class ChangedLine:
    """One deleted or added line of a file change."""

    line_no: int
    text: str
    kind: str  # "deleted" | "added"
    is_root_cause: bool = False


@dataclass(frozen=True)
class FileChange:
    path: str
    old_source: str
    new_source: str
    deleted: tuple[ChangedLine, ...]
    added: tuple[ChangedLine, ...]


@dataclass(frozen=True)
class CommitRecord:
    """One bug-fixing commit with labeled deleted lines."""

    commit_id: str
    project: str
    files: tuple[FileChange, ...]

    @property
    def deleted_count(self) -> int:
        return sum(len(f.deleted) for f in self.files)

    @property
    def has_root_cause_label(self) -> bool:
        return any(line.is_root_cause for f in self.files for line in f.deleted)

    def deleted_lines(self) -> Iterator[tuple[str, ChangedLine]]:
        """Yield (path, line) over all deleted lines in file order."""
        for f in self.files:
            for line in f.deleted:
                yield f.path, line


@dataclass(frozen=True)
class FoldAssignment:
    k: int
    seed: int
    assignment: dict[str, int] = field(hash=False)

    def fold_of(self, commit_id: str) -> int:
        return self.assignment[commit_id]

    def members(self, fold: int) -> list[str]:
        return sorted(c for c, f in self.assignment.items() if f == fold)


def _require(cond: bool, exc: type[DatasetError], msg: str) -> None:
    if not cond:
        raise exc(msg)


def _check_keys(obj: dict, required: dict[str, type | tuple[type, ...]],
                optional: dict[str, type | tuple[type, ...]],
                where: str) -> None:
    for key, typ in required.items():
        _require(key in obj, SchemaError, f"{where}: missing field '{key}'")
        _require(isinstance(obj[key], typ), SchemaError,
                 f"{where}: field '{key}' has wrong type")
    known = set(required) | set(optional)
    for key in obj:
        _require(key in known, SchemaError, f"{where}: unknown field '{key}'")
        if key in optional:
            _require(isinstance(obj[key], optional[key]), SchemaError,
                     f"{where}: field '{key}' has wrong type")


def _parse_changed_line(obj: dict, kind: str, where: str) -> ChangedLine:
    if kind == "deleted":
        _check_keys(obj, {"line_no": int, "text": str, "is_root_cause": bool}, {}, where)
        root = bool(obj["is_root_cause"])
    else:
        _check_keys(obj, {"line_no": int, "text": str}, {}, where)
        root = False
    _require(obj["line_no"] >= 1, SchemaError, f"{where}: line_no must be >= 1")
    return ChangedLine(line_no=obj["line_no"], text=obj["text"], kind=kind,
                       is_root_cause=root)


def _validate_against_source(lines: tuple[ChangedLine, ...], source: str,
                             which: str, commit_id: str, path: str) -> None:
    source_lines = source.splitlines()
    for line in lines:
        where = f"commit '{commit_id}', file '{path}', {which} line {line.line_no}"
        _require(line.line_no <= len(source_lines), ValidationError,
                 f"{where}: line_no exceeds source length {len(source_lines)}")
        actual = source_lines[line.line_no - 1]
        _require(actual.rstrip() == line.text.rstrip(), ValidationError,
                 f"{where}: text does not match source "
                 f"({line.text!r} vs {actual!r})")


def parse_record(obj: dict) -> CommitRecord:
    """Validate one decoded JSON object and build a CommitRecord."""
    _check_keys(obj, {"commit_id": str, "project": str, "files": list}, {}, "record")
    commit_id = obj["commit_id"]
    where = f"commit '{commit_id}'"
    files = []
    for fobj in obj["files"]:
        _require(isinstance(fobj, dict), SchemaError, f"{where}: file entry is not an object")
        _check_keys(fobj, {"path": str, "old_source": str, "new_source": str,
                           "deleted": list, "added": list}, {}, where)
        path = fobj["path"]
        deleted = tuple(_parse_changed_line(d, "deleted", f"{where}, file '{path}'")
                        for d in fobj["deleted"])
        added = tuple(_parse_changed_line(a, "added", f"{where}, file '{path}'")
                      for a in fobj["added"])
        _validate_against_source(deleted, fobj["old_source"], "deleted", commit_id, path)
        _validate_against_source(added, fobj["new_source"], "added", commit_id, path)
        files.append(FileChange(path=path, old_source=fobj["old_source"],
                                new_source=fobj["new_source"],
                                deleted=deleted, added=added))
    record = CommitRecord(commit_id=commit_id, project=obj["project"], files=tuple(files))
    _require(record.deleted_count >= 1, ValidationError,
             f"{where}: commit has no deleted lines")
    if not record.has_root_cause_label:
        logger.warning("commit '%s' has no root-cause label; kept for "
                       "evaluation-only use", commit_id)
    return record


def load_dataset(path: str | Path) -> list[CommitRecord]:
    """Load and validate a JSONL corpus, preserving file order."""
    path = Path(path)
    records: list[CommitRecord] = []
    seen: set[str] = set()
    with path.open("r", encoding="utf-8") as fh:
        for lineno, raw in enumerate(fh, start=1):
            if not raw.strip():
                continue
            try:
                obj = json.loads(raw)
            except json.JSONDecodeError as exc:
                raise SchemaError(f"line {lineno}: invalid JSON: {exc}") from exc
            _require(isinstance(obj, dict), SchemaError,
                     f"line {lineno}: record is not a JSON object")
            record = parse_record(obj)
            _require(record.commit_id not in seen, ValidationError,
                     f"line {lineno}: duplicate commit_id '{record.commit_id}'")
            seen.add(record.commit_id)
            records.append(record)
    return records


def record_to_obj(record: CommitRecord) -> dict:
    return {
        "commit_id": record.commit_id,
        "project": record.project,
        "files": [
            {
                "path": f.path,
                "old_source": f.old_source,
                "new_source": f.new_source,
                "deleted": [{"line_no": d.line_no, "text": d.text,
                             "is_root_cause": d.is_root_cause} for d in f.deleted],
                "added": [{"line_no": a.line_no, "text": a.text} for a in f.added],
            }
            for f in record.files
        ],
    }


def save_dataset(records: Iterable[CommitRecord], path: str | Path) -> None:
    """Write records as JSONL; inverse of load_dataset on validated data."""
    path = Path(path)
    with path.open("w", encoding="utf-8") as fh:
        for record in records:
            fh.write(json.dumps(record_to_obj(record), sort_keys=True) + "\n")


def deleted_count_bucket(count: int) -> int:
    """Bucket index of a commit's deleted-line count."""
    for idx, (lo, hi) in enumerate(_COUNT_BUCKETS):
        if count >= lo and (hi is None or count <= hi):
            return idx
    raise ValueError(f"count {count} fits no bucket")


def split_folds(records: list[CommitRecord], k: int, seed: int) -> FoldAssignment:
    """Assign commits to k folds, stratified by (project, size bucket).

    Within each stratum commit ids are sorted, shuffled with a PRNG seeded
    from (seed, stratum), and dealt round-robin. The deal pointer continues
    across strata so global fold sizes differ by at most one. The result
    depends only on the commit_id set, k, and seed, not on input order.
    """
    if k < 2:
        raise ValueError(f"fold count k={k} must be >= 2")
    if k > len(records):
        raise ValueError(f"fold count k={k} exceeds record count {len(records)}")
    ids = [r.commit_id for r in records]
    if len(set(ids)) != len(ids):
        raise ValueError("duplicate commit_id in records")

    strata: dict[tuple[str, int], list[str]] = {}
    for r in records:
        key = (r.project, deleted_count_bucket(r.deleted_count))
        strata.setdefault(key, []).append(r.commit_id)

    assignment: dict[str, int] = {}
    pointer = 0
    for key in sorted(strata):
        members = sorted(strata[key])
        rng = random.Random(f"{seed}|{key[0]}|{key[1]}")
        rng.shuffle(members)
        for commit_id in members:
            assignment[commit_id] = pointer % k
            pointer += 1
    return FoldAssignment(k=k, seed=seed, assignment=assignment)

"""Ranking metrics and the stratified cross-validation harness.

Recall@N is the fraction of labeled commits whose first root-cause line
appears within the top N ranks; MFR is the mean of those first ranks.
Pooled (micro) numbers over all test rankings are primary; per-fold and
macro-averaged numbers are reported alongside, labeled as such.
"""
from __future__ import annotations

from concurrent.futures import ThreadPoolExecutor
from dataclasses import dataclass
from typing import Sequence

from .dataset import CommitRecord, split_folds
from .ranking import Ranking

RECALL_NS = (1, 2, 3)


class EvaluationError(ValueError):
    pass


def _labeled(rankings: Sequence[Ranking]) -> list[Ranking]:
    return [r for r in rankings if r.first_rank is not None]


def recall_at_n(rankings: Sequence[Ranking], n: int) -> float:
    """Fraction of rankings whose first root-cause line sits within top n."""
    labeled = _labeled(rankings)
    if not labeled:
        raise EvaluationError("recall_at_n needs at least one labeled ranking")
    hits = sum(1 for r in labeled if r.first_rank <= n)
    return hits / len(labeled)


def mean_first_rank(rankings: Sequence[Ranking]) -> float:
    labeled = _labeled(rankings)
    if not labeled:
        raise EvaluationError("mean_first_rank needs at least one labeled ranking")
    return sum(r.first_rank for r in labeled) / len(labeled)


@dataclass(frozen=True)
class FoldMetrics:
    fold: int
    n_evaluated: int
    recall_at: dict[int, float]
    mfr: float


@dataclass(frozen=True)
class MetricsReport:
    method: str
    k: int
    seed: int
    n_evaluated: int
    n_excluded: int                 # unlabeled commits, kept out of denominators
    n_at: dict[int, int]
    recall_at: dict[int, float]
    mfr: float
    folds: tuple[FoldMetrics, ...]
    macro_recall_at: dict[int, float]
    macro_mfr: float
    fold_of: dict[str, int]
    audit_ok: bool                  # no test commit was in its own train set


def compute_metrics(rankings: Sequence[Ranking], ns: Sequence[int] = RECALL_NS,
                    ) -> tuple[dict[int, int], dict[int, float], float, int]:
    labeled = _labeled(rankings)
    if not labeled:
        raise EvaluationError("no labeled rankings to evaluate")
    n_at = {n: sum(1 for r in labeled if r.first_rank <= n) for n in ns}
    recall = {n: n_at[n] / len(labeled) for n in ns}
    return n_at, recall, mean_first_rank(labeled), len(labeled)


def cross_validate(records: list[CommitRecord], k: int, ranker,
                   split_seed: int | None = None, method: str = "rootrank",
                   n_jobs: int = 1) -> MetricsReport:
    """Train on k-1 folds, rank the held-out fold, repeat; pool rankings.

    `ranker` is a fit/predict estimator template; it is cloned per fold so
    no state leaks between folds. Fully deterministic given seeds.
    """
    from sklearn.base import clone

    seed = ranker.seed if split_seed is None else split_seed
    assignment = split_folds(records, k=k, seed=seed)
    by_fold: dict[int, list[CommitRecord]] = {f: [] for f in range(k)}
    for record in records:
        by_fold[assignment.fold_of(record.commit_id)].append(record)

    def run_fold(fold: int) -> tuple[int, list[Ranking], set[str]]:
        train_records = [r for r in records
                         if assignment.fold_of(r.commit_id) != fold]
        test_records = by_fold[fold]
        estimator = clone(ranker)
        estimator.fit(train_records)
        rankings = estimator.predict(test_records)
        return fold, rankings, {r.commit_id for r in train_records}

    if n_jobs > 1:
        with ThreadPoolExecutor(max_workers=n_jobs) as pool:
            results = list(pool.map(run_fold, range(k)))
    else:
        results = [run_fold(fold) for fold in range(k)]

    audit_ok = True
    all_rankings: list[Ranking] = []
    fold_metrics: list[FoldMetrics] = []
    for fold, rankings, train_ids in sorted(results):
        for ranking in rankings:
            if ranking.commit_id in train_ids:
                audit_ok = False
        labeled = _labeled(rankings)
        if not labeled:
            raise EvaluationError(f"fold {fold} has no evaluable commit")
        _, recall, mfr, n_eval = compute_metrics(labeled)
        fold_metrics.append(FoldMetrics(fold=fold, n_evaluated=n_eval,
                                        recall_at=recall, mfr=mfr))
        all_rankings.extend(rankings)

    n_at, recall, mfr, n_eval = compute_metrics(all_rankings)
    macro_recall = {n: sum(f.recall_at[n] for f in fold_metrics) / k
                    for n in RECALL_NS}
    macro_mfr = sum(f.mfr for f in fold_metrics) / k
    return MetricsReport(
        method=method, k=k, seed=seed,
        n_evaluated=n_eval,
        n_excluded=len(all_rankings) - n_eval,
        n_at=n_at, recall_at=recall, mfr=mfr,
        folds=tuple(fold_metrics),
        macro_recall_at=macro_recall, macro_mfr=macro_mfr,
        fold_of=dict(assignment.assignment),
        audit_ok=audit_ok,
    )


def format_metrics_row(recall_at: dict[int, float], mfr: float) -> str:
    cells = [f"{recall_at[n]:.3f}" for n in RECALL_NS] + [f"{mfr:.3f}"]
    return ",".join(cells)


def render_report(report: MetricsReport, fmt: str = "csv") -> bytes:
    """CSV schema: method,fold,recall1,recall2,recall3,mfr with per-fold
    rows plus pooled and macro rows; text is a fixed-width table."""
    if fmt == "csv":
        lines = ["method,fold,recall1,recall2,recall3,mfr"]
        for f in report.folds:
            lines.append(f"{report.method},{f.fold},"
                         + format_metrics_row(f.recall_at, f.mfr))
        lines.append(f"{report.method},pooled,"
                     + format_metrics_row(report.recall_at, report.mfr))
        lines.append(f"{report.method},macro,"
                     + format_metrics_row(report.macro_recall_at, report.macro_mfr))
        return ("\n".join(lines) + "\n").encode("utf-8")
    if fmt == "text":
        header = f"{'fold':>8} {'n':>5} {'rec@1':>7} {'rec@2':>7} {'rec@3':>7} {'mfr':>7}"
        rows = [header, "-" * len(header)]
        for f in report.folds:
            rows.append(f"{f.fold:>8} {f.n_evaluated:>5} "
                        f"{f.recall_at[1]:>7.3f} {f.recall_at[2]:>7.3f} "
                        f"{f.recall_at[3]:>7.3f} {f.mfr:>7.3f}")
        rows.append(f"{'pooled':>8} {report.n_evaluated:>5} "
                    f"{report.recall_at[1]:>7.3f} {report.recall_at[2]:>7.3f} "
                    f"{report.recall_at[3]:>7.3f} {report.mfr:>7.3f}")
        rows.append(f"{'macro':>8} {report.n_evaluated:>5} "
                    f"{report.macro_recall_at[1]:>7.3f} {report.macro_recall_at[2]:>7.3f} "
                    f"{report.macro_recall_at[3]:>7.3f} {report.macro_mfr:>7.3f}")
        rows.append(f"excluded unlabeled commits: {report.n_excluded}")
        rows.append(f"fold-membership audit: {'ok' if report.audit_ok else 'FAILED'}")
        return ("\n".join(rows) + "\n").encode("utf-8")
    raise ValueError(f"unknown report format {fmt!r}")


def render_sweep_csv(results: Sequence[tuple[str, MetricsReport]]) -> bytes:
    """One pooled row per configuration; used by the parameter sweeps."""
    lines = ["method,recall1,recall2,recall3,mfr"]
    for name, report in results:
        lines.append(f"{name}," + format_metrics_row(report.recall_at, report.mfr))
    return ("\n".join(lines) + "\n").encode("utf-8")


def report_to_dict(report: MetricsReport) -> dict:
    return {
        "method": report.method,
        "k": report.k,
        "seed": report.seed,
        "n_evaluated": report.n_evaluated,
        "n_excluded": report.n_excluded,
        "n_at": {str(n): v for n, v in report.n_at.items()},
        "recall_at": {str(n): v for n, v in report.recall_at.items()},
        "mfr": report.mfr,
        "folds": [
            {"fold": f.fold, "n_evaluated": f.n_evaluated,
             "recall_at": {str(n): v for n, v in f.recall_at.items()},
             "mfr": f.mfr}
            for f in report.folds
        ],
        "macro_recall_at": {str(n): v for n, v in report.macro_recall_at.items()},
        "macro_mfr": report.macro_mfr,
        "fold_of": report.fold_of,
        "audit_ok": report.audit_ok,
    }


def report_from_dict(obj: dict) -> MetricsReport:
    return MetricsReport(
        method=obj["method"], k=obj["k"], seed=obj["seed"],
        n_evaluated=obj["n_evaluated"], n_excluded=obj["n_excluded"],
        n_at={int(n): v for n, v in obj["n_at"].items()},
        recall_at={int(n): v for n, v in obj["recall_at"].items()},
        mfr=obj["mfr"],
        folds=tuple(FoldMetrics(fold=f["fold"], n_evaluated=f["n_evaluated"],
                                recall_at={int(n): v for n, v in f["recall_at"].items()},
                                mfr=f["mfr"]) for f in obj["folds"]),
        macro_recall_at={int(n): v for n, v in obj["macro_recall_at"].items()},
        macro_mfr=obj["macro_mfr"],
        fold_of=obj["fold_of"],
        audit_ok=obj["audit_ok"],
    )

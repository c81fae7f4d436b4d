"""Out-of-fold evaluation harness: repeated CV studies and the delta sweep.

Every run is an independent work unit with seed = base_seed + run index,
so the harness can execute runs in parallel and still produce output
byte-identical to sequential execution. Reports carry per-run records,
aggregates recomputable from those records, the echoed configuration,
and a content hash of the input cohort.
"""

from __future__ import annotations

import csv
import hashlib
import json
from concurrent.futures import ProcessPoolExecutor
from dataclasses import dataclass, field, replace
from multiprocessing import get_context

import numpy as np

from .cohort import Cohort
from .errors import EmptyPairSetError, RankalignError
from .metrics import pearson, roc_auc, spearman
from .models import (
    METHODS,
    HyperSearchSpec,
    fit_baseline,
    fit_ranking_svm,
    nonzero_count,
    score,
)

__all__ = [
    "RunRecord", "EvalReport", "pearson", "spearman", "roc_auc",
    "cross_val_scores", "run_experiment", "sweep_delta",
    "compute_aggregates", "cohort_fingerprint", "emit_report",
    "write_patient_scores",
]


@dataclass(frozen=True)
class RunRecord:
    """Metrics of one method in one repetition of the CV experiment."""

    method: str
    run_index: int
    correlation: float
    spearman: float
    auc: float | None
    mean_nonzero: float
    delta: float | None
    seed: int


@dataclass(frozen=True)
class EvalReport:
    """All records of an experiment plus aggregates and provenance."""

    records: list
    aggregates: list
    config_echo: dict
    cohort_fingerprint: str
    errors: list = field(default_factory=list)
    # out-of-fold scores for external plotting; written via CSV, not JSON
    patient_scores: list | None = None


def cohort_fingerprint(cohort: Cohort) -> str:
    """sha256 over the cohort's content (ids, names, features, targets)."""
    h = hashlib.sha256()
    h.update("\x1f".join(cohort.ids).encode())
    h.update(b"\x00")
    h.update("\x1f".join(cohort.feature_names).encode())
    h.update(b"\x00")
    h.update(np.ascontiguousarray(cohort.features, float).tobytes())
    h.update(np.ascontiguousarray(cohort.rating, float).tobytes())
    if cohort.binary_label is not None:
        h.update(np.ascontiguousarray(cohort.binary_label, np.int64).tobytes())
    return h.hexdigest()


def _fold_split(cohort: Cohort, folds: int, rng, stratified: bool) -> list[np.ndarray]:
    if stratified and cohort.binary_label is not None:
        parts = [[] for _ in range(folds)]
        for cls in (0, 1):
            idx = rng.permutation(np.flatnonzero(cohort.binary_label == cls))
            for k, chunk in enumerate(np.array_split(idx, folds)):
                parts[k].append(chunk)
        return [np.sort(np.concatenate(p)).astype(int) for p in parts]
    perm = rng.permutation(cohort.n)
    return [np.sort(part) for part in np.array_split(perm, folds)]


def _fit_one(cohort, rows, method, delta, search, seed):
    if method == "ranking_svm":
        return fit_ranking_svm(cohort, rows, delta, search, seed=seed)
    return fit_baseline(cohort, rows, method, search, seed=seed)


def cross_val_scores(
    cohort: Cohort,
    method: str,
    delta: float,
    search: HyperSearchSpec,
    folds: int,
    seed: int,
    stratified: bool = False,
    global_tuning: bool = False,
):
    """Seeded k-fold CV: fit on each complement, score the held-out part.

    Returns (out-of-fold scores of length n, list of fold models). Every
    patient is scored exactly once, by a model that never saw it. With
    global_tuning the regularization weight is selected once on the full
    cohort and folds only refit at that value.
    """
    if method not in METHODS:
        raise ValueError(f"unknown method {method!r}")
    if folds < 2:
        raise ValueError(f"folds must be >= 2, got {folds}")
    if cohort.n < folds:
        raise ValueError(f"cohort has {cohort.n} rows, fewer than {folds} folds")
    rng = np.random.default_rng(seed)
    val_sets = _fold_split(cohort, folds, rng, stratified)
    fit_seeds = [int(np.random.default_rng((seed, k)).integers(2**63)) for k in range(folds + 1)]

    if global_tuning:
        pre = _fit_one(cohort, np.arange(cohort.n), method, delta, search, fit_seeds[folds])
        search = replace(search, c_grid=(pre.c_used,))

    oof = np.empty(cohort.n)
    fold_models = []
    for k, val_rows in enumerate(val_sets):
        train_rows = np.setdiff1d(np.arange(cohort.n), val_rows)
        try:
            model = _fit_one(cohort, train_rows, method, delta, search, fit_seeds[k])
        except EmptyPairSetError as e:
            raise EmptyPairSetError(f"fold {k} (delta={delta:g}): {e}") from None
        oof[val_rows] = score(model, cohort, val_rows)
        fold_models.append(model)
    return oof, fold_models


def _one_run(
    cohort, fit_methods, delta, search, folds, run_index, seed,
    stratified, global_tuning, keep_scores,
):
    records = []
    score_rows = [] if keep_scores else None
    label = cohort.binary_label
    try:
        for method in fit_methods:
            oof, fold_models = cross_val_scores(
                cohort, method, delta, search, folds, seed, stratified, global_tuning
            )
            auc = None if label is None else roc_auc(oof, label)
            records.append(RunRecord(
                method=method,
                run_index=run_index,
                correlation=pearson(oof, cohort.rating),
                spearman=spearman(oof, cohort.rating),
                auc=auc,
                mean_nonzero=float(np.mean([nonzero_count(m) for m in fold_models])),
                delta=float(delta) if method == "ranking_svm" else None,
                seed=seed,
            ))
            if keep_scores:
                score_rows += [
                    (cohort.ids[i], method, run_index, float(oof[i]))
                    for i in range(cohort.n)
                ]
        if label is not None:
            # the rating itself as a scorer: the reference every method
            # must beat on the binary endpoint
            records.append(RunRecord(
                method="raw_da",
                run_index=run_index,
                correlation=1.0,
                spearman=1.0,
                auc=roc_auc(cohort.rating, label),
                mean_nonzero=0.0,
                delta=None,
                seed=seed,
            ))
            if keep_scores:
                score_rows += [
                    (cohort.ids[i], "raw_da", run_index, float(cohort.rating[i]))
                    for i in range(cohort.n)
                ]
    except RankalignError as e:
        raise type(e)(f"run {run_index} (seed {seed}): {e}") from None
    return records, score_rows


def compute_aggregates(records) -> list:
    """Per (method, delta) mean and std of each metric, from records alone."""
    groups: dict = {}
    for rec in records:
        groups.setdefault((rec.method, rec.delta), []).append(rec)
    entries = []
    for method, delta in sorted(
        groups, key=lambda t: (t[0], t[1] is not None, t[1] or 0.0)
    ):
        recs = groups[(method, delta)]
        metrics = {}
        for name in ("correlation", "spearman", "auc", "mean_nonzero"):
            vals = [getattr(r, name) for r in recs]
            if any(v is None for v in vals):
                continue
            arr = np.asarray(vals, float)
            std = float(arr.std(ddof=1)) if arr.size > 1 else 0.0
            metrics[name] = {"mean": float(arr.mean()), "std": std}
        entries.append({"method": method, "delta": delta, "metrics": metrics})
    return entries


def run_experiment(
    cohort: Cohort,
    methods,
    delta: float,
    search: HyperSearchSpec,
    folds: int,
    runs: int,
    base_seed: int,
    stratified: bool = False,
    global_tuning: bool = False,
    jobs: int = 1,
    keep_scores: bool = False,
) -> EvalReport:
    """Repeat the CV experiment `runs` times with seeds base_seed + r.

    Per run and method, records Pearson/Spearman of out-of-fold scores
    against the rating, ROC-AUC against the binary label when present,
    and the mean nonzero weight count across fold models. The raw rating
    joins as method "raw_da" whenever a binary label exists. Output is
    independent of `jobs`.
    """
    if runs < 1:
        raise ValueError(f"runs must be >= 1, got {runs}")
    fit_methods = [m for m in methods if m != "raw_da"]
    for m in fit_methods:
        if m not in METHODS:
            raise ValueError(f"unknown method {m!r}")

    tasks = [
        (cohort, fit_methods, delta, search, folds, r, base_seed + r,
         stratified, global_tuning, keep_scores)
        for r in range(runs)
    ]
    if jobs > 1 and runs > 1:
        with ProcessPoolExecutor(
            max_workers=min(jobs, runs), mp_context=get_context("fork")
        ) as pool:
            results = list(pool.map(_one_run_star, tasks))
    else:
        results = [_one_run(*t) for t in tasks]

    records = [rec for recs, _ in results for rec in recs]
    score_rows = None
    if keep_scores:
        score_rows = [row for _, rows in results for row in rows]
    config = {
        "methods": list(methods),
        "delta": float(delta),
        "folds": int(folds),
        "runs": int(runs),
        "base_seed": int(base_seed),
        "stratified": bool(stratified),
        "global_tuning": bool(global_tuning),
        "c_grid": [float(c) for c in search.c_grid],
        "inner_folds": int(search.inner_folds),
        "criterion": search.criterion,
        "inner_split": search.inner_split,
        "pair_cap": int(search.pair_cap),
    }
    return EvalReport(
        records=records,
        aggregates=compute_aggregates(records),
        config_echo=config,
        cohort_fingerprint=cohort_fingerprint(cohort),
        patient_scores=score_rows,
    )


def _one_run_star(args):
    return _one_run(*args)


def sweep_delta(
    cohort: Cohort,
    deltas,
    search: HyperSearchSpec,
    folds: int,
    runs: int,
    base_seed: int,
    stratified: bool = False,
    global_tuning: bool = False,
    jobs: int = 1,
) -> EvalReport:
    """Run the ranking experiment at each delta with shared seeds.

    Seeds repeat across delta values so comparisons are paired. A delta
    whose pair construction fails in some fold is recorded under `errors`
    and the sweep continues with the remaining values.
    """
    deltas = [float(d) for d in deltas]
    if not deltas:
        raise ValueError("deltas must be non-empty")
    records = []
    errors = []
    for d in deltas:
        try:
            rep = run_experiment(
                cohort, ["ranking_svm"], d, search, folds, runs, base_seed,
                stratified, global_tuning, jobs,
            )
        except EmptyPairSetError as e:
            errors.append({"delta": d, "error": str(e)})
            continue
        records.extend(rep.records)
    config = {
        "methods": ["ranking_svm"],
        "deltas": deltas,
        "folds": int(folds),
        "runs": int(runs),
        "base_seed": int(base_seed),
        "stratified": bool(stratified),
        "global_tuning": bool(global_tuning),
        "c_grid": [float(c) for c in search.c_grid],
        "inner_folds": int(search.inner_folds),
        "criterion": search.criterion,
        "inner_split": search.inner_split,
        "pair_cap": int(search.pair_cap),
    }
    return EvalReport(
        records=records,
        aggregates=compute_aggregates(records),
        config_echo=config,
        cohort_fingerprint=cohort_fingerprint(cohort),
        errors=errors,
    )


def _record_to_dict(rec: RunRecord) -> dict:
    return {
        "method": rec.method,
        "run_index": rec.run_index,
        "correlation": rec.correlation,
        "spearman": rec.spearman,
        "auc": rec.auc,
        "mean_nonzero": rec.mean_nonzero,
        "delta": rec.delta,
        "seed": rec.seed,
    }


def report_to_dict(report: EvalReport) -> dict:
    return {
        "records": [_record_to_dict(r) for r in report.records],
        "aggregates": report.aggregates,
        "config_echo": report.config_echo,
        "cohort_fingerprint": report.cohort_fingerprint,
        "errors": report.errors,
    }


_CSV_COLUMNS = (
    "method", "run_index", "correlation", "spearman",
    "auc", "mean_nonzero", "delta", "seed",
)


def emit_report(report: EvalReport, path, format: str = "json") -> None:
    """Write a report deterministically: stable key order, repr floats,
    no timestamps. Identical report objects produce identical bytes."""
    if format == "json":
        text = json.dumps(report_to_dict(report), sort_keys=True, indent=2)
        with open(path, "w", encoding="utf-8") as fh:
            fh.write(text + "\n")
    elif format == "csv":
        with open(path, "w", newline="", encoding="utf-8") as fh:
            writer = csv.writer(fh)
            writer.writerow(_CSV_COLUMNS)
            for rec in report.records:
                doc = _record_to_dict(rec)
                writer.writerow([
                    "" if doc[c] is None
                    else (repr(doc[c]) if isinstance(doc[c], float) else doc[c])
                    for c in _CSV_COLUMNS
                ])
    else:
        raise ValueError(f"unknown report format {format!r}")


def write_patient_scores(report: EvalReport, path) -> None:
    """Per-patient out-of-fold scores as CSV (id, method, run, score)."""
    if report.patient_scores is None:
        raise ValueError("report was built without keep_scores=True")
    with open(path, "w", newline="", encoding="utf-8") as fh:
        writer = csv.writer(fh)
        writer.writerow(("id", "method", "run", "score"))
        for pid, method, run, val in report.patient_scores:
            writer.writerow((pid, method, run, repr(float(val))))

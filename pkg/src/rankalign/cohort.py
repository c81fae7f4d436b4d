"""Dataset representation, CSV ingestion, and leakage-free normalization.

A cohort couples an n x m feature matrix with a continuous 0-100 rating and
an optional binary label. Normalization statistics are always fit on an
explicit row subset so cross-validation code cannot accidentally leak
held-out rows into the scaling.
"""

from __future__ import annotations

import csv
from dataclasses import dataclass, field

import numpy as np

from .errors import DataError

DEFAULT_ROLES = {"id": "id", "rating": "da", "label": "label"}


@dataclass(frozen=True)
class Cohort:
    """Immutable dataset: identifiers, features, rating, optional label."""

    ids: list[str]
    features: np.ndarray
    feature_names: list[str]
    rating: np.ndarray
    binary_label: np.ndarray | None = None

    def __post_init__(self):
        n = len(self.ids)
        if self.features.shape[0] != n or self.rating.shape[0] != n:
            raise DataError("row counts of ids, features and rating differ")
        if self.features.ndim != 2:
            raise DataError("features must be a 2-d matrix")
        if len(self.feature_names) != self.features.shape[1]:
            raise DataError("feature_names length does not match feature count")
        if self.binary_label is not None and self.binary_label.shape[0] != n:
            raise DataError("binary_label length does not match row count")
        if len(set(self.ids)) != n:
            raise DataError("ids are not unique")
        if n and (self.rating.min() < 0.0 or self.rating.max() > 100.0):
            raise DataError("rating outside [0, 100]")
        if self.binary_label is not None and n:
            bad = ~np.isin(self.binary_label, (0, 1))
            if bad.any():
                raise DataError("binary_label contains values outside {0, 1}")

    @property
    def n(self) -> int:
        return len(self.ids)

    @property
    def m(self) -> int:
        return self.features.shape[1]


@dataclass(frozen=True)
class NormStats:
    """Per-column mean/std from a training subset, with constant flags."""

    means: np.ndarray
    stds: np.ndarray
    constant: np.ndarray = field(default=None)  # bool per column

    def __post_init__(self):
        if self.constant is None:
            object.__setattr__(self, "constant", np.zeros(len(self.means), bool))
        if not (len(self.means) == len(self.stds) == len(self.constant)):
            raise DataError("norm stats arrays have mismatched lengths")


def _parse_float(text: str, row: int, col: str) -> float:
    text = text.strip()
    if text == "":
        raise DataError(f"row {row}: missing value in column '{col}'")
    try:
        return float(text)
    except ValueError:
        raise DataError(f"row {row}: non-numeric value {text!r} in column '{col}'") from None


def load_cohort(path, roles: dict | None = None) -> Cohort:
    """Read a UTF-8 comma-separated file into a validated Cohort.

    `roles` maps the keys "id", "rating" and optionally "label" to column
    names; every remaining column is treated as a numeric feature. Rows are
    reported 1-based (the header is row 0) in error messages.
    """
    roles = {**DEFAULT_ROLES, **(roles or {})}
    id_col, rating_col = roles["id"], roles["rating"]
    label_col = roles.get("label")

    try:
        fh = open(path, newline="", encoding="utf-8")
    except FileNotFoundError:
        raise DataError(f"no such file: {path}") from None
    with fh:
        reader = csv.reader(fh)
        try:
            header = next(reader)
        except StopIteration:
            raise DataError(f"{path}: empty file") from None
        header = [h.strip() for h in header]
        for col in (id_col, rating_col):
            if col not in header:
                raise DataError(f"{path}: required column '{col}' not in header")
        has_label = label_col is not None and label_col in header
        feature_names = [
            h for h in header if h not in (id_col, rating_col) and h != label_col
        ]
        idx = {h: k for k, h in enumerate(header)}

        ids: list[str] = []
        ratings: list[float] = []
        labels: list[int] = []
        feats: list[list[float]] = []
        seen: dict[str, int] = {}
        for row_no, row in enumerate(reader, start=1):
            if len(row) != len(header):
                raise DataError(f"row {row_no}: expected {len(header)} fields, got {len(row)}")
            rid = row[idx[id_col]].strip()
            if rid == "":
                raise DataError(f"row {row_no}: missing value in column '{id_col}'")
            if rid in seen:
                raise DataError(f"row {row_no}: duplicate id {rid!r} (first seen at row {seen[rid]})")
            seen[rid] = row_no

            r = _parse_float(row[idx[rating_col]], row_no, rating_col)
            if not (0.0 <= r <= 100.0):
                raise DataError(f"row {row_no}: rating {r!r} outside [0, 100]")
            if has_label:
                lv = _parse_float(row[idx[label_col]], row_no, label_col)
                if lv not in (0.0, 1.0):
                    raise DataError(f"row {row_no}: label {lv!r} not in {{0, 1}}")
                labels.append(int(lv))
            feats.append([_parse_float(row[idx[c]], row_no, c) for c in feature_names])
            ids.append(rid)
            ratings.append(r)

    features = np.asarray(feats, float).reshape(len(ids), len(feature_names))
    label_arr = np.asarray(labels, int) if has_label else None
    return Cohort(ids, features, feature_names, np.asarray(ratings, float), label_arr)


def save_cohort(cohort: Cohort, path, roles: dict | None = None) -> None:
    """Write a Cohort as CSV so that load_cohort round-trips bit-for-bit.

    Floats are written with repr(), the shortest form that parses back to
    the identical double.
    """
    roles = {**DEFAULT_ROLES, **(roles or {})}
    header = [roles["id"]] + list(cohort.feature_names) + [roles["rating"]]
    if cohort.binary_label is not None:
        header.append(roles["label"])
    with open(path, "w", newline="", encoding="utf-8") as fh:
        writer = csv.writer(fh)
        writer.writerow(header)
        for i in range(cohort.n):
            row = [cohort.ids[i]]
            row += [repr(float(v)) for v in cohort.features[i]]
            row.append(repr(float(cohort.rating[i])))
            if cohort.binary_label is not None:
                row.append(str(int(cohort.binary_label[i])))
            writer.writerow(row)


def fit_norm_stats(cohort: Cohort, rows) -> NormStats:
    """Per-feature mean and population std over `rows` only.

    Zero-variance columns are flagged constant; apply_norm maps them to
    zeros instead of dividing by zero. Rating and label are never read.
    """
    rows = np.asarray(rows, int)
    if rows.size == 0:
        raise DataError("cannot fit normalization stats on an empty row subset")
    sub = cohort.features[rows]
    means = sub.mean(axis=0)
    stds = sub.std(axis=0)  # population convention (ddof=0)
    constant = stds == 0.0
    stds = np.where(constant, 1.0, stds)
    return NormStats(means, stds, constant)


def apply_norm(cohort: Cohort, stats: NormStats) -> Cohort:
    """Return a new Cohort with features z-scored by `stats`.

    Constant-flagged columns become all zeros. Rating, label, ids and
    feature names pass through untouched.
    """
    if len(stats.means) != cohort.m:
        raise DataError(
            f"norm stats have {len(stats.means)} columns, cohort has {cohort.m}"
        )
    z = (cohort.features - stats.means) / stats.stds
    if stats.constant.any():
        z[:, stats.constant] = 0.0
    return Cohort(cohort.ids, z, cohort.feature_names, cohort.rating, cohort.binary_label)

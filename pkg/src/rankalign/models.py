"""The four linear methods plus hyperparameter selection.

All methods share one L1 solver and one normalization scheme. The
regularization weight is searched on a fixed grid; the grid value is
divided by the number of loss terms before it reaches the solver, so a
given grid value means the same effective regularization strength whether
the fit sees a 300-row inner fold or a 30,000-pair full training set.

Ranking models are intercept-free: the pair problem is antisymmetric
(negating the input flips the label), so the optimal separator passes
through the origin.
"""

from __future__ import annotations

import json
from dataclasses import dataclass, field

import numpy as np

from .cohort import Cohort, NormStats, apply_norm, fit_norm_stats
from .errors import DataError, MetricError, PairingError
from .metrics import pairwise_accuracy, roc_auc
from .optim import SolverConfig, fit_l1_linear
from .pairing import DEFAULT_PAIR_CAP, build_pairs, subsample_pairs

METHODS = ("ranking_svm", "linear_regression", "svr", "classifier_svm")
CRITERIA = ("pairwise_accuracy", "mse", "auc")
INNER_SPLITS = ("patient", "pair")

# 15 grid points, log-spaced from 2^-10 to 2^4
DEFAULT_C_GRID = tuple(float(2.0**k) for k in range(-10, 5))

_LOSS_FOR = {
    "ranking_svm": "squared_hinge",
    "linear_regression": "squared",
    "svr": "epsilon_insensitive",
    "classifier_svm": "squared_hinge",
}
_CRITERION_FOR = {
    "ranking_svm": "pairwise_accuracy",
    "linear_regression": "mse",
    "svr": "mse",
    "classifier_svm": "auc",
}

_INNER_TOL = 1e-2
_INNER_MAX_EPOCHS = 1000


@dataclass(frozen=True)
class HyperSearchSpec:
    """Grid and inner-CV settings for selecting the regularization weight.

    inner_split chooses how the ranking inner CV carves validation data:
    "pair" (default) splits the pair list directly; "patient" holds out
    patients and scores only pairs formed among them, which is slower but
    keeps validation pairs from sharing patients with training pairs.
    """

    c_grid: tuple = DEFAULT_C_GRID
    inner_folds: int = 3
    criterion: str | None = None  # None: pick the method's default
    inner_split: str = "pair"
    pair_cap: int = DEFAULT_PAIR_CAP

    def __post_init__(self):
        grid = tuple(float(c) for c in self.c_grid)
        object.__setattr__(self, "c_grid", grid)
        if len(grid) == 0:
            raise ValueError("c_grid must be non-empty")
        if any(c <= 0 for c in grid) or any(
            grid[k] >= grid[k + 1] for k in range(len(grid) - 1)
        ):
            raise ValueError("c_grid must be positive and strictly increasing")
        if self.inner_folds < 2:
            raise ValueError(f"inner_folds must be >= 2, got {self.inner_folds}")
        if self.criterion is not None and self.criterion not in CRITERIA:
            raise ValueError(f"criterion must be one of {CRITERIA}, got {self.criterion!r}")
        if self.inner_split not in INNER_SPLITS:
            raise ValueError(f"inner_split must be one of {INNER_SPLITS}")
        if self.pair_cap < 1:
            raise ValueError(f"pair_cap must be >= 1, got {self.pair_cap}")


@dataclass(frozen=True)
class LinearModel:
    """A fitted sparse linear scorer plus everything needed to re-score."""

    weights: np.ndarray
    intercept: float
    norm_stats: NormStats
    method: str
    delta_used: float | None
    c_used: float
    feature_names: list[str] = field(default_factory=list)

    def __post_init__(self):
        if len(self.weights) != len(self.norm_stats.means):
            raise DataError("model weights do not match norm stats dimension")
        if self.method == "ranking_svm" and self.intercept != 0.0:
            raise DataError("ranking models must have intercept exactly 0")


def _resolve_criterion(method: str, search: HyperSearchSpec) -> str:
    want = _CRITERION_FOR[method]
    if search.criterion is not None and search.criterion != want:
        raise ValueError(
            f"criterion {search.criterion!r} is not valid for {method} (uses {want!r})"
        )
    return want


def _one_se_pick(c_grid, fold_scores) -> float:
    """Smallest c whose mean criterion is within one standard error of the best.

    fold_scores: (n_folds, n_c) array, higher is better. With a single
    contributing fold the standard error is taken as zero.
    """
    scores = np.asarray(fold_scores, float)
    mean = scores.mean(axis=0)
    best = int(np.argmax(mean))
    if scores.shape[0] > 1:
        se = float(scores[:, best].std(ddof=1) / np.sqrt(scores.shape[0]))
    else:
        se = 0.0
    ok = np.flatnonzero(mean >= mean[best] - se)
    return float(c_grid[int(ok[0])])


def _partition(items: np.ndarray, k: int, rng) -> list[np.ndarray]:
    perm = rng.permutation(items)
    return [np.sort(part) for part in np.array_split(perm, k)]


def _grid_path(X, y, c_grid, loss, fit_intercept, tol, max_epochs, eval_one):
    """Warm-started ascending-c sweep; eval_one(w, b) -> criterion or None."""
    n_terms = X.shape[0]
    w = np.zeros(X.shape[1])
    b = 0.0
    out = np.empty(len(c_grid))
    for k, c in enumerate(c_grid):
        cfg = SolverConfig(
            c=c / n_terms, loss=loss, fit_intercept=fit_intercept,
            tol=tol, max_epochs=max_epochs,
        )
        res = fit_l1_linear(X, y, cfg, w0=w, b0=b)
        w, b = res.weights, res.intercept
        val = eval_one(w, b)
        out[k] = np.nan if val is None else val
    return out


def _final_fit(X, y, c: float, loss: str, fit_intercept: bool):
    cfg = SolverConfig(c=c / X.shape[0], loss=loss, fit_intercept=fit_intercept)
    return fit_l1_linear(X, y, cfg)


def fit_ranking_svm(
    cohort: Cohort, rows, delta: float, search: HyperSearchSpec, seed: int = 0
) -> LinearModel:
    """Fit the intercept-free pairwise ranking model on `rows`.

    Normalizes on `rows`, builds the thresholded pair set, selects the
    regularization weight by inner cross-validation on pairwise accuracy,
    then refits on all pairs. Raises EmptyPairSetError when delta exceeds
    the rating spread of `rows`.
    """
    _resolve_criterion("ranking_svm", search)
    rows = np.unique(np.asarray(rows, int))
    stats = fit_norm_stats(cohort, rows)
    normed = apply_norm(cohort, stats)
    pairs = subsample_pairs(build_pairs(normed, rows, delta), search.pair_cap, seed)

    fold_scores = []
    rng = np.random.default_rng(seed)
    if search.inner_split == "patient":
        if rows.size >= 2 * search.inner_folds:
            for val_rows in _partition(rows, search.inner_folds, rng):
                train_rows = np.setdiff1d(rows, val_rows)
                try:
                    tr = subsample_pairs(
                        build_pairs(normed, train_rows, delta), search.pair_cap, seed
                    )
                    va = build_pairs(normed, val_rows, delta)
                except PairingError:
                    continue  # this inner fold cannot vote at this delta
                acc = _grid_path(
                    tr.diffs, tr.signs, search.c_grid, "squared_hinge", False,
                    _INNER_TOL, _INNER_MAX_EPOCHS,
                    lambda w, b, d=va.diffs, s=va.signs: pairwise_accuracy(d @ w, s),
                )
                fold_scores.append(acc)
    else:
        if pairs.n_pairs >= 2 * search.inner_folds:
            order = np.arange(pairs.n_pairs)
            for val_idx in _partition(order, search.inner_folds, rng):
                mask = np.ones(pairs.n_pairs, bool)
                mask[val_idx] = False
                td, ts = pairs.diffs[mask], pairs.signs[mask]
                vd, vs = pairs.diffs[val_idx], pairs.signs[val_idx]
                acc = _grid_path(
                    td, ts, search.c_grid, "squared_hinge", False,
                    _INNER_TOL, _INNER_MAX_EPOCHS,
                    lambda w, b, d=vd, s=vs: pairwise_accuracy(d @ w, s),
                )
                fold_scores.append(acc)

    if fold_scores:
        c_pick = _one_se_pick(search.c_grid, fold_scores)
    else:
        # No inner fold could vote (too few rows/pairs): least regularization
        # fits the available pairs instead of returning an all-zero model.
        c_pick = search.c_grid[-1]

    res = _final_fit(pairs.diffs, pairs.signs, c_pick, "squared_hinge", False)
    return LinearModel(
        res.weights, 0.0, stats, "ranking_svm", float(delta), c_pick,
        list(cohort.feature_names),
    )


def fit_baseline(
    cohort: Cohort, rows, method: str, search: HyperSearchSpec, seed: int = 0
) -> LinearModel:
    """Fit one of the per-patient baselines with an intercept on `rows`.

    linear_regression and svr regress the raw rating; classifier_svm
    classifies binary_label mapped to {-1,+1}. The regularization weight
    is selected by inner CV: mean squared error for the regressions,
    ROC-AUC for the classifier.
    """
    if method not in METHODS or method == "ranking_svm":
        raise ValueError(f"unknown baseline method {method!r}")
    criterion = _resolve_criterion(method, search)
    rows = np.unique(np.asarray(rows, int))
    if method == "classifier_svm":
        if cohort.binary_label is None:
            raise DataError("classifier_svm requires a binary label column")
        y_all = 2.0 * cohort.binary_label.astype(float) - 1.0
    else:
        y_all = cohort.rating

    stats = fit_norm_stats(cohort, rows)
    normed = apply_norm(cohort, stats)
    loss = _LOSS_FOR[method]

    def eval_on(val_rows):
        zv = normed.features[val_rows]
        yv = y_all[val_rows]

        def ev(w, b):
            pred = zv @ w + b
            if criterion == "mse":
                return -float(np.mean((pred - yv) ** 2))
            try:
                return roc_auc(pred, (yv > 0).astype(int))
            except MetricError:
                return None  # single-class validation fold cannot vote

        return ev

    fold_scores = []
    rng = np.random.default_rng(seed)
    if rows.size >= 2 * search.inner_folds:
        for val_rows in _partition(rows, search.inner_folds, rng):
            train_rows = np.setdiff1d(rows, val_rows)
            acc = _grid_path(
                normed.features[train_rows], y_all[train_rows], search.c_grid,
                loss, True, _INNER_TOL, _INNER_MAX_EPOCHS, eval_on(val_rows),
            )
            if not np.isnan(acc).any():
                fold_scores.append(acc)

    if fold_scores:
        c_pick = _one_se_pick(search.c_grid, fold_scores)
    else:
        c_pick = search.c_grid[-1]

    res = _final_fit(normed.features[rows], y_all[rows], c_pick, loss, True)
    return LinearModel(
        res.weights, res.intercept, stats, method, None, c_pick,
        list(cohort.feature_names),
    )


def score(model: LinearModel, cohort: Cohort, rows) -> np.ndarray:
    """w.x + intercept per row, after applying the model's normalization."""
    if cohort.m != len(model.weights):
        raise DataError(
            f"model has {len(model.weights)} weights, cohort has {cohort.m} features"
        )
    rows = np.asarray(rows, int)
    z = (cohort.features[rows] - model.norm_stats.means) / model.norm_stats.stds
    if model.norm_stats.constant.any():
        z[:, model.norm_stats.constant] = 0.0
    return z @ model.weights + model.intercept


def nonzero_count(model: LinearModel) -> int:
    """Number of weights with magnitude above 1e-10; intercept excluded."""
    return int((np.abs(model.weights) > 1e-10).sum())


def model_to_dict(model: LinearModel) -> dict:
    return {
        "method": model.method,
        "delta_used": model.delta_used,
        "c_used": model.c_used,
        "feature_names": list(model.feature_names),
        "weights": [float(w) for w in model.weights],
        "intercept": float(model.intercept),
        "norm_stats": {
            "means": [float(v) for v in model.norm_stats.means],
            "stds": [float(v) for v in model.norm_stats.stds],
            "constant": [bool(v) for v in model.norm_stats.constant],
        },
    }


def model_from_dict(doc: dict) -> LinearModel:
    stats = NormStats(
        np.asarray(doc["norm_stats"]["means"], float),
        np.asarray(doc["norm_stats"]["stds"], float),
        np.asarray(doc["norm_stats"]["constant"], bool),
    )
    return LinearModel(
        np.asarray(doc["weights"], float),
        float(doc["intercept"]),
        stats,
        doc["method"],
        None if doc["delta_used"] is None else float(doc["delta_used"]),
        float(doc["c_used"]),
        list(doc["feature_names"]),
    )


def save_model(model: LinearModel, path) -> None:
    with open(path, "w", encoding="utf-8") as fh:
        json.dump(model_to_dict(model), fh, indent=2, sort_keys=True)
        fh.write("\n")


def load_model(path) -> LinearModel:
    with open(path, encoding="utf-8") as fh:
        return model_from_dict(json.load(fh))

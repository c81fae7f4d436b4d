"""Correlation and ranking metrics shared by model selection and evaluation."""

from __future__ import annotations

import numpy as np
from scipy.stats import rankdata

from .errors import MetricError


def _check_pair(a, b, name: str):
    a = np.asarray(a, float).ravel()
    b = np.asarray(b, float).ravel()
    if a.shape[0] != b.shape[0]:
        raise MetricError(f"{name}: length mismatch ({a.shape[0]} vs {b.shape[0]})")
    if a.shape[0] < 2:
        raise MetricError(f"{name}: need at least 2 observations, got {a.shape[0]}")
    if not (np.isfinite(a).all() and np.isfinite(b).all()):
        raise MetricError(f"{name}: non-finite values in input")
    return a, b


def pearson(a, b) -> float:
    """Pearson correlation; raises MetricError on constant input, never NaN."""
    a, b = _check_pair(a, b, "pearson")
    da = a - a.mean()
    db = b - b.mean()
    na = np.sqrt((da * da).sum())
    nb = np.sqrt((db * db).sum())
    if na == 0.0 or nb == 0.0:
        raise MetricError("pearson: constant input has no defined correlation")
    return float((da * db).sum() / (na * nb))


def spearman(a, b) -> float:
    """Pearson correlation of average ranks (ties get average ranks)."""
    a, b = _check_pair(a, b, "spearman")
    return pearson(rankdata(a), rankdata(b))


def roc_auc(scores, labels) -> float:
    """Mann-Whitney ROC-AUC: P(score_pos > score_neg) with ties counted 0.5.

    Computed via the rank-sum identity, which matches the exhaustive
    pair enumeration exactly, ties included.
    """
    scores = np.asarray(scores, float).ravel()
    labels = np.asarray(labels).ravel()
    if scores.shape[0] != labels.shape[0]:
        raise MetricError(
            f"roc_auc: length mismatch ({scores.shape[0]} vs {labels.shape[0]})"
        )
    if not np.isfinite(scores).all():
        raise MetricError("roc_auc: non-finite scores")
    if not np.isin(labels, (0, 1)).all():
        raise MetricError("roc_auc: labels must be 0 or 1")
    n_pos = int((labels == 1).sum())
    n_neg = int((labels == 0).sum())
    if n_pos == 0 or n_neg == 0:
        raise MetricError("roc_auc: needs both classes present")
    ranks = rankdata(scores)
    rank_sum = ranks[labels == 1].sum()
    return float((rank_sum - n_pos * (n_pos + 1) / 2.0) / (n_pos * n_neg))


def pairwise_accuracy(pred, signs) -> float:
    """Fraction of pairs ordered like their sign label; ties score 0.5."""
    pred = np.asarray(pred, float).ravel()
    signs = np.asarray(signs, float).ravel()
    if pred.shape[0] != signs.shape[0]:
        raise MetricError(
            f"pairwise_accuracy: length mismatch ({pred.shape[0]} vs {signs.shape[0]})"
        )
    if pred.shape[0] == 0:
        raise MetricError("pairwise_accuracy: empty input")
    margin = pred * signs
    return float(((margin > 0).sum() + 0.5 * (margin == 0).sum()) / pred.shape[0])

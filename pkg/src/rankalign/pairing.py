"""Threshold-based pair construction for ranking.

Every pair of rows whose ratings differ by at least delta (and are not
tied) yields one training example: the feature difference x_i - x_j with
label sign(y_i - y_j). Only i < j is kept; the mirrored pair carries no
extra information for an intercept-free linear model.
"""

from __future__ import annotations

from dataclasses import dataclass

import numpy as np

from .cohort import Cohort
from .errors import EmptyPairSetError, PairingError

DEFAULT_PAIR_CAP = 200_000


@dataclass(frozen=True)
class PairSet:
    """Difference vectors with sign labels from delta-thresholding."""

    diffs: np.ndarray  # P x m, rows are x_i - x_j
    signs: np.ndarray  # length P, values in {-1, +1}
    index_pairs: list  # (i, j) cohort row indices, i < j
    delta: float

    @property
    def n_pairs(self) -> int:
        return self.diffs.shape[0]


def build_pairs(cohort: Cohort, rows, delta: float) -> PairSet:
    """Build the exact pair set over `rows` in lexicographic (i, j) order.

    A pair (i, j) with i < j is kept iff |y_i - y_j| >= delta and
    y_i != y_j; its sign is sign(y_i - y_j), never zero. Raises
    EmptyPairSetError when thresholding leaves nothing, so callers can
    report that delta is too large for the data at hand.
    """
    if delta < 0:
        raise PairingError(f"delta must be >= 0, got {delta}")
    rows = np.sort(np.asarray(rows, int))
    if rows.size < 2:
        raise PairingError(f"need at least 2 rows to build pairs, got {rows.size}")

    y = cohort.rating[rows]
    ii, jj = np.triu_indices(rows.size, k=1)
    dy = y[ii] - y[jj]
    keep = (np.abs(dy) >= delta) & (dy != 0.0)
    if not keep.any():
        raise EmptyPairSetError(
            f"no rating pairs differ by at least delta={delta} (over {rows.size} rows)"
        )
    ii, jj, dy = ii[keep], jj[keep], dy[keep]
    # triu_indices is already lexicographic in (i, j)
    gi, gj = rows[ii], rows[jj]
    diffs = cohort.features[gi] - cohort.features[gj]
    signs = np.where(dy > 0, 1.0, -1.0)
    return PairSet(diffs, signs, list(zip(gi.tolist(), gj.tolist())), float(delta))


def subsample_pairs(pairs: PairSet, cap: int = DEFAULT_PAIR_CAP, seed: int = 0) -> PairSet:
    """Cap a PairSet at `cap` pairs via seeded uniform subsampling.

    Identity when the set already fits. The surviving pairs keep their
    lexicographic order.
    """
    if cap < 1:
        raise PairingError(f"cap must be >= 1, got {cap}")
    p = pairs.n_pairs
    if p <= cap:
        return pairs
    rng = np.random.default_rng(seed)
    sel = np.sort(rng.choice(p, size=cap, replace=False))
    return PairSet(
        pairs.diffs[sel],
        pairs.signs[sel],
        [pairs.index_pairs[k] for k in sel],
        pairs.delta,
    )

"""Synthetic cohorts with a known latent severity.

Severity is a single Beta(2, 3) factor, but no feature measures it
directly: each informative feature reads the severity through its own
bounded deviation (think of instruments that track the same disease
process but disagree within a calibration band), then through a
monotone link. Because the deviations are bounded, any single feature
already orders two patients correctly whenever their severities differ
by more than the band width; misreadings are confined to close pairs,
where averaging several independent readings genuinely helps. How many
features a ranking model needs therefore depends on how far apart the
compared patients are. The subjective rating is severity on a 0-100
scale plus Gaussian noise, so nearby patients are frequently
mis-ordered, which is the premise the delta threshold exists for.
"""

from __future__ import annotations

import json
import os
from dataclasses import dataclass

import numpy as np

from .cohort import Cohort, save_cohort
from .errors import DataError


@dataclass(frozen=True)
class GeneratorConfig:
    """Distribution parameters of the synthetic cohort."""

    n: int = 391
    m: int = 30
    k_informative: int = 8
    rating_noise_std: float = 10.0
    feature_noise_std: float = 0.5
    prevalence_target: float = 0.35
    label_noise_rate: float = 0.05
    correlated_extras: int = 4
    seed: int = 0

    def __post_init__(self):
        if self.n < 1 or self.m < 1 or self.k_informative < 1:
            raise DataError("n, m and k_informative must be positive")
        if self.correlated_extras < 0:
            raise DataError("correlated_extras must be >= 0")
        if self.k_informative + self.correlated_extras > self.m:
            raise DataError("k_informative + correlated_extras must not exceed m")
        if not (0.0 < self.prevalence_target < 1.0):
            raise DataError("prevalence_target must lie in (0, 1)")
        if not (0.0 <= self.label_noise_rate < 0.5):
            raise DataError("label_noise_rate must lie in [0, 0.5)")
        if self.rating_noise_std < 0.0 or self.feature_noise_std < 0.0:
            raise DataError("noise levels must be >= 0")


@dataclass(frozen=True)
class SynthCohort:
    """Generated cohort plus the ground truth the cohort itself hides."""

    cohort: Cohort
    latent: np.ndarray
    true_support: list[int]


def _sigmoid(x):
    return 1.0 / (1.0 + np.exp(-np.clip(x, -60.0, 60.0)))


# Reading deviations are bounded on the severity scale, so patients
# further apart than the total band are ordered correctly by every
# informative feature. The dominant part of the deviation is shared
# with opposite sign inside a feature pair, so close comparisons keep
# improving as the model assembles both halves of each pair.
_DEVIATION_BOUND = 0.06
_DEVIATION_JITTER = 0.02


def _link_value(k: int, u: np.ndarray) -> np.ndarray:
    """Monotone link applied by informative feature k to its component."""
    if k % 4 == 1:
        return _sigmoid(5.0 * (u - 0.45))
    if k % 4 == 3:
        return _sigmoid(4.0 * (u - 0.35))
    return u


_STRONG_AMPS = (4.0, 3.4, 2.8, 2.4, 2.0, 1.7, 1.45, 1.2)


def _amp(k: int) -> float:
    if k < len(_STRONG_AMPS):
        return _STRONG_AMPS[k]
    return 0.05 * 0.8 ** (k - len(_STRONG_AMPS))


def generate(config: GeneratorConfig) -> SynthCohort:
    """Draw one cohort from the configured distribution, reproducibly.

    Severity ~ Beta(2, 3). Informative feature k reads the severity plus
    a bounded deviation (a shared part, opposite in sign within each
    consecutive feature pair, plus an independent jitter), through a
    standardized monotone link, scaled by a decaying amplitude ladder,
    with random sign and additive Gaussian noise. Extras are noisy
    copies of the weakest informative columns; everything else is pure
    noise. The label thresholds severity at a population quantile placed
    so that expected prevalence after independent label flips equals
    prevalence_target.
    """
    rng = np.random.default_rng(config.seed)
    n, m, k_inf = config.n, config.m, config.k_informative
    latent = rng.beta(2.0, 3.0, size=n)
    shared = rng.uniform(-_DEVIATION_BOUND, _DEVIATION_BOUND,
                         size=(n, (k_inf + 1) // 2))
    dev = rng.uniform(-_DEVIATION_JITTER, _DEVIATION_JITTER, size=(n, k_inf))
    for k in range(k_inf):
        dev[:, k] += shared[:, k // 2] * (1.0 if k % 2 == 0 else -1.0)

    X = np.empty((n, m))
    for k in range(k_inf):
        v = _link_value(k, latent + dev[:, k])
        sd = v.std()
        z = (v - v.mean()) / sd if sd > 0 else np.zeros(n)
        sign = 1.0 if rng.random() < 0.5 else -1.0
        X[:, k] = sign * _amp(k) * z + rng.normal(0.0, config.feature_noise_std, n)
    for e in range(config.correlated_extras):
        src = (k_inf - 1) - (e % k_inf)
        X[:, k_inf + e] = X[:, src] + rng.normal(0.0, config.feature_noise_std, n)
    for j in range(k_inf + config.correlated_extras, m):
        X[:, j] = rng.normal(0.0, 1.0, n)

    rating = np.clip(100.0 * latent + rng.normal(0.0, config.rating_noise_std, n), 0.0, 100.0)

    # Place the threshold so prevalence is hit after flips, not before:
    # solve p*(1-q) + (1-p)*q = target for the pre-flip rate p.
    q = config.label_noise_rate
    p_pre = (config.prevalence_target - q) / (1.0 - 2.0 * q)
    if not (0.0 < p_pre < 1.0):
        raise DataError(
            f"prevalence_target {config.prevalence_target} unreachable "
            f"with label_noise_rate {q}"
        )
    threshold = float(np.quantile(latent, 1.0 - p_pre))
    label = (latent > threshold).astype(int)
    flip = rng.random(n) < q
    label = np.where(flip, 1 - label, label)

    width = len(str(n))
    ids = [f"P{i + 1:0{width}d}" for i in range(n)]
    names = [f"f{j}" for j in range(m)]
    cohort = Cohort(ids, X, names, rating, label)
    return SynthCohort(cohort, latent, list(range(k_inf + config.correlated_extras)))


def write_cohort(synth: SynthCohort, path, include_latent: bool = False) -> None:
    """Write the cohort CSV; ground truth goes to a sidecar only on request.

    The sidecar (<path minus .csv>.latent.json) holds the latent severity
    and the indices of the influenced (informative + copied) columns.
    """
    save_cohort(synth.cohort, path)
    if not include_latent:
        return
    base = os.fspath(path)
    if base.endswith(".csv"):
        base = base[: -len(".csv")]
    sidecar = {
        "latent": [float(v) for v in synth.latent],
        "true_support": [int(j) for j in synth.true_support],
        "support_columns": [synth.cohort.feature_names[j] for j in synth.true_support],
    }
    with open(base + ".latent.json", "w", encoding="utf-8") as fh:
        json.dump(sidecar, fh, indent=2, sort_keys=True)
        fh.write("\n")

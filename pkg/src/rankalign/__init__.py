"""rankalign: sparse pairwise ranking of subjective ratings against features.

Trains an L1-regularized linear ranking model on pairs of patients whose
0-100 ratings differ by at least a threshold delta, so the model learns
from reliable orderings and ignores differences that are plausibly rating
noise. Ships regression/classification baselines, a repeated
cross-validation harness, and a synthetic cohort generator.
"""

from .cohort import (
    Cohort,
    NormStats,
    apply_norm,
    fit_norm_stats,
    load_cohort,
    save_cohort,
)
from .errors import (
    DataError,
    EmptyPairSetError,
    MetricError,
    PairingError,
    RankalignError,
    SolverInputError,
)
from .evaluation import (
    EvalReport,
    RunRecord,
    cohort_fingerprint,
    cross_val_scores,
    emit_report,
    pearson,
    roc_auc,
    run_experiment,
    spearman,
    sweep_delta,
    write_patient_scores,
)
from .models import (
    DEFAULT_C_GRID,
    METHODS,
    HyperSearchSpec,
    LinearModel,
    fit_baseline,
    fit_ranking_svm,
    load_model,
    model_from_dict,
    model_to_dict,
    nonzero_count,
    save_model,
    score,
)
from .optim import FitResult, SolverConfig, fit_l1_linear, kkt_residual, objective
from .pairing import DEFAULT_PAIR_CAP, PairSet, build_pairs, subsample_pairs
from .synthgen import GeneratorConfig, SynthCohort, generate, write_cohort

__version__ = "0.1.0"

__all__ = [
    "Cohort", "NormStats", "load_cohort", "save_cohort",
    "fit_norm_stats", "apply_norm",
    "PairSet", "build_pairs", "subsample_pairs", "DEFAULT_PAIR_CAP",
    "SolverConfig", "FitResult", "fit_l1_linear", "objective", "kkt_residual",
    "LinearModel", "HyperSearchSpec", "METHODS", "DEFAULT_C_GRID",
    "fit_ranking_svm", "fit_baseline", "score", "nonzero_count",
    "model_to_dict", "model_from_dict", "save_model", "load_model",
    "RunRecord", "EvalReport", "pearson", "spearman", "roc_auc",
    "cross_val_scores", "run_experiment", "sweep_delta",
    "cohort_fingerprint", "emit_report", "write_patient_scores",
    "GeneratorConfig", "SynthCohort", "generate", "write_cohort",
    "RankalignError", "DataError", "PairingError", "EmptyPairSetError",
    "SolverInputError", "MetricError",
    "__version__",
]

"""Command-line interface: generate, fit, score, evaluate, sweep-delta.

Exit codes: 0 success, 1 usage error, 2 data or model error. Diagnostics
go to stderr; data goes to the requested output files.
"""

from __future__ import annotations

import argparse
import csv
import sys
from dataclasses import dataclass, field

import numpy as np

from .cohort import load_cohort
from .errors import RankalignError
from .evaluation import (
    emit_report,
    run_experiment,
    sweep_delta,
    write_patient_scores,
)
from .models import (
    DEFAULT_C_GRID,
    METHODS,
    HyperSearchSpec,
    fit_baseline,
    fit_ranking_svm,
    load_model,
    save_model,
    score,
)
from .pairing import DEFAULT_PAIR_CAP
from .synthgen import GeneratorConfig, generate, write_cohort

DEFAULT_DELTA = 15.0
DEFAULT_FOLDS = 5
DEFAULT_RUNS = 100
DEFAULT_BASE_SEED = 42
DEFAULT_METHODS = "ranking_svm,linear_regression,svr,classifier_svm,raw_da"


@dataclass
class CliConfig:
    """Parsed invocation: subcommand plus the experiment-level settings."""

    subcommand: str
    input: str | None = None
    output: str | None = None
    roles: dict = field(default_factory=dict)
    delta: float = DEFAULT_DELTA
    deltas: list = field(default_factory=list)
    folds: int = DEFAULT_FOLDS
    runs: int = DEFAULT_RUNS
    base_seed: int = DEFAULT_BASE_SEED
    methods: list = field(default_factory=list)
    c_grid: tuple | None = None
    inner_folds: int = 3
    stratified: bool = False
    global_tuning: bool = False
    inner_split: str = "pair"
    pair_cap: int = DEFAULT_PAIR_CAP
    jobs: int = 1
    format: str = "json"


def _comma_floats(text: str) -> list[float]:
    try:
        return [float(tok) for tok in text.split(",") if tok.strip() != ""]
    except ValueError:
        raise argparse.ArgumentTypeError(f"not a comma-separated float list: {text!r}")


def _add_role_flags(sp):
    sp.add_argument("--id-column", default="id", help="name of the identifier column")
    sp.add_argument("--rating-column", default="da", help="name of the 0-100 rating column")
    sp.add_argument(
        "--label-column", default="label",
        help="name of the binary label column; 'none' to ignore any label",
    )


def _add_search_flags(sp):
    sp.add_argument(
        "--c-grid", type=_comma_floats, default=None, metavar="C1,C2,...",
        help="override the regularization grid (default: 15 values, 2^-10..2^4)",
    )
    sp.add_argument("--inner-folds", type=int, default=3, help="inner CV folds for selection")
    sp.add_argument(
        "--patient-split", action="store_true",
        help="ranking inner CV holds out patients instead of pairs",
    )
    sp.add_argument(
        "--pair-cap", type=int, default=DEFAULT_PAIR_CAP,
        help="subsample pair sets above this size",
    )


def _add_experiment_flags(sp):
    sp.add_argument("--folds", type=int, default=DEFAULT_FOLDS, help="outer CV folds")
    sp.add_argument("--runs", type=int, default=DEFAULT_RUNS, help="repetitions with fresh splits")
    sp.add_argument("--seed", type=int, default=DEFAULT_BASE_SEED, help="base seed; run r uses seed+r")
    sp.add_argument("--stratified", action="store_true", help="label-stratified outer folds")
    sp.add_argument(
        "--global-tuning", action="store_true",
        help="select the regularization weight once on the full cohort instead of per fold",
    )
    sp.add_argument("--jobs", type=int, default=1, help="max parallel workers; output independent of this")
    _add_search_flags(sp)


def build_parser() -> argparse.ArgumentParser:
    parser = argparse.ArgumentParser(
        prog="rankalign",
        description="Align subjective 0-100 ratings with objective features "
        "via a sparse pairwise ranking model.",
    )
    sub = parser.add_subparsers(dest="subcommand", required=True)
    fmt = argparse.ArgumentDefaultsHelpFormatter

    g = sub.add_parser("generate", formatter_class=fmt, help="write a synthetic cohort CSV")
    g.add_argument("--output", required=True, help="cohort CSV path")
    g.add_argument("--n", type=int, default=391, help="number of patients")
    g.add_argument("--m", type=int, default=30, help="number of features")
    g.add_argument("--k-informative", type=int, default=8, help="features linked to severity")
    g.add_argument("--extras", type=int, default=4, help="noisy copies of informative features")
    g.add_argument("--rating-noise", type=float, default=10.0, help="rating noise std, VAS units")
    g.add_argument("--feature-noise", type=float, default=0.5, help="feature noise std")
    g.add_argument("--prevalence", type=float, default=0.35, help="expected label prevalence")
    g.add_argument("--label-noise", type=float, default=0.05, help="independent label flip rate")
    g.add_argument("--seed", type=int, default=0, help="generator seed")
    g.add_argument("--include-latent", action="store_true",
                   help="also write the ground-truth sidecar JSON")

    f = sub.add_parser("fit", formatter_class=fmt, help="fit one model on the full cohort")
    f.add_argument("--input", required=True, help="cohort CSV path")
    f.add_argument("--output", required=True, help="model JSON path")
    f.add_argument("--method", choices=METHODS, default="ranking_svm")
    f.add_argument("--delta", type=float, default=DEFAULT_DELTA,
                   help="minimum rating difference for a training pair")
    f.add_argument("--seed", type=int, default=DEFAULT_BASE_SEED, help="selection split seed")
    _add_search_flags(f)
    _add_role_flags(f)

    s = sub.add_parser("score", formatter_class=fmt, help="apply a saved model to a cohort")
    s.add_argument("--input", required=True, help="cohort CSV path")
    s.add_argument("--model", required=True, help="model JSON path")
    s.add_argument("--output", required=True, help="scores CSV path (id,score)")
    _add_role_flags(s)

    e = sub.add_parser("evaluate", formatter_class=fmt,
                       help="repeated cross-validated comparison of methods")
    e.add_argument("--input", required=True, help="cohort CSV path")
    e.add_argument("--output", required=True, help="report path")
    e.add_argument("--format", choices=("json", "csv"), default="json")
    e.add_argument("--methods", default=DEFAULT_METHODS,
                   help="comma-separated method list")
    e.add_argument("--delta", type=float, default=DEFAULT_DELTA,
                   help="minimum rating difference for a training pair")
    e.add_argument("--scores-csv", default=None,
                   help="also write per-patient out-of-fold scores here")
    _add_experiment_flags(e)
    _add_role_flags(e)

    w = sub.add_parser("sweep-delta", formatter_class=fmt,
                       help="rerun the ranking experiment across delta values")
    w.add_argument("--input", required=True, help="cohort CSV path")
    w.add_argument("--output", required=True, help="report path")
    w.add_argument("--format", choices=("json", "csv"), default="json")
    w.add_argument("--deltas", type=_comma_floats, default=[10.0, 20.0, 30.0, 40.0],
                   metavar="D1,D2,...", help="delta values to sweep")
    _add_experiment_flags(w)
    _add_role_flags(w)
    return parser


def _roles_from(args) -> dict:
    roles = {"id": args.id_column, "rating": args.rating_column}
    if args.label_column != "none":
        roles["label"] = args.label_column
    else:
        roles["label"] = None
    return roles


def _search_from(args) -> HyperSearchSpec:
    grid = tuple(args.c_grid) if args.c_grid else DEFAULT_C_GRID
    return HyperSearchSpec(
        c_grid=grid,
        inner_folds=args.inner_folds,
        inner_split="patient" if args.patient_split else "pair",
        pair_cap=args.pair_cap,
    )


def _parse_methods(text: str) -> list[str]:
    methods = [tok.strip() for tok in text.split(",") if tok.strip() != ""]
    known = set(METHODS) | {"raw_da"}
    for mth in methods:
        if mth not in known:
            raise ValueError(f"unknown method {mth!r}; choose from {sorted(known)}")
    if not methods:
        raise ValueError("method list is empty")
    return methods


def _cmd_generate(args) -> int:
    config = GeneratorConfig(
        n=args.n, m=args.m, k_informative=args.k_informative,
        rating_noise_std=args.rating_noise, feature_noise_std=args.feature_noise,
        prevalence_target=args.prevalence, label_noise_rate=args.label_noise,
        correlated_extras=args.extras, seed=args.seed,
    )
    synth = generate(config)
    write_cohort(synth, args.output, include_latent=args.include_latent)
    print(f"wrote {args.output} ({config.n} rows, {config.m} features)", file=sys.stderr)
    return 0


def _cmd_fit(args) -> int:
    cohort = load_cohort(args.input, _roles_from(args))
    search = _search_from(args)
    rows = np.arange(cohort.n)
    if args.method == "ranking_svm":
        model = fit_ranking_svm(cohort, rows, args.delta, search, seed=args.seed)
    else:
        model = fit_baseline(cohort, rows, args.method, search, seed=args.seed)
    save_model(model, args.output)
    nz = int((np.abs(model.weights) > 1e-10).sum())
    print(f"wrote {args.output} ({args.method}, c={model.c_used:g}, "
          f"{nz} nonzero weights)", file=sys.stderr)
    return 0


def _cmd_score(args) -> int:
    cohort = load_cohort(args.input, _roles_from(args))
    model = load_model(args.model)
    values = score(model, cohort, np.arange(cohort.n))
    with open(args.output, "w", newline="", encoding="utf-8") as fh:
        writer = csv.writer(fh)
        writer.writerow(("id", "score"))
        for pid, val in zip(cohort.ids, values):
            writer.writerow((pid, repr(float(val))))
    print(f"wrote {args.output} ({cohort.n} rows)", file=sys.stderr)
    return 0


def _cmd_evaluate(args, cfg: CliConfig) -> int:
    cohort = load_cohort(args.input, cfg.roles)
    search = _search_from(args)
    report = run_experiment(
        cohort, cfg.methods, cfg.delta, search, cfg.folds, cfg.runs, cfg.base_seed,
        stratified=cfg.stratified, global_tuning=cfg.global_tuning, jobs=cfg.jobs,
        keep_scores=args.scores_csv is not None,
    )
    emit_report(report, cfg.output, cfg.format)
    if args.scores_csv is not None:
        write_patient_scores(report, args.scores_csv)
        print(f"wrote {args.scores_csv}", file=sys.stderr)
    print(f"wrote {cfg.output} ({len(report.records)} records)", file=sys.stderr)
    return 0


def _cmd_sweep(args, cfg: CliConfig) -> int:
    cohort = load_cohort(args.input, cfg.roles)
    search = _search_from(args)
    report = sweep_delta(
        cohort, cfg.deltas, search, cfg.folds, cfg.runs, cfg.base_seed,
        stratified=cfg.stratified, global_tuning=cfg.global_tuning, jobs=cfg.jobs,
    )
    emit_report(report, cfg.output, cfg.format)
    for err in report.errors:
        print(f"delta {err['delta']:g} skipped: {err['error']}", file=sys.stderr)
    print(f"wrote {cfg.output} ({len(report.records)} records)", file=sys.stderr)
    return 0


def main(argv=None) -> int:
    parser = build_parser()
    try:
        args = parser.parse_args(argv)
    except SystemExit as exc:
        # argparse exits 2 on usage problems and 0 for --help
        return 0 if exc.code == 0 else 1
    try:
        if args.subcommand == "generate":
            return _cmd_generate(args)
        if args.subcommand == "fit":
            return _cmd_fit(args)
        if args.subcommand == "score":
            return _cmd_score(args)
        cfg = CliConfig(
            subcommand=args.subcommand,
            input=args.input,
            output=args.output,
            roles=_roles_from(args),
            folds=args.folds,
            runs=args.runs,
            base_seed=args.seed,
            c_grid=tuple(args.c_grid) if args.c_grid else None,
            inner_folds=args.inner_folds,
            stratified=args.stratified,
            global_tuning=args.global_tuning,
            inner_split="patient" if args.patient_split else "pair",
            pair_cap=args.pair_cap,
            jobs=args.jobs,
            format=args.format,
        )
        if args.subcommand == "evaluate":
            cfg.delta = args.delta
            cfg.methods = _parse_methods(args.methods)
            return _cmd_evaluate(args, cfg)
        cfg.deltas = list(args.deltas)
        return _cmd_sweep(args, cfg)
    except ValueError as exc:
        print(f"usage error: {exc}", file=sys.stderr)
        return 1
    except RankalignError as exc:
        print(f"error: {exc}", file=sys.stderr)
        return 2
    except OSError as exc:
        print(f"error: {exc}", file=sys.stderr)
        return 2


if __name__ == "__main__":
    sys.exit(main())

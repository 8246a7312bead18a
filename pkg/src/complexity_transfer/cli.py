"""Command line entry point: ``complexity-transfer {synth,prior,adapt,sweep,baseline}``."""

from __future__ import annotations

import argparse
import json
import sys
import time
from pathlib import Path

from .active import ActiveConfig, make_hidden_label_oracle, run_active_learning
from .adapt import evaluate, run_map_adaptation
from .capacity import CapacityParams
from .dataset import ShiftSpec, SplitSpec, load_csv, make_shifted_pair, save_csv, split_unlabeled
from .harness import ExperimentSpec, run_baseline_fixed_theta, run_experiment
from .learner import NetConfig, save_model, training_counter
from .prior import ComplexityPrior, PriorConfig, estimate_prior


def _net_args(p):
    p.add_argument("--epochs", type=int, default=200)
    p.add_argument("--learning-rate", type=float, default=0.05)
    p.add_argument("--batch-size", type=int, default=32)


def _grid_args(p):
    p.add_argument("--theta-min", type=int, default=2)
    p.add_argument("--theta-max", type=int, default=50)


def _common(p):
    p.add_argument("--seed", type=int, default=0)
    p.add_argument("--out-dir", type=Path, default=Path("."))
    p.add_argument("--label-column", default="label")


def _active_args(p):
    p.add_argument("--initial", type=int, default=10, help="initial labeled sample size r")
    p.add_argument("--batch-per-query", type=int, default=1)
    p.add_argument("--alpha", type=float, default=1.0)
    p.add_argument("--delta", type=float, default=0.05)


def build_parser() -> argparse.ArgumentParser:
    parser = argparse.ArgumentParser(
        prog="complexity-transfer",
        description="Transfer a hidden-width prior from a labeled source to an actively labeled target.",
    )
    sub = parser.add_subparsers(dest="command", required=True)

    p = sub.add_parser("synth", help="write a synthetic shifted source/target CSV pair")
    p.add_argument("--n-features", type=int, default=2)
    p.add_argument("--classes", type=int, default=2)
    p.add_argument("--source-size", type=int, default=600)
    p.add_argument("--target-size", type=int, default=1200)
    p.add_argument("--marginal-shift", type=float, default=0.5)
    p.add_argument("--posterior-shift", type=float, default=0.25)
    p.add_argument("--noise", type=float, default=0.12)
    _common(p)

    p = sub.add_parser("prior", help="fit the width prior on a source table and save it as JSON")
    p.add_argument("--source", type=Path, required=True)
    p.add_argument("--k", type=int, default=100)
    p.add_argument("--sample-fraction", type=float, default=0.8)
    p.add_argument("--validation-fraction", type=float, default=0.3)
    p.add_argument("--n-jobs", type=int, default=None)
    _grid_args(p)
    _net_args(p)
    _common(p)

    p = sub.add_parser("adapt", help="query the target and pick the MAP width given a saved prior")
    p.add_argument("--prior", type=Path, required=True)
    p.add_argument("--target", type=Path, required=True)
    p.add_argument("--budget", type=int, default=100)
    p.add_argument("--test-fraction", type=float, default=0.5,
                   help="share of the target held out for testing (0 uses it all as the query pool)")
    _active_args(p)
    _grid_args(p)
    _net_args(p)
    _common(p)

    for name, helptext in (("sweep", "budget sweep of the full pipeline"),
                           ("baseline", "fixed-width active-learning baseline with the source-only model")):
        p = sub.add_parser(name, help=helptext)
        p.add_argument("--source", type=Path, required=True)
        p.add_argument("--target", type=Path, required=True)
        p.add_argument("--prior", type=Path, help="saved prior; skips the source sweep")
        p.add_argument("--budgets", default="100", help="comma-separated, ascending")
        p.add_argument("--budget", type=int, help="single budget (overrides --budgets)")
        p.add_argument("--repetitions", type=int, default=10)
        p.add_argument("--k", type=int, default=100)
        _active_args(p)
        _grid_args(p)
        _net_args(p)
        _common(p)
        if name == "baseline":
            p.add_argument("--theta", type=int, default=25, help="fixed hidden width")
    return parser


def _net(args) -> NetConfig:
    return NetConfig(1, args.epochs, args.learning_rate, args.batch_size, args.seed)


def _write_json(path: Path, obj) -> None:
    path.parent.mkdir(parents=True, exist_ok=True)
    path.write_text(json.dumps(obj, indent=2), encoding="utf-8")


def cmd_synth(args) -> dict:
    spec = ShiftSpec(args.n_features, args.classes, args.source_size, args.target_size,
                     args.marginal_shift, args.posterior_shift, args.noise, args.seed)
    source, target = make_shifted_pair(spec)
    save_csv(source, args.out_dir / "source.csv", args.label_column)
    save_csv(target, args.out_dir / "target.csv", args.label_column)
    return {"source": str(args.out_dir / "source.csv"), "target": str(args.out_dir / "target.csv")}


def cmd_prior(args) -> dict:
    source = load_csv(args.source, args.label_column)
    config = PriorConfig(
        k=args.k,
        theta_grid=tuple(range(args.theta_min, args.theta_max + 1)),
        sample_fraction=args.sample_fraction,
        validation_fraction=args.validation_fraction,
        net_template=_net(args),
        seed=args.seed,
    )
    training_counter.reset()
    t0 = time.perf_counter()
    prior = estimate_prior(source, config, n_jobs=args.n_jobs)
    args.out_dir.mkdir(parents=True, exist_ok=True)
    prior.save(args.out_dir / "prior.json")
    return {"mu": prior.mu, "sigma": prior.sigma, "models_trained": training_counter.value,
            "seconds": time.perf_counter() - t0, "prior": str(args.out_dir / "prior.json")}


def cmd_adapt(args) -> dict:
    prior = ComplexityPrior.load(args.prior)
    target = load_csv(args.target, args.label_column)
    hidden = target.hide_labels()
    if args.test_fraction > 0:
        pool, test_pool = split_unlabeled(hidden, SplitSpec(1.0 - args.test_fraction, args.seed))
        test = test_pool.reveal()
    else:
        pool, test = hidden, None
    C = target.class_count
    training_counter.reset()
    t0 = time.perf_counter()
    oracle = make_hidden_label_oracle(pool)
    active = ActiveConfig(args.initial, args.budget, args.batch_per_query,
                          _net(args).with_theta(prior.mean_theta), args.seed)
    labeled_pool, _ = run_active_learning(pool, oracle, active, class_count=C)
    labeled = labeled_pool.to_table(pool, C)
    params = CapacityParams(labeled.n_features, C, args.alpha, args.delta, labeled.n_rows)
    result = run_map_adaptation(prior, labeled, params, _net(args), (args.theta_min, args.theta_max))

    out = args.out_dir
    out.mkdir(parents=True, exist_ok=True)
    labeled_pool.write_log(out / "query_log.csv")
    result.write_posterior_csv(out / "posterior.csv")
    save_model(result.final_model, out / "model.json")
    summary = result.summary()
    summary.update({
        "oracle_queries": oracle.query_count,
        "models_trained": training_counter.value,
        "seconds": time.perf_counter() - t0,
    })
    if test is not None:
        summary["test_accuracy"] = evaluate(result, test)
        summary["test_size"] = test.n_rows
    _write_json(out / "result.json", summary)
    return summary


def _spec(args) -> ExperimentSpec:
    budgets = [args.budget] if args.budget is not None else [int(b) for b in args.budgets.split(",") if b]
    prior = ComplexityPrior.load(args.prior) if args.prior else None
    return ExperimentSpec(
        source=args.source,
        target=args.target,
        prior_config=PriorConfig(k=args.k, theta_grid=tuple(range(args.theta_min, args.theta_max + 1)),
                                 net_template=_net(args), seed=args.seed),
        active_config=ActiveConfig(args.initial, 0, args.batch_per_query, _net(args), args.seed),
        alpha=args.alpha,
        delta=args.delta,
        budgets=budgets,
        repetitions=args.repetitions,
        seed=args.seed,
        label_column=args.label_column,
        prior=prior,
    )


def cmd_sweep(args) -> dict:
    report = run_experiment(_spec(args))
    report.write(args.out_dir, "sweep")
    return {"aggregates": report.aggregates(), "prior_seconds": report.prior_seconds}


def cmd_baseline(args) -> dict:
    report = run_baseline_fixed_theta(_spec(args), args.theta)
    report.write(args.out_dir, "baseline")
    return {"aggregates": report.aggregates()}


COMMANDS = {"synth": cmd_synth, "prior": cmd_prior, "adapt": cmd_adapt, "sweep": cmd_sweep, "baseline": cmd_baseline}


def main(argv=None) -> int:
    args = build_parser().parse_args(argv)
    try:
        result = COMMANDS[args.command](args)
    except (ValueError, FileNotFoundError, RuntimeError) as exc:
        print(f"error: {exc}", file=sys.stderr)
        return 2
    print(json.dumps(result, indent=2))
    return 0


if __name__ == "__main__":
    sys.exit(main())

"""Command line harness.

Two modes share one executable:

    cgmpinn run --problem poisson1d --method pinn,cgmpinn --seed 0,1,2
    cgmpinn verify bounds          (or: cgmpinn --verify bounds)

``run`` trains every (method, seed) pair, writes one directory per run
containing train.csv, refresh.csv, summary.json, checkpoint.txt and
grid.csv, then prints an aggregate metrics table.  Flags override config
file values; CGMPINN_OUT provides the default output directory.
"""

from __future__ import annotations

import argparse
import os
import sys

from .config import ExperimentConfig, experiment_from_sections, load_config_file, parse_bool
from .errors import CgmpinnError, ConfigurationError
from .network import save_checkpoint
from .problems import make_problem, make_test_grid
from .records import (
    summary_table,
    write_grid_csv,
    write_refresh_csv,
    write_summary,
    write_train_csv,
)
from .training import train
from .verify import SUITES, run_suite


def build_parser() -> argparse.ArgumentParser:
    parser = argparse.ArgumentParser(
        prog="cgmpinn",
        description="Train curriculum-weighted PINNs on manufactured-solution benchmarks.",
    )
    parser.add_argument("--config", help="INI config file")
    parser.add_argument("--problem", help="benchmark id")
    parser.add_argument("--method", help="comma-separated method list")
    parser.add_argument("--seed", help="comma-separated seed list")
    parser.add_argument("--out", help="output directory (default: $CGMPINN_OUT or ./runs)")
    parser.add_argument("--adam-iters", type=int, dest="adam_iters")
    parser.add_argument("--lbfgs-iters", type=int, dest="lbfgs_iters")
    parser.add_argument("--k-upd", type=int, dest="k_upd")
    parser.add_argument("--k-components", type=int, dest="k_components")
    parser.add_argument("--beta", type=float)
    parser.add_argument("--c-sat", type=float, dest="c_sat")
    parser.add_argument("--relobralo", choices=["on", "off"])
    parser.add_argument("--n-test", type=int, dest="n_test")
    parser.add_argument("--verify", choices=list(SUITES), help="run a verification suite instead")
    return parser


def resolve_experiment(args) -> ExperimentConfig:
    sections = load_config_file(args.config) if args.config else {}
    overrides = {
        "train": {
            "adam_iters": args.adam_iters,
            "lbfgs_iters": args.lbfgs_iters,
            "relobralo": parse_bool(args.relobralo) if args.relobralo else None,
        },
        "curriculum": {
            "k_upd": args.k_upd,
            "k_components": args.k_components,
            "beta": args.beta,
            "c_sat": args.c_sat,
        },
    }
    if args.problem:
        overrides["problem"] = args.problem
    if args.method:
        overrides["methods"] = tuple(tok for tok in args.method.replace(",", " ").split())
    if args.seed:
        overrides["seeds"] = tuple(int(tok) for tok in args.seed.replace(",", " ").split())
    if args.n_test:
        overrides["n_test"] = args.n_test
    out = args.out or os.environ.get("CGMPINN_OUT")
    if out:
        overrides["out_dir"] = out
    return experiment_from_sections(sections, overrides)


def run_experiment(exp: ExperimentConfig) -> int:
    spec = make_problem(exp.problem, **exp.coeffs)
    summaries = []
    any_failed = False
    for method in exp.methods:
        for seed in exp.seeds:
            cfg = exp.run_config(method, seed)
            record = train(spec, cfg, exp.n_test)
            run_dir = os.path.join(exp.out_dir, f"{spec.problem_id}_{method}_{seed}")
            os.makedirs(run_dir, exist_ok=True)
            write_train_csv(os.path.join(run_dir, "train.csv"), record.rows)
            write_refresh_csv(
                os.path.join(run_dir, "refresh.csv"),
                record.refreshes,
                cfg.curriculum.k_components,
            )
            write_summary(os.path.join(run_dir, "summary.json"), record.summary)
            save_checkpoint(record.params, os.path.join(run_dir, "checkpoint.txt"))
            write_grid_csv(
                os.path.join(run_dir, "grid.csv"),
                spec,
                record.params,
                make_test_grid(spec, exp.n_test),
            )
            summaries.append(record.summary)
            if record.summary["status"] != "completed":
                any_failed = True
                print(
                    f"run {spec.problem_id}/{method}/seed={seed}: {record.summary['status']}",
                    file=sys.stderr,
                )
    print(summary_table(summaries))
    return 1 if any_failed else 0


def main(argv=None) -> int:
    argv = list(sys.argv[1:] if argv is None else argv)
    if argv and argv[0] == "verify":
        if len(argv) != 2 or argv[1] not in SUITES:
            print(f"usage: cgmpinn verify {{{','.join(SUITES)}}}", file=sys.stderr)
            return 2
        return run_suite(argv[1])
    if argv and argv[0] == "run":
        argv = argv[1:]
    parser = build_parser()
    args = parser.parse_args(argv)
    if args.verify:
        return run_suite(args.verify)
    try:
        exp = resolve_experiment(args)
    except ConfigurationError as exc:
        print(f"error: {exc}", file=sys.stderr)
        return 2
    try:
        return run_experiment(exp)
    except CgmpinnError as exc:
        print(f"error: {exc}", file=sys.stderr)
        return 1


if __name__ == "__main__":
    sys.exit(main())

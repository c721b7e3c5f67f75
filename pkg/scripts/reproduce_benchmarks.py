#!/usr/bin/env python3
"""Reproduce the desk-scale benchmark table.

Runs the 1D Poisson comparison (cgmpinn vs pinn over seeds 0,1,2) and the
advection-diffusion run, all with default training settings.  Expect about
25 minutes on one core; pass --quick for a smoke-scale version that checks
the plumbing in under a minute.
"""

import argparse
import sys

from cgmpinn.cli import main


def cli(args):
    rc = main(["run"] + args)
    if rc != 0:
        print(f"run failed (exit {rc})", file=sys.stderr)
    return rc


if __name__ == "__main__":
    ap = argparse.ArgumentParser(description=__doc__)
    ap.add_argument("--out", default="runs/benchmarks")
    ap.add_argument("--quick", action="store_true", help="tiny stand-in runs")
    ns = ap.parse_args()

    extra = []
    if ns.quick:
        extra = ["--adam-iters", "30", "--lbfgs-iters", "10", "--k-upd", "10"]

    rc = cli(["--problem", "poisson1d", "--method", "cgmpinn,pinn",
              "--seed", "0,1,2", "--out", ns.out] + extra)
    rc |= cli(["--problem", "advdiff", "--method", "cgmpinn",
               "--seed", "0", "--out", ns.out] + extra)
    sys.exit(rc)

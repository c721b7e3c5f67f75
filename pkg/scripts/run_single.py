#!/usr/bin/env python3
"""Train one (problem, method, seed) combination and print its metrics.

Example:
    python3 scripts/run_single.py --problem heat --method cgmpinn --seed 0
Extra flags are passed straight through to the cgmpinn CLI, so anything
`cgmpinn run` accepts works here too.
"""

import sys

from cgmpinn.cli import main

if __name__ == "__main__":
    argv = sys.argv[1:]
    if not argv:
        argv = ["--problem", "poisson1d", "--method", "cgmpinn", "--seed", "0"]
    sys.exit(main(["run"] + argv))

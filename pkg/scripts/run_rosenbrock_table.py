#!/usr/bin/env python3
"""Rosenbrock benchmark: the ten (line search, memory) configurations
plus the zero-memory nonmonotone run, written to results/."""

import sys

from cautious_lbfgs.cli import main

if __name__ == "__main__":
    code = main(["--table", "t2", "--csv", "results/rosenbrock_table.csv"])
    code |= main([
        "--problem", "rosenbrock", "--m", "0", "--ls", "gll", "--tol", "1e-9",
        "--csv", "results/rosenbrock_nonmonotone.csv",
    ])
    print("wrote results/rosenbrock_table.csv and results/rosenbrock_nonmonotone.csv")
    sys.exit(code)

#!/usr/bin/env python3
"""Sweep the dimension certificates over (N, t) and emit a CSV verdict
table plus the minimal certifying N per target dimension."""

import sys
from pathlib import Path

sys.path.insert(0, str(Path(__file__).resolve().parents[1] / "src"))

from juliadim.dimension import min_N_for_dimension
from juliadim.cli import main

if __name__ == "__main__":
    ts = sys.argv[1] if len(sys.argv) > 1 else "1.0,0.5,0.1,0.05,0.01"
    out = sys.argv[2] if len(sys.argv) > 2 else "dim_sweep.csv"
    rc = main(["dims", "--sweep", ts, "--sweep-Nmax", "10", "--out", out])
    for t in (float(x) for x in ts.split(",")):
        print(f"t = {t}: minimal certifying N = {min_N_for_dimension(t)}")
    print(f"verdict table: {out}")
    raise SystemExit(rc)

#!/usr/bin/env python3
"""Full certificate sweep: growth inequalities, mapping inclusions,
singular values, blend dilatation, seam deviation.  Writes one JSON report
and exits nonzero on any failed certificate."""

import sys
from pathlib import Path

sys.path.insert(0, str(Path(__file__).resolve().parents[1] / "src"))

from juliadim.cli import main

if __name__ == "__main__":
    args = sys.argv[1:] or ["--N", "5", "--kmax", "12", "--khi", "6",
                            "--samples", "4096", "--out", "verify_report.json"]
    raise SystemExit(main(["verify", *args]))

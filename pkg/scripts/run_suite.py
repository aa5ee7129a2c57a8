#!/usr/bin/env python3
"""Run the full default check battery and write CSV + JSON tables."""

import argparse
import sys

from itolab.cli import DEFAULT_BATTERIES, emit, run_jobs
from itolab.config import parse_config


def main() -> int:
    ap = argparse.ArgumentParser()
    ap.add_argument("--seed", type=int, default=12345)
    ap.add_argument("--out", default="suite_report")
    args = ap.parse_args()
    cfg = parse_config({"version": 1, "seed": args.seed,
                        "checks": DEFAULT_BATTERIES["suite"]})
    reports = run_jobs(cfg)
    emit(reports, f"{args.out}.csv", "csv")
    emit(reports, f"{args.out}.json", "json")
    n_fail = sum(r.status == "fail" for r in reports)
    print(f"{len(reports)} checks, {n_fail} failures -> {args.out}.csv/.json")
    return 1 if n_fail else 0


if __name__ == "__main__":
    sys.exit(main())

"""Pilot runs that fix the data-dependent acceptance thresholds.

Writes src/cnvmoran/data/calibration.json.  Uses its own master seed, so the
acceptance runs (different seeds) are independent of the pilot.

    python scripts/pilot_calibration.py [--seed 7] [--out-dir /tmp/pilot]
"""
import argparse
import json
import math
from pathlib import Path

import numpy as np

from cnvmoran.harness.config import config_from_dict
from cnvmoran.harness.experiments import run_all_or_nothing, run_convergence_study

ROOT = Path(__file__).resolve().parents[1]
TARGET = ROOT / "src" / "cnvmoran" / "data" / "calibration.json"


def main() -> None:
    ap = argparse.ArgumentParser(description=__doc__.splitlines()[0])
    ap.add_argument("--seed", type=int, default=7)
    ap.add_argument("--out-dir", default="/tmp/cnvmoran-pilot")
    args = ap.parse_args()

    conv = run_convergence_study(config_from_dict(
        {"n_list": [200], "replicates": 500, "master_seed": args.seed,
         "options": {"tv_times": [1.0]}},
        "converge", output_dir=f"{args.out_dir}/converge"))
    tv = conv["per_n"][0]["tv_to_fixed_point"]["1.0"]
    # a fresh 500-replicate mean differs from the pilot mean by sqrt(2) SE;
    # allow four of those
    threshold = tv["mean"] + 4 * math.sqrt(2) * tv["se"]

    runs = 1000
    aon = run_all_or_nothing(config_from_dict(
        {"n_list": [50], "replicates": runs, "t_end": 200.0, "master_seed": args.seed},
        "all-or-nothing", output_dir=f"{args.out_dir}/all-or-nothing"))
    times = np.array([t for t in aon["hitting_times"] if t is not None])

    record = {
        "pilot_seed": args.seed,
        "converge": {"N": 200, "t": 1.0, "replicates": 500, "pilot_mean_tv": tv["mean"],
                     "pilot_se": tv["se"], "tv_threshold": round(threshold, 4),
                     "rule": "pilot mean + 4 * sqrt(2) * pilot SE, rounded to 4 decimals"},
        "all_or_nothing": {"N": 50, "count_at_zero": 0, "runs": runs,
                           "absorbed": int(times.size),
                           "pilot_max_hitting_time": float(times.max()),
                           "pilot_q99_hitting_time": float(np.quantile(times, 0.99)),
                           "t_end": 200.0, "min_hits_of_100": 99,
                           "rule": "t_end exceeds 100x the pilot maximum hitting time"},
    }
    TARGET.write_text(json.dumps(record, indent=2, sort_keys=True) + "\n")
    print(json.dumps(record, indent=2, sort_keys=True))


if __name__ == "__main__":
    main()

"""Run every subcommand on the shipped scenario files and print a summary.

    python scripts/run_all.py [--out-root out] [--threads N]

Each (config, subcommand) pair writes into <out-root>/<config>/<subcommand>;
subcommands listed under "defaults" use their built-in scenario.
Exits non-zero if any run reports a failed criterion or an error.
"""
import argparse
import sys
from pathlib import Path

from cnvmoran.harness.cli import main as cli_main

ROOT = Path(__file__).resolve().parents[1]
RUNS = {
    "defaults": ["simulate", "toy", "all-or-nothing"],
    "case_i.cfg": ["verify-identities", "spectrum", "moments", "converge"],
    "case_ii.cfg": ["spectrum", "moments", "converge", "adjudicate-case2"],
}


def main() -> int:
    ap = argparse.ArgumentParser(description=__doc__.splitlines()[0])
    ap.add_argument("--out-root", default="out")
    ap.add_argument("--threads", type=int)
    args = ap.parse_args()
    codes = {}
    for cfg_name, commands in RUNS.items():
        for command in commands:
            out = Path(args.out_root) / Path(cfg_name).stem / command
            argv = [command, "--out", str(out)]
            if cfg_name != "defaults":
                argv += ["--config", str(ROOT / "configs" / cfg_name)]
            if args.threads:
                argv += ["--threads", str(args.threads)]
            print(f"== {cfg_name} {command}", flush=True)
            codes[(cfg_name, command)] = cli_main(argv)
    print("\nsummary")
    for (cfg_name, command), code in codes.items():
        print(f"  {'ok  ' if code == 0 else f'exit {code}'}  {cfg_name} {command}")
    return max(codes.values())


if __name__ == "__main__":
    sys.exit(main())

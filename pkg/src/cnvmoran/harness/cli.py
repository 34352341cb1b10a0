"""Command-line entry point: ``cnvmoran <subcommand> [--config PATH] ...``.

Exit codes: 0 success, 1 invalid configuration or input, 2 a checked
criterion failed.
"""
from __future__ import annotations

import argparse
import logging
import sys

from .config import EXPERIMENTS, ConfigError, config_from_dict, load_config

log = logging.getLogger("cnvmoran")

EXIT_OK, EXIT_INVALID, EXIT_CRITERION = 0, 1, 2


def build_parser() -> argparse.ArgumentParser:
    parser = argparse.ArgumentParser(prog="cnvmoran", description=__doc__.splitlines()[0])
    parser.add_argument("command", choices=EXPERIMENTS)
    parser.add_argument("--config", help="scenario JSON file (defaults per subcommand otherwise)")
    parser.add_argument("--seed", type=int, help="master seed (unsigned 64-bit)")
    parser.add_argument("--out", help="output directory (beats CNVMORAN_OUTPUT_DIR and the config)")
    parser.add_argument("--replicates", type=int)
    parser.add_argument("--threads", type=int, help="worker threads for replicate loops")
    parser.add_argument("-v", "--verbose", action="store_true")
    return parser


def set_threads(threads: int | None) -> None:
    if threads is None:
        return
    if threads < 1:
        raise ConfigError("--threads must be >= 1")
    import numba

    available = numba.config.NUMBA_NUM_THREADS
    if threads > available:
        log.warning("requested %d threads, only %d available; using %d", threads, available, available)
        threads = available
    numba.set_num_threads(threads)


def _summary(report: dict) -> list[str]:
    lines = []
    for name, ok in report.get("criteria", {}).items():
        lines.append(f"{'PASS' if ok else 'FAIL'}  {name}")
    if "verdict" in report:
        v = report["verdict"]
        lines.append(f"verdict: sigma^2 = {v['sigma2']} ({max(v['votes']['theorem'], v['votes']['derived'])}"
                     f"/{v['repetitions']} repetitions)")
    if "per_n" in report and report["config"]["experiment"] == "spectrum":
        for e in report["per_n"]:
            fast = ", ".join(f"{p:.6g}" for p in e["fast_predicted"])
            got = sorted(ev.real for ev in e["eigenvalues"])[:3]
            lines.append(f"N={e['N']}: fast eigenvalues {', '.join(f'{g:.6g}' for g in got)}"
                         f" (leading terms {fast})")
    return lines


def main(argv=None) -> int:
    args = build_parser().parse_args(argv)
    logging.basicConfig(level=logging.INFO if args.verbose else logging.WARNING,
                        format="%(levelname)s %(message)s")
    overrides = {"seed": args.seed, "replicates": args.replicates, "output_dir": args.out}
    try:
        if args.config:
            cfg = load_config(args.config, args.command, **overrides)
        else:
            cfg = config_from_dict({}, args.command, **overrides)
        set_threads(args.threads)
        from .experiments import run_experiment

        report = run_experiment(cfg)
    except (ConfigError, ValueError, OSError) as exc:
        print(f"error: {exc}", file=sys.stderr)
        return EXIT_INVALID
    for line in _summary(report):
        print(line)
    print(f"report: {cfg.output_dir}/report.json")
    return EXIT_OK if report["passed"] else EXIT_CRITERION


if __name__ == "__main__":
    sys.exit(main())

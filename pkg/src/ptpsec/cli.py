"""Command line entry point.

    ptpsec run <config.ini> [--seed N] [--out DIR]
    ptpsec list
    ptpsec bench [--iters N]

Exit codes: 0 success, 1 runtime failure (e.g. an attack exceeded its
declared adversary capabilities), 2 configuration error.
"""

from __future__ import annotations

import argparse
import sys
from importlib import resources
from pathlib import Path

from . import scenario, security
from .simnet import CapabilityViolation


def _bundled_dir():
    return resources.files("ptpsec") / "scenarios"


def _resolve_config(name: str) -> Path:
    path = Path(name)
    if path.exists():
        return path
    bundled = _bundled_dir() / f"{name}.ini"
    if bundled.is_file():
        return Path(str(bundled))
    raise scenario.ConfigError(f"no such scenario file or bundled scenario: {name}")


def cmd_run(args) -> int:
    config = scenario.load_config(_resolve_config(args.config))
    if args.seed is not None:
        config.seed = args.seed
    paths = scenario.run_scenario(config, Path(args.out))
    print(paths["summary"].read_text(encoding="utf-8"), end="")
    for key in ("offsets", "verdicts", "summary"):
        print(f"wrote {paths[key]}", file=sys.stderr)
    return 0


def cmd_list(_args) -> int:
    entries = sorted(p.name for p in _bundled_dir().iterdir() if p.name.endswith(".ini"))
    for entry in entries:
        name = entry[: -len(".ini")]
        config = scenario.load_config(str(_bundled_dir() / entry))
        print(f"{name:34s} {config.description}")
    return 0


def cmd_bench(args) -> int:
    result = security.benchmark_crypto(iterations=args.iters)
    for op in ("sign", "verify"):
        print(f"{op}: median {result[op] / 1e6:.3f} ms over {args.iters} iterations")
    return 0


def build_parser() -> argparse.ArgumentParser:
    parser = argparse.ArgumentParser(prog="ptpsec")
    sub = parser.add_subparsers(dest="command", required=True)

    run = sub.add_parser("run", help="run a scenario and write CSV/summary outputs")
    run.add_argument("config", help="path to an INI file, or a bundled scenario name")
    run.add_argument("--seed", type=int, default=None, help="override the scenario seed")
    run.add_argument("--out", default=".", help="output directory (default: cwd)")
    run.set_defaults(func=cmd_run)

    lst = sub.add_parser("list", help="list bundled scenarios")
    lst.set_defaults(func=cmd_list)

    bench = sub.add_parser("bench", help="measure signing/verification latency")
    bench.add_argument("--iters", type=int, default=200)
    bench.set_defaults(func=cmd_bench)
    return parser


def main(argv=None) -> int:
    args = build_parser().parse_args(argv)
    try:
        return args.func(args)
    except scenario.ConfigError as exc:
        print(f"config error: {exc}", file=sys.stderr)
        return 2
    except CapabilityViolation as exc:
        print(f"capability violation: {exc}", file=sys.stderr)
        return 1


if __name__ == "__main__":
    sys.exit(main())

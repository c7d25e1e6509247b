"""Command line: lab run | sweep | verify | catalog."""
from __future__ import annotations

import argparse
import json
import sys

from ..errors import ConfigError, VortexLabError
from .config import ExperimentConfig
from . import runner


def _report(art):
    print(json.dumps(runner._jsonable({"output": str(art.out_dir), "acceptance_failures": art.failed_predicates}),
                     indent=2))
    return 0 if art.ok else 1


def main(argv=None):
    ap = argparse.ArgumentParser(prog="lab", description="Rotating vortex experiments on the unit disc.")
    ap.add_argument("--threads", type=int, default=1, help="cap on concurrent per-eps runs in sweeps")
    sub = ap.add_subparsers(dest="cmd", required=True)
    p = sub.add_parser("run", help="run one experiment config")
    p.add_argument("config")
    p.add_argument("--out", default=None)
    p = sub.add_parser("sweep", help="run an epsilon sweep")
    p.add_argument("config")
    p.add_argument("--out", default=None)
    p = sub.add_parser("verify", help="run the acceptance battery")
    p.add_argument("--filter", default=None, help="criterion ids or names, comma separated")
    p.add_argument("--out", default=None)
    sub.add_parser("catalog", help="print the equilibrium catalog as JSON")
    args = ap.parse_args(argv)
    try:
        if args.cmd == "catalog":
            print(runner.catalog_text())
            return 0
        if args.cmd == "verify":
            cfg = ExperimentConfig.from_dict({"mode": "verify_suite", "name": "verify",
                                              "physics": {"filter": args.filter}})
            art = runner.run_experiment(cfg, args.out, threads=args.threads)
            for row in art.summary.get("criteria", []):
                print(f"[{'PASS' if row['passed'] else 'FAIL'}] {row['id']:2d} {row['name']}")
            return _report(art)
        cfg = ExperimentConfig.load(args.config)
        if args.cmd == "sweep":
            art = runner.sweep_epsilon(cfg, args.out, threads=args.threads)
        else:
            art = runner.run_experiment(cfg, args.out, threads=args.threads)
        return _report(art)
    except ConfigError as exc:
        print(f"config error: {exc} (fields: {', '.join(exc.fields)})", file=sys.stderr)
        return 2
    except VortexLabError as exc:
        print(f"{type(exc).__module__}.{type(exc).__name__}: {exc}", file=sys.stderr)
        return 1


if __name__ == "__main__":
    sys.exit(main())

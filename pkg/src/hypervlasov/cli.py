"""Command line: ``hypervlasov run|refine|diagnose``."""
import argparse
import json
import sys

from .errors import ConfigurationError
from .scenarios import load_config


def _config(args):
    overrides = list(args.set or [])
    return load_config(args.config, overrides)


def _add_common(p):
    p.add_argument("--config", metavar="PATH", help="key = value config file")
    p.add_argument("--set", action="append", metavar="KEY=VALUE", help="override a config key (repeatable)")
    p.add_argument("--threads", type=int, default=None, help="worker threads for pushes and deposition")


def build_parser():
    parser = argparse.ArgumentParser(prog="hypervlasov", description=__doc__)
    sub = parser.add_subparsers(dest="command", required=True)

    p = sub.add_parser("run", help="run one configuration and write a run directory")
    _add_common(p)
    p.add_argument("--out", metavar="DIR", default="run", help="output directory (default: run)")

    p = sub.add_parser("refine", help="refinement study with observed orders")
    _add_common(p)
    p.add_argument("--levels", type=int, default=3)
    p.add_argument("--out", metavar="DIR", default=None, help="write the table as refine.json here")

    p = sub.add_parser("diagnose", help="recompute snapshot diagnostics from a run directory")
    p.add_argument("run_dir")
    p.add_argument("--threads", type=int, default=None)
    return parser


def main(argv=None):
    from . import io, runner

    args = build_parser().parse_args(argv)
    try:
        if args.command == "run":
            cfg = _config(args)
            status, result = runner.run(cfg, args.out, args.threads)
            for name, check in result.summary["checks"].items():
                print(f"{'PASS' if check['pass'] else 'FAIL'}  {name}: {check['value']} (threshold {check['threshold']})")
            return status
        if args.command == "refine":
            cfg = _config(args)
            table = runner.refine(cfg, args.levels, args.threads)
            if args.out:
                io.prepare_run_dir(args.out)
                io.write_json(f"{args.out}/refine.json", table)
            print(json.dumps(table, indent=2))
            failed = any("error" in row for row in table["levels"])
            return 1 if failed else 0
        status, rows = runner.diagnose(args.run_dir)
        for row in rows:
            print(json.dumps(row, sort_keys=True))
        return status
    except (ConfigurationError, FileNotFoundError) as exc:
        print(f"error: {exc}", file=sys.stderr)
        return 2


if __name__ == "__main__":
    sys.exit(main())

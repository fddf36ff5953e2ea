"""Command-line entry point: ``divopt run|evaluate|features|grid|stats``.

Exit codes: 0 success, 2 configuration or input error, 3 initialization failure.
"""

from __future__ import annotations

import argparse
import csv
import glob
import json
import logging
import sys

from . import harness, refsets, tsp
from .errors import ConfigurationError, InitializationError, ParseError

EXIT_OK = 0
EXIT_CONFIG = 2
EXIT_INIT = 3


def _cmd_run(args) -> int:
    cfg = harness.load_run_config(args.config)

    def progress(rep):
        logging.getLogger("divopt").info(
            "seed %d done: %s final=%r (%.1fs)",
            rep.seed, cfg.indicator, rep.trajectory[-1], rep.wall_clock,
        )

    _, summary = harness.run_experiment(cfg, progress)
    json.dump({"mean": summary["mean"], "std": summary["std"]}, sys.stdout, indent=2)
    print()
    return EXIT_OK


def _cmd_evaluate(args) -> int:
    scores = harness.cross_evaluate(args.features, args.dim)
    print(json.dumps(scores))
    return EXIT_OK


def _cmd_features(args) -> int:
    inst = tsp.read_instance(args.instance, args.format)
    raw = tsp.all_features(inst)
    out = {
        "name": inst.name,
        "n": inst.n,
        "scale": inst.scale,
        "offset": list(inst.offset),
        "features": {tsp.FEATURES[k][0]: v for k, v in raw.items()},
        "normalized": {
            tsp.FEATURES[k][0]: float(min(max((v - lo) / (hi - lo), 0.0), 1.0))
            for k, v in raw.items()
            for lo, hi in [tsp.FEATURES[k][2:]]
        },
    }
    print(json.dumps(out, indent=2))
    return EXIT_OK


def _cmd_grid(args) -> int:
    rs = refsets.grid(args.dim, args.k)
    if args.transform != "identity":
        rs = refsets.transform_refset(rs, args.transform)
    refsets.write_refset_csv(rs, args.out)
    return EXIT_OK


def _cmd_stats(args) -> int:
    paths = sorted(glob.glob(args.inputs, recursive=True))
    if not paths:
        raise ConfigurationError(f"no summary files match {args.inputs!r}")
    summaries = []
    for p in paths:
        try:
            with open(p) as fh:
                summaries.append(json.load(fh))
        except json.JSONDecodeError as exc:
            raise ParseError(f"{p}: invalid JSON ({exc})") from None
    rows = harness.stats_aggregate(summaries)
    w = csv.DictWriter(
        sys.stdout, ["features", "algorithm", "measure", "mean", "std", "n", "rank"],
        lineterminator="\n",
    )
    w.writeheader()
    w.writerows(rows)
    return EXIT_OK


def build_parser() -> argparse.ArgumentParser:
    p = argparse.ArgumentParser(prog="divopt", description=__doc__.splitlines()[0])
    p.add_argument("-v", "--verbose", action="count", default=0)
    sub = p.add_subparsers(dest="command", required=True)

    r = sub.add_parser("run", help="run an experiment from a JSON config")
    r.add_argument("--config", required=True)
    r.set_defaults(func=_cmd_run)

    e = sub.add_parser("evaluate", help="score a feature CSV under every measure")
    e.add_argument("--features", required=True)
    e.add_argument("--dim", type=int, choices=(2, 3), required=True)
    e.set_defaults(func=_cmd_evaluate)

    f = sub.add_parser("features", help="compute the TSP features of an instance")
    f.add_argument("--instance", required=True)
    f.add_argument("--format", choices=("tsplib", "csv"), default="csv")
    f.set_defaults(func=_cmd_features)

    g = sub.add_parser("grid", help="write a regular reference grid as CSV")
    g.add_argument("--dim", type=int, choices=(2, 3), required=True)
    g.add_argument("--k", type=int, required=True)
    g.add_argument("--out", required=True)
    g.add_argument("--transform", choices=refsets.TRANSFORMS, default="identity")
    g.set_defaults(func=_cmd_grid)

    s = sub.add_parser("stats", help="aggregate summary.json files")
    s.add_argument("--inputs", required=True, help="glob of summary.json files")
    s.set_defaults(func=_cmd_stats)
    return p


def main(argv=None) -> int:
    args = build_parser().parse_args(argv)
    logging.basicConfig(
        level=logging.WARNING - 10 * min(args.verbose, 2),
        format="%(levelname)s %(name)s: %(message)s",
    )
    try:
        return args.func(args)
    except InitializationError as exc:
        print(f"divopt: initialization failed: {exc}", file=sys.stderr)
        return EXIT_INIT
    except (ConfigurationError, ParseError, FileNotFoundError) as exc:
        print(f"divopt: {exc}", file=sys.stderr)
        return EXIT_CONFIG


if __name__ == "__main__":
    sys.exit(main())

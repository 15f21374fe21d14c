"""Command-line front end.

Subcommands: simulate, exact, oracle, experiment, verify.  Exit codes:
0 success, 1 verification failure, 2 usage or runtime error.  The seed
defaults to the fixed constant 1729 (never the clock), and every payload
embeds its provenance (spec, seed, n, tool version).
"""

from __future__ import annotations

import argparse
import json
import sys

from . import exact, forest, harness, oracle
from .dist import DistributionSpecError, make_dist
from .harness import DEFAULT_SEED, VERSION, ExperimentConfig


def _write(text: str, out: str | None) -> None:
    if out:
        with open(out, "w") as fh:
            fh.write(text)
            if not text.endswith("\n"):
                fh.write("\n")
    else:
        print(text)


def _sizes_arg(value: str) -> list[int]:
    try:
        sizes = [int(tok) for tok in value.split(",") if tok.strip()]
    except ValueError:
        raise argparse.ArgumentTypeError(f"bad sizes list {value!r}")
    if not sizes or any(n < 1 for n in sizes):
        raise argparse.ArgumentTypeError("sizes must be positive integers")
    return sizes


def build_parser() -> argparse.ArgumentParser:
    ap = argparse.ArgumentParser(
        prog="surforest",
        description="subtractive random forest simulation and verification")
    sub = ap.add_subparsers(dest="command", required=True)

    def common(p, need_n=True):
        p.add_argument("--dist", required=True, help="distribution spec, "
                       "e.g. geom:0.5, zipf:0.5, table:1/3,1/3,1/3")
        if need_n:
            p.add_argument("--n", type=int, required=True, help="horizon")
        p.add_argument("--seed", type=int, default=DEFAULT_SEED)
        p.add_argument("--out", help="output path (default stdout)")
        p.add_argument("--format", choices=("json", "csv"), default="json")
        p.add_argument("--threads", type=int, default=1,
                       help="worker cap (simulation kernels are per-"
                            "replication; aggregation is order-independent)")

    p = sub.add_parser("simulate", help="one realization and its statistics")
    common(p)
    p.add_argument("--trace", help="persist (spec, seed, n, steps) here")
    p.add_argument("--trace-format", choices=("npz", "csv"), default="npz")

    p = sub.add_parser("exact", help="deterministic series r, Rhat, m, EL")
    common(p)
    p.add_argument("--epsilon", type=float, default=1e-9,
                   help="error budget for the E M_n root-sum truncation")

    p = sub.add_parser("oracle", help="exact enumeration for tiny instances")
    common(p)
    p.add_argument("--budget", type=int, default=oracle.DEFAULT_BUDGET)

    p = sub.add_parser("experiment", help="Monte Carlo batch from a config file")
    p.add_argument("--config", required=True,
                   help="flat key=value file: dist, sizes, reps, seed, "
                        "statistics")
    p.add_argument("--out")
    p.add_argument("--format", choices=("json", "csv"), default="json")
    p.add_argument("--threads", type=int, default=1)

    p = sub.add_parser("verify", help="run the theorem-check suite")
    common(p, need_n=False)
    p.add_argument("--sizes", type=_sizes_arg, required=True,
                   help="comma-separated horizons, e.g. 1000,10000")
    p.add_argument("--reps", type=int, default=200)
    return ap


def _cmd_simulate(args) -> int:
    d = make_dist(args.dist)
    f = forest.build(d, args.n, args.seed)
    if args.trace:
        forest.save_trace(f, args.trace, format=args.trace_format)
    payload = json.loads(forest.stats_json(f))
    payload["version"] = VERSION
    if args.format == "json":
        _write(json.dumps(payload, sort_keys=True), args.out)
    else:
        scalars = {k: v for k, v in sorted(payload.items())
                   if not isinstance(v, (dict, list))}
        text = "key,value\n" + "\n".join(f"{k},{v}" for k, v in scalars.items())
        _write(text, args.out)
    print(f"simulate {args.dist} n={args.n} seed={args.seed}: "
          f"M={payload['M']} O={payload['O']} H={payload['H']}",
          file=sys.stderr)
    return 0


def _cmd_exact(args) -> int:
    d = make_dist(args.dist)
    series = exact.compute_series(d, args.n)
    try:
        trees = exact.expected_trees(d, args.n, epsilon=args.epsilon)
        em_block = {"EO": trees.EO, "EM": trees.EM,
                    "EM_error": trees.EM_error, "VarO": trees.VarO}
    except exact.TruncationError as err:
        em_block = {"EO": float(series.m[-1]), "EM": None,
                    "EM_error": None, "note": str(err)}
    if args.format == "csv":
        if not args.out:
            raise RuntimeError("--format csv requires --out")
        exact.export_series_csv(series, args.out)
    else:
        payload = json.loads(exact.series_json(series))
        payload["trees"] = em_block
        payload["seed"] = args.seed
        payload["version"] = VERSION
        _write(json.dumps(payload, sort_keys=True), args.out)
    print(f"exact {args.dist} n={args.n}: Rhat={series.Rhat[-1]:.6g} "
          f"m={series.m[-1]:.6g}", file=sys.stderr)
    return 0


def _cmd_oracle(args) -> int:
    d = make_dist(args.dist)
    result = oracle.enumerate_exact(d, args.n, budget=args.budget)
    payload = json.loads(result.to_json())
    payload["spec"] = args.dist
    payload["seed"] = args.seed
    payload["version"] = VERSION
    _write(json.dumps(payload, sort_keys=True), args.out)
    print(f"oracle {args.dist} n={args.n}: {d.support_size}^{args.n} "
          f"sequences enumerated", file=sys.stderr)
    return 0


def _parse_config(path: str) -> ExperimentConfig:
    fields = {}
    with open(path) as fh:
        for line in fh:
            line = line.strip()
            if not line or line.startswith("#"):
                continue
            if "=" not in line:
                raise RuntimeError(f"bad config line {line!r}")
            key, _, value = line.partition("=")
            fields[key.strip()] = value.strip()
    try:
        return ExperimentConfig(
            dist=fields["dist"],
            sizes=[int(tok) for tok in fields["sizes"].split(",")],
            reps=int(fields["reps"]),
            seed=int(fields.get("seed", DEFAULT_SEED)),
            statistics=tuple(
                tok.strip()
                for tok in fields.get("statistics", "M,O,H").split(",")),
        )
    except KeyError as err:
        raise RuntimeError(f"config missing required key {err}") from err


def _cmd_experiment(args) -> int:
    cfg = _parse_config(args.config)
    report = harness.run_experiment(cfg)
    if args.format == "json":
        _write(report.to_json(), args.out)
    else:
        rows = ["statistic,n,mean,sd,se,reps"]
        rows += [f"{s.statistic},{s.n},{s.mean!r},{s.sd!r},{s.se!r},{s.reps}"
                 for s in report.stats]
        _write("\n".join(rows), args.out)
    print(f"experiment {cfg.dist} sizes={cfg.sizes} reps={cfg.reps}: "
          f"{len(report.stats)} summaries", file=sys.stderr)
    return 0


def _cmd_verify(args) -> int:
    d = make_dist(args.dist)
    report = harness.verify_suite(d, args.sizes, seed=args.seed,
                                  reps=args.reps)
    if args.format == "json":
        _write(report.to_json(), args.out)
    else:
        _write(report.to_table(), args.out)
    if not args.out:
        pass
    else:
        print(report.to_table(), file=sys.stderr)
    failed = [c.name for c in report.checks if c.verdict == "fail"]
    print(f"verify {args.dist}: "
          + ("all applicable checks passed" if not failed
             else f"FAILED: {', '.join(failed)}"), file=sys.stderr)
    return 1 if failed else 0


_COMMANDS = {
    "simulate": _cmd_simulate,
    "exact": _cmd_exact,
    "oracle": _cmd_oracle,
    "experiment": _cmd_experiment,
    "verify": _cmd_verify,
}


def main(argv=None) -> int:
    args = build_parser().parse_args(argv)
    try:
        return _COMMANDS[args.command](args)
    except (DistributionSpecError, ValueError, RuntimeError, OSError) as err:
        print(f"error: {err}", file=sys.stderr)
        return 2


def console_entry() -> None:
    sys.exit(main())


if __name__ == "__main__":
    sys.exit(main())

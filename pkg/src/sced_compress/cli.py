"""Command line: ``sced-compress {solve,compress,certify,tune,bounds-table}``.

Exit codes: 0 success, 2 config, 3 parse, 4 solver infeasible/unbounded,
5 numerical. ``tune`` exits 1 when the target risk is unreachable.
"""
from __future__ import annotations

import argparse
import json
import sys
from dataclasses import fields

from .errors import (ConfigError, DimensionMismatch, DisconnectedNetwork, DomainError,
                     NumericalBreakdown, ParseError, RootBracketFailure, SingularMatrix,
                     TargetUnreachable, ValidationError)
from .pipeline import METHODS, RunConfig, bounds_table, compress_report, dumps, run, tune
from .risk import certify

EXIT_OK, EXIT_CONFIG, EXIT_PARSE, EXIT_INFEASIBLE, EXIT_NUMERICAL = 0, 2, 3, 4, 5
EXIT_UNREACHABLE = 1


class _Parser(argparse.ArgumentParser):
    def error(self, message):
        self.print_usage(sys.stderr)
        raise ConfigError(message)


def _floats(s):
    return [float(t) for t in s.split(",") if t.strip()]


def _ints(s):
    return [int(t) for t in s.split(",") if t.strip()]


def _run_flags(p):
    g = p.add_argument_group("run config (flags override --config)")
    g.add_argument("--config", help="JSON or YAML file with RunConfig fields")
    g.add_argument("--case", help="bundled case name (case3, case6, case118) or path")
    g.add_argument("--source", choices=("gaussian", "uniform", "csv"))
    g.add_argument("--sigmas", type=_floats, help="comma-separated per-region std devs "
                   "(half widths for uniform)")
    g.add_argument("--csv", dest="csv_path", help="scenario CSV (source csv)")
    g.add_argument("--N", type=int)
    g.add_argument("--seed", type=int)
    g.add_argument("--method", help=f"comma-separated subset of {','.join(METHODS)}")
    g.add_argument("--beta", type=float)
    g.add_argument("--threshold", type=float, help="key-line loading threshold in (0, 1]")
    g.add_argument("--holdout", type=int, help="holdout scenarios for empirical risk")
    g.add_argument("--repetitions", type=int)
    g.add_argument("--output", "-o", help="write the JSON report here (default stdout)")
    g.add_argument("--no-complexity", dest="complexity", action="store_false", default=None,
                   help="skip the leave-one-out solution complexity")


def _config(args) -> RunConfig:
    base = RunConfig.from_file(args.config).to_dict() if args.config else {}
    for f in fields(RunConfig):
        v = getattr(args, f.name, None)
        if v is not None:
            base[f.name] = v
    return RunConfig.from_dict(base)


def build_parser() -> argparse.ArgumentParser:
    ap = _Parser(prog="sced-compress", description="Scenario-compressed chance-constrained "
                 "economic dispatch with risk certificates.")
    sub = ap.add_subparsers(dest="cmd", required=True, parser_class=_Parser)

    p = sub.add_parser("solve", help="run the dispatch pipeline and write a JSON report")
    _run_flags(p)

    p = sub.add_parser("compress", help="compress a scenario set and certify its risk")
    _run_flags(p)

    p = sub.add_parser("certify", help="risk certificate for a given complexity")
    p.add_argument("--kind", choices=("solution", "compression", "classical"), default="solution")
    p.add_argument("--k", type=int, required=True)
    p.add_argument("--N", type=int, required=True)
    p.add_argument("--beta", type=float, default=1e-3)

    p = sub.add_parser("tune", help="grow N until the certified risk meets a target")
    _run_flags(p)
    p.add_argument("--n-grid", type=_ints, required=True, help="ascending N values, e.g. 100,200,500")
    p.add_argument("--target", type=float, required=True)
    p.add_argument("--kind", choices=("solution", "compression"))
    p.add_argument("--plot-data", help="CSV of risk and effort per N")

    p = sub.add_parser("bounds-table", help="CSV of eps bounds for k = 0..k_max")
    p.add_argument("--N", type=int, required=True)
    p.add_argument("--beta", type=float, default=1e-3)
    p.add_argument("--k-max", type=int, required=True)
    p.add_argument("--out", "-o", help="CSV path (default stdout)")
    return ap


def _emit(text, path):
    if path:
        with open(path, "w", encoding="utf-8") as fh:
            fh.write(text)
    else:
        sys.stdout.write(text)


def _solver_failed(report) -> bool:
    return any(m["status"] != "optimal" for r in report["repetitions"]
               for m in r["methods"].values())


def _cmd_solve(args):
    cfg = _config(args)
    report = run(cfg, write=False)
    _emit(dumps(report), cfg.output)
    return EXIT_INFEASIBLE if _solver_failed(report) else EXIT_OK


def _cmd_compress(args):
    from .pipeline import _draw, _setup, repetition_seeds
    from .scenario import ScenarioSet
    cfg = _config(args)
    st = _setup(cfg)
    seed = repetition_seeds(cfg.seed, 1)[0]
    z, hold = _draw(cfg, st, seed)
    out = {}
    for m in cfg.method:
        kind = "hull" if m in ("hull", "hull-dual", "none") else "box"
        out[m] = compress_report(ScenarioSet(z), kind, cfg.N, cfg.beta,
                                 ScenarioSet(hold) if len(hold) else None)
    _emit(dumps({"seed": seed, "config": cfg.to_dict(), "results": out}), cfg.output)
    return EXIT_OK


def _cmd_certify(args):
    c = certify(args.kind, args.k, args.N, args.beta)
    sys.stdout.write(json.dumps(c.to_dict(), indent=2) + "\n")
    return EXIT_OK


def _cmd_tune(args):
    cfg = _config(args)
    try:
        reports = tune(cfg, args.n_grid, args.target, args.kind, args.plot_data)
    except TargetUnreachable as e:
        print(f"sced-compress: {e}", file=sys.stderr)
        return EXIT_UNREACHABLE
    last = reports[-1]
    summary = {"target": args.target, "stopped_at_N": last["config"]["N"],
               "visited": [r["config"]["N"] for r in reports], "report": last}
    _emit(dumps(summary), cfg.output)
    return EXIT_OK


def _cmd_bounds(args):
    if args.out:
        bounds_table(args.N, args.beta, args.k_max, args.out)
    else:
        rows = bounds_table(args.N, args.beta, args.k_max)
        sys.stdout.write("k,eps_lower,eps_upper,classical\n")
        for r in rows:
            sys.stdout.write(f"{r['k']},{r['eps_lower']!r},{r['eps_upper']!r},{r['classical']!r}\n")
    return EXIT_OK


COMMANDS = {"solve": _cmd_solve, "compress": _cmd_compress, "certify": _cmd_certify,
            "tune": _cmd_tune, "bounds-table": _cmd_bounds}


def main(argv=None) -> int:
    try:
        args = build_parser().parse_args(argv)
        return COMMANDS[args.cmd](args)
    except (ConfigError, DomainError, DimensionMismatch) as e:
        print(f"sced-compress: config error: {e}", file=sys.stderr)
        return EXIT_CONFIG
    except (ParseError, ValidationError, FileNotFoundError) as e:
        print(f"sced-compress: parse error: {e}", file=sys.stderr)
        return EXIT_PARSE
    except (NumericalBreakdown, SingularMatrix, RootBracketFailure, DisconnectedNetwork) as e:
        print(f"sced-compress: numerical error: {e}", file=sys.stderr)
        return EXIT_NUMERICAL


if __name__ == "__main__":
    sys.exit(main())

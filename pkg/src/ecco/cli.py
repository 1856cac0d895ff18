"""Command-line front end.

Exit codes: 0 converged (or a completed suite), 1 usage error, 2 max_iters,
3 step_floored. ``ECCO_OUTPUT_DIR`` sets the default output directory.
"""

from __future__ import annotations

import argparse
import csv
import json
import os
import sys
from dataclasses import asdict
from pathlib import Path

from .baselines import PRESETS, grid_search
from .bench import (
    BASELINE_METHODS,
    METHODS,
    SWEEP_DOMAINS,
    bundled_manifest_path,
    ecco_config,
    load_manifest,
    run_bench,
    summary_csv,
    sweep,
)
from .problems import catalog
from .solver import SolverConfig, ecco_minimize
from .traces import report_to_json, trace_to_csv

EXIT_CODES = {"converged": 0, "max_iters": 2, "step_floored": 3}
CONTROL_ALIASES = {"identity": "identity", "full": "full_hessian", "approx": "approximate"}
OUTPUT_ENV = "ECCO_OUTPUT_DIR"


class UsageError(Exception):
    pass


class _Parser(argparse.ArgumentParser):
    def error(self, message):
        self.print_usage(sys.stderr)
        self.exit(1, f"{self.prog}: error: {message}\n")


def _floats(text: str) -> list[float]:
    try:
        return [float(v) for v in text.split(",") if v.strip()]
    except ValueError:
        raise argparse.ArgumentTypeError(f"expected comma-separated reals, got {text!r}") from None


def _default_path(name: str) -> Path | None:
    base = os.environ.get(OUTPUT_ENV)
    return Path(base) / name if base else None


def _emit(text: str, out, default_name: str):
    path = Path(out) if out else _default_path(default_name)
    if path is None:
        sys.stdout.write(text)
        return
    path.parent.mkdir(parents=True, exist_ok=True)
    path.write_text(text)


def _problem(args):
    try:
        return catalog(args.problem, args.dim)
    except ValueError as exc:
        raise UsageError(str(exc)) from None


def cmd_run(args) -> int:
    problem = _problem(args)
    if len(args.x0) != problem.dim:
        raise UsageError(f"--x0 has {len(args.x0)} values but {problem.name} has dimension {problem.dim}")
    params = {k: getattr(args, k) for k in ("eta", "delta", "alpha", "beta") if getattr(args, k) is not None}
    if args.no_normalize:
        params["normalize"] = False
    if args.fd_hessian:
        params["fd_hessian"] = True
    try:
        cfg: SolverConfig = ecco_config(CONTROL_ALIASES[args.control], params, args.eps, args.max_iters, args.seed)
        report = ecco_minimize(problem, args.x0, cfg)
    except ValueError as exc:
        raise UsageError(str(exc)) from None
    report.config_echo["method"] = f"ecco_{args.control}"
    if args.format == "csv":
        text = trace_to_csv(report.trace)
    else:
        text = report_to_json(report)
    _emit(text, args.out, f"run_{problem.name}.{args.format}")
    print(f"{report.status}: iters={report.iters} f={report.f_final!r} "
          f"|grad|={report.grad_norm_final!r}", file=sys.stderr)
    return EXIT_CODES[report.status]


def cmd_bench(args) -> int:
    path = args.manifest or bundled_manifest_path()
    try:
        entries = load_manifest(path)
    except (OSError, ValueError, TypeError) as exc:
        raise UsageError(f"cannot read manifest {path}: {exc}") from None
    out_dir = Path(args.out) if args.out else _default_path("bench")
    rows = run_bench(entries, workers=args.workers, out_dir=out_dir)
    text = summary_csv(rows)
    if out_dir is None:
        sys.stdout.write(text)
    else:
        out_dir.mkdir(parents=True, exist_ok=True)
        (out_dir / "summary.csv").write_text(text)
    return 0


def _parse_assignments(items) -> dict:
    out = {}
    for item in items or ():
        key, sep, value = item.partition("=")
        if not sep:
            raise UsageError(f"expected key=value, got {item!r}")
        try:
            out[key] = json.loads(value)
        except json.JSONDecodeError:
            out[key] = value
    return out


def cmd_sweep(args) -> int:
    problem = _problem(args)
    if len(args.x0) != problem.dim:
        raise UsageError(f"--x0 has {len(args.x0)} values but {problem.name} has dimension {problem.dim}")
    rows = sweep(args.method, problem, args.x0, args.param, args.values,
                 base=_parse_assignments(args.set), eps=args.eps, max_iters=args.max_iters)
    cols = ["parameter", "value", "status", "iters", "f_final", "converged", "diverged", "error"]
    _emit(_table(rows, cols), args.out, f"sweep_{problem.name}_{args.param}.csv")
    return 0


def _table(rows, cols) -> str:
    import io
    buf = io.StringIO()
    w = csv.DictWriter(buf, fieldnames=cols, extrasaction="ignore", lineterminator="\n")
    w.writeheader()
    for r in rows:
        w.writerow({k: repr(v) if isinstance(v, float) else v for k, v in r.items()})
    return buf.getvalue()


def cmd_gridsearch(args) -> int:
    problem = _problem(args)
    if len(args.x0) != problem.dim:
        raise UsageError(f"--x0 has {len(args.x0)} values but {problem.name} has dimension {problem.dim}")
    if args.preset:
        method, grids = PRESETS[args.preset]
        if args.method and args.method != method:
            raise UsageError(f"preset {args.preset} is for {method}, not {args.method}")
    else:
        if not args.grid:
            raise UsageError("give --preset or at least one --grid name=v1,v2,...")
        if not args.method:
            raise UsageError("--method is required with an explicit grid")
        method = args.method
        grids = {}
        for item in args.grid:
            key, sep, values = item.partition("=")
            if not sep:
                raise UsageError(f"expected name=v1,v2,..., got {item!r}")
            grids[key] = _floats(values)
    try:
        result = grid_search(method, problem, args.x0, grids, budget_per_point=args.budget)
    except ValueError as exc:
        raise UsageError(str(exc)) from None
    if result.all_diverged:
        best = {"all_diverged": True, "method": method, "problem": problem.name}
    else:
        best = {"all_diverged": False, **asdict(result.best), "problem": problem.name}
    out = Path(args.out) if args.out else _default_path(f"gridsearch_{method}_{problem.name}.json")
    best_text = json.dumps(best, indent=1) + "\n"
    cols = list(grids) + ["f_final", "iters", "status", "diverged"]
    if out is None:
        sys.stdout.write(best_text)
    else:
        out.parent.mkdir(parents=True, exist_ok=True)
        out.write_text(best_text)
        out.with_suffix(".table.csv").write_text(_table(result.table, cols))
    return 0


def build_parser() -> argparse.ArgumentParser:
    p = _Parser(prog="ecco", description="Circuit-controlled gradient flow optimizer and benchmarks.")
    sub = p.add_subparsers(dest="command", required=True, parser_class=_Parser)

    def problem_args(sp):
        sp.add_argument("--problem", required=True)
        sp.add_argument("--dim", type=int, default=None)
        sp.add_argument("--x0", type=_floats, required=True, help="comma-separated start point")
        sp.add_argument("--out", default=None)

    r = sub.add_parser("run", help="minimize one problem and write its trace")
    problem_args(r)
    r.add_argument("--control", choices=sorted(CONTROL_ALIASES), default="full")
    r.add_argument("--eta", type=float)
    r.add_argument("--delta", type=float)
    r.add_argument("--alpha", type=float)
    r.add_argument("--beta", type=float)
    r.add_argument("--eps", type=float, default=1e-4)
    r.add_argument("--max-iters", type=int, default=100_000)
    r.add_argument("--seed", type=int, default=0)
    r.add_argument("--format", choices=("csv", "json"), default="csv")
    r.add_argument("--no-normalize", action="store_true")
    r.add_argument("--fd-hessian", action="store_true")
    r.set_defaults(func=cmd_run)

    b = sub.add_parser("bench", help="run a JSON manifest of (problem, start, method) entries")
    b.add_argument("manifest", nargs="?", default=None, help="defaults to the bundled testfuncs.json")
    b.add_argument("--workers", type=int, default=1)
    b.add_argument("--out", default=None, help="output directory")
    b.set_defaults(func=cmd_bench)

    s = sub.add_parser("sweep", help="vary one hyperparameter")
    problem_args(s)
    s.add_argument("--method", choices=METHODS, default="ecco_full")
    s.add_argument("--param", choices=sorted(SWEEP_DOMAINS), required=True)
    s.add_argument("--values", type=_floats, required=True)
    s.add_argument("--set", action="append", help="base parameter key=value")
    s.add_argument("--eps", type=float, default=1e-4)
    s.add_argument("--max-iters", type=int, default=100_000)
    s.set_defaults(func=cmd_sweep)

    g = sub.add_parser("gridsearch", help="grid-search a baseline's hyperparameters")
    problem_args(g)
    g.add_argument("--method", choices=BASELINE_METHODS, default=None)
    g.add_argument("--preset", choices=sorted(PRESETS), default=None)
    g.add_argument("--grid", action="append", help="name=v1,v2,...")
    g.add_argument("--budget", type=int, default=1000)
    g.set_defaults(func=cmd_gridsearch)
    return p


def _glue_vector_flags(argv):
    # "--x0 -2,-2" would otherwise be read as an unknown option
    out = []
    it = iter(argv)
    for a in it:
        if a in ("--x0", "--values"):
            nxt = next(it, None)
            out.append(a if nxt is None else f"{a}={nxt}")
        else:
            out.append(a)
    return out


def main(argv=None) -> int:
    parser = build_parser()
    args = parser.parse_args(_glue_vector_flags(sys.argv[1:] if argv is None else argv))
    try:
        return args.func(args)
    except UsageError as exc:
        print(f"ecco {args.command}: error: {exc}", file=sys.stderr)
        return 1


if __name__ == "__main__":
    sys.exit(main())

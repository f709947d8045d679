"""Command-line entry point: ``mecgrid {plan,sweep,validate,report}``.

Exit codes: 0 success, 1 infeasible or limit reached, 2 usage or input error.
"""

from __future__ import annotations

import argparse
import sys
from pathlib import Path

from . import __version__
from .analysis import SweepPathError, solve_case, sweep
from .io import CaseFileError, atomic_write, csv_text, fmt, parse_case, write_results
from .model import CaseError, validate_case
from .report import ReportError, write_report
from .solver import BnbOptions, UnknownBackendError, available_backends

EXIT_OK, EXIT_SOLVE, EXIT_USAGE = 0, 1, 2


class _Parser(argparse.ArgumentParser):
    def error(self, message):
        self.print_usage(sys.stderr)
        raise _UsageError(f"{self.prog}: error: {message}")


class _UsageError(Exception):
    pass


def _positive_int(text):
    v = int(text)
    if v < 1:
        raise argparse.ArgumentTypeError("must be >= 1")
    return v


def _gap(text):
    v = float(text)
    if not v >= 0:
        raise argparse.ArgumentTypeError("must be >= 0")
    return v


def _values(text):
    try:
        vals = [float(x) for x in text.split(",") if x.strip()]
    except ValueError:
        raise argparse.ArgumentTypeError(f"not a comma-separated number list: {text!r}")
    if not vals:
        raise argparse.ArgumentTypeError("no values given")
    return vals


def build_parser() -> argparse.ArgumentParser:
    p = _Parser(prog="mecgrid", description="Day-ahead MILP planner for multi-carrier "
                                            "hybrid AC/DC microgrids.")
    p.add_argument("--version", action="version", version=f"%(prog)s {__version__}")
    sub = p.add_subparsers(dest="command", required=True, parser_class=_Parser)

    def solver_flags(sp):
        sp.add_argument("--segments", type=_positive_int,
                        help="PWL segments per curve (default: case value)")
        sp.add_argument("--gap", type=_gap, default=1e-6, help="relative MIP gap (1e-6)")
        sp.add_argument("--backend", help="solver backend (default: $MECGRID_BACKEND or "
                                          f"reference; available: {', '.join(available_backends())})")
        sp.add_argument("--node-limit", type=_positive_int, default=200000)
        sp.add_argument("--time-limit", type=float, default=3600.0)

    sp = sub.add_parser("plan", help="solve a case and write result files")
    sp.add_argument("--input", required=True, type=Path)
    sp.add_argument("--out", required=True, type=Path)
    solver_flags(sp)

    sp = sub.add_parser("sweep", help="solve once per value of one parameter")
    sp.add_argument("--input", required=True, type=Path)
    sp.add_argument("--param", required=True, help="e.g. inverters[0].p_max or pipes[*].f_max")
    sp.add_argument("--values", required=True, type=_values, help="comma-separated values")
    sp.add_argument("--out", required=True, type=Path)
    solver_flags(sp)

    sp = sub.add_parser("validate", help="parse and validate a case file")
    sp.add_argument("--input", required=True, type=Path)

    sp = sub.add_parser("report", help="write plot tables and a gnuplot script")
    sp.add_argument("--out", required=True, type=Path, help="folder written by `plan`")
    return p


def _options(args) -> BnbOptions:
    return BnbOptions(gap=args.gap, node_limit=args.node_limit, time_limit=args.time_limit)


def _cmd_validate(args, out) -> int:
    case = parse_case(args.input)
    report = validate_case(case)
    print(f"{args.input}: ok ({len(case.ac_hubs)} AC hubs, {len(case.dc_hubs)} DC hubs, "
          f"{len(case.gas_hubs)} gas hubs, horizon {case.horizon})", file=out)
    return EXIT_OK if report.ok else EXIT_USAGE


def _cmd_plan(args, out) -> int:
    case = parse_case(args.input)
    res = solve_case(case, segments=args.segments, options=_options(args), backend=args.backend)
    if not res.ok:
        print(f"solve failed: {res.status}"
              + (f" ({res.solution.message})" if res.solution.message else ""), file=sys.stderr)
        return EXIT_SOLVE
    write_results(res.case, res.schedule, res.metrics, args.out)
    m = res.metrics
    print(f"status {res.status}", file=out)
    for key in ("objective", "lost_load_kwh", "heat_served_fraction", "fuel_cost",
                "degradation_cost", "total_generation_kwh"):
        print(f"{key} {fmt(getattr(m, key))}", file=out)
    print(f"results written to {args.out}", file=out)
    return EXIT_OK if res.status == "optimal" else EXIT_SOLVE


SWEEP_COLUMNS = ["lost_load_kwh", "heat_served_fraction", "fuel_cost", "degradation_cost",
                 "total_cost", "objective"]


def _cmd_sweep(args, out) -> int:
    case = parse_case(args.input)
    rows = sweep(case, args.param, args.values, segments=args.segments,
                 options=_options(args), backend=args.backend)
    table = []
    for r in rows:
        vals = [getattr(r.metrics, c) if r.metrics else "" for c in SWEEP_COLUMNS]
        table.append([r.value, r.status] + vals)
    header = ["value", "status"] + SWEEP_COLUMNS
    text = csv_text(header, table)
    try:
        args.out.mkdir(parents=True, exist_ok=True)
    except OSError as exc:
        raise OSError(f"cannot create {args.out}: {exc.strerror or exc}") from None
    atomic_write(args.out / "sweep.csv", text)
    out.write(text)
    return EXIT_OK if all(r.status == "optimal" for r in rows) else EXIT_SOLVE


def _cmd_report(args, out) -> int:
    for p in write_report(args.out):
        print(p, file=out)
    return EXIT_OK


COMMANDS = {"plan": _cmd_plan, "sweep": _cmd_sweep, "validate": _cmd_validate,
            "report": _cmd_report}


def main(argv=None, out=None) -> int:
    out = out or sys.stdout
    try:
        args = build_parser().parse_args(argv)
    except _UsageError as exc:
        print(exc, file=sys.stderr)
        return EXIT_USAGE
    except SystemExit as exc:  # --help / --version
        return int(exc.code or 0)
    try:
        return COMMANDS[args.command](args, out)
    except (CaseFileError, CaseError, SweepPathError, UnknownBackendError, ReportError) as exc:
        msg = exc.args[0] if isinstance(exc, UnknownBackendError) else str(exc)
        print(f"mecgrid: {msg}", file=sys.stderr)
        return EXIT_USAGE
    except OSError as exc:
        print(f"mecgrid: {exc}", file=sys.stderr)
        return EXIT_USAGE


if __name__ == "__main__":
    sys.exit(main())

"""Command-line front-end.

Every subcommand writes either CSV (header row, LF line endings) or a JSON
object ``{meta, warnings, data}`` to stdout. Floats are written with
``repr``, the shortest string that round-trips, so CSV and JSON agree to
the last digit. In CSV mode, warnings go to stderr.

Exit codes: 0 success, 2 usage or validation error, 3 numerical failure,
4 unattainable specification.
"""

from __future__ import annotations

import argparse
import csv
import json
import math
import sys
from dataclasses import dataclass, field

import numpy as np

from . import __version__
from .characteristics import DEFAULT_N_LEVELS, Ratio, RatioKind, closed_form, ratio_value
from .design import DesignError, DesignSpec, UnattainableError, bu_constraints, run_design
from .errmap import DEFAULT_CHARACTERISTICS, sweep, to_long_rows
from .filterbank import CfGrid, build_table
from .response import FilterClass, FilterConstants, default_beta_grid, sample_response

__all__ = ["main", "build_parser", "EXIT_OK", "EXIT_USAGE", "EXIT_NUMERIC", "EXIT_UNATTAINABLE"]

EXIT_OK = 0
EXIT_USAGE = 2
EXIT_NUMERIC = 3
EXIT_UNATTAINABLE = 4

#: Errmap exits with EXIT_NUMERIC when more than this fraction of cells failed.
MAX_FAILED_FRACTION = 0.5

_UNITS = {
    "beta_peak": "beta", "beta_max_n": "beta", "q_erb": "1", "s_beta": "dB",
    "n_beta": "cycles", "n_beta_max": "cycles", "phi_accum": "cycles",
}
_RATIO_UNITS = {
    RatioKind.ALPHA: "1", RatioKind.G: "1/cycles", RatioKind.QERB_OVER_QN: "1",
    RatioKind.ERB_TIMES_N: "cycles", RatioKind.ERB2_TIMES_S: "dB",
    RatioKind.BWN_TIMES_N: "cycles", RatioKind.BWN2_TIMES_S: "dB",
    RatioKind.S_OVER_N: "dB/cycle", RatioKind.PHI_OVER_N: "1",
}


@dataclass
class Output:
    """Result of one subcommand, serialisable as CSV or JSON."""

    columns: list
    rows: list
    meta: dict = field(default_factory=dict)
    warnings: list = field(default_factory=list)
    data: object = None          # JSON payload; defaults to a list of row objects
    exit_code: int = EXIT_OK


def _num(v):
    if isinstance(v, (float, np.floating)):
        return float(v)
    if isinstance(v, np.integer):
        return int(v)
    return v


def _csv_cell(v) -> str:
    v = _num(v)
    if v is None:
        return ""
    if isinstance(v, float):
        return repr(v)
    return str(v)


def _json_safe(v):
    v = _num(v)
    if isinstance(v, float) and not math.isfinite(v):
        return None
    if isinstance(v, dict):
        return {str(k): _json_safe(x) for k, x in v.items()}
    if isinstance(v, (list, tuple)):
        return [_json_safe(x) for x in v]
    return v


def write_output(out: Output, fmt: str, stdout=None, stderr=None) -> None:
    stdout = stdout or sys.stdout
    stderr = stderr or sys.stderr
    if fmt == "json":
        data = out.data if out.data is not None else [dict(zip(out.columns, r)) for r in out.rows]
        doc = {"meta": _json_safe(out.meta), "warnings": list(out.warnings),
               "data": _json_safe(data)}
        stdout.write(json.dumps(doc, allow_nan=False) + "\n")
        return
    w = csv.writer(stdout, lineterminator="\n")
    w.writerow(out.columns)
    for r in out.rows:
        w.writerow([_csv_cell(v) for v in r])
    for msg in out.warnings:
        stderr.write(f"warning: {msg}\n")


# -- argument helpers ------------------------------------------------------------

def _pair(text: str) -> tuple:
    """``"name=value"`` -> ``(name, float)``."""
    name, sep, value = str(text).partition("=")
    if not sep or not name.strip():
        raise argparse.ArgumentTypeError(f"expected NAME=VALUE, got {text!r}")
    try:
        return name.strip(), float(value)
    except ValueError:
        raise argparse.ArgumentTypeError(f"bad number in {text!r}") from None


def _interval(text: str) -> tuple:
    """``"lo,hi"`` with ``lo <= hi``."""
    parts = str(text).split(",")
    if len(parts) != 2:
        raise argparse.ArgumentTypeError(f"expected LO,HI, got {text!r}")
    try:
        lo, hi = float(parts[0]), float(parts[1])
    except ValueError:
        raise argparse.ArgumentTypeError(f"bad number in interval {text!r}") from None
    if not lo <= hi:
        raise argparse.ArgumentTypeError(f"interval {text!r} must have LO <= HI")
    return lo, hi


def _name_list(text: str) -> tuple:
    return tuple(s.strip() for s in str(text).split(",") if s.strip())


def _constants(args) -> FilterConstants:
    return FilterConstants(args.ap, args.bp, args.bu)


def _constants_meta(c: FilterConstants) -> dict:
    return {"a_p": c.a_p, "b_p": c.b_p, "b_u": c.b_u}


# -- commands --------------------------------------------------------------------

def cmd_chars(args) -> Output:
    c = _constants(args)
    levels = tuple(args.ndb) if args.ndb else DEFAULT_N_LEVELS
    ch = closed_form(c, levels)
    warnings = [f"{k}: {v}" for k, v in ch.failures.items()]
    chars = ch.as_dict()

    ratios = [Ratio(RatioKind.ALPHA), Ratio(RatioKind.G), Ratio(RatioKind.ERB_TIMES_N),
              Ratio(RatioKind.ERB2_TIMES_S), Ratio(RatioKind.S_OVER_N),
              Ratio(RatioKind.PHI_OVER_N)]
    for n in sorted(float(x) for x in levels):
        ratios += [Ratio(RatioKind.QERB_OVER_QN, n), Ratio(RatioKind.BWN_TIMES_N, n),
                   Ratio(RatioKind.BWN2_TIMES_S, n)]
    ratio_vals = {}
    for r in ratios:
        try:
            ratio_vals[r.name] = ratio_value(r, c)
        except ValueError as exc:
            ratio_vals[r.name] = math.nan
            warnings.append(f"{r.name}: {exc}")

    rows = [("characteristic", k, v, _UNITS.get(k, "1")) for k, v in chars.items()]
    rows += [("ratio", r.name, ratio_vals[r.name], _RATIO_UNITS[r.kind]) for r in ratios]
    return Output(["kind", "name", "value", "unit"], rows,
                  meta={"constants": _constants_meta(c), "n_levels_db": list(levels)},
                  warnings=warnings,
                  data={"characteristics": chars, "ratios": ratio_vals,
                        "units": {r[1]: r[3] for r in rows}})


def cmd_bode(args) -> Output:
    c = _constants(args)
    cls = FilterClass.parse(args.filter_class)
    custom = args.points is not None or args.beta_min is not None or args.beta_max is not None
    if custom:
        lo = 0.01 * c.b_p if args.beta_min is None else args.beta_min
        hi = 3.0 * c.b_p if args.beta_max is None else args.beta_max
        n = 4096 if args.points is None else args.points
        if n < 3 or not 0 <= lo < hi:
            raise ValueError("need --points >= 3 and 0 <= --beta-min < --beta-max")
        beta = np.linspace(lo, hi, n)
    else:
        beta = default_beta_grid(c)
    fr = sample_response(cls, c, beta, check_span=not custom)
    rows = list(zip(fr.beta, fr.mag_db, fr.phase_cycles))
    return Output(["beta", "mag_db", "phase_cycles"], rows,
                  meta={"class": cls.value, "constants": _constants_meta(c),
                        "units": {"beta": "f/CF", "mag_db": "dB re peak",
                                  "phase_cycles": "cycles re first row"}})


def cmd_design(args) -> Output:
    spec = DesignSpec(ap_source=args.ap_from, bu_source=args.bu_from, b_u=args.bu,
                      beta_peak=args.beta_peak, allow_alpha=args.allow_alpha)
    res = run_design(spec)
    c = res.constants
    rows = [("a_p", c.a_p), ("b_p", c.b_p), ("b_u", c.b_u)]
    est = res.bu_estimate
    if est is not None:
        rows.append(("db_u_dratio", est.sensitivity))
    meta = {"ap_source": {"name": args.ap_from[0], "value": args.ap_from[1]},
            "beta_peak": args.beta_peak}
    if args.bu_from is not None:
        meta["bu_source"] = {"name": args.bu_from[0], "value": args.bu_from[1]}
    else:
        meta["b_u"] = args.bu
    return Output(["parameter", "value"], rows, meta=meta, warnings=list(res.diagnostics),
                  data={**_constants_meta(c),
                        "db_u_dratio": None if est is None else est.sensitivity})


def cmd_constraints(args) -> Output:
    cons = bu_constraints(alpha_range=args.alpha, g1=args.g1, r_range=args.r,
                          eta_range=args.eta, include_g2_upper=args.include_g2_upper)
    rows = []
    for k in cons:
        lo = k.values[0]
        hi = k.values[-1] if k.kind in ("point", "interval") else None
        rows.append((k.label, k.kind, lo, hi, k.provenance))
    meta = {"alpha": args.alpha, "g1": args.g1, "r": args.r, "eta": args.eta}
    return Output(["label", "kind", "b_u_lo", "b_u_hi", "provenance"], rows, meta=meta)


def cmd_filterbank(args) -> Output:
    grid = CfGrid.make(args.cf_min, args.cf_max, args.n, args.spacing)
    table = build_table(args.recipe, grid)
    rows = [(r.cf_khz, r.q_erb_source, r.q_erb, r.constants.a_p, r.constants.b_p,
             r.constants.b_u, ";".join(r.flags)) for r in table.rows]
    return Output(["cf_khz", "q_erb_source", "q_erb", "a_p", "b_p", "b_u", "flags"], rows,
                  meta={"recipe": table.recipe, "cf_unit": table.cf_unit,
                        "spacing": grid.spacing, "notes": list(table.notes)},
                  warnings=list(table.notes))


def cmd_errmap(args) -> Output:
    ap = np.linspace(args.ap_min, args.ap_max, args.ap_n)
    bu = np.linspace(args.bu_min, args.bu_max, args.bu_n)
    grid = sweep(args.filter_class, ap, bu, args.chars, workers=args.workers)
    rows = list(to_long_rows(grid))
    frac = grid.failure_fraction()
    warnings, code = [], EXIT_OK
    if frac > 0:
        warnings.append(f"{frac:.1%} of cells failed extraction")
    if frac > MAX_FAILED_FRACTION:
        code = EXIT_NUMERIC
    return Output(["class", "characteristic", "A_p", "B_u", "epsilon", "status"], rows,
                  meta={"class": grid.filter_class.value, "b_p": grid.b_p,
                        "characteristics": list(grid.characteristics),
                        "failed_fraction": frac},
                  warnings=warnings, exit_code=code)


# -- parser ----------------------------------------------------------------------

def build_parser() -> argparse.ArgumentParser:
    common = argparse.ArgumentParser(add_help=False)
    common.add_argument("--format", choices=("csv", "json"), default="csv")

    consts = argparse.ArgumentParser(add_help=False)
    consts.add_argument("--ap", type=float, required=True, help="pole real-part magnitude A_p")
    consts.add_argument("--bp", type=float, default=1.0, help="pole imaginary part b_p")
    consts.add_argument("--bu", type=float, required=True, help="exponent B_u")

    p = argparse.ArgumentParser(prog="gammachar",
                                description="Gammatone-family filter characteristics and design.")
    p.add_argument("--version", action="version", version=f"%(prog)s {__version__}")
    sub = p.add_subparsers(dest="command", required=True)

    s = sub.add_parser("chars", parents=[common, consts],
                       help="closed-form characteristics and ratios")
    s.add_argument("--ndb", type=float, action="append",
                   help="n-dB level for Q_n (repeatable; default 3, 10, 15)")
    s.set_defaults(func=cmd_chars)

    s = sub.add_parser("bode", parents=[common, consts], help="normalised frequency response")
    s.add_argument("--class", dest="filter_class", required=True,
                   choices=[c.value for c in FilterClass])
    s.add_argument("--points", type=int)
    s.add_argument("--beta-min", type=float)
    s.add_argument("--beta-max", type=float)
    s.set_defaults(func=cmd_bode)

    s = sub.add_parser("design", parents=[common], help="estimate constants from characteristics")
    g = s.add_mutually_exclusive_group(required=True)
    g.add_argument("--bu-from", type=_pair, metavar="RATIO=VALUE")
    g.add_argument("--bu", type=float)
    s.add_argument("--ap-from", type=_pair, required=True, metavar="CHAR=VALUE")
    s.add_argument("--beta-peak", type=float)
    s.add_argument("--allow-alpha", action="store_true",
                   help="accept alpha = Q_erb/Q_10 as the exponent source")
    s.set_defaults(func=cmd_design)

    s = sub.add_parser("constraints", parents=[common], help="conditions on the exponent")
    s.add_argument("--alpha", type=_interval, metavar="LO,HI")
    s.add_argument("--g1", type=float)
    s.add_argument("--r", type=_interval, metavar="LO,HI")
    s.add_argument("--eta", type=_interval, metavar="LO,HI")
    s.add_argument("--include-g2-upper", action="store_true")
    s.set_defaults(func=cmd_constraints)

    s = sub.add_parser("filterbank", parents=[common], help="human filterbank constants vs CF")
    s.add_argument("--recipe", required=True,
                   choices=("historical", "g1-qsim", "g1-qforw", "g1_qsim", "g1_qforw"))
    s.add_argument("--cf-min", type=float, default=0.125, help="kHz")
    s.add_argument("--cf-max", type=float, default=16.0, help="kHz")
    s.add_argument("--n", type=int, default=40)
    s.add_argument("--spacing", choices=("log", "linear", "logarithmic"), default="log")
    s.set_defaults(func=cmd_filterbank)

    s = sub.add_parser("errmap", parents=[common], help="closed-form error map of a realizable class")
    s.add_argument("--class", dest="filter_class", required=True, choices=("gef", "v", "pgtf"))
    s.add_argument("--ap-min", type=float, default=0.02)
    s.add_argument("--ap-max", type=float, default=0.25)
    s.add_argument("--ap-n", type=int, default=24)
    s.add_argument("--bu-min", type=float, default=1.5)
    s.add_argument("--bu-max", type=float, default=12.0)
    s.add_argument("--bu-n", type=int, default=24)
    s.add_argument("--chars", type=_name_list, default=DEFAULT_CHARACTERISTICS)
    s.add_argument("--workers", type=int, default=None)
    s.set_defaults(func=cmd_errmap)
    return p


def main(argv=None, stdout=None, stderr=None) -> int:
    stderr = stderr or sys.stderr
    parser = build_parser()
    try:
        args = parser.parse_args(argv)
    except SystemExit as exc:
        return int(exc.code or 0)
    try:
        out = args.func(args)
    except UnattainableError as exc:
        stderr.write(f"error: {exc}\n")
        return EXIT_UNATTAINABLE
    except (DesignError, ValueError, KeyError) as exc:
        stderr.write(f"error: {exc}\n")
        return EXIT_USAGE
    except ArithmeticError as exc:
        stderr.write(f"error: numerical failure: {exc}\n")
        return EXIT_NUMERIC
    out.meta = {"tool": "gammachar", "version": __version__, "command": args.command,
                **out.meta}
    write_output(out, args.format, stdout, stderr)
    return out.exit_code


if __name__ == "__main__":  # pragma: no cover
    sys.exit(main())

"""Command-line front end.

Subcommands::

    gb2kit fit <csv> [--families ...] [--tail-cut F] [--json|--csv]
    gb2kit indices (--spec JSON | <csv>)
    gb2kit tailfit <csv> [--fraction F]
    gb2kit simulate --config JSON --seed S -n N -o out.csv
    gb2kit dmms --spec JSON

Exit codes: 0 success, 1 usage, 2 data error, 3 numerical failure.
"""

import argparse
import csv
import json
import math
import sys
from dataclasses import dataclass

import numpy as np

from . import dist, fit, ineq, sde
from .dist import DistributionSpec
from .sample import Sample

EXIT_OK, EXIT_USAGE, EXIT_DATA, EXIT_NUMERIC = 0, 1, 2, 3


class DataError(ValueError):
    pass


# --- ingestion ---------------------------------------------------------------------

@dataclass(frozen=True)
class IngestStats:
    rows: int
    kept: int
    non_positive: int
    header: list | None


def _parse_float(text):
    try:
        v = float(text)
    except ValueError:
        return None
    return v if math.isfinite(v) else None


def _column_index(header, column, ncols):
    if isinstance(column, int) or (isinstance(column, str) and column.lstrip("-").isdigit()):
        idx = int(column)
        if not 0 <= idx < ncols:
            raise DataError(f"column index {idx} out of range (file has {ncols} columns)")
        return idx
    if header is None:
        raise DataError(f"column {column!r} requested by name but the file has no header")
    try:
        return header.index(column)
    except ValueError:
        raise DataError(f"no column named {column!r}; header is {header}") from None


def read_columns(path, column=0, year_column=None):
    """Read one numeric column (and optionally a year column) from a CSV file.

    The first row is a header when its selected cell is not numeric.  A
    non-numeric cell later on is an error that names the file row (1-based).
    Non-positive values are dropped and counted.
    """
    with open(path, newline="", encoding="utf-8") as fh:
        rows = [r for r in csv.reader(fh)]
    # keep file row numbers while skipping blank lines
    numbered = [(i + 1, r) for i, r in enumerate(rows) if r and any(c.strip() for c in r)]
    if not numbered:
        raise DataError(f"{path}: empty file")
    header = None
    first = numbered[0][1]
    probe = column if isinstance(column, int) or str(column).lstrip("-").isdigit() else None
    if probe is None or _parse_float(first[int(probe)] if int(probe) < len(first) else "") is None:
        header = [c.strip() for c in first]
        numbered = numbered[1:]
    ncols = len(header) if header is not None else len(first)
    ci = _column_index(header, column, ncols)
    yi = None if year_column is None else _column_index(header, year_column, ncols)
    values, years = [], []
    non_positive = 0
    for lineno, r in numbered:
        cell = r[ci].strip() if ci < len(r) else ""
        v = _parse_float(cell)
        if v is None:
            raise DataError(f"{path}: row {lineno}: cannot parse {cell!r} as a number")
        if yi is not None:
            ycell = r[yi].strip() if yi < len(r) else ""
            try:
                y = int(float(ycell))
            except ValueError:
                raise DataError(f"{path}: row {lineno}: cannot parse year {ycell!r}") from None
        if v <= 0:
            non_positive += 1
            continue
        values.append(v)
        if yi is not None:
            years.append(y)
    if not values:
        raise DataError(f"{path}: no positive values in the selected column")
    s = Sample.from_values(values, label=str(path),
                           years=np.array(years) if yi is not None else None)
    return s, IngestStats(len(numbered), len(values), non_positive, header)


def ingest(path, column=0, year_column=None):
    s, stats = read_columns(path, column, year_column)
    if stats.non_positive:
        print(f"warning: dropped {stats.non_positive} non-positive row(s) of {stats.rows}",
              file=sys.stderr)
    return s


# --- deflation ---------------------------------------------------------------------

@dataclass(frozen=True)
class DeflatorSeries:
    """CPI-style index by year."""

    index: dict
    base_year: int

    def __post_init__(self):
        if any(not (v > 0) for v in self.index.values()):
            raise DataError("deflator index values must be positive")
        if self.base_year not in self.index:
            raise DataError(f"base year {self.base_year} missing from deflator series")

    @classmethod
    def from_csv(cls, path, base_year):
        index = {}
        with open(path, newline="", encoding="utf-8") as fh:
            for lineno, r in enumerate(csv.reader(fh), 1):
                if not r or not any(c.strip() for c in r):
                    continue
                try:
                    index[int(float(r[0]))] = float(r[1])
                except (ValueError, IndexError):
                    if lineno == 1:
                        continue  # header
                    raise DataError(f"{path}: row {lineno}: expected 'year,index'") from None
        return cls(index, int(base_year))


def deflate(s, d, base=None):
    """Express values in ``base``-year units: value * index(base) / index(year)."""
    if s.years is None:
        raise DataError("sample has no years to deflate by")
    base = d.base_year if base is None else int(base)
    if base not in d.index:
        raise DataError(f"base year {base} missing from deflator series")
    missing = sorted({int(y) for y in s.years} - set(d.index))
    if missing:
        raise DataError(f"deflator series lacks year(s) {missing}")
    factor = np.array([d.index[base] / d.index[int(y)] for y in s.years])
    # s.values and s.years are aligned (both sorted), so map back to input order
    vals = np.empty_like(s.values)
    vals[s.order] = s.values * factor
    yrs = np.empty_like(s.years)
    yrs[s.order] = s.years
    return Sample.from_values(vals, label=s.label, years=yrs, deflator_base=str(base))


# --- helpers ---------------------------------------------------------------------------

def _load_json_arg(text):
    """Accept inline JSON or a path to a JSON file."""
    text = text.strip()
    if not text.startswith("{"):
        with open(text, encoding="utf-8") as fh:
            text = fh.read()
    try:
        return json.loads(text)
    except json.JSONDecodeError as exc:
        raise DataError(f"invalid JSON: {exc}") from None


def _spec_arg(text):
    try:
        return DistributionSpec.from_dict(_load_json_arg(text))
    except (KeyError, TypeError) as exc:
        raise DataError(f"invalid distribution spec: {exc}") from None


def _dump(obj, out):
    json.dump(obj, out, indent=2, allow_nan=False)
    out.write("\n")


def _load_sample(args):
    s = ingest(args.csv, _col(args.column), _col(args.year_column))
    if args.deflator:
        if args.base is None:
            raise DataError("--deflator needs --base")
        s = deflate(s, DeflatorSeries.from_csv(args.deflator, args.base), args.base)
    return s


def _col(c):
    if c is None:
        return None
    return int(c) if c.lstrip("-").isdigit() else c


# --- subcommands ---------------------------------------------------------------------

def cmd_fit(args, out):
    s = _load_sample(args)
    if args.tail_cut:
        s = fit.tail_cut(s, args.tail_cut)
    rows = fit.fit_report(s, args.families)
    if args.series:
        specs = [r.spec for r in rows if r.spec is not None]
        with open(args.series, "w", encoding="utf-8") as fh:
            _dump(fit.survival_series(s, specs), fh)
    if args.format == "json":
        _dump([r.to_dict() for r in rows], out)
    else:
        out.write(fit.report_csv(rows))


def cmd_indices(args, out):
    if (args.spec is None) == (args.csv is None):
        raise UsageError("give exactly one of --spec or a CSV file")
    if args.spec is not None:
        rep = ineq.closed_form_indices(_spec_arg(args.spec))
    else:
        rep = ineq.empirical_indices(_load_sample(args))
    _dump(rep.to_dict(), out)


def cmd_tailfit(args, out):
    s = _load_sample(args)
    ts = fit.tail_slope(s, args.fraction, args.exclude)
    if args.format == "json":
        _dump({"slope": ts.slope, "stderr": ts.stderr, "intercept": ts.intercept,
               "n_points": ts.n_points, "top_fraction": ts.top_fraction}, out)
    else:
        out.write(f"slope {ts.slope:.4f} +/- {ts.stderr:.4f} "
                  f"(top {ts.top_fraction:g}, {ts.n_points} points)\n")


def cmd_simulate(args, out):
    obj = _load_json_arg(args.config)
    try:
        cfg = sde.SdeConfig.from_dict(obj)
    except TypeError as exc:
        raise DataError(f"invalid SDE config: {exc}") from None
    target = sde.steady_state_spec(cfg)
    res = sde.simulate(cfg, args.seed, args.n)
    np.savetxt(args.output, res.sample.original(), fmt="%.17g", header="value", comments="")
    _dump({"steady_state": target.to_dict(), "config": cfg.to_dict(), "n": res.sample.n,
           "guard_rate": res.guard_rate, "output": args.output}, out)


def cmd_dmms(args, out):
    r = ineq.dmms_details(_spec_arg(args.spec))
    _dump({"dmms": r.dmms, "mpdf": r.mpdf, "half_width": r.half_width,
           "left": r.left, "right": r.right, "mode": r.mode}, out)


# --- parser ------------------------------------------------------------------------------

class UsageError(Exception):
    pass


class _Parser(argparse.ArgumentParser):
    def error(self, message):
        self.print_usage(sys.stderr)
        self.exit(EXIT_USAGE, f"{self.prog}: error: {message}\n")


def _data_args(p, csv_required=True):
    if csv_required:
        p.add_argument("csv", help="input CSV file")
    else:
        p.add_argument("csv", nargs="?", help="input CSV file")
    p.add_argument("--column", default="0", help="value column, by header name or 0-based index")
    p.add_argument("--year-column", help="year column for deflation")
    p.add_argument("--deflator", help="CSV of year,index pairs")
    p.add_argument("--base", type=int, help="base year for --deflator")


def build_parser():
    parser = _Parser(prog="gb2kit", description="GB2-family fitting and inequality indices")
    sub = parser.add_subparsers(dest="command", required=True, parser_class=_Parser)

    p = sub.add_parser("fit", help="MLE fit of every family, one row per family ranked by KS")
    _data_args(p)
    p.add_argument("--families", nargs="+", default=list(dist.FAMILIES),
                   choices=dist.FAMILIES, metavar="FAMILY")
    p.add_argument("--tail-cut", type=float, default=0.0,
                   help="drop this fraction of the largest observations first")
    g = p.add_mutually_exclusive_group()
    g.add_argument("--json", dest="format", action="store_const", const="json")
    g.add_argument("--csv", dest="format", action="store_const", const="csv")
    p.add_argument("--series", help="write log-log survival series (JSON) here")
    p.set_defaults(func=cmd_fit, format="csv")

    p = sub.add_parser("indices", help="inequality indices of a spec or a data file")
    _data_args(p, csv_required=False)
    p.add_argument("--spec", help="distribution spec as JSON (inline or file)")
    p.set_defaults(func=cmd_indices)

    p = sub.add_parser("tailfit", help="power-law slope of the empirical survival tail")
    _data_args(p)
    p.add_argument("--fraction", type=float, default=0.1, help="top fraction used (default 0.1)")
    p.add_argument("--exclude", type=int, default=3, help="largest points to skip (default 3)")
    p.add_argument("--json", dest="format", action="store_const", const="json", default="text")
    p.set_defaults(func=cmd_tailfit)

    p = sub.add_parser("simulate", help="Euler-Maruyama draws from the mean-reverting SDE")
    p.add_argument("--config", required=True, help="SdeConfig as JSON (inline or file)")
    p.add_argument("--seed", type=int, required=True)
    p.add_argument("-n", type=int, required=True, help="number of pooled samples")
    p.add_argument("-o", "--output", required=True, help="output CSV")
    p.set_defaults(func=cmd_simulate)

    p = sub.add_parser("dmms", help="DMMS index with its peak density and half-width")
    p.add_argument("--spec", required=True, help="distribution spec as JSON (inline or file)")
    p.set_defaults(func=cmd_dmms)
    return parser


def main(argv=None, out=None):
    out = sys.stdout if out is None else out
    parser = build_parser()
    args = parser.parse_args(argv)
    try:
        args.func(args, out)
    except UsageError as exc:
        print(f"gb2kit: error: {exc}", file=sys.stderr)
        return EXIT_USAGE
    except ArithmeticError as exc:
        print(f"gb2kit: numerical failure: {exc}", file=sys.stderr)
        return EXIT_NUMERIC
    except (ValueError, OSError, KeyError) as exc:
        print(f"gb2kit: data error: {exc}", file=sys.stderr)
        return EXIT_DATA
    return EXIT_OK


def main_entry():
    sys.exit(main())


if __name__ == "__main__":
    main_entry()

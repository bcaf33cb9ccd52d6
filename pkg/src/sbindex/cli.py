"""Command-line entry point ``sbindex``.

Exit codes: 0 success, 1 usage error, 2 data/schema error, 3 numerical failure.
"""

from __future__ import annotations

import argparse
import json
import logging
import os
import sys
from pathlib import Path

from . import ingest, report, synth
from .errors import SbIndexError
from .missingmass import BAND_RULES, missing_mass
from .tailfit import FitWindow, empirical_ccdf, fit_pareto, select_window

EXIT_USAGE, EXIT_DATA, EXIT_NUMERIC = 1, 2, 3


class _Parser(argparse.ArgumentParser):
    def error(self, message):
        self.print_usage(sys.stderr)
        self.exit(EXIT_USAGE, f"{self.prog}: error: {message}\n")


def _window(text: str) -> FitWindow:
    try:
        return FitWindow.parse(text)
    except ValueError as exc:
        raise argparse.ArgumentTypeError(str(exc)) from None


def _cutoff(text: str):
    if text == "auto":
        return text
    try:
        v = float(text)
    except ValueError:
        raise argparse.ArgumentTypeError(f"cutoff must be 'auto' or a number, got {text!r}") from None
    if not v > 0:
        raise argparse.ArgumentTypeError("cutoff must be positive")
    return v


def _year_range(text: str) -> list[int]:
    try:
        if ":" in text:
            lo, hi = (int(t) for t in text.split(":"))
        else:
            lo = hi = int(text)
    except ValueError:
        raise argparse.ArgumentTypeError(f"bad year range {text!r}") from None
    if hi < lo:
        raise argparse.ArgumentTypeError("year range must be increasing")
    return list(range(lo, hi + 1))


def _write(path: Path, data: bytes):
    path.parent.mkdir(parents=True, exist_ok=True)
    path.write_bytes(data)


def _snapshot(path: str, year: int) -> ingest.Snapshot:
    snaps = ingest.load_snapshots(path)
    if year not in snaps:
        raise SbIndexError(f"year {year} not in {path}; available: {sorted(snaps)}")
    return snaps[year]


def cmd_ingest(args) -> int:
    parsed = ingest.parse_dataset(args.input, args.unit)
    for d in parsed.diagnostics:
        print(f"warning: {d}", file=sys.stderr)
    for s in parsed:
        rep = ingest.validate_snapshot(s)
        for m in rep.violations + rep.warnings:
            print(f"{s.year}: {m}", file=sys.stderr)
    _write(Path(args.out), ingest.dump_snapshots(parsed).encode("utf-8"))
    print(f"wrote {len(parsed)} snapshot(s) to {args.out}")
    return 0


def cmd_fit(args) -> int:
    s = _snapshot(args.snapshots, args.year)
    fit = fit_pareto(select_window(empirical_ccdf(s), args.window))
    print(json.dumps(fit.to_dict(s.year), indent=1))
    return 0


def cmd_mass(args) -> int:
    s = _snapshot(args.snapshots, args.year)
    points = empirical_ccdf(s)
    fit = fit_pareto(select_window(points, args.window))
    est = missing_mass(s, fit, args.cutoff, args.band, points)
    print(json.dumps(est.to_dict(), indent=1))
    return 0


def cmd_pipeline(args) -> int:
    res = report.run_pipeline(
        args.input, args.years, args.window, args.cutoff, args.band, unit=args.unit
    )
    for d in res.diagnostics:
        print(f"note: {d}", file=sys.stderr)
    for y, msg in sorted(res.failures.items()):
        print(f"error: {y}: {msg}", file=sys.stderr)
    if not res.estimates:
        return EXIT_NUMERIC
    rows = res.rows()
    out = Path(args.out_table)
    _write(out, report.emit_table(rows, report.table_format_for(out)))
    _write(out.with_name(out.name + ".run.json"), (json.dumps(res.to_dict(), indent=1) + "\n").encode())
    if args.plots:
        pdir = Path(args.plots)
        for y, est in sorted(res.estimates.items()):
            for fmt in ("data", "svg"):
                for name, data in report.emit_ccdf_plot(res.snapshots[y], est.fit, fmt).items():
                    _write(pdir / name, data)
        for name, data in report.emit_timeseries(rows, args.overlay).items():
            _write(pdir / name, data)
    print(f"wrote {len(rows)} row(s) to {out}")
    return EXIT_DATA if res.failures else 0


def cmd_synth(args) -> int:
    years = args.years or [args.year]
    snaps, truths = [], []
    for i, year in enumerate(years):
        seed = args.seed + i
        cap = args.cap if args.mode == "capped" else None
        mode = "gibrat" if args.mode == "gibrat" else "iid-pareto"
        cfg = synth.SynthConfig(
            n=args.n, b=args.b, x_min=args.xmin, cap=cap, cap_mode=args.cap_mode,
            seed=seed, mode=mode, year=year,
        )
        if args.mode == "pareto":
            s, removed = synth.pareto_sample(cfg), 0.0
        elif args.mode == "capped":
            if cap is None:
                raise argparse.ArgumentTypeError("--mode capped needs --cap")
            s, truth = synth.capped_pareto_sample(cfg)
            removed = truth.removed_assets
        else:
            s = synth.gibrat_simulate(cfg, args.steps, args.vol, args.barrier)
            removed = 0.0
        snaps.append(s)
        truths.append({"year": year, "seed": seed, "mode": args.mode, "b": args.b,
                       "x_min": args.xmin, "cap": cap, "removed_assets": removed})
    out = Path(args.out)
    _write(out, ingest.emit_dataset(snaps))
    doc = truths[0] if len(truths) == 1 else truths
    _write(out.with_name(out.name + ".truth.json"), (json.dumps(doc, indent=1) + "\n").encode())
    print(f"wrote {sum(s.n for s in snaps)} firm(s) over {len(snaps)} year(s) to {out}")
    return 0


def build_parser() -> argparse.ArgumentParser:
    p = _Parser(prog="sbindex", description="Pareto tail fits and missing-mass index for firm assets.")
    p.add_argument("-v", "--verbose", action="store_true")
    sub = p.add_subparsers(dest="command", required=True, parser_class=_Parser)
    unit_default = os.environ.get("SBINDEX_UNIT", "busd")

    q = sub.add_parser("ingest", help="parse a CSV dataset into canonical snapshots")
    q.add_argument("--input", required=True)
    q.add_argument("--unit", choices=sorted(ingest.UNIT_FACTORS), default=unit_default)
    q.add_argument("--out", required=True)
    q.set_defaults(func=cmd_ingest)

    def fit_opts(q):
        q.add_argument("--window", type=_window, default=FitWindow())
        q.add_argument("--cutoff", type=_cutoff, default="auto")
        q.add_argument("--band", choices=BAND_RULES, default="corners")

    q = sub.add_parser("fit", help="fit the Pareto tail of one year")
    q.add_argument("--snapshots", required=True)
    q.add_argument("--year", type=int, required=True)
    q.add_argument("--window", type=_window, default=FitWindow())
    q.set_defaults(func=cmd_fit)

    q = sub.add_parser("mass", help="missing mass and band for one year")
    q.add_argument("--snapshots", required=True)
    q.add_argument("--year", type=int, required=True)
    fit_opts(q)
    q.set_defaults(func=cmd_mass)

    q = sub.add_parser("pipeline", help="run all years and emit table and plots")
    q.add_argument("--input", required=True)
    q.add_argument("--unit", choices=sorted(ingest.UNIT_FACTORS), default=unit_default)
    q.add_argument("--years", type=_year_range, default=None)
    fit_opts(q)
    q.add_argument("--out-table", required=True)
    q.add_argument("--plots", default=None)
    q.add_argument("--overlay", action="append", default=[])
    q.set_defaults(func=cmd_pipeline)

    q = sub.add_parser("synth", help="generate a synthetic dataset with ground truth")
    q.add_argument("--mode", choices=("pareto", "capped", "gibrat"), required=True)
    q.add_argument("--n", type=int, default=2000)
    q.add_argument("--b", type=float, default=0.9)
    q.add_argument("--xmin", type=float, default=1.0)
    q.add_argument("--cap", type=float, default=None)
    q.add_argument("--cap-mode", choices=("censor", "truncate"), default="censor")
    q.add_argument("--steps", type=int, default=5000)
    q.add_argument("--vol", type=float, default=0.1)
    q.add_argument("--barrier", type=float, default=1.0)
    q.add_argument("--seed", type=int, required=True)
    q.add_argument("--year", type=int, default=2000)
    q.add_argument("--years", type=_year_range, default=None,
                   help="emit one snapshot per year; year i uses seed + i")
    q.add_argument("--out", required=True)
    q.set_defaults(func=cmd_synth)
    return p


def main(argv=None) -> int:
    parser = build_parser()
    args = parser.parse_args(argv)
    logging.basicConfig(level=logging.INFO if args.verbose else logging.WARNING, format="%(levelname)s %(message)s")
    try:
        return args.func(args)
    except argparse.ArgumentTypeError as exc:
        print(f"sbindex: error: {exc}", file=sys.stderr)
        return EXIT_USAGE
    except SbIndexError as exc:
        print(f"sbindex: {type(exc).__name__}: {exc}", file=sys.stderr)
        return exc.exit_code
    except OSError as exc:
        print(f"sbindex: I/O error: {exc}", file=sys.stderr)
        return EXIT_DATA
    except ValueError as exc:
        print(f"sbindex: error: {exc}", file=sys.stderr)
        return EXIT_USAGE


if __name__ == "__main__":
    sys.exit(main())

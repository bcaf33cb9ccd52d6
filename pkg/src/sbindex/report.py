"""Per-year pipeline orchestration and table/plot emission."""

from __future__ import annotations

import csv
import io
import json
import logging
import os
import re
from dataclasses import asdict, dataclass, field, fields
from pathlib import Path
from typing import IO, Iterable, Mapping, Sequence, Union

import numpy as np

from . import svg
from .errors import EmptyRunError, SbIndexError, SchemaError
from .ingest import ParseResult, Snapshot, parse_dataset, validate_snapshot
from .missingmass import Cutoff, MissingMassEstimate, extrapolation_cutoff, missing_mass
from .tailfit import FitWindow, ParetoFit, empirical_ccdf, fit_pareto, select_window

log = logging.getLogger(__name__)

TABLE_COLUMNS = (
    "year",
    "i_sb_tusd",
    "band_lo_tusd",
    "band_hi_tusd",
    "total_assets_busd",
    "ratio",
    "a",
    "b",
    "se_a",
    "se_b",
    "x_c_busd",
    "x_max_busd",
    "n_fit",
)
# display precision per column; None means integer
_DISPLAY = {
    "year": None,
    "i_sb_tusd": 2,
    "band_lo_tusd": 2,
    "band_hi_tusd": 2,
    "total_assets_busd": 2,
    "ratio": 2,
    "a": 2,
    "b": 2,
    "se_a": 4,
    "se_b": 4,
    "x_c_busd": 2,
    "x_max_busd": 2,
    "n_fit": None,
}
FIT_LINE_POINTS = 100
SERIES_KINDS = ("ccdf-points", "ccdf-fitline", "isb-timeseries", "external-overlay")


@dataclass(frozen=True)
class TableRow:
    year: int
    i_sb_tusd: float
    band_lo_tusd: float
    band_hi_tusd: float
    total_assets_busd: float
    ratio: float
    a: float
    b: float
    se_a: float
    se_b: float
    x_c_busd: float
    x_max_busd: float
    n_fit: int


@dataclass(frozen=True)
class PlotSeries:
    kind: str
    label: str
    x: tuple[float, ...]
    y: tuple[float, ...]
    y_lo: tuple[float, ...] | None = None
    y_hi: tuple[float, ...] | None = None

    def __post_init__(self):
        if self.kind not in SERIES_KINDS:
            raise ValueError(f"unknown series kind {self.kind!r}")
        if len(self.x) != len(self.y):
            raise ValueError("x and y lengths differ")

    def to_json(self) -> bytes:
        d = {"kind": self.kind, "label": self.label, "x": list(self.x), "y": list(self.y)}
        if self.y_lo is not None:
            d["y_lo"] = list(self.y_lo)
            d["y_hi"] = list(self.y_hi)
        return (json.dumps(d, indent=1) + "\n").encode("utf-8")


@dataclass
class PipelineResult:
    estimates: dict[int, MissingMassEstimate]
    failures: dict[int, str] = field(default_factory=dict)
    missing_years: list[int] = field(default_factory=list)
    diagnostics: list[str] = field(default_factory=list)
    snapshots: dict[int, Snapshot] = field(default_factory=dict)
    config: dict = field(default_factory=dict)

    def rows(self) -> list[TableRow]:
        return [build_table_row(self.estimates[y]) for y in sorted(self.estimates)]

    def to_dict(self) -> dict:
        return {
            "config": self.config,
            "estimates": [self.estimates[y].to_dict() for y in sorted(self.estimates)],
            "failures": {str(y): msg for y, msg in sorted(self.failures.items())},
            "missing_years": self.missing_years,
            "diagnostics": self.diagnostics,
        }


def estimate_year(
    s: Snapshot,
    window: FitWindow = FitWindow(),
    cutoff: Cutoff = "auto",
    band_rule: str = "corners",
) -> MissingMassEstimate:
    """CCDF -> window -> fit -> missing mass (with band) for one snapshot."""
    points = empirical_ccdf(s)
    fit = fit_pareto(select_window(points, window))
    return missing_mass(s, fit, cutoff, band_rule, points)


def run_pipeline(
    source: Union[str, os.PathLike, bytes, IO, ParseResult, Mapping[int, Snapshot]],
    years: Iterable[int] | None = None,
    window: FitWindow = FitWindow(),
    cutoff: Cutoff = "auto",
    band_rule: str = "corners",
    unit: str = "busd",
) -> PipelineResult:
    """Estimate the missing mass for each requested year.

    A failure in one year is recorded in ``failures`` and the remaining years
    still run. Requested years absent from the data are listed in
    ``missing_years``; if none are present, :class:`EmptyRunError` is raised.
    """
    diagnostics: list[str] = []
    if isinstance(source, ParseResult):
        snaps, diagnostics = source.snapshots, list(source.diagnostics)
    elif isinstance(source, Mapping):
        snaps = dict(source)
    else:
        parsed = parse_dataset(source, unit)
        snaps, diagnostics = parsed.snapshots, list(parsed.diagnostics)

    wanted = sorted(set(years)) if years is not None else sorted(snaps)
    present = [y for y in wanted if y in snaps]
    if not present:
        raise EmptyRunError(f"none of the requested years {wanted[:5]}... are in the dataset")

    result = PipelineResult(
        estimates={},
        missing_years=[y for y in wanted if y not in snaps],
        diagnostics=diagnostics,
        config={
            "window": window.to_dict(),
            "cutoff": cutoff if isinstance(cutoff, str) else float(cutoff),
            "band_rule": band_rule,
            "unit": unit,
            "years": present,
        },
    )
    for y in present:
        s = snaps[y]
        result.snapshots[y] = s
        report = validate_snapshot(s)
        result.diagnostics += [f"{y}: {m}" for m in report.violations + report.warnings]
        try:
            result.estimates[y] = estimate_year(s, window, cutoff, band_rule)
        except (SbIndexError, ValueError) as exc:
            log.warning("year %d failed: %s", y, exc)
            result.failures[y] = f"{type(exc).__name__}: {exc}"
    return result


def build_table_row(e: MissingMassEstimate) -> TableRow:
    return TableRow(
        year=e.year,
        i_sb_tusd=e.i_sb / 1000.0,
        band_lo_tusd=e.band[0] / 1000.0,
        band_hi_tusd=e.band[1] / 1000.0,
        total_assets_busd=e.total_assets,
        ratio=e.i_sb / e.total_assets if e.total_assets > 0 else float("nan"),
        a=e.fit.a,
        b=e.fit.b,
        se_a=e.fit.se_a,
        se_b=e.fit.se_b,
        x_c_busd=e.x_c,
        x_max_busd=e.x_max,
        n_fit=e.fit.n_fit,
    )


def _display(value, digits: int | None) -> str:
    if digits is None:
        return str(int(value))
    s = f"{value:.{digits}f}"
    return s[1:] if s.startswith("-") and float(s) == 0 else s


def display_values(row: TableRow) -> list[str]:
    return [_display(getattr(row, c), _DISPLAY[c]) for c in TABLE_COLUMNS]


def format_band(row: TableRow) -> str:
    return f"[{_display(row.band_lo_tusd, 2)}, {_display(row.band_hi_tusd, 2)}]"


def emit_table(rows: Sequence[TableRow], fmt: str = "csv") -> bytes:
    """Serialize rows sorted by year.

    CSV and markdown carry display-rounded values; JSON keeps full precision
    and also reports the missing mass and band in billions.
    """
    if not rows:
        raise ValueError("emit_table needs at least one row")
    rows = sorted(rows, key=lambda r: r.year)
    if fmt == "csv":
        buf = io.StringIO()
        w = csv.writer(buf, lineterminator="\n")
        w.writerow(TABLE_COLUMNS)
        for r in rows:
            w.writerow(display_values(r))
        return buf.getvalue().encode("utf-8")
    if fmt == "markdown":
        lines = [
            "| " + " | ".join(TABLE_COLUMNS) + " |",
            "|" + "|".join("---:" for _ in TABLE_COLUMNS) + "|",
        ]
        lines += ["| " + " | ".join(display_values(r)) + " |" for r in rows]
        return ("\n".join(lines) + "\n").encode("utf-8")
    if fmt == "json":
        docs = []
        for r in rows:
            d = asdict(r)
            d["i_sb_busd"] = r.i_sb_tusd * 1000.0
            d["band_lo_busd"] = r.band_lo_tusd * 1000.0
            d["band_hi_busd"] = r.band_hi_tusd * 1000.0
            docs.append(d)
        return (json.dumps({"rows": docs}, indent=1) + "\n").encode("utf-8")
    raise ValueError(f"unknown table format {fmt!r}; expected csv, json or markdown")


def parse_table_json(data: bytes | str) -> list[TableRow]:
    doc = json.loads(data)
    names = [f.name for f in fields(TableRow)]
    return [TableRow(**{k: d[k] for k in names}) for d in doc["rows"]]


def table_format_for(path: str | os.PathLike) -> str:
    ext = Path(path).suffix.lower()
    formats = {".csv": "csv", ".json": "json", ".md": "markdown", ".markdown": "markdown"}
    if ext not in formats:
        raise ValueError(f"cannot infer table format from extension {ext!r}")
    return formats[ext]


def ccdf_series(s: Snapshot, fit: ParetoFit) -> tuple[PlotSeries, PlotSeries]:
    pts = empirical_ccdf(s)
    x_max = extrapolation_cutoff(fit, s.n)
    lo = float(pts.x[-1])
    xs = np.geomspace(lo, max(x_max, lo), FIT_LINE_POINTS)
    ys = fit.ccdf(xs)
    empirical = PlotSeries(
        "ccdf-points", f"empirical {s.year}", tuple(float(v) for v in pts.x[::-1]), tuple(float(v) for v in pts.p[::-1])
    )
    line = PlotSeries(
        "ccdf-fitline", f"Pareto fit {s.year}", tuple(float(v) for v in xs), tuple(float(v) for v in ys)
    )
    return empirical, line


def emit_ccdf_plot(s: Snapshot, fit: ParetoFit, fmt: str = "data") -> dict[str, bytes]:
    """CCDF plot artifacts for one year, keyed by file name.

    ``data`` gives two series files (empirical points, fitted line sampled at
    100 log-spaced x from the smallest asset to ``x_max``); ``svg`` gives a
    log-log chart with the fit window shaded.
    """
    empirical, line = ccdf_series(s, fit)
    if fmt == "data":
        return {
            f"ccdf_points_{s.year}.json": empirical.to_json(),
            f"ccdf_fit_{s.year}.json": line.to_json(),
        }
    if fmt == "svg":
        w = fit.window
        shade_x = shade_y = None
        if w is not None and w.lo is not None:
            if w.mode == "quantile":
                shade_y = (w.lo, w.hi)
            else:
                shade_x = (w.lo, w.hi)
        chart = svg.loglog_chart(
            f"Asset CCDF {s.year} (a={fit.a:.2f}, b={fit.b:.2f})",
            (empirical.x, empirical.y),
            (line.x, line.y),
            shade_x=shade_x,
            shade_y=shade_y,
        )
        return {f"ccdf_{s.year}.svg": chart}
    raise ValueError(f"unknown plot format {fmt!r}")


def parse_overlay(source: Union[str, os.PathLike, bytes]) -> PlotSeries:
    """Read an external comparison series (``year,value_tusd,label``)."""
    if isinstance(source, bytes):
        text, name = source.decode("utf-8"), "<overlay>"
    else:
        text, name = Path(source).read_text(encoding="utf-8"), str(source)
    reader = csv.reader(io.StringIO(text))
    header = next(reader, None)
    if header is None or [h.strip() for h in header] != ["year", "value_tusd", "label"]:
        raise SchemaError(f"{name} line 1: expected header 'year,value_tusd,label', got {header}")
    xs, ys, label = [], [], None
    for row in reader:
        lineno = reader.line_num
        if not row or all(not c.strip() for c in row):
            continue
        if len(row) != 3:
            raise SchemaError(f"{name} line {lineno}: expected 3 fields, got {len(row)}")
        try:
            year, value = int(row[0]), float(row[1])
        except ValueError:
            raise SchemaError(f"{name} line {lineno}: bad year or value {row[:2]}") from None
        if xs and year <= xs[-1]:
            raise SchemaError(f"{name} line {lineno}: years must be strictly increasing")
        xs.append(year)
        ys.append(value)
        label = label or row[2].strip()
    if not xs:
        raise SchemaError(f"{name}: no data rows")
    return PlotSeries("external-overlay", label or Path(name).stem, tuple(xs), tuple(ys))


def _slug(label: str) -> str:
    return re.sub(r"[^A-Za-z0-9]+", "_", label).strip("_").lower() or "series"


def emit_timeseries(
    rows: Sequence[TableRow],
    overlays: Sequence[Union[str, os.PathLike, bytes, PlotSeries]] = (),
    svg_out: bool = True,
) -> dict[str, bytes]:
    """Missing-mass time series (with band) plus one series per overlay file."""
    years = [r.year for r in rows]
    if any(b <= a for a, b in zip(years, years[1:])):
        raise ValueError("rows must be sorted by strictly increasing year")
    main = PlotSeries(
        "isb-timeseries",
        "missing mass I_SB",
        tuple(years),
        tuple(r.i_sb_tusd for r in rows),
        tuple(r.band_lo_tusd for r in rows),
        tuple(r.band_hi_tusd for r in rows),
    )
    extra = [o if isinstance(o, PlotSeries) else parse_overlay(o) for o in overlays]
    out = {"isb_timeseries.json": main.to_json()}
    for i, o in enumerate(extra):
        out[f"overlay_{i + 1}_{_slug(o.label)}.json"] = o.to_json()
    if svg_out:
        series = [{"label": main.label, "x": main.x, "y": main.y, "y_lo": main.y_lo, "y_hi": main.y_hi}]
        series += [{"label": o.label, "x": o.x, "y": o.y} for o in extra]
        out["isb_timeseries.svg"] = svg.timeseries_chart("Missing mass by year", series)
    return out

"""Parse, validate and persist yearly firm-asset datasets.

Input files are comma-delimited UTF-8 with the header
``year,rank,company,sector,country,assets``. Asset values are converted to
the canonical unit, billions of USD, at parse time.
"""

from __future__ import annotations

import csv
import io
import json
import os
from collections import Counter
from dataclasses import dataclass, field
from functools import cached_property
from pathlib import Path
from typing import IO, Iterable, Union

import numpy as np

from .errors import SchemaError

UNIT_FACTORS = {"busd": 1.0, "musd": 1000.0}
COLUMNS = ("year", "rank", "company", "sector", "country", "assets")
MANDATORY_COLUMNS = ("year", "company", "assets")
YEAR_RANGE = (1900, 2100)
NOMINAL_N = 2000

Source = Union[str, os.PathLike, bytes, IO]


@dataclass(frozen=True)
class FirmRecord:
    year: int
    name: str
    assets: float
    rank: int | None = None
    sector: str | None = None
    country: str | None = None

    def __post_init__(self):
        if not self.name:
            raise ValueError("firm name must be non-empty")
        if not YEAR_RANGE[0] <= self.year <= YEAR_RANGE[1]:
            raise ValueError(f"year {self.year} outside {YEAR_RANGE}")
        if not self.assets >= 0:
            raise ValueError(f"assets must be non-negative, got {self.assets}")
        if self.rank is not None and self.rank < 1:
            raise ValueError(f"rank must be positive, got {self.rank}")


@dataclass(frozen=True)
class Snapshot:
    """All firms observed in one year. Immutable after construction."""

    year: int
    records: tuple[FirmRecord, ...]

    def __post_init__(self):
        object.__setattr__(self, "records", tuple(self.records))
        for r in self.records:
            if r.year != self.year:
                raise ValueError(f"record {r.name!r} has year {r.year}, snapshot is {self.year}")

    @property
    def n(self) -> int:
        return len(self.records)

    @cached_property
    def assets(self) -> np.ndarray:
        a = np.array([r.assets for r in self.records], dtype=float)
        a.setflags(write=False)
        return a

    @classmethod
    def from_assets(cls, year: int, assets: Iterable[float], prefix: str = "firm") -> "Snapshot":
        """Build a snapshot from bare asset values (synthetic data, tests)."""
        recs = tuple(
            FirmRecord(year=year, name=f"{prefix}-{i + 1:05d}", assets=float(x), rank=i + 1)
            for i, x in enumerate(assets)
        )
        return cls(year, recs)


@dataclass
class ParseResult:
    snapshots: dict[int, Snapshot]
    diagnostics: list[str] = field(default_factory=list)
    rows_read: int = 0
    rows_skipped: int = 0

    def __iter__(self):
        return iter(self.snapshots.values())

    def __len__(self):
        return len(self.snapshots)


@dataclass
class ValidationReport:
    year: int
    n: int
    violations: list[str] = field(default_factory=list)
    warnings: list[str] = field(default_factory=list)

    @property
    def ok(self) -> bool:
        return not self.violations


def _open_text(source: Source) -> IO[str]:
    if isinstance(source, bytes):
        return io.StringIO(source.decode("utf-8"))
    if isinstance(source, (str, os.PathLike)):
        return open(source, "r", encoding="utf-8", newline="")
    if isinstance(source, io.TextIOBase):
        return source
    return io.TextIOWrapper(source, encoding="utf-8", newline="")


def _opt(value: str | None) -> str | None:
    value = (value or "").strip()
    return value or None


def parse_dataset(source: Source, unit: str = "busd") -> ParseResult:
    """Read a delimited asset file into one :class:`Snapshot` per year.

    Rows that cannot be parsed are skipped and described in
    ``ParseResult.diagnostics``; a missing mandatory column aborts with
    :class:`SchemaError`. ``unit`` names the unit of the asset column.
    """
    if unit not in UNIT_FACTORS:
        raise ValueError(f"unknown asset unit {unit!r}; expected one of {sorted(UNIT_FACTORS)}")
    factor = UNIT_FACTORS[unit]

    fh = _open_text(source)
    try:
        reader = csv.DictReader(fh)
        header = [h.strip() for h in (reader.fieldnames or [])]
        missing = [c for c in MANDATORY_COLUMNS if c not in header]
        if missing:
            raise SchemaError(f"missing mandatory column(s): {', '.join(missing)}")
        reader.fieldnames = header

        grouped: dict[int, list[FirmRecord]] = {}
        result = ParseResult(snapshots={})
        for row in reader:
            lineno = reader.line_num
            result.rows_read += 1
            try:
                rec = _parse_row(row, factor)
            except ValueError as exc:
                result.rows_skipped += 1
                result.diagnostics.append(f"line {lineno}: {exc}")
                continue
            grouped.setdefault(rec.year, []).append(rec)
    finally:
        if fh is not source:
            fh.close()

    if result.rows_read == 0:
        result.diagnostics.append("0 data rows")
    if result.rows_skipped:
        result.diagnostics.append(f"{result.rows_skipped} row(s) skipped")
    result.snapshots = {y: Snapshot(y, tuple(recs)) for y, recs in sorted(grouped.items())}
    return result


def _parse_row(row: dict, factor: float) -> FirmRecord:
    if None in row:
        raise ValueError("too many fields")
    year_s = (row.get("year") or "").strip()
    assets_s = (row.get("assets") or "").strip()
    name = (row.get("company") or "").strip()
    try:
        year = int(year_s)
    except ValueError:
        raise ValueError(f"non-integer year {year_s!r}") from None
    try:
        value = float(assets_s)
    except ValueError:
        raise ValueError(f"non-numeric asset value {assets_s!r}") from None
    if not np.isfinite(value):
        raise ValueError(f"non-finite asset value {assets_s!r}")
    rank_s = _opt(row.get("rank"))
    try:
        rank = int(rank_s) if rank_s is not None else None
    except ValueError:
        raise ValueError(f"non-integer rank {rank_s!r}") from None
    return FirmRecord(
        year=year,
        name=name,
        assets=value / factor if factor != 1.0 else value,
        rank=rank,
        sector=_opt(row.get("sector")),
        country=_opt(row.get("country")),
    )


def validate_snapshot(s: Snapshot, expected_n: int = NOMINAL_N) -> ValidationReport:
    report = ValidationReport(year=s.year, n=s.n)
    nonpos = sum(1 for r in s.records if r.assets <= 0)
    if nonpos:
        report.violations.append(f"{nonpos} non-positive asset value(s)")
    dupes = sorted(name for name, k in Counter(r.name for r in s.records).items() if k > 1)
    if dupes:
        report.violations.append(f"{len(dupes)} duplicate name(s): {', '.join(dupes[:5])}")
    if s.n == 0:
        report.violations.append("empty snapshot")
    if expected_n and s.n != expected_n:
        report.warnings.append(f"n deviates from {expected_n} by {abs(s.n - expected_n)}")
    return report


def total_assets(s: Snapshot) -> float:
    """Sum of all asset values, accumulated in ascending order."""
    total = 0.0
    for x in sorted(r.assets for r in s.records):
        total += x
    return total


def emit_dataset(snapshots: Iterable[Snapshot]) -> bytes:
    """Write snapshots back out in the input CSV layout (assets in billions)."""
    buf = io.StringIO()
    w = csv.writer(buf, lineterminator="\n")
    w.writerow(COLUMNS)
    for s in sorted(snapshots, key=lambda s: s.year):
        for r in s.records:
            w.writerow([
                r.year,
                "" if r.rank is None else r.rank,
                r.name,
                r.sector or "",
                r.country or "",
                repr(r.assets),
            ])
    return buf.getvalue().encode("utf-8")


def _record_json(r: FirmRecord) -> dict:
    d: dict = {"name": r.name, "assets": r.assets}
    if r.rank is not None:
        d["rank"] = r.rank
    if r.sector is not None:
        d["sector"] = r.sector
    if r.country is not None:
        d["country"] = r.country
    return d


def dump_snapshots(snapshots: Iterable[Snapshot]) -> str:
    docs = [
        {"year": s.year, "n": s.n, "records": [_record_json(r) for r in s.records]}
        for s in sorted(snapshots, key=lambda s: s.year)
    ]
    return json.dumps(docs, indent=1) + "\n"


def load_snapshots(source: Union[str, os.PathLike, bytes]) -> dict[int, Snapshot]:
    if isinstance(source, bytes):
        text = source.decode("utf-8")
    else:
        text = Path(source).read_text(encoding="utf-8")
    try:
        docs = json.loads(text)
    except json.JSONDecodeError as exc:
        raise SchemaError(f"snapshot file is not valid JSON: {exc}") from None
    if isinstance(docs, dict):
        docs = [docs]
    out = {}
    for doc in docs:
        try:
            year = int(doc["year"])
            recs = tuple(
                FirmRecord(
                    year=year,
                    name=r["name"],
                    assets=float(r["assets"]),
                    rank=r.get("rank"),
                    sector=r.get("sector"),
                    country=r.get("country"),
                )
                for r in doc["records"]
            )
        except (KeyError, TypeError, ValueError) as exc:
            raise SchemaError(f"bad snapshot document: {exc}") from None
        if "n" in doc and doc["n"] != len(recs):
            raise SchemaError(f"year {year}: n={doc['n']} but {len(recs)} records")
        out[year] = Snapshot(year, recs)
    return out

"""Empirical CCDF and log-log least-squares Pareto fits.

The Pareto law is written ``P(A > x) = c * x**(-b)`` with ``a = ln c`` and x in
billions of USD. Fits are plain OLS of ``ln p`` on ``ln x`` over an
intermediate window of CCDF points, one point per distinct asset value.
"""

from __future__ import annotations

import math
from dataclasses import dataclass, field
from typing import Iterator, NamedTuple, Sequence

import numpy as np

from .errors import InsufficientDataError, SingularFitError
from .ingest import Snapshot

MIN_FIT_POINTS = 10
CCDF_CONVENTION = "ge"  # p(x) = #{A >= x} / n

DEFAULT_WINDOW_LO = 50.0
DEFAULT_WINDOW_HI = 1000.0
AUTO_GRID_LO = (20.0, 50.0, 100.0)
AUTO_GRID_HI = (500.0, 1000.0, 2000.0)


class CcdfPoint(NamedTuple):
    x: float
    p: float


@dataclass(frozen=True)
class FitWindow:
    """Range of CCDF points entering the regression.

    ``mode`` is ``"assets"`` (lo <= x <= hi, billions USD), ``"quantile"``
    (lo <= p <= hi) or ``"auto"``. An auto window before resolution has no
    bounds; after :func:`select_window` it carries the chosen asset bounds.
    """

    mode: str = "assets"
    lo: float | None = DEFAULT_WINDOW_LO
    hi: float | None = DEFAULT_WINDOW_HI

    def __post_init__(self):
        if self.mode not in ("assets", "quantile", "auto"):
            raise ValueError(f"unknown window mode {self.mode!r}")
        if self.mode == "auto" and self.lo is None and self.hi is None:
            return
        if self.lo is None or self.hi is None or not self.lo < self.hi:
            raise ValueError(f"window needs lo < hi, got lo={self.lo}, hi={self.hi}")
        if self.mode == "quantile" and not (0.0 <= self.lo and self.hi <= 1.0):
            raise ValueError("quantile window bounds must lie in [0, 1]")

    @classmethod
    def auto(cls) -> "FitWindow":
        return cls("auto", None, None)

    @classmethod
    def parse(cls, text: str) -> "FitWindow":
        """Parse ``assets:50:1000``, ``quantile:0.05:0.5`` or ``auto``."""
        parts = text.strip().split(":")
        if parts == ["auto"]:
            return cls.auto()
        if len(parts) != 3:
            raise ValueError(f"bad window spec {text!r}")
        return cls(parts[0], float(parts[1]), float(parts[2]))

    def to_dict(self) -> dict:
        return {"mode": self.mode, "lo": self.lo, "hi": self.hi}

    def __str__(self):
        if self.lo is None:
            return self.mode
        return f"{self.mode}:{self.lo:g}:{self.hi:g}"


@dataclass(frozen=True)
class CcdfPoints:
    """Empirical survival function, one point per distinct asset value.

    ``x`` is sorted descending and ``p`` ascending accordingly.
    """

    x: np.ndarray
    p: np.ndarray
    n: int
    excluded: int = 0
    window: FitWindow | None = None
    convention: str = CCDF_CONVENTION

    def __len__(self):
        return len(self.x)

    def __iter__(self) -> Iterator[CcdfPoint]:
        for x, p in zip(self.x, self.p):
            yield CcdfPoint(float(x), float(p))

    def subset(self, mask: np.ndarray, window: FitWindow) -> "CcdfPoints":
        return CcdfPoints(self.x[mask], self.p[mask], self.n, self.excluded, window, self.convention)


@dataclass(frozen=True)
class ParetoFit:
    a: float
    b: float
    se_a: float
    se_b: float
    n_fit: int
    window: FitWindow | None
    ssr: float
    ks: float
    flags: tuple[str, ...] = field(default=())

    @property
    def c(self) -> float:
        return math.exp(self.a)

    def ccdf(self, x):
        """Fitted survival function, clamped to at most 1."""
        return np.minimum(1.0, np.exp(self.a) * np.power(x, -self.b))

    def to_dict(self, year: int | None = None) -> dict:
        d = {
            "year": year,
            "a": self.a,
            "b": self.b,
            "se_a": self.se_a,
            "se_b": self.se_b,
            "n_fit": self.n_fit,
            "window": self.window.to_dict() if self.window else None,
            "ssr": self.ssr,
            "ks": self.ks,
        }
        if self.flags:
            d["flags"] = list(self.flags)
        return d


def empirical_ccdf(s: Snapshot | Sequence[float] | np.ndarray) -> CcdfPoints:
    """Survival fractions ``p = #{A >= x} / n`` at every distinct positive asset value.

    Non-positive values are excluded from the points but still count in ``n``
    (they are firms with assets below any positive x).
    """
    assets = s.assets if isinstance(s, Snapshot) else np.asarray(s, dtype=float)
    n = len(assets)
    pos = np.sort(assets[assets > 0])
    if len(pos) == 0:
        raise InsufficientDataError("no positive asset values; empirical CCDF is empty")
    xs, first = np.unique(pos, return_index=True)
    p = (len(pos) - first) / n
    return CcdfPoints(xs[::-1].copy(), p[::-1].copy(), n, excluded=n - len(pos))


def _select_fixed(points: CcdfPoints, w: FitWindow) -> CcdfPoints:
    vals = points.x if w.mode == "assets" else points.p
    mask = (vals >= w.lo) & (vals <= w.hi)
    return points.subset(mask, w)


def select_window(points: CcdfPoints, w: FitWindow) -> CcdfPoints:
    """Restrict CCDF points to a fitting window.

    Raises :class:`InsufficientDataError` when fewer than ``MIN_FIT_POINTS``
    points survive.
    """
    if w.mode == "auto":
        return _select_auto(points)
    sel = _select_fixed(points, w)
    if len(sel) < MIN_FIT_POINTS:
        raise InsufficientDataError(
            f"window {w} selects {len(sel)} point(s), need at least {MIN_FIT_POINTS}"
        )
    return sel


def _select_auto(points: CcdfPoints) -> CcdfPoints:
    best = None
    for lo in AUTO_GRID_LO:
        for hi in AUTO_GRID_HI:
            w = FitWindow("assets", lo, hi)
            sel = _select_fixed(points, w)
            if len(sel) < MIN_FIT_POINTS:
                continue
            try:
                ks = fit_pareto(sel).ks
            except SingularFitError:
                continue
            # lower KS wins; ties go to the wider window, then to more points
            key = (ks, -math.log(hi / lo), -len(sel))
            if best is None or key < best[0]:
                best = (key, sel, lo, hi)
    if best is None:
        raise InsufficientDataError(
            f"auto window: no grid window selects at least {MIN_FIT_POINTS} points"
        )
    _, sel, lo, hi = best
    return sel.subset(np.ones(len(sel), dtype=bool), FitWindow("auto", lo, hi))


def fit_pareto(points: CcdfPoints) -> ParetoFit:
    """OLS fit of ``ln p = a - b ln x`` with textbook standard errors."""
    x = np.asarray(points.x, dtype=float)
    p = np.asarray(points.p, dtype=float)
    k = len(x)
    if k < MIN_FIT_POINTS:
        raise InsufficientDataError(f"{k} point(s) given, need at least {MIN_FIT_POINTS}")
    if np.any(x <= 0) or np.any(p <= 0):
        raise ValueError("fit points must have x > 0 and p > 0")

    lx = np.log(x)
    ly = np.log(p)
    mx = lx.mean()
    dx = lx - mx
    sxx = float(dx @ dx)
    if sxx == 0.0:
        raise SingularFitError("all fit points share the same asset value")
    my = ly.mean()
    slope = float(dx @ (ly - my)) / sxx
    a = float(my - slope * mx)
    b = -slope

    resid = ly - (a + slope * lx)
    ssr = float(resid @ resid)
    s2 = ssr / (k - 2)
    se_b = math.sqrt(s2 / sxx)
    se_a = math.sqrt(s2 * (1.0 / k + mx * mx / sxx))

    fitted = np.minimum(1.0, np.exp(a - b * lx))
    ks = float(np.max(np.abs(fitted - p)))

    flags = ("negative-b",) if b < 0 else ()
    return ParetoFit(a, b, se_a, se_b, k, points.window, ssr, ks, flags)


def hill_estimate(assets: Sequence[float] | np.ndarray, k: int) -> float:
    """Hill estimator of the tail exponent from the ``k`` largest values.

    ``b_hat = k / sum_{i<=k} ln(X_(i) / X_(k+1))`` with X sorted descending.
    """
    x = np.sort(np.asarray(assets, dtype=float))[::-1]
    n = len(x)
    if not (5 <= k < n):
        raise ValueError(f"need 5 <= k < n, got k={k}, n={n}")
    if x[k] <= 0:
        raise ValueError("Hill estimator needs positive order statistics")
    spacing = float(np.sum(np.log(x[:k] / x[k])))
    if spacing <= 0.0:
        raise InsufficientDataError("degenerate data: top order statistics are all equal")
    return k / spacing

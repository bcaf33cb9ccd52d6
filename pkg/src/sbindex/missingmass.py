"""Missing-mass index: assets absent from the upper tail relative to a Pareto fit.

The fitted law is extrapolated up to ``x_max``, the size at which the fit
expects exactly one firm (``n * c * x_max**-b = 1``). The index is the
expected asset mass of firms in ``(x_c, x_max]`` under the fit minus the assets
actually observed above ``x_c``, where ``x_c`` is the point beyond which the
fitted CCDF stays above the empirical one.
"""

from __future__ import annotations

import math
from dataclasses import dataclass, field
from typing import Union

import numpy as np

from .errors import DivergentTailError
from .ingest import Snapshot, total_assets
from .tailfit import CcdfPoints, ParetoFit, empirical_ccdf

LOG_BRANCH_EPS = 1e-9
# fitted CCDF must beat the empirical one by this relative margin to count as exceeding
CROSSING_RTOL = 1e-9
BAND_RULES = ("corners", "axes")
BAND_WIDTH_SE = 2.0

Cutoff = Union[str, float]


@dataclass(frozen=True)
class MissingMassEstimate:
    year: int
    i_sb: float
    band: tuple[float, float]
    x_c: float
    x_max: float
    theoretical_tail_assets: float
    empirical_tail_assets: float
    total_assets: float
    ratio: float
    fit: ParetoFit
    n: int
    cutoff_rule: str
    band_rule: str
    flags: tuple[str, ...] = field(default=())

    @property
    def no_missing_tail(self) -> bool:
        return "no-missing-tail" in self.flags

    def to_dict(self) -> dict:
        return {
            "year": self.year,
            "i_sb": self.i_sb,
            "band": list(self.band),
            "x_c": self.x_c,
            "x_max": self.x_max,
            "theoretical_tail_assets": self.theoretical_tail_assets,
            "empirical_tail_assets": self.empirical_tail_assets,
            "total_assets": self.total_assets,
            "ratio": self.ratio,
            "n": self.n,
            "cutoff_rule": self.cutoff_rule,
            "band_rule": self.band_rule,
            "flags": list(self.flags),
            "fit": self.fit.to_dict(self.year),
        }


def _x_max(a: float, b: float, n: int) -> float:
    if not b > 0:
        raise DivergentTailError(f"tail exponent b={b} <= 0: no finite extrapolation cutoff")
    if n < 1:
        raise ValueError(f"sample size must be >= 1, got {n}")
    return math.exp((math.log(n) + a) / b)


def extrapolation_cutoff(fit: ParetoFit, n: int) -> float:
    """Asset level where the fit expects exactly one firm: ``(n * e**a) ** (1/b)``."""
    return _x_max(fit.a, fit.b, n)


def tail_assets(c: float, b: float, n: int, x_c: float, x_max: float) -> float:
    """Expected assets of firms in ``(x_c, x_max]`` for density ``n * c*b*x**-(b+1)``."""
    if not 0 < x_c <= x_max:
        raise ValueError(f"need 0 < x_c <= x_max, got x_c={x_c}, x_max={x_max}")
    if not b > 0:
        raise DivergentTailError(f"tail exponent b={b} <= 0")
    span = math.log(x_max / x_c)
    if abs(b - 1.0) <= LOG_BRANCH_EPS:
        return n * c * span
    # x_max**(1-b) - x_c**(1-b) written with expm1 to survive b close to 1
    g = 1.0 - b
    return n * c * b * x_c**g * math.expm1(g * span) / g


def pareto_tail_assets(fit: ParetoFit, n: int, x_c: float, x_max: float) -> float:
    return tail_assets(fit.c, fit.b, n, x_c, x_max)


def _fitted_exceeds(fit_a: float, fit_b: float, points: CcdfPoints) -> np.ndarray:
    fitted = np.minimum(1.0, np.exp(fit_a - fit_b * np.log(points.x)))
    return fitted > points.p * (1.0 + CROSSING_RTOL)


def find_crossing(fit: ParetoFit, points: CcdfPoints) -> float | None:
    """Lowest CCDF point of the top run where the fit exceeds the empirical CCDF.

    Returns None when the fit does not exceed the empirical CCDF at the
    largest observed asset value.
    """
    exceeds = _fitted_exceeds(fit.a, fit.b, points)
    # points.x is descending, so the persistent region is a prefix
    run = len(exceeds) if exceeds.all() else int(np.argmin(exceeds))
    if run == 0:
        return None
    return float(points.x[run - 1])


def crossing_cutoff(fit: ParetoFit, points: CcdfPoints) -> float:
    """Cliff onset ``x_c``; falls back to ``x_max`` when there is no crossing."""
    x_c = find_crossing(fit, points)
    if x_c is None:
        return extrapolation_cutoff(fit, points.n)
    return x_c


def empirical_tail_assets(s: Snapshot | np.ndarray, x_c: float) -> float:
    """Sum of assets strictly above ``x_c``, added in ascending order."""
    if not x_c > 0:
        raise ValueError(f"x_c must be positive, got {x_c}")
    assets = s.assets if isinstance(s, Snapshot) else np.asarray(s, dtype=float)
    total = 0.0
    for x in np.sort(assets[assets > x_c]):
        total += float(x)
    return total


def _resolve_cutoff(fit: ParetoFit, points: CcdfPoints, cutoff: Cutoff) -> tuple[float, str, bool]:
    """Return (x_c, rule label, no_missing_tail)."""
    if isinstance(cutoff, str):
        if cutoff != "auto":
            cutoff = float(cutoff)
        else:
            x_c = find_crossing(fit, points)
            if x_c is None:
                return extrapolation_cutoff(fit, points.n), "auto", True
            return x_c, "auto", False
    x_c = float(cutoff)
    if not x_c > 0:
        raise ValueError(f"cutoff must be positive, got {x_c}")
    return x_c, f"fixed:{x_c:g}", False


def _corner_value(a: float, b: float, n: int, x_c: float, emp: float) -> float:
    x_max = _x_max(a, b, n)
    theo = tail_assets(math.exp(a), b, n, x_c, x_max) if x_c < x_max else 0.0
    return theo - emp


def band_candidates(fit: ParetoFit, rule: str = "corners") -> list[tuple[float, float]]:
    """Perturbed (a, b) pairs evaluated for the confidence band."""
    da = BAND_WIDTH_SE * fit.se_a
    db = BAND_WIDTH_SE * fit.se_b
    if rule == "corners":
        return [(fit.a + sa * da, fit.b + sb * db) for sa in (-1, 1) for sb in (-1, 1)]
    if rule == "axes":
        return [(fit.a - da, fit.b), (fit.a + da, fit.b), (fit.a, fit.b - db), (fit.a, fit.b + db)]
    raise ValueError(f"unknown band rule {rule!r}; expected one of {BAND_RULES}")


def _band(fit: ParetoFit, n: int, x_c: float, emp: float, i_sb: float, rule: str) -> tuple[float, float]:
    vals = [i_sb]
    vals += [_corner_value(a, b, n, x_c, emp) for a, b in band_candidates(fit, rule)]
    return min(vals), max(vals)


def confidence_band(
    s: Snapshot,
    fit: ParetoFit,
    cutoff: Cutoff = "auto",
    rule: str = "corners",
    points: CcdfPoints | None = None,
) -> tuple[float, float]:
    """±2 standard-error band on the missing mass.

    Each candidate coefficient pair recomputes ``x_max`` while ``x_c`` stays
    at the point-estimate value. The point estimate itself is part of the
    min/max set, so the band always contains it.
    """
    return missing_mass(s, fit, cutoff, rule, points).band


def missing_mass(
    s: Snapshot,
    fit: ParetoFit,
    cutoff: Cutoff = "auto",
    band_rule: str = "corners",
    points: CcdfPoints | None = None,
) -> MissingMassEstimate:
    if band_rule not in BAND_RULES:
        raise ValueError(f"unknown band rule {band_rule!r}; expected one of {BAND_RULES}")
    if points is None:
        points = empirical_ccdf(s)
    n = s.n
    x_max = extrapolation_cutoff(fit, n)
    x_c, rule_label, no_tail = _resolve_cutoff(fit, points, cutoff)
    ta = total_assets(s)
    flags = list(fit.flags)

    if no_tail:
        theo = emp = i_sb = 0.0
        band = (0.0, 0.0)
        flags.append("no-missing-tail")
    else:
        theo = pareto_tail_assets(fit, n, x_c, x_max)
        emp = empirical_tail_assets(s, x_c)
        i_sb = theo - emp
        band = _band(fit, n, x_c, emp, i_sb, band_rule)
        if i_sb < 0:
            flags.append("negative-i_sb")

    ratio = i_sb / ta if ta > 0 else float("nan")
    if not 0.0 <= ratio <= 1.0:
        flags.append("ratio-out-of-range")
    return MissingMassEstimate(
        year=s.year,
        i_sb=i_sb,
        band=band,
        x_c=x_c,
        x_max=x_max,
        theoretical_tail_assets=theo,
        empirical_tail_assets=emp,
        total_assets=ta,
        ratio=ratio,
        fit=fit,
        n=n,
        cutoff_rule=rule_label,
        band_rule=band_rule,
        flags=tuple(flags),
    )

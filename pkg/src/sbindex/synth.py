"""Synthetic asset data with known ground truth, and a quadrature oracle.

All randomness comes from numpy's PCG64 bit generator seeded with the 64-bit
config seed (``numpy.random.Generator(numpy.random.PCG64(seed))``). PCG64 and
``Generator.random``/``Generator.standard_normal`` produce the same stream on
every platform for a given numpy major version. Replicate ``i`` of a seeded
experiment uses seed ``seed + i``.
"""

from __future__ import annotations

import math
from dataclasses import asdict, dataclass

import numpy as np
from scipy import integrate

from .errors import ConfigurationError, ConvergenceError
from .ingest import Snapshot

MIN_TRUNCATE_ACCEPTANCE = 1e-6
QUAD_RTOL = 1e-10


@dataclass(frozen=True)
class SynthConfig:
    n: int = 2000
    b: float = 0.9
    x_min: float = 1.0
    cap: float | None = None
    cap_mode: str = "censor"
    seed: int = 0
    mode: str = "iid-pareto"
    year: int = 2000

    def __post_init__(self):
        if self.n < 1:
            raise ConfigurationError(f"n must be >= 1, got {self.n}")
        if not self.b > 0:
            raise ConfigurationError(f"b must be positive, got {self.b}")
        if not self.x_min > 0:
            raise ConfigurationError(f"x_min must be positive, got {self.x_min}")
        if self.cap is not None and not self.cap > self.x_min:
            raise ConfigurationError(f"cap {self.cap} must exceed x_min {self.x_min}")
        if self.cap_mode not in ("censor", "truncate"):
            raise ConfigurationError(f"unknown cap_mode {self.cap_mode!r}")
        if self.mode not in ("iid-pareto", "gibrat"):
            raise ConfigurationError(f"unknown mode {self.mode!r}")
        if not 0 <= self.seed < 2**64:
            raise ConfigurationError("seed must be an unsigned 64-bit integer")


@dataclass(frozen=True)
class GroundTruth:
    seed: int
    mode: str
    b: float
    x_min: float
    cap: float | None
    removed_assets: float
    raw: np.ndarray | None = None

    def to_dict(self) -> dict:
        d = asdict(self)
        d.pop("raw")
        return d


def rng_for(seed: int) -> np.random.Generator:
    return np.random.Generator(np.random.PCG64(seed))


def pareto_inverse_ccdf(u, b: float, x_min: float):
    """Map survival probabilities ``u`` in (0, 1] to Pareto quantiles."""
    return x_min * np.power(u, -1.0 / b)


def _uniform_open(rng: np.random.Generator, n: int) -> np.ndarray:
    # Generator.random draws from [0, 1); reflect to (0, 1] so u = 0 cannot occur
    return 1.0 - rng.random(n)


def pareto_sample(cfg: SynthConfig) -> Snapshot:
    if cfg.mode != "iid-pareto":
        raise ConfigurationError("pareto_sample needs mode='iid-pareto'")
    if cfg.cap is not None:
        raise ConfigurationError("pareto_sample draws uncapped data; use capped_pareto_sample")
    x = pareto_inverse_ccdf(_uniform_open(rng_for(cfg.seed), cfg.n), cfg.b, cfg.x_min)
    return Snapshot.from_assets(cfg.year, x)


def quantile_sample(cfg: SynthConfig, offset: float = 0.0) -> Snapshot:
    """Noiseless sample at survival levels ``u_k = (k - offset) / n``, k = 1..n.

    With the default ``offset=0`` every empirical CCDF point lies exactly on
    the Pareto line; ``offset=0.5`` gives midpoint plotting positions.
    """
    if not 0.0 <= offset < 1.0:
        raise ConfigurationError("offset must lie in [0, 1)")
    u = (np.arange(1, cfg.n + 1) - offset) / cfg.n
    return Snapshot.from_assets(cfg.year, pareto_inverse_ccdf(u, cfg.b, cfg.x_min))


def capped_pareto_sample(cfg: SynthConfig) -> tuple[Snapshot, GroundTruth]:
    """Pareto draws with the top cut at ``cfg.cap``.

    ``censor`` clips values to the cap and records the removed assets
    ``sum(max(0, raw - cap))``. ``truncate`` redraws values above the cap, so
    nothing is removed in the ground-truth sense.
    """
    if cfg.cap is None:
        raise ConfigurationError("capped_pareto_sample needs cfg.cap")
    if cfg.cap_mode == "truncate":
        accept = 1.0 - (cfg.cap / cfg.x_min) ** (-cfg.b)
        if accept < MIN_TRUNCATE_ACCEPTANCE:
            raise ConfigurationError(f"truncation acceptance {accept:.3g} is too small")
    rng = rng_for(cfg.seed)
    raw = pareto_inverse_ccdf(_uniform_open(rng, cfg.n), cfg.b, cfg.x_min)

    if cfg.cap_mode == "censor":
        x = np.minimum(raw, cfg.cap)
        removed = math.fsum(np.maximum(0.0, raw - cfg.cap))
    else:
        x = raw.copy()
        bad = x > cfg.cap
        while bad.any():
            x[bad] = pareto_inverse_ccdf(_uniform_open(rng, int(bad.sum())), cfg.b, cfg.x_min)
            bad = x > cfg.cap
        removed = 0.0

    raw.setflags(write=False)
    truth = GroundTruth(cfg.seed, cfg.mode, cfg.b, cfg.x_min, cfg.cap, removed, raw)
    return Snapshot.from_assets(cfg.year, x), truth


def gibrat_simulate(
    cfg: SynthConfig,
    steps: int,
    volatility: float,
    barrier: float,
    initial: np.ndarray | None = None,
) -> Snapshot:
    """Proportional growth with a reflecting lower barrier.

    Each step multiplies every firm by ``exp(volatility * z)``, z standard
    normal (zero mean log-growth). Log sizes that fall below ``ln barrier``
    are reflected back above it. Firms start at ``initial`` or, by default,
    at ``cfg.x_min``.
    """
    if steps < 0:
        raise ConfigurationError("steps must be >= 0")
    if volatility < 0:
        raise ConfigurationError("volatility must be >= 0")
    if not barrier > 0:
        raise ConfigurationError("barrier must be positive")

    x0 = np.full(cfg.n, cfg.x_min) if initial is None else np.asarray(initial, dtype=float)
    if len(x0) != cfg.n or np.any(x0 <= 0):
        raise ConfigurationError("initial sizes must be n positive values")
    x = np.maximum(x0, barrier)
    if volatility == 0 or steps == 0:
        return Snapshot.from_assets(cfg.year, x)

    rng = rng_for(cfg.seed)
    floor = math.log(barrier)
    y = np.log(x)
    for _ in range(steps):
        y += volatility * rng.standard_normal(cfg.n)
        below = y < floor
        y[below] = 2.0 * floor - y[below]
    return Snapshot.from_assets(cfg.year, np.exp(y))


def quadrature(c: float, b: float, n: float, x_lo: float, x_hi: float, rtol: float = QUAD_RTOL) -> float:
    """Adaptive numerical value of ``n * int_{x_lo}^{x_hi} x * c*b*x**-(b+1) dx``.

    The interval is split into panels at most one decade wide and each panel
    is handed to QUADPACK (``scipy.integrate.quad``). Raises
    :class:`ConvergenceError` if the summed error estimate exceeds ``rtol``.
    """
    if not 0 < x_lo <= x_hi:
        raise ValueError(f"need 0 < x_lo <= x_hi, got {x_lo}, {x_hi}")
    if x_lo == x_hi:
        return 0.0

    def integrand(x):
        return n * x * (c * b * x ** (-(b + 1.0)))

    decades = max(1, math.ceil(math.log10(x_hi / x_lo)))
    edges = np.geomspace(x_lo, x_hi, decades + 1)
    edges[0], edges[-1] = x_lo, x_hi
    parts, errs = [], []
    for lo, hi in zip(edges[:-1], edges[1:]):
        val, err = integrate.quad(integrand, lo, hi, epsabs=0.0, epsrel=rtol * 1e-2, limit=200)
        parts.append(val)
        errs.append(err)
    total = math.fsum(parts)
    err = math.fsum(errs)
    if not err <= rtol * abs(total):
        raise ConvergenceError(f"quadrature error {err:.3g} exceeds rtol={rtol} of {total:.6g}")
    return total

"""Monte Carlo estimation: joint tables, correlations, CHSH values, angle scans.

Reproducibility contract: every estimator is a pure function of its inputs
including the integer seed.  Trials are processed in fixed-size chunks, each
with its own sub-stream derived from the seed, so results are bit-identical
across runs and would remain so if the chunks were processed by any number of
workers (the merge is plain count addition).
"""

from __future__ import annotations

import math
from dataclasses import dataclass

import numpy as np

from .models import JointTable2x2, ModelId, run_trials
from .sphere import Angle, UnitVector3, angle_between

#: Trials per deterministic sub-stream; fixed so chunking (and therefore any
#: parallel schedule over chunks) cannot change the result.
CHUNK_TRIALS = 1 << 17

_UINT64_MASK = (1 << 64) - 1


def derive_subseed(seed: int, index: int) -> int:
    """Mix a master seed with an index into an independent 64-bit sub-seed.

    The mixing is ``SeedSequence((seed, index))``, hashed down to one uint64;
    documented so that independent reimplementations can reproduce streams.
    """
    ss = np.random.SeedSequence((seed & _UINT64_MASK, index))
    return int(ss.generate_state(1, np.uint64)[0])


def _chunk_sizes(n: int) -> list[int]:
    full, rest = divmod(n, CHUNK_TRIALS)
    return [CHUNK_TRIALS] * full + ([rest] if rest else [])


@dataclass(frozen=True)
class EstimationResult:
    """An estimated joint table with counts, per-entry standard errors, seed."""

    table: JointTable2x2
    counts: tuple[int, int, int, int]  # order (++, +-, -+, --)
    n: int
    se: tuple[float, float, float, float]
    seed: int

    def __post_init__(self) -> None:
        if sum(self.counts) != self.n:
            raise ValueError(f"counts {self.counts} do not sum to n={self.n}")


@dataclass(frozen=True)
class ChshSettings:
    """The four measurement directions of a CHSH run."""

    x1: UnitVector3
    x2: UnitVector3
    y1: UnitVector3
    y2: UnitVector3

    @classmethod
    def from_angles_deg(cls, x1: float, x2: float, y1: float, y2: float) -> "ChshSettings":
        return cls(
            x1=UnitVector3.planar(math.radians(x1)),
            x2=UnitVector3.planar(math.radians(x2)),
            y1=UnitVector3.planar(math.radians(y1)),
            y2=UnitVector3.planar(math.radians(y2)),
        )


def default_chsh_settings() -> ChshSettings:
    """Planar settings at 0, 90 degrees (first wing) and 45, 135 (second)."""
    return ChshSettings.from_angles_deg(0.0, 90.0, 45.0, 135.0)


@dataclass(frozen=True)
class CorrelationEstimate:
    x: UnitVector3
    y: UnitVector3
    e: float
    se: float
    seed: int


@dataclass(frozen=True)
class ChshResult:
    settings: ChshSettings
    correlations: tuple[CorrelationEstimate, ...]  # order (x1,y1), (x1,y2), (x2,y1), (x2,y2)
    s_value: float
    seed: int
    n_per_correlation: int


@dataclass(frozen=True)
class ScanPoint:
    phi: float
    e_empirical: float
    e_analytic: float
    se: float


def simulate_outcomes(
    model: ModelId, x: UnitVector3, y: UnitVector3, n: int, seed: int
) -> tuple[np.ndarray, np.ndarray]:
    """The full deterministic outcome stream for n trials (two +-1 arrays)."""
    if n < 1:
        raise ValueError(f"trial count must be >= 1, got {n}")
    a_parts, b_parts = [], []
    for k, size in enumerate(_chunk_sizes(n)):
        rng = np.random.default_rng(derive_subseed(seed, k))
        a, b = run_trials(model, x, y, size, rng)
        a_parts.append(a)
        b_parts.append(b)
    return np.concatenate(a_parts), np.concatenate(b_parts)


def _count_outcomes(a: np.ndarray, b: np.ndarray) -> np.ndarray:
    # Flat index in the fixed order (++, +-, -+, --).
    idx = (a == -1).astype(np.int64) * 2 + (b == -1).astype(np.int64)
    return np.bincount(idx, minlength=4)


def estimate_joint(
    model: ModelId, x: UnitVector3, y: UnitVector3, n: int, seed: int
) -> EstimationResult:
    """Estimate P(a, b | x, y) from n independent trials.

    Standard errors are the binomial ``sqrt(p_hat (1 - p_hat) / n)`` per entry.
    """
    if n < 1:
        raise ValueError(f"trial count must be >= 1, got {n}")
    counts = np.zeros(4, dtype=np.int64)
    for k, size in enumerate(_chunk_sizes(n)):
        rng = np.random.default_rng(derive_subseed(seed, k))
        a, b = run_trials(model, x, y, size, rng)
        counts += _count_outcomes(a, b)
    p = counts / n
    se = np.sqrt(p * (1.0 - p) / n)
    return EstimationResult(
        table=JointTable2x2.from_flat(p),
        counts=tuple(int(c) for c in counts),
        n=n,
        se=tuple(float(v) for v in se),
        seed=seed,
    )


def correlation(table: JointTable2x2) -> float:
    """E[a b] of a joint table: p(+,+) + p(-,-) - p(+,-) - p(-,+)."""
    return table.p_pp + table.p_mm - table.p_pm - table.p_mp


def _correlation_se(e: float, n: int) -> float:
    # a*b is a +-1 variable, so var(ab) = 1 - E^2.
    return math.sqrt(max(0.0, 1.0 - e * e) / n)


def _estimate_correlation(
    model: ModelId, x: UnitVector3, y: UnitVector3, n: int, seed: int
) -> CorrelationEstimate:
    result = estimate_joint(model, x, y, n, seed)
    e = correlation(result.table)
    return CorrelationEstimate(x=x, y=y, e=e, se=_correlation_se(e, n), seed=seed)


def chsh_report(model: ModelId, settings: ChshSettings, n: int, seed: int) -> ChshResult:
    """Four independent correlation estimates combined into the CHSH value.

    Sign convention: ``S = E(x1,y1) - E(x1,y2) + E(x2,y1) + E(x2,y2)``.
    Each correlation uses sub-seed ``derive_subseed(seed, 1000 + i)``, i = 0..3.
    """
    pairs = ((settings.x1, settings.y1), (settings.x1, settings.y2),
             (settings.x2, settings.y1), (settings.x2, settings.y2))
    estimates = tuple(
        _estimate_correlation(model, x, y, n, derive_subseed(seed, 1000 + i))
        for i, (x, y) in enumerate(pairs)
    )
    s_value = estimates[0].e - estimates[1].e + estimates[2].e + estimates[3].e
    return ChshResult(
        settings=settings,
        correlations=estimates,
        s_value=s_value,
        seed=seed,
        n_per_correlation=n,
    )


def chsh(model: ModelId, settings: ChshSettings, n: int, seed: int) -> float:
    """The CHSH combination S; see :func:`chsh_report` for the full breakdown."""
    return chsh_report(model, settings, n, seed).s_value


def scan_angles(model: ModelId, steps: int, n: int, seed: int) -> list[ScanPoint]:
    """Empirical vs analytic correlation on a uniform sweep of phi over [0, pi].

    Settings are planar: the first direction fixed at azimuth 0, the second
    at azimuth phi.  Each step draws its trials from sub-seed
    ``derive_subseed(seed, 2000 + step)``.
    """
    if steps < 2:
        raise ValueError(f"scan needs at least 2 steps, got {steps}")
    x = UnitVector3.planar(0.0)
    points = []
    for k, phi in enumerate(np.linspace(0.0, math.pi, steps)):
        y = UnitVector3.planar(float(phi))
        est = _estimate_correlation(model, x, y, n, derive_subseed(seed, 2000 + k))
        e_analytic = analytic = analytic_correlation_checked(model, x, y)
        points.append(ScanPoint(phi=float(phi), e_empirical=est.e, e_analytic=analytic, se=est.se))
    return points


def analytic_correlation_checked(model: ModelId, x: UnitVector3, y: UnitVector3) -> float:
    from .models import analytic_correlation

    return analytic_correlation(model, angle_between(x, y))

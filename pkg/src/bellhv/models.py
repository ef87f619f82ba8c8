"""Hidden-variable models of the two-qubit singlet experiment.

Four models share the same deterministic responses ``A = sign(l . d_A)`` and
``B = -sign(l . d_B)``:

* ``BASELINE`` - the hidden direction ``l`` is uniform on the sphere and
  independent of the settings; correlations stay within the classical bound.
* ``M1`` - one hidden variable whose conditional density given the settings
  ``(x, y)`` is the two-region form below; reproduces the singlet statistics.
* ``M2`` / ``M3`` - three hidden variables ``(l, l1, l2)`` where ``l1``/``l2``
  are pinned to the settings by delta couplings (``l1 := x``, ``l2 := y``) and
  ``l`` has the same two-region density given ``(l1, l2)``.  ``M3`` differs
  from ``M2`` only in that the responses read ``l1``/``l2`` instead of the
  settings, which is operationally identical under the delta couplings.

The two-region density given directions ``(d1, d2)`` at angle ``phi`` is

    rho(l) = (1 / 4 pi) * (1 + (d1 . d2) s) / (1 + (1 - 2 phi / pi) s),

with ``s = sign((l . d1)(l . d2))``.  It is constant on each of the two
regions ``s = +1`` (total mass ``(1 + cos phi) / 2``) and ``s = -1`` (mass
``(1 - cos phi) / 2``), which the samplers exploit: pick the region by its
exact weight, then draw uniformly inside it by rejection.
"""

from __future__ import annotations

import math
from dataclasses import dataclass
from enum import Enum
from typing import Optional

import numpy as np

from .sphere import (
    TWO_PI,
    Angle,
    SphereGrid,
    UnitVector3,
    angle_between,
    dot,
    sample_uniform_sphere_array,
    sign_pm,
)

FOUR_PI = 4.0 * math.pi


class ModelId(Enum):
    BASELINE = "baseline"
    M1 = "m1"
    M2 = "m2"
    M3 = "m3"

    @classmethod
    def from_string(cls, name: str) -> "ModelId":
        try:
            return cls(name.lower())
        except ValueError:
            raise ValueError(
                f"unknown model {name!r}; expected one of "
                f"{', '.join(m.value for m in cls)}"
            ) from None


#: Models whose hidden state carries the per-wing variables l1, l2.
THREE_VARIABLE_MODELS = frozenset({ModelId.M2, ModelId.M3})
#: Models that reproduce the singlet conditional distribution.
SINGLET_MODELS = frozenset({ModelId.M1, ModelId.M2, ModelId.M3})


@dataclass(frozen=True)
class HiddenState:
    """One sampled hidden configuration.

    ``lam1``/``lam2`` are populated exactly for the three-variable models
    (``M2``/``M3``), where the delta couplings force ``lam1 == x`` and
    ``lam2 == y`` bitwise.
    """

    lam: UnitVector3
    lam1: Optional[UnitVector3] = None
    lam2: Optional[UnitVector3] = None


@dataclass(frozen=True)
class OutcomePair:
    """The +-1-valued outcomes of one joint measurement."""

    a: int
    b: int

    def __post_init__(self) -> None:
        if self.a not in (-1, 1) or self.b not in (-1, 1):
            raise ValueError(f"outcomes must be +-1, got a={self.a}, b={self.b}")


@dataclass(frozen=True)
class JointTable2x2:
    """Conditional distribution P(a, b | settings) over a, b in {-1, +1}.

    Field ``p_ab`` names the entry for (a, b); entries are nonnegative and
    sum to one within 1e-12.
    """

    p_pp: float
    p_pm: float
    p_mp: float
    p_mm: float

    def __post_init__(self) -> None:
        entries = (self.p_pp, self.p_pm, self.p_mp, self.p_mm)
        if any(e < 0.0 for e in entries):
            raise ValueError(f"table entries must be nonnegative: {entries}")
        total = math.fsum(entries)
        if abs(total - 1.0) > 1e-12:
            raise ValueError(f"table entries sum to {total}, expected 1")

    def entry(self, a: int, b: int) -> float:
        if a not in (-1, 1) or b not in (-1, 1):
            raise ValueError(f"outcome labels must be +-1, got ({a}, {b})")
        return {
            (1, 1): self.p_pp,
            (1, -1): self.p_pm,
            (-1, 1): self.p_mp,
            (-1, -1): self.p_mm,
        }[(a, b)]

    def as_array(self) -> np.ndarray:
        """2x2 array indexed [a, b] with 0 -> +1 and 1 -> -1."""
        return np.array([[self.p_pp, self.p_pm], [self.p_mp, self.p_mm]])

    @classmethod
    def from_flat(cls, values) -> "JointTable2x2":
        """Build from four values in the fixed order (++, +-, -+, --)."""
        pp, pm, mp, mm = (float(v) for v in values)
        return cls(pp, pm, mp, mm)


#: Fixed serialization order of table entries: (a, b) signs.
OUTCOME_ORDER = ("++", "+-", "-+", "--")


def lambda_density(
    model: ModelId, lam: UnitVector3, d1: UnitVector3, d2: UnitVector3
) -> Optional[float]:
    """Conditional density of the hidden direction, in 1/steradian.

    For ``M1`` the conditioning directions ``(d1, d2)`` are the settings
    ``(x, y)``; for ``M2``/``M3`` they are ``(l1, l2)``.  ``BASELINE`` is the
    uniform density ``1/(4 pi)`` regardless of ``(d1, d2)``.

    Returns ``None`` when the requested branch is degenerate: at ``phi = 0``
    with ``s = -1`` or ``phi = pi`` with ``s = +1`` the region has zero
    measure and the denominator vanishes, so no density value applies.  The
    samplers never select those regions (their weight is exactly zero).
    """
    if model is ModelId.BASELINE:
        return 1.0 / FOUR_PI
    s = sign_pm(dot(lam, d1) * dot(lam, d2))
    cos_phi = max(-1.0, min(1.0, dot(d1, d2)))
    phi = math.acos(cos_phi)
    denominator = 1.0 + (1.0 - 2.0 * phi / math.pi) * s
    if denominator <= 0.0:
        return None
    return (1.0 + cos_phi * s) / (FOUR_PI * denominator)


def region_weight_plus(phi: Angle | float) -> float:
    """Total probability mass of the region s = +1: ``(1 + cos phi) / 2``.

    Continuous at the endpoints (1 at ``phi = 0``, 0 at ``phi = pi``), which
    is what lets the samplers skip the vanishing region entirely.
    """
    radians = phi.radians if isinstance(phi, Angle) else float(phi)
    if not 0.0 <= radians <= math.pi:
        raise ValueError(f"angle must lie in [0, pi], got {radians}")
    return 0.5 * (1.0 + math.cos(radians))


def sample_hidden(
    model: ModelId, x: UnitVector3, y: UnitVector3, rng: np.random.Generator
) -> HiddenState:
    """Draw one hidden configuration given the settings.

    ``BASELINE`` draws ``l`` uniformly.  The singlet models first pick the
    region ``s = +1`` with probability ``(1 + x . y) / 2``, then draw ``l``
    uniformly inside that region by rejection from the uniform sphere; the
    empirical density is therefore exactly the two-region density.  For
    ``M2``/``M3`` the delta couplings additionally set ``l1 := x, l2 := y``.
    """
    if model is ModelId.BASELINE:
        lam = _one_uniform(rng)
        return HiddenState(lam=lam)
    w_plus = 0.5 * (1.0 + max(-1.0, min(1.0, dot(x, y))))
    s = 1 if rng.random() < w_plus else -1
    while True:
        lam = _one_uniform(rng)
        if sign_pm(dot(lam, x) * dot(lam, y)) == s:
            break
    if model in THREE_VARIABLE_MODELS:
        return HiddenState(lam=lam, lam1=x, lam2=y)
    return HiddenState(lam=lam)


def _one_uniform(rng: np.random.Generator) -> UnitVector3:
    row = sample_uniform_sphere_array(rng, 1)[0]
    return UnitVector3(float(row[0]), float(row[1]), float(row[2]))


def response_a(lam: UnitVector3, d: UnitVector3) -> int:
    """First wing's deterministic response: ``sign(l . d)``."""
    return sign_pm(dot(lam, d))


def response_b(lam: UnitVector3, d: UnitVector3) -> int:
    """Second wing's deterministic response: ``-sign(l . d)``."""
    return -sign_pm(dot(lam, d))


def run_trial(
    model: ModelId, x: UnitVector3, y: UnitVector3, rng: np.random.Generator
) -> OutcomePair:
    """One joint measurement: sample the hidden state, apply the responses.

    ``M3`` applies the responses to ``(l, l1)`` and ``(l, l2)``; the delta
    couplings make that coincide with ``M2``'s ``(l, x)``/``(l, y)``, which
    the trial asserts rather than assumes.
    """
    state = sample_hidden(model, x, y, rng)
    if model is ModelId.M3:
        assert state.lam1 is not None and state.lam2 is not None
        return OutcomePair(a=response_a(state.lam, state.lam1), b=response_b(state.lam, state.lam2))
    return OutcomePair(a=response_a(state.lam, x), b=response_b(state.lam, y))


def run_trials(
    model: ModelId, x: UnitVector3, y: UnitVector3, n: int, rng: np.random.Generator
) -> tuple[np.ndarray, np.ndarray]:
    """Vectorized trial stream: two int8 arrays of +-1 outcomes of length ``n``.

    Statistically identical to ``n`` independent :func:`run_trial` calls and
    deterministic for a fixed generator state.  ``M2`` and ``M3`` consume the
    stream identically, so equal seeds give bit-identical outcome streams.
    """
    if n < 1:
        raise ValueError(f"trial count must be >= 1, got {n}")
    xv, yv = x.as_array(), y.as_array()
    if model is ModelId.BASELINE:
        lam = sample_uniform_sphere_array(rng, n)
    else:
        w_plus = 0.5 * (1.0 + float(np.clip(xv @ yv, -1.0, 1.0)))
        s = np.where(rng.random(n) < w_plus, 1.0, -1.0)
        lam = np.empty((n, 3), dtype=np.float64)
        pending = np.arange(n)
        while pending.size:
            cand = sample_uniform_sphere_array(rng, pending.size)
            cand_s = np.where((cand @ xv) * (cand @ yv) >= 0.0, 1.0, -1.0)
            ok = cand_s == s[pending]
            lam[pending[ok]] = cand[ok]
            pending = pending[~ok]
    a = np.where(lam @ xv >= 0.0, 1, -1).astype(np.int8)
    b = np.where(lam @ yv >= 0.0, -1, 1).astype(np.int8)
    return a, b


def singlet_table(x: UnitVector3, y: UnitVector3) -> JointTable2x2:
    """The singlet state's conditional distribution ``(1 - a b (x . y)) / 4``."""
    d = dot(x, y)
    return JointTable2x2(
        p_pp=(1.0 - d) / 4.0,
        p_pm=(1.0 + d) / 4.0,
        p_mp=(1.0 + d) / 4.0,
        p_mm=(1.0 - d) / 4.0,
    )


def analytic_correlation(model: ModelId, phi: Angle | float) -> float:
    """Exact correlation E[a b] at settings separated by ``phi``.

    The singlet models give ``-cos(phi)``; the baseline gives the classical
    linear correlation ``-1 + 2 phi / pi`` of the sign responses under a
    uniform hidden direction.
    """
    radians = phi.radians if isinstance(phi, Angle) else float(phi)
    if not 0.0 <= radians <= math.pi:
        raise ValueError(f"angle must lie in [0, pi], got {radians}")
    if model is ModelId.BASELINE:
        return -1.0 + 2.0 * radians / math.pi
    return -math.cos(radians)


def analytic_table(model: ModelId, x: UnitVector3, y: UnitVector3) -> JointTable2x2:
    """Exact conditional table for the model at the given settings.

    Both outcome marginals are uniform for every model, so the table is
    determined by the correlation: ``P(a, b) = (1 + a b E) / 4``.
    """
    if model in SINGLET_MODELS:
        return singlet_table(x, y)
    e = analytic_correlation(model, angle_between(x, y))
    return JointTable2x2(
        p_pp=(1.0 + e) / 4.0,
        p_pm=(1.0 - e) / 4.0,
        p_mp=(1.0 - e) / 4.0,
        p_mm=(1.0 + e) / 4.0,
    )


def exact_cell_masses(model: ModelId, phi: Angle | float, grid: SphereGrid) -> np.ndarray:
    """Exact per-cell probability masses of the hidden-variable density.

    The conditioning directions are placed in the grid's equatorial plane,
    ``d1`` at azimuth 0 and ``d2`` at azimuth ``phi``; with the polar axis
    perpendicular to both, the density depends on the azimuth of ``l`` alone
    and is constant between the four meridians where ``l . d1`` or ``l . d2``
    changes sign.  Each cell mass is then a finite sum of exactly integrable
    constant pieces with the density evaluated once per piece, so the result
    carries no discretization error (only float roundoff).
    """
    radians = phi.radians if isinstance(phi, Angle) else float(phi)
    d1 = UnitVector3(1.0, 0.0, 0.0)
    d2 = UnitVector3.planar(radians)
    breakpoints = sorted(
        {
            (0.5 * math.pi) % TWO_PI,
            (0.5 * math.pi + radians) % TWO_PI,
            (1.5 * math.pi) % TWO_PI,
            (1.5 * math.pi + radians) % TWO_PI,
        }
    )
    masses = np.empty(grid.n_cells, dtype=np.float64)
    for index, height, theta_c, alpha_lo, alpha_hi in grid.iter_cell_geometry():
        sin_t, cos_t = math.sin(theta_c), math.cos(theta_c)
        cuts = [alpha_lo] + [b for b in breakpoints if alpha_lo < b < alpha_hi] + [alpha_hi]
        mass = 0.0
        for u, v in zip(cuts[:-1], cuts[1:]):
            mid = 0.5 * (u + v)
            lam = UnitVector3.normalized(sin_t * math.cos(mid), sin_t * math.sin(mid), cos_t)
            rho = lambda_density(model, lam, d1, d2)
            if rho is None:  # degenerate zero-measure branch at phi in {0, pi}
                continue
            mass += rho * height * (v - u)
        masses[index] = mass
    return masses


def density_normalization(model: ModelId, phi: Angle | float, grid: SphereGrid) -> float:
    """Integral of the hidden-variable density over the sphere via grid cells.

    Sums :func:`exact_cell_masses`, so a correctly normalized density comes
    out as 1 up to float roundoff regardless of resolution.
    """
    return float(exact_cell_masses(model, phi, grid).sum())

"""Unit-sphere primitives: vectors, angles, uniform sampling, equal-area grids.

Everything downstream (hidden-variable densities, Monte Carlo trials,
discretized entropies) is built on the types and samplers in this module.
All functions are pure; the sampler is a pure function of the generator
state, so values can be shared freely across threads.
"""

from __future__ import annotations

import math
from dataclasses import dataclass, field
from typing import Callable, Iterator

import numpy as np

TWO_PI = 2.0 * math.pi
FULL_SPHERE_STERADIANS = 4.0 * math.pi

# Squared-norm tolerance for accepting components as a point on S^2.
_UNIT_NORM_TOL = 1e-12


@dataclass(frozen=True)
class UnitVector3:
    """A point on the unit sphere: a measurement direction or a hidden-variable value.

    Components must satisfy ``c1**2 + c2**2 + c3**2 == 1`` to within 1e-12;
    use :meth:`normalized` to build one from an arbitrary nonzero vector.
    """

    c1: float
    c2: float
    c3: float

    def __post_init__(self) -> None:
        n2 = self.c1 * self.c1 + self.c2 * self.c2 + self.c3 * self.c3
        if not math.isfinite(n2) or abs(n2 - 1.0) > _UNIT_NORM_TOL:
            raise ValueError(f"components are not on the unit sphere: ({self.c1}, {self.c2}, {self.c3})")

    @classmethod
    def normalized(cls, c1: float, c2: float, c3: float) -> "UnitVector3":
        """Scale an arbitrary nonzero vector onto the unit sphere."""
        norm = math.sqrt(c1 * c1 + c2 * c2 + c3 * c3)
        if not math.isfinite(norm) or norm == 0.0:
            raise ValueError("cannot normalize a zero or non-finite vector")
        return cls(c1 / norm, c2 / norm, c3 / norm)

    @classmethod
    def from_array(cls, a: np.ndarray) -> "UnitVector3":
        return cls.normalized(float(a[0]), float(a[1]), float(a[2]))

    @classmethod
    def planar(cls, azimuth_rad: float) -> "UnitVector3":
        """Direction at the given azimuth in the equatorial (c3 = 0) plane."""
        return cls(math.cos(azimuth_rad), math.sin(azimuth_rad), 0.0)

    def as_array(self) -> np.ndarray:
        return np.array([self.c1, self.c2, self.c3], dtype=np.float64)

    def __neg__(self) -> "UnitVector3":
        return UnitVector3(-self.c1, -self.c2, -self.c3)


@dataclass(frozen=True)
class Angle:
    """An angle between two directions, stored in radians on [0, pi]."""

    radians: float

    def __post_init__(self) -> None:
        if not (0.0 <= self.radians <= math.pi):
            raise ValueError(f"angle must lie in [0, pi], got {self.radians}")

    @classmethod
    def from_degrees(cls, degrees: float) -> "Angle":
        return cls(math.radians(degrees))

    @property
    def degrees(self) -> float:
        return math.degrees(self.radians)


def dot(u: UnitVector3, v: UnitVector3) -> float:
    """Euclidean inner product of two unit vectors; lies in [-1, 1] up to roundoff."""
    return u.c1 * v.c1 + u.c2 * v.c2 + u.c3 * v.c3


def angle_between(u: UnitVector3, v: UnitVector3) -> Angle:
    """Angle between two unit vectors, arccos of the (clamped) inner product."""
    return Angle(math.acos(max(-1.0, min(1.0, dot(u, v)))))


def sign_pm(t: float) -> int:
    """Sign of ``t`` mapped onto {-1, +1}, with sign_pm(0) := +1.

    The zero convention is fixed so runs are bit-reproducible; the event
    ``t == 0`` has measure zero under every sampler in this package, so the
    choice never affects any statistic.
    """
    if not math.isfinite(t):
        raise ValueError(f"sign_pm requires a finite argument, got {t}")
    return 1 if t >= 0.0 else -1


def sample_uniform_sphere(rng: np.random.Generator) -> UnitVector3:
    """Draw one direction with uniform density 1/(4*pi) on the sphere.

    Uses the exact (z uniform on [-1, 1], azimuth uniform on [0, 2*pi))
    construction; deterministic for a fixed generator state.
    """
    row = sample_uniform_sphere_array(rng, 1)[0]
    return UnitVector3(float(row[0]), float(row[1]), float(row[2]))


def sample_uniform_sphere_array(rng: np.random.Generator, n: int) -> np.ndarray:
    """Draw ``n`` uniform directions as an (n, 3) float64 array."""
    z = rng.uniform(-1.0, 1.0, n)
    az = rng.uniform(0.0, TWO_PI, n)
    r = np.sqrt(np.maximum(0.0, 1.0 - z * z))
    return np.column_stack((r * np.cos(az), r * np.sin(az), z))


@dataclass(frozen=True, eq=False)
class SphereGrid:
    """Quasi-equal-area partition of the sphere into latitude-band cells.

    The sphere is cut into ``2 * resolution`` latitude bands of equal angular
    width; each band is split into equal-longitude cells, with the per-band
    cell count chosen so cell areas stay close to a common target.  Cell
    areas are exact (band area divided by the band's cell count), so the
    areas always sum to 4*pi and the max/min area ratio stays below 1.5.

    Cell count grows as roughly ``16 * resolution**2 / pi`` and is strictly
    increasing in the resolution.
    """

    resolution: int
    theta_edges: np.ndarray = field(repr=False)   # (n_bands + 1,) colatitudes
    z_edges: np.ndarray = field(repr=False)       # cos(theta_edges), descending
    band_counts: np.ndarray = field(repr=False)   # cells per band
    band_offsets: np.ndarray = field(repr=False)  # cumulative cell offsets, (n_bands + 1,)
    centers: np.ndarray = field(repr=False)       # (n_cells, 3)
    areas: np.ndarray = field(repr=False)         # (n_cells,) steradians

    def __post_init__(self) -> None:
        total = float(self.areas.sum())
        if abs(total - FULL_SPHERE_STERADIANS) > 1e-9:
            raise ValueError(f"cell areas sum to {total}, expected 4*pi")
        if np.any(self.areas <= 0.0):
            raise ValueError("all cell areas must be positive")
        ratio = float(self.areas.max() / self.areas.min())
        if ratio > 1.5:
            raise ValueError(f"max/min cell-area ratio {ratio:.3f} exceeds 1.5")

    @property
    def n_cells(self) -> int:
        return int(self.areas.shape[0])

    @property
    def n_bands(self) -> int:
        return int(self.band_counts.shape[0])

    def __len__(self) -> int:
        return self.n_cells

    @property
    def cells(self) -> list[tuple[UnitVector3, float]]:
        """The partition as (center, area-in-steradians) pairs."""
        return [
            (UnitVector3.from_array(self.centers[i]), float(self.areas[i]))
            for i in range(self.n_cells)
        ]

    def band_of_cell(self, index: int) -> int:
        return int(np.searchsorted(self.band_offsets, index, side="right") - 1)

    def cell_bounds(self, index: int) -> tuple[float, float, float, float]:
        """Return (z_top, z_bottom, azimuth_lo, azimuth_hi) of one cell."""
        band = self.band_of_cell(index)
        j = index - int(self.band_offsets[band])
        width = TWO_PI / float(self.band_counts[band])
        return (
            float(self.z_edges[band]),
            float(self.z_edges[band + 1]),
            j * width,
            (j + 1) * width,
        )

    def cell_indices(self, directions: np.ndarray) -> np.ndarray:
        """Map an (n, 3) array of unit vectors to their containing cell indices."""
        directions = np.atleast_2d(directions)
        theta = np.arccos(np.clip(directions[:, 2], -1.0, 1.0))
        d_theta = math.pi / self.n_bands
        band = np.minimum((theta / d_theta).astype(np.int64), self.n_bands - 1)
        alpha = np.mod(np.arctan2(directions[:, 1], directions[:, 0]), TWO_PI)
        counts = self.band_counts[band]
        j = np.minimum((alpha * counts / TWO_PI).astype(np.int64), counts - 1)
        return self.band_offsets[band] + j

    def cell_index(self, v: UnitVector3) -> int:
        return int(self.cell_indices(v.as_array()[np.newaxis, :])[0])

    def integrate(self, density: Callable[[np.ndarray], np.ndarray] | np.ndarray) -> float:
        """Center-sampling quadrature: sum of density(center) * area over all cells.

        First-order accurate; the error on a bounded piecewise-continuous
        density falls at least in half each time the resolution doubles.
        """
        values = density(self.centers) if callable(density) else np.asarray(density)
        if values.shape != (self.n_cells,):
            raise ValueError(f"expected {self.n_cells} density values, got shape {values.shape}")
        return float(values @ self.areas)

    def iter_cell_geometry(self) -> Iterator[tuple[int, float, float, float, float]]:
        """Yield (index, z_height, theta_center, azimuth_lo, azimuth_hi) per cell."""
        for band in range(self.n_bands):
            height = float(self.z_edges[band] - self.z_edges[band + 1])
            theta_c = 0.5 * float(self.theta_edges[band] + self.theta_edges[band + 1])
            m = int(self.band_counts[band])
            width = TWO_PI / m
            base = int(self.band_offsets[band])
            for j in range(m):
                yield base + j, height, theta_c, j * width, (j + 1) * width


def equal_area_grid(resolution: int) -> SphereGrid:
    """Build the quasi-equal-area grid at the given resolution (>= 1).

    ``2 * resolution`` equal-width latitude bands; band ``i`` is split into
    ``max(1, round(band_area / target))`` equal-longitude cells with target
    area ``(pi / (2 * resolution))**2``, which keeps every cell within a
    factor ~1.17 of the target.
    """
    if resolution < 1:
        raise ValueError(f"grid resolution must be >= 1, got {resolution}")
    n_bands = 2 * resolution
    theta_edges = np.linspace(0.0, math.pi, n_bands + 1)
    z_edges = np.cos(theta_edges)
    z_edges[0], z_edges[-1] = 1.0, -1.0
    target = (math.pi / n_bands) ** 2

    band_counts = np.empty(n_bands, dtype=np.int64)
    for i in range(n_bands):
        band_area = TWO_PI * (z_edges[i] - z_edges[i + 1])
        band_counts[i] = max(1, int(round(band_area / target)))
    band_offsets = np.concatenate(([0], np.cumsum(band_counts)))

    n_cells = int(band_offsets[-1])
    centers = np.empty((n_cells, 3), dtype=np.float64)
    areas = np.empty(n_cells, dtype=np.float64)
    for i in range(n_bands):
        m = int(band_counts[i])
        theta_c = 0.5 * (theta_edges[i] + theta_edges[i + 1])
        alpha = (np.arange(m) + 0.5) * (TWO_PI / m)
        sl = slice(int(band_offsets[i]), int(band_offsets[i + 1]))
        sin_t, cos_t = math.sin(theta_c), math.cos(theta_c)
        centers[sl, 0] = sin_t * np.cos(alpha)
        centers[sl, 1] = sin_t * np.sin(alpha)
        centers[sl, 2] = cos_t
        areas[sl] = TWO_PI * (z_edges[i] - z_edges[i + 1]) / m

    return SphereGrid(
        resolution=resolution,
        theta_edges=theta_edges,
        z_edges=z_edges,
        band_counts=band_counts,
        band_offsets=band_offsets,
        centers=centers,
        areas=areas,
    )

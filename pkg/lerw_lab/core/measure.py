"""
Occupation Measures - Finite planar measures and the Levy-Prokhorov metric.

An ``OccupationMeasure`` is a list of atoms, each a straight segment (or a
point, when both ends coincide) carrying a nonnegative mass spread uniformly
along it. Ball masses and the metric work with each atom's representative
point, its midpoint.
"""

import logging
import math
from dataclasses import dataclass, field
from typing import NamedTuple, Optional, Tuple

import numpy as np
import pandas as pd
from scipy.spatial import cKDTree
from scipy.spatial.distance import cdist

logger = logging.getLogger(__name__)

BISECTION_TOLERANCE = 1e-6
_MATCHING_PAIR_LIMIT = 4_000_000


@dataclass(frozen=True, eq=False)
class OccupationMeasure:
    """Positive measure on segment and point atoms; coordinates are complex numbers."""

    starts: np.ndarray
    ends: np.ndarray
    masses: np.ndarray
    total_mass: float = field(init=False)

    def __post_init__(self):
        starts = np.asarray(self.starts, dtype=complex).ravel()
        ends = np.asarray(self.ends, dtype=complex).ravel()
        masses = np.asarray(self.masses, dtype=float).ravel()
        if not (len(starts) == len(ends) == len(masses)):
            raise ValueError("atom arrays must have equal length")
        if np.any(masses < 0) or not np.all(np.isfinite(masses)):
            raise ValueError("atom masses must be finite and nonnegative")
        for name, arr in (('starts', starts), ('ends', ends), ('masses', masses)):
            arr.flags.writeable = False
            object.__setattr__(self, name, arr)
        object.__setattr__(self, 'total_mass', math.fsum(masses.tolist()))

    @classmethod
    def from_points(cls, points, masses) -> "OccupationMeasure":
        pts = np.asarray(points, dtype=complex).ravel()
        return cls(pts, pts, masses)

    @classmethod
    def empty(cls) -> "OccupationMeasure":
        return cls(np.zeros(0, complex), np.zeros(0, complex), np.zeros(0))

    @property
    def midpoints(self) -> np.ndarray:
        return (self.starts + self.ends) / 2

    def __len__(self) -> int:
        return len(self.masses)

    def scaled(self, factor: float) -> "OccupationMeasure":
        return OccupationMeasure(self.starts, self.ends, self.masses * factor)

    def to_frame(self) -> pd.DataFrame:
        """One row per atom: x1, y1, x2, y2, mass."""
        return pd.DataFrame({
            'x1': self.starts.real, 'y1': self.starts.imag,
            'x2': self.ends.real, 'y2': self.ends.imag,
            'mass': self.masses,
        })


@dataclass(frozen=True)
class TestFamily:
    """Dyadic squares of side 2^-k tiling the plane (cells indexed by floor)."""

    __test__ = False

    level: int = 7

    def __post_init__(self):
        if self.level < 1:
            raise ValueError("test family level must be at least 1")

    @property
    def side(self) -> float:
        return 2.0 ** (-self.level)

    @property
    def resolution(self) -> float:
        """Diameter of one square."""
        return self.side * math.sqrt(2)

    def cells(self, points: np.ndarray) -> np.ndarray:
        """Integer (i, j) cell index of each complex point."""
        return np.stack([np.floor(points.real / self.side), np.floor(points.imag / self.side)],
                        axis=1).astype(np.int64)


class LevyProkhorovBracket(NamedTuple):
    lower: float
    upper: float
    resolution: float


def occupation_from_edges(sample, n: int, c_n: float) -> OccupationMeasure:
    """
    Occupation measure of the rescaled LERW: mass 1/c_n on every traversed edge.

    Args:
        sample: LerwSample
        n: Lattice scale
        c_n: Linear speed (> 0)

    Returns:
        OccupationMeasure with total mass M_n / c_n
    """
    if c_n <= 0:
        raise ValueError("c_n must be positive")
    pts = sample.path.points
    z = (pts[:, 0] + 1j * pts[:, 1]) / n
    return OccupationMeasure(z[:-1], z[1:], np.full(len(z) - 1, 1.0 / c_n))


def ball_mass(mu: OccupationMeasure, z: complex, eps: float) -> float:
    """Mass of atoms whose midpoint lies in the open ball B(z; eps)."""
    if eps <= 0:
        raise ValueError("eps must be positive")
    inside = np.abs(mu.midpoints - z) < eps
    return math.fsum(mu.masses[inside].tolist())


def clipped_ball_mass(mu: OccupationMeasure, z: complex, eps: float) -> float:
    """
    Exact mass of the open ball B(z; eps) with each atom's mass spread along its segment.
    """
    if eps <= 0:
        raise ValueError("eps must be positive")
    a = mu.starts - z
    d = mu.ends - mu.starts
    # |a + s d|^2 < eps^2  <=>  A s^2 + B s + C < 0
    A = np.abs(d) ** 2
    B = 2 * (a.real * d.real + a.imag * d.imag)
    C = np.abs(a) ** 2 - eps * eps
    frac = np.zeros(len(mu))
    point = A == 0
    frac[point] = (C[point] < 0).astype(float)
    seg = ~point
    disc = B[seg] ** 2 - 4 * A[seg] * C[seg]
    root = np.sqrt(np.maximum(disc, 0.0))
    s0 = np.clip((-B[seg] - root) / (2 * A[seg]), 0.0, 1.0)
    s1 = np.clip((-B[seg] + root) / (2 * A[seg]), 0.0, 1.0)
    frac[seg] = np.where(disc > 0, s1 - s0, 0.0)
    return math.fsum((frac * mu.masses).tolist())


def total_mass_gap(mu: OccupationMeasure, nu: OccupationMeasure) -> float:
    return abs(mu.total_mass - nu.total_mass)


def rasterize(mu: OccupationMeasure, cell: float,
              bounds: Tuple[float, float, float, float] = (-1.0, 1.0, -1.0, 1.0)) -> pd.DataFrame:
    """
    Coarse-grained grid raster of a measure (midpoint binning).

    Returns:
        DataFrame with columns x, y (cell centres) and mass, nonzero cells only
    """
    xmin, xmax, ymin, ymax = bounds
    nx = max(1, int(math.ceil((xmax - xmin) / cell)))
    ny = max(1, int(math.ceil((ymax - ymin) / cell)))
    mids = mu.midpoints
    grid, xe, ye = np.histogram2d(mids.real, mids.imag, bins=(nx, ny),
                                  range=((xmin, xmin + nx * cell), (ymin, ymin + ny * cell)),
                                  weights=mu.masses)
    ii, jj = np.nonzero(grid)
    return pd.DataFrame({
        'x': (xe[ii] + xe[ii + 1]) / 2,
        'y': (ye[jj] + ye[jj + 1]) / 2,
        'mass': grid[ii, jj],
    })


def _atoms(mu: OccupationMeasure) -> Tuple[np.ndarray, np.ndarray]:
    """Merge atoms with identical midpoints; returns (points (k,2), masses)."""
    if len(mu) == 0:
        return np.zeros((0, 2)), np.zeros(0)
    mids = mu.midpoints
    xy = np.stack([mids.real, mids.imag], axis=1)
    uniq, inverse = np.unique(xy, axis=0, return_inverse=True)
    masses = np.zeros(len(uniq))
    np.add.at(masses, inverse.ravel(), mu.masses)
    return uniq, masses


class _CellEvents:
    """Greedy union-of-squares events of one measure against another's points."""

    def __init__(self, pts: np.ndarray, masses: np.ndarray, other_pts: np.ndarray,
                 other_masses: np.ndarray, family: TestFamily):
        self.family = family
        self.other_masses = other_masses
        self.other_tree = cKDTree(other_pts) if len(other_pts) else None
        self.other_pts = other_pts
        if len(pts):
            cells = family.cells(pts[:, 0] + 1j * pts[:, 1])
            self.cells, inverse = np.unique(cells, axis=0, return_inverse=True)
            self.cell_mass = np.zeros(len(self.cells))
            np.add.at(self.cell_mass, inverse.ravel(), masses)
        else:
            self.cells = np.zeros((0, 2), dtype=np.int64)
            self.cell_mass = np.zeros(0)

    def _covered(self, eps: float):
        """For each cell, indices of other points within eps (closed) of the square."""
        s = self.family.side
        lo = self.cells * s
        centres = lo + s / 2
        if self.other_tree is None:
            return [np.zeros(0, dtype=np.int64) for _ in range(len(self.cells))]
        near = self.other_tree.query_ball_point(centres, eps + s * math.sqrt(2) / 2)
        out = []
        for c, idx in enumerate(near):
            idx = np.asarray(idx, dtype=np.int64)
            if len(idx) == 0:
                out.append(idx)
                continue
            p = self.other_pts[idx]
            dx = np.maximum(np.maximum(lo[c, 0] - p[:, 0], 0.0), p[:, 0] - (lo[c, 0] + s))
            dy = np.maximum(np.maximum(lo[c, 1] - p[:, 1], 0.0), p[:, 1] - (lo[c, 1] + s))
            out.append(idx[np.hypot(dx, dy) <= eps])
        return out

    def worst_excess(self, eps: float) -> float:
        """max over greedy events A of mu(A) - nu(A^eps)."""
        if len(self.cells) == 0:
            return 0.0
        covered_by = self._covered(eps)
        standalone = np.array([self.cell_mass[c] - self.other_masses[idx].sum()
                               for c, idx in enumerate(covered_by)])
        order = np.lexsort((np.arange(len(standalone)), -standalone))
        covered = np.zeros(len(self.other_masses), dtype=bool)
        mass_a = 0.0
        mass_cov = 0.0
        best = 0.0
        for c in order:
            mass_a += self.cell_mass[c]
            idx = covered_by[c]
            fresh = idx[~covered[idx]]
            covered[fresh] = True
            mass_cov += self.other_masses[fresh].sum()
            best = max(best, mass_a - mass_cov)
        return best


def _lower_bound(mu: OccupationMeasure, nu: OccupationMeasure, family: TestFamily) -> float:
    mu_pts, mu_m = _atoms(mu)
    nu_pts, nu_m = _atoms(nu)
    forward = _CellEvents(mu_pts, mu_m, nu_pts, nu_m, family)
    backward = _CellEvents(nu_pts, nu_m, mu_pts, mu_m, family)

    def violated(eps: float) -> bool:
        return forward.worst_excess(eps) > eps or backward.worst_excess(eps) > eps

    lo, hi = 0.0, max(mu.total_mass, nu.total_mass)
    while hi - lo > BISECTION_TOLERANCE:
        mid = (lo + hi) / 2
        if violated(mid):
            lo = mid
        else:
            hi = mid
    return lo


def _coarsen(pts: np.ndarray, masses: np.ndarray, family: TestFamily) -> Tuple[np.ndarray, np.ndarray]:
    cells = family.cells(pts[:, 0] + 1j * pts[:, 1])
    uniq, inverse = np.unique(cells, axis=0, return_inverse=True)
    out = np.zeros(len(uniq))
    np.add.at(out, inverse.ravel(), masses)
    return (uniq + 0.5) * family.side, out


def _upper_bound(mu: OccupationMeasure, nu: OccupationMeasure, family: TestFamily) -> float:
    mu_pts, mu_m = _atoms(mu)
    nu_pts, nu_m = _atoms(nu)
    mu_tot, nu_tot = mu.total_mass, nu.total_mass
    best = max(mu_tot, nu_tot)
    if len(mu_pts) == 0 or len(nu_pts) == 0:
        return best
    slack = 0.0
    if len(mu_pts) * len(nu_pts) > _MATCHING_PAIR_LIMIT:
        mu_pts, mu_m = _coarsen(mu_pts, mu_m, family)
        nu_pts, nu_m = _coarsen(nu_pts, nu_m, family)
        slack = family.resolution
    dist = cdist(mu_pts, nu_pts)
    order = np.argsort(dist, axis=None, kind='stable')
    left_mu = mu_m.copy()
    left_nu = nu_m.copy()
    matched = 0.0
    cols = dist.shape[1]
    for flat in order:
        i, j = divmod(int(flat), cols)
        moved = min(left_mu[i], left_nu[j])
        if moved <= 0:
            continue
        left_mu[i] -= moved
        left_nu[j] -= moved
        matched += moved
        d = dist[i, j] + slack
        best = min(best, max(d, mu_tot - matched, nu_tot - matched))
        if d >= best:
            break
    return best


def levy_prokhorov(mu: OccupationMeasure, nu: OccupationMeasure,
                   family: Optional[TestFamily] = None) -> float:
    """
    Certified lower bound of the Levy-Prokhorov distance over dyadic-square events.

    Args:
        mu: First measure
        nu: Second measure
        family: Dyadic test family (default level 7)

    Returns:
        Smallest eps (bisection to 1e-6) for which no greedy union of squares
        violates either defining inequality
    """
    return _lower_bound(mu, nu, family or TestFamily())


def levy_prokhorov_bracket(mu: OccupationMeasure, nu: OccupationMeasure,
                           family: Optional[TestFamily] = None) -> LevyProkhorovBracket:
    """Lower bound plus the greedy-matching coupling upper bound."""
    family = family or TestFamily()
    lower = _lower_bound(mu, nu, family)
    upper = max(_upper_bound(mu, nu, family), lower)
    logger.debug(f"Levy-Prokhorov bracket [{lower:.6g}, {upper:.6g}] at level {family.level}")
    return LevyProkhorovBracket(lower=lower, upper=upper, resolution=family.resolution)

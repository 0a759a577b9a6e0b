"""
Green's Function - SLE Green's function on the disk, mapped domains, and Riemann sums.
"""

import logging
import math
from dataclasses import dataclass
from typing import Callable, Literal, Union

import numpy as np

from .errors import PreconditionViolation, SingularAtOrigin
from .lattice import GridDomain

logger = logging.getLogger(__name__)

ComplexLike = Union[complex, np.ndarray]


@dataclass(frozen=True)
class SleParams:
    """SLE parameter kappa in (0, 4] and dimension d = 1 + kappa/8."""

    kappa: float = 2.0

    def __post_init__(self):
        if not 0 < self.kappa <= 4:
            raise ValueError(f"kappa must lie in (0, 4], got {self.kappa}")

    @property
    def dimension(self) -> float:
        return 1.0 + self.kappa / 8.0


@dataclass(frozen=True)
class ConformalMap:
    """
    Closed-form conformal maps onto the unit disk fixing 0.

    identity: D = unit disk; scaling: D = disk of radius r, z -> z/r;
    rotation: D = unit disk, z -> e^{i theta} z.
    """

    kind: Literal['identity', 'scaling', 'rotation'] = 'identity'
    radius: float = 1.0
    angle: float = 0.0

    def __post_init__(self):
        if self.radius <= 0:
            raise ValueError("scaling radius must be positive")

    @classmethod
    def identity(cls) -> "ConformalMap":
        return cls('identity')

    @classmethod
    def scaling(cls, radius: float) -> "ConformalMap":
        return cls('scaling', radius=radius)

    @classmethod
    def rotation(cls, angle: float) -> "ConformalMap":
        return cls('rotation', angle=angle)

    def __call__(self, z: ComplexLike) -> ComplexLike:
        if self.kind == 'scaling':
            return z / self.radius
        if self.kind == 'rotation':
            return np.exp(1j * self.angle) * z
        return z

    def derivative(self, z: ComplexLike) -> ComplexLike:
        if self.kind == 'scaling':
            return np.ones_like(z, dtype=complex) / self.radius
        if self.kind == 'rotation':
            return np.ones_like(z, dtype=complex) * np.exp(1j * self.angle)
        return np.ones_like(z, dtype=complex)


def _check_point(z: np.ndarray) -> None:
    if np.any(z == 0):
        raise SingularAtOrigin("the Green's function is singular at the origin")


def green_disk(z: ComplexLike, params: SleParams) -> Union[float, np.ndarray]:
    """
    G_D(z) = |z|^(d-2) on the unit disk (uniformly distributed start).

    Raises:
        SingularAtOrigin: If z = 0
        PreconditionViolation: If |z| > 1
    """
    arr = np.asarray(z, dtype=complex)
    _check_point(arr)
    r = np.abs(arr)
    if np.any(r > 1 + 1e-12):
        raise PreconditionViolation("green_disk needs |z| <= 1")
    out = r ** (params.dimension - 2)
    return float(out) if out.ndim == 0 else out


def green_domain(z: ComplexLike, conformal_map: ConformalMap,
                 params: SleParams) -> Union[float, np.ndarray]:
    """G_D(z) = |phi'(z)|^(2-d) G_D(phi(z)) = |phi'(z) / phi(z)|^(2-d)."""
    arr = np.asarray(z, dtype=complex)
    _check_point(arr)
    image = conformal_map(arr)
    if np.any(np.abs(image) > 1 + 1e-12):
        raise PreconditionViolation("point lies outside the mapped domain")
    out = np.abs(conformal_map.derivative(arr) / image) ** (2 - params.dimension)
    return float(out) if out.ndim == 0 else out


@dataclass(frozen=True)
class Annulus:
    """Closed annulus inner <= |z| <= outer."""

    inner: float
    outer: float

    def __post_init__(self):
        if not 0 <= self.inner < self.outer:
            raise ValueError("annulus needs 0 <= inner < outer")

    def contains(self, z: np.ndarray) -> np.ndarray:
        r = np.abs(z)
        return (r >= self.inner) & (r <= self.outer)

    @property
    def contains_origin(self) -> bool:
        return self.inner == 0


@dataclass(frozen=True)
class Ball:
    """Open ball |z - center| < radius."""

    center: complex
    radius: float

    def contains(self, z: np.ndarray) -> np.ndarray:
        return np.abs(z - self.center) < self.radius

    @property
    def contains_origin(self) -> bool:
        return abs(self.center) < self.radius


def edge_midpoints(dom: GridDomain) -> np.ndarray:
    """Plane coordinates z_e of every edge of the domain."""
    keys = dom.edges()
    return (keys[:, 0] + 1j * keys[:, 1]) / (2.0 * dom.scale)


def riemann_sum(fn: Callable[[np.ndarray], np.ndarray], dom: GridDomain,
                region: Union[Annulus, Ball]) -> float:
    """
    (1 / 2n^2) * sum of fn(z_e) over edges with midpoint in the region.

    Each edge owns a diamond of area 1/(2n^2). When the region contains the
    origin the four edges at the origin are excluded; their cell's mass is
    bounded by ``origin_cell_mass_bound``.

    Args:
        fn: Vectorized function of complex midpoints
        dom: Grid domain at scale n
        region: Annulus or ball in plane units

    Returns:
        The Riemann sum
    """
    z = edge_midpoints(dom)
    z = z[region.contains(z)]
    if region.contains_origin:
        z = z[np.abs(z) * dom.scale > 0.5 + 1e-9]
    if len(z) == 0:
        return 0.0
    values = np.asarray(fn(z), dtype=float)
    return math.fsum(values.tolist()) / (2.0 * dom.scale ** 2)


def origin_cell_mass_bound(n: int, params: SleParams) -> float:
    """Integral of |z|^(d-2) over the disk of radius 1/n: 2 pi n^-d / d."""
    d = params.dimension
    return 2 * math.pi * (1.0 / n) ** d / d


def radial_integral(inner: float, outer: float, params: SleParams) -> float:
    """Integral of |z|^(d-2) over the annulus inner <= |z| <= outer."""
    d = params.dimension
    return 2 * math.pi * (outer ** d - inner ** d) / d

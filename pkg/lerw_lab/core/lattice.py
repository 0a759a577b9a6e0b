"""
Lattice geometry - Points, edges, balls, boundaries and grid domains.

All lattice logic works with exact integer coordinates. A ``GridDomain`` stores
its vertex set as a boolean mask indexed by ``[x + ox, y + oy]`` with at least
one cell of margin, so every boundary point is addressable; plane coordinates
are obtained by dividing by the scale only when a curve is embedded.
"""

import logging
from collections import deque
from dataclasses import dataclass, field
from functools import cached_property, lru_cache
from typing import FrozenSet, Iterable, List, Literal, NamedTuple, Optional, Set, Tuple

import numpy as np
from pydantic import BaseModel, model_validator
from scipy import ndimage

from .errors import DomainTooFine

logger = logging.getLogger(__name__)

NEIGHBOR_STEPS = ((1, 0), (-1, 0), (0, 1), (0, -1))


class LatticePoint(NamedTuple):
    """A point of Z^2."""
    x: int
    y: int

    def neighbors(self) -> List["LatticePoint"]:
        """The four nearest neighbours."""
        return [LatticePoint(self.x + dx, self.y + dy) for dx, dy in NEIGHBOR_STEPS]


@dataclass(frozen=True, order=True)
class Edge:
    """An undirected nearest-neighbour edge; endpoints stored in sorted order."""
    a: LatticePoint
    b: LatticePoint

    def __post_init__(self):
        if abs(self.a.x - self.b.x) + abs(self.a.y - self.b.y) != 1:
            raise ValueError(f"Edge endpoints are not adjacent: {self.a}, {self.b}")
        if self.b < self.a:
            a, b = self.b, self.a
            object.__setattr__(self, 'a', a)
            object.__setattr__(self, 'b', b)

    @classmethod
    def of(cls, p: Tuple[int, int], q: Tuple[int, int]) -> "Edge":
        return cls(LatticePoint(*p), LatticePoint(*q))

    @property
    def key(self) -> Tuple[int, int]:
        """Twice the midpoint; an exact integer identifier of the edge."""
        return (self.a.x + self.b.x, self.a.y + self.b.y)

    @property
    def midpoint(self) -> Tuple[float, float]:
        """Midpoint in lattice units (halves are exact in binary floating point)."""
        return ((self.a.x + self.b.x) / 2, (self.a.y + self.b.y) / 2)


class DomainSpec(BaseModel):
    """
    A continuum domain from the catalogue: disk, axis-aligned square or polygon.

    Coordinates are plane units. The domain must be bounded and contain the
    origin in its interior.
    """

    kind: Literal['disk', 'square', 'polygon']
    radius: Optional[float] = None
    side: Optional[float] = None
    center: Tuple[float, float] = (0.0, 0.0)
    vertices: Optional[List[Tuple[float, float]]] = None

    @model_validator(mode='after')
    def _check_shape(self) -> "DomainSpec":
        cx, cy = self.center
        if self.kind == 'disk':
            if self.radius is None or self.radius <= 0:
                raise ValueError("disk needs a positive radius")
            if np.hypot(cx, cy) >= self.radius:
                raise ValueError("disk must contain the origin")
        elif self.kind == 'square':
            if self.side is None or self.side <= 0:
                raise ValueError("square needs a positive side")
            if abs(cx) >= self.side / 2 or abs(cy) >= self.side / 2:
                raise ValueError("square must contain the origin")
        else:
            if not self.vertices or len(self.vertices) < 3:
                raise ValueError("polygon needs at least three vertices")
            poly = np.asarray(self.vertices, dtype=float)
            origin = np.zeros((1, 2))
            if _on_polygon_boundary(origin, poly, 0.0)[0] or not _inside_polygon(origin, poly)[0]:
                raise ValueError("polygon must contain the origin in its interior")
        return self

    def polygon(self) -> np.ndarray:
        """Vertex array (k, 2) for square and polygon kinds."""
        if self.kind == 'square':
            h = self.side / 2
            cx, cy = self.center
            return np.array([[cx - h, cy - h], [cx + h, cy - h],
                             [cx + h, cy + h], [cx - h, cy + h]])
        if self.kind == 'polygon':
            return np.asarray(self.vertices, dtype=float)
        raise ValueError("disk has no polygon representation")

    def bounding_box(self) -> Tuple[float, float, float, float]:
        """(xmin, xmax, ymin, ymax) in plane units."""
        if self.kind == 'disk':
            cx, cy = self.center
            r = self.radius
            return cx - r, cx + r, cy - r, cy + r
        poly = self.polygon()
        return poly[:, 0].min(), poly[:, 0].max(), poly[:, 1].min(), poly[:, 1].max()


@dataclass(frozen=True, eq=False)
class GridDomain:
    """
    A finite connected set of lattice vertices at scale n (spacing 1/n).

    ``interior[x + ox, y + oy]`` is True exactly on the vertex set; the mask
    has a margin of at least one cell on every side.
    """

    scale: int
    interior: np.ndarray
    offset: Tuple[int, int]
    origin_inside: bool = field(default=True)

    def __post_init__(self):
        if self.scale < 1:
            raise ValueError("scale must be a positive integer")
        mask = np.asarray(self.interior, dtype=bool)
        if mask[0, :].any() or mask[-1, :].any() or mask[:, 0].any() or mask[:, -1].any():
            raise ValueError("interior mask needs a one-cell margin")
        mask = mask.copy()
        mask.flags.writeable = False
        object.__setattr__(self, 'interior', mask)
        ox, oy = self.offset
        inside = 0 <= ox < mask.shape[0] and 0 <= oy < mask.shape[1] and bool(mask[ox, oy])
        object.__setattr__(self, 'origin_inside', inside)

    @classmethod
    def from_vertices(cls, vertices: Iterable[Tuple[int, int]], scale: int = 1) -> "GridDomain":
        """
        Build a domain from an explicit vertex set.

        Args:
            vertices: Lattice points (integer units of the 1/scale grid)
            scale: Lattice scale n

        Returns:
            The grid domain

        Raises:
            ValueError: If the set is empty or not nearest-neighbour connected
        """
        pts = np.array(sorted(set((int(x), int(y)) for x, y in vertices)), dtype=np.int64)
        if pts.size == 0:
            raise ValueError("a grid domain needs at least one vertex")
        xmin, ymin = pts.min(axis=0)
        xmax, ymax = pts.max(axis=0)
        ox, oy = -xmin + 1, -ymin + 1
        mask = np.zeros((xmax - xmin + 3, ymax - ymin + 3), dtype=bool)
        mask[pts[:, 0] + ox, pts[:, 1] + oy] = True
        _, count = ndimage.label(mask)
        if count != 1:
            raise ValueError("vertex set is not nearest-neighbour connected")
        return cls(scale=scale, interior=mask, offset=(int(ox), int(oy)))

    @cached_property
    def vertices(self) -> FrozenSet[LatticePoint]:
        xs, ys = np.nonzero(self.interior)
        ox, oy = self.offset
        return frozenset(LatticePoint(int(x - ox), int(y - oy)) for x, y in zip(xs, ys))

    @cached_property
    def boundary_mask(self) -> np.ndarray:
        """Mask of the boundary set: non-vertices adjacent to a vertex."""
        m = self.interior
        grown = np.zeros_like(m)
        grown[1:, :] |= m[:-1, :]
        grown[:-1, :] |= m[1:, :]
        grown[:, 1:] |= m[:, :-1]
        grown[:, :-1] |= m[:, 1:]
        out = grown & ~m
        out.flags.writeable = False
        return out

    @cached_property
    def boundary(self) -> FrozenSet[LatticePoint]:
        xs, ys = np.nonzero(self.boundary_mask)
        ox, oy = self.offset
        return frozenset(LatticePoint(int(x - ox), int(y - oy)) for x, y in zip(xs, ys))

    def contains(self, point: Tuple[int, int]) -> bool:
        """True when the lattice point is a vertex."""
        i, j = point[0] + self.offset[0], point[1] + self.offset[1]
        if 0 <= i < self.interior.shape[0] and 0 <= j < self.interior.shape[1]:
            return bool(self.interior[i, j])
        return False

    def on_boundary(self, point: Tuple[int, int]) -> bool:
        i, j = point[0] + self.offset[0], point[1] + self.offset[1]
        if 0 <= i < self.interior.shape[0] and 0 <= j < self.interior.shape[1]:
            return bool(self.boundary_mask[i, j])
        return False

    def remove(self, points: Iterable[Tuple[int, int]]) -> "GridDomain":
        """
        Slit domain: drop the given points and keep the origin's component.

        Args:
            points: Lattice points to remove (points outside the domain are ignored)

        Returns:
            A new domain on the same index grid

        Raises:
            ValueError: If the origin itself is removed
        """
        mask = self.interior.copy()
        ox, oy = self.offset
        for x, y in points:
            i, j = x + ox, y + oy
            if 0 <= i < mask.shape[0] and 0 <= j < mask.shape[1]:
                mask[i, j] = False
        if not mask[ox, oy]:
            raise ValueError("cannot remove the origin from a grid domain")
        labels, _ = ndimage.label(mask)
        mask = labels == labels[ox, oy]
        return GridDomain(scale=self.scale, interior=mask, offset=self.offset)

    def edges(self) -> np.ndarray:
        """
        Undirected edges with at least one endpoint in the vertex set.

        Returns:
            Integer array (k, 2) of edge keys (twice the midpoint, lattice units)
        """
        m = self.interior
        ox, oy = self.offset
        keys = []
        # horizontal edges (x, y)-(x+1, y)
        h = m[:-1, :] | m[1:, :]
        xs, ys = np.nonzero(h)
        keys.append(np.stack([2 * (xs - ox) + 1, 2 * (ys - oy)], axis=1))
        v = m[:, :-1] | m[:, 1:]
        xs, ys = np.nonzero(v)
        keys.append(np.stack([2 * (xs - ox), 2 * (ys - oy) + 1], axis=1))
        return np.concatenate(keys, axis=0).astype(np.int64)

    def __len__(self) -> int:
        return int(self.interior.sum())


def ball(n: int) -> Set[LatticePoint]:
    """B_n = {x in Z^2 : |x| <= n}."""
    if n < 0:
        raise ValueError("ball radius must be nonnegative")
    r = np.arange(-n, n + 1)
    xs, ys = np.meshgrid(r, r, indexing='ij')
    keep = xs * xs + ys * ys <= n * n
    return {LatticePoint(int(x), int(y)) for x, y in zip(xs[keep], ys[keep])}


def boundary(points: Iterable[Tuple[int, int]]) -> Set[LatticePoint]:
    """Outer boundary: points not in A adjacent to some point of A."""
    pts = {LatticePoint(*p) for p in points}
    out: Set[LatticePoint] = set()
    for p in pts:
        for q in p.neighbors():
            if q not in pts:
                out.add(q)
    return out


@lru_cache(maxsize=32)
def open_ball_domain(n: int) -> GridDomain:
    """
    The walk region for exiting radius n: vertices {x : |x| < n}.

    A walk started at the origin stopped on leaving this set stops exactly at
    tau_n = min{j : |S(j)| >= n}.
    """
    if n < 1:
        raise ValueError("radius must be at least 1")
    r = np.arange(-(n + 1), n + 2)
    xs, ys = np.meshgrid(r, r, indexing='ij')
    mask = xs * xs + ys * ys < n * n
    return GridDomain(scale=n, interior=mask, offset=(n + 1, n + 1))


def grid_approximation(spec: DomainSpec, n: int, tolerance: float = 1e-9) -> GridDomain:
    """
    Lattice approximation D^n of a continuum domain.

    A closed face of the 1/n grid is removed when it contains points strictly
    outside the closed domain; faces touching the boundary only along their own
    boundary are kept. The result is the union of retained faces edge-connected
    to the faces around the origin.

    Args:
        spec: Continuum domain
        n: Lattice scale
        tolerance: Spatial tolerance in plane units

    Returns:
        The grid domain (vertex coordinates are integers at scale n)

    Raises:
        DomainTooFine: If every face around the origin meets the boundary
    """
    if n < 1:
        raise ValueError("scale must be a positive integer")
    xmin, xmax, ymin, ymax = spec.bounding_box()
    i0, i1 = int(np.floor(xmin * n)) - 1, int(np.ceil(xmax * n)) + 1
    j0, j1 = int(np.floor(ymin * n)) - 1, int(np.ceil(ymax * n)) + 1
    i0, j0 = min(i0, -1), min(j0, -1)
    i1, j1 = max(i1, 1), max(j1, 1)

    # faces indexed by lower-left corner (i, j), i in [i0, i1), j in [j0, j1)
    fi, fj = np.meshgrid(np.arange(i0, i1), np.arange(j0, j1), indexing='ij')
    tol = tolerance * n
    if spec.kind == 'disk':
        cx, cy = spec.center[0] * n, spec.center[1] * n
        r = spec.radius * n
        far = np.zeros(fi.shape)
        for dx in (0, 1):
            for dy in (0, 1):
                far = np.maximum(far, np.hypot(fi + dx - cx, fj + dy - cy))
        inside = far <= r + tol
    else:
        poly = spec.polygon() * n
        inside = _faces_inside_polygon(fi, fj, poly, tol)

    seeds = [(-1 - i0, -1 - j0), (-i0, -1 - j0), (-1 - i0, -j0), (-i0, -j0)]
    labels, _ = ndimage.label(inside)
    seed_labels = {labels[s] for s in seeds if inside[s]}
    if not seed_labels:
        raise DomainTooFine(f"no face around the origin avoids the boundary at n={n}")
    faces = np.isin(labels, list(seed_labels))

    # vertices: corners of retained faces; mask gets one extra cell of margin
    nx, ny = faces.shape
    mask = np.zeros((nx + 3, ny + 3), dtype=bool)
    for dx in (0, 1):
        for dy in (0, 1):
            mask[1 + dx:1 + dx + nx, 1 + dy:1 + dy + ny] |= faces
    offset = (1 - i0, 1 - j0)
    logger.debug(f"grid approximation {spec.kind} at n={n}: {int(mask.sum())} vertices")
    return GridDomain(scale=n, interior=mask, offset=offset)


def _inside_polygon(points: np.ndarray, poly: np.ndarray) -> np.ndarray:
    """Even-odd ray casting; boundary points may go either way."""
    x, y = points[:, 0], points[:, 1]
    inside = np.zeros(len(points), dtype=bool)
    k = len(poly)
    for a in range(k):
        x1, y1 = poly[a]
        x2, y2 = poly[(a + 1) % k]
        crosses = (y1 > y) != (y2 > y)
        with np.errstate(divide='ignore', invalid='ignore'):
            xcross = x1 + (y - y1) * (x2 - x1) / (y2 - y1)
        inside ^= crosses & (x < xcross)
    return inside


def _on_polygon_boundary(points: np.ndarray, poly: np.ndarray, tol: float) -> np.ndarray:
    on = np.zeros(len(points), dtype=bool)
    k = len(poly)
    for a in range(k):
        p, q = poly[a], poly[(a + 1) % k]
        d = q - p
        length2 = float(d @ d)
        rel = points - p
        s = np.clip((rel @ d) / length2, 0.0, 1.0)
        dist = np.hypot(rel[:, 0] - s * d[0], rel[:, 1] - s * d[1])
        on |= dist <= tol
    return on


def _faces_inside_polygon(fi: np.ndarray, fj: np.ndarray, poly: np.ndarray,
                          tol: float) -> np.ndarray:
    shape = fi.shape
    lo_x, lo_y = fi.ravel().astype(float), fj.ravel().astype(float)
    ok = np.ones(lo_x.shape, dtype=bool)

    # every corner inside or on the closed polygon
    for dx in (0, 1):
        for dy in (0, 1):
            corners = np.stack([lo_x + dx, lo_y + dy], axis=1)
            ok &= _inside_polygon(corners, poly) | _on_polygon_boundary(corners, poly, tol)

    # no polygon vertex strictly inside a face
    for vx, vy in poly:
        ok &= ~((vx > lo_x + tol) & (vx < lo_x + 1 - tol) & (vy > lo_y + tol) & (vy < lo_y + 1 - tol))

    # no polygon edge through the open face (Liang-Barsky clip, then midpoint test)
    k = len(poly)
    for a in range(k):
        px, py = poly[a]
        qx, qy = poly[(a + 1) % k]
        dx, dy = qx - px, qy - py
        t0 = np.zeros_like(lo_x)
        t1 = np.ones_like(lo_x)
        valid = np.ones(lo_x.shape, dtype=bool)
        for p_k, q_k in ((-dx, px - lo_x), (dx, lo_x + 1 - px),
                         (-dy, py - lo_y), (dy, lo_y + 1 - py)):
            if p_k == 0:
                valid &= q_k >= 0
                continue
            r = q_k / p_k
            if p_k < 0:
                t0 = np.maximum(t0, r)
            else:
                t1 = np.minimum(t1, r)
        valid &= t1 > t0
        tm = (t0 + t1) / 2
        mx, my = px + tm * dx, py + tm * dy
        strictly = (mx > lo_x + tol) & (mx < lo_x + 1 - tol) & (my > lo_y + tol) & (my < lo_y + 1 - tol)
        ok &= ~(valid & strictly)
    return ok.reshape(shape)

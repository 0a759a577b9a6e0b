"""
Curves - Time-parametrized planar polylines, their metrics, and the maps T and S.

Planar points are complex numbers. A ``Curve`` interpolates linearly between
vertices and sits at its final vertex after its lifetime. Times are
nondecreasing; a repeated time marks a jump, and evaluation is right-continuous
there (only ``map_S`` produces jumps, where the occupation measure leaves an arc
of the trace without mass).
"""

import json
import logging
import math
from dataclasses import dataclass
from typing import Any, Dict, List, Optional, Tuple, Union

import numpy as np
from numba import njit
from scipy.spatial.distance import directed_hausdorff

from .errors import SupportMismatch
from .measure import OccupationMeasure, TestFamily, levy_prokhorov

logger = logging.getLogger(__name__)

_PROJECTION_CELLS = 2_000_000


@dataclass(frozen=True, eq=False)
class Curve:
    """Piecewise-linear curve gamma: [0, t_gamma] -> C."""

    vertices: np.ndarray
    times: np.ndarray

    def __post_init__(self):
        v = np.asarray(self.vertices, dtype=complex).ravel()
        t = np.asarray(self.times, dtype=float).ravel()
        if len(v) == 0 or len(v) != len(t):
            raise ValueError("a curve needs matching, nonempty vertex and time arrays")
        if t[0] != 0.0:
            raise ValueError("curve times must start at 0")
        if np.any(np.diff(t) < 0) or not np.all(np.isfinite(t)):
            raise ValueError("curve times must be finite and nondecreasing")
        for name, arr in (('vertices', v), ('times', t)):
            arr.flags.writeable = False
            object.__setattr__(self, name, arr)

    @classmethod
    def from_points(cls, points, times=None, speed: float = 1.0) -> "Curve":
        """Build a curve; without explicit times vertices are 1/speed apart in time."""
        pts = np.asarray(points)
        if pts.ndim == 2 and pts.shape[1] == 2 and not np.iscomplexobj(pts):
            pts = pts[:, 0] + 1j * pts[:, 1]
        if times is None:
            times = np.arange(len(pts)) / speed
        return cls(pts, times)

    @property
    def lifetime(self) -> float:
        return float(self.times[-1])

    def _evaluate(self, t, side: str) -> np.ndarray:
        t = np.clip(np.asarray(t, dtype=float), 0.0, self.lifetime)
        if len(self.vertices) == 1:
            return np.full(t.shape, self.vertices[0], dtype=complex)
        idx = np.searchsorted(self.times, t, side=side) - 1
        idx = np.clip(idx, 0, len(self.times) - 2)
        t0, t1 = self.times[idx], self.times[idx + 1]
        span = t1 - t0
        with np.errstate(divide='ignore', invalid='ignore'):
            frac = np.where(span > 0, (t - t0) / span, 1.0)
        frac = np.clip(frac, 0.0, 1.0)
        return self.vertices[idx] + frac * (self.vertices[idx + 1] - self.vertices[idx])

    def __call__(self, t) -> Union[complex, np.ndarray]:
        out = self._evaluate(t, 'right')
        return complex(out) if out.ndim == 0 else out

    def left_limit(self, t) -> Union[complex, np.ndarray]:
        out = self._evaluate(t, 'left')
        return complex(out) if out.ndim == 0 else out

    def segment_lengths(self) -> np.ndarray:
        return np.abs(np.diff(self.vertices))

    def arclength(self) -> float:
        return float(self.segment_lengths().sum())

    def to_json(self) -> Dict[str, Any]:
        return {
            'vertices': [[float(z.real), float(z.imag)] for z in self.vertices],
            'times': [float(t) for t in self.times],
        }

    @classmethod
    def from_json(cls, data: Union[str, Dict[str, Any]]) -> "Curve":
        if isinstance(data, str):
            data = json.loads(data)
        return cls.from_points(np.asarray(data['vertices'], dtype=float), data['times'])


@dataclass(frozen=True)
class SpeedFunction:
    """Linear time change sigma_n(t) = c_n t."""

    c: float

    def __post_init__(self):
        if not self.c > 0:
            raise ValueError("speed must be positive")

    @classmethod
    def ideal(cls, n: int) -> "SpeedFunction":
        """c_n = n^(5/4)."""
        return cls(float(n) ** 1.25)

    def __call__(self, t: float) -> float:
        return self.c * t


@dataclass(frozen=True, eq=False)
class CurveClass:
    """A curve modulo reparametrization, normalized to arclength speed on [0, 1]."""

    representative: Curve

    @classmethod
    def of(cls, curve: Curve) -> "CurveClass":
        v = curve.vertices
        keep = np.concatenate([[True], np.abs(np.diff(v)) > 0])
        v = v[keep]
        if len(v) == 1:
            return cls(Curve(np.array([v[0], v[0]]), np.array([0.0, 1.0])))
        cum = np.concatenate([[0.0], np.cumsum(np.abs(np.diff(v)))])
        times = cum / cum[-1]
        times[-1] = 1.0
        return cls(Curve(v, times))

    @property
    def trace(self) -> np.ndarray:
        return self.representative.vertices

    @property
    def length(self) -> float:
        return self.representative.arclength()

    def same_as(self, other: "CurveClass", tolerance: float = 1e-9) -> bool:
        a, b = self.trace, other.trace
        return len(a) == len(b) and bool(np.all(np.abs(a - b) <= tolerance))


def embed_lerw(sample, n: int, speed: SpeedFunction) -> Curve:
    """
    Y_n(t) = X(c_n t) / n with unit-speed interpolation between steps.

    Args:
        sample: LerwSample
        n: Lattice scale
        speed: Linear speed c_n

    Returns:
        Curve with lifetime M_n / c_n
    """
    pts = sample.path.points
    z = (pts[:, 0] + 1j * pts[:, 1]) / n
    return Curve(z, np.arange(len(z)) / speed.c)


def dist_sup(g1: Curve, g2: Curve) -> float:
    """d(g1, g2) = |t1 - t2| + sup_t |g1(t) - g2(t)|, exact for polylines."""
    horizon = max(g1.lifetime, g2.lifetime)
    breaks = np.unique(np.concatenate([g1.times, g2.times, [horizon]]))
    right = np.abs(g1._evaluate(breaks, 'right') - g2._evaluate(breaks, 'right'))
    left = np.abs(g1._evaluate(breaks, 'left') - g2._evaluate(breaks, 'left'))
    return abs(g1.lifetime - g2.lifetime) + float(max(right.max(), left.max()))


@njit(cache=True)
def _frechet(p, q):
    """Discrete Frechet distance of two complex vertex sequences, O(len(q)) memory."""
    n_p = p.shape[0]
    n_q = q.shape[0]
    prev = np.empty(n_q)
    cur = np.empty(n_q)
    for i in range(n_p):
        for j in range(n_q):
            d = abs(p[i] - q[j])
            if i == 0 and j == 0:
                cur[j] = d
            elif i == 0:
                cur[j] = max(cur[j - 1], d)
            elif j == 0:
                cur[j] = max(prev[0], d)
            else:
                cur[j] = max(min(prev[j], prev[j - 1], cur[j - 1]), d)
        for j in range(n_q):
            prev[j] = cur[j]
    return prev[n_q - 1]


def _common_refinement(g1: Curve, g2: Curve) -> Tuple[np.ndarray, np.ndarray]:
    horizon = max(g1.lifetime, g2.lifetime)
    grid = np.unique(np.concatenate([g1.times, g2.times, [horizon]]))
    a = np.concatenate([g1._evaluate(grid, 'left'), g1._evaluate(grid, 'right')])
    b = np.concatenate([g2._evaluate(grid, 'left'), g2._evaluate(grid, 'right')])
    order = np.argsort(np.concatenate([np.arange(len(grid)), np.arange(len(grid))]), kind='stable')
    return a[order], b[order]


def dist_rho_with_error(g1: Curve, g2: Curve, refine: bool = False) -> Tuple[float, float]:
    """
    Monotone-coupling approximation of rho and its one-sided error bound.

    With ``refine`` both curves are sampled at the union of their time grids
    first, so the value never exceeds the sup term of ``dist_sup``.

    Returns:
        (value, error_bound) where error_bound is the longest segment of either curve
    """
    if refine:
        p, q = _common_refinement(g1, g2)
    else:
        p, q = g1.vertices, g2.vertices
    value = float(_frechet(np.ascontiguousarray(p), np.ascontiguousarray(q)))
    seg = [s.max() for s in (g1.segment_lengths(), g2.segment_lengths()) if len(s)]
    return value, float(max(seg)) if seg else 0.0


def dist_rho(g1: Curve, g2: Curve, refine: bool = False) -> float:
    return dist_rho_with_error(g1, g2, refine)[0]


def distance_to_point(vertices: np.ndarray, z: complex) -> float:
    """Distance from z to the polyline through the given complex vertices."""
    v = np.asarray(vertices, dtype=complex)
    if len(v) == 1:
        return float(abs(v[0] - z))
    a = v[:-1]
    d = np.diff(v)
    len2 = np.abs(d) ** 2
    rel = z - a
    with np.errstate(divide='ignore', invalid='ignore'):
        s = np.where(len2 > 0, (rel.real * d.real + rel.imag * d.imag) / len2, 0.0)
    s = np.clip(s, 0.0, 1.0)
    return float(np.abs(rel - s * d).min())


def hausdorff(a: Union[Curve, np.ndarray], b: Union[Curve, np.ndarray]) -> float:
    """Hausdorff distance between vertex sets."""
    pa = a.vertices if isinstance(a, Curve) else np.asarray(a, dtype=complex).ravel()
    pb = b.vertices if isinstance(b, Curve) else np.asarray(b, dtype=complex).ravel()
    u = np.stack([pa.real, pa.imag], axis=1)
    v = np.stack([pb.real, pb.imag], axis=1)
    return max(directed_hausdorff(u, v)[0], directed_hausdorff(v, u)[0])


@njit(cache=True)
def _crossings(x, y, limit):
    out = np.empty((limit, 2), dtype=np.int64)
    count = 0
    k = x.shape[0] - 1
    for i in range(k):
        ax0, ax1 = min(x[i], x[i + 1]), max(x[i], x[i + 1])
        ay0, ay1 = min(y[i], y[i + 1]), max(y[i], y[i + 1])
        for j in range(i + 2, k):
            if max(x[j], x[j + 1]) < ax0 or min(x[j], x[j + 1]) > ax1:
                continue
            if max(y[j], y[j + 1]) < ay0 or min(y[j], y[j + 1]) > ay1:
                continue
            d1 = (x[i + 1] - x[i]) * (y[j] - y[i]) - (y[i + 1] - y[i]) * (x[j] - x[i])
            d2 = (x[i + 1] - x[i]) * (y[j + 1] - y[i]) - (y[i + 1] - y[i]) * (x[j + 1] - x[i])
            d3 = (x[j + 1] - x[j]) * (y[i] - y[j]) - (y[j + 1] - y[j]) * (x[i] - x[j])
            d4 = (x[j + 1] - x[j]) * (y[i + 1] - y[j]) - (y[j + 1] - y[j]) * (x[i + 1] - x[j])
            if d1 * d2 < 0 and d3 * d4 < 0:
                if count < limit:
                    out[count, 0] = i
                    out[count, 1] = j
                count += 1
    return out[:min(count, limit)], count


def self_intersections(curve: Curve, resolution: float = 1e-3, limit: int = 1000) -> List[Tuple[int, int]]:
    """
    Proper crossings between non-adjacent segments.

    Vertices closer than ``resolution`` to the previously kept vertex are
    dropped first, so numerical jitter below that scale is ignored. Indices
    refer to the thinned vertex sequence.
    """
    v = curve.vertices
    keep = [0]
    for i in range(1, len(v)):
        if abs(v[i] - v[keep[-1]]) >= resolution:
            keep.append(i)
    thin = v[keep]
    if len(thin) < 4:
        return []
    pairs, _ = _crossings(np.ascontiguousarray(thin.real), np.ascontiguousarray(thin.imag), limit)
    return [(int(i), int(j)) for i, j in pairs]


def map_T(g: Curve, resolution: float) -> Tuple[CurveClass, OccupationMeasure]:
    """
    T(gamma) = (class of gamma, occupation measure of gamma).

    Each segment's duration is spread over pieces no longer than ``resolution``;
    a segment along which the curve does not move becomes a point atom.
    """
    if resolution <= 0:
        raise ValueError("resolution must be positive")
    starts: List[np.ndarray] = []
    ends: List[np.ndarray] = []
    masses: List[np.ndarray] = []
    v, t = g.vertices, g.times
    for i in range(len(v) - 1):
        duration = t[i + 1] - t[i]
        if duration <= 0:
            continue
        length = abs(v[i + 1] - v[i])
        pieces = max(1, int(math.ceil(length / resolution))) if length > 0 else 1
        s = np.linspace(0.0, 1.0, pieces + 1)
        pts = v[i] + s * (v[i + 1] - v[i])
        starts.append(pts[:-1])
        ends.append(pts[1:])
        masses.append(np.full(pieces, duration / pieces))
    if not masses:
        return CurveClass.of(g), OccupationMeasure.empty()
    measure = OccupationMeasure(np.concatenate(starts), np.concatenate(ends), np.concatenate(masses))
    return CurveClass.of(g), measure


def _resample(cls: CurveClass, step: float) -> np.ndarray:
    """Trace points at most ``step`` apart in arclength, every vertex included."""
    rep = cls.representative
    count = max(2, int(math.ceil(cls.length / step)) + 1)
    s = np.unique(np.concatenate([np.linspace(0.0, 1.0, count), rep.times]))
    return np.ascontiguousarray(rep(s))


def dist_product(a: Tuple[CurveClass, OccupationMeasure], b: Tuple[CurveClass, OccupationMeasure],
                 resolution: float = 0.01, family: Optional[TestFamily] = None) -> float:
    """
    Product distance rho(class_a, class_b) + d_LP(mu_a, mu_b) between two images of map_T.

    rho is the discrete Frechet distance of the traces resampled every
    ``resolution`` in arclength, which overestimates rho by at most
    ``resolution``; d_LP is the certified lower bound of ``levy_prokhorov``.
    """
    if resolution <= 0:
        raise ValueError("resolution must be positive")
    (cls_a, mu_a), (cls_b, mu_b) = a, b
    rho = float(_frechet(_resample(cls_a, resolution), _resample(cls_b, resolution)))
    return rho + levy_prokhorov(mu_a, mu_b, family)


def _project(points: np.ndarray, trace: np.ndarray, cum: np.ndarray) -> Tuple[np.ndarray, np.ndarray]:
    """Arclength position of the nearest trace point, and the distance to it."""
    a = trace[:-1]
    d = np.diff(trace)
    len2 = np.abs(d) ** 2
    pos = np.empty(len(points))
    gap = np.empty(len(points))
    batch = max(1, _PROJECTION_CELLS // max(1, len(a)))
    for start in range(0, len(points), batch):
        chunk = points[start:start + batch]
        rel = chunk[:, None] - a[None, :]
        with np.errstate(divide='ignore', invalid='ignore'):
            s = np.where(len2 > 0, (rel.real * d.real + rel.imag * d.imag) / len2, 0.0)
        s = np.clip(s, 0.0, 1.0)
        dist = np.abs(rel - s * d)
        best = np.argmin(dist, axis=1)
        rows = np.arange(len(chunk))
        pos[start:start + batch] = cum[best] + s[rows, best] * np.abs(d[best])
        gap[start:start + batch] = dist[rows, best]
    return pos, gap


def map_S(cls: CurveClass, mu: OccupationMeasure, tolerance: float = 1e-6) -> Curve:
    """
    S(class, mu): the curve along the class trace whose occupation measure is mu.

    Theta(s) = mu(eta[0, s]) is built cumulatively along the arclength s of the
    representative; the curve is eta composed with the right-continuous inverse
    of Theta. Point atoms make the curve pause; arcs without mass are crossed
    in zero time.

    Raises:
        SupportMismatch: If an atom lies farther than tolerance from the trace
        ValueError: If mu has no mass
    """
    if mu.total_mass <= 0:
        raise ValueError("map_S needs a measure with positive mass")
    trace = cls.trace
    seg = np.abs(np.diff(trace))
    cum = np.concatenate([[0.0], np.cumsum(seg)])
    total_len = float(cum[-1])

    pos_a, dist_a = _project(mu.starts, trace, cum)
    pos_b, dist_b = _project(mu.ends, trace, cum)
    worst = float(max(dist_a.max(), dist_b.max()))
    if worst > tolerance:
        raise SupportMismatch(f"measure atom lies {worst:.3g} from the trace (tolerance {tolerance:g})")
    lo = np.minimum(pos_a, pos_b)
    hi = np.maximum(pos_a, pos_b)
    point = hi - lo <= tolerance

    breaks = np.unique(np.concatenate([cum, lo, hi]))

    # Theta is piecewise linear: slope changes at ramp ends, jumps at point atoms
    ramp = ~point
    rate = mu.masses[ramp] / (hi[ramp] - lo[ramp])
    dslope = np.zeros(len(breaks))
    np.add.at(dslope, np.searchsorted(breaks, lo[ramp]), rate)
    np.add.at(dslope, np.searchsorted(breaks, hi[ramp]), -rate)
    jump = np.zeros(len(breaks))
    np.add.at(jump, np.searchsorted(breaks, lo[point]), mu.masses[point])
    slope = np.maximum(np.cumsum(dslope), 0.0)
    widths = np.append(np.diff(breaks), 0.0)
    left_vals = np.concatenate([[0.0], np.cumsum(jump + slope * widths)[:-1]])
    right_vals = left_vals + jump
    times: List[float] = []
    positions: List[float] = []
    for s, tl, tr in zip(breaks, left_vals, right_vals):
        times.append(tl)
        positions.append(s)
        if tr > tl:
            times.append(tr)
            positions.append(s)
    # the inverse is right-continuous: past the last mass the curve sits at the trace end
    times.append(times[-1])
    positions.append(total_len)

    times_arr = np.maximum.accumulate(np.array(times))
    times_arr[0] = 0.0
    pos_arr = np.array(positions)
    keep = np.ones(len(times_arr), dtype=bool)
    keep[1:] = (np.diff(times_arr) > 0) | (np.diff(pos_arr) > 0)
    times_arr, pos_arr = times_arr[keep], pos_arr[keep]
    # the right-continuous inverse skips any massless initial arc at time 0
    first_mass = np.searchsorted(times_arr, 0.0, side='right') - 1
    times_arr, pos_arr = times_arr[first_mass:], pos_arr[first_mass:]

    eta = cls.representative
    vertices = eta(pos_arr / total_len) if total_len > 0 else np.full(len(pos_arr), trace[0])
    return Curve(np.asarray(vertices, dtype=complex), times_arr)

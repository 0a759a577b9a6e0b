"""
Walk Sampler - Simple random walks, loop-erasure and LERW generation.

A walk is stored as a stream of direction codes (uint8) together with a
first-visit-time grid over the domain mask. The reversed loop-erasure of the
walk is read off that grid by backtracking from the exit point, so a replica
never materializes the walk as a list of points unless asked to.
"""

import logging
from dataclasses import dataclass
from typing import Any, Dict, List, Optional, Sequence, Tuple, Union

import numpy as np
from numba import njit

from .config import get_settings
from .errors import PreconditionViolation, StepCapExceeded
from .lattice import GridDomain, LatticePoint, open_ball_domain
from .rng import RngStream

logger = logging.getLogger(__name__)

# direction code -> (dx, dy)
STEP_X = np.array([1, -1, 0, 0], dtype=np.int64)
STEP_Y = np.array([0, 0, 1, -1], dtype=np.int64)

_FIRST_CHUNK = 4096
_MAX_CHUNK = 1 << 20


@dataclass(frozen=True, eq=False)
class LatticePath:
    """A finite nearest-neighbour path; ``points`` is an (m + 1, 2) int64 array."""

    points: np.ndarray

    def __post_init__(self):
        pts = np.asarray(self.points, dtype=np.int64).reshape(-1, 2)
        if len(pts) == 0:
            raise ValueError("a lattice path needs at least one point")
        if len(pts) > 1:
            jumps = np.abs(np.diff(pts, axis=0)).sum(axis=1)
            if not np.all(jumps == 1):
                raise ValueError("consecutive path points must be nearest neighbours")
        pts = pts.copy()
        pts.flags.writeable = False
        object.__setattr__(self, 'points', pts)

    @classmethod
    def from_points(cls, points: Sequence[Tuple[int, int]]) -> "LatticePath":
        return cls(np.array(list(points), dtype=np.int64))

    @property
    def length(self) -> int:
        """Number of steps m."""
        return len(self.points) - 1

    @property
    def start(self) -> LatticePoint:
        return LatticePoint(int(self.points[0, 0]), int(self.points[0, 1]))

    @property
    def end(self) -> LatticePoint:
        return LatticePoint(int(self.points[-1, 0]), int(self.points[-1, 1]))

    def reversed(self) -> "LatticePath":
        return LatticePath(self.points[::-1])

    def to_list(self) -> List[Tuple[int, int]]:
        return [(int(x), int(y)) for x, y in self.points]

    def is_self_avoiding(self) -> bool:
        return len(set(map(tuple, self.points.tolist()))) == len(self.points)

    def __len__(self) -> int:
        return len(self.points)

    def __eq__(self, other: object) -> bool:
        if not isinstance(other, LatticePath):
            return NotImplemented
        return self.points.shape == other.points.shape and bool(np.array_equal(self.points, other.points))

    def __hash__(self) -> int:
        return hash(self.points.tobytes())


@dataclass(frozen=True, eq=False)
class LerwSample:
    """
    One loop-erased walk X from the exit point to the origin.

    ``steps`` is M_n, ``srw_steps`` the exit time of the generating walk.
    """

    path: LatticePath
    steps: int
    srw_steps: int
    n: int
    seed: Optional[int] = None
    stream_index: Optional[int] = None
    walk: Optional[LatticePath] = None

    def __post_init__(self):
        if self.steps != self.path.length:
            raise ValueError("steps must equal the path length")

    def to_json(self) -> Dict[str, Any]:
        return {
            'n': self.n,
            'seed': self.seed,
            'stream_index': self.stream_index,
            'M_n': self.steps,
            'srw_steps': self.srw_steps,
            'points': self.path.to_list(),
        }

    @classmethod
    def from_json(cls, data: Dict[str, Any]) -> "LerwSample":
        path = LatticePath.from_points(data['points'])
        return cls(path=path, steps=path.length, srw_steps=int(data['srw_steps']), n=int(data['n']),
                   seed=data.get('seed'), stream_index=data.get('stream_index'))


@njit(cache=True)
def _advance(inside, dirs, first_visit, x, y, t, step_x, step_y):
    """Consume direction codes until the walk leaves ``inside``."""
    for k in range(dirs.shape[0]):
        d = dirs[k]
        x += step_x[d]
        y += step_y[d]
        t += 1
        if first_visit[x, y] < 0:
            first_visit[x, y] = t
        if not inside[x, y]:
            return x, y, t, True
    return x, y, t, False


@njit(cache=True)
def _backtrack(dirs, first_visit, x, y, tau, step_x, step_y):
    """Reversed loop-erasure: from the exit point back to the start (grid indices)."""
    out = np.empty((tau + 1, 2), dtype=np.int64)
    k = 0
    out[0, 0] = x
    out[0, 1] = y
    u = tau
    while u > 0:
        d = dirs[u - 1]
        x -= step_x[d]
        y -= step_y[d]
        k += 1
        out[k, 0] = x
        out[k, 1] = y
        u = first_visit[x, y]
    return out[:k + 1]


@dataclass
class _WalkRecord:
    dirs: np.ndarray
    first_visit: np.ndarray
    exit_index: Tuple[int, int]
    offset: Tuple[int, int]

    @property
    def tau(self) -> int:
        return len(self.dirs)


def _run_walk(dom: GridDomain, gen: np.random.Generator, step_cap: Optional[int] = None) -> _WalkRecord:
    if not dom.origin_inside:
        raise PreconditionViolation("walk domain must contain the origin")
    cap = step_cap if step_cap is not None else get_settings().step_cap
    ox, oy = dom.offset
    first_visit = np.full(dom.interior.shape, -1, dtype=np.int64)
    first_visit[ox, oy] = 0
    x, y, t = ox, oy, 0
    used: List[np.ndarray] = []
    chunk = _FIRST_CHUNK
    while True:
        dirs = gen.integers(0, 4, size=chunk, dtype=np.uint8)
        t_before = t
        x, y, t, exited = _advance(dom.interior, dirs, first_visit, x, y, t, STEP_X, STEP_Y)
        used.append(dirs[:t - t_before])
        if exited:
            break
        if t >= cap:
            raise StepCapExceeded(f"walk did not exit within {cap} steps")
        chunk = min(chunk * 2, _MAX_CHUNK)
    return _WalkRecord(np.concatenate(used), first_visit, (int(x), int(y)), (ox, oy))


def _walk_points(record: _WalkRecord) -> np.ndarray:
    steps = np.stack([STEP_X[record.dirs], STEP_Y[record.dirs]], axis=1)
    pts = np.zeros((record.tau + 1, 2), dtype=np.int64)
    np.cumsum(steps, axis=0, out=pts[1:])
    return pts


def _erased_points(record: _WalkRecord) -> np.ndarray:
    ox, oy = record.offset
    idx = _backtrack(record.dirs, record.first_visit, record.exit_index[0], record.exit_index[1],
                     record.tau, STEP_X, STEP_Y)
    return idx - np.array([ox, oy], dtype=np.int64)


def _as_generator(rng: Union[RngStream, np.random.Generator]) -> np.random.Generator:
    return rng.generator() if isinstance(rng, RngStream) else rng


def _domain_for(target: Union[int, GridDomain]) -> GridDomain:
    if isinstance(target, GridDomain):
        return target
    if int(target) < 1:
        raise PreconditionViolation("radius must be at least 1")
    return open_ball_domain(int(target))


def sample_srw_to_radius(n: int, rng: Union[RngStream, np.random.Generator]) -> LatticePath:
    """
    Simple random walk from the origin stopped at tau_n = min{j : |S(j)| >= n}.

    Args:
        n: Exit radius (n >= 1)
        rng: Random stream

    Returns:
        The walk S[0, tau_n]
    """
    return sample_srw_in_domain(_domain_for(n), rng)


def sample_srw_in_domain(dom: GridDomain, rng: Union[RngStream, np.random.Generator]) -> LatticePath:
    """Simple random walk from the origin stopped on first entry to the boundary set."""
    record = _run_walk(dom, _as_generator(rng))
    return LatticePath(_walk_points(record))


def loop_erase(path: LatticePath) -> LatticePath:
    """
    Chronological loop-erasure LE(S).

    Uses a last-visit index per point: s_0 = last[S(0)], s_{i+1} = last[S(s_i + 1)].
    """
    pts = [tuple(p) for p in path.points.tolist()]
    last: Dict[Tuple[int, int], int] = {}
    for i, p in enumerate(pts):
        last[p] = i
    out = []
    i = last[pts[0]]
    out.append(pts[i])
    while i < len(pts) - 1:
        i = last[pts[i + 1]]
        out.append(pts[i])
    return LatticePath.from_points(out)


def reverse_loop_erase(path: LatticePath) -> LatticePath:
    """RLE(S) = rev(LE(rev(S)))."""
    return loop_erase(path.reversed()).reversed()


def sample_lerw(target: Union[int, GridDomain], rng: Union[RngStream, np.random.Generator],
                return_walk: bool = False) -> LerwSample:
    """
    Sample a loop-erased random walk.

    The path X runs from the exit point S(tau) to the origin and is the
    reversed loop-erasure of a fresh simple random walk read backwards.

    Args:
        target: Exit radius n, or a grid domain
        rng: Random stream
        return_walk: Attach the generating walk to the sample

    Returns:
        LerwSample with ``path`` = X, ``steps`` = M_n, ``srw_steps`` = tau
    """
    dom = _domain_for(target)
    record = _run_walk(dom, _as_generator(rng))
    path = LatticePath(_erased_points(record))
    walk = LatticePath(_walk_points(record)) if return_walk else None
    seed = rng.seed if isinstance(rng, RngStream) else None
    stream_index = rng.stream_index if isinstance(rng, RngStream) else None
    n = int(target) if not isinstance(target, GridDomain) else dom.scale
    return LerwSample(path=path, steps=path.length, srw_steps=record.tau, n=n,
                      seed=seed, stream_index=stream_index, walk=walk)


def lerw_in_slit_domain(dom: GridDomain, prefix: Sequence[Tuple[int, int]],
                        rng: Union[RngStream, np.random.Generator], slit: str = 'full',
                        max_attempts: int = 100_000) -> LerwSample:
    """
    LERW in dom minus a prefix, conditioned to start at the prefix tip.

    With ``slit='full'`` the points prefix[1:] are removed; with ``slit='tip'``
    only the tip is removed, which ignores the rest of the prefix. Walks are
    resampled from the same generator until the erased path starts at the tip.

    Args:
        dom: Grid domain containing the origin
        prefix: Points alpha(0), ..., alpha(j) with alpha(0) on the boundary
        rng: Random stream
        slit: 'full' or 'tip'
        max_attempts: Resampling cap

    Returns:
        LerwSample whose path runs from alpha(j) to the origin

    Raises:
        PreconditionViolation: If the tip is never reached within max_attempts
    """
    if slit not in ('full', 'tip'):
        raise ValueError(f"unknown slit mode: {slit}")
    prefix = [tuple(p) for p in prefix]
    tip = prefix[-1]
    if len(prefix) == 1:
        slit_dom = dom
    else:
        removed = prefix[1:] if slit == 'full' else [tip]
        slit_dom = dom.remove(removed)
    if not slit_dom.on_boundary(tip):
        raise PreconditionViolation(f"prefix tip {tip} is not on the slit domain boundary")

    gen = _as_generator(rng)
    ox, oy = slit_dom.offset
    tip_index = (tip[0] + ox, tip[1] + oy)
    for _ in range(max_attempts):
        record = _run_walk(slit_dom, gen)
        if record.exit_index == tip_index:
            path = LatticePath(_erased_points(record))
            return LerwSample(path=path, steps=path.length, srw_steps=record.tau, n=dom.scale)
    raise PreconditionViolation(f"slit-domain walk never exited at {tip} in {max_attempts} attempts")

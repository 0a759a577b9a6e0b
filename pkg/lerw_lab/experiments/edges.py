"""
Edge-Visit Experiments - Per-edge hit frequencies of LERW against the Green's function.
"""

import logging
import math
from dataclasses import dataclass
from typing import Optional, Sequence, Tuple, Union

import numpy as np
import pandas as pd

from ..core.green import Annulus, ConformalMap, SleParams, green_domain
from ..core.lattice import DomainSpec, GridDomain, grid_approximation, open_ball_domain
from ..core.parallel import ReplicaRunner
from ..core.rng import RngStream
from ..core.walk import sample_lerw

logger = logging.getLogger(__name__)

DEFAULT_BINS = (0.3, 0.5, 0.7)
DEFAULT_BIN_WIDTH = 0.05


@dataclass
class EdgeField:
    """Hit frequencies of every edge and their radial summary."""

    n: int
    samples: int
    seed: int
    c_n: float
    speed: str
    mean_steps: float
    total_probability: float
    edges: pd.DataFrame
    bins: pd.DataFrame

    @property
    def consistency_gap(self) -> float:
        """sum over all edges of P^(z_e in Y) minus E^[M_n]; zero up to rounding."""
        return self.total_probability - self.mean_steps


def _count_edges(seed: int, start: int, stop: int, dom: GridDomain) -> Tuple[np.ndarray, int]:
    """Integer visit counts on the doubled-midpoint grid for replicas [start, stop)."""
    size = 4 * max(dom.interior.shape) + 8
    half = size // 2
    counts = np.zeros((size, size), dtype=np.int64)
    steps = 0
    for i in range(start, stop):
        sample = sample_lerw(dom, RngStream(seed, i))
        pts = sample.path.points
        keys = pts[:-1] + pts[1:]
        np.add.at(counts, (keys[:, 0] + half, keys[:, 1] + half), 1)
        steps += sample.steps
    return counts, steps


def _edge_field(dom: GridDomain, n: int, samples: int, seed: int, region: Annulus,
                speed: str, green, bins: Sequence[float], bin_width: float,
                runner: Optional[ReplicaRunner]) -> EdgeField:
    runner = runner or ReplicaRunner()
    partials = runner.map_chunks(_count_edges, seed, samples, (dom,))
    counts = sum(p[0] for p in partials)
    total_steps = sum(p[1] for p in partials)
    half = counts.shape[0] // 2
    mean_steps = total_steps / samples
    c_n = mean_steps if speed == 'empirical' else float(n) ** 1.25

    all_keys = dom.edges()
    z_all = (all_keys[:, 0] + 1j * all_keys[:, 1]) / (2.0 * n)
    in_region = region.contains(z_all)
    keys_region = all_keys[in_region]
    z = z_all[in_region]
    hits = counts[keys_region[:, 0] + half, keys_region[:, 1] + half]
    probability = hits / samples
    scaled = (2.0 * n * n / c_n) * probability
    g = green(z)
    edges = pd.DataFrame({
        'x': z.real, 'y': z.imag, 'hits': hits, 'probability': probability,
        'scaled': scaled, 'green': g, 'ratio': scaled / g,
    })

    rows = []
    r = np.abs(z)
    for centre in bins:
        sel = np.abs(r - centre) <= bin_width
        rows.append({
            'r': centre,
            'edges': int(sel.sum()),
            'scaled': float(scaled[sel].mean()) if sel.any() else math.nan,
            'green': float(g[sel].mean()) if sel.any() else math.nan,
            'ratio': float(scaled[sel].sum() / g[sel].sum()) if sel.any() else math.nan,
        })
    logger.info(f"edge field at n={n}: c_n={c_n:.3f}, {int(np.count_nonzero(counts))} distinct edges visited")

    return EdgeField(n=n, samples=samples, seed=seed, c_n=c_n, speed=speed, mean_steps=mean_steps,
                     total_probability=float(counts.sum()) / samples, edges=edges, bins=pd.DataFrame(rows))


def estimate_edge_probability(n: int, samples: int, seed: int,
                              annulus: Union[Annulus, Tuple[float, float]] = (0.0, 1.0),
                              speed: str = 'empirical', params: Optional[SleParams] = None,
                              bins: Sequence[float] = DEFAULT_BINS, bin_width: float = DEFAULT_BIN_WIDTH,
                              runner: Optional[ReplicaRunner] = None) -> EdgeField:
    """
    Per-edge P^(z_e in Y_n) for the LERW to radius n and the scaled field (2n^2/c_n) P^.

    Args:
        n: Lattice scale (exit radius)
        samples: Number of replicas
        seed: Run seed
        annulus: Region of edge midpoints to report (must avoid the origin cell)
        speed: 'empirical' (c_n = E^[M_n] from the same runs) or 'ideal' (n^(5/4))
        params: SLE parameters of the companion Green's function (kappa = 2)
        bins: Radii of the radial bins
        bin_width: Half-width of each bin
        runner: Replica runner

    Returns:
        EdgeField with per-edge rows and radial bins
    """
    region = annulus if isinstance(annulus, Annulus) else Annulus(*annulus)
    if region.inner * n <= 0.5:
        region = Annulus(0.5 / n + 1e-9, region.outer)
    params = params or SleParams(2.0)
    green = lambda z: green_domain(z, ConformalMap.identity(), params)  # noqa: E731
    return _edge_field(open_ball_domain(n), n, samples, seed, region, speed, green, bins, bin_width, runner)


def estimate_domain_edge_probability(spec: DomainSpec, n: int, samples: int, seed: int,
                                     speed: str = 'empirical', params: Optional[SleParams] = None,
                                     bins: Optional[Sequence[float]] = None,
                                     bin_width: Optional[float] = None,
                                     runner: Optional[ReplicaRunner] = None) -> EdgeField:
    """
    Edge field of LERW in the grid approximation of a centred disk against G_D.

    The companion Green's function uses the scaling map z -> z / r, so the
    ratio field checks conformal covariance on disks of radius r.
    """
    if spec.kind != 'disk' or spec.center != (0.0, 0.0):
        raise ValueError("domain edge field needs a disk centred at the origin")
    r = spec.radius
    dom = grid_approximation(spec, n)
    params = params or SleParams(2.0)
    conformal_map = ConformalMap.scaling(r)
    green = lambda z: green_domain(z, conformal_map, params)  # noqa: E731
    bins = tuple(b * r for b in DEFAULT_BINS) if bins is None else bins
    bin_width = DEFAULT_BIN_WIDTH * r if bin_width is None else bin_width
    region = Annulus(0.5 / n + 1e-9, r * (1 - 1e-9))
    return _edge_field(dom, n, samples, seed, region, speed, green, bins, bin_width, runner)

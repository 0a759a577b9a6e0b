"""
Ball Occupation Experiments - Steps of LERW inside a small ball, given that it hits the ball.
"""

import logging
import math
from dataclasses import dataclass
from typing import List, Optional, Sequence, Tuple

import numpy as np
import pandas as pd

from ..core.curve import distance_to_point
from ..core.errors import BallOutsideDisk, InsufficientHits
from ..core.parallel import ReplicaRunner
from ..core.rng import RngStream
from ..core.walk import sample_lerw
from .growth import estimate_mn
from .reports import EstimateReport, REFERENCE_STREAM_OFFSET, ratio_report

logger = logging.getLogger(__name__)

MIN_HITS = 100


def ball_visits(stream: RngStream, n: int, z: complex, eps: float) -> Tuple[bool, int, int]:
    """
    One replica: (does Y~_n meet B(z, eps), steps with midpoint in the ball, M_n).
    """
    path = sample_lerw(n, stream).path.points
    pts = (path[:, 0] + 1j * path[:, 1]) / n
    hit = distance_to_point(pts, z) < eps
    mids = 0.5 * (pts[:-1] + pts[1:])
    inside = int(np.count_nonzero(np.abs(mids - z) < eps)) if hit else 0
    return hit, inside, len(pts) - 1


@dataclass
class OccupationResult:
    """Conditional occupation of B(z, eps) and its comparison ratios."""

    z: complex
    eps: float
    n: int
    speed: str
    c_n: float
    hit_rate: EstimateReport
    steps: EstimateReport
    occupation: EstimateReport
    inner_ratio: EstimateReport
    scaled_ratio: EstimateReport
    bound_quotient: EstimateReport

    def reports(self) -> List[EstimateReport]:
        return [self.hit_rate, self.steps, self.occupation,
                self.inner_ratio, self.scaled_ratio, self.bound_quotient]

    def to_frame(self) -> pd.DataFrame:
        rows = []
        for report in self.reports():
            row = {'z_x': self.z.real, 'z_y': self.z.imag, 'eps': self.eps, 'n': self.n,
                   'speed': self.speed, 'c_n': self.c_n}
            row.update(report.to_row())
            rows.append(row)
        return pd.DataFrame(rows)


def estimate_conditional_occupation(z: complex, eps: float, n: int, samples: int, seed: int,
                                    speed: str = 'empirical', enforce_containment: bool = True,
                                    min_hits: int = MIN_HITS,
                                    runner: Optional[ReplicaRunner] = None) -> OccupationResult:
    """
    Estimate E[# steps of X^n in B(z, eps) | Y~_n hits B(z, eps)] and its ratios.

    Reported quantities:
        (a) ``steps``: conditional mean step count in the ball
        (b) ``inner_ratio``: (a) / E^[M_{eps n}]
        (c) ``scaled_ratio``: ((a) / c_n) / (E^[M_{eps n}] / E^[M_n])
        (d) ``bound_quotient``: (a) / (log(1/eps) E^[M_{eps n}])
    plus the hit rate and the conditional occupation (a) / c_n.

    Args:
        z: Ball centre
        eps: Ball radius
        n: Lattice scale
        samples: Number of replicas
        seed: Run seed
        speed: 'empirical' or 'ideal' choice of c_n
        enforce_containment: Require B(z, 2 eps) inside the unit disk
        min_hits: Minimum number of replicas hitting the ball
        runner: Replica runner

    Returns:
        OccupationResult

    Raises:
        BallOutsideDisk: If containment is enforced and |z| + 2 eps > 1
        InsufficientHits: If fewer than ``min_hits`` replicas hit the ball
    """
    z = complex(z)
    if not eps > 0:
        raise ValueError("eps must be positive")
    if enforce_containment and abs(z) + 2 * eps > 1:
        raise BallOutsideDisk(f"B({z}, {2 * eps}) is not contained in the unit disk")
    runner = runner or ReplicaRunner()

    results = runner.map(ball_visits, seed, samples, (n, z, eps))
    hits = np.array([r[0] for r in results], dtype=bool)
    inside = np.array([r[1] for r in results], dtype=np.int64)
    totals = np.array([r[2] for r in results], dtype=np.int64)
    hit_count = int(hits.sum())
    if hit_count < min_hits:
        raise InsufficientHits(f"only {hit_count} of {samples} replicas hit B({z}, {eps}); need {min_hits}")

    meta = {'n': n, 'eps': eps, 'z': f"{z.real:g},{z.imag:g}", 'speed': speed}
    base = EstimateReport.from_values(totals, seed, metadata=dict(meta, quantity='M_n'))
    c_n = base.estimate if speed == 'empirical' else float(n) ** 1.25

    hit_rate = EstimateReport.from_proportion(hit_count, samples, seed, metadata=dict(meta, quantity='hit_rate'))
    steps = EstimateReport.from_values(inside[hits], seed, metadata=dict(meta, quantity='steps_given_hit'))
    occupation = EstimateReport.from_values(inside[hits] / c_n, seed,
                                            metadata=dict(meta, quantity='occupation_given_hit'))

    m = max(1, int(round(eps * n)))
    inner = estimate_mn(m, samples, seed, runner, offset=REFERENCE_STREAM_OFFSET)
    inner_ratio = ratio_report(steps, inner, seed, metadata=dict(meta, quantity='steps_over_M_eps_n', m=m))
    mn_ratio = ratio_report(inner, base, seed)
    scaled_ratio = ratio_report(occupation, mn_ratio, seed,
                                metadata=dict(meta, quantity='occupation_over_mn_ratio', m=m))
    # log(1/eps) vanishes or changes sign once the ball is as large as the disk
    if eps < 1:
        log_factor = math.log(1 / eps)
        quotient, quotient_err = inner_ratio.estimate / log_factor, inner_ratio.stderr / log_factor
    else:
        quotient, quotient_err = math.nan, 0.0
    bound = EstimateReport(estimate=quotient, stderr=quotient_err, samples=inner_ratio.samples,
                           seed=seed, label="bound check",
                           metadata=dict(meta, quantity='bound_quotient', m=m))
    logger.info(f"B({z}, {eps}) at n={n}: {hit_count}/{samples} hits, "
                f"{steps.estimate:.3f} steps given a hit")
    return OccupationResult(z=z, eps=eps, n=n, speed=speed, c_n=c_n, hit_rate=hit_rate, steps=steps,
                            occupation=occupation, inner_ratio=inner_ratio, scaled_ratio=scaled_ratio,
                            bound_quotient=bound)


@dataclass
class BoundScan:
    """The bound quotient across an eps grid."""

    results: List[OccupationResult]

    @property
    def quotients(self) -> np.ndarray:
        return np.array([r.bound_quotient.estimate for r in self.results])

    @property
    def spread(self) -> float:
        """(max - min) / mean of the bound quotient; small when one C fits every eps."""
        q = self.quotients
        return float((q.max() - q.min()) / q.mean())

    def to_frame(self) -> pd.DataFrame:
        rows = []
        for r in self.results:
            rows.append({
                'eps': r.eps,
                'steps': r.steps.estimate,
                'steps_stderr': r.steps.stderr,
                'bound_quotient': r.bound_quotient.estimate,
                'bound_stderr': r.bound_quotient.stderr,
                'scaled_ratio': r.scaled_ratio.estimate,
                'scaled_stderr': r.scaled_ratio.stderr,
                'hit_rate': r.hit_rate.estimate,
            })
        table = pd.DataFrame(rows)
        table['spread'] = self.spread
        return table


def theorem_bound_scan(z: complex, eps_list: Sequence[float], n: int, samples: int, seed: int,
                       speed: str = 'empirical', runner: Optional[ReplicaRunner] = None) -> BoundScan:
    """Run the conditional occupation at every eps and collect the bound quotients."""
    results = [estimate_conditional_occupation(z, eps, n, samples, seed, speed=speed, runner=runner)
               for eps in eps_list]
    scan = BoundScan(results)
    logger.info(f"bound quotient spread over eps={list(eps_list)}: {scan.spread:.3f}")
    return scan

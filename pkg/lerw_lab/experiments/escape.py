"""
Escape Experiments - Non-intersection of a random walk with an independent LERW.

Both objects start at the origin and the common starting point is excluded
from each: the walk contributes S[1, tau_n] and the LERW every point but the
origin. For Es(m, n) the LERW is read from the origin outwards and only its
part after first leaving B_m is kept.
"""

import logging
from typing import Dict, List, Optional, Sequence

import numpy as np
import pandas as pd

from ..core.errors import PreconditionViolation
from ..core.lattice import open_ball_domain
from ..core.parallel import ReplicaRunner
from ..core.rng import RngStream
from ..core.walk import sample_lerw, sample_srw_in_domain
from .growth import estimate_mn, fit_growth_exponent
from .reports import EstimateReport, ExponentFit, REFERENCE_STREAM_OFFSET, ratio_report

logger = logging.getLogger(__name__)

STARTING_POINT_CONVENTION = "both paths exclude the common starting point"


def beyond_first_exit(points: np.ndarray, m: int) -> np.ndarray:
    """
    The part of a path read origin-outwards from its first point with |x| >= m.

    This is the tau_m convention: the point just before that exit, still inside
    the open ball, is dropped with everything before it. Later returns into the
    ball are kept.
    """
    r2 = points[:, 0] ** 2 + points[:, 1] ** 2
    return points[int(np.argmax(r2 >= m * m)):]


def _disjoint(stream: RngStream, n: int, m: int) -> bool:
    """
    One pair: a walk to radius n (sub-stream 0) and an independent LERW (sub-stream 1).

    With m = 0 the whole LERW minus the origin is tested, otherwise its
    terminal part beyond the first exit of B_m (see ``beyond_first_exit``).
    """
    dom = open_ball_domain(n)
    offset = np.asarray(dom.offset, dtype=np.int64)
    walk = sample_srw_in_domain(dom, stream.substream(0)).points[1:] + offset
    visited = np.zeros(dom.interior.shape, dtype=bool)
    visited[walk[:, 0], walk[:, 1]] = True
    # origin first, exit point last
    points = sample_lerw(dom, stream.substream(1)).path.points[::-1][1:]
    if m > 0:
        points = beyond_first_exit(points, m)
    points = points + offset
    return not bool(visited[points[:, 0], points[:, 1]].any())


def _escape_report(n: int, m: int, samples: int, seed: int, runner: Optional[ReplicaRunner],
                   offset: int = 0) -> EstimateReport:
    runner = runner or ReplicaRunner()
    outcomes = runner.map(_disjoint, seed, samples, (n, m), offset=offset)
    disjoint = int(sum(outcomes))
    meta: Dict[str, object] = {'n': n, 'convention': STARTING_POINT_CONVENTION}
    if m > 0:
        meta['m'] = m
    report = EstimateReport.from_proportion(disjoint, samples, seed, metadata=meta)
    label = f"Es({m}, {n})" if m else f"Es({n})"
    logger.info(f"{label} ~ {report.estimate:.5f} +- {report.stderr:.5f}")
    return report


def estimate_es(n: int, samples: int, seed: int, runner: Optional[ReplicaRunner] = None,
                offset: int = 0) -> EstimateReport:
    """
    Estimate Es(n), the probability that S[1, tau_n] avoids LE minus the origin.

    Args:
        n: Exit radius (n >= 1)
        samples: Number of independent pairs
        seed: Run seed
        runner: Replica runner
        offset: First stream index

    Returns:
        EstimateReport of the disjoint fraction
    """
    if n < 1:
        raise PreconditionViolation("n must be at least 1")
    return _escape_report(n, 0, samples, seed, runner, offset)


def estimate_es2(m: int, n: int, samples: int, seed: int, runner: Optional[ReplicaRunner] = None,
                 offset: int = 0) -> EstimateReport:
    """Estimate Es(m, n): the walk against the LERW's part beyond its first exit of B_m."""
    if not 1 <= m < n:
        raise PreconditionViolation("Es(m, n) needs 1 <= m < n")
    return _escape_report(n, m, samples, seed, runner, offset)


def _inner_radius(eps: float, n: int) -> int:
    return min(n - 1, max(1, int(round(eps * n))))


def fit_es_exponent(n: int, eps_list: Sequence[float], samples: int, seed: int,
                    runner: Optional[ReplicaRunner] = None, bootstrap: int = 1000):
    """
    Slope of log Es(eps n, n) against log eps.

    Returns:
        (ExponentFit, per-eps reports); the reports carry the label "bound check"
    """
    reports: List[EstimateReport] = []
    for eps in eps_list:
        m = _inner_radius(eps, n)
        report = estimate_es2(m, n, samples, seed, runner)
        report = report.model_copy(update={'label': "bound check",
                                           'metadata': dict(report.metadata, eps=eps)})
        reports.append(report)
    fit: ExponentFit = fit_growth_exponent(list(eps_list), reports, seed=seed, bootstrap=bootstrap)
    logger.info(f"Es(eps n, n) exponent at n={n}: {fit.slope:.3f} +- {fit.half_width:.3f}")
    return fit, reports


def escape_factorization(n: int, eps: float, samples: int, seed: int,
                         runner: Optional[ReplicaRunner] = None) -> pd.DataFrame:
    """
    Up-to-constants relations between escape probabilities and step counts.

    Rows compare Es(n) with Es(eps n) Es(eps n, n), and E^[M_{eps n}] / E^[M_n]
    with eps^2 / Es(eps n, n). Every ratio is a diagnostic.
    """
    m = _inner_radius(eps, n)
    es_n = estimate_es(n, samples, seed, runner)
    es_m = estimate_es(m, samples, seed, runner, offset=REFERENCE_STREAM_OFFSET)
    es_mn = estimate_es2(m, n, samples, seed, runner, offset=2 * REFERENCE_STREAM_OFFSET)
    mn = estimate_mn(n, samples, seed, runner, offset=3 * REFERENCE_STREAM_OFFSET)
    mm = estimate_mn(m, samples, seed, runner, offset=4 * REFERENCE_STREAM_OFFSET)

    product = EstimateReport(
        estimate=es_m.estimate * es_mn.estimate,
        stderr=float(np.hypot(es_m.stderr * es_mn.estimate, es_mn.stderr * es_m.estimate)),
        samples=samples, seed=seed,
    )
    step_ratio = ratio_report(mm, mn, seed)
    predicted = EstimateReport(
        estimate=eps ** 2 / es_mn.estimate if es_mn.estimate else float('nan'),
        stderr=eps ** 2 * es_mn.stderr / es_mn.estimate ** 2 if es_mn.estimate else 0.0,
        samples=samples, seed=seed,
    )
    rows = [
        ratio_report(es_n, product, seed, metadata={'relation': 'Es(n) / (Es(m) Es(m,n))'}),
        ratio_report(step_ratio, predicted, seed,
                     metadata={'relation': '(E[M_m] / E[M_n]) / (eps^2 / Es(m,n))'}),
    ]
    table = pd.DataFrame([r.to_row() for r in rows])
    table.insert(0, 'eps', eps)
    table.insert(0, 'm', m)
    table.insert(0, 'n', n)
    return table

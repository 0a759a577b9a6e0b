"""
Hit Experiments - Probability that the rescaled curve meets a ball.
"""

import logging
from typing import Literal, Optional

from ..core.curve import distance_to_point
from ..core.parallel import ReplicaRunner
from ..core.rng import RngStream
from ..core.loewner import sample_sle_trace
from ..core.walk import sample_lerw
from .reports import EstimateReport

logger = logging.getLogger(__name__)

DEFAULT_SLE_HORIZON = 6.0
DEFAULT_SLE_STEP = 1e-3


def lerw_hits(stream: RngStream, n: int, z: complex, eps: float) -> bool:
    points = sample_lerw(n, stream).path.points
    return distance_to_point((points[:, 0] + 1j * points[:, 1]) / n, z) < eps


def sle_hits(stream: RngStream, kappa: float, T: float, dt: float, z: complex, eps: float) -> bool:
    """One radial SLE trace from a uniform boundary point, closed off at the origin."""
    trace = sample_sle_trace(kappa, T, dt, stream, parametrization='finite-lifetime', uniform_start=True)
    return distance_to_point(trace.curve.vertices, z) < eps


def estimate_hit_probability(z: complex, eps: float, n: int, samples: int, seed: int,
                             model: Literal['lerw', 'sle'] = 'lerw', kappa: float = 2.0,
                             T: float = DEFAULT_SLE_HORIZON, dt: float = DEFAULT_SLE_STEP,
                             runner: Optional[ReplicaRunner] = None) -> EstimateReport:
    """
    Estimate P(Y~_n meets B(z, eps)), or the same for Loewner-sampled traces.

    Args:
        z: Ball centre
        eps: Ball radius (open ball)
        n: Lattice scale (ignored for the 'sle' model)
        samples: Number of replicas
        seed: Run seed
        model: 'lerw' or 'sle'
        kappa: SLE parameter for the 'sle' model
        T: Capacity horizon of the Loewner traces
        dt: Driving step of the Loewner traces
        runner: Replica runner

    Returns:
        EstimateReport of the hit frequency
    """
    z = complex(z)
    if not eps > 0:
        raise ValueError("eps must be positive")
    runner = runner or ReplicaRunner()
    meta = {'model': model, 'z': f"{z.real:g},{z.imag:g}", 'eps': eps}
    if model == 'lerw':
        outcomes = runner.map(lerw_hits, seed, samples, (n, z, eps))
        meta['n'] = n
    elif model == 'sle':
        outcomes = runner.map(sle_hits, seed, samples, (kappa, T, dt, z, eps))
        meta.update({'kappa': kappa, 'T': T, 'dt': dt})
    else:
        raise ValueError(f"unknown model: {model}")
    report = EstimateReport.from_proportion(int(sum(outcomes)), samples, seed, metadata=meta)
    logger.info(f"P({model} hits B({z}, {eps})) ~ {report.estimate:.4f} +- {report.stderr:.4f}")
    return report

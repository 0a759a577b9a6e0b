"""
Loewner Checks - Capacity normalization and the Green's observable along radial SLE.
"""

import logging
import math
from typing import Optional, Sequence, Tuple

import numpy as np
import pandas as pd

from ..core.green import SleParams
from ..core.loewner import DrivingFunction, LoewnerChain, martingale_observable
from ..core.parallel import ReplicaRunner
from ..core.rng import RngStream
from .reports import EstimateReport

logger = logging.getLogger(__name__)

DEFAULT_TIMES = (0.1, 0.2, 0.3, 0.4, 0.5)


def observable_path(stream: RngStream, params: SleParams, z: complex, T: float, dt: float,
                    times: Tuple[float, ...]) -> Tuple[np.ndarray, bool]:
    """
    M_t(z) at the requested times for one uniform-start driving sample.

    After blow-up the last value before it is carried forward.
    """
    driving = DrivingFunction.sample(params.kappa, T, dt, stream, uniform_start=True)
    series = martingale_observable(LoewnerChain(driving), z, params)
    idx = np.minimum(np.rint(np.asarray(times) / dt).astype(np.int64), len(series.values) - 1)
    return series.values[idx], series.blowup_time is not None


def martingale_check(kappa: float, z: complex, samples: int, seed: int,
                     times: Sequence[float] = DEFAULT_TIMES, dt: float = 1e-3,
                     runner: Optional[ReplicaRunner] = None) -> pd.DataFrame:
    """
    E^[M_t(z)] on a grid of capacity times.

    Args:
        kappa: SLE parameter in (0, 4]
        z: Tracked point, 0 < |z| < 1
        samples: Number of driving samples
        seed: Run seed
        times: Capacity times at which to report the mean
        dt: Driving step
        runner: Replica runner

    Returns:
        One row per time (t, estimate, stderr, count, seed, blown_up, label)
        plus the spread of the means measured in combined standard errors
    """
    times = tuple(float(t) for t in times)
    if not times or min(times) < 0:
        raise ValueError("times must be a nonempty list of nonnegative values")
    params = SleParams(kappa)
    runner = runner or ReplicaRunner()
    T = max(times)
    results = runner.map(observable_path, seed, samples, (params, complex(z), T, dt, times))
    values = np.array([r[0] for r in results])
    blown_up = int(sum(r[1] for r in results))
    if blown_up:
        logger.warning(f"{blown_up} of {samples} driving samples swallowed z={z} before t={T}")

    rows = []
    for k, t in enumerate(times):
        report = EstimateReport.from_values(values[:, k], seed, label="diagnostic",
                                            metadata={'t': t, 'kappa': kappa, 'blown_up': blown_up})
        rows.append(report.to_row())
    table = pd.DataFrame(rows)
    means = table['estimate'].to_numpy()
    errs = table['stderr'].to_numpy()
    i, j = int(np.argmax(means)), int(np.argmin(means))
    scale = math.hypot(errs[i], errs[j])
    table['spread_in_stderr'] = (means[i] - means[j]) / scale if scale > 0 else 0.0
    return table


def capacity_error(stream: RngStream, kappa: float, T: float, dt: float) -> Tuple[float, float]:
    """Relative error of |g_T'(0)| against e^T, by centered differences and by the chain rule."""
    chain = LoewnerChain(DrivingFunction.sample(kappa, T, dt, stream, uniform_start=True))
    target = math.exp(chain.driving.horizon)
    step = chain.driving.steps
    centered = abs(chain.derivative(0j, step, method='centered'))
    product = abs(chain.derivative(0j, step, method='chain'))
    return abs(centered - target) / target, abs(product - target) / target


def capacity_check(samples: int, seed: int, kappa: float = 2.0, T: float = 1.0, dt: float = 1e-4,
                   runner: Optional[ReplicaRunner] = None) -> pd.DataFrame:
    """Worst relative error of |g_T'(0)| = e^T over driving samples, per derivative method."""
    runner = runner or ReplicaRunner()
    errors = np.array(runner.map(capacity_error, seed, samples, (kappa, T, dt)))
    return pd.DataFrame({
        'method': ['centered', 'chain'],
        'max_relative_error': errors.max(axis=0),
        'mean_relative_error': errors.mean(axis=0),
        'count': samples,
        'seed': seed,
        'T': T,
        'dt': dt,
    })

"""
Growth Experiments - M_n moments, tightness diagnostics and the growth exponent.
"""

import logging
from typing import List, Optional, Sequence, Union

import numpy as np
import pandas as pd

from ..core.errors import DegenerateFit
from ..core.parallel import ReplicaRunner
from ..core.rng import RngStream
from ..core.walk import sample_lerw
from .reports import EstimateReport, ExponentFit, REFERENCE_STREAM_OFFSET, ratio_report

logger = logging.getLogger(__name__)

QUANTILES = (0.5, 0.9, 0.99)
GROWTH_EXPONENT = 1.25


def lerw_steps(stream: RngStream, n: int) -> int:
    """M_n of one replica."""
    return sample_lerw(n, stream).steps


def step_counts(n: int, samples: int, seed: int, runner: Optional[ReplicaRunner] = None,
                offset: int = 0) -> np.ndarray:
    runner = runner or ReplicaRunner()
    return np.asarray(runner.map(lerw_steps, seed, samples, (n,), offset=offset), dtype=np.int64)


def summarize_steps(counts: np.ndarray, n: int, seed: int) -> EstimateReport:
    """Mean of M_n plus the quantiles of M_n / mean."""
    report = EstimateReport.from_values(counts, seed, label="estimate", metadata={'n': n})
    normalized = counts / report.estimate
    for q in QUANTILES:
        report.metadata[f'q{q:g}'] = float(np.quantile(normalized, q))
    return report


def estimate_mn(n: int, samples: int, seed: int, runner: Optional[ReplicaRunner] = None,
                offset: int = 0) -> EstimateReport:
    """
    Estimate E[M_n] for the LERW to radius n.

    Args:
        n: Exit radius (n >= 1)
        samples: Number of replicas
        seed: Run seed
        runner: Replica runner (worker count only affects wall time)
        offset: First stream index

    Returns:
        EstimateReport; metadata carries quantiles of M_n / E^[M_n] at 0.5, 0.9, 0.99
    """
    counts = step_counts(n, samples, seed, runner, offset)
    report = summarize_steps(counts, n, seed)
    logger.info(f"E[M_{n}] ~ {report.estimate:.4f} +- {report.stderr:.4f} ({samples} samples)")
    return report


def fit_growth_exponent(n_list: Sequence[float], reports: Sequence[Union[EstimateReport, float]],
                        seed: int = 0, bootstrap: int = 1000) -> ExponentFit:
    """
    Least-squares slope of log E^[M_n] against log n.

    The confidence half-width is 1.96 standard deviations of the slope under a
    parametric bootstrap that redraws each mean from its reported standard error.

    Raises:
        DegenerateFit: With fewer than three distinct n or a nonpositive estimate
    """
    n_arr = np.asarray(n_list, dtype=float)
    means = np.array([r.estimate if isinstance(r, EstimateReport) else float(r) for r in reports])
    errors = np.array([r.stderr if isinstance(r, EstimateReport) else 0.0 for r in reports])
    if len(n_arr) != len(means):
        raise ValueError("n_list and reports must have equal length")
    if len(np.unique(n_arr)) < 3:
        raise DegenerateFit("growth fit needs at least three distinct n values")
    if np.any(n_arr <= 0) or np.any(means <= 0):
        raise DegenerateFit("growth fit needs positive n and positive estimates")

    x = np.log(n_arr)
    y = np.log(means)
    slope, intercept = np.polyfit(x, y, 1)
    residuals = y - (slope * x + intercept)

    half_width = 0.0
    if np.any(errors > 0) and bootstrap > 0:
        gen = RngStream(seed, REFERENCE_STREAM_OFFSET).generator()
        draws = gen.normal(means, errors, size=(bootstrap, len(means)))
        draws = np.maximum(draws, np.min(means) * 1e-6)
        slopes = np.polyfit(x, np.log(draws).T, 1)[0]
        half_width = float(1.96 * np.std(slopes, ddof=1))
    return ExponentFit(slope=float(slope), intercept=float(intercept),
                       residuals=[float(r) for r in residuals], half_width=half_width,
                       x_values=[float(v) for v in n_arr])


def estimate_mn_ratio(n: int, eps_list: Sequence[float], samples: int, seed: int,
                      runner: Optional[ReplicaRunner] = None) -> List[EstimateReport]:
    """
    E^[M_{eps n}] / E^[M_n] against eps^(5/4), one diagnostic report per eps.
    """
    base = estimate_mn(n, samples, seed, runner)
    out = []
    for eps in eps_list:
        m = max(1, int(round(eps * n)))
        inner = estimate_mn(m, samples, seed, runner, offset=REFERENCE_STREAM_OFFSET)
        report = ratio_report(inner, base, seed, metadata={
            'n': n, 'eps': eps, 'm': m, 'target': eps ** GROWTH_EXPONENT,
        })
        out.append(report)
    return out


def tightness_table(n_list: Sequence[int], samples: int, seed: int,
                    runner: Optional[ReplicaRunner] = None) -> pd.DataFrame:
    """
    Quantiles of M_n / E^[M_n] for each n, plus the relative spread across n.

    Returns:
        One row per n, and a final row with n = -1 holding (max - min) / max
        of each quantile column
    """
    rows = []
    for n in n_list:
        report = estimate_mn(n, samples, seed, runner)
        row = {'n': n, 'mean': report.estimate, 'stderr': report.stderr}
        row.update({f'q{q:g}': report.metadata[f'q{q:g}'] for q in QUANTILES})
        rows.append(row)
    table = pd.DataFrame(rows)
    spread = {'n': -1, 'mean': np.nan, 'stderr': np.nan}
    for q in QUANTILES:
        col = table[f'q{q:g}']
        spread[f'q{q:g}'] = float((col.max() - col.min()) / col.max())
    return pd.concat([table, pd.DataFrame([spread])], ignore_index=True)

"""
Domain Markov Test - Remainders of LERW after a fixed prefix against LERW in the slit domain.
"""

import logging
from collections import Counter
from dataclasses import dataclass, field
from typing import Dict, List, Literal, Optional, Tuple

import numpy as np
import pandas as pd
from scipy.stats import chi2_contingency

from ..core.errors import PrefixTooRare
from ..core.lattice import GridDomain
from ..core.parallel import ReplicaRunner
from ..core.rng import RngStream
from ..core.walk import lerw_in_slit_domain, sample_lerw
from .reports import REFERENCE_STREAM_OFFSET

logger = logging.getLogger(__name__)

Path = Tuple[Tuple[int, int], ...]
Comparator = Literal['slit', 'unslit', 'fresh']

MIN_PREFIX_COUNT = 500
MIN_CATEGORY_COUNT = 10


def lerw_points(stream: RngStream, dom: GridDomain) -> Path:
    return tuple(map(tuple, sample_lerw(dom, stream).path.points.tolist()))


def comparator_points(stream: RngStream, dom: GridDomain, prefix: Path, comparator: str) -> Path:
    """One comparator remainder, running from the prefix tip to the origin."""
    if comparator == 'fresh':
        return lerw_points(stream, dom)
    slit = 'full' if comparator == 'slit' else 'tip'
    sample = lerw_in_slit_domain(dom, prefix, stream, slit=slit)
    return tuple(map(tuple, sample.path.points.tolist()))


def most_common_prefix(paths: List[Path], j: int) -> Tuple[Path, int]:
    """The most frequent X[0, j]; ties go to the lexicographically smallest prefix."""
    counts = Counter(p[:j + 1] for p in paths if len(p) > j + 1)
    if not counts:
        raise PrefixTooRare(f"no sample has more than {j} steps")
    best = max(counts.values())
    prefix = min(p for p, c in counts.items() if c == best)
    return prefix, best


def _contingency(observed: Counter, expected: Counter, min_count: int) -> Tuple[np.ndarray, List[str]]:
    keys = sorted(set(observed) | set(expected))
    table = []
    labels = []
    pooled = [0, 0]
    for key in keys:
        a, b = observed.get(key, 0), expected.get(key, 0)
        if a + b < min_count:
            pooled[0] += a
            pooled[1] += b
        else:
            table.append([a, b])
            labels.append(str(list(key)))
    if sum(pooled):
        table.append(pooled)
        labels.append('pooled')
    return np.array(table, dtype=np.int64).reshape(-1, 2), labels


@dataclass
class MarkovTestResult:
    """Chi-square comparison of conditioned remainders and comparator samples."""

    p_value: float
    statistic: float
    dof: int
    j: int
    comparator: str
    prefix: Path
    prefix_count: int
    samples: int
    seed: int
    categories: pd.DataFrame = field(repr=False)

    def to_row(self) -> Dict[str, object]:
        return {
            'j': self.j,
            'comparator': self.comparator,
            'prefix': str([list(p) for p in self.prefix]),
            'prefix_count': self.prefix_count,
            'categories': len(self.categories),
            'statistic': self.statistic,
            'dof': self.dof,
            'p_value': self.p_value,
            'count': self.samples,
            'seed': self.seed,
        }


def domain_markov_test(dom: GridDomain, j: int, samples: int, seed: int,
                       comparator: Comparator = 'slit', min_prefix: int = MIN_PREFIX_COUNT,
                       min_category: int = MIN_CATEGORY_COUNT,
                       runner: Optional[ReplicaRunner] = None) -> MarkovTestResult:
    """
    Test that X[j, end] given X[0, j] = alpha is LERW in dom minus alpha.

    The conditioning prefix alpha is the most common X[0, j] among ``samples``
    LERW draws. As many comparator draws as there are conditioned remainders are
    taken from independent streams. Categories (whole remainder paths) whose
    combined count is below ``min_category`` are pooled into one cell.

    Args:
        dom: Grid domain containing the origin
        j: Prefix length in steps
        samples: Number of LERW draws in dom
        seed: Run seed
        comparator: 'slit' (dom minus alpha), 'unslit' (only the tip removed)
            or 'fresh' (unconditioned LERW in dom, a negative control)
        min_prefix: Minimum number of draws sharing the prefix
        min_category: Pooling threshold
        runner: Replica runner

    Returns:
        MarkovTestResult; p_value is 1 when fewer than two categories survive pooling

    Raises:
        PrefixTooRare: If the prefix occurs fewer than ``min_prefix`` times
    """
    if j < 0:
        raise ValueError("prefix length must be nonnegative")
    if comparator not in ('slit', 'unslit', 'fresh'):
        raise ValueError(f"unknown comparator: {comparator}")
    runner = runner or ReplicaRunner()

    paths = runner.map(lerw_points, seed, samples, (dom,))
    prefix, count = most_common_prefix(paths, j)
    if count < min_prefix:
        raise PrefixTooRare(f"prefix {list(prefix)} appears {count} times; need {min_prefix}")
    observed = Counter(p[j:] for p in paths if p[:j + 1] == prefix)

    fresh = runner.map(comparator_points, seed, count, (dom, prefix, comparator),
                       offset=REFERENCE_STREAM_OFFSET)
    expected = Counter(fresh)

    table, labels = _contingency(observed, expected, min_category)
    if len(table) < 2:
        statistic, p_value, dof = 0.0, 1.0, 0
    else:
        statistic, p_value, dof, _ = chi2_contingency(table.T, correction=False)
    categories = pd.DataFrame({'remainder': labels, 'conditioned': table[:, 0], 'comparator': table[:, 1]})
    logger.info(f"domain Markov j={j} ({comparator}): prefix seen {count} times, "
                f"{len(table)} categories, p={float(p_value):.4g}")
    return MarkovTestResult(p_value=float(p_value), statistic=float(statistic), dof=int(dof), j=j,
                            comparator=comparator, prefix=prefix, prefix_count=count,
                            samples=samples, seed=seed, categories=categories)

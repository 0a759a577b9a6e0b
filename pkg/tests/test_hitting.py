"""
Tests for ball hit probabilities of LERW and radial SLE traces.
"""

import numpy as np
import pytest

from lerw_lab.core.parallel import ReplicaRunner
from lerw_lab.experiments.hitting import estimate_hit_probability


def test_ball_around_origin_is_certain():
    """Test both curves end at the origin, so a ball containing it is always hit."""
    lerw = estimate_hit_probability(0.3, 0.5, 8, 50, 1)
    sle = estimate_hit_probability(0.3, 0.5, 0, 20, 1, model='sle', T=0.5, dt=1e-2)
    assert lerw.estimate == 1.0
    assert sle.estimate == 1.0
    assert lerw.stderr == 0.0


def test_metadata():
    """Test model, ball and scale are carried in the report."""
    report = estimate_hit_probability(0.5, 0.1, 8, 40, 2)
    assert report.metadata['model'] == 'lerw'
    assert report.metadata['n'] == 8
    assert report.metadata['eps'] == 0.1
    assert report.metadata['z'] == '0.5,0'
    assert 0 <= report.estimate <= 1
    sle = estimate_hit_probability(0.5, 0.1, 0, 5, 2, model='sle', kappa=2.0, T=0.5, dt=1e-2)
    assert sle.metadata['kappa'] == 2.0
    assert 'n' not in sle.metadata


def test_bad_arguments():
    """Test nonpositive radii and unknown models are refused."""
    with pytest.raises(ValueError):
        estimate_hit_probability(0.5, 0.0, 8, 10, 0)
    with pytest.raises(ValueError):
        estimate_hit_probability(0.5, 0.1, 8, 10, 0, model='brownian')


def test_hit_probability_is_worker_independent():
    """Test the hit count does not depend on the worker count."""
    a = estimate_hit_probability(0.5, 0.2, 10, 60, 3, runner=ReplicaRunner(workers=1, chunk_size=7))
    b = estimate_hit_probability(0.5, 0.2, 10, 60, 3, runner=ReplicaRunner(workers=2, chunk_size=7))
    assert a == b


@pytest.mark.slow
def test_hit_probability_stability_gate():
    """Test P(hit B(0.5, 0.1)) is stable across n and matches the SLE traces."""
    runner = ReplicaRunner()
    reports = [estimate_hit_probability(0.5, 0.1, n, 20000, 4, runner=runner) for n in (64, 128, 256)]
    for a, b in zip(reports, reports[1:]):
        assert abs(a.estimate - b.estimate) < 3 * np.hypot(a.stderr, b.stderr)
    sle = estimate_hit_probability(0.5, 0.1, 0, 20000, 5, model='sle', runner=runner)
    assert abs(sle.estimate - reports[-1].estimate) < 5 * np.hypot(sle.stderr, reports[-1].stderr)


if __name__ == '__main__':
    pytest.main([__file__, '-v'])

"""
Tests for escape probabilities.
"""

import numpy as np
import pytest

from lerw_lab.core.errors import PreconditionViolation
from lerw_lab.core.parallel import ReplicaRunner
from lerw_lab.experiments.escape import (
    STARTING_POINT_CONVENTION, beyond_first_exit, escape_factorization, estimate_es, estimate_es2,
    fit_es_exponent,
)


def test_es_one_is_three_quarters():
    """Test Es(1) = 3/4: the walk and the LERW are single edges that must differ."""
    report = estimate_es(1, 4000, 1)
    assert abs(report.estimate - 0.75) < 4 * np.sqrt(0.75 * 0.25 / 4000)
    assert report.metadata['convention'] == STARTING_POINT_CONVENTION


@pytest.mark.slow
def test_es_one_large():
    """Test Es(1) = 3/4 within three standard errors at 10^5 pairs."""
    report = estimate_es(1, 100000, 2)
    assert abs(report.estimate - 0.75) < 3 * np.sqrt(0.75 * 0.25 / 100000)


def test_es_decreases_with_n():
    """Test a larger radius leaves less room to escape."""
    small = estimate_es(3, 2000, 3)
    large = estimate_es(12, 2000, 3)
    assert large.estimate < small.estimate + 3 * np.hypot(small.stderr, large.stderr)


def test_es_rejects_bad_radii():
    """Test radius and ordering preconditions."""
    with pytest.raises(PreconditionViolation):
        estimate_es(0, 10, 0)
    with pytest.raises(PreconditionViolation):
        estimate_es2(4, 4, 10, 0)
    with pytest.raises(PreconditionViolation):
        estimate_es2(0, 4, 10, 0)


def test_terminal_part_starts_at_first_exit():
    """Test the part beyond B_m starts at the first point with |x| >= m and keeps later returns."""
    path = np.array([(1, 0), (2, 0), (2, 1), (1, 1), (1, 2), (1, 3), (1, 4)])
    assert beyond_first_exit(path, 2).tolist() == [[2, 0], [2, 1], [1, 1], [1, 2], [1, 3], [1, 4]]
    assert beyond_first_exit(path, 4).tolist() == [[1, 4]]
    # every earlier point has |x| < 3; (1, 3) is the first with |x| >= 3
    assert beyond_first_exit(path, 3).tolist() == [[1, 3], [1, 4]]


def test_es2_exceeds_es():
    """Test avoiding only the terminal part is easier than avoiding the whole LERW."""
    whole = estimate_es(16, 1500, 4)
    terminal = estimate_es2(8, 16, 1500, 4)
    assert terminal.estimate >= whole.estimate
    assert terminal.metadata['m'] == 8


def test_es_is_worker_independent():
    """Test pooled and serial runs agree exactly."""
    a = estimate_es(6, 80, 5, ReplicaRunner(workers=1, chunk_size=10))
    b = estimate_es(6, 80, 5, ReplicaRunner(workers=2, chunk_size=10))
    assert a == b


def test_es_exponent_reports_are_bound_checks():
    """Test the exponent fit labels its per-eps reports."""
    fit, reports = fit_es_exponent(32, [0.25, 0.125, 0.0625], 300, 6, bootstrap=100)
    assert [r.metadata['m'] for r in reports] == [8, 4, 2]
    assert all(r.label == "bound check" for r in reports)
    assert [r.metadata['eps'] for r in reports] == [0.25, 0.125, 0.0625]
    assert fit.slope > 0


def test_escape_factorization_rows():
    """Test the two diagnostic relations are reported."""
    table = escape_factorization(16, 0.25, 300, 7)
    assert len(table) == 2
    assert list(table.columns[:3]) == ['n', 'm', 'eps']
    assert (table['label'] == "diagnostic").all()
    assert table['m'].iloc[0] == 4
    assert np.isfinite(table['estimate']).all()


@pytest.mark.slow
def test_es_exponent_gate():
    """Test the eps-exponent of Es(eps n, n) at n=256 lies in [0.55, 0.95]."""
    fit, _ = fit_es_exponent(256, [0.25, 0.125, 0.0625], 20000, 8, runner=ReplicaRunner())
    assert 0.55 <= fit.slope <= 0.95


if __name__ == '__main__':
    pytest.main([__file__, '-v'])

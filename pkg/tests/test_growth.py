"""
Tests for M_n estimates, tightness and the growth exponent.
"""

import numpy as np
import pytest
from pydantic import ValidationError

from lerw_lab.core.errors import DegenerateFit
from lerw_lab.core.parallel import ReplicaRunner
from lerw_lab.experiments.growth import (
    estimate_mn, estimate_mn_ratio, fit_growth_exponent, step_counts, tightness_table,
)
from lerw_lab.experiments.reports import EstimateReport, ExperimentConfig, ratio_report


def test_mn_at_radius_one():
    """Test E^[M_1] = 1 with zero standard error."""
    report = estimate_mn(1, 100, 7)
    assert report.estimate == 1.0
    assert report.stderr == 0.0
    assert report.samples == 100
    assert report.metadata['q0.5'] == 1.0


def test_mn_radius_two_against_independent_run():
    """Test two independent runs at n=2 agree within three combined standard errors."""
    a = estimate_mn(2, 4000, 1)
    b = estimate_mn(2, 16000, 2)
    assert abs(a.estimate - b.estimate) < 3 * np.hypot(a.stderr, b.stderr)


def test_mn_is_reproducible_across_workers():
    """Test the worker count never changes the estimate."""
    serial = estimate_mn(6, 64, 3, ReplicaRunner(workers=1, chunk_size=8))
    pooled = estimate_mn(6, 64, 3, ReplicaRunner(workers=2, chunk_size=8))
    assert serial == pooled


def test_stderr_shrinks_with_samples():
    """Test doubling the sample count four times halves the standard error roughly."""
    small = estimate_mn(8, 400, 4)
    large = estimate_mn(8, 1600, 4)
    assert 0.3 < large.stderr / small.stderr < 0.7


def test_step_counts_offset_changes_streams():
    """Test reference runs use their own streams."""
    base = step_counts(10, 20, 5)
    shifted = step_counts(10, 20, 5, offset=1000)
    assert not np.array_equal(base, shifted)


def test_fit_exact_power_law():
    """Test a synthetic n^(5/4) gives slope 1.25 and zero residuals."""
    n = [16, 32, 64, 128]
    fit = fit_growth_exponent(n, [x ** 1.25 for x in n])
    assert fit.slope == pytest.approx(1.25)
    assert max(abs(r) for r in fit.residuals) < 1e-12
    assert fit.half_width == 0.0


def test_fit_absorbs_constant():
    """Test a constant prefactor only moves the intercept."""
    n = [10, 20, 40]
    fit = fit_growth_exponent(n, [3 * x ** 1.25 for x in n])
    assert fit.slope == pytest.approx(1.25)
    assert fit.intercept == pytest.approx(np.log(3))


def test_fit_bootstrap_half_width():
    """Test noisy reports give a positive half-width."""
    n = [8, 16, 32]
    reports = [EstimateReport(estimate=x ** 1.25, stderr=0.05 * x ** 1.25, samples=100, seed=0) for x in n]
    fit = fit_growth_exponent(n, reports, bootstrap=200)
    assert fit.half_width > 0
    assert fit.to_row()['points'] == 3


def test_fit_needs_three_distinct_n():
    """Test degenerate fits are refused."""
    with pytest.raises(DegenerateFit):
        fit_growth_exponent([4, 8], [1.0, 2.0])
    with pytest.raises(DegenerateFit):
        fit_growth_exponent([4, 4, 8], [1.0, 1.0, 2.0])
    with pytest.raises(DegenerateFit):
        fit_growth_exponent([4, 8, 16], [1.0, 0.0, 2.0])


def test_mn_ratio_reports_target():
    """Test the ratio reports carry eps^(5/4) and the inner radius."""
    reports = estimate_mn_ratio(16, [0.25, 0.5], 50, 6)
    assert [r.metadata['m'] for r in reports] == [4, 8]
    assert reports[0].metadata['target'] == pytest.approx(0.25 ** 1.25)
    assert all(r.label == "diagnostic" for r in reports)
    assert all(0 < r.estimate < 1 for r in reports)


def test_tightness_table_layout():
    """Test one row per n and a final spread row."""
    table = tightness_table([4, 8], 100, 7)
    assert list(table['n']) == [4, 8, -1]
    assert {'q0.5', 'q0.9', 'q0.99'} <= set(table.columns)
    assert np.all(table['q0.99'].iloc[:2] >= table['q0.5'].iloc[:2])


def test_ratio_report_delta_method():
    """Test the ratio of two reports and its propagated error."""
    num = EstimateReport(estimate=2.0, stderr=0.2, samples=10, seed=0)
    den = EstimateReport(estimate=4.0, stderr=0.4, samples=20, seed=0)
    ratio = ratio_report(num, den, 0)
    assert ratio.estimate == 0.5
    assert ratio.stderr == pytest.approx(0.5 * np.sqrt(0.02))
    assert ratio.samples == 10


def test_experiment_config_validation():
    """Test config invariants on samples, eps and ball placement."""
    ExperimentConfig(eps=[0.1], z=[(0.5, 0.0)])
    with pytest.raises(ValidationError):
        ExperimentConfig(samples=0)
    with pytest.raises(ValidationError):
        ExperimentConfig(eps=[1.5])
    with pytest.raises(ValidationError):
        ExperimentConfig(eps=[0.3], z=[(0.8, 0.0)])


@pytest.mark.slow
def test_growth_exponent_gate():
    """Test the fitted slope over n = 16..256 lies in [1.18, 1.32]."""
    n_list = [16, 32, 64, 128, 256]
    runner = ReplicaRunner()
    reports = [estimate_mn(n, 10000, 11, runner) for n in n_list]
    fit = fit_growth_exponent(n_list, reports)
    assert 1.18 <= fit.slope <= 1.32


@pytest.mark.slow
def test_tightness_gate():
    """Test upper quantiles of M_n / E^[M_n] vary by less than 15% across n."""
    table = tightness_table([32, 64, 128], 10000, 12)
    spread = table[table['n'] == -1].iloc[0]
    assert spread['q0.9'] < 0.15
    assert spread['q0.99'] < 0.15


if __name__ == '__main__':
    pytest.main([__file__, '-v'])

"""
Tests for the domain Markov chi-square test.
"""

import pytest

from lerw_lab.core.errors import PrefixTooRare
from lerw_lab.core.lattice import DomainSpec, grid_approximation
from lerw_lab.experiments.markov import domain_markov_test, most_common_prefix


@pytest.fixture
def square():
    """Side-4 square at unit scale: a 5 x 5 block of vertices."""
    return grid_approximation(DomainSpec(kind='square', side=4.0), 1)


def test_most_common_prefix_breaks_ties_lexicographically():
    """Test equal counts go to the smallest prefix."""
    paths = [((2, 0), (1, 0), (0, 0)), ((0, 2), (0, 1), (0, 0))]
    assert most_common_prefix(paths, 1) == (((0, 2), (0, 1)), 1)
    paths.append(((2, 0), (1, 0), (1, 1), (0, 1), (0, 0)))
    assert most_common_prefix(paths, 1) == (((2, 0), (1, 0)), 2)


def test_most_common_prefix_needs_long_paths():
    """Test prefixes reaching the origin are not counted."""
    with pytest.raises(PrefixTooRare):
        most_common_prefix([((1, 0), (0, 0))], 1)


def test_rare_prefix(square):
    """Test a minimum prefix count above the sample size is refused."""
    with pytest.raises(PrefixTooRare):
        domain_markov_test(square, 1, 50, 0, min_prefix=1000)


def test_bad_arguments(square):
    """Test negative prefix lengths and unknown comparators."""
    with pytest.raises(ValueError):
        domain_markov_test(square, -1, 10, 0)
    with pytest.raises(ValueError):
        domain_markov_test(square, 1, 10, 0, comparator='mirror')


def test_zero_prefix(square):
    """Test j = 0 conditions only on the exit point."""
    result = domain_markov_test(square, 0, 2000, 1, min_prefix=50)
    assert len(result.prefix) == 1
    assert 0.0 <= result.p_value <= 1.0


def test_slit_comparator_agrees(square):
    """Test remainders after a one-step prefix match LERW in the slit domain."""
    result = domain_markov_test(square, 1, 6000, 2, min_prefix=200)
    assert result.prefix_count >= 200
    assert result.categories['conditioned'].sum() == result.prefix_count
    assert result.categories['comparator'].sum() == result.prefix_count
    assert result.p_value > 0.01


def test_fresh_comparator_is_rejected(square):
    """Test unconditioned draws are told apart from conditioned remainders."""
    result = domain_markov_test(square, 1, 3000, 3, comparator='fresh', min_prefix=100)
    assert result.p_value < 0.01


def test_to_row(square):
    """Test the CSV row layout."""
    row = domain_markov_test(square, 1, 1000, 4, min_prefix=20).to_row()
    assert set(row) == {'j', 'comparator', 'prefix', 'prefix_count', 'categories', 'statistic',
                        'dof', 'p_value', 'count', 'seed'}
    assert row['comparator'] == 'slit'
    assert row['count'] == 1000


@pytest.mark.slow
def test_slit_comparator_large():
    """Test the domain Markov property at j = 2 with 10^5 draws."""
    dom = grid_approximation(DomainSpec(kind='square', side=4.0), 1)
    assert domain_markov_test(dom, 2, 100000, 5).p_value > 0.01


if __name__ == '__main__':
    pytest.main([__file__, '-v'])

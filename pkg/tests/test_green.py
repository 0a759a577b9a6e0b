"""
Tests for the SLE Green's function and Riemann sums.
"""

import math

import numpy as np
import pytest

from lerw_lab.core.errors import PreconditionViolation, SingularAtOrigin
from lerw_lab.core.green import (
    Annulus, Ball, ConformalMap, SleParams, edge_midpoints, green_disk, green_domain,
    origin_cell_mass_bound, radial_integral, riemann_sum,
)
from lerw_lab.core.lattice import open_ball_domain

SLE2 = SleParams(2.0)


def test_params_dimension():
    """Test d = 1 + kappa/8 and the admissible range."""
    assert SLE2.dimension == 1.25
    assert SleParams(4.0).dimension == 1.5
    for kappa in (0.0, 4.5):
        with pytest.raises(ValueError):
            SleParams(kappa)


def test_green_disk_values():
    """Test direct evaluations of |z|^(d-2)."""
    assert green_disk(1.0, SLE2) == pytest.approx(1.0)
    assert green_disk(1j, SLE2) == pytest.approx(1.0)
    assert green_disk(0.5, SLE2) == pytest.approx(1.6817928, abs=1e-7)
    assert green_disk(0.25, SleParams(4.0)) == pytest.approx(2.0)


def test_green_disk_errors():
    """Test the origin and points outside the disk are refused."""
    with pytest.raises(SingularAtOrigin):
        green_disk(0j, SLE2)
    with pytest.raises(PreconditionViolation):
        green_disk(1.5, SLE2)


def test_green_disk_is_radial_and_decreasing():
    """Test radial symmetry and strict decrease in |z|."""
    r = np.linspace(0.05, 1.0, 40)
    values = green_disk(r, SLE2)
    assert np.all(np.diff(values) < 0)
    rotated = green_disk(r * np.exp(0.7j), SLE2)
    assert np.allclose(rotated, values)


def test_green_domain_identity_is_exact():
    """Test the identity map reproduces the disk formula."""
    z = np.array([0.3, -0.2 + 0.5j, 0.9j])
    assert np.array_equal(green_domain(z, ConformalMap.identity(), SLE2), green_disk(z, SLE2))


@pytest.mark.parametrize("radius", [0.5, 2.0, 10.0])
def test_green_domain_scaling_is_scale_free(radius):
    """Test the scaled disk gives |z|^(-3/4) whatever its radius."""
    z = 0.4 * radius * np.exp(0.3j)
    value = green_domain(z, ConformalMap.scaling(radius), SLE2)
    assert value == pytest.approx(abs(z) ** -0.75)


def test_green_domain_rotation_invariant():
    """Test rotations leave the Green's function unchanged."""
    z = 0.3 + 0.4j
    assert green_domain(z, ConformalMap.rotation(1.1), SLE2) == pytest.approx(green_disk(z, SLE2))


def test_green_domain_outside_domain():
    """Test a point outside the mapped domain is refused."""
    with pytest.raises(PreconditionViolation):
        green_domain(3.0, ConformalMap.scaling(2.0), SLE2)
    with pytest.raises(SingularAtOrigin):
        green_domain(0j, ConformalMap.scaling(2.0), SLE2)


def test_riemann_sum_of_one_is_area():
    """Test the edge count times 1/(2n^2) approximates the annulus area."""
    dom = open_ball_domain(64)
    area = riemann_sum(lambda z: np.ones(len(z)), dom, Annulus(0.3, 0.7))
    assert area == pytest.approx(math.pi * (0.49 - 0.09), rel=0.02)


def test_riemann_sum_of_green_function():
    """Test the sum of |z|^(-3/4) against the closed-form radial integral."""
    dom = open_ball_domain(128)
    value = riemann_sum(lambda z: green_disk(z, SLE2), dom, Annulus(0.2, 0.8))
    exact = 2 * math.pi * 0.8 * (0.8 ** 1.25 - 0.2 ** 1.25)
    assert radial_integral(0.2, 0.8, SLE2) == pytest.approx(exact)
    assert value == pytest.approx(exact, rel=0.02)


def test_riemann_sum_error_shrinks_with_n():
    """Test the total error over several annuli drops from n=32 to n=128."""
    annuli = [(0.2, 0.4), (0.3, 0.7), (0.5, 0.9), (0.25, 0.6), (0.1, 0.5)]

    def total_error(n):
        dom = open_ball_domain(n)
        return sum(abs(riemann_sum(lambda z: green_disk(z, SLE2), dom, Annulus(a, b))
                       - radial_integral(a, b, SLE2)) for a, b in annuli)

    assert total_error(128) < total_error(32)


def test_riemann_sum_excludes_origin_cell():
    """Test regions containing 0 drop the origin edges and stay close to the integral."""
    n = 64
    dom = open_ball_domain(n)
    value = riemann_sum(lambda z: green_disk(z, SLE2), dom, Ball(0j, 0.5))
    exact = radial_integral(0.0, 0.5, SLE2)
    assert np.isfinite(value)
    assert value == pytest.approx(exact, rel=0.05)
    assert 0 < origin_cell_mass_bound(n, SLE2) < 0.05 * exact


def test_edge_midpoints_are_half_integers():
    """Test midpoints sit on the half-lattice at scale n."""
    dom = open_ball_domain(4)
    z = edge_midpoints(dom) * 8
    assert np.allclose(z.real, np.round(z.real))
    assert np.all((np.round(z.real) + np.round(z.imag)) % 2 == 1)


def test_annulus_validation():
    """Test annuli need 0 <= inner < outer."""
    with pytest.raises(ValueError):
        Annulus(0.5, 0.5)
    assert Annulus(0.0, 0.3).contains_origin
    assert not Ball(0.5, 0.2).contains_origin


if __name__ == '__main__':
    pytest.main([__file__, '-v'])

"""
Tests for random walks and loop-erasure.
"""

from collections import Counter

import numpy as np
import pytest
from hypothesis import given, settings, strategies as st
from scipy import stats

from lerw_lab.core.config import LabSettings
from lerw_lab.core.errors import PreconditionViolation, StepCapExceeded
from lerw_lab.core.lattice import DomainSpec, GridDomain, grid_approximation, open_ball_domain
from lerw_lab.core.rng import RngStream
from lerw_lab.core import walk
from lerw_lab.core.walk import (
    LatticePath, lerw_in_slit_domain, loop_erase, reverse_loop_erase, sample_lerw,
    sample_srw_in_domain, sample_srw_to_radius,
)

MOVES = ((1, 0), (-1, 0), (0, 1), (0, -1))


def literal_loop_erase(points):
    """LE(S) by the s_i recursion: s_0 = max{j : S(j) = S(0)}, s_{i+1} = max{j : S(j) = S(s_i + 1)}."""
    last = len(points) - 1
    s = max(j for j, p in enumerate(points) if p == points[0])
    out = [points[s]]
    while s < last:
        target = points[s + 1]
        s = max(j for j, p in enumerate(points) if p == target)
        out.append(points[s])
    return out


def path_from_moves(moves):
    pts = [(0, 0)]
    for m in moves:
        dx, dy = MOVES[m]
        pts.append((pts[-1][0] + dx, pts[-1][1] + dy))
    return pts


def exact_mean_exit_time(dom):
    """Mean exit time from the origin by the discrete Dirichlet problem on the domain."""
    verts = sorted(dom.vertices)
    index = {v: i for i, v in enumerate(verts)}
    a = np.eye(len(verts))
    for v, i in index.items():
        for dx, dy in MOVES:
            j = index.get((v.x + dx, v.y + dy))
            if j is not None:
                a[i, j] -= 0.25
    h = np.linalg.solve(a, np.ones(len(verts)))
    return h[index[(0, 0)]]


def green_diagonal(dom, removed, point):
    """Expected visits to ``point`` from ``point`` for the walk killed on leaving dom minus removed."""
    verts = sorted(v for v in dom.vertices if v not in removed)
    index = {v: i for i, v in enumerate(verts)}
    a = np.eye(len(verts))
    for v, i in index.items():
        for dx, dy in MOVES:
            j = index.get((v.x + dx, v.y + dy))
            if j is not None:
                a[i, j] -= 0.25
    k = index[point]
    return np.linalg.inv(a)[k, k]


def exact_lerw_length_law(dom):
    """
    Law of the loop-erased length: sum of 4^-k prod_j G_{A_j}(w_j, w_j) over
    self-avoiding paths w from the origin to the boundary, A_j = dom minus w_0..w_{j-1}.
    """
    law = Counter()

    def extend(path, weight):
        tip = path[-1]
        weight *= green_diagonal(dom, frozenset(path[:-1]), tip) / 4
        for dx, dy in MOVES:
            q = (tip[0] + dx, tip[1] + dy)
            if q in path:
                continue
            if dom.contains(q):
                extend(path + [q], weight)
            else:
                law[len(path)] += weight

    extend([(0, 0)], 1.0)
    return law


def test_lattice_path_requires_neighbour_steps():
    """Test paths with jumps are refused."""
    with pytest.raises(ValueError):
        LatticePath.from_points([(0, 0), (2, 0)])


def test_loop_erase_hand_cases():
    """Test loop-erasure on hand-executed paths."""
    first = LatticePath.from_points([(0, 0), (1, 0), (0, 0), (0, 1)])
    assert loop_erase(first).to_list() == [(0, 0), (0, 1)]

    second = LatticePath.from_points([(0, 0), (1, 0), (1, 1), (0, 1), (0, 0), (0, 1)])
    assert loop_erase(second).to_list() == [(0, 0), (0, 1)]


def test_reverse_loop_erase_differs_from_loop_erase():
    """Test a path where LE and RLE disagree."""
    path = LatticePath.from_points([(0, 0), (1, 0), (1, 1), (0, 1), (0, 0), (0, 1)])
    assert reverse_loop_erase(path).to_list() == [(0, 0), (1, 0), (1, 1), (0, 1)]
    assert reverse_loop_erase(path) != loop_erase(path)


def test_self_avoiding_path_is_unchanged():
    """Test erasure leaves a self-avoiding path alone."""
    path = LatticePath.from_points([(0, 0), (1, 0), (1, 1), (2, 1)])
    assert loop_erase(path) == path
    assert reverse_loop_erase(path) == path


@settings(max_examples=200, deadline=None)
@given(st.lists(st.integers(min_value=0, max_value=3), max_size=40))
def test_loop_erase_matches_literal_recursion(moves):
    """Test the last-visit implementation against the literal recursion."""
    pts = path_from_moves(moves)
    erased = loop_erase(LatticePath.from_points(pts))
    assert erased.to_list() == literal_loop_erase(pts)
    assert erased.is_self_avoiding()
    assert erased.start == pts[0] and erased.end == pts[-1]
    assert set(erased.to_list()) <= set(pts)


@settings(max_examples=100, deadline=None)
@given(st.lists(st.integers(min_value=0, max_value=3), max_size=40))
def test_reverse_loop_erase_properties(moves):
    """Test RLE keeps the endpoints and is self-avoiding."""
    pts = path_from_moves(moves)
    erased = reverse_loop_erase(LatticePath.from_points(pts))
    assert erased.is_self_avoiding()
    assert erased.start == pts[0] and erased.end == pts[-1]


@settings(max_examples=100, deadline=None)
@given(st.lists(st.integers(min_value=0, max_value=3), max_size=40))
def test_loop_erasure_is_idempotent(moves):
    """Test erasing an erased path changes nothing, for LE and RLE."""
    path = LatticePath.from_points(path_from_moves(moves))
    for erase in (loop_erase, reverse_loop_erase):
        erased = erase(path)
        assert erase(erased) == erased


def test_srw_to_radius_one():
    """Test the walk to radius 1 takes exactly one step."""
    ends = Counter()
    for i in range(400):
        path = sample_srw_to_radius(1, RngStream(3, i))
        assert path.length == 1
        ends[path.end] += 1
    assert set(ends) == {(1, 0), (-1, 0), (0, 1), (0, -1)}


def test_srw_stops_at_first_exit():
    """Test every point before the last is inside and the last is outside."""
    for i in range(50):
        pts = sample_srw_to_radius(5, RngStream(11, i)).points
        r2 = (pts ** 2).sum(axis=1)
        assert tuple(pts[0]) == (0, 0)
        assert np.all(r2[:-1] < 25)
        assert r2[-1] >= 25


def test_srw_exit_time_matches_dirichlet_solution():
    """Test the mean exit time from radius 2 against the linear solve."""
    taus = np.array([sample_srw_to_radius(2, RngStream(5, i)).length for i in range(5000)])
    exact = exact_mean_exit_time(open_ball_domain(2))
    stderr = taus.std(ddof=1) / np.sqrt(len(taus))
    assert abs(taus.mean() - exact) < 4 * stderr


def test_srw_in_single_vertex_domain():
    """Test a one-vertex domain is left in one step."""
    dom = GridDomain.from_vertices({(0, 0)})
    path = sample_srw_in_domain(dom, RngStream(0, 0))
    assert path.length == 1
    assert dom.on_boundary(path.end)


def test_square_exit_is_symmetric():
    """Test exits through the four mid-edge points of the square are equally likely."""
    dom = grid_approximation(DomainSpec(kind='square', side=2.0), 1)
    counts = Counter(sample_srw_in_domain(dom, RngStream(9, i)).end for i in range(4000))
    assert set(counts) <= set(dom.boundary)
    mids = [counts[p] for p in ((2, 0), (-2, 0), (0, 2), (0, -2))]
    assert stats.chisquare(mids).pvalue > 1e-3


def test_square_exit_time_matches_dirichlet_solution():
    """Test the mean exit time from the nine-vertex square against the linear solve."""
    dom = grid_approximation(DomainSpec(kind='square', side=2.0), 1)
    assert len(dom) == 9
    taus = np.array([sample_srw_in_domain(dom, RngStream(12, i)).length for i in range(5000)])
    exact = exact_mean_exit_time(dom)
    stderr = taus.std(ddof=1) / np.sqrt(len(taus))
    assert abs(taus.mean() - exact) < 4 * stderr


def test_walk_needs_origin_in_domain():
    """Test walking from outside the domain is refused."""
    dom = GridDomain.from_vertices([(1, 0), (2, 0)])
    with pytest.raises(PreconditionViolation):
        sample_srw_in_domain(dom, RngStream(0))


def test_step_cap(monkeypatch):
    """Test the hard step cap surfaces as a defect."""
    monkeypatch.setattr(walk, 'get_settings', lambda: LabSettings(step_cap=100))
    with pytest.raises(StepCapExceeded):
        sample_srw_to_radius(500, RngStream(0))


def test_lerw_radius_one_has_one_step():
    """Test M_1 = 1."""
    for i in range(100):
        sample = sample_lerw(1, RngStream(1, i))
        assert sample.steps == 1
        assert sample.path.end == (0, 0)


def test_lerw_is_erased_reversed_walk():
    """Test the backtracking kernel agrees with erasing the reversed walk."""
    for i in range(30):
        sample = sample_lerw(8, RngStream(2, i), return_walk=True)
        assert sample.path == loop_erase(sample.walk.reversed())
        assert sample.srw_steps == sample.walk.length


def test_lerw_sample_invariants():
    """Test X runs from the exit point to the origin without self-intersections."""
    dom = open_ball_domain(10)
    for i in range(30):
        sample = sample_lerw(10, RngStream(4, i))
        path = sample.path
        assert path.is_self_avoiding()
        assert path.end == (0, 0)
        assert dom.on_boundary(path.start)
        assert all(dom.contains(p) for p in path.to_list()[1:])
        assert sample.steps == path.length
        assert sample.seed == 4 and sample.stream_index == i


def _erasure_counts(samples, seed, reverse):
    dom = open_ball_domain(2)
    erase = reverse_loop_erase if reverse else loop_erase
    return Counter(tuple(map(tuple, erase(sample_srw_in_domain(dom, RngStream(seed, i))).to_list()))
                   for i in range(samples))


def _pooled_table(a, b, min_count=10):
    rows, pooled = [], [0, 0]
    for key in set(a) | set(b):
        if a[key] + b[key] < min_count:
            pooled[0] += a[key]
            pooled[1] += b[key]
        else:
            rows.append([a[key], b[key]])
    if sum(pooled):
        rows.append(pooled)
    return np.array(rows)


def test_loop_erasure_and_reverse_erasure_share_a_law():
    """Test LE and RLE of independent walks in the radius-2 ball have equal path frequencies."""
    table = _pooled_table(_erasure_counts(4000, 20, False), _erasure_counts(4000, 21, True))
    assert stats.chi2_contingency(table.T, correction=False)[1] > 0.01


@pytest.mark.slow
def test_loop_erasure_law_large():
    """Test the LE / RLE agreement with 10^5 walks each."""
    table = _pooled_table(_erasure_counts(100000, 22, False), _erasure_counts(100000, 23, True))
    assert stats.chi2_contingency(table.T, correction=False)[1] > 0.01


def test_lerw_is_reproducible():
    """Test a stream always yields the same sample."""
    a = sample_lerw(12, RngStream(7, 3))
    b = sample_lerw(12, RngStream(7, 3))
    assert a.path == b.path


def test_lerw_length_law_sums_to_one():
    """Test the path-sum law of the erased length is a probability law, with M_1 = 1."""
    law = exact_lerw_length_law(open_ball_domain(2))
    assert sum(law.values()) == pytest.approx(1.0)
    assert min(law) == 2
    assert max(law) <= len(open_ball_domain(2))
    assert exact_lerw_length_law(open_ball_domain(1)) == {1: pytest.approx(1.0)}


def test_lerw_radius_two_mean():
    """Test E[M_2] and the law of M_2 against the exact path sum."""
    law = exact_lerw_length_law(open_ball_domain(2))
    exact = sum(k * p for k, p in law.items())
    steps = np.array([sample_lerw(2, RngStream(8, i)).steps for i in range(2000)])
    stderr = steps.std(ddof=1) / np.sqrt(len(steps))
    assert abs(steps.mean() - exact) < 3 * stderr

    lengths = sorted(law)
    observed = np.array([np.sum(steps == k) for k in lengths])
    expected = np.array([law[k] for k in lengths]) * len(steps)
    common = expected >= 5
    if not common.all():
        observed = np.append(observed[common], observed[~common].sum())
        expected = np.append(expected[common], expected[~common].sum())
    assert stats.chisquare(observed, expected).pvalue > 1e-3


def test_slit_domain_walk_starts_at_tip():
    """Test the slit-domain LERW starts at the prefix tip and avoids the prefix."""
    dom = open_ball_domain(4)
    prefix = [(4, 0), (3, 0), (2, 0)]
    sample = lerw_in_slit_domain(dom, prefix, RngStream(6, 0), slit='full')
    pts = sample.path.to_list()
    assert pts[0] == (2, 0)
    assert pts[-1] == (0, 0)
    assert (3, 0) not in pts


def test_slit_domain_rejects_bad_mode():
    """Test an unknown slit mode is refused."""
    with pytest.raises(ValueError):
        lerw_in_slit_domain(open_ball_domain(3), [(3, 0), (2, 0)], RngStream(0), slit='half')


if __name__ == '__main__':
    pytest.main([__file__, '-v'])

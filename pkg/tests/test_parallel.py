"""
Tests for random streams and the replica runner.
"""

import numpy as np
import pytest

from lerw_lab.core.parallel import ReplicaRunner
from lerw_lab.core.rng import RngStream


def draw(stream, size):
    return stream.generator().integers(0, 1 << 30, size=size).tolist()


def chunk_sum(seed, start, stop, size):
    return sum(sum(draw(RngStream(seed, i), size)) for i in range(start, stop))


def test_stream_is_reproducible():
    """Test a stream restarts from the same state every time."""
    assert draw(RngStream(5, 2), 8) == draw(RngStream(5, 2), 8)


def test_streams_are_distinct():
    """Test different indices, seeds and substreams give different draws."""
    base = draw(RngStream(5, 2), 8)
    assert draw(RngStream(5, 3), 8) != base
    assert draw(RngStream(6, 2), 8) != base
    assert draw(RngStream(5, 2).substream(0), 8) != base
    assert draw(RngStream(5, 2).substream(0), 8) != draw(RngStream(5, 2).substream(1), 8)


def test_stream_rejects_negative_seed():
    """Test seeds and indices must be nonnegative."""
    with pytest.raises(ValueError):
        RngStream(-1)
    with pytest.raises(ValueError):
        RngStream(0, -1)


def test_map_is_ordered_by_replica():
    """Test results come back in replica order with the replica's own stream."""
    runner = ReplicaRunner(workers=1, chunk_size=3)
    results = runner.map(draw, 9, 10, (4,))
    assert results == [draw(RngStream(9, i), 4) for i in range(10)]


def test_map_offset():
    """Test the offset shifts the stream indices."""
    runner = ReplicaRunner(workers=1)
    assert runner.map(draw, 9, 2, (4,), offset=5) == [draw(RngStream(9, i), 4) for i in (5, 6)]


def test_map_with_no_replicas():
    """Test an empty run returns no results."""
    assert ReplicaRunner(workers=1).map(draw, 0, 0, (1,)) == []


def test_worker_count_does_not_change_results():
    """Test one and two workers give identical results."""
    serial = ReplicaRunner(workers=1, chunk_size=4).map(draw, 3, 17, (5,))
    pooled = ReplicaRunner(workers=2, chunk_size=4).map(draw, 3, 17, (5,))
    assert serial == pooled


def test_map_chunks_reduces_per_chunk():
    """Test chunk partials add up to the replica total for any worker count."""
    total = sum(sum(d) for d in ReplicaRunner(workers=1).map(draw, 1, 20, (3,)))
    for workers in (1, 2):
        partials = ReplicaRunner(workers=workers, chunk_size=6).map_chunks(chunk_sum, 1, 20, (3,))
        assert len(partials) == 4
        assert sum(partials) == total


def test_generator_is_philox():
    """Test streams use a counter-based bit generator."""
    assert isinstance(RngStream(0).generator().bit_generator, np.random.Philox)


if __name__ == '__main__':
    pytest.main([__file__, '-v'])

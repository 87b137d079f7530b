#!/usr/bin/env python3
"""
Tests for the annular partition, orbit classification and fast-escape checks
"""

import math
import os
import sys

import numpy as np
import pytest

sys.path.insert(0, os.path.abspath(os.path.dirname(__file__)))

from src.function_model import LogPoint, parse_map
from src.itinerary import EssentialItinerary
from src.partition import (
    VERDICTS,
    annulus_index,
    annulus_indices,
    base_radius_consistency,
    build_partition,
    classify_orbit,
    classify_orbits,
    fast_escape_test,
    find_fast_escape_shift,
    growth_constraint_holds,
    iterate_orbits,
    padded_prefix,
)
from src.utils import InvalidParameter, NotExpanding, SplitMix64


@pytest.fixture(scope="module")
def test_map():
    return parse_map("n=0; g=1z; h=-1w")


@pytest.fixture(scope="module")
def partition(test_map):
    return build_partition(test_map, 1.3, -1.3, 3)


OUTWARD = EssentialItinerary.parse("(i)")


# ============================================================================
# Partition
# ============================================================================

def test_partition_boundaries(partition):
    assert partition.upper[0] == 1.3
    assert partition.upper[1] == pytest.approx(2.0 * math.sinh(1.3), abs=1e-9)
    assert partition.upper[2] == pytest.approx(2.0 * math.sinh(partition.upper[1]), rel=1e-9)
    assert partition.depth_plus == 3 and partition.depth_minus == 3
    assert partition.lower == pytest.approx([-x for x in partition.upper], rel=1e-9)
    assert partition.upper_truncation == 'requested_depth'


def test_locate_uses_half_open_bands(partition):
    assert partition.locate(0.5) == (0, False)
    assert partition.locate(1.3) == (1, False)
    assert partition.locate(2.0) == (1, False)
    assert partition.locate(partition.upper[1]) == (2, False)
    assert partition.locate(-1.3) == (-1, False)
    assert partition.locate(-2.0) == (-1, False)


def test_locate_saturates_beyond_depth(partition):
    assert partition.locate(1e15) == (4, True)
    assert partition.locate(-1e15) == (-4, True)


def test_band_bounds(partition):
    assert partition.band(0) == (-1.3, 1.3)
    low, high = partition.band(1)
    assert low == 1.3 and high == partition.upper[1]
    low, high = partition.band(-2)
    assert low == partition.lower[2] and high == partition.lower[1]
    with pytest.raises(InvalidParameter):
        partition.band(5)


def test_vectorized_indices_match_locate(partition):
    values = np.array([-1e15, -40.0, -3.0, -1.3, -0.2, 0.0, 1.3, 2.5, 30.0, 1e13, 1e15])
    expected = [annulus_index(partition, float(L)) for L in values]
    assert annulus_indices(partition, values).tolist() == expected


def test_partition_requires_unit_circle_between_thresholds(test_map):
    with pytest.raises(InvalidParameter):
        build_partition(test_map, 1.3, 0.5, 3)
    with pytest.raises(InvalidParameter):
        build_partition(test_map, 1.3, -1.3, 0)


def test_partition_rejects_contracting_map():
    weak = parse_map("n=0; g=0.01z; h=-0.01w")
    with pytest.raises(NotExpanding):
        build_partition(weak, 0.5, -0.5, 2)


def test_partition_dict(partition):
    data = partition.to_dict()
    assert data['log_R_plus'] == 1.3
    assert len(data['upper']) == 4


@pytest.mark.parametrize("indices,expected", [
    ([1, 2, 3], True),
    ([1, 3], False),
    ([-1, -3], False),
    ([2, 1, 0, -1, -2], True),
    ([3, 1, 2], True),
])
def test_growth_constraint(indices, expected):
    assert growth_constraint_holds(indices) is expected


# ============================================================================
# Classification
# ============================================================================

def test_escape_to_infinity(test_map):
    record = classify_orbit(test_map, LogPoint(3.0, 0.0), 64)
    assert record.verdict == 'escapes_to_infinity'
    assert record.horizon_hit
    assert record.exit_reason == 'horizon'
    assert record.essential_prefix() == "iii"
    assert record.essential_prefix(6) == "iiiiii"


def test_escape_to_zero(test_map):
    record = classify_orbit(test_map, LogPoint(-3.0, 0.0), 64)
    assert record.verdict == 'escapes_to_zero'
    assert record.essential_prefix(5) == "00000"


def test_escape_mixed(test_map):
    # the negative real axis is sent towards 0 in one step
    record = classify_orbit(test_map, LogPoint(3.0, math.pi), 64)
    assert record.verdict == 'escapes_mixed'
    assert record.essential_prefix() == "i00"
    assert record.essential_prefix(5) == "i00--"


def test_fixed_point_is_bounded(test_map):
    record = classify_orbit(test_map, LogPoint(0.0, 0.0), 10)
    assert record.verdict == 'bounded_so_far'
    assert record.checked_depth == 10
    assert record.exit_reason == 'budget'
    assert not record.horizon_hit
    assert record.essential_prefix(6) == "000000"


def test_annular_record(test_map, partition):
    record = classify_orbit(test_map, LogPoint(1.5, 0.0), 64, partition=partition)
    assert record.annular_indices[:4] == [1, 2, 3, 4]
    assert record.annular_prefix().startswith("1;2;3;4")


def test_batch_matches_single(test_map):
    points = [LogPoint(3.0, 0.0), LogPoint(-3.0, 0.0), LogPoint(0.0, 0.0), LogPoint(0.4, 1.0)]
    batch = classify_orbits(test_map, points, 32)
    for point, record in zip(points, batch):
        single = classify_orbit(test_map, point, 32)
        assert record.verdict == single.verdict
        assert record.essential_prefix() == single.essential_prefix()


def test_empty_batch(test_map):
    assert classify_orbits(test_map, [], 8) == []


def test_iterate_orbits_shapes(test_map):
    batch = iterate_orbits(test_map, [3.0, 0.0], [0.0, 0.0], 5)
    assert batch.L.shape == (6, 2)
    assert np.isnan(batch.L[5, 0])
    assert batch.lengths.tolist() == [3, 6]
    assert [VERDICTS[v] for v in batch.verdicts] == ['escapes_to_infinity', 'bounded_so_far']


@pytest.mark.parametrize("kwargs", [{'budget': 0}, {'budget': 4, 'theta_escape': 0.0}, {'budget': 4, 'trailing_run': 0}])
def test_iterate_orbits_rejects(test_map, kwargs):
    with pytest.raises(InvalidParameter):
        iterate_orbits(test_map, [0.0], [0.0], **kwargs)


def test_padded_prefix():
    assert padded_prefix("0i", 'escapes_to_infinity', 4) == "0iii"
    assert padded_prefix("i0", 'escapes_to_zero', 4) == "i000"
    assert padded_prefix("0i", 'bounded_so_far', 4) == "0i--"
    assert padded_prefix("0i0i0", 'undetermined', 3) == "0i0"


# ============================================================================
# Fast escape
# ============================================================================

def test_fast_escape_on_positive_axis(test_map):
    result = fast_escape_test(test_map, LogPoint(1.5, 0.0), OUTWARD, 1.3, 0, 3)
    assert result.holds_on_prefix
    assert result.checked_depth == 3
    assert all(step.holds and step.symbol == 'i' for step in result.trace)


def test_fast_escape_fails_on_imaginary_axis(test_map):
    result = fast_escape_test(test_map, LogPoint(1.5, math.pi / 2), OUTWARD, 1.3, 0, 3)
    assert not result.holds_on_prefix
    assert result.checked_depth == 1


def test_fast_escape_rejects_arguments(test_map):
    with pytest.raises(InvalidParameter):
        fast_escape_test(test_map, LogPoint(1.5, 0.0), OUTWARD, 1.3, 0, 0)
    with pytest.raises(InvalidParameter):
        fast_escape_test(test_map, LogPoint(1.5, 0.0), OUTWARD, 1.3, -1, 2)


def test_find_fast_escape_shift(test_map):
    found = find_fast_escape_shift(test_map, LogPoint(0.5, 0.0), OUTWARD, 1.3, 3)
    assert found is not None
    ell, k, result = found
    assert (ell, k) == (2, 0)
    assert result.holds_on_prefix


def test_no_shift_for_bounded_orbit(test_map):
    assert find_fast_escape_shift(test_map, LogPoint(0.0, 0.0), OUTWARD, 1.3, 2, max_shift=2) is None


def test_consistency_between_base_radii(test_map):
    points = [LogPoint(L, 0.0) for L in (0.5, 1.5, 2.5, 3.0)]
    report = base_radius_consistency(test_map, OUTWARD, 1.3, 2.0, points, 0, 2)
    assert report.tested == 4
    assert report.passed_at_larger == 2
    assert report.consistent


def test_consistency_over_seeded_points_at_doubled_radius(test_map):
    rng = SplitMix64(2024)
    points = [LogPoint(4.0 * rng.uniform(), -math.pi + 2.0 * math.pi * rng.uniform()) for _ in range(100)]
    report = base_radius_consistency(test_map, OUTWARD, 1.3, 1.3 + math.log(2.0), points, 0, 2)
    assert report.tested == 100
    assert report.consistent
    assert report.counterexamples == []


def test_consistency_needs_ordered_radii(test_map):
    with pytest.raises(InvalidParameter):
        base_radius_consistency(test_map, OUTWARD, 2.0, 1.3, [], 0, 2)

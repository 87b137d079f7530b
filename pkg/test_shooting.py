#!/usr/bin/env python3
"""
Tests for subdivision shooting
"""

import os
import sys

import pytest

sys.path.insert(0, os.path.abspath(os.path.dirname(__file__)))

from src.function_model import evaluate
from src.shooting import realize_orbit
from src.utils import InvalidParameter, NoCellSurvives


def test_single_band_returns_core(exp_map, family):
    realized = realize_orbit(exp_map, family.annuli, [2])
    assert realized.verified_depth == 0
    assert realized.point.L == family.get(2).core_log_r


def test_fast_itinerary(exp_map, family):
    realized = realize_orbit(exp_map, family.annuli, [1, 2])
    assert realized.verified_depth == 1
    assert family.get(2).contains(evaluate(exp_map, realized.point).L)
    assert realized.essential_symbols == "ii"


def test_bounded_itinerary(exp_map, family):
    itinerary = [1, 2, 1, 2, 1]
    realized = realize_orbit(exp_map, family.annuli, itinerary)
    assert realized.verified_depth == 4
    assert not realized.truncated
    assert realized.min_margin > 0
    for point, s in zip(realized.orbit, itinerary):
        assert family.get(s).inner_log_r < point.L < family.get(s).outer_log_r
    assert len(realized.cell_trace) == 4


def test_crossing_to_the_inner_side(exp_map, family):
    realized = realize_orbit(exp_map, family.annuli, [1, -1, 1])
    assert realized.essential_symbols == "i0i"


def test_result_is_reproducible(exp_map, family):
    first = realize_orbit(exp_map, family.annuli, [1, 2, 1])
    second = realize_orbit(exp_map, family.annuli, [1, 2, 1])
    assert first.to_dict() == second.to_dict()


def test_horizon_truncates_the_itinerary(exp_map, family):
    realized = realize_orbit(exp_map, family.annuli, [1, 2, 3, 2])
    assert realized.truncated
    assert realized.itinerary == [1, 2, 3]
    assert realized.verified_depth == 2


def test_band_dropped_at_horizon_truncates(exp_map, wide_family):
    assert 3 not in wide_family.annuli
    assert wide_family.dropped_at_horizon(3)
    realized = realize_orbit(exp_map, wide_family.annuli, [1, 2, 3])
    assert realized.truncated
    assert realized.itinerary == [1, 2]
    assert realized.verified_depth == 1
    assert wide_family.get(2).contains(evaluate(exp_map, realized.point).L)


def test_missing_band_before_the_horizon_is_rejected(exp_map, wide_family):
    with pytest.raises(InvalidParameter):
        realize_orbit(exp_map, wide_family.annuli, [3, 2])
    with pytest.raises(InvalidParameter):
        realize_orbit(exp_map, wide_family.annuli, [1, 3])


def test_beam_stays_within_its_width(exp_map, family):
    realized = realize_orbit(exp_map, family.annuli, [1, 2, 1, 2], max_cells=64)
    assert realized.verified_depth == 3
    for step in realized.cell_trace:
        assert step.passing >= 1
        assert 1 <= step.kept <= 64


def test_unreachable_band(exp_map, family):
    with pytest.raises(NoCellSurvives) as info:
        realize_orbit(exp_map, family.annuli, [1, 3])
    assert info.value.round_index == 1
    assert info.value.exit_code == 2


def test_uncertified_transition(exp_map, family):
    with pytest.raises(NoCellSurvives):
        realize_orbit(exp_map, family.annuli, [1, 2, 1], certified={(1, 2)})


@pytest.mark.parametrize("kwargs", [
    {'itinerary': []},
    {'itinerary': [1, 9]},
    {'itinerary': [1, 2], 'grid': 0},
    {'itinerary': [1, 2], 'margin': 1.5},
    {'itinerary': [1, 2], 'max_cells': 0},
])
def test_bad_arguments(exp_map, family, kwargs):
    with pytest.raises(InvalidParameter):
        realize_orbit(exp_map, family.annuli, **kwargs)

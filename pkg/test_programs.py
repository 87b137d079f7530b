#!/usr/bin/env python3
"""
Tests for itinerary programs
"""

import math
import os
import sys

import pytest

sys.path.insert(0, os.path.abspath(os.path.dirname(__file__)))

from src.itinerary import CoveredRange
from src.programs import (
    dwell_thresholds,
    first_time_above,
    itinerary_program,
    parse_program,
    slow_program,
)
from src.utils import InvalidParameter, ParseError, Unrealizable


# ============================================================================
# Slow programs
# ============================================================================

def test_first_time_above_linear():
    assert first_time_above(lambda t: float(t), 10.5) == 11
    assert first_time_above(lambda t: float(t), 10.5, start=20) == 20


def test_first_time_above_huge_threshold():
    # exact on Python integers well past 2**53
    assert first_time_above(lambda t: t, 10 ** 30) == 10 ** 30 + 1


def test_first_time_above_float_rate_near_overflow():
    found = first_time_above(lambda t: float(t), 1e308)
    assert found is not None
    assert float(found) > 1e308
    assert float(found - 1) <= 1e308


def test_first_time_above_treats_overflow_as_infinite():
    found = first_time_above(lambda t: float(t), sys.float_info.max)
    assert found is not None
    with pytest.raises(OverflowError):
        float(found)
    assert float(found - 1) == sys.float_info.max


def test_first_time_above_table():
    assert first_time_above([1.0, 2.0, 5.0, 9.0], 4.0) == 2
    assert first_time_above([1.0, 2.0], 4.0) is None


def test_first_time_above_never():
    assert first_time_above(lambda t: 0.0, 1.0) is None


def test_slow_program_dwell_counts():
    program = slow_program([10.5, 20.5], lambda t: float(t), dwell_cap=3)
    assert program.dwell_counts == [11, 10]
    assert program.prefix == [1, 1, 1, 2, 2, 2, 3]
    assert program.truncated
    assert program.generator_kind == 'slow'


def test_slow_program_minimum_dwell():
    program = slow_program([0.5, 0.7], lambda t: 100.0, dwell_cap=5)
    assert program.dwell_counts == [1, 1]
    assert program.prefix == [1, 2, 3]
    assert not program.truncated


def test_slow_program_infinite_threshold():
    program = slow_program([2.5, math.inf], lambda t: float(t))
    assert program.dwell_counts == [3]
    assert program.prefix[-1] == 2
    assert any("float range" in note for note in program.notes)


def test_slow_program_rejects_cap():
    with pytest.raises(InvalidParameter):
        slow_program([1.0], [2.0], dwell_cap=0)


def test_dwell_thresholds_from_family(exp_map, family):
    thresholds = dwell_thresholds(exp_map, family)
    assert len(thresholds) == 3
    # log M at the core of B_1 is the outer edge of B_2
    assert thresholds[0] == pytest.approx(family.get(2).outer_log_r, rel=1e-12)
    assert thresholds[2] == math.inf


def test_slow_program_at_base_radius(exp_map, family):
    program = slow_program(dwell_thresholds(exp_map, family), lambda t: float(t))
    assert program.dwell_counts[0] == 11


# ============================================================================
# Generators
# ============================================================================

def test_fast_program():
    assert itinerary_program('fast', {'start': 1, 'length': 4}).prefix == [1, 2, 3, 4]
    assert itinerary_program('fast', {'start': -2, 'length': 3}).prefix == [-2, -3, -4]
    with pytest.raises(InvalidParameter):
        itinerary_program('fast', {'start': 0})


def test_periodic_program():
    program = itinerary_program('periodic', {'word': [1, 2]})
    assert program.prefix == [] and program.cycle == [1, 2]
    assert program.expand(5) == [1, 2, 1, 2, 1]


def test_bounded_program_from_bits():
    program = itinerary_program('bounded', {'low': 1, 'length': 5, 'bits': [0, 1]})
    assert program.prefix == [1, 2, 1, 2, 1]


def test_bounded_program_from_seed_is_deterministic():
    first = itinerary_program('bounded', {'low': 2, 'length': 20, 'seed': 99})
    second = itinerary_program('bounded', {'low': 2, 'length': 20, 'seed': 99})
    assert first.prefix == second.prefix
    assert set(first.prefix) <= {2, 3}


def test_unbounded_nonescaping_program():
    program = itinerary_program('unbounded_nonescaping', {'climbs': 3})
    assert program.prefix == [1, 1, 2, 1, 2, 3]
    alternating = itinerary_program('unbounded_nonescaping', {'climbs': 2, 'side': 'alternate'})
    assert alternating.prefix == [1, -1, -2]


def test_mixed_program_is_positional():
    assert itinerary_program('mixed', {'length': 3}).prefix == [0, 1, 2]


def test_custom_program():
    program = itinerary_program('custom', {'prefix': [1], 'cycle': [2, 1]})
    assert program.transitions() == [(1, 2), (2, 1), (1, 2)]
    with pytest.raises(InvalidParameter):
        itinerary_program('custom', {})


def test_unknown_kind():
    with pytest.raises(InvalidParameter):
        itinerary_program('spiral')


def test_program_validated_against_coverage():
    coverage = {1: CoveredRange(1, -2, 2), 2: CoveredRange(2, -2, 2)}
    itinerary_program('fast', {'start': 1, 'length': 2}, coverage=coverage)
    with pytest.raises(Unrealizable):
        itinerary_program('fast', {'start': 1, 'length': 3}, coverage=coverage)


# ============================================================================
# Parsing
# ============================================================================

@pytest.mark.parametrize("text,kind,params", [
    ("1,2,3", 'custom', {'prefix': [1, 2, 3], 'cycle': None}),
    ("1;(2,3)", 'custom', {'prefix': [1], 'cycle': [2, 3]}),
    ("fast:1,5", 'fast', {'start': 1, 'length': 5}),
    ("periodic:2,3", 'periodic', {'word': [2, 3]}),
    ("bounded:1,12", 'bounded', {'low': 1, 'length': 12}),
    ("unbounded:4", 'unbounded_nonescaping', {'climbs': 4}),
    ("slow:3,5,40", 'slow', {'rate': [3.0, 5.0, 40.0]}),
])
def test_parse_program(text, kind, params):
    assert parse_program(text) == {'kind': kind, 'params': params}


def test_parse_linear_rate():
    parsed = parse_program("slow:linear")
    assert parsed['params']['rate'](7) == 7.0


@pytest.mark.parametrize("text", ["spiral:1", "fast:1,2,3", "fast:a", "slow:x"])
def test_parse_program_rejects(text):
    with pytest.raises(ParseError):
        parse_program(text)

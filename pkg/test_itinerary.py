#!/usr/bin/env python3
"""
Tests for essential and annular itineraries
"""

import os
import sys

import pytest

sys.path.insert(0, os.path.abspath(os.path.dirname(__file__)))

from src.itinerary import (
    AnnularItinerary,
    CoveredRange,
    EssentialItinerary,
    itinerary_equiv,
    symbol_of,
)
from src.utils import InvalidParameter, ParseError, Unrealizable


# ============================================================================
# Essential itineraries
# ============================================================================

def test_symbol_of_unit_circle_is_zero():
    assert symbol_of(0.0) == '0'
    assert symbol_of(1e-12) == 'i'
    assert symbol_of(-3.0) == '0'


def test_parse_prefix_and_cycle():
    e = EssentialItinerary.parse("0(i)")
    assert e.prefix == ('0',)
    assert e.cycle == ('i',)
    assert e.take(4) == "0iii"
    assert str(e) == "0(i)"


@pytest.mark.parametrize("text", ["(∞0)", "(I0)", "(i, 0)"])
def test_parse_accepts_symbol_spellings(text):
    assert EssentialItinerary.parse(text) == EssentialItinerary((), ('i', '0'))


@pytest.mark.parametrize("text", ["i0", "(x)", "0()", "(i"])
def test_parse_rejects(text):
    with pytest.raises(ParseError):
        EssentialItinerary.parse(text)


def test_empty_cycle_rejected():
    with pytest.raises(InvalidParameter):
        EssentialItinerary(('i',), ())


def test_symbol_at_wraps_the_cycle():
    e = EssentialItinerary.parse("00(i0i)")
    assert [e.symbol_at(n) for n in range(8)] == ['0', '0', 'i', '0', 'i', 'i', '0', 'i']
    with pytest.raises(InvalidParameter):
        e.symbol_at(-1)


def test_shift_consumes_prefix_then_rotates():
    e = EssentialItinerary.parse("0(i0)")
    assert e.shift(1) == EssentialItinerary.parse("(i0)")
    assert e.shift(2) == EssentialItinerary.parse("(0i)")
    assert e.shift(3).take(6) == e.shift(1).take(6)


def test_equivalence_up_to_shift():
    assert itinerary_equiv(EssentialItinerary.parse("0(i0)"), EssentialItinerary.parse("(0i)"))
    assert itinerary_equiv(EssentialItinerary.parse("(i0i0)"), EssentialItinerary.parse("00(0i)"))
    assert not itinerary_equiv(EssentialItinerary.parse("(i)"), EssentialItinerary.parse("(i0)"))


def test_constant_itinerary():
    assert EssentialItinerary.constant('i').take(3) == "iii"


# ============================================================================
# Annular itineraries
# ============================================================================

def test_expand_repeats_cycle():
    itinerary = AnnularItinerary([1], [2, 3], 'periodic')
    assert itinerary.expand(6) == [1, 2, 3, 2, 3, 2]
    assert itinerary.expand(1) == [1]


def test_expand_without_cycle_stops_at_prefix():
    assert AnnularItinerary([1, 2, 3]).expand(10) == [1, 2, 3]


def test_transitions_include_wrap_around():
    assert AnnularItinerary([1], [2, 3]).transitions() == [(1, 2), (2, 3), (3, 2)]


def test_unknown_generator_kind():
    with pytest.raises(InvalidParameter):
        AnnularItinerary([1], None, 'chaotic')


def test_validate_against_coverage():
    coverage = {
        1: CoveredRange(1, 1, 2),
        2: CoveredRange(2, 1, 3),
        3: CoveredRange(3, 1, 4),
    }
    AnnularItinerary([1, 2, 3, 1], None).validate(coverage)
    with pytest.raises(Unrealizable):
        AnnularItinerary([1, 3]).validate(coverage)
    with pytest.raises(Unrealizable):
        AnnularItinerary([3, 4, 1]).validate(coverage)


def test_covered_range_with_explicit_indices():
    covered = CoveredRange(2, 1, 5, indices=(1, 3, 5))
    assert covered.covers(3)
    assert not covered.covers(2)


def test_parse_annular():
    assert AnnularItinerary.parse("1,2,3").prefix == [1, 2, 3]
    parsed = AnnularItinerary.parse("1;(2,3)")
    assert parsed.prefix == [1]
    assert parsed.cycle == [2, 3]
    assert parsed.generator_kind == 'custom'


@pytest.mark.parametrize("text", ["", "1,x", "1;(2,3"])
def test_parse_annular_rejects(text):
    with pytest.raises(ParseError):
        AnnularItinerary.parse(text)

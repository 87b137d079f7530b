#!/usr/bin/env python3
"""
Tests for the maximum/minimum modulus engine, thresholds and growth checks

The test map exp(z - 1/z) has closed forms on every circle:
log M(r) = |r - 1/r| and log m(r) = -|r - 1/r|.
"""

import math
import os
import sys

import pytest

sys.path.insert(0, os.path.abspath(os.path.dirname(__file__)))

from src.function_model import parse_map
from src.itinerary import EssentialItinerary
from src.modulus import (
    check_growth_laws,
    check_nesting,
    circle_extremes,
    estimate_threshold_radii,
    far_field_modulus,
    find_thresholds,
    iterate_radius,
    max_modulus,
    min_modulus,
    relaxed_modulus,
    sample_modulus,
)
from src.utils import HorizonExceeded, InvalidParameter, ThresholdNotFound

from conftest import log_sinh2


@pytest.fixture(scope="module")
def test_map():
    return parse_map("n=0; g=1z; h=-1w")


def closed_form(log_r: float) -> float:
    r = math.exp(log_r)
    return abs(r - 1.0 / r)


# ============================================================================
# Circle extremes
# ============================================================================

@pytest.mark.parametrize("log_r", [math.log(2.0), 1.0, -0.7, 2.5])
def test_max_and_min_match_closed_form(test_map, log_r):
    assert max_modulus(test_map, log_r).value == pytest.approx(closed_form(log_r), abs=1e-9)
    assert min_modulus(test_map, log_r).value == pytest.approx(-closed_form(log_r), abs=1e-9)


def test_maximum_is_attained_on_the_positive_axis(test_map):
    extremum = max_modulus(test_map, math.log(2.0))
    assert extremum.value == pytest.approx(1.5, abs=1e-12)
    assert extremum.theta == pytest.approx(0.0, abs=1e-6)
    assert extremum.n_probes == 1024


@pytest.mark.parametrize("beta", [0.5, 2.0])
@pytest.mark.parametrize("r", [2.0, 4.0, 8.0])
def test_arnold_maximum_matches_closed_form(beta, r):
    # log|f| = log r + beta/2 (r - 1/r) cos(theta), largest on the positive axis
    f = parse_map(f"arnold(0, {beta})")
    expected = math.log(r) + 0.5 * beta * (r - 1.0 / r)
    extremum = max_modulus(f, math.log(r))
    assert extremum.value == pytest.approx(expected, abs=1e-9)
    assert extremum.theta == pytest.approx(0.0, abs=1e-6)


def test_sample_modulus_orders_extremes(test_map):
    sample = sample_modulus(test_map, 1.3)
    assert sample.log_m <= sample.log_M
    assert sample.log_M == pytest.approx(closed_form(1.3), abs=1e-9)


def test_unit_circle_is_flat(test_map):
    sample = sample_modulus(test_map, 0.0)
    assert sample.log_M == pytest.approx(0.0, abs=1e-12)
    assert sample.log_m == pytest.approx(0.0, abs=1e-12)


def test_extremum_beyond_horizon_raises(test_map):
    with pytest.raises(HorizonExceeded):
        max_modulus(test_map, test_map.L_max + 1.0)


def test_too_few_probes_rejected(test_map):
    with pytest.raises(InvalidParameter):
        max_modulus(test_map, 1.0, probes=4)


def test_relaxed_modulus(test_map):
    eps = math.exp(-0.5)
    assert relaxed_modulus(test_map, math.log(2.0), eps, 'mu') == pytest.approx(1.0, abs=1e-9)
    assert relaxed_modulus(test_map, math.log(2.0), eps, 'nu') == pytest.approx(-1.0, abs=1e-9)


@pytest.mark.parametrize("eps", [0.0, 1.0, -0.5, 2.0])
def test_relaxed_modulus_rejects_eps(test_map, eps):
    with pytest.raises(InvalidParameter):
        relaxed_modulus(test_map, 1.0, eps, 'mu')


def test_relaxed_modulus_rejects_kind(test_map):
    with pytest.raises(InvalidParameter):
        relaxed_modulus(test_map, 1.0, 0.5, 'sigma')


# ============================================================================
# Radius sequences
# ============================================================================

def test_iterate_radius_outward(test_map):
    sequence = iterate_radius(test_map, EssentialItinerary.parse("(i)"), math.log(2.0), 2)
    assert sequence.truncation_reason == 'requested_depth'
    assert sequence.truncated_at == 2
    assert sequence.log_R[1] == pytest.approx(1.5, abs=1e-9)
    assert sequence.log_R[2] == pytest.approx(closed_form(1.5), abs=1e-8)


def test_iterate_radius_inward_mirrors_outward(test_map):
    outward = iterate_radius(test_map, EssentialItinerary.parse("(i)"), math.log(2.0), 2)
    inward = iterate_radius(test_map, EssentialItinerary.parse("(0)"), math.log(2.0), 2)
    assert inward.log_R[1] == pytest.approx(-outward.log_R[1], abs=1e-9)
    # from log r = -1.5 the minimum modulus is again -|r - 1/r|
    assert inward.log_R[2] == pytest.approx(-outward.log_R[2], abs=1e-8)


def test_iterate_radius_stops_at_horizon(test_map):
    sequence = iterate_radius(test_map, EssentialItinerary.parse("(i)"), math.log(2.0), 10)
    assert sequence.truncation_reason == 'horizon'
    assert sequence.truncated_at == len(sequence.log_R) - 1
    assert sequence.log_R[-1] > test_map.L_max
    assert all(abs(L) <= test_map.L_max for L in sequence.log_R[:-1])


def test_iterate_radius_negative_depth(test_map):
    with pytest.raises(InvalidParameter):
        iterate_radius(test_map, EssentialItinerary.parse("(i)"), 1.0, -1)


# ============================================================================
# Far field
# ============================================================================

def test_far_field_bound_beyond_horizon(test_map):
    bound = far_field_modulus(test_map, 400.0)
    assert bound.loglog == pytest.approx(400.0)
    assert bound.log_M_lower > 1e170
    assert bound.log_m_upper == -bound.log_M_lower
    assert bound.theta_max == pytest.approx(0.0)
    assert bound.theta_min == pytest.approx(-math.pi)


def test_far_field_not_applicable_near_unit_circle(test_map):
    with pytest.raises(HorizonExceeded):
        far_field_modulus(test_map, 0.1)


def test_circle_extremes_switches_to_far_field(test_map):
    near = circle_extremes(test_map, math.log(2.0))
    far = circle_extremes(test_map, 450.0)
    assert not near.far_field and near.high == pytest.approx(1.5, abs=1e-9)
    assert far.far_field and far.low < 0 < far.high


# ============================================================================
# Thresholds
# ============================================================================

def test_find_thresholds(test_map):
    thresholds = find_thresholds(test_map)
    # 2 sinh(s) > 2s everywhere, and by 0.5 from s ~ 1.13 on
    assert thresholds.log_R_f == pytest.approx(0.01)
    assert 1.1 < thresholds.log_R_plus < 1.2
    assert thresholds.log_R_minus == pytest.approx(-thresholds.log_R_plus)
    assert thresholds.grid_points == 320
    assert set(thresholds.to_dict()) >= {'log_R_f', 'log_R_plus', 'log_R_minus'}


def test_find_thresholds_needs_two_points_per_side(test_map):
    with pytest.raises(ThresholdNotFound):
        find_thresholds(test_map, grid=[-1.0, 1.0, 2.0])


# ============================================================================
# Growth and nesting checks
# ============================================================================

def test_growth_laws_pass(test_map):
    report = check_growth_laws(test_map, [2.0, 3.0, 5.0, 8.0, 0.5, 0.2, 0.125], [2.0])
    assert report.passed
    assert report.status_of("(i)") == ['pass', 'pass']
    assert report.status_of("(ii)") == ['pass', 'pass']
    assert report.status_of("(iii)") == ['pass', 'pass']
    assert report.status_of("(iv)") == ['pass', 'pass']


def test_growth_laws_single_radius(test_map):
    report = check_growth_laws(test_map, [2.0], [2.0])
    assert report.passed
    assert report.status_of("(i)") == ['insufficient-data']
    assert report.status_of("(ii)") == ['insufficient-data']
    assert report.status_of("(iii)") == ['pass']


def test_growth_laws_relaxed_estimate(test_map):
    report = check_growth_laws(test_map, [2.0, 3.0, 5.0], [2.0], eps_grid=[0.5])
    relaxed = [p for p in report.properties if p.name.startswith("relaxed growth")]
    assert len(relaxed) == 1 and relaxed[0].status == 'pass'


def test_growth_laws_reject_radius_beyond_horizon(test_map):
    with pytest.raises(HorizonExceeded):
        check_growth_laws(test_map, [math.exp(350.0)], [2.0])


def test_nesting_truncated_by_horizon(test_map):
    result = check_nesting(test_map, 0.5, 3.0, 3)
    assert result.passed
    assert result.truncated
    assert result.checked_depth == 2
    assert all(row.holds for row in result.trace + result.dual_trace)


def test_nesting_single_level(test_map):
    result = check_nesting(test_map, 0.5, 3.0, 1)
    assert result.passed and not result.truncated
    assert result.checked_depth == 1
    assert result.trace[0].lhs == pytest.approx(3.0)


def test_nesting_fails_close_to_unit_circle(test_map):
    assert not check_nesting(test_map, 0.5, 1.0, 1).passed


def test_nesting_trace_follows_the_closed_form(test_map):
    eps = 0.1
    log_eps = math.log(eps)
    result = check_nesting(test_map, eps, 3.0, 3)
    assert result.passed
    assert result.truncated
    assert result.checked_depth == 2

    relaxed_1 = log_sinh2(3.0) + log_eps
    relaxed_2 = log_sinh2(relaxed_1) + log_eps
    first, second = result.trace
    assert first.lhs == pytest.approx(3.0)
    assert first.rhs == pytest.approx(relaxed_1 + log_eps, rel=1e-9)
    assert second.lhs == pytest.approx(log_sinh2(3.0), rel=1e-9)
    assert second.rhs == pytest.approx(relaxed_2 + log_eps, rel=1e-9)
    assert all(row.lhs < row.rhs for row in result.trace)


def test_estimate_radii(test_map):
    estimates = estimate_threshold_radii(test_map, 0.5, grid=[0.5, 1.0, 2.0, 3.0, 4.0])
    assert estimates['log_R1_estimate'] == pytest.approx(1.0)
    assert estimates['log_R2_estimate'] == pytest.approx(2.0)

#!/usr/bin/env python3
"""
Tests for map representation, evaluation and the map grammar
"""

import math
import os
import sys

import numpy as np
import pytest

sys.path.insert(0, os.path.abspath(os.path.dirname(__file__)))

from src.function_model import (
    CStarMap,
    LogPoint,
    arnold,
    eval_array,
    evaluate,
    format_map,
    log_derivative,
    normalize_angle,
    parse_map,
    reciprocal,
    reflect,
)
from src.utils import CStarError, HorizonExceeded, InvalidParameter, ParseError


EXP_MAP = "n=0; g=1z; h=-1w"


@pytest.fixture
def test_map():
    return parse_map(EXP_MAP)


# ============================================================================
# Evaluation
# ============================================================================

def test_eval_at_two(test_map):
    image = evaluate(test_map, LogPoint(math.log(2.0), 0.0))
    assert image.L == pytest.approx(1.5, abs=1e-12)
    assert image.theta == pytest.approx(0.0, abs=1e-12)


def test_eval_fixes_one(test_map):
    image = evaluate(test_map, LogPoint(0.0, 0.0))
    assert image.L == pytest.approx(0.0, abs=1e-15)
    assert image.theta == pytest.approx(0.0, abs=1e-15)


def test_eval_at_i_rotates_by_two(test_map):
    image = evaluate(test_map, LogPoint(0.0, math.pi / 2))
    assert image.L == pytest.approx(0.0, abs=1e-12)
    assert image.theta == pytest.approx(2.0, abs=1e-12)


def test_eval_beyond_horizon_raises(test_map):
    with pytest.raises(HorizonExceeded):
        evaluate(test_map, LogPoint(test_map.L_max + 1.0, 0.0))


def test_eval_array_non_strict_returns_nan(test_map):
    L, theta = eval_array(test_map, [0.5, 400.0], [0.0, 0.0], strict=False)
    assert np.isfinite(L[0])
    assert np.isnan(L[1]) and np.isnan(theta[1])


def test_conjugation_symmetry_for_real_coefficients(test_map):
    rng = np.random.default_rng(7)
    for L, theta in zip(rng.uniform(-3, 3, 25), rng.uniform(-math.pi, math.pi, 25)):
        z = LogPoint(L, theta)
        direct = evaluate(test_map, z.conj())
        mirrored = evaluate(test_map, z).conj()
        assert direct.L == pytest.approx(mirrored.L, abs=1e-12)
        assert math.cos(direct.theta - mirrored.theta) == pytest.approx(1.0, abs=1e-12)


def test_horizon_scales_with_degree():
    f = parse_map("n=1; g=1z^2; h=0.5w")
    assert f.degree == 2
    assert f.L_max == pytest.approx(150.0)
    assert f.with_horizon(40.0).L_max == 40.0


def test_normalize_angle_maps_pi_to_minus_pi():
    assert normalize_angle(math.pi) == -math.pi
    assert normalize_angle(3 * math.pi) == -math.pi
    assert normalize_angle(-math.pi) == -math.pi


# ============================================================================
# Logarithmic derivative
# ============================================================================

def test_log_derivative_at_one(test_map):
    assert log_derivative(test_map, LogPoint(0.0, 0.0)) == pytest.approx(2.0)


def test_log_derivative_at_two(test_map):
    assert log_derivative(test_map, LogPoint(math.log(2.0), 0.0)) == pytest.approx(1.25)


@pytest.mark.parametrize("beta", [0.5, 2.0])
def test_log_derivative_arnold_at_one(beta):
    assert log_derivative(arnold(0.0, beta), LogPoint(0.0, 0.0)) == pytest.approx(1.0 + beta)


@pytest.mark.parametrize("spec", [EXP_MAP, "arnold(0.3, 2)", "n=2; g=0.5z^2 - 1z; h=(0.3+0.2j)w"])
def test_log_derivative_matches_finite_difference(spec):
    f = parse_map(spec)
    rng = np.random.default_rng(11)
    step = 1e-6
    for L, theta in zip(rng.uniform(-1.5, 1.5, 100), rng.uniform(-math.pi, math.pi, 100)):
        z = complex(math.exp(L) * math.cos(theta), math.exp(L) * math.sin(theta))

        def log_f(point: complex) -> complex:
            lp = LogPoint.from_complex(point)
            L_out, T_out = eval_array(f, [lp.L], [lp.theta])
            return complex(L_out[0], T_out[0])

        plus, minus = log_f(z + step), log_f(z - step)
        # unwrap the branch of the argument across the two samples
        jump = round((plus.imag - minus.imag) / (2 * math.pi))
        numeric = (plus - minus - 2j * math.pi * jump) / (2 * step)
        exact = log_derivative(f, LogPoint(L, theta))
        assert abs(numeric - exact) <= 1e-5 * max(1.0, abs(exact))


# ============================================================================
# Constructors
# ============================================================================

def test_arnold_coefficients():
    f = arnold(0.0, 2.0)
    assert f.index_n == 1
    assert f.g_coeffs == (1.0,)
    assert f.h_coeffs == (-1.0,)


def test_arnold_rotation_by_pi():
    image = evaluate(arnold(math.pi, 1.0), LogPoint(0.0, 0.0))
    assert image.L == pytest.approx(0.0, abs=1e-12)
    assert abs(image.theta) == pytest.approx(math.pi, abs=1e-12)


def test_arnold_rejects_zero_beta():
    with pytest.raises(InvalidParameter):
        arnold(0.0, 0.0)


def test_rot_must_have_unit_modulus():
    with pytest.raises(InvalidParameter):
        CStarMap(0, (1.0,), (-1.0,), rot=2.0)


def test_reflect_and_reciprocal_are_involutions(test_map):
    assert reflect(reflect(test_map)) == test_map
    assert reciprocal(reciprocal(test_map)) == test_map


def test_reflect_evaluates_at_inverse(test_map):
    z = LogPoint(0.7, 1.1)
    inverse = LogPoint(-0.7, -1.1)
    assert evaluate(reflect(test_map), z).L == pytest.approx(evaluate(test_map, inverse).L, abs=1e-12)


# ============================================================================
# Grammar
# ============================================================================

def test_parse_test_map(test_map):
    assert test_map.index_n == 0
    assert test_map.g_coeffs == (1.0,)
    assert test_map.h_coeffs == (-1.0,)
    assert test_map.rot == 1.0


def test_parse_arnold_shortcut():
    assert parse_map("arnold(0.5, 1.2)") == arnold(0.5, 1.2)


def test_parse_rejects_constant_g():
    with pytest.raises(ParseError) as info:
        parse_map("n=2; g=0; h=1w")
    assert info.value.position >= 0
    assert info.value.exit_code == 1


@pytest.mark.parametrize("spec", ["", "n=0; g=1z", "n=0; g=1w; h=-1w", "n=x; g=1z; h=1w", "arnold(1, 0)"])
def test_parse_errors(spec):
    with pytest.raises(ParseError):
        parse_map(spec)


def test_parse_error_is_domain_error():
    assert issubclass(ParseError, CStarError)


@pytest.mark.parametrize("spec", [
    EXP_MAP,
    "arnold(0.5, 1.2)",
    "n=-3; g=2.5z - 0.25z^3; h=(0.5-1.5j)w^2",
    "n=1; g=1z; h=-1w; rot=(0.6+0.8j)",
])
def test_format_round_trip(spec):
    f = parse_map(spec)
    assert parse_map(format_map(f)) == f

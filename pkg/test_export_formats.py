#!/usr/bin/env python3
"""
Tests for CSV export and the seed-point reader
"""

import math
import os
import sys

import pytest

sys.path.insert(0, os.path.abspath(os.path.dirname(__file__)))

from src.export_formats import ExportFormats, read_seed_points
from src.function_model import LogPoint
from src.partition import classify_orbits
from src.raster import RenderWindow, render_classification
from src.utils import InvalidParameter, ParseError


def rows_of(data: bytes):
    return [line.split(',') for line in data.decode('utf-8').splitlines()]


def test_modulus_table(exp_map):
    rows = rows_of(ExportFormats.modulus_csv(exp_map, [math.log(2.0), 0.0]))
    assert rows[0] == ['log_r', 'log_M', 'theta_max', 'log_m', 'theta_min', 'n_probes', 'flag']
    assert float(rows[1][1]) == pytest.approx(1.5, abs=1e-9)
    assert float(rows[1][3]) == pytest.approx(-1.5, abs=1e-9)
    assert rows[1][5] == '1024'
    assert rows[1][6] == ''


def test_modulus_table_with_relaxed_columns(exp_map):
    rows = rows_of(ExportFormats.modulus_csv(exp_map, [math.log(2.0)], eps=math.exp(-0.5)))
    assert rows[0][6:] == ['log_mu', 'log_nu', 'flag']
    assert float(rows[1][6]) == pytest.approx(1.0, abs=1e-9)
    assert float(rows[1][7]) == pytest.approx(-1.0, abs=1e-9)


def test_modulus_table_flags_horizon(exp_map):
    rows = rows_of(ExportFormats.modulus_csv(exp_map, [400.0]))
    assert rows[1] == ['400', 'nan', 'nan', 'nan', 'nan', '1024', 'horizon']


def test_modulus_table_is_reproducible(exp_map):
    radii = [0.1, 1.0, 2.5, -1.0]
    assert ExportFormats.modulus_csv(exp_map, radii) == ExportFormats.modulus_csv(exp_map, radii)


def test_modulus_table_rejects_eps(exp_map):
    with pytest.raises(InvalidParameter):
        ExportFormats.modulus_csv(exp_map, [1.0], eps=1.5)


def test_classify_table(exp_map, base_partition):
    records = classify_orbits(exp_map, [LogPoint(3.0, 0.0), LogPoint(0.0, 0.0)], 8, partition=base_partition)
    rows = rows_of(ExportFormats.classify_csv(records))
    assert rows[0] == ['L', 'theta', 'verdict', 'checked_depth', 'essential_prefix', 'annular_prefix']
    assert rows[1][2] == 'escapes_to_infinity'
    assert rows[1][4] == 'iii'
    assert rows[2][2] == 'bounded_so_far'
    assert rows[2][3] == '8'
    assert rows[2][5] == ';'.join(['0'] * 9)


def test_legend_table(exp_map):
    window = RenderWindow(2.5, 3.5, -math.pi, math.pi, 1, 1)
    grid = render_classification(exp_map, window).grid
    rows = rows_of(ExportFormats.legend_csv(grid))
    assert rows[0] == ['class_id', 'verdict', 'prefix', 'r', 'g', 'b']
    assert rows[1][1:3] == ['escapes_to_infinity', 'iiiiii']
    assert int(rows[1][0]) in grid.legend


def test_read_points():
    points = read_seed_points("\ufeffL,theta\n1.5,0\n-2,3.5\n")
    assert points[0] == LogPoint(1.5, 0.0)
    assert points[1].theta == pytest.approx(3.5 - 2 * math.pi)


def test_read_points_extra_columns():
    assert len(read_seed_points("id,theta,L\na,0.1,0.2\n")) == 1


@pytest.mark.parametrize("text", ["x,y\n1,2\n", "L,theta\n1,abc\n", "L,theta\nnan,0\n", "L,theta\n1\n"])
def test_read_points_rejects(text):
    with pytest.raises(ParseError):
        read_seed_points(text)

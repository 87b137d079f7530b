"""
Shared fixtures: the test map exp(z - 1/z) and its covering families at log R+ = 1.3 and 3
"""

import math
import os
import sys

import pytest

sys.path.insert(0, os.path.abspath(os.path.dirname(__file__)))

from src.covering import build_covering_annuli, choose_eps, DEFAULT_DELTA
from src.function_model import parse_map
from src.partition import build_partition


TEST_MAP = "n=0; g=1z; h=-1w"
BASE_LOG_R = 1.3
WIDE_LOG_R = 3.0


@pytest.fixture(scope="session")
def exp_map():
    return parse_map(TEST_MAP)


@pytest.fixture(scope="session")
def eps():
    # exp(-1) for the default delta of 2 pi^2
    return choose_eps(DEFAULT_DELTA)


@pytest.fixture(scope="session")
def base_partition(exp_map):
    return build_partition(exp_map, BASE_LOG_R, -BASE_LOG_R, 3)


@pytest.fixture(scope="session")
def family(exp_map, base_partition, eps):
    return build_covering_annuli(exp_map, base_partition, eps, 3)


@pytest.fixture(scope="session")
def wide_family(exp_map, eps):
    # log R+ = 3: B_2 is already far-field and B_3 is never built
    partition = build_partition(exp_map, WIDE_LOG_R, -WIDE_LOG_R, 3)
    return build_covering_annuli(exp_map, partition, eps, 3)


@pytest.fixture
def output_dir(tmp_path):
    path = tmp_path / "out"
    return str(path)


def log_sinh2(L: float) -> float:
    """|r - 1/r| for r = e^L: the maximum of log|f| on the circle of log-radius L"""
    return abs(math.exp(L) - math.exp(-L))

#!/usr/bin/env python3
"""
Import smoke test across every cstar-orbits module
"""

import importlib
import os
import sys

import pytest

sys.path.insert(0, os.path.abspath(os.path.dirname(__file__)))

import src
from src import utils


MODULES = [
    "src.utils",
    "src.function_model",
    "src.modulus",
    "src.itinerary",
    "src.partition",
    "src.covering",
    "src.winding",
    "src.shooting",
    "src.programs",
    "src.raster",
    "src.export_formats",
    "src.reporting",
    "src.config",
    "src.orchestrator",
    "src.cli",
]

EXIT_CODES = {
    'InvalidParameter': 1,
    'ConfigError': 1,
    'ParseError': 1,
    'PixelCapExceeded': 1,
    'NoCellSurvives': 2,
    'Unrealizable': 2,
    'ChainViolation': 3,
    'InequalityViolation': 3,
    'VerificationFailed': 3,
    'OracleInconclusive': 3,
    'HorizonExceeded': 4,
    'NonFinite': 4,
    'ThresholdNotFound': 4,
    'NotExpanding': 4,
}


@pytest.mark.parametrize("name", MODULES)
def test_module_imports(name):
    module = importlib.import_module(name)
    assert module.__doc__


def test_package_exports_resolve():
    for name in src.__all__:
        assert getattr(src, name) is not None, name


@pytest.mark.parametrize("name,code", sorted(EXIT_CODES.items()))
def test_error_exit_codes(name, code):
    error = getattr(utils, name)
    assert issubclass(error, utils.CStarError)
    assert error.exit_code == code


def test_main_module_runs_cli():
    main = importlib.import_module("src.__main__")
    assert callable(main.main)

#!/usr/bin/env python3
"""
Tests for configuration loading, overrides and validation
"""

import codecs
import logging
import math
import os
import sys

import pytest

sys.path.insert(0, os.path.abspath(os.path.dirname(__file__)))

from src.config import THREADS_ENV, Config, threads_from_env
from src.covering import DEFAULT_SEED
from src.utils import ConfigError


def write(tmp_path, text, name="run.conf", bom=False):
    path = tmp_path / name
    data = text.encode('utf-8')
    path.write_bytes((codecs.BOM_UTF8 if bom else b"") + data)
    return str(path)


def test_defaults_are_valid():
    config = Config()
    assert config.validate() == []
    assert config.resolved_eps == pytest.approx(math.exp(-1.0))
    assert config.seed == DEFAULT_SEED


def test_load_file(tmp_path):
    path = write(tmp_path, "\n".join([
        "# test run",
        'map = "arnold(0.5, 2)"   # inline comment',
        "depth = 4",
        "eps = 0.25",
        "log_R_plus = auto",
        "seed = 0x10",
        "threads = 2",
    ]))
    config = Config.from_file(path)
    assert config.map_spec == "arnold(0.5, 2)"
    assert config.depth == 4
    assert config.eps == 0.25
    assert config.log_R_plus is None
    assert config.seed == 16
    assert config.threads == 2


def test_load_file_with_bom(tmp_path):
    config = Config.from_file(write(tmp_path, "depth = 5\n", bom=True))
    assert config.depth == 5


def test_hash_inside_quotes_is_kept(tmp_path):
    config = Config.from_file(write(tmp_path, 'output_dir = "runs/#7"\n'))
    assert config.output_dir == "runs/#7"


def test_environment_substitution(tmp_path, monkeypatch):
    monkeypatch.setenv("CSTAR_TEST_OUT", "/tmp/cstar")
    config = Config.from_file(write(tmp_path, "output_dir = ${CSTAR_TEST_OUT}/a\n"))
    assert config.output_dir == "/tmp/cstar/a"


def test_duplicate_and_unknown_keys_warn(tmp_path, caplog):
    with caplog.at_level(logging.WARNING):
        config = Config.from_file(write(tmp_path, "depth = 2\ndepth = 6\ncolour = red\n"))
    assert config.depth == 6
    assert "set twice" in caplog.text
    assert "colour" in caplog.text


@pytest.mark.parametrize("text", ["depth = many\n", "no equals sign\n", "depth = auto\n"])
def test_bad_files(tmp_path, text):
    with pytest.raises(ConfigError) as info:
        Config.from_file(write(tmp_path, text))
    assert info.value.exit_code == 1


def test_missing_file(tmp_path):
    with pytest.raises(ConfigError):
        Config.from_file(str(tmp_path / "absent.conf"))


def test_round_trip(tmp_path):
    original = Config(map_spec="n=1; g=1z^2; h=0.5w", eps=0.3, log_R0=2.5, depth=5, seed=12345)
    path = str(tmp_path / "saved.conf")
    original.to_file(path)
    assert Config.from_file(path) == original


def test_to_dict_uses_file_keys():
    data = Config().to_dict()
    assert data['map'] == "n=0; g=1z; h=-1w"
    assert 'map_spec' not in data
    assert data['eps'] == 'auto'


def test_merged_overrides():
    config = Config(eps=0.2, depth=3).merged({'depth': '7', 'eps': 'auto', 'grid': None, 'map': 'arnold(0, 1)'})
    assert config.depth == 7
    assert config.eps is None
    assert config.grid == 16
    assert config.map_spec == 'arnold(0, 1)'


def test_merged_rejects_unknown_key():
    with pytest.raises(ConfigError):
        Config().merged({'colour': 'red'})


@pytest.mark.parametrize("changes,fragment", [
    ({'eps': 1.5}, "eps"),
    ({'delta': 0.0}, "delta"),
    ({'log_R_minus': 0.5}, "log_R_minus"),
    ({'depth': 0}, "depth"),
    ({'palette': 2}, "palette"),
    ({'map_spec': "n=2; g=0; h=1w"}, "map"),
    ({'margin': -0.1}, "margin"),
])
def test_validation_errors(changes, fragment):
    errors = Config(**changes).validate()
    assert len(errors) == 1
    assert fragment in errors[0]


def test_threads_from_env(monkeypatch):
    monkeypatch.delenv(THREADS_ENV, raising=False)
    assert threads_from_env() is None
    monkeypatch.setenv(THREADS_ENV, "3")
    assert threads_from_env() == 3
    monkeypatch.setenv(THREADS_ENV, "zero")
    with pytest.raises(ConfigError):
        threads_from_env()
    monkeypatch.setenv(THREADS_ENV, "0")
    with pytest.raises(ConfigError):
        threads_from_env()

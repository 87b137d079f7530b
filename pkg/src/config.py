"""
Configuration Module

Run configuration for cstar-orbits: one flat dataclass, loaded from
`key = value` files and overridden by command-line flags.

Key responsibilities:
- Load configuration files (UTF-8, BOM detection, `#` comments, env substitution)
- Type every value and accept "auto" for the resolvable thresholds
- Validate parameter ranges before any computation starts
- Serialize the resolved configuration for reports and manifests
"""

import codecs
import dataclasses
import logging
import math
import os
import re
from dataclasses import dataclass, fields
from pathlib import Path
from typing import Any, Dict, List, Optional

from .covering import DEFAULT_DELTA, DEFAULT_SEED, choose_eps
from .function_model import parse_map
from .utils import ConfigError, ParseError


logger = logging.getLogger(__name__)

AUTO = "auto"
THREADS_ENV = "CSTAR_THREADS"

# file key -> attribute, where they differ
KEY_ALIASES = {'map': 'map_spec'}
AUTO_FIELDS = ('eps', 'log_R_plus', 'log_R_minus', 'log_R0', 'horizon')

_LINE_RE = re.compile(r'^\s*([A-Za-z_][A-Za-z0-9_]*)\s*=\s*(.*?)\s*$')
_ENV_RE = re.compile(r'\$\{(\w+)\}|\$(\w+)')


# ============================================================================
# Utility Functions
# ============================================================================

def normalize_path(path_str: str) -> str:
    """
    Normalize path for cross-platform compatibility

    Args:
        path_str: Path string to normalize

    Returns:
        Absolute, resolved path string
    """
    if not path_str:
        return path_str
    path = Path(os.path.expanduser(os.path.expandvars(path_str)))
    if not path.is_absolute():
        path = Path.cwd() / path
    return str(path.resolve())


def substitute_env_vars(value: str) -> str:
    """
    Substitute ${VAR} and $VAR; unknown variables are left as written
    """
    def replace_env(match):
        var_name = match.group(1) or match.group(2)
        return os.getenv(var_name, match.group(0))

    return _ENV_RE.sub(replace_env, value)


def detect_bom(file_path: str) -> str:
    """
    Detect BOM (Byte Order Mark) in file

    Returns:
        Encoding name (utf-8, utf-8-sig, utf-16, utf-32)
    """
    with open(file_path, 'rb') as f:
        raw = f.read(4)

    if raw.startswith(codecs.BOM_UTF32_LE) or raw.startswith(codecs.BOM_UTF32_BE):
        return 'utf-32'
    elif raw.startswith(codecs.BOM_UTF16_LE) or raw.startswith(codecs.BOM_UTF16_BE):
        return 'utf-16'
    elif raw.startswith(codecs.BOM_UTF8):
        return 'utf-8-sig'
    return 'utf-8'


def _strip_comment(line: str) -> str:
    quoted = None
    for i, char in enumerate(line):
        if char in '"\'':
            quoted = None if quoted == char else (quoted or char)
        elif char == '#' and quoted is None:
            return line[:i]
    return line


def _unquote(value: str) -> str:
    if len(value) >= 2 and value[0] == value[-1] and value[0] in '"\'':
        return value[1:-1]
    return value


# ============================================================================
# Configuration Dataclass
# ============================================================================

@dataclass
class Config:
    """
    Resolved run configuration

    None in an AUTO_FIELDS attribute means "auto": eps follows delta, the
    thresholds are found by scanning, and the horizon is 300/deg.
    """
    map_spec: str = "n=0; g=1z; h=-1w"
    eps: Optional[float] = None
    delta: float = DEFAULT_DELTA
    log_R_plus: Optional[float] = None
    log_R_minus: Optional[float] = None
    log_R0: Optional[float] = None
    depth: int = 3
    grid: int = 16
    margin: float = 0.1
    tol: float = 1e-13
    max_cells: int = 256
    budget: int = 64
    theta_escape: float = 50.0
    trailing_run: int = 3
    prefix_length: int = 6
    oracle_targets: int = 16
    seed: int = DEFAULT_SEED
    probes: int = 1024
    modulus_tol: float = 1e-10
    horizon: Optional[float] = None
    dwell_cap: int = 3
    pixel_cap: int = 4194304
    palette: int = 0
    scan_step: float = 0.05
    threads: int = 1
    output_dir: str = "cstar-output"

    @property
    def resolved_eps(self) -> float:
        return self.eps if self.eps is not None else choose_eps(self.delta)

    @classmethod
    def from_file(cls, config_path: str, substitute_vars: bool = True) -> 'Config':
        """
        Load configuration from a flat `key = value` file

        Args:
            config_path: Path to the configuration file
            substitute_vars: Whether to substitute environment variables

        Raises:
            ConfigError: If the file is missing, unreadable or malformed
        """
        config_path = normalize_path(config_path)
        if not os.path.exists(config_path):
            raise ConfigError(
                f"Configuration file not found: {config_path}\n"
                f"Current directory: {os.getcwd()}"
            )

        encoding = detect_bom(config_path)
        try:
            with open(config_path, 'r', encoding=encoding) as f:
                lines = f.read().splitlines()
        except (OSError, UnicodeDecodeError) as e:
            raise ConfigError(
                f"Error reading configuration file: {config_path}\n"
                f"Error: {e}\n"
                f"File encoding: {encoding}"
            ) from e

        data: Dict[str, str] = {}
        for number, raw in enumerate(lines, start=1):
            line = _strip_comment(raw).strip()
            if not line:
                continue
            match = _LINE_RE.match(line)
            if not match:
                raise ConfigError(f"{config_path}:{number}: expected 'key = value', got '{raw.strip()}'")
            key, value = match.group(1), _unquote(match.group(2))
            if substitute_vars:
                value = substitute_env_vars(value)
            if key in data:
                logger.warning(f"{config_path}:{number}: '{key}' set twice, keeping the later value")
            data[key] = value

        logger.info(f"Loaded {len(data)} settings from {config_path}")
        return cls.from_dict(data)

    @classmethod
    def from_dict(cls, data: Dict[str, Any]) -> 'Config':
        """
        Create Config from a mapping of file keys to values

        Strings are converted to each field's type; "auto" resets the
        resolvable fields. Unknown keys are logged and ignored.

        Raises:
            ConfigError: If a value cannot be converted
        """
        types = {f.name: f.type for f in fields(cls)}
        values: Dict[str, Any] = {}
        for key, value in data.items():
            name = KEY_ALIASES.get(key, key)
            if name not in types:
                logger.warning(f"Ignoring unknown configuration key '{key}'")
                continue
            values[name] = _convert(name, types[name], value)
        return cls(**values)

    def merged(self, overrides: Dict[str, Any]) -> 'Config':
        """
        Copy with the non-None overrides applied (flag beats file)

        Overrides are converted like file values, so "auto" resets a field.
        """
        types = {f.name: f.type for f in fields(self)}
        values = {}
        for key, value in overrides.items():
            if value is None:
                continue
            name = KEY_ALIASES.get(key, key)
            if name not in types:
                raise ConfigError(f"Unknown configuration key '{key}'")
            values[name] = _convert(name, types[name], value)
        return dataclasses.replace(self, **values)

    def to_dict(self) -> Dict[str, Any]:
        """File keys to values; unresolved auto fields appear as "auto" """
        result: Dict[str, Any] = {}
        for f in fields(self):
            key = next((k for k, v in KEY_ALIASES.items() if v == f.name), f.name)
            value = getattr(self, f.name)
            result[key] = AUTO if value is None and f.name in AUTO_FIELDS else value
        return result

    def to_file(self, config_path: str) -> None:
        """
        Save configuration as `key = value` lines

        Args:
            config_path: Path where to save the configuration
        """
        lines = ["# cstar-orbits configuration"]
        for key, value in self.to_dict().items():
            if isinstance(value, str) and value != AUTO:
                value = f'"{value}"'
            elif key == 'seed':
                value = hex(value)
            elif isinstance(value, float):
                value = repr(value)
            lines.append(f"{key} = {value}")
        with open(config_path, 'w', encoding='utf-8') as f:
            f.write("\n".join(lines) + "\n")

    def validate(self) -> List[str]:
        """
        Validate configuration

        Returns:
            List of validation errors (empty if valid)
        """
        errors = []

        try:
            parse_map(self.map_spec)
        except ParseError as e:
            errors.append(f"map: {e}")

        if self.eps is not None and not 0.0 < self.eps < 1.0:
            errors.append(f"eps must lie in (0, 1), got {self.eps}")
        if not self.delta > 0:
            errors.append(f"delta must be positive, got {self.delta}")
        if self.log_R_plus is not None and not self.log_R_plus > 0:
            errors.append(f"log_R_plus must be positive, got {self.log_R_plus}")
        if self.log_R_minus is not None and not self.log_R_minus < 0:
            errors.append(f"log_R_minus must be negative, got {self.log_R_minus}")
        if self.horizon is not None and not self.horizon > 0:
            errors.append(f"horizon must be positive, got {self.horizon}")

        for name in ('depth', 'grid', 'max_cells', 'budget', 'trailing_run',
                     'prefix_length', 'probes', 'dwell_cap', 'pixel_cap', 'threads'):
            if getattr(self, name) < 1:
                errors.append(f"{name} must be at least 1")
        if self.oracle_targets < 0:
            errors.append("oracle_targets cannot be negative")
        if not 0 <= self.seed < 2 ** 64:
            errors.append("seed must be a 64-bit unsigned integer")
        for name in ('margin', 'tol', 'modulus_tol', 'scan_step', 'theta_escape'):
            value = getattr(self, name)
            if not (math.isfinite(value) and value > 0):
                errors.append(f"{name} must be a positive real, got {value}")
        if self.palette not in (0, 1):
            errors.append(f"palette must be 0 or 1, got {self.palette}")
        if not self.output_dir:
            errors.append("output_dir must not be empty")

        return errors


def _convert(name: str, kind: Any, value: Any) -> Any:
    if value is None and name in AUTO_FIELDS:
        return None
    if isinstance(value, str):
        value = value.strip()
        if value.lower() == AUTO:
            if name in AUTO_FIELDS:
                return None
            raise ConfigError(f"'{name}' does not accept auto")
    try:
        if name == 'seed':
            return int(value, 0) if isinstance(value, str) else int(value)
        if kind is int:
            return int(value)
        if kind in (float, Optional[float]):
            return float(value)
        return str(value)
    except (TypeError, ValueError):
        raise ConfigError(f"Invalid value for '{name}': {value!r}") from None


def threads_from_env(default: Optional[int] = None) -> Optional[int]:
    """CSTAR_THREADS, when set to a positive integer"""
    raw = os.getenv(THREADS_ENV)
    if raw is None:
        return default
    try:
        threads = int(raw)
    except ValueError:
        raise ConfigError(f"{THREADS_ENV} must be an integer, got '{raw}'") from None
    if threads < 1:
        raise ConfigError(f"{THREADS_ENV} must be at least 1, got {threads}")
    return threads

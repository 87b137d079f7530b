"""
Utilities Module

This module provides common utility functions used across the system.
It includes the error hierarchy, a reproducible pseudo-random generator,
artifact checksums and small parsing helpers.

Key responsibilities:
- Define the domain exceptions and the exit code each one maps to
- Provide the splitmix64 generator used for deterministic sampling
- Compute sha256 checksums of written artifacts for run manifests
- Parse comma-separated numeric lists given on the command line
- Format durations for log and report output
"""

import hashlib
import logging
import math
from typing import Iterator, List, Optional


logger = logging.getLogger(__name__)


# ============================================================================
# Exceptions
# ============================================================================

class CStarError(Exception):
    """Base exception for all domain errors"""
    exit_code = 1


class InvalidParameter(CStarError):
    """A parameter violates an operation's precondition"""
    exit_code = 1


class ConfigError(CStarError):
    """Configuration could not be loaded or failed validation"""
    exit_code = 1


class ParseError(CStarError):
    """Map specification or itinerary text could not be parsed"""
    exit_code = 1

    def __init__(self, reason: str, position: int = 0, text: str = ""):
        self.reason = reason
        self.position = position
        self.text = text
        message = f"{reason} (at position {position})"
        if text:
            message += f"\n  {text}\n  {' ' * position}^"
        super().__init__(message)


class PixelCapExceeded(CStarError):
    """Requested raster is larger than the configured pixel cap"""
    exit_code = 1


class NoCellSurvives(CStarError):
    """Subdivision shooting discarded every cell"""
    exit_code = 2

    def __init__(self, message: str, round_index: int = 0):
        self.round_index = round_index
        super().__init__(message)


class Unrealizable(CStarError):
    """An itinerary program asks for an uncertified transition"""
    exit_code = 2


class ChainViolation(CStarError):
    """The nested chain of band radii fails at some level"""
    exit_code = 3

    def __init__(self, message: str, level: int = 0, inequality: str = ""):
        self.level = level
        self.inequality = inequality
        super().__init__(message)


class InequalityViolation(CStarError):
    """The mixed-sequence inequalities fail at some index"""
    exit_code = 3

    def __init__(self, message: str, index: int = 0):
        self.index = index
        super().__init__(message)


class VerificationFailed(CStarError):
    """A numerical verification reported a failing property"""
    exit_code = 3


class OracleInconclusive(CStarError):
    """The winding integral did not settle near an integer"""
    exit_code = 3


class HorizonExceeded(CStarError):
    """A log-radius lies beyond the representable horizon"""
    exit_code = 4


class NonFinite(CStarError):
    """Evaluation produced NaN"""
    exit_code = 4


class ThresholdNotFound(CStarError):
    """No grid value satisfies the threshold conditions"""
    exit_code = 4


class NotExpanding(CStarError):
    """Iterated modulus does not grow away from the core band"""
    exit_code = 4


# ============================================================================
# Deterministic random numbers
# ============================================================================

MASK64 = (1 << 64) - 1

# splitmix64 update constants
SPLITMIX_GAMMA = 0x9E3779B97F4A7C15
SPLITMIX_MUL1 = 0xBF58476D1CE4E5B9
SPLITMIX_MUL2 = 0x94D049BB133111EB


class SplitMix64:
    """
    64-bit splitmix generator

    state += 0x9E3779B97F4A7C15
    z = (state ^ (state >> 30)) * 0xBF58476D1CE4E5B9
    z = (z ^ (z >> 27)) * 0x94D049BB133111EB
    out = z ^ (z >> 31)

    All arithmetic is modulo 2**64, so streams are identical on every platform.
    """

    def __init__(self, seed: int):
        self.state = seed & MASK64

    def next_u64(self) -> int:
        """Advance the state and return the next 64-bit output"""
        self.state = (self.state + SPLITMIX_GAMMA) & MASK64
        z = self.state
        z = ((z ^ (z >> 30)) * SPLITMIX_MUL1) & MASK64
        z = ((z ^ (z >> 27)) * SPLITMIX_MUL2) & MASK64
        return z ^ (z >> 31)

    def uniform(self) -> float:
        """Uniform double in [0, 1) built from the top 53 bits"""
        return (self.next_u64() >> 11) * (1.0 / (1 << 53))

    def bits(self) -> Iterator[int]:
        """Endless stream of single bits (lowest bit of each output)"""
        while True:
            yield self.next_u64() & 1


def derive_seed(seed: int, *salts: int) -> int:
    """
    Mix integer salts into a base seed

    Used so that independent consumers (e.g. each certified pair) draw
    from distinct but reproducible streams.
    """
    mixed = seed & MASK64
    for salt in salts:
        mixed = SplitMix64(mixed ^ (salt & MASK64)).next_u64()
    return mixed


# ============================================================================
# Checksums and parsing helpers
# ============================================================================

def sha256_bytes(data: bytes) -> str:
    """Hex sha256 digest of a byte string"""
    return hashlib.sha256(data).hexdigest()


def sha256_file(path: str) -> str:
    """
    Hex sha256 digest of a file

    Args:
        path: File to hash

    Returns:
        Hex digest string
    """
    digest = hashlib.sha256()
    with open(path, 'rb') as f:
        for chunk in iter(lambda: f.read(65536), b''):
            digest.update(chunk)
    return digest.hexdigest()


def parse_float_list(text: Optional[str]) -> List[float]:
    """
    Parse a comma-separated list of floats

    Args:
        text: String such as "2,4,8" (whitespace allowed)

    Returns:
        List of floats (empty for None or blank input)

    Raises:
        ParseError: If an item is not a number
    """
    if text is None or not text.strip():
        return []

    values = []
    offset = 0
    for item in text.split(','):
        stripped = item.strip()
        try:
            values.append(float(stripped))
        except ValueError:
            raise ParseError(f"Not a number: '{stripped}'", offset, text) from None
        offset += len(item) + 1
    return values


def parse_int_list(text: Optional[str]) -> List[int]:
    """Parse a comma-separated list of integers"""
    if text is None or not text.strip():
        return []

    values = []
    offset = 0
    for item in text.split(','):
        stripped = item.strip()
        try:
            values.append(int(stripped))
        except ValueError:
            raise ParseError(f"Not an integer: '{stripped}'", offset, text) from None
        offset += len(item) + 1
    return values


def format_real(value: float) -> str:
    """Format a real with 17 significant digits for CSV output"""
    if math.isnan(value):
        return "nan"
    if math.isinf(value):
        return "inf" if value > 0 else "-inf"
    return f"{value:.17g}"


def format_duration(seconds: float) -> str:
    """
    Format duration in seconds to human-readable string

    Args:
        seconds: Duration in seconds

    Returns:
        Formatted string (e.g., "2m 30s")
    """
    if seconds < 60:
        return f"{seconds:.1f}s"

    minutes = int(seconds // 60)
    remaining_seconds = int(seconds % 60)

    if minutes < 60:
        return f"{minutes}m {remaining_seconds}s"

    hours = minutes // 60
    remaining_minutes = minutes % 60
    return f"{hours}h {remaining_minutes}m {remaining_seconds}s"

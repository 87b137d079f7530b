"""
Function Model Module

This module represents transcendental self-maps of the punctured plane,

    f(z) = rot * z**n * exp(g(z) + h(1/z)),

with polynomial g and h without constant terms, and evaluates them in
log-polar coordinates (L = log|z|, theta = arg z) so that huge and tiny
moduli never have to be materialized.

Key responsibilities:
- Hold immutable map descriptions (CStarMap) that are safe to share across threads
- Evaluate maps and logarithmic derivatives, scalar and vectorized
- Enforce the representable horizon |L| <= L_max
- Parse and format the one-line map grammar
- Provide the Arnol'd family and the reflection/reciprocal companions of a map
"""

import cmath
import logging
import math
import re
from dataclasses import dataclass, field
from typing import Optional, Sequence, Tuple

import numpy as np

from .utils import HorizonExceeded, InvalidParameter, NonFinite, ParseError


logger = logging.getLogger(__name__)

TWO_PI = 2.0 * math.pi

# log-modulus headroom for deg-1 maps; divided by the polynomial degree
HORIZON_SCALE = 300.0


# ============================================================================
# Angles
# ============================================================================

def normalize_angle(theta: float) -> float:
    """
    Normalize an angle to [-pi, pi)

    Ties at +pi are mapped to -pi.
    """
    value = math.fmod(theta + math.pi, TWO_PI)
    if value < 0.0:
        value += TWO_PI
    value -= math.pi
    if value >= math.pi:
        value = -math.pi
    return value


def normalize_angles(theta: np.ndarray) -> np.ndarray:
    """Vectorized normalize_angle"""
    value = np.mod(np.asarray(theta, dtype=float) + math.pi, TWO_PI) - math.pi
    return np.where(value >= math.pi, -math.pi, value)


# ============================================================================
# Domain Types
# ============================================================================

@dataclass(frozen=True)
class LogPoint:
    """A point of the punctured plane in log-polar form"""
    L: float
    theta: float

    def __post_init__(self):
        if not math.isfinite(self.L):
            raise InvalidParameter(f"LogPoint needs a finite L, got {self.L}")
        if not math.isfinite(self.theta):
            raise InvalidParameter(f"LogPoint needs a finite theta, got {self.theta}")
        object.__setattr__(self, 'L', float(self.L))
        object.__setattr__(self, 'theta', normalize_angle(float(self.theta)))

    @property
    def symbol(self) -> str:
        """Essential symbol of the point: 'i' outside the unit circle, '0' on or inside"""
        return 'i' if self.L > 0.0 else '0'

    def conj(self) -> 'LogPoint':
        """Complex conjugate"""
        return LogPoint(self.L, -self.theta)

    def to_complex(self) -> complex:
        """Convert to a complex number (only meaningful for moderate L)"""
        return cmath.exp(complex(self.L, self.theta))

    @classmethod
    def from_complex(cls, z: complex) -> 'LogPoint':
        """Build from a nonzero complex number"""
        if z == 0:
            raise InvalidParameter("0 is not a point of the punctured plane")
        return cls(math.log(abs(z)), cmath.phase(z))


def _strip_trailing_zeros(coeffs: Sequence[complex]) -> Tuple[complex, ...]:
    values = [complex(c) for c in coeffs]
    while values and values[-1] == 0:
        values.pop()
    return tuple(values)


@dataclass(frozen=True)
class CStarMap:
    """
    Immutable description of rot * z**n * exp(g(z) + h(1/z))

    g_coeffs and h_coeffs hold c_1..c_d (no constant term). Trailing zero
    coefficients are dropped on construction so that equal maps compare equal.
    """
    index_n: int
    g_coeffs: Tuple[complex, ...]
    h_coeffs: Tuple[complex, ...]
    rot: complex = 1.0 + 0.0j
    label: str = field(default="", compare=False)
    horizon: Optional[float] = field(default=None, compare=False)

    def __post_init__(self):
        object.__setattr__(self, 'index_n', int(self.index_n))
        object.__setattr__(self, 'g_coeffs', _strip_trailing_zeros(self.g_coeffs))
        object.__setattr__(self, 'h_coeffs', _strip_trailing_zeros(self.h_coeffs))
        object.__setattr__(self, 'rot', complex(self.rot))

        if not self.g_coeffs:
            raise InvalidParameter("g must be non-constant (no nonzero coefficient)")
        if not self.h_coeffs:
            raise InvalidParameter("h must be non-constant (no nonzero coefficient)")
        for c in self.g_coeffs + self.h_coeffs + (self.rot,):
            if not (math.isfinite(c.real) and math.isfinite(c.imag)):
                raise NonFinite(f"Non-finite coefficient {c}")
        if abs(abs(self.rot) - 1.0) > 1e-12:
            raise InvalidParameter(f"rot must have modulus 1, got |rot| = {abs(self.rot)!r}")
        if self.horizon is not None and not self.horizon > 0:
            raise InvalidParameter(f"horizon must be positive, got {self.horizon}")
        if not self.label:
            object.__setattr__(self, 'label', format_map(self))

    @property
    def degree(self) -> int:
        """max(deg g, deg h)"""
        return max(len(self.g_coeffs), len(self.h_coeffs))

    @property
    def L_max(self) -> float:
        """Largest |log|z|| at which the map may be evaluated"""
        if self.horizon is not None:
            return float(self.horizon)
        return HORIZON_SCALE / self.degree

    @property
    def has_real_coefficients(self) -> bool:
        """True when g, h and rot are all real (conjugation symmetry holds)"""
        return all(c.imag == 0 for c in self.g_coeffs + self.h_coeffs + (self.rot,))

    def with_horizon(self, horizon: Optional[float]) -> 'CStarMap':
        """Copy of the map with a different evaluation horizon"""
        return CStarMap(self.index_n, self.g_coeffs, self.h_coeffs, self.rot,
                        label=self.label, horizon=horizon)

    def __str__(self) -> str:
        return self.label


# ============================================================================
# Polynomial helpers
# ============================================================================

def _poly(coeffs: Sequence[complex], u):
    """sum_j coeffs[j-1] * u**j by Horner's rule"""
    acc = 0.0
    for c in reversed(coeffs):
        acc = acc * u + c
    return acc * u


def _poly_derivative(coeffs: Sequence[complex], u):
    """Derivative of _poly with respect to u"""
    acc = 0.0
    for j in range(len(coeffs), 0, -1):
        acc = acc * u + j * coeffs[j - 1]
    return acc


# ============================================================================
# Evaluation
# ============================================================================

def eval_array(f: CStarMap, L, theta, strict: bool = True) -> Tuple[np.ndarray, np.ndarray]:
    """
    Evaluate the map on arrays of log-polar points

    Args:
        f: Map to evaluate
        L: Array of log-moduli
        theta: Array of angles (any real value; not required to be normalized)
        strict: Raise on out-of-horizon or non-finite entries. When False those
            entries come back as NaN instead.

    Returns:
        Tuple (L', Theta) where Theta is the unnormalized (continuous in theta)
        argument n*theta + arg(rot) + Im g(z) + Im h(1/z)

    Raises:
        HorizonExceeded: If |L| > L_max or the result overflows (strict only)
        NonFinite: If the evaluation produces NaN (strict only)
    """
    L = np.asarray(L, dtype=float)
    theta = np.asarray(theta, dtype=float)
    L, theta = np.broadcast_arrays(L, theta)

    outside = ~(np.abs(L) <= f.L_max)
    if strict and np.any(outside):
        worst = float(np.max(np.abs(np.where(np.isfinite(L), L, np.inf))))
        raise HorizonExceeded(f"|L| = {worst:.6g} exceeds horizon L_max = {f.L_max:.6g}")

    with np.errstate(all='ignore'):
        safe_L = np.where(outside, 0.0, L)
        z = np.exp(safe_L + 1j * theta)
        w = np.exp(-safe_L - 1j * theta)
        gz = _poly(f.g_coeffs, z)
        hw = _poly(f.h_coeffs, w)
        L_out = f.index_n * safe_L + np.real(gz) + np.real(hw)
        theta_out = f.index_n * theta + cmath.phase(f.rot) + np.imag(gz) + np.imag(hw)

    bad = ~(np.isfinite(L_out) & np.isfinite(theta_out)) & ~outside
    if strict and np.any(bad):
        if np.any(np.isnan(L_out[bad])) or np.any(np.isnan(theta_out[bad])):
            raise NonFinite(f"Evaluation of {f.label} produced NaN")
        raise HorizonExceeded(f"Evaluation of {f.label} overflowed the float range")

    invalid = outside | bad
    if np.any(invalid):
        L_out = np.where(invalid, np.nan, L_out)
        theta_out = np.where(invalid, np.nan, theta_out)
    return L_out, theta_out


def log_image_array(f: CStarMap, L, theta, strict: bool = True) -> np.ndarray:
    """log f as the complex array L' + i*Theta (continuous branch along theta)"""
    L_out, theta_out = eval_array(f, L, theta, strict=strict)
    return L_out + 1j * theta_out


def evaluate(f: CStarMap, z: LogPoint) -> LogPoint:
    """
    Evaluate the map at one point

    Args:
        f: Map to evaluate
        z: Point in log-polar form with |L| <= L_max

    Returns:
        Image point with normalized angle

    Raises:
        HorizonExceeded: If z lies beyond the horizon or the image overflows
        NonFinite: If the coefficients produce NaN
    """
    L_out, theta_out = eval_array(f, np.array([z.L]), np.array([z.theta]))
    return LogPoint(float(L_out[0]), float(theta_out[0]))


def log_derivative_array(f: CStarMap, L, theta) -> np.ndarray:
    """Vectorized f'/f = n/z + g'(z) - h'(1/z)/z**2"""
    L = np.asarray(L, dtype=float)
    theta = np.asarray(theta, dtype=float)
    if np.any(~(np.abs(L) <= f.L_max)):
        raise HorizonExceeded(f"log_derivative beyond horizon L_max = {f.L_max:.6g}")

    with np.errstate(all='ignore'):
        z = np.exp(L + 1j * theta)
        w = np.exp(-L - 1j * theta)
        value = f.index_n * w + _poly_derivative(f.g_coeffs, z) - _poly_derivative(f.h_coeffs, w) * w * w

    if not np.all(np.isfinite(value)):
        raise HorizonExceeded(f"log_derivative of {f.label} overflowed")
    return value


def log_derivative(f: CStarMap, z: LogPoint) -> complex:
    """
    Logarithmic derivative f'(z)/f(z)

    Args:
        f: Map
        z: Point within the horizon

    Returns:
        Finite complex value

    Raises:
        HorizonExceeded: As for evaluate
    """
    return complex(log_derivative_array(f, np.array([z.L]), np.array([z.theta]))[0])


# ============================================================================
# Constructors
# ============================================================================

def arnold(alpha: float, beta: float, horizon: Optional[float] = None) -> CStarMap:
    """
    Arnol'd family z * e^{i alpha} * exp(beta (z - 1/z) / 2)

    Raises:
        InvalidParameter: If beta <= 0
    """
    if not beta > 0:
        raise InvalidParameter(f"arnold requires beta > 0, got {beta}")
    return CStarMap(
        index_n=1,
        g_coeffs=(complex(beta / 2.0),),
        h_coeffs=(complex(-beta / 2.0),),
        rot=complex(math.cos(alpha), math.sin(alpha)),
        label=f"arnold({alpha!r}, {beta!r})",
        horizon=horizon,
    )


def reflect(f: CStarMap) -> CStarMap:
    """f(1/z) = rot * z**(-n) * exp(h(z) + g(1/z)); swaps the roles of 0 and infinity"""
    return CStarMap(-f.index_n, f.h_coeffs, f.g_coeffs, f.rot, horizon=f.horizon)


def reciprocal(f: CStarMap) -> CStarMap:
    """1/f = conj(rot) * z**(-n) * exp(-g(z) - h(1/z))"""
    return CStarMap(
        -f.index_n,
        tuple(-c for c in f.g_coeffs),
        tuple(-c for c in f.h_coeffs),
        f.rot.conjugate(),
        horizon=f.horizon,
    )


# ============================================================================
# Grammar
# ============================================================================

_ARNOLD_RE = re.compile(r'^\s*arnold\s*\(\s*([^,()]+?)\s*,\s*([^,()]+?)\s*\)\s*$')
_NUMBER_RE = re.compile(r'(?:\d+\.?\d*|\.\d+)(?:[eE][+-]?\d+)?')


class _MapParser:
    """Recursive-descent parser for the general `n=...; g=...; h=...` form"""

    def __init__(self, text: str):
        self.text = text.replace('−', '-')
        self.pos = 0

    def error(self, reason: str, position: Optional[int] = None) -> ParseError:
        return ParseError(reason, self.pos if position is None else position, self.text)

    def skip_ws(self):
        while self.pos < len(self.text) and self.text[self.pos].isspace():
            self.pos += 1

    def peek(self) -> str:
        self.skip_ws()
        return self.text[self.pos] if self.pos < len(self.text) else ''

    def at(self, chars: str) -> bool:
        char = self.peek()
        return bool(char) and char in chars

    def expect(self, char: str):
        if self.peek() != char:
            raise self.error(f"Expected '{char}'")
        self.pos += 1

    def number(self) -> float:
        self.skip_ws()
        match = _NUMBER_RE.match(self.text, self.pos)
        if not match:
            raise self.error("Expected a number")
        self.pos = match.end()
        return float(match.group(0))

    def integer(self) -> int:
        self.skip_ws()
        start = self.pos
        sign = 1
        if self.at('+-'):
            sign = -1 if self.text[self.pos] == '-' else 1
            self.pos += 1
        self.skip_ws()
        digits_start = self.pos
        while self.pos < len(self.text) and self.text[self.pos].isdigit():
            self.pos += 1
        if self.pos == digits_start:
            raise self.error("Expected an integer", start)
        return sign * int(self.text[digits_start:self.pos])

    def complex_literal(self) -> complex:
        start = self.pos
        self.expect('(')
        depth_end = self.text.find(')', self.pos)
        if depth_end < 0:
            raise self.error("Unclosed '('", start)
        body = self.text[self.pos:depth_end].replace(' ', '')
        try:
            value = complex(body)
        except ValueError:
            raise self.error(f"Invalid complex literal '{body}'", start) from None
        self.pos = depth_end + 1
        return value

    def poly(self, var: str, name: str) -> Tuple[complex, ...]:
        coeffs = {}
        start = self.pos
        first = True
        while True:
            char = self.peek()
            sign = 1.0
            if self.at('+-'):
                sign = -1.0 if char == '-' else 1.0
                self.pos += 1
                char = self.peek()
            elif not first:
                break
            term_start = self.pos
            if char == '(':
                coefficient = self.complex_literal()
            elif char and (char.isdigit() or char == '.'):
                coefficient = complex(self.number())
            else:
                coefficient = 1.0 + 0.0j
            char = self.peek()
            if char != var:
                if char and char.isalpha():
                    raise self.error(f"{name} uses variable '{var}', found '{char}'")
                raise self.error(f"Constant term not permitted in {name}", term_start)
            self.pos += 1
            power = 1
            if self.peek() == '^':
                self.pos += 1
                power = self.integer()
                if power < 1:
                    raise self.error(f"Exponent must be >= 1 in {name}")
            coeffs[power] = coeffs.get(power, 0) + sign * coefficient
            first = False
            if not self.at('+-'):
                break

        degree = max(coeffs) if coeffs else 0
        values = tuple(coeffs.get(j, 0j) for j in range(1, degree + 1))
        if not any(c != 0 for c in values):
            raise self.error(f"{name} must be non-constant", start)
        return values

    def parse(self, horizon: Optional[float]) -> CStarMap:
        items = {}
        while True:
            self.skip_ws()
            key_start = self.pos
            while self.pos < len(self.text) and self.text[self.pos].isalpha():
                self.pos += 1
            key = self.text[key_start:self.pos]
            if key not in ('n', 'g', 'h', 'rot'):
                raise self.error(f"Unknown key '{key}'", key_start)
            if key in items:
                raise self.error(f"Duplicate key '{key}'", key_start)
            self.expect('=')
            if key == 'n':
                items[key] = self.integer()
            elif key == 'g':
                items[key] = self.poly('z', 'g')
            elif key == 'h':
                items[key] = self.poly('w', 'h')
            else:
                if self.peek() == '(':
                    items[key] = self.complex_literal()
                else:
                    sign = 1.0
                    if self.at('+-'):
                        sign = -1.0 if self.text[self.pos] == '-' else 1.0
                        self.pos += 1
                    angle = sign * self.number()
                    items[key] = complex(math.cos(angle), math.sin(angle))
            if self.peek() == ';':
                self.pos += 1
                if self.peek() == '':
                    break
                continue
            if self.peek() != '':
                raise self.error("Expected ';' or end of input")
            break

        for required in ('n', 'g', 'h'):
            if required not in items:
                raise self.error(f"Missing key '{required}'")
        try:
            return CStarMap(items['n'], items['g'], items['h'], items.get('rot', 1.0 + 0.0j),
                            horizon=horizon)
        except InvalidParameter as e:
            raise self.error(str(e), 0) from None


def parse_map(spec: str, horizon: Optional[float] = None) -> CStarMap:
    """
    Parse a one-line map specification

    Grammar:
        arnold(<float>, <float>)
        n=<int>; g=<poly in z>; h=<poly in w>[; rot=<angle> | rot=(<re>+<im>j)]

    Args:
        spec: Specification string
        horizon: Optional evaluation horizon override

    Returns:
        CStarMap

    Raises:
        ParseError: With position and reason
    """
    if spec is None or not spec.strip():
        raise ParseError("Empty map specification", 0, spec or "")

    match = _ARNOLD_RE.match(spec)
    if match:
        try:
            alpha = float(match.group(1))
            beta = float(match.group(2))
        except ValueError:
            raise ParseError("arnold expects two numbers", match.start(1), spec) from None
        try:
            return arnold(alpha, beta, horizon=horizon)
        except InvalidParameter as e:
            raise ParseError(str(e), match.start(2), spec) from None

    return _MapParser(spec).parse(horizon)


def _format_coefficient(c: complex, first: bool) -> str:
    if c.imag == 0:
        value = c.real
        if first:
            return repr(value)
        return f" - {abs(value)!r}" if value < 0 else f" + {value!r}"
    literal = f"({c.real!r}{'+' if c.imag >= 0 else '-'}{abs(c.imag)!r}j)"
    return literal if first else f" + {literal}"


def _format_poly(coeffs: Sequence[complex], var: str) -> str:
    parts = []
    for j, c in enumerate(coeffs, start=1):
        if c == 0:
            continue
        suffix = var if j == 1 else f"{var}^{j}"
        parts.append(_format_coefficient(c, not parts) + suffix)
    return ''.join(parts)


def format_map(f: CStarMap) -> str:
    """
    Format a map in the one-line grammar

    parse_map(format_map(f)) == f for every map.
    """
    if f.label.startswith('arnold('):
        try:
            if parse_map(f.label) == f:
                return f.label
        except ParseError:
            pass

    text = f"n={f.index_n}; g={_format_poly(f.g_coeffs, 'z')}; h={_format_poly(f.h_coeffs, 'w')}"
    if f.rot != 1:
        text += f"; rot=({f.rot.real!r}{'+' if f.rot.imag >= 0 else '-'}{abs(f.rot.imag)!r}j)"
    return text

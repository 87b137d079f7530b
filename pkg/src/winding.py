"""
Winding Module

Argument-principle oracle for covering certificates: counts the solutions
of f(z) = w inside an annulus as the difference of the winding numbers of
f - w along its outer and inner boundary circles.

Key responsibilities:
- Trapezoid rule for (1/2 pi i) * integral of f'/(f - w) dz with doubling refinement
- Continuous-argument fallback for circles where the integrand oscillates
  too fast for quadrature
- Deterministic target draws and the per-certificate oracle summary

Everything is evaluated through G = log f - log w, so neither f(z) nor w is
ever materialized.
"""

import cmath
import logging
import math
from dataclasses import dataclass, field
from typing import List, Optional, Tuple

import numpy as np

from .function_model import TWO_PI, CStarMap, eval_array, log_derivative_array
from .utils import HorizonExceeded, OracleInconclusive, SplitMix64


logger = logging.getLogger(__name__)

MIN_NODES = 256
MAX_NODES = 65536
SETTLE_DISTANCE = 0.1
SCAN_NODES = 4096

_GOLDEN = (math.sqrt(5.0) - 1.0) / 2.0


@dataclass
class WindingResult:
    """Winding number of f - w along one circle"""
    value: int
    method: str  # trapezoid | lift


@dataclass
class OracleResult:
    """Preimage counts for the deterministic targets of one certificate"""
    targets_tested: int
    min_preimage_count: Optional[int]
    status: str  # pass | fail | inconclusive | horizon | skipped
    seed: int
    counts: List[int] = field(default_factory=list)
    methods: List[str] = field(default_factory=list)
    message: str = ""

    @property
    def passed(self) -> bool:
        return self.status == 'pass'

    def to_dict(self) -> dict:
        return {
            'targets_tested': self.targets_tested,
            'min_preimage_count': self.min_preimage_count,
            'status': self.status,
            'seed': self.seed,
            'counts': list(self.counts),
            'methods': list(self.methods),
            'message': self.message,
        }


def _log_ratio(f: CStarMap, log_r: float, theta: np.ndarray, L_w: float, theta_w: float) -> np.ndarray:
    """G(theta) = log f(r e^{i theta}) - log w, with a continuous imaginary part"""
    L_out, arg_out = eval_array(f, np.full(theta.shape, log_r), theta)
    return (L_out - L_w) + 1j * (arg_out - theta_w)


# ============================================================================
# Trapezoid rule
# ============================================================================

def _trapezoid(f: CStarMap, log_r: float, L_w: float, theta_w: float, nodes: int) -> complex:
    theta = -math.pi + (TWO_PI / nodes) * np.arange(nodes)
    G = _log_ratio(f, log_r, theta, L_w, theta_w)
    z = np.exp(log_r + 1j * theta)
    z_dlog = z * log_derivative_array(f, np.full(theta.shape, log_r), theta)

    with np.errstate(all='ignore'):
        positive = G.real >= 0
        t = np.where(positive, np.exp(-np.where(positive, G, 0)), np.exp(np.where(positive, 0, G)))
        # f'/(f - w) = (f'/f) / (1 - w/f)
        factor = np.where(positive, 1.0 / (1.0 - t), -t / (1.0 - t))
        values = z_dlog * factor
    if not np.all(np.isfinite(values)):
        return complex(math.nan, math.nan)
    return complex(np.mean(values))


def trapezoid_winding(f: CStarMap, log_r: float, L_w: float, theta_w: float,
                      min_nodes: int = MIN_NODES, max_nodes: int = MAX_NODES) -> Optional[int]:
    """
    Winding number by the trapezoid rule, doubling the node count

    Returns:
        The integer once two consecutive estimates settle within 0.1 of it,
        or None when the integrand oscillates too fast or never settles
    """
    probe = -math.pi + (TWO_PI / min_nodes) * np.arange(min_nodes)
    speed = np.max(np.abs(np.exp(log_r + 1j * probe) *
                          log_derivative_array(f, np.full(probe.shape, log_r), probe)))
    if not speed < max_nodes / 16:
        logger.debug(f"Trapezoid skipped at log r={log_r:.6g}: argument speed {speed:.3g}")
        return None

    previous = None
    nodes = min_nodes
    while nodes <= max_nodes:
        value = _trapezoid(f, log_r, L_w, theta_w, nodes)
        if math.isfinite(value.real) and math.isfinite(value.imag):
            nearest = round(value.real)
            settled = abs(value.real - nearest) < SETTLE_DISTANCE and abs(value.imag) < SETTLE_DISTANCE
            if settled and previous == nearest:
                return int(nearest)
            previous = nearest if settled else None
        nodes *= 2
    return None


# ============================================================================
# Continuous argument
# ============================================================================

def _branch_argument(G: complex, outside: bool) -> float:
    """
    arg(f - w) - arg(w) up to a constant multiple of 2 pi

    outside (|f| >= |w|): Im G + Arg(1 - e^{-G}); otherwise pi + Arg(1 - e^{G}).
    Each form is continuous on its side of |f| = |w|.
    """
    if outside:
        return G.imag + cmath.phase(1.0 - cmath.exp(-G))
    return math.pi + cmath.phase(1.0 - cmath.exp(G))


def _modulus_gap_roots(f: CStarMap, log_r: float, L_w: float, scan: int) -> List[float]:
    """Angles in (-pi, pi) where log|f| = log|w| on the circle"""
    theta = -math.pi + (TWO_PI / scan) * np.arange(scan + 1)
    gap = eval_array(f, np.full(theta.shape, log_r), theta)[0] - L_w

    def gap_at(t: float) -> float:
        return float(eval_array(f, np.array([log_r]), np.array([t]))[0][0] - L_w)

    def bisect(a: float, b: float) -> float:
        ga = gap_at(a)
        for _ in range(80):
            m = 0.5 * (a + b)
            gm = gap_at(m)
            if (gm >= 0) == (ga >= 0):
                a, ga = m, gm
            else:
                b = m
            if b - a <= 1e-15:
                break
        return 0.5 * (a + b)

    brackets = []
    positive = gap >= 0
    for k in range(scan):
        if positive[k] != positive[k + 1]:
            brackets.append((theta[k], theta[k + 1]))

    # a pair of roots hidden between two samples shows up as a shallow extremum
    for k in range(1, scan):
        if positive[k - 1] != positive[k] or positive[k] != positive[k + 1]:
            continue
        sign = 1.0 if positive[k] else -1.0
        if not (sign * gap[k] <= sign * gap[k - 1] and sign * gap[k] <= sign * gap[k + 1]):
            continue
        a, b = theta[k - 1], theta[k + 1]
        for _ in range(100):
            c = b - _GOLDEN * (b - a)
            d = a + _GOLDEN * (b - a)
            if sign * gap_at(c) < sign * gap_at(d):
                b = d
            else:
                a = c
            if b - a <= 1e-14:
                break
        low_theta = 0.5 * (a + b)
        if sign * gap_at(low_theta) < 0:
            brackets.append((theta[k - 1], low_theta))
            brackets.append((low_theta, theta[k + 1]))

    roots = sorted(bisect(a, b) for a, b in brackets)
    return [r for r in roots if -math.pi < r < math.pi]


def lift_winding(f: CStarMap, log_r: float, L_w: float, theta_w: float, scan: int = SCAN_NODES) -> int:
    """
    Winding number by following a continuous argument of f - w

    The circle is cut where |f| = |w|; on each arc one of two closed-form
    branches is continuous, and the branches are glued at the cuts by the
    nearest multiple of 2 pi.

    Raises:
        OracleInconclusive: If the glue or the total is not close to an integer,
            or the argument exceeds the range where doubles resolve 2 pi
    """
    scan = max(scan, 256 * f.degree)
    roots = _modulus_gap_roots(f, log_r, L_w, scan)
    cuts = [-math.pi] + roots + [math.pi]

    def G_at(t: float) -> complex:
        return complex(_log_ratio(f, log_r, np.array([t]), L_w, theta_w)[0])

    total = 0.0
    previous_end: Optional[float] = None
    largest_arg = 0.0
    for a, b in zip(cuts, cuts[1:]):
        if b <= a:
            continue
        outside = G_at(0.5 * (a + b)).real >= 0
        G_a, G_b = G_at(a), G_at(b)
        largest_arg = max(largest_arg, abs(G_a.imag), abs(G_b.imag))
        start = _branch_argument(G_a, outside)
        end = _branch_argument(G_b, outside)
        if previous_end is not None:
            jump = previous_end - start
            turns = round(jump / TWO_PI)
            if abs(jump - turns * TWO_PI) > 0.5:
                raise OracleInconclusive(f"Argument branches disagree by {jump:.6g} at theta={a:.6g}")
            total += turns * TWO_PI
        total += end - start
        previous_end = end

    if largest_arg * 1e-15 > 0.1:
        raise OracleInconclusive(f"Argument {largest_arg:.3g} too large to resolve 2 pi at log r={log_r:.6g}")
    winding = total / TWO_PI
    nearest = round(winding)
    if abs(winding - nearest) > 0.25:
        raise OracleInconclusive(f"Lifted winding {winding:.6g} is not near an integer")
    return int(nearest)


def winding_number(f: CStarMap, log_r: float, L_w: float, theta_w: float) -> WindingResult:
    """Winding number of f - w around the circle of log-radius log_r"""
    value = trapezoid_winding(f, log_r, L_w, theta_w)
    if value is not None:
        return WindingResult(value, 'trapezoid')
    return WindingResult(lift_winding(f, log_r, L_w, theta_w), 'lift')


def count_preimages(f: CStarMap, inner_log_r: float, outer_log_r: float,
                    L_w: float, theta_w: float) -> Tuple[int, str]:
    """
    Number of solutions of f(z) = w with inner < log|z| < outer

    Returns:
        (count, method) where method names the schemes used on both circles

    Raises:
        HorizonExceeded: If a boundary circle lies beyond the horizon
        OracleInconclusive: If neither scheme settles
    """
    if not max(abs(inner_log_r), abs(outer_log_r)) <= f.L_max:
        raise HorizonExceeded(f"Annulus [{inner_log_r:.6g}, {outer_log_r:.6g}] beyond the horizon")
    outer = winding_number(f, outer_log_r, L_w, theta_w)
    inner = winding_number(f, inner_log_r, L_w, theta_w)
    return outer.value - inner.value, f"{outer.method}/{inner.method}"


# ============================================================================
# Oracle
# ============================================================================

def draw_targets(seed: int, inner_log_r: float, outer_log_r: float, count: int) -> List[Tuple[float, float]]:
    """Targets log-uniform in modulus and uniform in angle, from a splitmix stream"""
    rng = SplitMix64(seed)
    targets = []
    for _ in range(count):
        L = inner_log_r + rng.uniform() * (outer_log_r - inner_log_r)
        theta = -math.pi + TWO_PI * rng.uniform()
        targets.append((L, theta))
    return targets


def run_oracle(f: CStarMap, source: Tuple[float, float], target: Tuple[float, float],
               targets: int, seed: int) -> OracleResult:
    """
    Count preimages in the source annulus of deterministic targets in the target annulus

    Args:
        f: Map
        source: (inner, outer) log-radii of the annulus searched for preimages
        target: (inner, outer) log-radii of the annulus the targets are drawn from
        targets: Number of targets
        seed: Stream seed (already specific to the certificate)

    Returns:
        OracleResult; never raises for numerical trouble
    """
    if targets <= 0:
        return OracleResult(0, None, 'skipped', seed)
    if not max(abs(source[0]), abs(source[1])) <= f.L_max:
        return OracleResult(0, None, 'horizon', seed, message="source annulus beyond the horizon")

    result = OracleResult(0, None, 'pass', seed)
    for L_w, theta_w in draw_targets(seed, target[0], target[1], targets):
        try:
            count, method = count_preimages(f, source[0], source[1], L_w, theta_w)
        except OracleInconclusive as e:
            logger.warning(f"Oracle inconclusive for target (L={L_w:.6g}, theta={theta_w:.6g}): {e}")
            result.status = 'inconclusive'
            result.message = str(e)
            break
        result.targets_tested += 1
        result.counts.append(count)
        result.methods.append(method)

    if result.counts:
        result.min_preimage_count = min(result.counts)
    if result.status == 'pass' and (result.min_preimage_count is None or result.min_preimage_count < 1):
        result.status = 'fail'
    return result

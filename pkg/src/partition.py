"""
Partition Module

Builds the annular partition {A_n} of the punctured plane, records the
essential and annular itineraries of orbits, classifies escape behavior at
a finite horizon, and tests membership in the fast escaping sets on the
representable prefix of an orbit.

Key responsibilities:
- AnnularPartition: band boundaries log M^n(R+) and log m^n(R-)
- Band lookup with the half-open conventions of the partition
- Vectorized orbit iteration shared by classify_orbit and the raster
- Finite-horizon verdicts (escapes_to_infinity, escapes_to_zero,
  escapes_mixed, bounded_so_far, undetermined)
- Fast-escape tests, shift search over (ell, k) and the R0-consistency check
"""

import bisect
import logging
import math
from dataclasses import dataclass, field
from typing import List, Optional, Sequence, Tuple

import numpy as np

from .function_model import CStarMap, LogPoint, eval_array, normalize_angles
from .itinerary import INFINITY, ZERO, EssentialItinerary, symbol_of
from .modulus import DEFAULT_PROBES, DEFAULT_TOL, iterate_radius
from .utils import InvalidParameter, NotExpanding


logger = logging.getLogger(__name__)

VERDICTS = (
    'escapes_to_infinity',
    'escapes_to_zero',
    'escapes_mixed',
    'bounded_so_far',
    'undetermined',
)

DEFAULT_THETA_ESCAPE = 50.0
DEFAULT_TRAILING_RUN = 3
COMPARE_TOL = 1e-9

# exit reasons of the orbit kernel
EXIT_BUDGET = 0
EXIT_HORIZON = 1
EXIT_DEEP = 2
EXIT_NONFINITE = 3
EXIT_NAMES = ('budget', 'horizon', 'deep_escape', 'nonfinite')


# ============================================================================
# Annular partition
# ============================================================================

@dataclass
class AnnularPartition:
    """Band boundaries of {A_n}; upper grows from log R+, lower falls from log R-"""
    log_R_plus: float
    log_R_minus: float
    upper: List[float]
    lower: List[float]
    upper_truncation: str = 'requested_depth'
    lower_truncation: str = 'requested_depth'

    @property
    def depth_plus(self) -> int:
        return len(self.upper) - 1

    @property
    def depth_minus(self) -> int:
        return len(self.lower) - 1

    def locate(self, L: float) -> Tuple[int, bool]:
        """
        Band index of a log-modulus and whether it saturated

        A_n (n > 0): upper[n-1] <= L < upper[n]
        A_n (n < 0): lower[-n] < L <= lower[-n-1]
        A_0: log_R_minus < L < log_R_plus
        """
        if L >= self.upper[0]:
            n = bisect.bisect_right(self.upper, L)
            return n, n == len(self.upper)
        if L <= self.lower[0]:
            flipped = [-x for x in self.lower]
            n = bisect.bisect_right(flipped, -L)
            return -n, n == len(self.lower)
        return 0, False

    def band(self, n: int) -> Tuple[float, float]:
        """(low, high) log bounds of A_n"""
        if n == 0:
            return self.log_R_minus, self.log_R_plus
        if n > 0:
            if n >= len(self.upper):
                raise InvalidParameter(f"A_{n} lies beyond the tabulated depth {self.depth_plus}")
            return self.upper[n - 1], self.upper[n]
        if -n >= len(self.lower):
            raise InvalidParameter(f"A_{n} lies beyond the tabulated depth {self.depth_minus}")
        return self.lower[-n], self.lower[-n - 1]

    def to_dict(self) -> dict:
        return {
            'log_R_plus': self.log_R_plus,
            'log_R_minus': self.log_R_minus,
            'upper': list(self.upper),
            'lower': list(self.lower),
            'upper_truncation': self.upper_truncation,
            'lower_truncation': self.lower_truncation,
        }


def build_partition(f: CStarMap, log_R_plus: float, log_R_minus: float, depth: int,
                    tol: float = DEFAULT_TOL, probes: int = DEFAULT_PROBES) -> AnnularPartition:
    """
    Tabulate log M^n(R+) and log m^n(R-) up to depth or the horizon

    Raises:
        InvalidParameter: Unless log_R_minus < 0 < log_R_plus
        NotExpanding: If M(R+) <= R+, m(R-) >= R-, or monotonicity fails
    """
    if not (log_R_minus < 0.0 < log_R_plus):
        raise InvalidParameter(
            f"Partition needs log_R_minus < 0 < log_R_plus, got {log_R_minus} and {log_R_plus}"
        )
    if depth < 1:
        raise InvalidParameter(f"Partition depth must be >= 1, got {depth}")

    outward = iterate_radius(f, EssentialItinerary.constant(INFINITY), log_R_plus, depth, tol, probes)
    inward = iterate_radius(f, EssentialItinerary.constant(ZERO), log_R_minus, depth, tol, probes)
    upper, lower = outward.log_R, inward.log_R

    if len(upper) > 1 and not upper[1] > upper[0]:
        raise NotExpanding(f"M(R+) <= R+ at log R+ = {log_R_plus:.6g} (log M = {upper[1]:.6g})")
    if len(lower) > 1 and not lower[1] < lower[0]:
        raise NotExpanding(f"m(R-) >= R- at log R- = {log_R_minus:.6g} (log m = {lower[1]:.6g})")
    if any(b <= a for a, b in zip(upper, upper[1:])):
        raise NotExpanding("Upper band boundaries are not strictly increasing")
    if any(b >= a for a, b in zip(lower, lower[1:])):
        raise NotExpanding("Lower band boundaries are not strictly decreasing")

    partition = AnnularPartition(
        log_R_plus=float(log_R_plus),
        log_R_minus=float(log_R_minus),
        upper=upper,
        lower=lower,
        upper_truncation=outward.truncation_reason,
        lower_truncation=inward.truncation_reason,
    )
    logger.info(
        f"Partition for {f.label}: {partition.depth_plus} upper and {partition.depth_minus} lower bands "
        f"({outward.truncation_reason}/{inward.truncation_reason})"
    )
    return partition


def annulus_index(partition: AnnularPartition, L: float) -> int:
    """Band index of L; saturated indices are +-(depth+1) (see partition.locate for the flag)"""
    return partition.locate(L)[0]


def annulus_indices(partition: AnnularPartition, L: np.ndarray) -> np.ndarray:
    """Vectorized annulus_index"""
    L = np.asarray(L, dtype=float)
    upper = np.asarray(partition.upper)
    flipped = -np.asarray(partition.lower)
    above = np.searchsorted(upper, L, side='right')
    below = np.searchsorted(flipped, -L, side='right')
    return np.where(L >= upper[0], above, np.where(L <= partition.lower[0], -below, 0)).astype(int)


def growth_constraint_holds(indices: Sequence[int]) -> bool:
    """s_{k+1} <= s_k + 1 when s_k > 0 and s_{k+1} >= s_k - 1 when s_k < 0"""
    for a, b in zip(indices, indices[1:]):
        if a > 0 and b > a + 1:
            return False
        if a < 0 and b < a - 1:
            return False
    return True


# ============================================================================
# Orbit kernel
# ============================================================================

@dataclass
class OrbitBatch:
    """Orbits of many start points; sample arrays are (budget+1, count), NaN-padded"""
    L: np.ndarray
    theta: np.ndarray
    lengths: np.ndarray
    exits: np.ndarray
    verdicts: np.ndarray


def iterate_orbits(f: CStarMap, L0, theta0, budget: int,
                   theta_escape: float = DEFAULT_THETA_ESCAPE,
                   trailing_run: int = DEFAULT_TRAILING_RUN) -> OrbitBatch:
    """
    Iterate many orbits in lockstep and assign verdicts

    An orbit stops when the budget is spent, when its last sample lies beyond
    the horizon, when |L| > theta_escape for trailing_run consecutive
    samples, or when evaluation stops producing finite numbers.
    """
    if budget < 1:
        raise InvalidParameter(f"budget must be >= 1, got {budget}")
    if not theta_escape > 0:
        raise InvalidParameter(f"theta_escape must be positive, got {theta_escape}")
    if trailing_run < 1:
        raise InvalidParameter(f"trailing_run must be >= 1, got {trailing_run}")

    L0 = np.atleast_1d(np.asarray(L0, dtype=float))
    theta0 = np.atleast_1d(np.asarray(theta0, dtype=float))
    count = L0.size

    Ls = np.full((budget + 1, count), np.nan)
    Ts = np.full((budget + 1, count), np.nan)
    Ls[0] = L0
    Ts[0] = normalize_angles(theta0)
    lengths = np.ones(count, dtype=int)
    exits = np.full(count, EXIT_BUDGET, dtype=int)
    run = (np.abs(L0) > theta_escape).astype(int)
    active = np.ones(count, dtype=bool)

    finished = active & (run >= trailing_run)
    exits[finished] = EXIT_DEEP
    active &= ~finished

    for k in range(1, budget + 1):
        current = Ls[k - 1]
        beyond = active & ~(np.abs(current) <= f.L_max)
        exits[beyond] = EXIT_HORIZON
        active &= ~beyond
        idx = np.flatnonzero(active)
        if idx.size == 0:
            break

        L_next, T_next = eval_array(f, current[idx], Ts[k - 1][idx], strict=False)
        ok = np.isfinite(L_next) & np.isfinite(T_next)
        failed = idx[~ok]
        exits[failed] = EXIT_NONFINITE
        active[failed] = False

        good = idx[ok]
        Ls[k, good] = L_next[ok]
        Ts[k, good] = normalize_angles(T_next[ok])
        lengths[good] = k + 1
        run[good] = np.where(np.abs(L_next[ok]) > theta_escape, run[good] + 1, 0)
        deep = good[run[good] >= trailing_run]
        exits[deep] = EXIT_DEEP
        active[deep] = False

    verdicts = _verdicts(Ls, lengths, exits, theta_escape, trailing_run)
    return OrbitBatch(L=Ls, theta=Ts, lengths=lengths, exits=exits, verdicts=verdicts)


def _verdicts(Ls: np.ndarray, lengths: np.ndarray, exits: np.ndarray,
              theta_escape: float, trailing_run: int) -> np.ndarray:
    """Verdict index (into VERDICTS) per orbit"""
    count = lengths.size
    columns = np.arange(count)
    last = Ls[lengths - 1, columns]

    all_out = np.ones(count, dtype=bool)
    all_in = np.ones(count, dtype=bool)
    for offset in range(1, trailing_run + 1):
        row = lengths - offset
        valid = row >= 0
        values = Ls[np.maximum(row, 0), columns]
        all_out &= ~valid | (values > 0)
        all_in &= ~valid | (values <= 0)

    escaped = (exits == EXIT_HORIZON) | (exits == EXIT_DEEP)
    verdicts = np.full(count, VERDICTS.index('undetermined'), dtype=int)
    verdicts[escaped & all_out & (last > 0)] = VERDICTS.index('escapes_to_infinity')
    verdicts[escaped & all_in & (last <= 0)] = VERDICTS.index('escapes_to_zero')
    verdicts[escaped & ~all_out & ~all_in] = VERDICTS.index('escapes_mixed')
    budget_spent = exits == EXIT_BUDGET
    verdicts[budget_spent & (np.abs(last) <= theta_escape)] = VERDICTS.index('bounded_so_far')
    return verdicts


def padded_prefix(symbols: str, verdict: str, length: int) -> str:
    """
    Essential prefix of a fixed length

    Orbits that left through one side continue symbolically with that side's
    symbol; any other short orbit is padded with '-'.
    """
    if len(symbols) >= length:
        return symbols[:length]
    if verdict == 'escapes_to_infinity':
        fill = INFINITY
    elif verdict == 'escapes_to_zero':
        fill = ZERO
    else:
        fill = '-'
    return symbols + fill * (length - len(symbols))


# ============================================================================
# Orbit records
# ============================================================================

@dataclass
class OrbitRecord:
    """One classified orbit"""
    start: LogPoint
    samples: List[LogPoint]
    essential_symbols: List[str]
    annular_indices: List[int]
    verdict: str
    horizon_hit: bool
    exit_reason: str = 'budget'

    @property
    def checked_depth(self) -> int:
        return len(self.samples) - 1

    def essential_prefix(self, length: Optional[int] = None) -> str:
        symbols = ''.join(self.essential_symbols)
        return symbols if length is None else padded_prefix(symbols, self.verdict, length)

    def annular_prefix(self) -> str:
        return ';'.join(str(s) for s in self.annular_indices)


def _record_from_batch(batch: OrbitBatch, column: int, partition: Optional[AnnularPartition]) -> OrbitRecord:
    n = int(batch.lengths[column])
    Ls = batch.L[:n, column]
    Ts = batch.theta[:n, column]
    samples = [LogPoint(float(L), float(T)) for L, T in zip(Ls, Ts)]
    indices = [partition.locate(float(L))[0] for L in Ls] if partition is not None else []
    exit_code = int(batch.exits[column])
    return OrbitRecord(
        start=samples[0],
        samples=samples,
        essential_symbols=[symbol_of(float(L)) for L in Ls],
        annular_indices=indices,
        verdict=VERDICTS[int(batch.verdicts[column])],
        horizon_hit=exit_code == EXIT_HORIZON,
        exit_reason=EXIT_NAMES[exit_code],
    )


def classify_orbit(f: CStarMap, z0: LogPoint, budget: int,
                   theta_escape: float = DEFAULT_THETA_ESCAPE,
                   trailing_run: int = DEFAULT_TRAILING_RUN,
                   partition: Optional[AnnularPartition] = None) -> OrbitRecord:
    """
    Iterate one orbit and classify it at finite horizon

    Args:
        f: Map
        z0: Start point
        budget: Maximum number of iterations (>= 1)
        theta_escape: |L| level treated as deep escape
        trailing_run: Consecutive deep samples that end the orbit
        partition: When given, annular indices are recorded

    Returns:
        OrbitRecord; every outcome is a verdict, nothing is raised for dynamics
    """
    batch = iterate_orbits(f, [z0.L], [z0.theta], budget, theta_escape, trailing_run)
    record = _record_from_batch(batch, 0, partition)
    if partition is not None and not growth_constraint_holds(record.annular_indices):
        logger.warning(f"Annular growth constraint violated from {z0}: {record.annular_indices}")
    return record


def classify_orbits(f: CStarMap, points: Sequence[LogPoint], budget: int,
                    theta_escape: float = DEFAULT_THETA_ESCAPE,
                    trailing_run: int = DEFAULT_TRAILING_RUN,
                    partition: Optional[AnnularPartition] = None) -> List[OrbitRecord]:
    """classify_orbit for many start points in one vectorized pass"""
    if not points:
        return []
    batch = iterate_orbits(f, [p.L for p in points], [p.theta for p in points],
                           budget, theta_escape, trailing_run)
    return [_record_from_batch(batch, i, partition) for i in range(len(points))]


# ============================================================================
# Fast escape
# ============================================================================

@dataclass
class FastEscapeStep:
    """One comparison of an orbit sample against the radius sequence"""
    n: int
    orbit_L: float
    log_R: float
    symbol: str
    holds: bool


@dataclass
class FastEscapeResult:
    """Outcome of fast_escape_test; checked_depth is -1 when nothing could be compared"""
    holds_on_prefix: bool
    checked_depth: int
    trace: List[FastEscapeStep] = field(default_factory=list)


def _orbit_log_moduli(f: CStarMap, z0: LogPoint, steps: int) -> List[float]:
    """L of z0, f(z0), ... as far as the horizon allows (at most steps + 1 values)"""
    Ls = [z0.L]
    L, theta = np.array([z0.L]), np.array([z0.theta])
    for _ in range(steps):
        if not abs(float(L[0])) <= f.L_max:
            break
        L, theta = eval_array(f, L, theta, strict=False)
        if not np.isfinite(L[0]):
            break
        Ls.append(float(L[0]))
    return Ls


def fast_escape_test(f: CStarMap, z0: LogPoint, e: EssentialItinerary, log_R0: float,
                     ell: int, depth: int, compare_tol: float = COMPARE_TOL,
                     tol: float = DEFAULT_TOL, probes: int = DEFAULT_PROBES) -> FastEscapeResult:
    """
    Check |f^{n+ell}(z0)| >= R_n when e_n = infinity and <= R_n when e_n = 0

    Comparisons are non-strict with a relative slack of compare_tol. Only the
    prefix where both the orbit and the radius sequence are representable is
    checked.
    """
    if depth < 1:
        raise InvalidParameter(f"depth must be >= 1, got {depth}")
    if ell < 0:
        raise InvalidParameter(f"ell must be >= 0, got {ell}")

    radii = iterate_radius(f, e, log_R0, depth, tol, probes)
    orbit = _orbit_log_moduli(f, z0, ell + radii.truncated_at)

    trace: List[FastEscapeStep] = []
    for n, log_R in enumerate(radii.log_R):
        j = n + ell
        if j >= len(orbit):
            break
        symbol = e.symbol_at(n)
        slack = compare_tol * max(1.0, abs(log_R))
        holds = orbit[j] >= log_R - slack if symbol == INFINITY else orbit[j] <= log_R + slack
        trace.append(FastEscapeStep(n, orbit[j], log_R, symbol, holds))
        if not holds:
            return FastEscapeResult(False, n, trace)

    if not trace:
        return FastEscapeResult(False, -1, trace)
    return FastEscapeResult(True, trace[-1].n, trace)


def find_fast_escape_shift(f: CStarMap, z0: LogPoint, e: EssentialItinerary, log_R0: float,
                           depth: int, max_shift: int = 8) -> Optional[Tuple[int, int, FastEscapeResult]]:
    """
    First (ell, k) with ell, k <= max_shift for which the orbit passes the test
    against sigma^k(e); None when no pair passes with at least one transition checked
    """
    for ell in range(max_shift + 1):
        for k in range(max_shift + 1):
            result = fast_escape_test(f, z0, e.shift(k), log_R0, ell, depth)
            if result.holds_on_prefix and result.checked_depth >= 1:
                logger.debug(f"Fast escape from {z0} with ell={ell}, k={k}")
                return ell, k, result
    return None


@dataclass
class ConsistencyReport:
    """Points passing at R0' that fail at R0 on the shared prefix"""
    tested: int
    passed_at_larger: int
    counterexamples: List[LogPoint] = field(default_factory=list)

    @property
    def consistent(self) -> bool:
        return not self.counterexamples


def base_radius_consistency(f: CStarMap, e: EssentialItinerary, log_R0: float, log_R0_prime: float,
                            points: Sequence[LogPoint], ell: int, depth: int) -> ConsistencyReport:
    """
    Every point passing at the larger R0' must also pass at R0

    Only meaningful for R0 < R0' on the outward side.
    """
    if not log_R0 < log_R0_prime:
        raise InvalidParameter("base_radius_consistency needs log_R0 < log_R0_prime")

    report = ConsistencyReport(tested=len(points), passed_at_larger=0)
    for z in points:
        larger = fast_escape_test(f, z, e, log_R0_prime, ell, depth)
        if not larger.holds_on_prefix:
            continue
        report.passed_at_larger += 1
        shared = max(larger.checked_depth, 1)
        smaller = fast_escape_test(f, z, e, log_R0, ell, shared)
        checked = [step for step in smaller.trace if step.n <= larger.checked_depth]
        if not all(step.holds for step in checked):
            report.counterexamples.append(z)

    if report.counterexamples:
        logger.warning(f"{len(report.counterexamples)} counterexamples to R0 consistency")
    return report

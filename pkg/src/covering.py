"""
Covering Module

Covering annuli B_n around the relaxed iterates of R+ and R-, the mixed
annuli driven by an essential itinerary, and certificates that f(B_n)
covers a target annulus.

Key responsibilities:
- choose_eps: relaxation factor from the hyperbolic-length budget delta
- build_covering_annuli: B_0 and B_n, 0 < |n| <= depth, with the nesting chain checked per level
- certify_covering: short core circle, modulus straddle, doubling, plus the winding oracle
- coverage_ranges: covered band indices per source and the monotonicity of their extremes
- mixed_fast_annuli: annuli that follow an essential itinerary, with their inequality trace
- find_covering_base / find_mixed_base: upward scans for a working base radius
"""

import logging
import math
from concurrent.futures import ThreadPoolExecutor
from dataclasses import dataclass, field
from typing import Dict, Iterable, List, Optional, Sequence, Tuple

from .function_model import CStarMap, LogPoint
from .itinerary import INFINITY, CoveredRange, EssentialItinerary
from .modulus import (
    DEFAULT_PROBES,
    DEFAULT_TOL,
    circle_extremes,
    iterate_radius,
    relaxed_modulus,
)
from .partition import AnnularPartition, build_partition
from .utils import (
    ChainViolation,
    CStarError,
    HorizonExceeded,
    InequalityViolation,
    InvalidParameter,
    ThresholdNotFound,
    derive_seed,
)
from .winding import OracleResult, run_oracle


logger = logging.getLogger(__name__)

DEFAULT_DELTA = 2.0 * math.pi ** 2
DEFAULT_SEED = 0x5EEDC0FFEE
LOG_TWO = math.log(2.0)

# relative slack for comparisons that hold with equality by construction
STRADDLE_TOL = 1e-9


def _slack(value: float) -> float:
    return STRADDLE_TOL * max(1.0, abs(value)) if math.isfinite(value) else 0.0


# ============================================================================
# Relaxation factor
# ============================================================================

def choose_eps(delta: float) -> float:
    """
    eps = exp(-2 pi^2 / delta)

    The core circle of A(eps, 1/eps) then has hyperbolic length
    pi^2 / log(1/eps) = delta / 2.

    Raises:
        InvalidParameter: If delta <= 0
    """
    if not delta > 0:
        raise InvalidParameter(f"delta must be positive, got {delta}")
    return math.exp(-2.0 * math.pi ** 2 / delta)


def core_length(eps: float) -> float:
    """Hyperbolic length pi^2 / log(1/eps) of the core circle"""
    if not 0.0 < eps < 1.0:
        raise InvalidParameter(f"eps must lie in (0, 1), got {eps!r}")
    return math.pi ** 2 / -math.log(eps)


# ============================================================================
# Domain Types
# ============================================================================

@dataclass(frozen=True)
class CoveringAnnulus:
    """Closed annulus core +- log(1/eps) in log-modulus"""
    index: int
    core_log_r: float
    eps: float

    def __post_init__(self):
        if not 0.0 < self.eps < 1.0:
            raise InvalidParameter(f"eps must lie in (0, 1), got {self.eps!r}")
        if not math.isfinite(self.core_log_r):
            raise HorizonExceeded(f"Core of B_{self.index} is not a finite log-radius")

    @property
    def half_width(self) -> float:
        return -math.log(self.eps)

    @property
    def inner_log_r(self) -> float:
        return self.core_log_r + math.log(self.eps)

    @property
    def outer_log_r(self) -> float:
        return self.core_log_r - math.log(self.eps)

    def contains(self, L: float, margin: float = 0.0) -> bool:
        return self.inner_log_r + margin <= L <= self.outer_log_r - margin

    def to_dict(self) -> dict:
        return {
            'index': self.index,
            'core_log_r': self.core_log_r,
            'eps': self.eps,
            'inner_log_r': self.inner_log_r,
            'outer_log_r': self.outer_log_r,
        }


def closure_of_core_band(partition: AnnularPartition) -> CoveringAnnulus:
    """B_0 as the closure of A_0; its eps is derived from the band width"""
    core = 0.5 * (partition.log_R_plus + partition.log_R_minus)
    eps = math.exp(-0.5 * (partition.log_R_plus - partition.log_R_minus))
    return CoveringAnnulus(0, core, eps)


@dataclass
class ChainFailure:
    """One failing inequality of the nesting chain"""
    level: int
    inequality: str


@dataclass
class CoveringFamily:
    """B-annuli keyed by band index, with the levels that were excluded"""
    eps: float
    partition: AnnularPartition
    annuli: Dict[int, CoveringAnnulus] = field(default_factory=dict)
    failures: List[ChainFailure] = field(default_factory=list)
    truncation_plus: str = 'requested_depth'
    truncation_minus: str = 'requested_depth'

    @property
    def indices(self) -> List[int]:
        return sorted(self.annuli)

    def get(self, n: int) -> CoveringAnnulus:
        if n not in self.annuli:
            failed = [f for f in self.failures if f.level == n]
            if failed:
                raise ChainViolation(
                    f"B_{n} excluded: {failed[0].inequality}", level=n, inequality=failed[0].inequality)
            raise HorizonExceeded(f"B_{n} was not built (beyond depth or horizon)")
        return self.annuli[n]

    def dropped_at_horizon(self, n: int) -> bool:
        """True when B_n was not built because an earlier core on its side passed the horizon"""
        if n == 0 or n in self.annuli or any(f.level == n for f in self.failures):
            return False
        reason = self.truncation_plus if n > 0 else self.truncation_minus
        built = [abs(k) for k in self.annuli if k * n > 0]
        return reason == 'horizon' and abs(n) > max(built, default=0)

    def to_dict(self) -> dict:
        return {
            'eps': self.eps,
            'annuli': [self.annuli[n].to_dict() for n in self.indices],
            'failures': [{'level': f.level, 'inequality': f.inequality} for f in self.failures],
            'truncation_plus': self.truncation_plus,
            'truncation_minus': self.truncation_minus,
        }


# ============================================================================
# Covering annuli
# ============================================================================

def build_covering_annuli(f: CStarMap, partition: AnnularPartition, eps: float, depth: int,
                          strict: bool = False, tol: float = DEFAULT_TOL,
                          probes: int = DEFAULT_PROBES) -> CoveringFamily:
    """
    Build B_0 and B_n for 0 < |n| <= depth

    The core of B_n is log mu^n(R+) for n > 0 and log nu^{|n|}(R-) for n < 0.
    Each level is checked against the partition:
        upper[n-1] < inner_n < core_n < outer_n <= upper[n]
        lower[|n|] <= inner_n < core_n < outer_n < lower[|n|-1]
    The closed end holds with equality at |n| = 1 and is compared with a
    relative slack.

    Args:
        strict: Raise on the first failing level instead of excluding it

    Raises:
        InvalidParameter: If eps is outside (0, 1) or depth < 0
        ChainViolation: In strict mode, with the failing level and inequality
    """
    if not 0.0 < eps < 1.0:
        raise InvalidParameter(f"eps must lie in (0, 1), got {eps!r}")
    if depth < 0:
        raise InvalidParameter(f"depth must be >= 0, got {depth}")

    family = CoveringFamily(eps=eps, partition=partition)
    family.annuli[0] = closure_of_core_band(partition)
    log_eps = math.log(eps)

    for side in (1, -1):
        bounds = partition.upper if side > 0 else partition.lower
        kind = 'mu' if side > 0 else 'nu'
        core = partition.log_R_plus if side > 0 else partition.log_R_minus
        reason = 'requested_depth'

        for level in range(1, depth + 1):
            if not abs(core) <= f.L_max:
                reason = 'horizon'
                break
            if level >= len(bounds):
                reason = partition.upper_truncation if side > 0 else partition.lower_truncation
                break
            core = relaxed_modulus(f, core, eps, kind, tol, probes)
            inner, outer = core + log_eps, core - log_eps
            n = side * level

            if side > 0:
                low, high = bounds[level - 1], bounds[level]
                checks = [
                    (low < inner, f"M^{level - 1}(R+) < eps*mu^{level}(R+): {low:.17g} < {inner:.17g}"),
                    (outer <= high + _slack(high),
                     f"mu^{level}(R+)/eps <= M^{level}(R+): {outer:.17g} <= {high:.17g}"),
                ]
            else:
                low, high = bounds[level], bounds[level - 1]
                checks = [
                    (low <= inner + _slack(low),
                     f"m^{level}(R-) <= eps*nu^{level}(R-): {low:.17g} <= {inner:.17g}"),
                    (outer < high, f"nu^{level}(R-)/eps < m^{level - 1}(R-): {outer:.17g} < {high:.17g}"),
                ]

            failed = [text for ok, text in checks if not ok]
            if failed:
                logger.warning(f"Chain fails at level {n}: {failed[0]}")
                if strict:
                    raise ChainViolation(f"Chain fails at level {n}: {failed[0]}", level=n, inequality=failed[0])
                family.failures.extend(ChainFailure(n, text) for text in failed)
                continue
            family.annuli[n] = CoveringAnnulus(n, core, eps)

        if side > 0:
            family.truncation_plus = reason
        else:
            family.truncation_minus = reason

    logger.info(
        f"Built {len(family.annuli)} covering annuli for {f.label} "
        f"(eps={eps:.6g}, {len(family.failures)} chain failures)"
    )
    return family


# ============================================================================
# Certificates
# ============================================================================

@dataclass
class CoveringCertificate:
    """Checked covering hypotheses for f(B_from) over B_to"""
    from_index: int
    to_index: int
    eps: float
    delta: float
    length_value: float
    length_pass: bool
    z1: LogPoint
    z2: LogPoint
    log_f_z1: float
    log_f_z2: float
    straddle_pass: bool
    doubling_pass: bool
    far_field: bool = False
    oracle: Optional[OracleResult] = None

    @property
    def passed(self) -> bool:
        return self.length_pass and self.straddle_pass and self.doubling_pass

    def to_dict(self) -> dict:
        return {
            'from_index': self.from_index,
            'to_index': self.to_index,
            'passed': self.passed,
            'length_check': {'value': self.length_value, 'delta': self.delta, 'pass': self.length_pass},
            'witnesses': {
                'z1': {'L': self.z1.L, 'theta': self.z1.theta},
                'z2': {'L': self.z2.L, 'theta': self.z2.theta},
            },
            'moduli': {'log_f_z1': self.log_f_z1, 'log_f_z2': self.log_f_z2},
            'straddle_pass': self.straddle_pass,
            'doubling_pass': self.doubling_pass,
            'far_field': self.far_field,
            'oracle': self.oracle.to_dict() if self.oracle is not None else None,
        }


def _covers(low: float, high: float, target: CoveringAnnulus) -> bool:
    inner, outer = target.inner_log_r, target.outer_log_r
    return low <= inner + _slack(inner) and high >= outer - _slack(outer)


def certify_covering(f: CStarMap, B_from: CoveringAnnulus, B_to: CoveringAnnulus, delta: float,
                     oracle_targets: int = 0, seed: int = DEFAULT_SEED,
                     tol: float = DEFAULT_TOL, probes: int = DEFAULT_PROBES) -> CoveringCertificate:
    """
    Check that f(B_from) covers B_to

    z1 and z2 are the points of minimum and maximum |f| on the core circle
    of B_from (far-field bounds when the core lies beyond the horizon).
    Failing checks are recorded, never raised.

    Args:
        f: Map
        B_from: Source annulus
        B_to: Target annulus
        delta: Hyperbolic-length budget
        oracle_targets: Number of winding-oracle targets (0 disables the oracle)
        seed: Base seed; the stream is derived from (seed, from_index, to_index)
    """
    if not delta > 0:
        raise InvalidParameter(f"delta must be positive, got {delta}")

    length = core_length(B_from.eps)
    extremes = circle_extremes(f, B_from.core_log_r, tol, probes)
    low, high = extremes.low, extremes.high

    certificate = CoveringCertificate(
        from_index=B_from.index,
        to_index=B_to.index,
        eps=B_from.eps,
        delta=delta,
        length_value=length,
        length_pass=length < delta,
        z1=LogPoint(B_from.core_log_r, extremes.theta_low),
        z2=LogPoint(B_from.core_log_r, extremes.theta_high),
        log_f_z1=low,
        log_f_z2=high,
        straddle_pass=_covers(low, high, B_to),
        doubling_pass=high >= LOG_TWO + low,
        far_field=extremes.far_field,
    )

    if oracle_targets > 0:
        if certificate.far_field:
            certificate.oracle = OracleResult(0, None, 'horizon', seed, message="source core beyond the horizon")
        else:
            stream = derive_seed(seed, B_from.index, B_to.index)
            certificate.oracle = run_oracle(
                f,
                (B_from.inner_log_r, B_from.outer_log_r),
                (B_to.inner_log_r, B_to.outer_log_r),
                oracle_targets,
                stream,
            )

    logger.debug(
        f"Certificate B_{B_from.index} -> B_{B_to.index}: length={certificate.length_pass}, "
        f"straddle={certificate.straddle_pass}, doubling={certificate.doubling_pass}"
    )
    return certificate


def certify_family(f: CStarMap, family: CoveringFamily, pairs: Iterable[Tuple[int, int]], delta: float,
                   oracle_targets: int = 0, seed: int = DEFAULT_SEED, threads: int = 1,
                   tol: float = DEFAULT_TOL, probes: int = DEFAULT_PROBES) -> List[CoveringCertificate]:
    """Certify independent (from, to) pairs; results come back in input order"""
    pairs = list(dict.fromkeys(pairs))

    def certify(pair: Tuple[int, int]) -> CoveringCertificate:
        return certify_covering(f, family.get(pair[0]), family.get(pair[1]), delta,
                                oracle_targets, seed, tol, probes)

    with ThreadPoolExecutor(max_workers=max(1, threads)) as executor:
        certificates = list(executor.map(certify, pairs))

    passed = sum(1 for c in certificates if c.passed)
    logger.info(f"Certified {passed}/{len(certificates)} coverings for {f.label}")
    return certificates


# ============================================================================
# Coverage ranges
# ============================================================================

@dataclass
class CoverageReport:
    """Covered band indices per source and the empirical monotonicity of their extremes"""
    ranges: Dict[int, CoveredRange] = field(default_factory=dict)
    extremes: Dict[int, int] = field(default_factory=dict)
    monotone: bool = True
    violations: List[str] = field(default_factory=list)

    def to_dict(self) -> dict:
        return {
            'ranges': {
                str(n): {'low': r.low, 'high': r.high, 'indices': list(r.indices)}
                for n, r in sorted(self.ranges.items())
            },
            'k_extremes': {str(n): k for n, k in sorted(self.extremes.items())},
            'monotone': self.monotone,
            'violations': list(self.violations),
        }


def coverage_ranges(f: CStarMap, family: CoveringFamily, delta: float,
                    tol: float = DEFAULT_TOL, probes: int = DEFAULT_PROBES) -> CoverageReport:
    """
    Test every source annulus against every built target

    Source n covers target k when the core circle is short enough, the
    extremes of log|f| on it straddle B_k, and the doubling check passes.
    k_n is the covered index farthest on the opposite side (lowest for n > 0,
    highest for n < 0); the report checks |k_m| >= |k_n| whenever |m| > |n|.
    """
    report = CoverageReport()
    for n in family.indices:
        source = family.annuli[n]
        try:
            extremes = circle_extremes(f, source.core_log_r, tol, probes)
        except HorizonExceeded as e:
            logger.warning(f"No coverage for B_{n}: {e}")
            continue
        length_ok = core_length(source.eps) < delta
        doubling_ok = extremes.high >= LOG_TWO + extremes.low
        covered = tuple(
            k for k in family.indices
            if length_ok and doubling_ok and _covers(extremes.low, extremes.high, family.annuli[k])
        )
        if covered:
            report.ranges[n] = CoveredRange(n, min(covered), max(covered), covered)
        else:
            report.ranges[n] = CoveredRange(n, 0, -1, ())

        if covered and n != 0:
            report.extremes[n] = min(covered) if n > 0 else max(covered)

    sources = sorted(report.extremes, key=lambda n: (abs(n), n))
    for m in sources:
        for n in sources:
            if abs(m) > abs(n) and abs(report.extremes[m]) < abs(report.extremes[n]):
                report.monotone = False
                report.violations.append(
                    f"|k_{m}| = {abs(report.extremes[m])} < |k_{n}| = {abs(report.extremes[n])}"
                )
    if not report.monotone:
        logger.warning(f"Covered-index extremes are not monotone: {report.violations[0]}")
    return report


# ============================================================================
# Mixed annuli
# ============================================================================

@dataclass
class MixedRow:
    """One inequality of the mixed construction"""
    n: int
    symbol: str
    log_R: float
    bound: float
    relation: str
    holds: bool


@dataclass
class MixedConstruction:
    """Annuli B_n around the relaxed iterates driven by e; keyed by position n"""
    e: EssentialItinerary
    eps: float
    log_R0: float
    annuli: Dict[int, CoveringAnnulus] = field(default_factory=dict)
    radii: List[float] = field(default_factory=list)
    trace: List[MixedRow] = field(default_factory=list)
    truncation_reason: str = 'requested_depth'

    @property
    def depth(self) -> int:
        return len(self.annuli) - 1

    def to_dict(self) -> dict:
        return {
            'e': str(self.e),
            'eps': self.eps,
            'log_R0': self.log_R0,
            'annuli': [self.annuli[n].to_dict() for n in sorted(self.annuli)],
            'radii': list(self.radii),
            'trace': [
                {'n': r.n, 'symbol': r.symbol, 'log_R': r.log_R, 'bound': r.bound,
                 'relation': r.relation, 'holds': r.holds}
                for r in self.trace
            ],
            'truncation_reason': self.truncation_reason,
        }


def mixed_fast_annuli(f: CStarMap, e: EssentialItinerary, eps: float, log_R0: float, depth: int,
                      tol: float = DEFAULT_TOL, probes: int = DEFAULT_PROBES) -> MixedConstruction:
    """
    Annuli B_n = [eps*R~_n, R~_n/eps] following the essential itinerary e

    R~_0 = mu(R_0) when e_0 is infinity (nu(R_0) otherwise), which gives the
    relaxed sequence a head start; R~_n = mu(R~_{n-1}) or nu(R~_{n-1}) per e_n.
    With R_n the plain iterates, the construction requires
        R_n < eps^2 M(R~_{n-1})      when e_n is infinity
        m(R~_{n-1}) / eps^2 < R_n    when e_n is 0
    for n >= 1, which places B_n on the correct side of R_n; at n = 0 the
    containment of B_0 is checked directly.

    Raises:
        InequalityViolation: With the failing index
    """
    if not 0.0 < eps < 1.0:
        raise InvalidParameter(f"eps must lie in (0, 1), got {eps!r}")
    if depth < 0:
        raise InvalidParameter(f"depth must be >= 0, got {depth}")

    log_eps = math.log(eps)
    construction = MixedConstruction(e=e, eps=eps, log_R0=float(log_R0))
    radii = iterate_radius(f, e, log_R0, depth, tol, probes)
    construction.radii = list(radii.log_R)

    def kind_for(n: int) -> str:
        return 'mu' if e.symbol_at(n) == INFINITY else 'nu'

    core = relaxed_modulus(f, log_R0, eps, kind_for(0), tol, probes)
    construction.annuli[0] = CoveringAnnulus(0, core, eps)

    for n in range(0, depth + 1):
        if n > 0:
            if not abs(core) <= f.L_max:
                construction.truncation_reason = 'horizon'
                break
            if n >= len(radii.log_R):
                construction.truncation_reason = radii.truncation_reason
                break
            core = relaxed_modulus(f, core, eps, kind_for(n), tol, probes)
            construction.annuli[n] = CoveringAnnulus(n, core, eps)

        annulus = construction.annuli[n]
        symbol = e.symbol_at(n)
        log_R = radii.log_R[n]
        if symbol == INFINITY:
            # n >= 1: inner_n = 2 log eps + log M(R~_{n-1})
            bound, relation = annulus.inner_log_r, '<' if n > 0 else '<='
            holds = log_R < bound if n > 0 else log_R <= bound
        else:
            bound, relation = annulus.outer_log_r, '>' if n > 0 else '>='
            holds = log_R > bound if n > 0 else log_R >= bound
        construction.trace.append(MixedRow(n, symbol, log_R, bound, relation, holds))

        if not holds and depth > 0:
            raise InequalityViolation(
                f"Mixed construction fails at n={n}: log R_{n} = {log_R:.17g} {relation} {bound:.17g} "
                f"does not hold (log R0 = {log_R0:.6g} too close to the unit circle)",
                index=n,
            )

    if construction.truncation_reason == 'horizon':
        logger.warning(f"Mixed construction for {e} truncated by horizon at depth {construction.depth}")
    return construction


# ============================================================================
# Base scans
# ============================================================================

def _scan_values(start: float, step: float, max_steps: int, direction: float) -> Iterable[float]:
    for k in range(max_steps + 1):
        yield start + direction * k * step


def find_covering_base(f: CStarMap, eps: float, log_R_plus: float, log_R_minus: float, depth: int,
                       step: float = 0.05, max_steps: int = 400, tol: float = DEFAULT_TOL,
                       probes: int = DEFAULT_PROBES) -> Tuple[AnnularPartition, CoveringFamily]:
    """
    Move R+ up (and R- down) until the nesting chain holds at every built level

    Raises:
        ThresholdNotFound: If no tested value works on some side
    """
    if not step > 0:
        raise InvalidParameter(f"scan step must be positive, got {step}")

    def side_holds(plus: float, minus: float, side: int) -> bool:
        try:
            partition = build_partition(f, plus, minus, depth, tol, probes)
            family = build_covering_annuli(f, partition, eps, depth, strict=False, tol=tol, probes=probes)
        except CStarError as e:
            logger.debug(f"Base ({plus:.6g}, {minus:.6g}) rejected: {e}")
            return False
        failures = [x for x in family.failures if (x.level > 0) == (side > 0)]
        built = [n for n in family.annuli if n != 0 and (n > 0) == (side > 0)]
        return not failures and bool(built)

    plus = next((L for L in _scan_values(log_R_plus, step, max_steps, 1.0)
                 if side_holds(L, log_R_minus, 1)), None)
    if plus is None:
        raise ThresholdNotFound(f"No covering base above log R+ = {log_R_plus:.6g} within {max_steps} steps")
    minus = next((L for L in _scan_values(log_R_minus, step, max_steps, -1.0)
                  if side_holds(plus, L, -1)), None)
    if minus is None:
        raise ThresholdNotFound(f"No covering base below log R- = {log_R_minus:.6g} within {max_steps} steps")

    partition = build_partition(f, plus, minus, depth, tol, probes)
    family = build_covering_annuli(f, partition, eps, depth, strict=False, tol=tol, probes=probes)
    logger.info(f"Covering base for {f.label}: log R+ = {plus:.6g}, log R- = {minus:.6g}")
    return partition, family


def find_mixed_base(f: CStarMap, e: EssentialItinerary, eps: float, start: float, depth: int,
                    step: float = 0.05, max_steps: int = 400, tol: float = DEFAULT_TOL,
                    probes: int = DEFAULT_PROBES) -> MixedConstruction:
    """
    Scan log R0 away from the unit circle until mixed_fast_annuli succeeds

    The scan moves up when e_0 is infinity and down otherwise. Horizon
    truncation ends the construction early but does not reject a value.

    Raises:
        ThresholdNotFound: If no tested value works
    """
    if not step > 0:
        raise InvalidParameter(f"scan step must be positive, got {step}")
    direction = 1.0 if e.symbol_at(0) == INFINITY else -1.0
    start = abs(start) * direction

    last_error: Optional[CStarError] = None
    for log_R0 in _scan_values(start, step, max_steps, direction):
        try:
            construction = mixed_fast_annuli(f, e, eps, log_R0, depth, tol, probes)
        except (InequalityViolation, HorizonExceeded) as err:
            last_error = err
            continue
        logger.info(f"Mixed base for {e}: log R0 = {log_R0:.6g} (depth {construction.depth})")
        return construction
    raise ThresholdNotFound(f"No mixed base for {e} within {max_steps} steps from {start:.6g}: {last_error}")


def consecutive_pairs(itinerary: Sequence[int]) -> List[Tuple[int, int]]:
    """(s_k, s_{k+1}) pairs of a finite itinerary"""
    return list(zip(itinerary, itinerary[1:]))

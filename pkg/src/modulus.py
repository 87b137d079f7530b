"""
Modulus Module

Maximum and minimum modulus of a map on circles |z| = r, their relaxed
variants mu = eps*M and nu = m/eps, iterated radius sequences, the
operational thresholds R(f), R+, R-, and numerical checks of the growth
properties those quantities satisfy.

Key responsibilities:
- Circle search: coarse scan over K equispaced angles, then golden-section
  refinement of every local-extremum bracket
- Iterate radii along an essential itinerary, truncating at the horizon
- Grid-certified thresholds (find_thresholds)
- Far-field bounds for circles beyond the horizon
- Property reports for the convexity, power and ratio growth laws and the
  nested relaxed-iterate inequality

All radii and moduli are natural logarithms.
"""

import logging
import math
from dataclasses import dataclass, field
from typing import Dict, List, Optional, Sequence, Tuple

import numpy as np

from .function_model import CStarMap, eval_array, normalize_angle, reflect
from .itinerary import INFINITY, EssentialItinerary
from .utils import HorizonExceeded, InvalidParameter, ThresholdNotFound


logger = logging.getLogger(__name__)

DEFAULT_PROBES = 1024
DEFAULT_TOL = 1e-10
THRESHOLD_MARGIN = 0.5

_INV_PHI = (math.sqrt(5.0) - 1.0) / 2.0
_GOLDEN_MAX_STEPS = 200


# ============================================================================
# Domain Types
# ============================================================================

@dataclass(frozen=True)
class ModulusExtremum:
    """Max or min of L'(theta) on one circle"""
    log_r: float
    value: float
    theta: float
    n_probes: int


@dataclass(frozen=True)
class ModulusSample:
    """Both extremes of |f| on the circle of log-radius log_r"""
    log_r: float
    log_M: float
    theta_max: float
    log_m: float
    theta_min: float
    n_probes: int


@dataclass
class RadiusSequence:
    """lambda_0..lambda_d driven by an essential itinerary"""
    e: EssentialItinerary
    log_R: List[float]
    truncated_at: int
    truncation_reason: str  # requested_depth | horizon


@dataclass(frozen=True)
class FarFieldBound:
    """
    Dominant-monomial bounds for a circle beyond the horizon

    log_M_lower <= log M(r) and log m(r) <= log_m_upper. Both may be +-inf
    when the bound itself exceeds the float range.
    """
    log_r: float
    log_M_lower: float
    log_m_upper: float
    theta_max: float
    theta_min: float
    loglog: float


@dataclass(frozen=True)
class CircleExtremes:
    """Extremes used by covering certificates (exact search or far-field bound)"""
    log_r: float
    low: float
    high: float
    theta_low: float
    theta_high: float
    far_field: bool


@dataclass
class Thresholds:
    """Grid-certified thresholds; a claim about the tested grid only"""
    log_R_f: float
    log_R_plus: float
    log_R_minus: float
    tested_min: float
    tested_max: float
    grid_points: int

    def to_dict(self) -> Dict[str, float]:
        return {
            'log_R_f': self.log_R_f,
            'log_R_plus': self.log_R_plus,
            'log_R_minus': self.log_R_minus,
            'tested_min': self.tested_min,
            'tested_max': self.tested_max,
            'grid_points': self.grid_points,
        }


@dataclass
class PropertyCheck:
    """One checked property: status is pass, fail or insufficient-data"""
    name: str
    status: str
    details: List[str] = field(default_factory=list)


@dataclass
class GrowthReport:
    """Collection of property checks"""
    title: str
    properties: List[PropertyCheck] = field(default_factory=list)

    @property
    def passed(self) -> bool:
        return all(p.status != 'fail' for p in self.properties)

    def status_of(self, prefix: str) -> List[str]:
        return [p.status for p in self.properties if p.name.startswith(prefix)]


@dataclass
class NestingRow:
    """One level of the nested relaxed-iterate check"""
    n: int
    lhs: float
    rhs: float
    holds: bool


@dataclass
class NestingResult:
    """Outcome of check_nesting"""
    passed: bool
    checked_depth: int
    truncated: bool
    trace: List[NestingRow] = field(default_factory=list)
    dual_trace: List[NestingRow] = field(default_factory=list)


# ============================================================================
# Circle search
# ============================================================================

def _probe_angles(probes: int) -> np.ndarray:
    return -math.pi + (2.0 * math.pi / probes) * np.arange(probes)


def _circle_extremum(f: CStarMap, log_r: float, sign: float, probes: int, tol: float) -> ModulusExtremum:
    """Maximize sign * L'(theta) on the circle of log-radius log_r"""
    if probes < 8:
        raise InvalidParameter(f"At least 8 probes required, got {probes}")
    if not tol > 0:
        raise InvalidParameter(f"tol must be positive, got {tol}")
    if not abs(log_r) <= f.L_max:
        raise HorizonExceeded(f"Circle log r = {log_r:.6g} lies beyond L_max = {f.L_max:.6g}")

    def objective(theta: np.ndarray) -> np.ndarray:
        values, _ = eval_array(f, np.full(theta.shape, log_r), theta)
        return sign * values

    thetas = _probe_angles(probes)
    values = objective(thetas)

    # local maxima of the (cyclic) sampled objective
    is_peak = (values >= np.roll(values, 1)) & (values >= np.roll(values, -1))
    peaks = np.flatnonzero(is_peak)
    keep = 2 * f.degree + 2
    if peaks.size > keep:
        order = np.lexsort((peaks, -values[peaks]))
        peaks = np.sort(peaks[order[:keep]])

    candidates_theta = [thetas]
    candidates_value = [values]

    if peaks.size:
        step = 2.0 * math.pi / probes
        a = thetas[peaks] - step
        b = thetas[peaks] + step
        c = b - _INV_PHI * (b - a)
        d = a + _INV_PHI * (b - a)
        fc = objective(c)
        fd = objective(d)
        for _ in range(_GOLDEN_MAX_STEPS):
            if np.max(b - a) <= tol:
                break
            left = fc >= fd
            new_a = np.where(left, a, c)
            new_b = np.where(left, d, b)
            new_c = np.where(left, new_b - _INV_PHI * (new_b - new_a), d)
            new_d = np.where(left, c, new_a + _INV_PHI * (new_b - new_a))
            fresh = objective(np.where(left, new_c, new_d))
            fc, fd = np.where(left, fresh, fd), np.where(left, fc, fresh)
            a, b, c, d = new_a, new_b, new_c, new_d
        mid = 0.5 * (a + b)
        candidates_theta.extend([c, d, mid])
        candidates_value.extend([fc, fd, objective(mid)])

    all_theta = np.concatenate(candidates_theta)
    all_value = np.concatenate(candidates_value)
    best = int(np.argmax(all_value))
    return ModulusExtremum(
        log_r=float(log_r),
        value=float(sign * all_value[best]),
        theta=normalize_angle(float(all_theta[best])),
        n_probes=probes,
    )


def max_modulus(f: CStarMap, log_r: float, tol: float = DEFAULT_TOL,
                probes: int = DEFAULT_PROBES) -> ModulusExtremum:
    """
    log M(r) = max over theta of log|f(r e^{i theta})|

    Args:
        f: Map
        log_r: Log-radius of the circle, |log_r| <= L_max
        tol: Golden-section bracket width at which refinement stops
        probes: Number of coarse equispaced angles K

    Returns:
        ModulusExtremum with the maximum and an angle attaining it

    Raises:
        HorizonExceeded: If the circle lies beyond the horizon
    """
    return _circle_extremum(f, log_r, 1.0, probes, tol)


def min_modulus(f: CStarMap, log_r: float, tol: float = DEFAULT_TOL,
                probes: int = DEFAULT_PROBES) -> ModulusExtremum:
    """log m(r); dual of max_modulus"""
    return _circle_extremum(f, log_r, -1.0, probes, tol)


def sample_modulus(f: CStarMap, log_r: float, tol: float = DEFAULT_TOL,
                   probes: int = DEFAULT_PROBES) -> ModulusSample:
    """Both extremes on one circle"""
    high = max_modulus(f, log_r, tol, probes)
    low = min_modulus(f, log_r, tol, probes)
    return ModulusSample(
        log_r=float(log_r),
        log_M=high.value,
        theta_max=high.theta,
        log_m=min(low.value, high.value),
        theta_min=low.theta,
        n_probes=probes,
    )


def _check_eps(eps: float):
    if not 0.0 < eps < 1.0:
        raise InvalidParameter(f"eps must lie in (0, 1), got {eps!r}")


def relaxed_modulus(f: CStarMap, log_r: float, eps: float, kind: str,
                    tol: float = DEFAULT_TOL, probes: int = DEFAULT_PROBES) -> float:
    """
    log mu(r) = log eps + log M(r)  (kind 'mu')
    log nu(r) = log m(r) - log eps  (kind 'nu')

    Raises:
        InvalidParameter: If eps is outside (0, 1) or kind is unknown
        HorizonExceeded: As for max_modulus
    """
    _check_eps(eps)
    if kind == 'mu':
        return math.log(eps) + max_modulus(f, log_r, tol, probes).value
    if kind == 'nu':
        return min_modulus(f, log_r, tol, probes).value - math.log(eps)
    raise InvalidParameter(f"kind must be 'mu' or 'nu', got {kind!r}")


def iterate_radius(f: CStarMap, e: EssentialItinerary, log_R0: float, depth: int,
                   tol: float = DEFAULT_TOL, probes: int = DEFAULT_PROBES) -> RadiusSequence:
    """
    lambda_{n+1} = log M(e^{lambda_n}) if e_{n+1} = infinity, else log m(e^{lambda_n})

    A value computed from an in-horizon predecessor is stored even when it
    lies beyond the horizon itself; the sequence then stops with reason
    'horizon'.
    """
    if depth < 0:
        raise InvalidParameter(f"depth must be >= 0, got {depth}")

    log_R = [float(log_R0)]
    reason = 'requested_depth'
    for n in range(depth):
        current = log_R[-1]
        if not abs(current) <= f.L_max:
            reason = 'horizon'
            break
        try:
            if e.symbol_at(n + 1) == INFINITY:
                nxt = max_modulus(f, current, tol, probes).value
            else:
                nxt = min_modulus(f, current, tol, probes).value
        except HorizonExceeded:
            reason = 'horizon'
            break
        log_R.append(nxt)

    if reason == 'horizon':
        logger.debug(f"Radius sequence for {e} truncated by horizon at depth {len(log_R) - 1}")
    return RadiusSequence(e=e, log_R=log_R, truncated_at=len(log_R) - 1, truncation_reason=reason)


# ============================================================================
# Far field
# ============================================================================

def far_field_modulus(f: CStarMap, log_r: float) -> FarFieldBound:
    """
    Bounds on log M and log m from the dominant monomial

    For log_r > 0 the leading term c*z^d of g dominates; for log_r < 0 the
    leading term of h(1/z). The remaining terms are bounded by their moduli,
    all compared in log form so nothing overflows.

    Raises:
        HorizonExceeded: If the remaining terms are not at most half the leading one
    """
    t = abs(log_r)
    outward = log_r > 0
    lead_coeffs, other_coeffs = (f.g_coeffs, f.h_coeffs) if outward else (f.h_coeffs, f.g_coeffs)
    d = len(lead_coeffs)
    lead = lead_coeffs[-1]
    log_lead = math.log(abs(lead)) + d * t

    rest = []
    for j, c in enumerate(lead_coeffs[:-1], start=1):
        if c != 0:
            rest.append(math.log(abs(c)) + j * t)
    for j, c in enumerate(other_coeffs, start=1):
        if c != 0:
            rest.append(math.log(abs(c)) - j * t)
    if f.index_n != 0 and t > 0:
        rest.append(math.log(abs(f.index_n) * t))

    ratio = sum(math.exp(term - log_lead) for term in rest)
    if ratio >= 0.5:
        raise HorizonExceeded(f"Far-field bound not applicable at log r = {log_r:.6g} (ratio {ratio:.3g})")

    loglog = log_lead + math.log1p(-ratio)
    magnitude = math.exp(loglog) if loglog < 709.0 else math.inf

    phase = math.atan2(lead.imag, lead.real)
    theta_max = -phase / d if outward else phase / d
    theta_min = theta_max + math.pi / d
    return FarFieldBound(
        log_r=float(log_r),
        log_M_lower=magnitude,
        log_m_upper=-magnitude,
        theta_max=normalize_angle(theta_max),
        theta_min=normalize_angle(theta_min),
        loglog=loglog,
    )


def circle_extremes(f: CStarMap, log_r: float, tol: float = DEFAULT_TOL,
                    probes: int = DEFAULT_PROBES) -> CircleExtremes:
    """Exact search within the horizon, far-field bounds beyond it"""
    if abs(log_r) <= f.L_max:
        sample = sample_modulus(f, log_r, tol, probes)
        return CircleExtremes(log_r, sample.log_m, sample.log_M, sample.theta_min, sample.theta_max, False)
    bound = far_field_modulus(f, log_r)
    return CircleExtremes(log_r, bound.log_m_upper, bound.log_M_lower, bound.theta_min, bound.theta_max, True)


# ============================================================================
# Thresholds
# ============================================================================

def default_threshold_grid(f: CStarMap, points: int = 160) -> List[float]:
    """Geometric grid of log-radii on both sides of the unit circle"""
    magnitudes = np.geomspace(0.01, 0.9 * f.L_max, points)
    return sorted([-float(s) for s in magnitudes] + [float(s) for s in magnitudes])


def _threshold_conditions(f: CStarMap, L: float, margin: float, tol: float, probes: int) -> bool:
    """log M > 2|L| + margin and -log m > 2|L| + margin"""
    sample = sample_modulus(f, L, tol, probes)
    bound = 2.0 * abs(L) + margin
    return sample.log_M > bound and -sample.log_m > bound


def find_thresholds(f: CStarMap, grid: Optional[Sequence[float]] = None,
                    margin: float = THRESHOLD_MARGIN, tol: float = DEFAULT_TOL,
                    probes: int = DEFAULT_PROBES) -> Thresholds:
    """
    Grid-certified thresholds log R(f), log R+, log R-

    log_R_f is the smallest tested magnitude s such that the growth
    conditions hold at every tested log r >= s and every tested log r <= -s.
    log_R_plus / log_R_minus are the first tested values on each side from
    which the conditions hold with `margin` to spare.

    Raises:
        ThresholdNotFound: If the grid has fewer than two points on a side or
            no grid value qualifies
    """
    grid = default_threshold_grid(f) if grid is None else list(grid)
    usable = [float(L) for L in grid if L != 0 and abs(L) <= f.L_max]
    positive = sorted(L for L in usable if L > 0)
    negative = sorted((-L for L in usable if L < 0))
    if len(positive) < 2 or len(negative) < 2:
        raise ThresholdNotFound(
            f"Threshold scan needs at least two grid points on each side of the unit circle "
            f"(got {len(positive)} above, {len(negative)} below)"
        )

    plain_pos = {s: _threshold_conditions(f, s, 0.0, tol, probes) for s in positive}
    plain_neg = {s: _threshold_conditions(f, -s, 0.0, tol, probes) for s in negative}

    def holds_from(table: Dict[float, bool], s: float) -> bool:
        return all(ok for value, ok in table.items() if value >= s)

    log_R_f = None
    for s in sorted(set(positive) | set(negative)):
        if holds_from(plain_pos, s) and holds_from(plain_neg, s):
            log_R_f = s
            break
    if log_R_f is None:
        raise ThresholdNotFound(
            f"No threshold on grid [{min(usable):.4g}, {max(usable):.4g}] for {f.label}"
        )

    margin_pos = {s: _threshold_conditions(f, s, margin, tol, probes) for s in positive if s >= log_R_f}
    margin_neg = {s: _threshold_conditions(f, -s, margin, tol, probes) for s in negative if s >= log_R_f}
    plus = next((s for s in sorted(margin_pos) if holds_from(margin_pos, s)), None)
    minus = next((s for s in sorted(margin_neg) if holds_from(margin_neg, s)), None)
    if plus is None or minus is None:
        raise ThresholdNotFound(f"Threshold conditions never hold with margin {margin} on the grid")

    thresholds = Thresholds(
        log_R_f=log_R_f,
        log_R_plus=plus,
        log_R_minus=-minus,
        tested_min=min(usable),
        tested_max=max(usable),
        grid_points=len(usable),
    )
    logger.info(
        f"Thresholds for {f.label}: log R(f)={log_R_f:.6g}, log R+={plus:.6g}, "
        f"log R-={-minus:.6g} (tested {thresholds.tested_min:.4g}..{thresholds.tested_max:.4g})"
    )
    return thresholds


# ============================================================================
# Growth law verification
# ============================================================================

def _growth_checks(f: CStarMap, points: List[float], ks: Sequence[float], side: str,
                   tol: float, probes: int) -> List[PropertyCheck]:
    """Checks (i)-(iv) on log-radii t > 0 of the map f"""
    checks: List[PropertyCheck] = []
    tag = f" [{side}]"
    points = sorted(points)
    log_M = {t: max_modulus(f, t, tol, probes).value for t in points}
    log_m = {t: min_modulus(f, t, tol, probes).value for t in points}

    # (i) log M / log r grows, log m / log r falls
    if len(points) < 2:
        checks.append(PropertyCheck(f"(i) ratio growth{tag}", 'insufficient-data', ["need two radii"]))
    else:
        details = []
        ok = True
        for a, b in zip(points, points[1:]):
            up = log_M[b] / b - log_M[a] / a
            down = log_m[b] / b - log_m[a] / a
            if up < -tol or down > tol:
                ok = False
                details.append(f"log r {a:.6g} -> {b:.6g}: dM={up:.3g}, dm={down:.3g}")
        checks.append(PropertyCheck(f"(i) ratio growth{tag}", 'pass' if ok else 'fail', details))

    # (ii) convexity of log M and concavity of log m in log r
    if len(points) < 3:
        checks.append(PropertyCheck(f"(ii) convexity{tag}", 'insufficient-data', ["need three radii"]))
    else:
        details = []
        ok = True
        for a, b, c in zip(points, points[1:], points[2:]):
            second_M = (log_M[c] - log_M[b]) / (c - b) - (log_M[b] - log_M[a]) / (b - a)
            second_m = (log_m[c] - log_m[b]) / (c - b) - (log_m[b] - log_m[a]) / (b - a)
            if second_M < -1e-6 or second_m > 1e-6:
                ok = False
                details.append(f"triple at log r {b:.6g}: M''={second_M:.3g}, m''={second_m:.3g}")
        checks.append(PropertyCheck(f"(ii) convexity{tag}", 'pass' if ok else 'fail', details))

    # (iii) M(r^k) >= M(r)^k and m(r^k) <= m(r)^k
    details = []
    ok = True
    tested = 0
    for t in points:
        for k in ks:
            if k <= 1 or not k * t <= f.L_max:
                continue
            tested += 1
            high = max_modulus(f, k * t, tol, probes).value
            low = min_modulus(f, k * t, tol, probes).value
            if high < k * log_M[t] - tol or low > k * log_m[t] + tol:
                ok = False
                details.append(f"log r {t:.6g}, k={k}: {high:.6g} vs {k * log_M[t]:.6g}")
    if tested == 0:
        checks.append(PropertyCheck(f"(iii) power growth{tag}", 'insufficient-data', ["no (r, k) in horizon"]))
    else:
        checks.append(PropertyCheck(f"(iii) power growth{tag}", 'pass' if ok else 'fail', details))

    # (iv) log M(kr) - log M(r) increases along the tail
    if len(points) < 2:
        checks.append(PropertyCheck(f"(iv) ratio spread{tag}", 'insufficient-data', ["need two radii"]))
    else:
        details = []
        ok = True
        tested = 0
        for k in ks:
            if k <= 1:
                continue
            shift = math.log(k)
            usable = [t for t in points if t + shift <= f.L_max]
            if len(usable) < 2:
                continue
            tested += 1
            spread_M = [max_modulus(f, t + shift, tol, probes).value - log_M[t] for t in usable]
            spread_m = [min_modulus(f, t + shift, tol, probes).value - log_m[t] for t in usable]
            for i in range(1, len(usable)):
                if spread_M[i] < spread_M[i - 1] - tol or spread_m[i] > spread_m[i - 1] + tol:
                    ok = False
                    details.append(f"k={k}: spread decreases at log r {usable[i]:.6g}")
        if tested == 0:
            checks.append(PropertyCheck(f"(iv) ratio spread{tag}", 'insufficient-data', ["no k > 1 in horizon"]))
        else:
            checks.append(PropertyCheck(f"(iv) ratio spread{tag}", 'pass' if ok else 'fail', details))

    return checks


def check_growth_laws(f: CStarMap, radii: Sequence[float], ks: Sequence[float],
                      eps_grid: Sequence[float] = (), log_R_f: Optional[float] = None,
                      tol: float = 1e-9, probes: int = DEFAULT_PROBES) -> GrowthReport:
    """
    Check the growth laws of M and m at sampled radii

    (i) log M / log r increasing; (ii) log M convex in log r; (iii)
    log M(r^k) >= k log M(r); (iv) log M(kr) - log M(r) increasing; with the
    reversed inequalities for m. Radii r > 1 are checked on f directly;
    radii r < 1 are checked as 1/r on the reflected map z -> f(1/z). For each
    eps in eps_grid the report also records where eps*M(r) > r starts to hold
    (an estimate only; informational).

    Args:
        f: Map
        radii: Radii r (not logarithms)
        ks: Exponents / factors k > 1
        eps_grid: Relaxation factors in (0, 1)
        log_R_f: Only radii with |log r| >= log_R_f are used, when given

    Raises:
        HorizonExceeded: If a radius lies beyond the horizon
    """
    report = GrowthReport(title=f"Growth laws of M and m for {f.label}")
    logs = [math.log(r) for r in radii if r > 0]
    for L in logs:
        if abs(L) > f.L_max:
            raise HorizonExceeded(f"Radius e^{L:.6g} beyond horizon L_max = {f.L_max:.6g}")

    floor = log_R_f if log_R_f is not None else 0.0
    large = [L for L in logs if L > 0 and L >= floor]
    small = [-L for L in logs if L < 0 and -L >= floor]

    report.properties.extend(_growth_checks(f, large, ks, 'r->inf', tol, probes))
    if small:
        report.properties.extend(_growth_checks(reflect(f), small, ks, 'r->0', tol, probes))

    for eps in eps_grid:
        _check_eps(eps)
        if not large:
            report.properties.append(PropertyCheck(f"relaxed growth eps={eps:.6g}", 'insufficient-data'))
            continue
        holding = [L for L in sorted(large) if math.log(eps) + max_modulus(f, L, tol, probes).value > L]
        eventually = bool(holding) and holding[-1] == max(large)
        start = next((L for L in sorted(large) if all(h in holding for h in large if h >= L)), None)
        detail = (f"estimate: eps*M(r) > r for log r >= {start:.6g} on the sample"
                  if start is not None else "eps*M(r) <= r at the largest sampled radius")
        report.properties.append(PropertyCheck(
            f"relaxed growth eps={eps:.6g}", 'pass' if eventually else 'insufficient-data', [detail]))

    for prop in report.properties:
        logger.debug(f"{prop.name}: {prop.status}")
    return report


def check_nesting(f: CStarMap, eps: float, log_r: float, depth: int,
                  tol: float = DEFAULT_TOL, probes: int = DEFAULT_PROBES) -> NestingResult:
    """
    Check log M^{n-1}(r) < log eps + log mu^n(r) for n = 1..depth

    The dual check log m^{n-1}(r') > log nu^n(r') - log eps runs at
    log r' = -log_r. Levels whose terms cannot be computed inside the horizon
    end the trace; the verdict covers the computed levels only.
    """
    _check_eps(eps)
    if depth < 0:
        raise InvalidParameter(f"depth must be >= 0, got {depth}")
    log_eps = math.log(eps)

    def run(start: float, outward: bool) -> Tuple[List[NestingRow], bool]:
        extremum = max_modulus if outward else min_modulus
        rows: List[NestingRow] = []
        plain = start
        relaxed = start
        truncated = False
        for n in range(1, depth + 1):
            try:
                if n > 1:
                    if not abs(plain) <= f.L_max:
                        raise HorizonExceeded("plain iterate beyond horizon")
                    plain = extremum(f, plain, tol, probes).value
                if not abs(relaxed) <= f.L_max:
                    raise HorizonExceeded("relaxed iterate beyond horizon")
                step = extremum(f, relaxed, tol, probes).value
            except HorizonExceeded:
                truncated = True
                break
            relaxed = step + log_eps if outward else step - log_eps
            if outward:
                rhs = log_eps + relaxed
                rows.append(NestingRow(n, plain, rhs, plain < rhs))
            else:
                rhs = relaxed - log_eps
                rows.append(NestingRow(n, plain, rhs, plain > rhs))
        return rows, truncated

    trace, truncated = run(float(log_r), True)
    dual, dual_truncated = run(-float(log_r), False)
    passed = all(row.holds for row in trace) and all(row.holds for row in dual)
    if truncated or dual_truncated:
        logger.warning(f"Nesting check truncated by horizon after depth {len(trace)}")
    return NestingResult(
        passed=passed,
        checked_depth=len(trace),
        truncated=truncated or dual_truncated,
        trace=trace,
        dual_trace=dual,
    )


def estimate_threshold_radii(f: CStarMap, eps: float, grid: Optional[Sequence[float]] = None,
                             depth: int = 3, tol: float = DEFAULT_TOL,
                             probes: int = DEFAULT_PROBES) -> Dict[str, Optional[float]]:
    """
    Grid estimates of the radii beyond which the relaxed inequalities hold

    Returns:
        {'log_R1_estimate': smallest tested log r from which eps*M(r) > r,
         'log_R2_estimate': smallest tested log r from which check_nesting passes}
        Values are None when nothing qualifies.
    """
    _check_eps(eps)
    if grid is None:
        grid = np.linspace(0.05, min(f.L_max, 20.0), 60)
    grid = sorted(float(L) for L in grid if 0 < L <= f.L_max)
    log_eps = math.log(eps)
    growth = {L: log_eps + max_modulus(f, L, tol, probes).value > L for L in grid}
    nesting = {L: check_nesting(f, eps, L, depth, tol, probes).passed for L in grid}

    def first_from(table):
        for L in grid:
            if all(table[x] for x in grid if x >= L):
                return float(L)
        return None

    return {'log_R1_estimate': first_from(growth), 'log_R2_estimate': first_from(nesting)}

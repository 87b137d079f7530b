"""
Programs Module

Generators for annular itinerary programs: target sequences of band
indices that subdivision shooting then tries to realize.

Key responsibilities:
- fast: s_{n+1} = s_n + 1 (or - 1 on the inner side)
- periodic: a repeated word
- bounded: a two-symbol sequence over {s, s+1}
- unbounded_nonescaping: climbs that keep returning to the first band
- slow: dwell counts computed from a rate sequence, truncated for realization
- custom / mixed: explicit lists and positional programs for mixed annuli
- Parsing of the "kind:params" form used on the command line
"""

import logging
import math
from typing import Any, Callable, Dict, List, Mapping, Optional, Sequence, Union

from .covering import CoveringFamily
from .function_model import CStarMap
from .itinerary import GENERATOR_KINDS, AnnularItinerary, CoveredRange
from .modulus import DEFAULT_PROBES, DEFAULT_TOL, circle_extremes
from .utils import HorizonExceeded, InvalidParameter, ParseError, SplitMix64, parse_int_list


logger = logging.getLogger(__name__)

DEFAULT_DWELL_CAP = 3
# galloping gives up after this many doublings of the step
MAX_GALLOP = 4096

Rate = Union[Callable[[int], float], Sequence[float]]


# ============================================================================
# Slow programs
# ============================================================================

def _rate_function(rate: Rate) -> Callable[[int], float]:
    if callable(rate):
        return rate
    table = [float(x) for x in rate]
    if not table:
        raise InvalidParameter("rate table must not be empty")
    return lambda t: table[t] if t < len(table) else table[-1]


def first_time_above(rate: Rate, threshold: float, start: int = 0) -> Optional[int]:
    """
    Smallest integer t >= start with rate(t) > threshold

    Galloping search followed by bisection on Python integers, so results
    stay exact far beyond the float range of t. The rate must be
    nondecreasing; a rate that overflows counts as +inf. Returns None when
    the rate never overtakes within the galloping budget.
    """
    rate_at = _rate_function(rate)

    def above(t: int) -> bool:
        try:
            return rate_at(t) > threshold
        except OverflowError:
            return True

    if above(start):
        return start
    low, step = start, 1
    for _ in range(MAX_GALLOP):
        high = start + step
        if above(high):
            break
        low, step = high, step * 2
    else:
        return None
    # invariant: rate(low) <= threshold < rate(high)
    while high - low > 1:
        middle = (low + high) // 2
        if above(middle):
            high = middle
        else:
            low = middle
    return high


def dwell_thresholds(f: CStarMap, family: CoveringFamily, start: int = 1,
                     tol: float = DEFAULT_TOL, probes: int = DEFAULT_PROBES) -> List[float]:
    """
    log M(mu^n(R+)) for n = start, start+1, ... while the core of B_n is built

    Cores beyond the horizon use the far-field lower bound (possibly inf).
    """
    thresholds = []
    n = start
    while n in family.annuli:
        try:
            thresholds.append(circle_extremes(f, family.annuli[n].core_log_r, tol, probes).high)
        except HorizonExceeded:
            break
        n += 1
    return thresholds


def slow_program(thresholds: Sequence[float], rate: Rate, start: int = 1,
                 dwell_cap: int = DEFAULT_DWELL_CAP) -> AnnularItinerary:
    """
    Dwell at band n until the rate overtakes log M(mu^n(R+))

    Step t runs from 0; arriving at band n at step a, the program stays
    until the first t >= a with rate(t) > thresholds[n - start] and then
    moves to n + 1. Every dwell lasts at least one step. The realized prefix
    repeats each band min(dwell, dwell_cap) times.
    """
    if dwell_cap < 1:
        raise InvalidParameter(f"dwell_cap must be >= 1, got {dwell_cap}")

    program = AnnularItinerary(prefix=[], generator_kind='slow')
    arrival = 0
    for offset, threshold in enumerate(thresholds):
        n = start + offset
        if not math.isfinite(threshold):
            program.notes.append(f"log M(mu^{n}(R+)) exceeds the float range; dwell at B_{n} not computed")
            program.prefix.append(n)
            break
        leave = first_time_above(rate, threshold, arrival)
        if leave is None:
            program.notes.append(f"rate never exceeds {threshold:.6g}; dwell at B_{n} unbounded")
            program.prefix.append(n)
            break
        dwell = max(1, leave - arrival)
        program.dwell_counts.append(dwell)
        shown = min(dwell, dwell_cap)
        if shown < dwell:
            program.truncated = True
        program.prefix.extend([n] * shown)
        arrival += dwell
    else:
        program.prefix.append(start + len(thresholds))

    if program.truncated:
        logger.info(f"Slow program dwell counts {program.dwell_counts} truncated to {dwell_cap} per band")
    return program


# ============================================================================
# Generators
# ============================================================================

def _bits(params: Mapping[str, Any], count: int) -> List[int]:
    if 'bits' in params:
        bits = [int(b) for b in params['bits']]
        if any(b not in (0, 1) for b in bits):
            raise InvalidParameter("bits must be 0 or 1")
        return (bits * (count // max(len(bits), 1) + 1))[:count] if bits else [0] * count
    stream = SplitMix64(int(params.get('seed', 0))).bits()
    return [next(stream) for _ in range(count)]


def itinerary_program(kind: str, params: Optional[Mapping[str, Any]] = None,
                      coverage: Optional[Mapping[int, CoveredRange]] = None) -> AnnularItinerary:
    """
    Build an annular itinerary program

    Args:
        kind: One of fast, periodic, bounded, unbounded_nonescaping, slow, custom, mixed
        params: Per-kind parameters
            fast: start (1), length (5)
            periodic: word
            bounded: low (1), length (12), bits or seed
            unbounded_nonescaping: climbs (4), side (1, -1 or 'alternate')
            slow: thresholds, rate, start (1), dwell_cap (3)
            custom: prefix, cycle (optional)
            mixed: length
        coverage: Certified covered ranges; when given, the program is validated

    Raises:
        InvalidParameter: On unknown kinds or bad parameters
        Unrealizable: If a transition lies outside the certified ranges
    """
    params = dict(params or {})
    if kind not in GENERATOR_KINDS:
        raise InvalidParameter(f"Unknown program kind '{kind}' (expected one of {', '.join(GENERATOR_KINDS)})")

    if kind == 'fast':
        start = int(params.get('start', 1))
        length = int(params.get('length', 5))
        if start == 0 or length < 1:
            raise InvalidParameter("fast programs need start != 0 and length >= 1")
        step = 1 if start > 0 else -1
        program = AnnularItinerary([start + step * k for k in range(length)], generator_kind='fast')

    elif kind == 'periodic':
        word = [int(s) for s in params.get('word', [])]
        if not word:
            raise InvalidParameter("periodic programs need a nonempty word")
        program = AnnularItinerary([], cycle=word, generator_kind='periodic')

    elif kind == 'bounded':
        low = int(params.get('low', 1))
        length = int(params.get('length', 12))
        if length < 1:
            raise InvalidParameter("bounded programs need length >= 1")
        program = AnnularItinerary([low + b for b in _bits(params, length)], generator_kind='bounded')

    elif kind == 'unbounded_nonescaping':
        climbs = int(params.get('climbs', 4))
        side = params.get('side', 1)
        if climbs < 1:
            raise InvalidParameter("unbounded_nonescaping programs need climbs >= 1")
        prefix: List[int] = []
        for m in range(1, climbs + 1):
            sign = (1 if m % 2 else -1) if side == 'alternate' else (1 if int(side) > 0 else -1)
            prefix.extend(sign * k for k in range(1, m + 1))
        program = AnnularItinerary(prefix, generator_kind='unbounded_nonescaping')
        program.notes.append(f"peaks |s| = 1..{climbs}, returning to |s| = 1 after each climb")

    elif kind == 'slow':
        if 'thresholds' not in params or 'rate' not in params:
            raise InvalidParameter("slow programs need thresholds and a rate")
        program = slow_program(params['thresholds'], params['rate'], int(params.get('start', 1)),
                               int(params.get('dwell_cap', DEFAULT_DWELL_CAP)))

    elif kind == 'mixed':
        length = int(params.get('length', 2))
        if length < 1:
            raise InvalidParameter("mixed programs need length >= 1")
        program = AnnularItinerary(list(range(length)), generator_kind='mixed')

    else:
        prefix = [int(s) for s in params.get('prefix', [])]
        cycle = params.get('cycle')
        program = AnnularItinerary(prefix, [int(s) for s in cycle] if cycle else None, 'custom')
        if not prefix and not cycle:
            raise InvalidParameter("custom programs need a prefix or a cycle")

    if coverage is not None:
        program.validate(coverage)
    logger.debug(f"{kind} program: prefix={program.prefix}, cycle={program.cycle}")
    return program


def parse_program(text: str) -> Dict[str, Any]:
    """
    Parse the command-line program form

        1,2,3            custom prefix
        1;(2,3)          custom prefix and cycle
        fast:1,5         start, length
        periodic:2,3     word
        bounded:1,12     low, length (bits from the configured seed)
        unbounded:4      climbs
        slow:linear      rate(t) = t
        slow:3,5,40      rate table

    Returns:
        {'kind': ..., 'params': {...}}
    """
    text = text.strip()
    if ':' not in text:
        program = AnnularItinerary.parse(text)
        return {'kind': 'custom', 'params': {'prefix': program.prefix, 'cycle': program.cycle}}

    kind, _, body = text.partition(':')
    kind = kind.strip()
    offset = len(kind) + 1
    if kind == 'unbounded':
        kind = 'unbounded_nonescaping'

    try:
        if kind == 'slow':
            if body.strip() == 'linear':
                return {'kind': kind, 'params': {'rate': lambda t: float(t)}}
            return {'kind': kind, 'params': {'rate': [float(x) for x in body.split(',')]}}
        values = parse_int_list(body)
    except (ParseError, ValueError) as e:
        raise ParseError(f"Bad parameters for '{kind}': {e}", offset, text) from None

    if kind == 'fast':
        keys = ('start', 'length')
    elif kind == 'periodic':
        return {'kind': kind, 'params': {'word': values}}
    elif kind == 'bounded':
        keys = ('low', 'length')
    elif kind == 'unbounded_nonescaping':
        keys = ('climbs',)
    elif kind == 'mixed':
        keys = ('length',)
    else:
        raise ParseError(f"Unknown program kind '{kind}'", 0, text)
    if len(values) > len(keys):
        raise ParseError(f"'{kind}' takes at most {len(keys)} parameters", offset, text)
    return {'kind': kind, 'params': dict(zip(keys, values))}

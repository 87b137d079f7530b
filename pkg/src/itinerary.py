"""
Itinerary Module

Eventually periodic symbol streams used to describe orbits.

Key responsibilities:
- EssentialItinerary: streams over {0, infinity} ('0' and 'i'), with shift and normalization
- AnnularItinerary: finite target programs over band indices, with realizability validation
- Text parsing of both kinds for the CLI
"""

import logging
from dataclasses import dataclass, field
from typing import List, Mapping, Optional, Sequence, Tuple

from .utils import InvalidParameter, ParseError, Unrealizable


logger = logging.getLogger(__name__)

ZERO = '0'
INFINITY = 'i'
SYMBOLS = (ZERO, INFINITY)


def symbol_of(L: float) -> str:
    """Essential symbol of a log-modulus: 'i' iff L > 0 (the unit circle belongs to '0')"""
    return INFINITY if L > 0.0 else ZERO


def _primitive_root(word: Sequence[str]) -> Tuple[str, ...]:
    """Shortest word u with word == u repeated"""
    n = len(word)
    for p in range(1, n + 1):
        if n % p == 0 and all(word[i] == word[i % p] for i in range(n)):
            return tuple(word[:p])
    return tuple(word)


def _minimal_rotation(word: Sequence[str]) -> Tuple[str, ...]:
    """Lexicographically least rotation"""
    n = len(word)
    return min(tuple(word[i:]) + tuple(word[:i]) for i in range(n))


@dataclass(frozen=True)
class EssentialItinerary:
    """
    Eventually periodic sequence over {'0', 'i'}

    symbol_at(n) is prefix[n] for n < len(prefix), otherwise
    cycle[(n - len(prefix)) % len(cycle)].
    """
    prefix: Tuple[str, ...]
    cycle: Tuple[str, ...]

    def __post_init__(self):
        object.__setattr__(self, 'prefix', tuple(self.prefix))
        object.__setattr__(self, 'cycle', tuple(self.cycle))
        if not self.cycle:
            raise InvalidParameter("EssentialItinerary needs a nonempty cycle")
        for s in self.prefix + self.cycle:
            if s not in SYMBOLS:
                raise InvalidParameter(f"Essential symbols are '0' and 'i', got {s!r}")

    def symbol_at(self, n: int) -> str:
        if n < 0:
            raise InvalidParameter(f"Negative itinerary index {n}")
        if n < len(self.prefix):
            return self.prefix[n]
        return self.cycle[(n - len(self.prefix)) % len(self.cycle)]

    def take(self, count: int) -> str:
        """First `count` symbols as a string"""
        return ''.join(self.symbol_at(n) for n in range(count))

    def shift(self, k: int = 1) -> 'EssentialItinerary':
        """sigma^k: drop prefix heads, then rotate the cycle"""
        prefix = list(self.prefix)
        cycle = list(self.cycle)
        for _ in range(k):
            if prefix:
                prefix.pop(0)
            else:
                cycle = cycle[1:] + cycle[:1]
        return EssentialItinerary(tuple(prefix), tuple(cycle))

    def normalized_cycle(self) -> Tuple[str, ...]:
        """Minimal rotation of the primitive cycle; equal for shift-equivalent itineraries"""
        return _minimal_rotation(_primitive_root(self.cycle))

    @classmethod
    def constant(cls, symbol: str) -> 'EssentialItinerary':
        return cls((), (symbol,))

    @classmethod
    def parse(cls, text: str) -> 'EssentialItinerary':
        """
        Parse "<prefix>(<cycle>)", e.g. "0(i)" or "(i0)"

        The symbols '∞' and 'I' are accepted for 'i'.
        """
        cleaned = text.strip().replace('∞', 'i').replace('I', 'i')
        open_at = cleaned.find('(')
        if open_at < 0 or not cleaned.endswith(')'):
            raise ParseError("Expected <prefix>(<cycle>)", len(cleaned), text)
        prefix = cleaned[:open_at].replace(',', '').replace(' ', '')
        cycle = cleaned[open_at + 1:-1].replace(',', '').replace(' ', '')
        for offset, s in enumerate(prefix + cycle):
            if s not in SYMBOLS:
                raise ParseError(f"Unknown essential symbol {s!r}", offset, text)
        if not cycle:
            raise ParseError("Empty cycle", open_at + 1, text)
        return cls(tuple(prefix), tuple(cycle))

    def __str__(self) -> str:
        return f"{''.join(self.prefix)}({''.join(self.cycle)})"


def itinerary_equiv(e1: EssentialItinerary, e2: EssentialItinerary) -> bool:
    """True iff some shift of e1 equals some shift of e2"""
    return e1.normalized_cycle() == e2.normalized_cycle()


# ============================================================================
# Annular itineraries
# ============================================================================

GENERATOR_KINDS = ('fast', 'periodic', 'bounded', 'unbounded_nonescaping', 'slow', 'custom', 'mixed')


@dataclass(frozen=True)
class CoveredRange:
    """Band indices k whose B_k is covered by f(B_source)"""
    source: int
    low: int
    high: int
    indices: Tuple[int, ...] = ()

    def covers(self, k: int) -> bool:
        return k in self.indices if self.indices else self.low <= k <= self.high


@dataclass
class AnnularItinerary:
    """
    Target sequence of band indices

    For programs with a cycle the realized prefix is `prefix` followed by
    as many cycle repetitions as requested by `expand`.
    """
    prefix: List[int]
    cycle: Optional[List[int]] = None
    generator_kind: str = 'custom'
    dwell_counts: List[int] = field(default_factory=list)
    truncated: bool = False
    notes: List[str] = field(default_factory=list)

    def __post_init__(self):
        if self.generator_kind not in GENERATOR_KINDS:
            raise InvalidParameter(f"Unknown generator kind '{self.generator_kind}'")
        if self.cycle is not None and not self.cycle:
            raise InvalidParameter("cycle must be nonempty when given")

    def expand(self, length: int) -> List[int]:
        """First `length` entries"""
        entries = list(self.prefix[:length])
        if self.cycle:
            k = 0
            while len(entries) < length:
                entries.append(self.cycle[k % len(self.cycle)])
                k += 1
        return entries

    def transitions(self) -> List[Tuple[int, int]]:
        """Every consecutive pair, including the cycle wrap-around"""
        entries = list(self.prefix) + list(self.cycle or [])
        pairs = list(zip(entries, entries[1:]))
        if self.cycle:
            pairs.append((self.cycle[-1], self.cycle[0]))
        return pairs

    def validate(self, coverage: Mapping[int, CoveredRange]) -> None:
        """
        Check every transition against covered ranges

        Raises:
            Unrealizable: If some s -> s' is not covered
        """
        for source, target in self.transitions():
            covered = coverage.get(source)
            if covered is None:
                raise Unrealizable(f"No certified covering from B_{source}")
            if not covered.covers(target):
                raise Unrealizable(
                    f"Transition {source} -> {target} outside certified range "
                    f"[{covered.low}, {covered.high}] of B_{source}"
                )

    @classmethod
    def parse(cls, text: str) -> 'AnnularItinerary':
        """Parse "1,2,3" (prefix only) or "1;(2,3)" (prefix and cycle)"""
        cleaned = text.strip()
        cycle = None
        if '(' in cleaned:
            head, _, tail = cleaned.partition('(')
            if not tail.endswith(')'):
                raise ParseError("Unclosed cycle", len(cleaned), text)
            cycle = _parse_ints(tail[:-1], text)
            cleaned = head.rstrip(';, ')
        prefix = _parse_ints(cleaned, text) if cleaned else []
        if not prefix and not cycle:
            raise ParseError("Empty itinerary", 0, text)
        return cls(prefix, cycle, 'custom')


def _parse_ints(body: str, text: str) -> List[int]:
    values = []
    for item in body.replace(';', ',').split(','):
        item = item.strip()
        if not item:
            continue
        try:
            values.append(int(item))
        except ValueError:
            raise ParseError(f"Not an integer: '{item}'", max(text.find(item), 0), text) from None
    return values

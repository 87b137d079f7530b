"""
Shooting Module

Locates points whose orbits follow a prescribed finite annular itinerary
by subdivision shooting over cells in log-polar coordinates.

Key responsibilities:
- Maintain a beam of rectangular (L, theta) cells over the first annulus
- Test each cell with a 3x3 stencil pushed forward through the itinerary
- Quadrisect undecided cells, discard cells whose images clearly miss
- Re-verify the returned point from scratch with the scalar evaluator

Results are numerically verified candidates, not enclosures.
"""

import logging
import math
from dataclasses import dataclass, field
from typing import AbstractSet, List, Mapping, Optional, Sequence, Tuple

import numpy as np

from .covering import CoveringAnnulus
from .function_model import CStarMap, LogPoint, eval_array, evaluate
from .itinerary import symbol_of
from .utils import CStarError, InvalidParameter, NoCellSurvives


logger = logging.getLogger(__name__)

DEFAULT_GRID = 16
DEFAULT_MARGIN = 0.1
DEFAULT_CELL_TOL = 1e-13
DEFAULT_MAX_CELLS = 256
MAX_REFINEMENTS = 120

# images padded by this fraction of their sampled spread before a cell is discarded
DISCARD_PAD = 0.25

_STENCIL = np.array([0.0, 0.5, 1.0])


@dataclass
class ShootingRound:
    """Bookkeeping for one itinerary step"""
    round_index: int
    cells_in: int
    refinements: int
    passing: int
    kept: int
    min_diameter: float

    def to_dict(self) -> dict:
        return {
            'round': self.round_index,
            'cells_in': self.cells_in,
            'refinements': self.refinements,
            'passing': self.passing,
            'kept': self.kept,
            'min_diameter': self.min_diameter,
        }


@dataclass
class RealizedOrbit:
    """A point whose sampled orbit follows the itinerary to verified_depth"""
    point: LogPoint
    verified_depth: int
    itinerary: List[int]
    orbit: List[LogPoint]
    min_margin: float
    truncated: bool = False
    cell_trace: List[ShootingRound] = field(default_factory=list)

    @property
    def essential_symbols(self) -> str:
        return ''.join(symbol_of(p.L) for p in self.orbit)

    def to_dict(self) -> dict:
        return {
            'point': {'L': self.point.L, 'theta': self.point.theta},
            'verified_depth': self.verified_depth,
            'itinerary': list(self.itinerary),
            'orbit': [{'L': p.L, 'theta': p.theta} for p in self.orbit],
            'essential_symbols': self.essential_symbols,
            'min_margin': self.min_margin,
            'truncated': self.truncated,
            'cell_trace': [r.to_dict() for r in self.cell_trace],
        }


@dataclass
class _Cells:
    L_lo: np.ndarray
    L_hi: np.ndarray
    T_lo: np.ndarray
    T_hi: np.ndarray
    paths: List[Tuple[int, ...]]

    def __len__(self) -> int:
        return len(self.paths)

    @property
    def diameters(self) -> np.ndarray:
        return np.maximum(self.L_hi - self.L_lo, self.T_hi - self.T_lo)

    def select(self, order: Sequence[int]) -> '_Cells':
        idx = np.asarray(order, dtype=int)
        return _Cells(self.L_lo[idx], self.L_hi[idx], self.T_lo[idx], self.T_hi[idx],
                      [self.paths[i] for i in idx])

    def quadrisect(self) -> '_Cells':
        """Split every cell into four; children follow their parent in order"""
        L_mid = 0.5 * (self.L_lo + self.L_hi)
        T_mid = 0.5 * (self.T_lo + self.T_hi)
        return _Cells(
            np.stack([self.L_lo, self.L_lo, L_mid, L_mid], axis=1).ravel(),
            np.stack([L_mid, L_mid, self.L_hi, self.L_hi], axis=1).ravel(),
            np.stack([self.T_lo, T_mid, self.T_lo, T_mid], axis=1).ravel(),
            np.stack([T_mid, self.T_hi, T_mid, self.T_hi], axis=1).ravel(),
            [path + (q,) for path in self.paths for q in range(4)],
        )


def _initial_cells(band: Tuple[float, float], grid: int) -> _Cells:
    L_edges = np.linspace(band[0], band[1], grid + 1)
    T_edges = np.linspace(-math.pi, math.pi, grid + 1)
    rows, cols = np.meshgrid(np.arange(grid), np.arange(grid), indexing='ij')
    rows, cols = rows.ravel(), cols.ravel()
    return _Cells(L_edges[rows], L_edges[rows + 1], T_edges[cols], T_edges[cols + 1],
                  [(int(r * grid + c),) for r, c in zip(rows, cols)])


def _stencil_images(f: CStarMap, cells: _Cells, steps: int) -> np.ndarray:
    """L of f^j over the 3x3 stencil of each cell; shape (steps+1, cells, 9), NaN past the horizon"""
    L_frac, T_frac = np.meshgrid(_STENCIL, _STENCIL, indexing='ij')
    L = cells.L_lo[:, None] + (cells.L_hi - cells.L_lo)[:, None] * L_frac.ravel()[None, :]
    T = cells.T_lo[:, None] + (cells.T_hi - cells.T_lo)[:, None] * T_frac.ravel()[None, :]
    out = np.empty((steps + 1,) + L.shape)
    out[0] = L
    L_flat, T_flat = L.ravel(), T.ravel()
    for j in range(1, steps + 1):
        L_flat, T_flat = eval_array(f, L_flat, T_flat, strict=False)
        out[j] = L_flat.reshape(L.shape)
    return out


def _assess(images: np.ndarray, bands: Sequence[CoveringAnnulus], margin: float):
    """
    Per cell: stencil points inside every shrunk band, discard flag and a
    distance score of the center orbit (0 when the center stays inside)
    """
    steps = images.shape[0] - 1
    count = images.shape[1]
    all_inside = np.ones(images.shape[1:], dtype=bool)
    discard = np.zeros(count, dtype=bool)
    deficit = np.zeros(count)

    with np.errstate(invalid='ignore'):
        for j in range(steps + 1):
            band = bands[j]
            lo, hi = band.inner_log_r + margin, band.outer_log_r - margin
            values = images[j]
            all_inside &= (values >= lo) & (values <= hi)

            finite = np.isfinite(values)
            any_finite = finite.any(axis=1)
            vmin = np.where(finite, values, np.inf).min(axis=1)
            vmax = np.where(finite, values, -np.inf).max(axis=1)
            pad = DISCARD_PAD * np.where(any_finite, vmax - vmin, 0.0)
            misses = (vmax + pad < band.inner_log_r) | (vmin - pad > band.outer_log_r)
            discard |= ~any_finite | misses

            center = values[:, 4]
            miss = np.where(center < lo, lo - center, np.where(center > hi, center - hi, 0.0))
            deficit += np.where(np.isfinite(center), miss / band.half_width, np.inf)

    inside_count = all_inside.sum(axis=1)
    return inside_count, discard, deficit


def _ranked(cells: _Cells, inside_count: np.ndarray, deficit: np.ndarray, keep: np.ndarray,
            max_cells: int) -> List[int]:
    candidates = [i for i in range(len(cells)) if keep[i]]
    candidates.sort(key=lambda i: (-int(inside_count[i]), float(deficit[i]), cells.paths[i]))
    return candidates[:max_cells]


def _verify(f: CStarMap, point: LogPoint, bands: Sequence[CoveringAnnulus]) -> Optional[Tuple[List[LogPoint], float]]:
    """Fresh scalar re-evaluation: every f^k(point) strictly inside B_{s_k}"""
    orbit = [point]
    margin = math.inf
    current = point
    for k, band in enumerate(bands):
        if k > 0:
            try:
                current = evaluate(f, current)
            except CStarError:
                return None
            orbit.append(current)
        if not band.inner_log_r < current.L < band.outer_log_r:
            return None
        margin = min(margin, current.L - band.inner_log_r, band.outer_log_r - current.L)
    return orbit, margin


def realize_orbit(f: CStarMap, annuli: Mapping[int, CoveringAnnulus], itinerary: Sequence[int],
                  grid: int = DEFAULT_GRID, margin: float = DEFAULT_MARGIN, tol: float = DEFAULT_CELL_TOL,
                  max_cells: int = DEFAULT_MAX_CELLS,
                  certified: Optional[AbstractSet[Tuple[int, int]]] = None) -> RealizedOrbit:
    """
    Find a point whose orbit visits B_{s_0}, B_{s_1}, ..., B_{s_N}

    Search is a beam rather than a strict survivor set. At step k a cell is
    dropped only when its stencil images clearly miss a band; cells whose
    stencil is partly outside stay in the beam. Cells are quadrisected only
    while no cell has all nine stencil images inside, and the beam keeps the
    max_cells best-ranked cells between steps. The returned point is always
    re-evaluated along the whole prefix, so a result never rests on a cell
    that failed its stencil.

    When a band of the itinerary lies beyond the horizon, the itinerary ends
    at that band. A later band that is missing from annuli because the family
    stopped at the horizon is therefore never looked up.

    Args:
        f: Map
        annuli: Annuli keyed by the indices used in the itinerary
        itinerary: s_0..s_N
        grid: Initial cells per axis over B_{s_0}
        margin: Log-scale shrink applied to every band during the search
        tol: Cells at or below this diameter are not split further
        max_cells: Beam width kept between refinements
        certified: When given, every (s_k, s_{k+1}) must be in this set

    Returns:
        RealizedOrbit with verified_depth = N (less when the horizon truncates N)

    Raises:
        InvalidParameter: On bad arguments or unknown indices
        NoCellSurvives: When the search runs dry or a transition is not certified
    """
    itinerary = [int(s) for s in itinerary]
    if not itinerary:
        raise InvalidParameter("itinerary must not be empty")
    if grid < 1:
        raise InvalidParameter(f"grid must be >= 1, got {grid}")
    if margin < 0:
        raise InvalidParameter(f"margin must be >= 0, got {margin}")
    if not tol > 0:
        raise InvalidParameter(f"tol must be positive, got {tol}")
    if max_cells < 1:
        raise InvalidParameter(f"max_cells must be >= 1, got {max_cells}")
    if itinerary[0] not in annuli:
        raise InvalidParameter(f"No annulus B_{itinerary[0]} available for the itinerary")

    truncated = False
    for k, s in enumerate(itinerary[:-1]):
        band = annuli.get(s)
        if band is None:
            break
        if not max(abs(band.inner_log_r), abs(band.outer_log_r)) <= f.L_max:
            logger.warning(f"B_{s} at step {k} lies beyond the horizon; itinerary truncated to depth {k}")
            itinerary = itinerary[:k + 1]
            truncated = True
            break

    for s in itinerary:
        if s not in annuli:
            raise InvalidParameter(f"No annulus B_{s} available for the itinerary")
        if not 2.0 * margin < annuli[s].outer_log_r - annuli[s].inner_log_r:
            raise InvalidParameter(f"margin {margin} leaves nothing of B_{s}")

    for k, (a, b) in enumerate(zip(itinerary, itinerary[1:]), start=1):
        if certified is not None and (a, b) not in certified:
            raise NoCellSurvives(f"Transition B_{a} -> B_{b} is not certified", round_index=k)

    bands = [annuli[s] for s in itinerary]
    first = bands[0]
    if len(itinerary) == 1:
        point = LogPoint(first.core_log_r, 0.0)
        return RealizedOrbit(point, 0, itinerary, [point], first.half_width, truncated)

    depth = len(itinerary) - 1
    cells = _initial_cells((first.inner_log_r + margin, first.outer_log_r - margin), grid)
    trace: List[ShootingRound] = []

    for k in range(1, depth + 1):
        cells_in = len(cells)
        refinements = 0
        while True:
            images = _stencil_images(f, cells, k)
            inside_count, discard, deficit = _assess(images, bands[:k + 1], margin)
            passing = inside_count == 9
            keep = ~discard
            if passing.any():
                break
            splittable = keep & (cells.diameters > tol)
            if not splittable.any() or refinements >= MAX_REFINEMENTS:
                raise NoCellSurvives(
                    f"No cell survives step {k} ({itinerary[k - 1]} -> {itinerary[k]}) after "
                    f"{refinements} refinements", round_index=k)
            order = _ranked(cells, inside_count, deficit, splittable, max_cells)
            cells = cells.select(order).quadrisect()
            refinements += 1

        order = _ranked(cells, inside_count, deficit, keep, max_cells)
        cells = cells.select(order)
        trace.append(ShootingRound(k, cells_in, refinements, int(passing.sum()), len(cells),
                                   float(cells.diameters.min())))
        logger.debug(f"Shooting step {k}: {int(passing.sum())} passing cells after {refinements} refinements")

    images = _stencil_images(f, cells, depth)
    inside_count, _, _ = _assess(images, bands, margin)
    for i in range(len(cells)):
        if inside_count[i] != 9:
            continue
        center = LogPoint(0.5 * (cells.L_lo[i] + cells.L_hi[i]), 0.5 * (cells.T_lo[i] + cells.T_hi[i]))
        verified = _verify(f, center, bands)
        if verified is None:
            continue
        orbit, min_margin = verified
        logger.info(f"Realized itinerary {itinerary} at {center} (min margin {min_margin:.3g})")
        return RealizedOrbit(center, depth, itinerary, orbit, min_margin, truncated, trace)

    raise NoCellSurvives(f"No surviving cell re-verifies for itinerary {itinerary}", round_index=depth)

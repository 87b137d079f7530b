"""
Raster Module

Per-pixel orbit classification over log-polar windows of the punctured
plane, written as bit-exact PPM images, plus a heuristic component probe.

Key responsibilities:
- RenderWindow: affine pixel <-> (L, theta) mapping with pixel-center sampling
- render_classification: row-parallel classification, class ids and legend
- PPM P6 encoding with fixed palettes
- component_probe: 4-connected components of selected classes, with theta wrap-around

Rows are computed independently and assembled in index order, so the
thread count never changes the output bytes.
"""

import logging
import math
import zlib
from collections import deque
from concurrent.futures import ThreadPoolExecutor
from dataclasses import dataclass, field
from typing import Dict, Iterable, List, Optional, Tuple

import numpy as np

from .function_model import TWO_PI, CStarMap, LogPoint
from .partition import (
    DEFAULT_THETA_ESCAPE,
    DEFAULT_TRAILING_RUN,
    VERDICTS,
    iterate_orbits,
    padded_prefix,
)
from .utils import InvalidParameter, PixelCapExceeded


logger = logging.getLogger(__name__)

DEFAULT_PIXEL_CAP = 4194304
DEFAULT_PREFIX_LENGTH = 6

PALETTES: Dict[int, Dict[str, Tuple[int, int, int]]] = {
    0: {
        'escapes_to_infinity': (226, 88, 34),
        'escapes_to_zero': (36, 96, 214),
        'escapes_mixed': (156, 64, 186),
        'bounded_so_far': (16, 16, 16),
        'undetermined': (168, 168, 168),
    },
    1: {
        'escapes_to_infinity': (255, 255, 255),
        'escapes_to_zero': (192, 192, 192),
        'escapes_mixed': (128, 128, 128),
        'bounded_so_far': (0, 0, 0),
        'undetermined': (64, 64, 64),
    },
}


# ============================================================================
# Windows
# ============================================================================

@dataclass(frozen=True)
class RenderWindow:
    """Log-polar pixel window; row 0 is the L_max edge"""
    L_min: float
    L_max: float
    theta_min: float
    theta_max: float
    width: int
    height: int
    budget: int = 64
    palette_id: int = 0

    def validate(self, pixel_cap: int = DEFAULT_PIXEL_CAP) -> None:
        """
        Raises:
            InvalidParameter: On an empty or inverted window, or a bad budget/palette
            PixelCapExceeded: If width * height exceeds pixel_cap
        """
        if not self.L_min < self.L_max:
            raise InvalidParameter(f"Window needs L_min < L_max, got {self.L_min} and {self.L_max}")
        span = self.theta_max - self.theta_min
        if not 0 < span <= TWO_PI + 1e-12:
            raise InvalidParameter(f"Theta window must span (0, 2 pi], got {span}")
        if self.width < 1 or self.height < 1:
            raise InvalidParameter(f"Window needs positive size, got {self.width}x{self.height}")
        if self.budget < 1:
            raise InvalidParameter(f"budget must be >= 1, got {self.budget}")
        if self.palette_id not in PALETTES:
            raise InvalidParameter(f"Unknown palette {self.palette_id}")
        if self.width * self.height > pixel_cap:
            raise PixelCapExceeded(
                f"{self.width}x{self.height} = {self.width * self.height} pixels exceeds the cap of {pixel_cap}"
            )

    @property
    def full_turn(self) -> bool:
        return abs((self.theta_max - self.theta_min) - TWO_PI) < 1e-9

    @property
    def dL(self) -> float:
        return (self.L_max - self.L_min) / self.height

    @property
    def dtheta(self) -> float:
        return (self.theta_max - self.theta_min) / self.width

    def row_L(self, j: int) -> float:
        return self.L_max - (j + 0.5) * self.dL

    def column_theta(self, i: np.ndarray) -> np.ndarray:
        return self.theta_min + (np.asarray(i, dtype=float) + 0.5) * self.dtheta

    def to_dict(self) -> dict:
        return {
            'L_min': self.L_min, 'L_max': self.L_max,
            'theta_min': self.theta_min, 'theta_max': self.theta_max,
            'width': self.width, 'height': self.height,
            'budget': self.budget, 'palette_id': self.palette_id,
        }


def point_of(window: RenderWindow, i: int, j: int) -> LogPoint:
    """Center of pixel (column i, row j)"""
    return LogPoint(window.row_L(j), float(window.column_theta(i)))


def pixel_of(window: RenderWindow, point: LogPoint) -> Tuple[int, int]:
    """(column, row) of the pixel containing point"""
    theta = window.theta_min + math.fmod(point.theta - window.theta_min, TWO_PI)
    if theta < window.theta_min:
        theta += TWO_PI
    i = int(math.floor((theta - window.theta_min) / window.dtheta))
    j = int(math.floor((window.L_max - point.L) / window.dL))
    return min(max(i, 0), window.width - 1), min(max(j, 0), window.height - 1)


# ============================================================================
# Classification grid
# ============================================================================

@dataclass(frozen=True)
class LegendEntry:
    verdict: str
    prefix: str
    rgb: Tuple[int, int, int]


def class_id_of(verdict: str, prefix: str) -> int:
    return zlib.crc32(f"{verdict}|{prefix}".encode('utf-8'))


def color_of(verdict: str, class_id: int, palette_id: int) -> Tuple[int, int, int]:
    """Verdict base color, shaded by the class id so prefixes stay distinguishable"""
    base = PALETTES[palette_id][verdict]
    if palette_id == 1:
        return base
    shade = 10 + class_id % 6
    return tuple(min(255, c * shade // 15) for c in base)


@dataclass
class ClassGrid:
    """Per-pixel class ids (rows top to bottom) and their legend"""
    class_ids: np.ndarray
    legend: Dict[int, LegendEntry]
    window: Optional[RenderWindow] = None

    @property
    def height(self) -> int:
        return int(self.class_ids.shape[0])

    @property
    def width(self) -> int:
        return int(self.class_ids.shape[1])

    def verdict_at(self, i: int, j: int) -> str:
        return self.legend[int(self.class_ids[j, i])].verdict

    def counts(self) -> Dict[str, int]:
        ids, counts = np.unique(self.class_ids, return_counts=True)
        totals: Dict[str, int] = {}
        for cid, n in zip(ids, counts):
            verdict = self.legend[int(cid)].verdict
            totals[verdict] = totals.get(verdict, 0) + int(n)
        return dict(sorted(totals.items()))


@dataclass
class RenderResult:
    grid: ClassGrid
    image: bytes


def _render_row(f: CStarMap, window: RenderWindow, j: int, prefix_length: int,
                theta_escape: float, trailing_run: int) -> Tuple[np.ndarray, List[str]]:
    theta = window.column_theta(np.arange(window.width))
    L = np.full(window.width, window.row_L(j))
    batch = iterate_orbits(f, L, theta, window.budget, theta_escape, trailing_run)

    span = min(prefix_length, batch.L.shape[0])
    outside = batch.L[:span] > 0
    prefixes = []
    for col in range(window.width):
        n = min(int(batch.lengths[col]), span)
        symbols = ''.join('i' if outside[k, col] else '0' for k in range(n))
        prefixes.append(padded_prefix(symbols, VERDICTS[int(batch.verdicts[col])], prefix_length))
    return batch.verdicts, prefixes


def encode_ppm(rgb: np.ndarray) -> bytes:
    """PPM P6: header, then RGB triples row-major from the top row"""
    height, width = rgb.shape[:2]
    header = f"P6\n{width} {height}\n255\n".encode('ascii')
    return header + np.ascontiguousarray(rgb, dtype=np.uint8).tobytes()


def render_classification(f: CStarMap, window: RenderWindow, prefix_length: int = DEFAULT_PREFIX_LENGTH,
                          theta_escape: float = DEFAULT_THETA_ESCAPE,
                          trailing_run: int = DEFAULT_TRAILING_RUN, threads: int = 1,
                          pixel_cap: int = DEFAULT_PIXEL_CAP) -> RenderResult:
    """
    Classify the orbit of every pixel center and paint the classes

    Args:
        f: Map
        window: Pixel window (validated against pixel_cap)
        prefix_length: Essential-prefix length p used in class ids
        threads: Row workers; results are identical for every value

    Raises:
        PixelCapExceeded: If the window is too large
    """
    window.validate(pixel_cap)
    if prefix_length < 1:
        raise InvalidParameter(f"prefix_length must be >= 1, got {prefix_length}")

    def render_row(j: int) -> Tuple[np.ndarray, List[str]]:
        return _render_row(f, window, j, prefix_length, theta_escape, trailing_run)

    with ThreadPoolExecutor(max_workers=max(1, threads)) as executor:
        rows = list(executor.map(render_row, range(window.height)))

    class_ids = np.zeros((window.height, window.width), dtype=np.int64)
    rgb = np.zeros((window.height, window.width, 3), dtype=np.uint8)
    legend: Dict[int, LegendEntry] = {}
    for j, (verdicts, prefixes) in enumerate(rows):
        for i in range(window.width):
            verdict = VERDICTS[int(verdicts[i])]
            cid = class_id_of(verdict, prefixes[i])
            entry = legend.get(cid)
            if entry is None:
                entry = LegendEntry(verdict, prefixes[i], color_of(verdict, cid, window.palette_id))
                legend[cid] = entry
            elif (entry.verdict, entry.prefix) != (verdict, prefixes[i]):
                logger.warning(f"Class id collision between {entry.verdict}|{entry.prefix} and {verdict}|{prefixes[i]}")
            class_ids[j, i] = cid
            rgb[j, i] = entry.rgb

    grid = ClassGrid(class_ids, dict(sorted(legend.items())), window)
    logger.info(f"Rendered {window.width}x{window.height} window for {f.label}: {grid.counts()}")
    return RenderResult(grid, encode_ppm(rgb))


# ============================================================================
# Component probe
# ============================================================================

@dataclass
class Component:
    label: int
    pixel_count: int
    touches_L_min: bool
    touches_L_max: bool

    @property
    def window_bounded(self) -> bool:
        return not (self.touches_L_min or self.touches_L_max)


@dataclass
class ProbeReport:
    """Heuristic only: touching an edge of the window says nothing beyond it"""
    class_filter: List[str]
    wrap_theta: bool
    components: List[Component] = field(default_factory=list)

    @property
    def touching_L_max(self) -> int:
        return sum(1 for c in self.components if c.touches_L_max)

    @property
    def touching_both(self) -> int:
        return sum(1 for c in self.components if c.touches_L_min and c.touches_L_max)

    def to_dict(self) -> dict:
        return {
            'class_filter': list(self.class_filter),
            'wrap_theta': self.wrap_theta,
            'component_count': len(self.components),
            'touching_L_max': self.touching_L_max,
            'touching_both': self.touching_both,
            'components': [
                {'label': c.label, 'pixel_count': c.pixel_count,
                 'touches_L_min': c.touches_L_min, 'touches_L_max': c.touches_L_max}
                for c in self.components
            ],
        }


def component_probe(grid: ClassGrid, class_filter: Iterable, wrap_theta: Optional[bool] = None) -> ProbeReport:
    """
    4-connected components of the pixels whose class matches class_filter

    Args:
        grid: Rendered or synthetic class grid
        class_filter: Verdict names and/or class ids
        wrap_theta: Treat the first and last columns as adjacent; defaults to
            whether the window spans a full turn

    Returns:
        ProbeReport with components in scan order (top-left first)
    """
    wanted = list(class_filter)
    ids = {int(c) for c in wanted if not isinstance(c, str)}
    verdicts = {c for c in wanted if isinstance(c, str)}
    ids |= {cid for cid, entry in grid.legend.items() if entry.verdict in verdicts}
    if wrap_theta is None:
        wrap_theta = grid.window is not None and grid.window.full_turn

    mask = np.isin(grid.class_ids, list(ids)) if ids else np.zeros(grid.class_ids.shape, dtype=bool)
    labels = np.zeros(mask.shape, dtype=int)
    height, width = mask.shape
    report = ProbeReport([str(c) for c in wanted], bool(wrap_theta))

    for j0 in range(height):
        for i0 in range(width):
            if not mask[j0, i0] or labels[j0, i0]:
                continue
            label = len(report.components) + 1
            labels[j0, i0] = label
            queue = deque([(j0, i0)])
            count, top, bottom = 0, False, False
            while queue:
                j, i = queue.popleft()
                count += 1
                top |= j == 0
                bottom |= j == height - 1
                neighbors = [(j - 1, i), (j + 1, i), (j, i - 1), (j, i + 1)]
                for nj, ni in neighbors:
                    if wrap_theta:
                        ni %= width
                    if 0 <= nj < height and 0 <= ni < width and mask[nj, ni] and not labels[nj, ni]:
                        labels[nj, ni] = label
                        queue.append((nj, ni))
            report.components.append(Component(label, count, touches_L_min=bottom, touches_L_max=top))

    logger.info(
        f"Component probe: {len(report.components)} components, "
        f"{report.touching_L_max} touch the L_max edge"
    )
    return report

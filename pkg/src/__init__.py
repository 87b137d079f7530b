"""
cstar-orbits - Orbits of transcendental self-maps of the punctured plane

Maps of the form z^n exp(g(z) + h(1/z)) evaluated in log-polar coordinates,
with maximum/minimum modulus machinery, annular partitions, certified
annulus coverings, orbit realization by subdivision shooting, and
deterministic classification rendering.
"""

__version__ = "1.0.0"

# Core modules
from .config import Config
from .function_model import (
    CStarMap,
    LogPoint,
    arnold,
    evaluate,
    format_map,
    log_derivative,
    parse_map,
    reciprocal,
    reflect,
)
from .modulus import (
    check_growth_laws,
    check_nesting,
    find_thresholds,
    iterate_radius,
    max_modulus,
    min_modulus,
    relaxed_modulus,
)
from .itinerary import AnnularItinerary, EssentialItinerary, itinerary_equiv
from .partition import (
    AnnularPartition,
    OrbitRecord,
    annulus_index,
    build_partition,
    classify_orbit,
    fast_escape_test,
)
from .covering import (
    CoveringAnnulus,
    CoveringCertificate,
    build_covering_annuli,
    certify_covering,
    choose_eps,
    mixed_fast_annuli,
)
from .shooting import RealizedOrbit, realize_orbit
from .programs import itinerary_program
from .raster import ClassGrid, RenderWindow, component_probe, render_classification
from .export_formats import ExportFormats, export_modulus_csv
from .reporting import ReportGenerator
from .orchestrator import RunOrchestrator
from .cli import run
from .utils import CStarError

__all__ = [
    # Core
    "Config",
    "RunOrchestrator",
    "ReportGenerator",
    "run",
    "CStarError",
    # Maps
    "CStarMap",
    "LogPoint",
    "arnold",
    "evaluate",
    "format_map",
    "log_derivative",
    "parse_map",
    "reciprocal",
    "reflect",
    # Modulus
    "check_growth_laws",
    "check_nesting",
    "find_thresholds",
    "iterate_radius",
    "max_modulus",
    "min_modulus",
    "relaxed_modulus",
    # Itineraries and partitions
    "AnnularItinerary",
    "EssentialItinerary",
    "itinerary_equiv",
    "AnnularPartition",
    "OrbitRecord",
    "annulus_index",
    "build_partition",
    "classify_orbit",
    "fast_escape_test",
    # Orbit construction
    "CoveringAnnulus",
    "CoveringCertificate",
    "build_covering_annuli",
    "certify_covering",
    "choose_eps",
    "mixed_fast_annuli",
    "RealizedOrbit",
    "realize_orbit",
    "itinerary_program",
    # Raster and exports
    "ClassGrid",
    "RenderWindow",
    "component_probe",
    "render_classification",
    "ExportFormats",
    "export_modulus_csv",
]

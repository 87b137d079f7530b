"""
Orchestrator Module

High-level orchestration of the cstar-orbits subcommands. Resolves the
configuration (auto thresholds, eps from delta, horizon), runs the
computation, writes artifacts through ReportGenerator and closes every run
with a manifest.

Key responsibilities:
- Resolve "auto" thresholds before any dependent computation runs
- Build partitions, covering families and certificates for construct
- Dispatch itinerary programs to annular or mixed realization
- Batch classification and rendering over a capped thread pool
- Echo the fully resolved configuration in every report
"""

import logging
import math
from concurrent.futures import ThreadPoolExecutor
from typing import Any, Dict, List, Optional, Sequence, Set, Tuple

from . import __version__
from .config import Config
from .covering import (
    CoveringCertificate,
    CoveringFamily,
    MixedConstruction,
    build_covering_annuli,
    certify_covering,
    certify_family,
    consecutive_pairs,
    coverage_ranges,
    find_covering_base,
    find_mixed_base,
    mixed_fast_annuli,
)
from .export_formats import ExportFormats
from .function_model import CStarMap, LogPoint, parse_map
from .itinerary import INFINITY, ZERO, AnnularItinerary, EssentialItinerary
from .modulus import check_growth_laws, check_nesting, estimate_threshold_radii, find_thresholds
from .partition import (
    AnnularPartition,
    OrbitRecord,
    base_radius_consistency,
    build_partition,
    classify_orbits,
    fast_escape_test,
)
from .programs import dwell_thresholds, itinerary_program, parse_program
from .raster import RenderWindow, component_probe, render_classification
from .reporting import (
    ClassifyReport,
    ConstructReport,
    PartitionReport,
    PointModel,
    RenderReport,
    ReportGenerator,
    ReportHeader,
    VerifyReport,
    checks_of,
    nesting_of,
)
from .shooting import realize_orbit
from .utils import ConfigError, CStarError, SplitMix64, VerificationFailed


logger = logging.getLogger(__name__)

CLASSIFY_BATCH = 256
MAX_SCAN_STEPS = 400


class RunOrchestrator:
    """
    Runs one subcommand against a validated configuration

    Thresholds are resolved lazily and cached, so every artifact of a run
    sees the same values and the manifest can echo them.
    """

    def __init__(self, config: Config, argv: Optional[Sequence[str]] = None):
        """
        Initialize the orchestrator

        Args:
            config: Merged configuration (defaults, file, flags)
            argv: Command line, recorded in the manifest

        Raises:
            ConfigError: If the configuration does not validate
        """
        validation_errors = config.validate()
        if validation_errors:
            raise ConfigError(f"Configuration errors: {'; '.join(validation_errors)}")

        self.config = config
        self.argv = list(argv or [])
        self.map: CStarMap = parse_map(config.map_spec, horizon=config.horizon)
        self.resolved: Dict[str, Any] = {}
        self.reports = ReportGenerator(config.output_dir)

    # ========================================================================
    # Resolution
    # ========================================================================

    @property
    def eps(self) -> float:
        return self.config.resolved_eps

    @property
    def auto_thresholds(self) -> bool:
        return self.config.log_R_plus is None or self.config.log_R_minus is None

    def resolved_config(self) -> Dict[str, Any]:
        """Configuration with every auto value replaced by what the run used"""
        data = self.config.to_dict()
        data['eps'] = self.eps
        data['horizon'] = self.map.L_max
        data.update(self.resolved)
        return data

    def header(self, subcommand: str) -> ReportHeader:
        return ReportHeader(
            version=__version__,
            subcommand=subcommand,
            map=self.config.map_spec,
            config=self.resolved_config(),
        )

    def thresholds(self) -> Tuple[float, float]:
        """(log R+, log R-), scanning for whichever side is auto"""
        if 'log_R_plus' in self.resolved:
            return self.resolved['log_R_plus'], self.resolved['log_R_minus']

        plus, minus = self.config.log_R_plus, self.config.log_R_minus
        if plus is None or minus is None:
            found = find_thresholds(self.map, tol=self.config.modulus_tol, probes=self.config.probes)
            self.resolved['log_R_f'] = found.log_R_f
            plus = found.log_R_plus if plus is None else plus
            minus = found.log_R_minus if minus is None else minus
        self.resolved['log_R_plus'] = plus
        self.resolved['log_R_minus'] = minus
        return plus, minus

    def partition(self, depth: int) -> AnnularPartition:
        plus, minus = self.thresholds()
        return build_partition(self.map, plus, minus, depth, self.config.modulus_tol, self.config.probes)

    def covering_family(self, depth: int) -> CoveringFamily:
        """
        B-annuli to the given depth

        With auto thresholds the base is scanned upward until the nesting
        chain holds; explicit thresholds are used as given and failing levels
        are excluded (asking for them later raises ChainViolation).
        """
        cfg = self.config
        plus, minus = self.thresholds()
        if self.auto_thresholds:
            partition, family = find_covering_base(
                self.map, self.eps, plus, minus, depth,
                step=cfg.scan_step, max_steps=MAX_SCAN_STEPS, tol=cfg.modulus_tol, probes=cfg.probes,
            )
            self.resolved['log_R_plus'] = partition.log_R_plus
            self.resolved['log_R_minus'] = partition.log_R_minus
            return family

        partition = build_partition(self.map, plus, minus, depth, cfg.modulus_tol, cfg.probes)
        return build_covering_annuli(self.map, partition, self.eps, depth, strict=False,
                                     tol=cfg.modulus_tol, probes=cfg.probes)

    # ========================================================================
    # modulus
    # ========================================================================

    def run_modulus(self, log_radii: Sequence[float], with_relaxed: bool = False) -> bytes:
        """Modulus table for the requested log-radii; written as modulus.csv"""
        data = ExportFormats.modulus_csv(
            self.map, log_radii, self.eps if with_relaxed else None,
            self.config.modulus_tol, self.config.probes,
        )
        self.reports.write_bytes("modulus.csv", data)
        return data

    # ========================================================================
    # partition
    # ========================================================================

    def run_partition(self) -> PartitionReport:
        family = self.covering_family(self.config.depth)
        coverage = coverage_ranges(self.map, family, self.config.delta,
                                   self.config.modulus_tol, self.config.probes)
        report = PartitionReport(
            header=self.header('partition'),
            thresholds={k: self.resolved[k] for k in ('log_R_f', 'log_R_plus', 'log_R_minus') if k in self.resolved},
            partition=family.partition.to_dict(),
            covering=family.to_dict(),
            coverage=coverage.to_dict(),
        )
        self.reports.export_json(report, "partition.json")
        return report

    # ========================================================================
    # classify
    # ========================================================================

    def classify(self, points: Sequence[LogPoint]) -> List[OrbitRecord]:
        """Classify seed points in fixed-size batches; output order is input order"""
        cfg = self.config
        partition = self.partition(cfg.depth)
        batches = [list(points[i:i + CLASSIFY_BATCH]) for i in range(0, len(points), CLASSIFY_BATCH)]

        def classify_batch(batch: List[LogPoint]) -> List[OrbitRecord]:
            return classify_orbits(self.map, batch, cfg.budget, cfg.theta_escape, cfg.trailing_run, partition)

        with ThreadPoolExecutor(max_workers=cfg.threads) as executor:
            results = list(executor.map(classify_batch, batches))
        return [record for batch in results for record in batch]

    def run_classify(self, points: Sequence[LogPoint]) -> Tuple[ClassifyReport, bytes]:
        records = self.classify(points)
        data = ExportFormats.classify_csv(records)
        self.reports.write_bytes("classify.csv", data)

        counts: Dict[str, int] = {}
        for record in records:
            counts[record.verdict] = counts.get(record.verdict, 0) + 1
        report = ClassifyReport(header=self.header('classify'), points=len(records), counts=dict(sorted(counts.items())))
        self.reports.export_json(report, "classify.json")
        return report, data

    # ========================================================================
    # construct
    # ========================================================================

    def _certified(self, certificates: Sequence[CoveringCertificate]) -> Set[Tuple[int, int]]:
        certified = set()
        for certificate in certificates:
            if not certificate.passed:
                logger.warning(f"Covering B_{certificate.from_index} -> B_{certificate.to_index} not certified")
            elif certificate.oracle is not None and certificate.oracle.status == 'fail':
                logger.warning(
                    f"Winding oracle found no preimage for B_{certificate.from_index} -> B_{certificate.to_index}"
                )
            else:
                certified.add((certificate.from_index, certificate.to_index))
        return certified

    def run_construct(self, program_text: Optional[str] = None,
                      essential_text: Optional[str] = None) -> ConstructReport:
        """
        Realize an itinerary program or an essential itinerary

        Raises:
            ChainViolation / InequalityViolation: When the annuli cannot be built
            Unrealizable / NoCellSurvives: When the itinerary cannot be followed
        """
        if essential_text is not None:
            return self._construct_mixed(EssentialItinerary.parse(essential_text), self.config.depth)

        spec = parse_program(program_text or "fast:1,3")
        kind, params = spec['kind'], dict(spec['params'])
        if kind == 'mixed':
            depth = int(params.get('length', self.config.depth + 1)) - 1
            return self._construct_mixed(EssentialItinerary.parse("(i0)"), max(depth, 1))
        return self._construct_annular(kind, params)

    def _program_depth(self, kind: str, params: Dict[str, Any]) -> int:
        depth = self.config.depth
        if kind == 'slow':
            return depth
        probe = itinerary_program(kind, params)
        entries = probe.prefix + list(probe.cycle or [])
        return max([depth] + [abs(s) for s in entries])

    def _construct_annular(self, kind: str, params: Dict[str, Any]) -> ConstructReport:
        cfg = self.config
        f = self.map
        if kind == 'bounded':
            params.setdefault('seed', cfg.seed)

        family = self.covering_family(self._program_depth(kind, params))
        if kind == 'slow':
            params['thresholds'] = dwell_thresholds(f, family, int(params.get('start', 1)), cfg.modulus_tol, cfg.probes)
            params.setdefault('dwell_cap', cfg.dwell_cap)
        program = itinerary_program(kind, params)

        coverage = coverage_ranges(f, family, cfg.delta, cfg.modulus_tol, cfg.probes)

        length = max(len(program.prefix), cfg.depth + 1) if program.cycle else len(program.prefix)
        itinerary = program.expand(length)
        notes = list(program.notes)
        horizon = next((k for k, s in enumerate(itinerary) if family.dropped_at_horizon(s)), len(itinerary))
        clipped = 0 < horizon < len(itinerary)
        if clipped:
            notes.append(f"itinerary clipped to {horizon} entries: B_{itinerary[horizon]} lies past the horizon")
            itinerary = itinerary[:horizon]
            AnnularItinerary(itinerary, None, program.generator_kind).validate(coverage.ranges)
        else:
            program.validate(coverage.ranges)

        usable = next((k for k, s in enumerate(itinerary) if s not in family.annuli), len(itinerary))
        if usable == 0:
            family.get(itinerary[0])
        if usable < len(itinerary):
            notes.append(f"itinerary clipped to {usable} entries: B_{itinerary[usable]} was not built")
            itinerary = itinerary[:usable]

        certificates = certify_family(f, family, consecutive_pairs(itinerary), cfg.delta,
                                      cfg.oracle_targets, cfg.seed, cfg.threads, cfg.modulus_tol, cfg.probes)
        realized = realize_orbit(f, family.annuli, itinerary, cfg.grid, cfg.margin, cfg.tol,
                                 cfg.max_cells, self._certified(certificates))

        fast_escape = None
        if kind == 'fast' and realized.verified_depth >= 1:
            outward = itinerary[0] > 0
            partition = family.partition
            result = fast_escape_test(
                f, realized.point,
                EssentialItinerary.constant(INFINITY if outward else ZERO),
                partition.log_R_plus if outward else partition.log_R_minus,
                0, realized.verified_depth, tol=cfg.modulus_tol, probes=cfg.probes,
            )
            fast_escape = {'holds_on_prefix': result.holds_on_prefix, 'checked_depth': result.checked_depth}

        report = ConstructReport(
            header=self.header('construct'),
            program_kind=kind,
            itinerary=itinerary,
            essential=realized.essential_symbols,
            point=PointModel(L=realized.point.L, theta=realized.point.theta),
            verified_depth=realized.verified_depth,
            min_margin=realized.min_margin,
            truncated=realized.truncated or program.truncated or clipped,
            certificates=[c.to_dict() for c in certificates],
            construction={'covering': family.to_dict(), 'coverage': coverage.to_dict()},
            fast_escape=fast_escape,
            dwell_counts=list(program.dwell_counts),
            notes=notes,
            cell_trace=[r.to_dict() for r in realized.cell_trace],
        )
        self.reports.export_json(report, "construct.json")
        return report

    def _mixed_construction(self, e: EssentialItinerary, depth: int) -> MixedConstruction:
        cfg = self.config
        if cfg.log_R0 is not None:
            construction = mixed_fast_annuli(self.map, e, self.eps, cfg.log_R0, depth, cfg.modulus_tol, cfg.probes)
        else:
            plus, minus = self.thresholds()
            start = plus if e.symbol_at(0) == INFINITY else minus
            construction = find_mixed_base(self.map, e, self.eps, start, depth, cfg.scan_step,
                                           MAX_SCAN_STEPS, cfg.modulus_tol, cfg.probes)
        self.resolved['log_R0'] = construction.log_R0
        return construction

    def _construct_mixed(self, e: EssentialItinerary, depth: int) -> ConstructReport:
        cfg = self.config
        f = self.map
        construction = self._mixed_construction(e, depth)
        positions = sorted(construction.annuli)
        pairs = consecutive_pairs(positions)

        def certify(pair: Tuple[int, int]) -> CoveringCertificate:
            return certify_covering(f, construction.annuli[pair[0]], construction.annuli[pair[1]], cfg.delta,
                                    cfg.oracle_targets, cfg.seed, cfg.modulus_tol, cfg.probes)

        with ThreadPoolExecutor(max_workers=cfg.threads) as executor:
            certificates = list(executor.map(certify, pairs))

        realized = realize_orbit(f, construction.annuli, positions, cfg.grid, cfg.margin, cfg.tol,
                                 cfg.max_cells, self._certified(certificates))
        notes = []
        expected = e.take(len(realized.orbit))
        if realized.essential_symbols != expected:
            notes.append(f"realized essential symbols {realized.essential_symbols} differ from {expected}")
            logger.warning(notes[-1])

        report = ConstructReport(
            header=self.header('construct'),
            program_kind='mixed',
            itinerary=realized.itinerary,
            essential=realized.essential_symbols,
            point=PointModel(L=realized.point.L, theta=realized.point.theta),
            verified_depth=realized.verified_depth,
            min_margin=realized.min_margin,
            truncated=realized.truncated or construction.truncation_reason == 'horizon',
            certificates=[c.to_dict() for c in certificates],
            construction=construction.to_dict(),
            notes=notes,
            cell_trace=[r.to_dict() for r in realized.cell_trace],
        )
        self.reports.export_json(report, "construct.json")
        return report

    # ========================================================================
    # render
    # ========================================================================

    def run_render(self, window: RenderWindow, probe_filter: Optional[Sequence[Any]] = None) -> RenderReport:
        cfg = self.config
        result = render_classification(self.map, window, cfg.prefix_length, cfg.theta_escape,
                                       cfg.trailing_run, cfg.threads, cfg.pixel_cap)
        self.reports.write_bytes("render.ppm", result.image)
        self.reports.write_bytes("legend.csv", ExportFormats.legend_csv(result.grid))

        probe = component_probe(result.grid, probe_filter).to_dict() if probe_filter else None
        report = RenderReport(
            header=self.header('render'),
            window=window.to_dict(),
            counts=result.grid.counts(),
            classes=len(result.grid.legend),
            probe=probe,
        )
        self.reports.export_json(report, "render.json")
        return report

    # ========================================================================
    # verify-lemmas
    # ========================================================================

    def sample_points(self, count: int, log_R0: float) -> List[LogPoint]:
        """Seeded points just outside log R0, near the positive real axis"""
        rng = SplitMix64(self.config.seed)
        return [LogPoint(log_R0 + 0.05 + 0.5 * rng.uniform(), 0.2 * (rng.uniform() - 0.5)) for _ in range(count)]

    def run_verify(self, radii: Sequence[float], ks: Sequence[float], eps_grid: Sequence[float] = (),
                   log_r: float = 3.0, estimates: bool = False, consistency: int = 0) -> VerifyReport:
        """
        Growth laws, nested relaxed iterates and optional estimates

        Raises:
            VerificationFailed: After writing the reports, when a check fails
        """
        cfg = self.config
        f = self.map
        growth = check_growth_laws(f, radii, ks, eps_grid, probes=cfg.probes)
        nesting = check_nesting(f, self.eps, log_r, cfg.depth, cfg.modulus_tol, cfg.probes)

        radius_estimates: Dict[str, Optional[float]] = {}
        if estimates:
            radius_estimates.update(estimate_threshold_radii(f, self.eps, depth=cfg.depth,
                                                         tol=cfg.modulus_tol, probes=cfg.probes))
            try:
                mixed = self._mixed_construction(EssentialItinerary.parse("(i0)"), 2)
                radius_estimates['log_R3_estimate'] = mixed.log_R0
            except CStarError as e:
                logger.warning(f"No mixed base estimate: {e}")
                radius_estimates['log_R3_estimate'] = None

        consistency_result = None
        if consistency > 0:
            plus, _ = self.thresholds()
            points = self.sample_points(consistency, plus)
            result = base_radius_consistency(f, EssentialItinerary.constant(INFINITY), plus,
                                         plus + math.log(2.0), points, 0, cfg.depth)
            consistency_result = {
                'tested': result.tested,
                'passed_at_larger': result.passed_at_larger,
                'counterexamples': [{'L': z.L, 'theta': z.theta} for z in result.counterexamples],
                'consistent': result.consistent,
            }

        passed = growth.passed and nesting.passed and (consistency_result is None or consistency_result['consistent'])
        report = VerifyReport(
            header=self.header('verify-lemmas'),
            growth=checks_of(growth),
            growth_passed=growth.passed,
            nesting=nesting_of(nesting),
            radius_estimates=radius_estimates,
            consistency=consistency_result,
            passed=passed,
        )
        self.reports.export_json(report, "verify.json")
        self.reports.export_markdown(report, "verify.md")
        if not passed:
            failing = [c.name for c in report.growth if c.status == 'fail']
            raise VerificationFailed(f"Verification failed: {', '.join(failing) or 'nesting/consistency checks'}")
        return report

    # ========================================================================
    # manifest
    # ========================================================================

    def finish(self, subcommand: str, exit_code: int) -> str:
        return self.reports.write_manifest(__version__, subcommand, self.argv, self.resolved_config(), exit_code)

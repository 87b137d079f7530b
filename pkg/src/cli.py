"""
CLI Module

Command-line entry point for cstar-orbits.

Subcommands:
- modulus: log M / log m table for a list of radii (CSV on stdout)
- partition: thresholds, band boundaries and covering annuli (JSON)
- classify: finite-horizon verdicts for seed points (CSV on stdout)
- construct: certified coverings and a realized orbit (JSON on stdout)
- render: per-pixel classification image, legend and component probe
- verify-lemmas: growth laws of M and m and the nested relaxed iterates

Exit codes: 0 success, 1 usage or configuration error, 2 construction
failure, 3 verification failure, 4 horizon or threshold failure.
"""

import argparse
import logging
import math
import sys
from typing import Any, Callable, Dict, List, Optional, Sequence

from .config import Config, threads_from_env
from .export_formats import ExportFormats
from .function_model import TWO_PI
from .orchestrator import RunOrchestrator
from .raster import RenderWindow
from .utils import CStarError, InvalidParameter, parse_float_list


logger = logging.getLogger(__name__)

MAP_GRAMMAR = (
    "map grammar: arnold(<alpha>, <beta>)  or  n=<int>; g=<poly in z>; h=<poly in w>\n"
    "  e.g. --map \"n=0; g=1z; h=-1w\"  (exp(z - 1/z))\n"
    "negative list values need '=': --L-range=-1,3"
)

# config keys settable from flags: flag dest -> config key
FLAG_KEYS = {
    'map': 'map', 'eps': 'eps', 'delta': 'delta',
    'log_R_plus': 'log_R_plus', 'log_R_minus': 'log_R_minus', 'log_R0': 'log_R0',
    'depth': 'depth', 'grid': 'grid', 'margin': 'margin', 'cell_tol': 'tol',
    'max_cells': 'max_cells', 'budget': 'budget', 'theta_escape': 'theta_escape',
    'prefix_length': 'prefix_length', 'oracle_targets': 'oracle_targets', 'seed': 'seed',
    'probes': 'probes', 'horizon': 'horizon', 'dwell_cap': 'dwell_cap',
    'pixel_cap': 'pixel_cap', 'palette': 'palette', 'threads': 'threads',
    'output_dir': 'output_dir',
}


class Colors:
    """ANSI color codes for terminal output"""
    RESET = '\033[0m'
    BOLD = '\033[1m'
    DIM = '\033[2m'
    RED = '\033[31m'
    GREEN = '\033[32m'
    YELLOW = '\033[33m'
    CYAN = '\033[36m'

    @classmethod
    def disable(cls):
        """Disable colors (for non-TTY environments)"""
        cls.RESET = cls.BOLD = cls.DIM = ''
        cls.RED = cls.GREEN = cls.YELLOW = cls.CYAN = ''


class UI:
    """Status lines on stderr; stdout is reserved for artifacts"""

    @staticmethod
    def success(text: str):
        print(f"{Colors.GREEN}✓ {text}{Colors.RESET}", file=sys.stderr)

    @staticmethod
    def error(text: str):
        print(f"{Colors.RED}✗ {text}{Colors.RESET}", file=sys.stderr)

    @staticmethod
    def warning(text: str):
        print(f"{Colors.YELLOW}⚠ {text}{Colors.RESET}", file=sys.stderr)

    @staticmethod
    def info(text: str):
        print(f"{Colors.CYAN}ℹ {text}{Colors.RESET}", file=sys.stderr)


class UsageError(CStarError):
    """Malformed command line"""
    exit_code = 1


class _Parser(argparse.ArgumentParser):
    def error(self, message: str):
        raise UsageError(message)


# ============================================================================
# Parser
# ============================================================================

def _common_flags() -> argparse.ArgumentParser:
    common = _Parser(add_help=False)
    common.add_argument('-c', '--config', help='Flat key = value configuration file')
    common.add_argument('--map', help='Map specification (see grammar)')
    relax = common.add_mutually_exclusive_group()
    relax.add_argument('--eps', help='Relaxation factor in (0, 1), or auto')
    relax.add_argument('--delta', help='Hyperbolic-length budget; eps = exp(-2 pi^2 / delta)')
    common.add_argument('--log-R-plus', dest='log_R_plus', help='log R+ or auto')
    common.add_argument('--log-R-minus', dest='log_R_minus', help='log R- or auto')
    common.add_argument('--log-R0', dest='log_R0', help='Base log-radius for mixed constructions, or auto')
    common.add_argument('--depth', type=int)
    common.add_argument('--grid', type=int, help='Initial shooting cells per axis')
    common.add_argument('--margin', type=float, help='Log-scale margin inside each annulus')
    common.add_argument('--cell-tol', dest='cell_tol', type=float, help='Smallest cell diameter')
    common.add_argument('--max-cells', dest='max_cells', type=int)
    common.add_argument('--budget', type=int, help='Iteration budget per orbit')
    common.add_argument('--theta-escape', dest='theta_escape', type=float)
    common.add_argument('--prefix-length', dest='prefix_length', type=int)
    common.add_argument('--oracle-targets', dest='oracle_targets', type=int)
    common.add_argument('--seed', help='64-bit seed (decimal or 0x...)')
    common.add_argument('--probes', type=int, help='Coarse angles per circle search')
    common.add_argument('--horizon', help='Log-modulus horizon, or auto')
    common.add_argument('--dwell-cap', dest='dwell_cap', type=int)
    common.add_argument('--pixel-cap', dest='pixel_cap', type=int)
    common.add_argument('--palette', type=int)
    common.add_argument('--threads', type=int, help='Worker cap (falls back to CSTAR_THREADS)')
    common.add_argument('-o', '--output-dir', dest='output_dir')
    common.add_argument('--no-color', action='store_true', help='Disable colored output')
    return common


def build_parser() -> argparse.ArgumentParser:
    parser = _Parser(
        prog='cstar-orbits',
        description="Orbits of transcendental self-maps of the punctured plane",
        epilog=MAP_GRAMMAR,
        formatter_class=argparse.RawDescriptionHelpFormatter,
    )
    parser.add_argument('--log-level', default='WARNING',
                        choices=['DEBUG', 'INFO', 'WARNING', 'ERROR'])
    parser.add_argument('--log-file', help='Also write logs to this file')
    subparsers = parser.add_subparsers(dest='command')
    common = [_common_flags()]

    modulus = subparsers.add_parser('modulus', parents=common, help='Maximum/minimum modulus table')
    radii = modulus.add_mutually_exclusive_group(required=True)
    radii.add_argument('--radii', help='Radii r, comma separated')
    radii.add_argument('--log-radii', dest='log_radii', help='Log-radii, comma separated')
    modulus.add_argument('--relaxed', action='store_true', help='Add log mu and log nu columns')

    subparsers.add_parser('partition', parents=common, help='Thresholds, bands and covering annuli')

    classify = subparsers.add_parser('classify', parents=common, help='Classify seed points')
    seeds = classify.add_mutually_exclusive_group(required=True)
    seeds.add_argument('--points', help='CSV file with columns L, theta')
    seeds.add_argument('--point', action='append', help='L,theta (repeatable)')

    construct = subparsers.add_parser('construct', parents=common, help='Realize an itinerary')
    target = construct.add_mutually_exclusive_group()
    target.add_argument('--itinerary', help='Band list "1,2,3", "1;(2,3)" or kind:params')
    target.add_argument('--essential', help='Essential itinerary such as "(i0)"')

    render = subparsers.add_parser('render', parents=common, help='Render a classification image')
    render.add_argument('--L-range', dest='L_range', required=True, help='L_min,L_max')
    render.add_argument('--theta-range', dest='theta_range', help='theta_min,theta_max (default a full turn)')
    render.add_argument('--width', type=int, default=256)
    render.add_argument('--height', type=int, default=256)
    render.add_argument('--probe', help='Verdicts for the component probe, comma separated')

    verify = subparsers.add_parser('verify-lemmas', parents=common, help='Check growth and nesting laws')
    verify.add_argument('--radii', required=True, help='Radii r, comma separated')
    verify.add_argument('--k', dest='ks', default='2', help='Exponents k > 1, comma separated')
    verify.add_argument('--eps-grid', dest='eps_grid', help='Relaxation factors to scan')
    verify.add_argument('--log-r', dest='log_r', type=float, default=3.0,
                        help='Start of the nested relaxed iterates')
    verify.add_argument('--estimates', action='store_true', help='Add grid estimates of the threshold radii')
    verify.add_argument('--consistency', type=int, default=0,
                        help='Sample points for the base-radius consistency check')
    return parser


# ============================================================================
# Configuration
# ============================================================================

def load_config(args: argparse.Namespace) -> Config:
    """Defaults, then the config file, then flags; threads also read CSTAR_THREADS"""
    config = Config.from_file(args.config) if args.config else Config()
    overrides: Dict[str, Any] = {FLAG_KEYS[dest]: getattr(args, dest, None) for dest in FLAG_KEYS}
    if overrides['threads'] is None:
        overrides['threads'] = threads_from_env()
    return config.merged(overrides)


def _pair(text: str, name: str) -> List[float]:
    values = parse_float_list(text)
    if len(values) != 2:
        raise InvalidParameter(f"{name} needs two values, got '{text}'")
    return values


# ============================================================================
# Commands
# ============================================================================

def cmd_modulus(orchestrator: RunOrchestrator, args: argparse.Namespace) -> int:
    if args.radii is not None:
        radii = parse_float_list(args.radii)
        if any(r <= 0 for r in radii):
            raise InvalidParameter("radii must be positive")
        log_radii = [math.log(r) for r in radii]
    else:
        log_radii = parse_float_list(args.log_radii)
    data = orchestrator.run_modulus(log_radii, with_relaxed=args.relaxed)
    sys.stdout.write(data.decode('utf-8'))
    return 0


def cmd_partition(orchestrator: RunOrchestrator, args: argparse.Namespace) -> int:
    report = orchestrator.run_partition()
    UI.success(
        f"log R+ = {report.thresholds['log_R_plus']:.6g}, log R- = {report.thresholds['log_R_minus']:.6g}, "
        f"{len(report.covering['annuli'])} covering annuli"
    )
    return 0


def cmd_classify(orchestrator: RunOrchestrator, args: argparse.Namespace) -> int:
    if args.points:
        with open(args.points, 'r', encoding='utf-8-sig') as f:
            points = ExportFormats.read_points(f.read())
    else:
        text = "L,theta\n" + "\n".join(args.point) + "\n"
        points = ExportFormats.read_points(text)
    report, data = orchestrator.run_classify(points)
    sys.stdout.write(data.decode('utf-8'))
    UI.success(f"Classified {report.points} points: {report.counts}")
    return 0


def cmd_construct(orchestrator: RunOrchestrator, args: argparse.Namespace) -> int:
    report = orchestrator.run_construct(args.itinerary, args.essential)
    sys.stdout.write(report.model_dump_json(indent=2) + "\n")
    UI.success(
        f"Realized {report.program_kind} itinerary to depth {report.verified_depth} "
        f"at L = {report.point.L:.12g}, theta = {report.point.theta:.12g}"
    )
    if report.truncated:
        UI.warning("Itinerary truncated (horizon or dwell cap); see the report notes")
    return 0


def cmd_render(orchestrator: RunOrchestrator, args: argparse.Namespace) -> int:
    cfg = orchestrator.config
    L_min, L_max = _pair(args.L_range, '--L-range')
    theta_min, theta_max = _pair(args.theta_range, '--theta-range') if args.theta_range else (-math.pi, -math.pi + TWO_PI)
    window = RenderWindow(L_min, L_max, theta_min, theta_max, args.width, args.height, cfg.budget, cfg.palette)
    probe = [v.strip() for v in args.probe.split(',') if v.strip()] if args.probe else None
    report = orchestrator.run_render(window, probe)
    UI.success(f"Rendered {args.width}x{args.height}: {report.classes} classes {report.counts}")
    if report.probe is not None:
        UI.info(
            f"Probe (heuristic): {report.probe['component_count']} components, "
            f"{report.probe['touching_L_max']} touch the L_max edge"
        )
    return 0


def cmd_verify(orchestrator: RunOrchestrator, args: argparse.Namespace) -> int:
    report = orchestrator.run_verify(
        parse_float_list(args.radii),
        parse_float_list(args.ks),
        parse_float_list(args.eps_grid) if args.eps_grid else [],
        args.log_r,
        estimates=args.estimates,
        consistency=args.consistency,
    )
    for check in report.growth:
        line = f"{check.name}: {check.status}"
        (UI.success if check.status == 'pass' else UI.warning)(line)
    UI.success(f"Nesting checked to depth {report.nesting.checked_depth}")
    return 0


COMMANDS: Dict[str, Callable[[RunOrchestrator, argparse.Namespace], int]] = {
    'modulus': cmd_modulus,
    'partition': cmd_partition,
    'classify': cmd_classify,
    'construct': cmd_construct,
    'render': cmd_render,
    'verify-lemmas': cmd_verify,
}


def run(argv: Optional[Sequence[str]] = None) -> int:
    """
    Run one subcommand

    Args:
        argv: Arguments without the program name (defaults to sys.argv[1:])

    Returns:
        Process exit code
    """
    argv = list(sys.argv[1:] if argv is None else argv)
    parser = build_parser()
    try:
        args = parser.parse_args(argv)
    except UsageError as e:
        UI.error(f"Usage error: {e}")
        print(parser.format_usage() + MAP_GRAMMAR, file=sys.stderr)
        return 1
    except SystemExit as e:
        return 0 if e.code in (0, None) else 1

    if args.command is None:
        UI.error("No subcommand given")
        print(parser.format_help(), file=sys.stderr)
        return 1
    if args.no_color or not sys.stderr.isatty():
        Colors.disable()

    orchestrator: Optional[RunOrchestrator] = None
    try:
        orchestrator = RunOrchestrator(load_config(args), argv)
        exit_code = COMMANDS[args.command](orchestrator, args)
    except CStarError as e:
        UI.error(f"{type(e).__name__}: {e}")
        exit_code = e.exit_code
    except Exception as e:
        logger.exception("Unexpected error")
        UI.error(f"Unexpected error: {e}")
        exit_code = 1

    if orchestrator is not None:
        try:
            manifest = orchestrator.finish(args.command, exit_code)
            UI.info(f"Manifest: {manifest}")
        except OSError as e:
            logger.error(f"Could not write manifest: {e}")
    return exit_code


def main():
    """CLI entry point"""
    argv = sys.argv[1:]
    pre = argparse.ArgumentParser(add_help=False)
    pre.add_argument('--log-level', default='WARNING')
    pre.add_argument('--log-file')
    known, _ = pre.parse_known_args(argv)

    handlers: List[logging.Handler] = [logging.StreamHandler(sys.stderr)]
    if known.log_file:
        handlers.append(logging.FileHandler(known.log_file))
    logging.basicConfig(
        level=getattr(logging, str(known.log_level).upper(), logging.WARNING),
        format='%(asctime)s - %(name)s - %(levelname)s - %(message)s',
        handlers=handlers,
    )
    sys.exit(run(argv))


if __name__ == "__main__":
    main()

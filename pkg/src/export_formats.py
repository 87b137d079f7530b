"""
Export Formats for cstar-orbits

CSV writers and readers for the command-line artifacts:
- Modulus tables (log M, log m, optional log mu / log nu, horizon flags)
- Orbit classification tables
- Raster legends (sidecar to the PPM image)
- Seed point tables read by the classify subcommand

Every writer goes through csv.writer on a StringIO with LF line endings and
formats reals with 17 significant digits, so identical inputs always give
identical bytes.
"""

import csv
import logging
import math
from io import StringIO
from typing import Iterable, List, Optional, Sequence

from .function_model import CStarMap, LogPoint
from .modulus import DEFAULT_PROBES, DEFAULT_TOL, sample_modulus
from .partition import OrbitRecord
from .raster import ClassGrid
from .utils import HorizonExceeded, InvalidParameter, ParseError, format_real


logger = logging.getLogger(__name__)

MODULUS_COLUMNS = ['log_r', 'log_M', 'theta_max', 'log_m', 'theta_min', 'n_probes']
RELAXED_COLUMNS = ['log_mu', 'log_nu']
CLASSIFY_COLUMNS = ['L', 'theta', 'verdict', 'checked_depth', 'essential_prefix', 'annular_prefix']
LEGEND_COLUMNS = ['class_id', 'verdict', 'prefix', 'r', 'g', 'b']

FLAG_HORIZON = 'horizon'


def _writer(output: StringIO):
    return csv.writer(output, lineterminator="\n")


class ExportFormats:
    """
    CSV generators for cstar-orbits artifacts
    """

    @staticmethod
    def modulus_csv(f: CStarMap, log_radii: Sequence[float], eps: Optional[float] = None,
                    tol: float = DEFAULT_TOL, probes: int = DEFAULT_PROBES) -> bytes:
        """
        One row per requested log-radius

        Circles beyond the horizon are written as flagged rows with nan
        values instead of failing the whole table. With eps, log mu and
        log nu columns are added.
        """
        if eps is not None and not 0.0 < eps < 1.0:
            raise InvalidParameter(f"eps must lie in (0, 1), got {eps!r}")

        output = StringIO()
        writer = _writer(output)
        header = list(MODULUS_COLUMNS)
        if eps is not None:
            header += RELAXED_COLUMNS
        writer.writerow(header + ['flag'])

        flagged = 0
        for log_r in log_radii:
            try:
                sample = sample_modulus(f, log_r, tol, probes)
            except HorizonExceeded:
                flagged += 1
                row = [format_real(log_r)] + ['nan'] * 4 + [str(probes)]
                if eps is not None:
                    row += ['nan', 'nan']
                writer.writerow(row + [FLAG_HORIZON])
                continue
            row = [
                format_real(sample.log_r),
                format_real(sample.log_M),
                format_real(sample.theta_max),
                format_real(sample.log_m),
                format_real(sample.theta_min),
                str(sample.n_probes),
            ]
            if eps is not None:
                row += [format_real(math.log(eps) + sample.log_M),
                        format_real(sample.log_m - math.log(eps))]
            writer.writerow(row + [''])

        if flagged:
            logger.warning(f"{flagged} modulus rows lie beyond the horizon |log r| <= {f.L_max:.6g}")
        return output.getvalue().encode('utf-8')

    @staticmethod
    def classify_csv(records: Iterable[OrbitRecord]) -> bytes:
        """L, theta, verdict, checked_depth, essential_prefix, annular_prefix"""
        output = StringIO()
        writer = _writer(output)
        writer.writerow(CLASSIFY_COLUMNS)
        for record in records:
            writer.writerow([
                format_real(record.start.L),
                format_real(record.start.theta),
                record.verdict,
                record.checked_depth,
                record.essential_prefix(),
                record.annular_prefix(),
            ])
        return output.getvalue().encode('utf-8')

    @staticmethod
    def legend_csv(grid: ClassGrid) -> bytes:
        """Legend sidecar, sorted by class id"""
        output = StringIO()
        writer = _writer(output)
        writer.writerow(LEGEND_COLUMNS)
        for class_id, entry in sorted(grid.legend.items()):
            writer.writerow([class_id, entry.verdict, entry.prefix, *entry.rgb])
        return output.getvalue().encode('utf-8')

    @staticmethod
    def read_points(text: str) -> List[LogPoint]:
        """
        Parse a seed-point table with columns L and theta

        Raises:
            ParseError: On missing columns or non-numeric values
        """
        text = text.lstrip('\ufeff')
        reader = csv.DictReader(StringIO(text))
        fields = reader.fieldnames or []
        missing = [c for c in ('L', 'theta') if c not in fields]
        if missing:
            raise ParseError(f"Seed table is missing column(s): {', '.join(missing)}", 0, text[:80])

        points = []
        for line, row in enumerate(reader, start=2):
            try:
                points.append(LogPoint(float(row['L']), float(row['theta'])))
            except (TypeError, ValueError, InvalidParameter):
                raise ParseError(f"Row {line} is not a pair of finite reals", line, str(row)) from None
        logger.debug(f"Read {len(points)} seed points")
        return points


export_modulus_csv = ExportFormats.modulus_csv
export_classify_csv = ExportFormats.classify_csv
export_legend_csv = ExportFormats.legend_csv
read_seed_points = ExportFormats.read_points

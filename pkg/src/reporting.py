"""
Reporting Module

Report schemas and writers for every subcommand.

Key responsibilities:
- Pydantic report models (header with the resolved config, per-subcommand bodies)
- JSON export of reports and Markdown summaries of growth and nesting checks
- Artifact bookkeeping with sha256 checksums
- The run manifest (manifest.json) written next to the outputs

Reports carry no timestamps, so reruns with the same config reproduce them
byte for byte; only the manifest records when a run happened.
"""

import logging
import os
from datetime import datetime
from typing import Any, Dict, List, Optional

from pydantic import BaseModel, Field

from .modulus import GrowthReport, NestingResult
from .utils import format_duration, sha256_bytes


logger = logging.getLogger(__name__)

TOOL_NAME = "cstar-orbits"
MANIFEST_NAME = "manifest.json"


# =============================================================================
# Pydantic Models
# =============================================================================

class ReportHeader(BaseModel):
    """Echo of the run every report starts with"""
    tool: str = TOOL_NAME
    version: str
    subcommand: str
    map: str
    config: Dict[str, Any]


class PointModel(BaseModel):
    L: float
    theta: float


class CheckModel(BaseModel):
    """One property check: pass, fail or insufficient-data"""
    name: str
    status: str
    details: List[str] = Field(default_factory=list)


class NestingRowModel(BaseModel):
    n: int
    lhs: float
    rhs: float
    holds: bool


class NestingModel(BaseModel):
    passed: bool
    checked_depth: int
    truncated: bool
    trace: List[NestingRowModel] = Field(default_factory=list)
    dual_trace: List[NestingRowModel] = Field(default_factory=list)


class VerifyReport(BaseModel):
    """verify-lemmas output"""
    header: ReportHeader
    growth: List[CheckModel]
    growth_passed: bool
    nesting: Optional[NestingModel] = None
    radius_estimates: Dict[str, Optional[float]] = Field(default_factory=dict)
    consistency: Optional[Dict[str, Any]] = None
    passed: bool


class PartitionReport(BaseModel):
    """partition output: thresholds, bands and covering annuli"""
    header: ReportHeader
    thresholds: Dict[str, Any]
    partition: Dict[str, Any]
    covering: Optional[Dict[str, Any]] = None
    coverage: Optional[Dict[str, Any]] = None


class ConstructReport(BaseModel):
    """construct output"""
    header: ReportHeader
    program_kind: str
    itinerary: List[int]
    essential: Optional[str] = None
    point: Optional[PointModel] = None
    verified_depth: int = 0
    min_margin: Optional[float] = None
    truncated: bool = False
    certificates: List[Dict[str, Any]] = Field(default_factory=list)
    construction: Dict[str, Any] = Field(default_factory=dict)
    fast_escape: Optional[Dict[str, Any]] = None
    dwell_counts: List[int] = Field(default_factory=list)
    notes: List[str] = Field(default_factory=list)
    cell_trace: List[Dict[str, Any]] = Field(default_factory=list)


class ClassifyReport(BaseModel):
    header: ReportHeader
    points: int
    counts: Dict[str, int]


class RenderReport(BaseModel):
    header: ReportHeader
    window: Dict[str, Any]
    counts: Dict[str, int]
    classes: int
    probe: Optional[Dict[str, Any]] = None


class ArtifactModel(BaseModel):
    path: str
    sha256: str
    size: int


class RunManifest(BaseModel):
    """Everything needed to rerun a subcommand and check its outputs"""
    tool: str = TOOL_NAME
    version: str
    subcommand: str
    argv: List[str]
    config: Dict[str, Any]
    exit_code: int
    artifacts: List[ArtifactModel] = Field(default_factory=list)
    started: str
    duration: str


# =============================================================================
# Converters
# =============================================================================

def checks_of(report: GrowthReport) -> List[CheckModel]:
    return [CheckModel(name=p.name, status=p.status, details=list(p.details)) for p in report.properties]


def nesting_of(result: NestingResult) -> NestingModel:
    def rows(trace):
        return [NestingRowModel(n=r.n, lhs=r.lhs, rhs=r.rhs, holds=r.holds) for r in trace]

    return NestingModel(
        passed=result.passed,
        checked_depth=result.checked_depth,
        truncated=result.truncated,
        trace=rows(result.trace),
        dual_trace=rows(result.dual_trace),
    )


# =============================================================================
# Generator
# =============================================================================

class ReportGenerator:
    """
    Writes artifacts into one output directory and tracks their checksums

    Every write goes through write_bytes so the manifest lists each artifact
    exactly once, in the order written.
    """

    def __init__(self, output_dir: str):
        """
        Initialize report generator

        Args:
            output_dir: Directory for artifacts (created if missing)
        """
        self.output_dir = output_dir
        self.artifacts: List[ArtifactModel] = []
        self.started = datetime.now()
        os.makedirs(self.output_dir, exist_ok=True)

    def write_bytes(self, filename: str, data: bytes) -> str:
        """Write one artifact and record its checksum"""
        filepath = os.path.join(self.output_dir, filename)
        with open(filepath, 'wb') as f:
            f.write(data)
        self.artifacts = [a for a in self.artifacts if a.path != filename]
        self.artifacts.append(ArtifactModel(path=filename, sha256=sha256_bytes(data), size=len(data)))
        logger.debug(f"Wrote {filepath} ({len(data)} bytes)")
        return filepath

    def export_json(self, report: BaseModel, filename: str) -> str:
        """
        Export a report model as indented JSON

        Args:
            report: Any report model
            filename: Name inside the output directory

        Returns:
            Path to the exported file
        """
        text = report.model_dump_json(indent=2) + "\n"
        return self.write_bytes(filename, text.encode('utf-8'))

    def export_markdown(self, report: VerifyReport, filename: str) -> str:
        """
        Export a verify-lemmas report as Markdown

        Returns:
            Path to the exported file
        """
        header = report.header
        lines = [
            "# Growth and Nesting Checks",
            "",
            f"**Map:** `{header.map}`",
            f"**Verdict:** {'PASS' if report.passed else 'FAIL'}",
            "",
            "## Growth laws of M and m",
            "",
            "| Property | Status |",
            "|----------|--------|",
        ]
        icons = {'pass': "✅", 'fail': "❌"}
        for check in report.growth:
            lines.append(f"| {check.name} | {icons.get(check.status, '➖')} {check.status} |")
        lines.append("")

        failing = [c for c in report.growth if c.status == 'fail' and c.details]
        if failing:
            lines.append("### Failures")
            lines.append("")
            for check in failing:
                lines.append(f"- **{check.name}**: {'; '.join(check.details)}")
            lines.append("")

        if report.nesting is not None:
            nesting = report.nesting
            lines.extend([
                "## Nested relaxed iterates",
                "",
                f"- **Checked depth:** {nesting.checked_depth}"
                + (" (truncated by horizon)" if nesting.truncated else ""),
                "",
                "| n | log M^(n-1) | log eps + log mu^n | Holds |",
                "|---|-------------|--------------------|-------|",
            ])
            for row in nesting.trace:
                lines.append(f"| {row.n} | {row.lhs:.9g} | {row.rhs:.9g} | {'yes' if row.holds else 'no'} |")
            lines.append("")

        if report.radius_estimates:
            lines.append("## Radius estimates")
            lines.append("")
            for name, value in report.radius_estimates.items():
                shown = f"{value:.6g}" if value is not None else "not found on the grid"
                lines.append(f"- **{name}:** {shown}")
            lines.append("")

        lines.append("## Resolved configuration")
        lines.append("")
        for key, value in header.config.items():
            lines.append(f"- `{key}` = `{value}`")
        lines.append("")
        return self.write_bytes(filename, "\n".join(lines).encode('utf-8'))

    def write_manifest(self, version: str, subcommand: str, argv: List[str],
                       config: Dict[str, Any], exit_code: int) -> str:
        """
        Write manifest.json listing the config and every artifact checksum

        Returns:
            Path to the manifest
        """
        elapsed = (datetime.now() - self.started).total_seconds()
        manifest = RunManifest(
            version=version,
            subcommand=subcommand,
            argv=list(argv),
            config=config,
            exit_code=exit_code,
            artifacts=list(self.artifacts),
            started=self.started.isoformat(timespec='seconds'),
            duration=format_duration(elapsed),
        )
        filepath = os.path.join(self.output_dir, MANIFEST_NAME)
        with open(filepath, 'w', encoding='utf-8') as f:
            f.write(manifest.model_dump_json(indent=2) + "\n")
        logger.info(f"Manifest written to {filepath} ({len(self.artifacts)} artifacts)")
        return filepath

"""Run manifests and the per-point trace file.

Every file the CLI writes starts with its manifest as ``# key=value``
comment lines, so any output can be reproduced from its own header. The
trace body is one CSV row per point:

    index,value,predicted,aare,threshold,verdict,retrained,latency_us

Optional fields are empty during warm-up. Floats are printed with nine
significant digits and latencies as integer microseconds, keeping runs
diffable.
"""

from __future__ import annotations

from dataclasses import dataclass
from pathlib import Path
from typing import Sequence

from . import __version__
from .detector import StepReport, Verdict
from .errors import DataFormatError

TRACE_COLUMNS = "index,value,predicted,aare,threshold,verdict,retrained,latency_us"


@dataclass(frozen=True)
class RunManifest:
    command: str
    params: tuple[tuple[str, str], ...]

    @staticmethod
    def build(command: str, **params) -> "RunManifest":
        items = tuple(
            (key, "" if value is None else str(value)) for key, value in sorted(params.items())
        )
        return RunManifest(command=command, params=items)

    def header_lines(self) -> list[str]:
        lines = [f"repad2_version={__version__}", f"command={self.command}"]
        lines.extend(f"{k}={v}" for k, v in self.params)
        return lines


def _fmt(value: float | None) -> str:
    return "" if value is None else f"{value:.9g}"


def write_trace(path: str | Path, manifest: RunManifest, reports: Sequence[StepReport]) -> None:
    with open(path, "w", newline="") as fh:
        for line in manifest.header_lines():
            fh.write(f"# {line}\n")
        fh.write(TRACE_COLUMNS + "\n")
        for r in reports:
            fh.write(
                f"{r.time_point},{_fmt(r.observed)},{_fmt(r.predicted)},{_fmt(r.aare)},"
                f"{_fmt(r.threshold)},{r.verdict.value},{int(r.retrained)},"
                f"{round(r.decision_latency * 1e6)}\n"
            )


def read_trace(path: str | Path) -> tuple[dict[str, str], list[StepReport]]:
    """Parse a trace back into manifest entries and step reports."""
    path = Path(path)
    manifest: dict[str, str] = {}
    reports: list[StepReport] = []
    with open(path) as fh:
        lines = iter(enumerate(fh, start=1))
        header_seen = False
        for lineno, raw in lines:
            line = raw.rstrip("\n")
            if line.startswith("#"):
                body = line.lstrip("# ")
                if "=" in body:
                    key, _, value = body.partition("=")
                    manifest[key] = value
                continue
            if not line:
                continue
            if not header_seen:
                if line != TRACE_COLUMNS:
                    raise DataFormatError(f"{path}:{lineno}: unexpected trace header {line!r}")
                header_seen = True
                continue
            cells = line.split(",")
            if len(cells) != 8:
                raise DataFormatError(f"{path}:{lineno}: expected 8 columns, got {len(cells)}")
            try:
                reports.append(
                    StepReport(
                        time_point=int(cells[0]),
                        observed=float(cells[1]),
                        predicted=float(cells[2]) if cells[2] else None,
                        aare=float(cells[3]) if cells[3] else None,
                        threshold=float(cells[4]) if cells[4] else None,
                        verdict=Verdict(cells[5]),
                        retrained=bool(int(cells[6])),
                        re_predicted=False,  # not recorded in the trace
                        decision_latency=int(cells[7]) / 1e6,
                    )
                )
            except ValueError as exc:
                raise DataFormatError(f"{path}:{lineno}: {exc}")
    if not header_seen:
        raise DataFormatError(f"{path}: no trace header found")
    return manifest, reports


def write_keyvalues(path: str | Path, manifest: RunManifest, record: dict) -> None:
    with open(path, "w") as fh:
        for line in manifest.header_lines():
            fh.write(f"# {line}\n")
        for key, value in record.items():
            fh.write(f"{key}={'' if value is None else value}\n")

"""Text serialization of run reports and result tables.

A report is a CSV block of generation records framed by ``#``-prefixed
lines: a JSON echo of the resolved config above it and a JSON summary
below it. Floats are written with ``repr`` so reading a report back gives
bit-identical values.
"""

import csv
import io
import json
from pathlib import Path
from typing import TypeVar

from pydantic import BaseModel

from ..models import Finding, GenerationRecord, LoopConfig, RunReport

REPORT_TITLE = "# deepq-fuzzer run report"
CONFIG_PREFIX = "# config: "
SUMMARY_PREFIX = "# summary: "
RECORD_FIELDS = list(GenerationRecord.model_fields)

ModelT = TypeVar("ModelT", bound=BaseModel)


def _cell(value) -> str:
    if value is None:
        return ""
    if isinstance(value, float):
        return repr(value)
    if hasattr(value, "value"):
        return str(value.value)
    return str(value)


def write_report(report: RunReport, path: Path) -> None:
    """Write ``report`` to ``path``, creating parent directories."""
    path = Path(path)
    path.parent.mkdir(parents=True, exist_ok=True)
    buffer = io.StringIO()
    buffer.write(REPORT_TITLE + "\n")
    buffer.write(CONFIG_PREFIX + report.config.model_dump_json() + "\n")
    writer = csv.writer(buffer, lineterminator="\n")
    writer.writerow(RECORD_FIELDS)
    for record in report.records:
        writer.writerow([_cell(getattr(record, name)) for name in RECORD_FIELDS])
    summary = {
        "generations": len(report.records),
        "accumulated": report.accumulated[-1] if report.accumulated else 0.0,
        "reward_scale": report.reward_scale,
        "aborted": report.aborted,
        "abort_reason": report.abort_reason,
        "weights_path": str(report.weights_path) if report.weights_path else None,
        "findings": [finding.model_dump(mode="json") for finding in report.findings],
    }
    buffer.write(SUMMARY_PREFIX + json.dumps(summary) + "\n")
    path.write_text(buffer.getvalue())


def read_report(path: Path) -> RunReport:
    """Parse a report written by write_report.

    Raises:
        ValueError: If the config or summary line is missing.
    """
    config_json = summary_json = None
    rows: list[str] = []
    for line in Path(path).read_text().splitlines():
        if line.startswith(CONFIG_PREFIX):
            config_json = line[len(CONFIG_PREFIX) :]
        elif line.startswith(SUMMARY_PREFIX):
            summary_json = line[len(SUMMARY_PREFIX) :]
        elif not line.startswith("#") and line:
            rows.append(line)
    if config_json is None or summary_json is None:
        raise ValueError(f"{path} is not a run report")

    report = RunReport(config=LoopConfig.model_validate_json(config_json))
    for row in csv.DictReader(rows):
        report.append(
            GenerationRecord.model_validate({k: (v if v != "" else None) for k, v in row.items()})
        )
    summary = json.loads(summary_json)
    report.reward_scale = summary["reward_scale"]
    report.aborted = summary["aborted"]
    report.abort_reason = summary["abort_reason"]
    report.weights_path = Path(summary["weights_path"]) if summary["weights_path"] else None
    report.findings = [Finding.model_validate(item) for item in summary["findings"]]
    return report


def write_table(rows: list[BaseModel], path: Path) -> None:
    """Write models of one type as a CSV table with a header row."""
    path = Path(path)
    path.parent.mkdir(parents=True, exist_ok=True)
    if not rows:
        path.write_text("")
        return
    fields = list(type(rows[0]).model_fields)
    with open(path, "w", newline="") as handle:
        writer = csv.writer(handle, lineterminator="\n")
        writer.writerow(fields)
        for row in rows:
            writer.writerow([_cell(getattr(row, name)) for name in fields])


def read_table(path: Path, model: type[ModelT]) -> list[ModelT]:
    """Read a table written by write_table back into ``model`` instances."""
    with open(path, newline="") as handle:
        return [
            model.model_validate({k: (v if v != "" else None) for k, v in row.items()})
            for row in csv.DictReader(handle)
        ]

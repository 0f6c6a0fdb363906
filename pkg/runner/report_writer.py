"""Report Writer - atomic JSON/CSV reports plus a witness file for failures."""

import csv
import io
import json
import logging
import os
import tempfile
from pathlib import Path
from typing import Any

from common.constants import SCHEMA_VERSION
from common.models.report import SuiteReport, to_jsonable

logger = logging.getLogger(__name__)

CSV_HEADER = ["suite", "check", "verdict", "residual", "witness_ref"]


class ReportFormat:
    JSON = "json"
    CSV = "csv"


def witness_path(out: Path) -> Path:
    return out.with_name(out.name + ".witness.json")


def _dumps(data: Any) -> str:
    return json.dumps(to_jsonable(data), sort_keys=True, indent=2, ensure_ascii=False) + "\n"


def write_atomic(path: Path, text: str) -> None:
    """Write to a temporary file next to ``path``, then rename over it."""
    path.parent.mkdir(parents=True, exist_ok=True)
    fd, tmp = tempfile.mkstemp(prefix=f".{path.name}.", suffix=".tmp", dir=path.parent)
    try:
        with os.fdopen(fd, "w", encoding="utf-8", newline="") as f:
            f.write(text)
        os.replace(tmp, path)
    except BaseException:
        Path(tmp).unlink(missing_ok=True)
        raise


def _witness_refs(report: SuiteReport, out: Path) -> tuple[list[str], list[dict[str, Any]]]:
    refs: list[str] = []
    witnesses: list[dict[str, Any]] = []
    name = witness_path(out).name
    for result in report.checks:
        if result.failed:
            refs.append(f"{name}#{len(witnesses)}")
            witnesses.append(
                {"suite": result.suite, "check": result.check, "witness": result.witness or {}}
            )
        else:
            refs.append("")
    return refs, witnesses


def render_json(report: SuiteReport, refs: list[str]) -> str:
    data = report.to_dict()
    data["schema"] = SCHEMA_VERSION
    for entry, ref in zip(data["checks"], refs, strict=True):
        entry["witness_ref"] = ref
    return _dumps(data)


def render_csv(report: SuiteReport, refs: list[str]) -> str:
    buffer = io.StringIO()
    writer = csv.writer(buffer, lineterminator="\n")
    writer.writerow(CSV_HEADER)
    for result, ref in zip(report.checks, refs, strict=True):
        writer.writerow(result.to_row(ref))
    return buffer.getvalue()


def render_report(report: SuiteReport, out: str | Path, fmt: str = ReportFormat.JSON) -> list[Path]:
    """
    Persist a report; a failing report also gets ``<out>.witness.json``.

    Returns:
        the paths written, report first

    Raises:
        OSError: on any write failure
        ValueError: on an unknown format
    """
    out = Path(out)
    refs, witnesses = _witness_refs(report, out)
    if fmt == ReportFormat.JSON:
        text = render_json(report, refs)
    elif fmt == ReportFormat.CSV:
        text = render_csv(report, refs)
    else:
        raise ValueError(f"unknown report format {fmt!r}")

    written = []
    if witnesses:
        target = witness_path(out)
        write_atomic(target, _dumps({"schema": SCHEMA_VERSION, "witnesses": witnesses}))
        written.append(target)
    else:
        # drop the witness file of an earlier failing run
        witness_path(out).unlink(missing_ok=True)
    write_atomic(out, text)
    written.insert(0, out)
    logger.info("report written", extra={"path": str(out), "format": fmt, "failures": len(witnesses)})
    return written

"""Tests for reports and the report writer."""

import csv
import json
from pathlib import Path

import numpy as np
import pytest

from common.models.report import CheckResult, SuiteReport, Verdict, check, to_jsonable
from runner.report_writer import CSV_HEADER, ReportFormat, render_report, witness_path


def _report(failing: bool = False) -> SuiteReport:
    report = SuiteReport(command="axioms")
    report.extend(
        [
            check("axioms", "seminorm_triangle", True, 1e-15),
            check("axioms", "cstar_identity", not failing, 0.5, {"sample": 3}),
            CheckResult("gelfand", "product_law_inf_times_zero", Verdict.INDETERMINATE, detail="inf * 0"),
        ]
    )
    return report


class TestCheckResults:
    """Tests for CheckResult and SuiteReport."""

    def test_check_keeps_witness_on_failure(self) -> None:
        """Passing checks drop their witness."""
        assert check("s", "ok", True, 0.0, {"x": 1}).witness is None
        assert check("s", "bad", False, 1.0, {"x": 1}).witness == {"x": 1}
        assert check("s", "bad", False, 1.0).witness == {"note": "bad"}

    def test_status(self) -> None:
        """Indeterminate checks do not fail a report."""
        assert _report().is_passing
        failing = _report(failing=True)
        assert failing.status == Verdict.FAIL
        assert [f.check for f in failing.failures] == ["cstar_identity"]

    def test_to_jsonable(self) -> None:
        """numpy and complex values become plain JSON."""
        data = to_jsonable({"a": np.array([1.0, 2.0]), "z": 1 + 2j, "r": 3 + 0j, "inf": float("inf"), "k": np.int64(4)})
        assert data == {"a": [1.0, 2.0], "z": [1.0, 2.0], "r": 3.0, "inf": "inf", "k": 4}
        assert json.dumps(data)

    def test_to_row(self) -> None:
        """CSV rows keep the residual exactly."""
        row = check("calculus", "root_reproduces", True, 0.1).to_row()
        assert row == ["calculus", "root_reproduces", "pass", "0.1", ""]


class TestRenderReport:
    """Tests for render_report."""

    def test_passing_json(self, tmp_path: Path) -> None:
        """A passing report has no witness file."""
        out = tmp_path / "report.json"
        written = render_report(_report(), out)
        assert written == [out]
        data = json.loads(out.read_text(encoding="utf-8"))
        assert data["schema"] == 1
        assert data["status"] == "pass"
        assert [c["witness_ref"] for c in data["checks"]] == ["", "", ""]
        assert not witness_path(out).exists()

    def test_failing_json_writes_witness(self, tmp_path: Path) -> None:
        """Each failure references its entry in the witness file."""
        out = tmp_path / "report.json"
        written = render_report(_report(failing=True), out)
        assert written == [out, witness_path(out)]
        data = json.loads(out.read_text(encoding="utf-8"))
        assert data["checks"][1]["witness_ref"] == "report.json.witness.json#0"
        witnesses = json.loads(witness_path(out).read_text(encoding="utf-8"))
        assert witnesses["witnesses"] == [{"suite": "axioms", "check": "cstar_identity", "witness": {"sample": 3}}]

    def test_stale_witness_removed(self, tmp_path: Path) -> None:
        """A passing run clears the witness file of an earlier failure."""
        out = tmp_path / "report.json"
        render_report(_report(failing=True), out)
        render_report(_report(), out)
        assert not witness_path(out).exists()

    def test_csv(self, tmp_path: Path) -> None:
        """CSV reports carry one row per check under a fixed header."""
        out = tmp_path / "report.csv"
        render_report(_report(failing=True), out, ReportFormat.CSV)
        rows = list(csv.reader(out.read_text(encoding="utf-8").splitlines()))
        assert rows[0] == CSV_HEADER
        assert [row[2] for row in rows[1:]] == ["pass", "fail", "indeterminate"]
        assert rows[2][4] == "report.csv.witness.json#0"

    def test_empty_csv_is_header_only(self, tmp_path: Path) -> None:
        """A report without checks is just the header."""
        out = tmp_path / "empty.csv"
        render_report(SuiteReport(command="spectrum", result={"sup": 1.0}), out, ReportFormat.CSV)
        assert out.read_text(encoding="utf-8") == ",".join(CSV_HEADER) + "\n"

    def test_deterministic_bytes(self, tmp_path: Path) -> None:
        """The same report renders to the same bytes."""
        first, second = tmp_path / "a.json", tmp_path / "b.json"
        render_report(_report(failing=True), first)
        render_report(_report(failing=True), second)
        assert first.read_bytes().replace(b"a.json", b"X") == second.read_bytes().replace(b"b.json", b"X")

    def test_unknown_format(self, tmp_path: Path) -> None:
        """Only json and csv."""
        with pytest.raises(ValueError):
            render_report(_report(), tmp_path / "r.xml", "xml")

    def test_creates_parent_directories(self, tmp_path: Path) -> None:
        """Missing parents are created."""
        out = tmp_path / "nested" / "deeper" / "report.json"
        render_report(_report(), out)
        assert out.exists()
        assert not list(out.parent.glob("*.tmp"))

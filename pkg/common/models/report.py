"""Check results and suite reports."""

import math
from dataclasses import dataclass, field
from enum import Enum
from typing import Any

import numpy as np


class Verdict(str, Enum):
    """Outcome of a single check."""

    PASS = "pass"
    FAIL = "fail"
    INDETERMINATE = "indeterminate"


def to_jsonable(value: Any) -> Any:
    """Convert numpy scalars/arrays and complex numbers into JSON-safe values."""
    if isinstance(value, dict):
        return {str(k): to_jsonable(v) for k, v in value.items()}
    if isinstance(value, list | tuple):
        return [to_jsonable(v) for v in value]
    if isinstance(value, np.ndarray):
        return [to_jsonable(v) for v in value.tolist()]
    if isinstance(value, np.bool_ | bool):
        return bool(value)
    if isinstance(value, np.integer):
        return int(value)
    if isinstance(value, complex | np.complexfloating):
        z = complex(value)
        if z.imag == 0.0:
            return to_jsonable(z.real)
        return [to_jsonable(z.real), to_jsonable(z.imag)]
    if isinstance(value, float | np.floating):
        x = float(value)
        if math.isnan(x):
            return "nan"
        if math.isinf(x):
            return "inf" if x > 0 else "-inf"
        return x
    return value


@dataclass
class CheckResult:
    """Result of one check inside a suite."""

    suite: str
    check: str
    verdict: Verdict
    residual: float = 0.0
    witness: dict[str, Any] | None = None
    detail: str = ""

    @property
    def failed(self) -> bool:
        return self.verdict == Verdict.FAIL

    def to_dict(self) -> dict[str, Any]:
        """Convert to dictionary."""
        return {
            "suite": self.suite,
            "check": self.check,
            "verdict": self.verdict.value,
            "residual": to_jsonable(self.residual),
            "detail": self.detail,
        }

    def to_row(self, witness_ref: str = "") -> list[str]:
        """CSV row: suite, check, verdict, residual, witness_ref."""
        return [self.suite, self.check, self.verdict.value, repr(float(self.residual)), witness_ref]


def check(
    suite: str,
    name: str,
    ok: bool,
    residual: float = 0.0,
    witness: dict[str, Any] | None = None,
    detail: str = "",
) -> CheckResult:
    """Build a pass/fail result; a witness is kept only on failure."""
    verdict = Verdict.PASS if ok else Verdict.FAIL
    return CheckResult(
        suite=suite,
        check=name,
        verdict=verdict,
        residual=float(residual),
        witness=None if ok else (witness or {"note": detail or name}),
        detail=detail,
    )


@dataclass
class SuiteReport:
    """Overall report of a run."""

    command: str
    checks: list[CheckResult] = field(default_factory=list)
    result: dict[str, Any] | None = None

    @property
    def status(self) -> Verdict:
        if any(c.failed for c in self.checks):
            return Verdict.FAIL
        return Verdict.PASS

    @property
    def is_passing(self) -> bool:
        return self.status == Verdict.PASS

    @property
    def failures(self) -> list[CheckResult]:
        return [c for c in self.checks if c.failed]

    def extend(self, results: list[CheckResult]) -> None:
        self.checks.extend(results)

    def to_dict(self) -> dict[str, Any]:
        """Convert to dictionary."""
        data: dict[str, Any] = {
            "command": self.command,
            "status": self.status.value,
            "checks": [c.to_dict() for c in self.checks],
        }
        if self.result is not None:
            data["result"] = to_jsonable(self.result)
        return data

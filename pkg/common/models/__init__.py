"""Schemas and report models."""

from common.models.report import CheckResult, SuiteReport, Verdict, check, to_jsonable
from common.models.schema import (
    AlgebraSpec,
    ClosedFormElement,
    CommutativeModelSpec,
    DiagonalFormSpec,
    FormFile,
    IntervalSpace,
    KernelFormSpec,
    OperatorModelSpec,
    SamplesElement,
    SeminormSpecModel,
    TableFile,
    TopologySpec,
)

__all__ = [
    "AlgebraSpec",
    "CheckResult",
    "ClosedFormElement",
    "CommutativeModelSpec",
    "DiagonalFormSpec",
    "FormFile",
    "IntervalSpace",
    "KernelFormSpec",
    "OperatorModelSpec",
    "SamplesElement",
    "SeminormSpecModel",
    "SuiteReport",
    "TableFile",
    "TopologySpec",
    "Verdict",
    "check",
    "to_jsonable",
]

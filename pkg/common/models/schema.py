"""Pydantic schemas for model, form and table files."""

from typing import Annotated, Literal

from pydantic import BaseModel, ConfigDict, Field, field_validator, model_validator

from common.constants import DEFAULT_GRID_POINTS, AlgebraKind


class _Strict(BaseModel):
    model_config = ConfigDict(extra="forbid", populate_by_name=True)


class InfinityValue(_Strict):
    """Encoded extended value ``{"inf": true}``."""

    inf: Literal[True]


# A number, an [re, im] pair, or {"inf": true}
ExtendedJSON = float | tuple[float, float] | InfinityValue
ComplexJSON = float | tuple[float, float]


class IntervalSpace(_Strict):
    """Closed interval sampled on a uniform grid."""

    kind: Literal["interval"] = "interval"
    a: float = 0.0
    b: float = 1.0
    n: int = Field(DEFAULT_GRID_POINTS, ge=2, description="Grid points")

    @model_validator(mode="after")
    def _ordered(self) -> "IntervalSpace":
        if not self.b > self.a:
            raise ValueError("interval end must exceed its start")
        return self


class AlgebraSpec(_Strict):
    """Which subalgebra of grid functions plays A0."""

    kind: Literal["bounded", "lipschitz"] = AlgebraKind.BOUNDED
    bound: float | None = Field(None, gt=0, description="Lipschitz bound")

    @model_validator(mode="after")
    def _bound_present(self) -> "AlgebraSpec":
        if self.kind == AlgebraKind.LIPSCHITZ and self.bound is None:
            raise ValueError("lipschitz algebra requires 'bound'")
        return self


class ClosedFormElement(_Strict):
    """Element given by an expression in ``t``."""

    kind: Literal["closed_form"]
    expr: str = Field(..., min_length=1)


class SamplesElement(_Strict):
    """Element given by one value per grid point."""

    kind: Literal["samples"]
    values: list[ExtendedJSON]


ElementSpec = Annotated[ClosedFormElement | SamplesElement, Field(discriminator="kind")]


class SeminormSpecModel(_Strict):
    """One weighted L^p seminorm."""

    p: float = Field(1.0, ge=1.0)
    weight: Literal["unit"] | ElementSpec = "unit"


class TopologySpec(_Strict):
    specs: list[SeminormSpecModel] = Field(..., min_length=1)


class CommutativeModelSpec(_Strict):
    """Model file for the grid model (discriminated by ``space``)."""

    schema_version: Literal[1] = Field(..., alias="schema")
    space: IntervalSpace
    algebra: AlgebraSpec = Field(default_factory=AlgebraSpec)
    topology: TopologySpec
    elements: dict[str, ElementSpec] = Field(default_factory=dict)


class MatrixElement(_Strict):
    matrix: list[list[ComplexJSON]]


class OperatorModelSpec(_Strict):
    """Model file for the truncated operator model (discriminated by ``dim``)."""

    schema_version: Literal[1] = Field(..., alias="schema")
    dim: int = Field(..., ge=1)
    S: list[float]
    elements: dict[str, MatrixElement] = Field(default_factory=dict)

    @field_validator("S")
    @classmethod
    def _weights_at_least_one(cls, value: list[float]) -> list[float]:
        if any(s < 1.0 for s in value):
            raise ValueError("every weight of S must be >= 1")
        return value

    @model_validator(mode="after")
    def _shapes(self) -> "OperatorModelSpec":
        if len(self.S) != self.dim:
            raise ValueError(f"S has {len(self.S)} entries, expected {self.dim}")
        for name, element in self.elements.items():
            rows = element.matrix
            if len(rows) != self.dim or any(len(row) != self.dim for row in rows):
                raise ValueError(f"element '{name}' is not {self.dim}x{self.dim}")
        return self


class DiagonalFormSpec(_Strict):
    kind: Literal["diagonal"]
    weights: list[float]

    @field_validator("weights")
    @classmethod
    def _nonnegative(cls, value: list[float]) -> list[float]:
        if any(w < 0 for w in value):
            raise ValueError("diagonal form weights must be >= 0")
        return value


class KernelFormSpec(_Strict):
    kind: Literal["kernel"]
    matrix: list[list[ComplexJSON]]


FormSpec = Annotated[DiagonalFormSpec | KernelFormSpec, Field(discriminator="kind")]


class FormFile(_Strict):
    """File listing sesquilinear forms for the ``gns`` command."""

    schema_version: Literal[1] = Field(..., alias="schema")
    forms: list[FormSpec]


class TableFile(_Strict):
    """Sampled scalar function for ``table:<file>``."""

    x: list[float] = Field(..., min_length=2)
    y: list[float] = Field(..., min_length=2)

    @model_validator(mode="after")
    def _matching(self) -> "TableFile":
        if len(self.x) != len(self.y):
            raise ValueError("table x and y differ in length")
        if any(b <= a for a, b in zip(self.x, self.x[1:], strict=False)):
            raise ValueError("table x must be strictly increasing")
        return self

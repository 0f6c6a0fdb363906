"""Model Loader - JSON model files to engine models, with line diagnostics."""

import json
import logging
import re
from pathlib import Path
from typing import Any

import numpy as np
import sympy
from pydantic import BaseModel, ValidationError
from sympy.parsing.sympy_parser import (
    convert_xor,
    implicit_multiplication,
    parse_expr,
    standard_transformations,
)

from common.constants import DEFAULT_INFINITY_MEASURE_CELLS, DEFAULT_VALUE_BOUND
from common.errors import InvariantViolation, SchemaError
from common.models.schema import (
    ClosedFormElement,
    CommutativeModelSpec,
    FormFile,
    OperatorModelSpec,
    SamplesElement,
)
from engine.commutative.base_algebra import BoundedFunction, CompactGrid
from engine.commutative.extended import decode_values
from engine.commutative.quasi_model import QuasiElement, QuasiModel, SeminormFamily, SeminormSpec
from engine.operators.operator_model import OperatorElement, OperatorModel, TruncatedDomain

logger = logging.getLogger(__name__)

T = sympy.Symbol("t", real=True)

# Names an expression may use besides t
_FUNCTIONS: dict[str, Any] = {
    "sqrt": sympy.sqrt,
    "exp": sympy.exp,
    "log": sympy.log,
    "sin": sympy.sin,
    "cos": sympy.cos,
    "abs": sympy.Abs,
    "Abs": sympy.Abs,
    "pi": sympy.pi,
    "E": sympy.E,
    "I": sympy.I,
}
_IDENTIFIER = re.compile(r"[A-Za-z_][A-Za-z_0-9]*")
_ALLOWED = re.compile(r"^[A-Za-z_0-9\s.+\-*/^(),]*$")
_NUMBER = re.compile(r"(?:\d+\.?\d*|\.\d+)(?:[eE][+-]?\d+)?")
# Constructors the parser emits; no builtins
_GLOBALS: dict[str, Any] = {
    "__builtins__": {},
    "Integer": sympy.Integer,
    "Float": sympy.Float,
    "Rational": sympy.Rational,
    "Symbol": sympy.Symbol,
    "Function": sympy.Function,
}


def _position(text: str, keys: list[str]) -> tuple[int | None, int | None]:
    """
    Line and column (1-based) of the deepest key of a location path.

    Each key is searched after the previous one; a key missing from the text,
    such as an omitted required field, reports its parent.
    """
    offset = -1
    for key in keys:
        found = text.find(f'"{key}"', max(offset, 0))
        if found >= 0:
            offset = found
    if offset < 0:
        return None, None
    line = text.count("\n", 0, offset) + 1
    column = offset - (text.rfind("\n", 0, offset) + 1) + 1
    return line, column


def read_json(path: str | Path) -> tuple[Any, str]:
    """
    Parse a JSON file.

    Raises:
        OSError: if the file cannot be read
        SchemaError: on malformed JSON, with the decoder's position
    """
    text = Path(path).read_text(encoding="utf-8")
    try:
        return json.loads(text), text
    except json.JSONDecodeError as e:
        raise SchemaError(f"invalid JSON: {e.msg}", e.lineno, e.colno, str(path)) from e


def validate(model: type[BaseModel], raw: Any, text: str, source: str) -> Any:
    """Validate against a schema; the first pydantic error becomes a SchemaError."""
    try:
        return model.model_validate(raw)
    except ValidationError as e:
        error = e.errors()[0]
        loc = error["loc"]
        line, column = _position(text, [part for part in loc if isinstance(part, str)])
        path = ".".join(str(part) for part in loc)
        raise SchemaError(f"{source}: {error['msg']}", line, column, path) from e


def compile_expression(expr: str) -> sympy.Expr:
    """
    Parse a closed-form expression in ``t``.

    Only arithmetic, a handful of elementary functions and numeric literals
    are accepted; anything else is rejected before sympy sees it.

    Raises:
        SchemaError: on disallowed names or unparsable text
    """
    if not _ALLOWED.match(expr):
        raise SchemaError(f"expression '{expr}' contains disallowed characters")
    names = _IDENTIFIER.findall(_NUMBER.sub(" ", expr))
    unknown = {name for name in names if name != "t" and name not in _FUNCTIONS}
    if unknown:
        raise SchemaError(f"expression '{expr}' uses unknown names: {', '.join(sorted(unknown))}")
    transformations = (*standard_transformations, convert_xor, implicit_multiplication)
    try:
        parsed = parse_expr(
            expr,
            local_dict={"t": T, **_FUNCTIONS},
            global_dict=dict(_GLOBALS),
            transformations=transformations,
        )
    except (SyntaxError, TypeError, ValueError, sympy.SympifyError) as e:
        raise SchemaError(f"cannot parse expression '{expr}': {e}") from e
    if not isinstance(parsed, sympy.Expr) or parsed.free_symbols - {T}:
        raise SchemaError(f"expression '{expr}' must depend on t only")
    return parsed


def evaluate_expression(expr: str, grid: CompactGrid) -> tuple[np.ndarray, np.ndarray]:
    """Values of a closed form on the grid; non-finite results become infinity points."""
    fn = sympy.lambdify(T, compile_expression(expr), modules="numpy")
    with np.errstate(all="ignore"):
        raw = np.asarray(fn(grid.points.astype(np.complex128)), dtype=np.complex128)
    values = np.broadcast_to(raw, grid.points.shape).copy()
    infinite = ~np.isfinite(values) | (np.abs(values) >= DEFAULT_VALUE_BOUND)
    values[infinite] = 0.0
    # complex evaluation of real powers leaves roundoff in the imaginary part
    real = np.abs(values.imag) <= 1e-12 * np.maximum(1.0, np.abs(values.real))
    values[real] = values[real].real
    return values, infinite


def _element(spec: ClosedFormElement | SamplesElement, grid: CompactGrid, path: str) -> QuasiElement:
    if isinstance(spec, ClosedFormElement):
        try:
            values, infinite = evaluate_expression(spec.expr, grid)
        except SchemaError as e:
            raise SchemaError(str(e.args[0]), path=path) from e
    else:
        if len(spec.values) != grid.size:
            raise SchemaError(f"expected {grid.size} values, got {len(spec.values)}", path=path)
        values, infinite = decode_values(list(spec.values))
    try:
        return QuasiElement(grid, values, infinite)
    except InvariantViolation as e:
        raise SchemaError(str(e), path=path) from e


def build_commutative(
    spec: CommutativeModelSpec,
    name: str = "model",
    infinity_measure_cells: int = DEFAULT_INFINITY_MEASURE_CELLS,
) -> QuasiModel:
    space = spec.space
    try:
        grid = CompactGrid.uniform(space.a, space.b, space.n)
        seminorms = []
        for i, s in enumerate(spec.topology.specs):
            if s.weight == "unit":
                weight = BoundedFunction.constant(grid, 1.0)
            else:
                element = _element(s.weight, grid, f"topology.specs.{i}.weight")
                if not element.is_bounded:
                    raise SchemaError("seminorm weight must be finite", path=f"topology.specs.{i}.weight")
                weight = element.to_bounded()
            seminorms.append(SeminormSpec(s.p, weight))
        family = SeminormFamily(grid, tuple(seminorms), infinity_measure_cells)
        elements = {
            key: _element(element, grid, f"elements.{key}") for key, element in spec.elements.items()
        }
        return QuasiModel(
            grid=grid,
            family=family,
            algebra_kind=spec.algebra.kind,
            lipschitz_bound=spec.algebra.bound,
            elements=elements,
            name=name,
        )
    except InvariantViolation as e:
        raise SchemaError(str(e)) from e


def build_operator(spec: OperatorModelSpec, name: str = "model") -> OperatorModel:
    domain = TruncatedDomain(np.asarray(spec.S, dtype=np.float64))
    elements = {}
    for key, element in spec.elements.items():
        matrix = np.array(
            [[complex(*c) if isinstance(c, tuple) else complex(c) for c in row] for row in element.matrix]
        )
        try:
            elements[key] = OperatorElement(matrix, domain)
        except InvariantViolation as e:
            raise SchemaError(str(e), path=f"elements.{key}") from e
    return OperatorModel(domain, elements, name)


def load_model(
    path: str | Path,
    infinity_measure_cells: int = DEFAULT_INFINITY_MEASURE_CELLS,
) -> QuasiModel | OperatorModel:
    """
    Load a model file; ``space`` selects the grid model, ``dim`` the operator model.

    ``infinity_measure_cells`` caps the quadrature mass of infinity points in
    the seminorms of a grid model.

    Raises:
        OSError: unreadable file
        SchemaError: malformed JSON or schema violation
    """
    raw, text = read_json(path)
    name = Path(path).stem
    if not isinstance(raw, dict):
        raise SchemaError("model file must hold a JSON object", 1, 1, str(path))
    if "space" in raw and "dim" in raw:
        raise SchemaError("model file has both 'space' and 'dim'", *_position(text, ["dim"]), "dim")
    if "dim" in raw:
        model: QuasiModel | OperatorModel = build_operator(
            validate(OperatorModelSpec, raw, text, str(path)), name
        )
    elif "space" in raw:
        spec = validate(CommutativeModelSpec, raw, text, str(path))
        model = build_commutative(spec, name, infinity_measure_cells)
    else:
        raise SchemaError("model file needs 'space' or 'dim'", 1, 1, str(path))
    logger.info("model loaded", extra={"model": name, "elements": sorted(model.elements)})
    return model


def load_forms(path: str | Path) -> FormFile:
    raw, text = read_json(path)
    return validate(FormFile, raw, text, str(path))

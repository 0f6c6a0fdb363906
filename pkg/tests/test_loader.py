"""Tests for model, form and expression loading."""

from collections.abc import Callable
from pathlib import Path
from typing import Any

import numpy as np
import pytest

from common.constants import AlgebraKind
from common.errors import SchemaError
from engine.commutative.base_algebra import CompactGrid
from engine.commutative.quasi_model import QuasiModel
from engine.operators.operator_model import OperatorModel
from runner.loader import compile_expression, evaluate_expression, load_forms, load_model
from tests.conftest import SAMPLES_DIR

WriteJSON = Callable[[str, Any], Path]


class TestLoadModel:
    """Tests for load_model."""

    def test_grid_model(self, write_json: WriteJSON, small_model_document: dict[str, Any]) -> None:
        """Closed forms are evaluated on the grid; poles become infinity points."""
        model = load_model(write_json("lp.json", small_model_document))
        assert isinstance(model, QuasiModel)
        assert model.name == "lp"
        assert model.grid.size == 257
        assert model.algebra_kind == AlgebraKind.BOUNDED
        assert sorted(model.elements) == ["identity", "inv_sqrt", "quarter", "wave"]
        assert model.element("inv_sqrt").infinity_points == [0]
        assert model.element("quarter").values[-1].real == pytest.approx(1.0)
        assert np.allclose(model.element("identity").values, model.grid.points)
        assert model.element("wave").is_bounded

    def test_samples_element(self) -> None:
        """Sampled values decode {"inf": true} as an infinity point."""
        model = load_model(SAMPLES_DIR / "l2_small.json")
        assert isinstance(model, QuasiModel)
        assert model.family.max_exponent == 2.0
        assert model.element("spike").infinity_points == [4]

    def test_lipschitz_model(self) -> None:
        """The algebra block carries its bound."""
        model = load_model(SAMPLES_DIR / "lipschitz.json")
        assert isinstance(model, QuasiModel)
        assert model.algebra_kind == AlgebraKind.LIPSCHITZ
        assert model.lipschitz_bound == 256

    def test_operator_model(self, write_json: WriteJSON, operator_document: dict[str, Any]) -> None:
        """``dim`` selects the operator model; [re, im] pairs are complex."""
        model = load_model(write_json("operator.json", operator_document))
        assert isinstance(model, OperatorModel)
        assert model.domain.dim == 4
        rotation = model.element("rotation").matrix
        assert rotation[0, 1] == -1j
        assert rotation[1, 0] == 1j
        assert model.element("a").is_hermitian()

    def test_malformed_json(self, write_json: WriteJSON) -> None:
        """Decoder errors carry line and column."""
        path = write_json("broken.json", '{\n  "schema": 1,\n  "space": \n}\n')
        with pytest.raises(SchemaError) as exc:
            load_model(path)
        assert exc.value.line == 4
        assert exc.value.column == 1
        assert "line 4" in str(exc.value)

    def test_schema_violation_position(self, write_json: WriteJSON, small_model_document: dict[str, Any]) -> None:
        """Validation errors point at the offending key."""
        small_model_document["space"]["n"] = 1
        with pytest.raises(SchemaError) as exc:
            load_model(write_json("small.json", small_model_document))
        assert exc.value.path == "space.n"
        assert exc.value.line == 7
        assert exc.value.column == 5

    def test_unknown_field(self, write_json: WriteJSON, small_model_document: dict[str, Any]) -> None:
        """Unknown keys are rejected."""
        small_model_document["colour"] = "blue"
        with pytest.raises(SchemaError) as exc:
            load_model(write_json("extra.json", small_model_document))
        assert exc.value.path == "colour"

    def test_missing_bound(self, write_json: WriteJSON, small_model_document: dict[str, Any]) -> None:
        """A lipschitz algebra needs a bound."""
        small_model_document["algebra"] = {"kind": "lipschitz"}
        with pytest.raises(SchemaError):
            load_model(write_json("lip.json", small_model_document))

    def test_model_kind_is_required(self, write_json: WriteJSON) -> None:
        """Exactly one of ``space`` and ``dim``."""
        with pytest.raises(SchemaError):
            load_model(write_json("none.json", {"schema": 1}))
        with pytest.raises(SchemaError) as exc:
            load_model(write_json("both.json", {"schema": 1, "space": {}, "dim": 2}))
        assert exc.value.path == "dim"
        with pytest.raises(SchemaError):
            load_model(write_json("list.json", [1, 2]))

    def test_samples_length(self, write_json: WriteJSON, small_model_document: dict[str, Any]) -> None:
        """One sample per grid point."""
        small_model_document["elements"]["bad"] = {"kind": "samples", "values": [1.0, 2.0]}
        with pytest.raises(SchemaError) as exc:
            load_model(write_json("bad.json", small_model_document))
        assert exc.value.path == "elements.bad"

    def test_dense_infinity_set(self, write_json: WriteJSON, small_model_document: dict[str, Any]) -> None:
        """Three adjacent infinity points are not nowhere dense."""
        values: list[Any] = [1.0] * 257
        values[100:103] = [{"inf": True}] * 3
        small_model_document["elements"]["dense"] = {"kind": "samples", "values": values}
        with pytest.raises(SchemaError) as exc:
            load_model(write_json("dense.json", small_model_document))
        assert exc.value.path == "elements.dense"

    def test_operator_weights(self, write_json: WriteJSON, operator_document: dict[str, Any]) -> None:
        """S entries below one are rejected by the schema."""
        operator_document["S"][0] = 0.5
        with pytest.raises(SchemaError) as exc:
            load_model(write_json("weights.json", operator_document))
        assert exc.value.path == "S"

    def test_operator_shape(self, write_json: WriteJSON, operator_document: dict[str, Any]) -> None:
        """Matrices must be dim x dim."""
        operator_document["elements"]["small"] = {"matrix": [[1, 0], [0, 1]]}
        with pytest.raises(SchemaError):
            load_model(write_json("shape.json", operator_document))

    def test_missing_file(self, tmp_path: Path) -> None:
        """Unreadable files surface as OSError."""
        with pytest.raises(OSError):
            load_model(tmp_path / "absent.json")


class TestLoadForms:
    """Tests for load_forms."""

    def test_sample_forms(self) -> None:
        """The sample file lists three diagonal forms."""
        forms = load_forms(SAMPLES_DIR / "forms.json")
        assert [f.kind for f in forms.forms] == ["diagonal", "diagonal", "diagonal"]
        assert len(forms.forms[1].weights) == 9

    def test_negative_weight(self, write_json: WriteJSON) -> None:
        """Diagonal weights are non-negative."""
        path = write_json("forms.json", {"schema": 1, "forms": [{"kind": "diagonal", "weights": [1, -1]}]})
        with pytest.raises(SchemaError) as exc:
            load_forms(path)
        assert exc.value.path.startswith("forms.0")


class TestExpressions:
    """Tests for the closed-form expression whitelist."""

    @pytest.mark.parametrize("expr", ["t^2 + sqrt(t)", "exp(-t) * cos(2*pi*t)", "2*t", "1e-3*t", "abs(t - 1/2)"])
    def test_accepted(self, expr: str) -> None:
        """Arithmetic and the elementary functions parse."""
        compile_expression(expr)

    @pytest.mark.parametrize(
        "expr",
        ["__import__('os')", "t.__class__", "x + t", "gamma(t)", "t +", "t; 1", "lambda: t"],
    )
    def test_rejected(self, expr: str) -> None:
        """Anything outside the whitelist is a schema error."""
        with pytest.raises(SchemaError):
            compile_expression(expr)

    def test_pole_becomes_infinity(self, grid: CompactGrid) -> None:
        """Non-finite values mark infinity points."""
        values, infinite = evaluate_expression("1/t", grid)
        assert infinite[0] and not infinite[1:].any()
        assert values[0] == 0
        assert values[-1] == pytest.approx(1.0)

    def test_constant_expression(self, grid: CompactGrid) -> None:
        """Constants broadcast over the grid."""
        values, infinite = evaluate_expression("3", grid)
        assert values.shape == (grid.size,)
        assert np.all(values == 3.0)
        assert not infinite.any()

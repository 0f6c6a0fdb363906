"""Test configuration."""

import json
from collections.abc import Callable
from pathlib import Path
from typing import Any

import numpy as np
import pytest

from common.utils.config import get_settings
from engine.commutative.base_algebra import CompactGrid
from engine.commutative.quasi_model import QuasiElement, QuasiModel, SeminormFamily
from engine.operators.operator_model import OperatorElement, TruncatedDomain

SAMPLES_DIR = Path(__file__).resolve().parent.parent / "samples"


@pytest.fixture(autouse=True)
def _fresh_settings() -> Any:
    """Settings are cached per process; tests that patch the environment need a clean cache."""
    get_settings.cache_clear()
    yield
    get_settings.cache_clear()


@pytest.fixture
def rng() -> np.random.Generator:
    return np.random.default_rng(7)


@pytest.fixture
def grid() -> CompactGrid:
    """Small uniform grid on [0, 1]; h = 1/256."""
    return CompactGrid.uniform(0.0, 1.0, 257)


@pytest.fixture
def fine_grid() -> CompactGrid:
    return CompactGrid.uniform(0.0, 1.0, 4096)


@pytest.fixture
def family(grid: CompactGrid) -> SeminormFamily:
    return SeminormFamily.lebesgue(grid, 1.0)


@pytest.fixture
def model(grid: CompactGrid, family: SeminormFamily) -> QuasiModel:
    return QuasiModel(grid=grid, family=family, elements={"inv_sqrt": power_element(grid, -0.5)})


def power_element(grid: CompactGrid, exponent: float) -> QuasiElement:
    """t^exponent with an infinity point at t = 0 for negative exponents."""
    t = grid.points
    mask = np.zeros(grid.size, dtype=bool)
    if exponent < 0:
        mask[t == 0.0] = True
    with np.errstate(divide="ignore"):
        values = np.where(mask, 0.0, np.abs(t) ** exponent)
    return QuasiElement(grid, values, mask)


@pytest.fixture
def domain() -> TruncatedDomain:
    return TruncatedDomain(np.array([1.0, 2.0, 2.0, 3.0]))


@pytest.fixture
def psd_element(domain: TruncatedDomain) -> OperatorElement:
    matrix = np.array([[3, 1, 0, 0], [1, 3, 0, 0], [0, 0, 5, 0], [0, 0, 0, 1]], dtype=np.complex128)
    return OperatorElement(matrix, domain)


@pytest.fixture
def write_json(tmp_path: Path) -> Callable[[str, Any], Path]:
    """Write a JSON document (or raw text) into the test directory."""

    def write(name: str, document: Any) -> Path:
        path = tmp_path / name
        text = document if isinstance(document, str) else json.dumps(document, indent=2)
        path.write_text(text, encoding="utf-8")
        return path

    return write


@pytest.fixture
def small_model_document() -> dict[str, Any]:
    return {
        "schema": 1,
        "space": {"kind": "interval", "a": 0.0, "b": 1.0, "n": 257},
        "algebra": {"kind": "bounded"},
        "topology": {"specs": [{"p": 1, "weight": "unit"}]},
        "elements": {
            "inv_sqrt": {"kind": "closed_form", "expr": "t^(-1/2)"},
            "quarter": {"kind": "closed_form", "expr": "t^(-1/4)"},
            "identity": {"kind": "closed_form", "expr": "t"},
            "wave": {"kind": "closed_form", "expr": "cos(2*pi*t)"},
        },
    }


@pytest.fixture
def operator_document() -> dict[str, Any]:
    return json.loads((SAMPLES_DIR / "operator.json").read_text(encoding="utf-8"))

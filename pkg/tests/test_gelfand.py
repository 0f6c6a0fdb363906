"""Tests for the extended Gelfand transform on mixed elements."""

import numpy as np
import pytest

from common.errors import InvariantViolation, NotQuasiPositive, SpanInput
from common.models.report import Verdict
from engine.commutative.base_algebra import BoundedFunction, CompactGrid
from engine.commutative.extended import INFINITY
from engine.commutative.gelfand_extension import (
    ExtendedFunction,
    MixedElement,
    combine,
    approach_to_infinity,
    functional_laws_check,
    phi_prime,
    representation_pairs,
    transform,
    transform_quasi,
    well_definedness_check,
    wedge_iso_check,
)
from engine.commutative.quasi_model import QuasiElement
from tests.conftest import power_element


def _zero(grid: CompactGrid) -> BoundedFunction:
    return BoundedFunction.constant(grid, 0.0)


class TestMixedElement:
    """Tests for MixedElement construction."""

    def test_requires_quasi_positive_part(self, grid: CompactGrid) -> None:
        """The a-part lives in the quasi-positive wedge."""
        with pytest.raises(NotQuasiPositive):
            MixedElement.of(QuasiElement(grid, -np.ones(grid.size)))

    def test_combine(self, grid: CompactGrid) -> None:
        """Non-negative combinations add a-parts and y-parts."""
        a = power_element(grid, -0.5)
        one = BoundedFunction.constant(grid, 1.0)
        m = MixedElement(a, one, one)
        combined = combine([(2.0, m), (1.0, MixedElement.of(power_element(grid, 1.0)))])
        assert combined.a.infinity_points == [0]
        assert combined.a.values[-1].real == pytest.approx(3.0)
        assert np.allclose(combined.y.values, 2.0)

    @pytest.mark.parametrize("coefficient", [-1.0, 1j])
    def test_combine_leaves_wedge(self, grid: CompactGrid, coefficient: complex) -> None:
        """Negative or complex coefficients are span inputs."""
        with pytest.raises(SpanInput):
            combine([(coefficient, MixedElement.of(power_element(grid, -0.5)))])

    def test_combine_needs_shared_x(self, grid: CompactGrid) -> None:
        """Terms with different x parts cannot be merged."""
        a = power_element(grid, -0.5)
        m1 = MixedElement.of(a)
        m2 = MixedElement(a, BoundedFunction.coordinate(grid), _zero(grid))
        with pytest.raises(SpanInput):
            combine([(1.0, m1), (1.0, m2)])
        with pytest.raises(SpanInput):
            combine([])


class TestTransform:
    """Tests for phi_prime and transform."""

    def test_quasi_element_maps_to_itself(self, grid: CompactGrid) -> None:
        """The transform of a is a at finite characters and inf at its poles."""
        a = power_element(grid, -0.5)
        fa = transform_quasi(a)
        assert fa.infinity_set == [0]
        assert np.allclose(fa.values[1:], a.values[1:], rtol=1e-12)
        assert fa.sup_abs() == float("inf")

    def test_phi_prime_matches_transform(self, grid: CompactGrid) -> None:
        """Pointwise evaluation agrees with the whole transform."""
        m = MixedElement(power_element(grid, -0.5), BoundedFunction(grid, np.cos(grid.points)), _zero(grid))
        fm = transform(m)
        assert phi_prime(grid.character(0), m) == INFINITY
        for index in (1, 100, 256):
            assert phi_prime(grid.character(index), m).close_to(fm.value_at(index), 1e-12)

    def test_zero_x_cancels_infinity(self, grid: CompactGrid) -> None:
        """a x with x(t0) = 0 is finite at the pole t0."""
        m = MixedElement(power_element(grid, -0.5), BoundedFunction.coordinate(grid), BoundedFunction.constant(grid, 2.0))
        value = phi_prime(grid.character(0), m)
        assert value.is_finite
        assert value.value.real == pytest.approx(2.0)

    def test_bounded_element(self, grid: CompactGrid) -> None:
        """On A0 the transform is the ordinary Gelfand transform."""
        y = BoundedFunction(grid, np.exp(1j * grid.points))
        fy = transform(MixedElement.bounded(y))
        assert np.allclose(fy.values, y.values)
        assert fy.sup_abs() == pytest.approx(1.0)

    def test_complex_x(self, grid: CompactGrid) -> None:
        """A complex x splits into hermitian parts."""
        a = power_element(grid, 1.0)
        x = BoundedFunction(grid, np.cos(3 * grid.points) + 1j * np.sin(3 * grid.points))
        fm = transform(MixedElement(a, x, _zero(grid)))
        assert np.allclose(fm.values, a.values * x.values, rtol=1e-12, atol=1e-14)

    def test_extended_function_window_rule(self) -> None:
        """Three adjacent infinite characters are rejected."""
        with pytest.raises(InvariantViolation):
            ExtendedFunction(np.zeros(5), np.array([1, 1, 1, 0, 0], dtype=bool))

    def test_approach_to_infinity(self, grid: CompactGrid) -> None:
        """|phi'| grows towards an infinity point."""
        m = MixedElement.of(power_element(grid, -0.5))
        approach = approach_to_infinity(m, 0)
        assert approach == sorted(approach)
        assert len(approach) == 5
        with pytest.raises(InvariantViolation):
            approach_to_infinity(m, 10)


class TestSuites:
    """Tests for the functional-law and wedge-isomorphism suites."""

    @pytest.fixture
    def samples(self, grid: CompactGrid) -> list[MixedElement]:
        return [
            MixedElement(
                power_element(grid, -0.5),
                BoundedFunction.constant(grid, 1.0),
                BoundedFunction(grid, np.cos(5 * grid.points)),
            ),
            MixedElement(power_element(grid, -0.25), BoundedFunction.coordinate(grid), _zero(grid)),
        ]

    def test_functional_laws(self, samples: list[MixedElement]) -> None:
        """All laws hold; inf * 0 is reported as indeterminate."""
        results = {r.check: r for r in functional_laws_check(samples)}
        for name in ("additivity", "homogeneity", "product_law", "denominator_implications", "hermiticity"):
            assert results[name].verdict == Verdict.PASS, results[name].witness
        assert results["product_law_inf_times_zero"].verdict == Verdict.INDETERMINATE

    def test_functional_laws_empty(self) -> None:
        """No samples, no checks."""
        assert functional_laws_check([]) == []

    def test_wedge_iso(self, grid: CompactGrid) -> None:
        """The transform is a wedge isomorphism on sample elements."""
        quasi = [power_element(grid, -0.5), power_element(grid, -0.25), power_element(grid, 1.0)]
        bounded = [BoundedFunction(grid, np.cos(4 * grid.points)), BoundedFunction.coordinate(grid)]
        results = wedge_iso_check(quasi, bounded)
        assert [r.check for r in results] == [
            "iso_injective",
            "iso_additive",
            "iso_homogeneous",
            "iso_isometric_on_A0",
            "iso_product_laws",
        ]
        assert all(r.verdict == Verdict.PASS for r in results), [r.witness for r in results]

    def test_well_definedness(self, grid: CompactGrid, rng: np.random.Generator) -> None:
        """Different representatives of one function share a transform."""
        [result] = well_definedness_check(representation_pairs(grid, rng, 6))
        assert result.verdict == Verdict.PASS

    def test_well_definedness_detects_different_functions(self, grid: CompactGrid) -> None:
        """Two different elements are not one function."""
        pairs = [(MixedElement.of(power_element(grid, -0.5)), MixedElement.of(power_element(grid, 1.0)))]
        [result] = well_definedness_check(pairs)
        assert result.verdict == Verdict.FAIL
        assert result.witness == {"pair": 0, "character": 0, "reason": "infinity set"}

"""Tests for spectra, the functional calculus, partial products and roots."""

from fractions import Fraction

import numpy as np
import pytest

from common.errors import InvariantViolation, NotInClass, NotMultipliable, NotQuasiPositive
from common.models.report import Verdict
from engine.commutative.base_algebra import BoundedFunction, CompactGrid
from engine.commutative.calculus import (
    apply_factorized,
    apply_function,
    calculus_laws_check,
    class_index,
    mixed_product,
    multiplier_identity_residual,
    nth_root,
    partial_product,
    partial_product_trace,
    pointwise_product,
    root_factorization_residual,
    root_residual,
    schedule_agreement,
    spectrum,
)
from engine.commutative.functions import (
    ExponentialDecay,
    PowerFunction,
    ResolventPower,
    constant,
    identity,
)
from engine.commutative.gelfand_extension import MixedElement
from engine.commutative.nets import CauchySchedule
from engine.commutative.quasi_model import QuasiElement, SeminormFamily, seminorm
from tests.conftest import power_element


class TestSpectrum:
    """Tests for spectrum and class_index."""

    def test_spectrum_of_unbounded_element(self, grid: CompactGrid) -> None:
        """t^-1/2 has spectrum [1, 16] on the grid plus infinity."""
        sigma = spectrum(power_element(grid, -0.5))
        assert sigma.contains_infinity
        assert sigma.finite_values.min() == pytest.approx(1.0)
        assert sigma.sup == pytest.approx(16.0)
        assert sigma.to_dict()["contains_infinity"] is True

    def test_spectrum_rejects_negative(self, grid: CompactGrid) -> None:
        """Only quasi-positive elements have a spectrum here."""
        with pytest.raises(NotQuasiPositive):
            spectrum(QuasiElement(grid, -np.ones(grid.size)))

    def test_class_index(self, grid: CompactGrid) -> None:
        """Growth at infinity fixes the smallest class."""
        a = power_element(grid, -0.5)
        assert class_index(ResolventPower(1), a, 2) == 0
        assert class_index(PowerFunction(Fraction(1, 2)), a, 2) == 1
        assert class_index(PowerFunction(2), a, 2) == 2
        assert class_index(PowerFunction(3), a, 2) is None

    def test_bounded_element_is_in_every_class(self, grid: CompactGrid) -> None:
        """Without infinity in the spectrum any continuous function is in C_0."""
        assert class_index(PowerFunction(3), power_element(grid, 1.0), 0) == 0


class TestFunctionalCalculus:
    """Tests for apply_function and apply_factorized."""

    def test_unit_laws(self, grid: CompactGrid, family: SeminormFamily) -> None:
        """u0(a) = 1 and u1(a) = a, including at infinity points."""
        a = power_element(grid, -0.5)
        one = apply_function(constant(1.0), a, 1, family)
        assert one.is_bounded and np.all(one.values == 1.0)
        assert apply_function(identity(), a, 1, family).allclose(a, rtol=0.0, atol=0.0)

    def test_decaying_function_is_finite_at_infinity(self, grid: CompactGrid) -> None:
        """(1 + a)^-1 and exp(-a) take 0 at infinity points."""
        a = power_element(grid, -0.5)
        for f in (ResolventPower(1), ExponentialDecay(1.0)):
            image = apply_function(f, a)
            assert image.is_bounded
            assert image.values[0] == 0

    def test_not_in_class(self, grid: CompactGrid) -> None:
        """lam^2 is outside C_1 for unbounded a."""
        with pytest.raises(NotInClass):
            apply_function(PowerFunction(2), power_element(grid, -0.5), 1)

    def test_explicit_k_must_be_in_range(self, grid: CompactGrid) -> None:
        """k below the class index is rejected."""
        with pytest.raises(NotInClass):
            apply_function(PowerFunction(1), power_element(grid, -0.5), 2, k=0)

    def test_threshold_bounds_the_class(self, grid: CompactGrid) -> None:
        """lam / (1 + lam) reaches 16/17 on the grid, above a 0.5 threshold."""
        a = power_element(grid, -0.5)
        assert class_index(PowerFunction(1), a, 1) == 1
        assert class_index(PowerFunction(1), a, 1, threshold=0.5) is None
        with pytest.raises(NotInClass):
            apply_function(PowerFunction(1), a, 1, threshold=0.5)

    def test_factorized_form_agrees(self, grid: CompactGrid) -> None:
        """g_k(a)(1 + a)^k gives the same f(a) for every admissible k."""
        a = power_element(grid, -0.25)
        f = PowerFunction(Fraction(1, 2))
        direct = apply_function(f, a, 2)
        for k in (1, 2):
            factorized = apply_factorized(f, a, k, 2)
            assert np.array_equal(factorized.infinite, direct.infinite)
            assert np.allclose(factorized.values, direct.values, rtol=1e-12)


class TestPartialProduct:
    """Tests for the regularized partial product."""

    def test_pointwise_product_zero_times_infinity(self, grid: CompactGrid) -> None:
        """0 * inf = 0 and inf * inf = inf."""
        a = power_element(grid, -0.5)
        assert pointwise_product(a, power_element(grid, 1.0)).is_bounded
        assert pointwise_product(a, a).infinity_points == [0]

    def test_square_of_quarter_power(self, fine_grid: CompactGrid) -> None:
        """t^-1/4 . t^-1/4 = t^-1/2 with L1 seminorm close to 2."""
        family = SeminormFamily.lebesgue(fine_grid, 1.0)
        quarter = power_element(fine_grid, -0.25)
        product = partial_product(quarter, quarter, family)
        assert product.infinity_points == [0]
        assert product.allclose(power_element(fine_grid, -0.5), rtol=1e-12, atol=0.0)
        assert abs(seminorm(product, family) - 2.0) < 1e-2

    def test_non_integrable_product(self, grid: CompactGrid, family: SeminormFamily) -> None:
        """t^-1/2 . t^-1/2 = 1/t is not in L1."""
        a = power_element(grid, -0.5)
        with pytest.raises(NotMultipliable) as exc:
            partial_product(a, a, family)
        assert exc.value.witness["alpha"] == pytest.approx(1.0)

    def test_higher_exponent_rejects_product(self, grid: CompactGrid) -> None:
        """t^-1/4 squared is not in L2."""
        family = SeminormFamily.lebesgue(grid, 2.0)
        quarter = power_element(grid, -0.25)
        with pytest.raises(NotMultipliable):
            partial_product(quarter, quarter, family)

    def test_trace_records_differences(self, grid: CompactGrid, family: SeminormFamily) -> None:
        """The net converges geometrically."""
        quarter = power_element(grid, -0.25)
        trace = partial_product_trace(quarter, quarter, family)
        assert trace.steps == len(trace.differences) + 1
        assert trace.differences[-1] < 1e-8 * 2
        assert trace.to_dict()["infinity_points"] == [0]

    def test_schedule_agreement(self, grid: CompactGrid, family: SeminormFamily) -> None:
        """Base-2 and base-3 schedules extrapolate to the same limit."""
        quarter = power_element(grid, -0.25)
        assert schedule_agreement(quarter, quarter, family) < 1e-8

    def test_multiplier_identity(self, grid: CompactGrid, family: SeminormFamily) -> None:
        """(1+a)^-1 (ab) (1+b)^-1 = a_1 b_1."""
        quarter = power_element(grid, -0.25)
        assert multiplier_identity_residual(quarter, power_element(grid, 1.0), family) < 1e-12

    def test_short_schedule_is_not_cauchy(self, grid: CompactGrid, family: SeminormFamily) -> None:
        """Three steps cannot meet the Cauchy tolerance."""
        quarter = power_element(grid, -0.25)
        with pytest.raises(NotMultipliable) as exc:
            partial_product_trace(quarter, quarter, family, CauchySchedule(window=1, max_steps=3))
        assert exc.value.witness["base"] == 2.0

    def test_custom_base(self, grid: CompactGrid, family: SeminormFamily) -> None:
        """The trace records the base it ran along."""
        quarter = power_element(grid, -0.25)
        trace = partial_product_trace(quarter, quarter, family, CauchySchedule(base=4.0, alt_base=2.0))
        assert trace.base == 4.0
        assert trace.limit.allclose(partial_product(quarter, quarter, family), rtol=0.0, atol=0.0)


class TestRoots:
    """Tests for quasi n-th roots."""

    def test_square_root(self, grid: CompactGrid) -> None:
        """The square root of t^-1/2 is t^-1/4."""
        root = nth_root(power_element(grid, -0.5), 2)
        assert root.allclose(power_element(grid, -0.25))

    def test_root_order(self, grid: CompactGrid) -> None:
        """n >= 1."""
        with pytest.raises(ValueError):
            nth_root(power_element(grid, 1.0), 0)

    def test_root_reproduces_element(self, grid: CompactGrid, family: SeminormFamily) -> None:
        """b . b = a for b the square root of a."""
        a = power_element(grid, -0.5)
        assert root_residual(a, 2, family) < 1e-8
        assert root_factorization_residual(a, 2, family) < 1e-8


class TestCalculusLaws:
    """Tests for the calculus law suite."""

    def test_laws_hold(self, grid: CompactGrid, family: SeminormFamily) -> None:
        """All laws pass on a singular and a bounded sample."""
        samples = [power_element(grid, -0.25), power_element(grid, 1.0)]
        results = calculus_laws_check(samples, family)
        names = [r.check for r in results]
        assert names == [
            "unit_laws",
            "homomorphism",
            "linearity",
            "k_independence",
            "cb_isometry",
            "schedule_agreement",
            "multiplier_identity",
            "root_roundtrip",
        ]
        assert all(r.verdict == Verdict.PASS for r in results), [r.to_dict() for r in results if r.failed]


class TestMixedProduct:
    """Tests for products of mixed elements."""

    def test_mixed_product(self, grid: CompactGrid, family: SeminormFamily) -> None:
        """(a t)(a 1) = a^2 t, finite where t vanishes."""
        quarter = power_element(grid, -0.25)
        zero = BoundedFunction.constant(grid, 0.0)
        m1 = MixedElement(quarter, BoundedFunction.coordinate(grid), zero)
        product = mixed_product(m1, MixedElement.of(quarter), family)
        assert product.is_bounded
        assert np.allclose(product.values[1:], np.sqrt(grid.points[1:]), rtol=1e-10)

    def test_y_part_rejected(self, grid: CompactGrid, family: SeminormFamily) -> None:
        """Only elements of the form ax multiply."""
        one = BoundedFunction.constant(grid, 1.0)
        m = MixedElement(power_element(grid, -0.25), one, one)
        with pytest.raises(InvariantViolation):
            mixed_product(m, m, family)

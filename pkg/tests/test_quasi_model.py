"""Tests for quasi elements, seminorms and the quasi-positive wedge."""

import numpy as np
import pytest

from common.errors import InvariantViolation, NotQuasiPositive
from engine.commutative.base_algebra import BoundedFunction, CompactGrid, is_positive
from engine.commutative.nets import cauchy_converged, eps_schedule, limit_converged
from engine.commutative.quasi_model import (
    QuasiElement,
    QuasiModel,
    SeminormFamily,
    SeminormSpec,
    embed,
    invert_one_plus,
    is_dominated,
    is_quasi_positive,
    local_growth,
    module_mult,
    positivity_witness,
    regularization_gap,
    regularize,
    seminorm,
    wedge_ops,
)
from tests.conftest import power_element


class TestQuasiElement:
    """Tests for QuasiElement."""

    def test_window_rule(self, grid: CompactGrid) -> None:
        """Two adjacent infinity points are allowed, three are not."""
        mask = np.zeros(grid.size, dtype=bool)
        mask[10:12] = True
        QuasiElement(grid, np.ones(grid.size), mask)
        mask[12] = True
        with pytest.raises(InvariantViolation) as exc:
            QuasiElement(grid, np.ones(grid.size), mask)
        assert exc.value.witness["window_start"] == 10

    def test_values_at_infinity_are_zeroed(self, grid: CompactGrid) -> None:
        """Stored payload at an infinity point is 0."""
        mask = np.zeros(grid.size, dtype=bool)
        mask[5] = True
        a = QuasiElement(grid, np.full(grid.size, 3.0), mask)
        assert a.values[5] == 0
        assert a.value_at(5).infinite
        assert a.value_at(6).value == 3.0

    def test_sum_unions_infinity_sets(self, grid: CompactGrid) -> None:
        """a + b is infinite wherever either is."""
        a = power_element(grid, -0.5)
        b = embed(BoundedFunction.constant(grid, 1.0))
        total = a + b
        assert total.infinity_points == [0]
        assert total.values[1].real == pytest.approx(a.values[1].real + 1)

    def test_subtracting_infinity_is_rejected(self, grid: CompactGrid) -> None:
        """inf - inf has no value."""
        a = power_element(grid, -0.5)
        with pytest.raises(InvariantViolation):
            a - a

    def test_scale_by_zero(self, grid: CompactGrid) -> None:
        """0 * inf = 0."""
        assert power_element(grid, -0.5).scale(0).is_bounded

    def test_module_product_kills_infinity_at_zeros(self, grid: CompactGrid) -> None:
        """x(t0) = 0 turns an infinity point into Finite(0)."""
        a = power_element(grid, -0.5)
        x = BoundedFunction.coordinate(grid)
        product = module_mult(x, a)
        assert product.is_bounded
        assert product.allclose(a * x)
        assert np.allclose(product.values[1:], np.sqrt(grid.points[1:]))

    def test_module_product_checks_seminorms(self, grid: CompactGrid, family: SeminormFamily) -> None:
        """x * a with a non-integrable pole is rejected once a family is given."""
        a = power_element(grid, -1.0)
        x = BoundedFunction.constant(grid, 2.0)
        assert module_mult(x, a).infinity_points == [0]
        with pytest.raises(InvariantViolation, match="diverges"):
            module_mult(x, a, family=family)
        [cell] = module_mult(x, power_element(grid, -0.5), family=family).local_cells
        assert cell.coefficient == pytest.approx(2.0)

    def test_to_bounded(self, grid: CompactGrid) -> None:
        """Only elements without infinity points land in A0."""
        assert power_element(grid, 1.0).to_bounded().grid is grid
        with pytest.raises(InvariantViolation):
            power_element(grid, -0.5).to_bounded()

    def test_to_json(self, grid: CompactGrid) -> None:
        """Infinity points encode as {"inf": true}."""
        encoded = power_element(grid, -0.5).to_json()["values"]
        assert encoded[0] == {"inf": True}
        assert encoded[-1] == 1.0


class TestSeminorms:
    """Tests for the seminorm family."""

    def test_rejects_small_exponent(self, grid: CompactGrid) -> None:
        """Seminorms need p >= 1."""
        with pytest.raises(InvariantViolation):
            SeminormSpec(0.5, BoundedFunction.constant(grid, 1.0))

    def test_rejects_nonpositive_weight(self, grid: CompactGrid) -> None:
        """Weights are strictly positive."""
        with pytest.raises(InvariantViolation):
            SeminormSpec(1.0, BoundedFunction.coordinate(grid))

    def test_lp_of_singular_element(self, grid: CompactGrid, family: SeminormFamily) -> None:
        """The L1 seminorm of t^-1/2 is 2 up to the trapezoid error away from the pole."""
        assert abs(seminorm(power_element(grid, -0.5), family) - 2.0) < 1e-2

    def test_lp_of_singular_element_on_fine_grid(self, fine_grid: CompactGrid) -> None:
        """||t^-1/2||_1 = 2 and ||t^-1/4||_2 = sqrt(2) on 4096 points."""
        assert abs(seminorm(power_element(fine_grid, -0.5), SeminormFamily.lebesgue(fine_grid)) - 2.0) < 1e-2
        l2 = SeminormFamily.lebesgue(fine_grid, 2.0)
        assert abs(seminorm(power_element(fine_grid, -0.25), l2) - np.sqrt(2.0)) < 1e-2

    def test_bounded_domination(self, grid: CompactGrid, family: SeminormFamily) -> None:
        """p(x) <= C * sup norm for x in A0."""
        x = BoundedFunction(grid, np.cos(7 * grid.points))
        assert seminorm(x, family) <= family.dominating_constant(0) * 1.0 + 1e-12

    def test_infinity_mass_limit(self, grid: CompactGrid, family: SeminormFamily) -> None:
        """Infinity points beyond four grid cells of mass make the seminorm diverge."""
        mask = np.zeros(grid.size, dtype=bool)
        mask[[0, 2, 4, 6]] = True
        few = QuasiElement(grid, np.ones(grid.size), mask)
        assert np.isfinite(seminorm(few, family))
        mask[8] = True
        many = QuasiElement(grid, np.ones(grid.size), mask)
        assert seminorm(many, family) == float("inf")

    def test_singular_cells(self, grid: CompactGrid) -> None:
        """A pure power law at the left end gives one cell with the exact exponent."""
        [cell] = power_element(grid, -0.5).local_cells
        assert (cell.pole, cell.neighbour) == (0, 1)
        assert cell.alpha == pytest.approx(0.5)
        assert cell.coefficient == pytest.approx(1.0)
        assert cell.width == pytest.approx(1.0 / 256)
        assert cell.integral(1.0) == pytest.approx(2.0 / 16)
        assert cell.integral(2.0) == float("inf")

    def test_non_integrable_pole_diverges(self, grid: CompactGrid, family: SeminormFamily) -> None:
        """1/t has no finite L1 seminorm."""
        assert seminorm(power_element(grid, -1.0), family) == float("inf")

    def test_cells_ignore_isolated_characters(self) -> None:
        """A discrete grid has no sub-cell profile to integrate."""
        grid = CompactGrid.discrete(6)
        mask = np.zeros(6, dtype=bool)
        mask[0] = True
        a = QuasiElement(grid, np.array([0.0, 8.0, 4.0, 2.0, 1.0, 1.0]), mask)
        assert a.local_cells == ()
        assert seminorm(a, SeminormFamily.lebesgue(grid)) == pytest.approx(16.0)

    def test_sums_drop_the_profile(self, grid: CompactGrid) -> None:
        """a - x keeps the poles of a but not its cells; scaling keeps both."""
        a = power_element(grid, -0.5)
        assert (a - BoundedFunction.constant(grid, 1.0)).local_cells == ()
        [cell] = a.scale(3.0).local_cells
        assert cell.coefficient == pytest.approx(3.0)

    def test_index_out_of_range(self, grid: CompactGrid, family: SeminormFamily) -> None:
        """Only existing seminorm indices are accepted."""
        with pytest.raises(IndexError):
            seminorm(power_element(grid, 1.0), family, 1)


class TestQuasiPositivity:
    """Tests for quasi-positivity, regularization and the wedge."""

    def test_quasi_positive(self, grid: CompactGrid) -> None:
        """Infinity counts as +inf; negative finite values do not pass."""
        assert is_quasi_positive(power_element(grid, -0.5))
        assert not is_quasi_positive(QuasiElement(grid, np.cos(4 * grid.points)))
        assert not is_quasi_positive(QuasiElement(grid, np.full(grid.size, 1j)))

    def test_invert_one_plus(self, grid: CompactGrid, model: QuasiModel) -> None:
        """(1 + a)^-1 lies in the positive unit ball with 0 at infinity points."""
        inverse = invert_one_plus(power_element(grid, -0.5))
        assert inverse.values[0] == 0
        assert model.in_unit_positive(inverse)

    def test_regularize(self, grid: CompactGrid) -> None:
        """a_eps is bounded, positive and equals 1/eps at infinity points."""
        a = power_element(grid, -0.5)
        reg = regularize(a, 1e-3)
        assert reg.real[0] == pytest.approx(1e3)
        assert is_positive(reg)
        assert np.all(reg.real[1:] <= a.values.real[1:])
        with pytest.raises(ValueError):
            regularize(a, 0.0)
        with pytest.raises(NotQuasiPositive):
            regularize(QuasiElement(grid, -np.ones(grid.size)), 1.0)

    def test_regularization_converges_monotonically(self, grid: CompactGrid, family: SeminormFamily) -> None:
        """||a - a_eps|| shrinks with eps."""
        a = power_element(grid, -0.5)
        gaps = [seminorm(a - regularize(a, eps), family) for eps in eps_schedule(steps=12)]
        assert all(later < earlier for earlier, later in zip(gaps, gaps[1:], strict=False))
        assert gaps[-1] < 1e-2

    def test_regularization_gap_matches_closed_form(self, fine_grid: CompactGrid) -> None:
        """||t^-1/2 - (t^-1/2)_eps||_1 = 2 eps log((1 + eps) / eps) down to eps = 1e-6."""
        a = power_element(fine_grid, -0.5)
        family = SeminormFamily.lebesgue(fine_grid)
        for eps in 10.0 ** -np.arange(1, 7):
            exact = 2.0 * eps * np.log((1.0 + eps) / eps)
            assert regularization_gap(a, eps, family) == pytest.approx(exact, rel=0.05), eps

    def test_regularization_gap_rejects_bad_eps(self, grid: CompactGrid, family: SeminormFamily) -> None:
        """eps must be positive."""
        with pytest.raises(ValueError):
            regularization_gap(power_element(grid, -0.5), 0.0, family)

    def test_wedge_ops(self, grid: CompactGrid) -> None:
        """The wedge is closed under sums and nonnegative scaling."""
        a = power_element(grid, -0.5)
        b = power_element(grid, 1.0)
        combined = wedge_ops(a, b, 2.0)
        assert is_quasi_positive(combined)
        assert combined.infinity_points == [0]
        with pytest.raises(ValueError):
            wedge_ops(a, b, -1.0)
        with pytest.raises(NotQuasiPositive):
            wedge_ops(a, QuasiElement(grid, -np.ones(grid.size)))

    def test_is_dominated(self, grid: CompactGrid) -> None:
        """t <= 1 but t^-1/2 is not dominated by anything bounded."""
        one = BoundedFunction.constant(grid, 1.0)
        assert is_dominated(power_element(grid, 1.0), one)
        assert not is_dominated(power_element(grid, -0.5), one)
        assert not is_dominated(embed(one) + embed(one), one)

    def test_positivity_witness(self, grid: CompactGrid, family: SeminormFamily) -> None:
        """Truncations of a quasi-positive element converge from inside (A0)+."""
        witness = positivity_witness(power_element(grid, -0.5), family)
        assert witness.holds
        assert witness.distances[-1] < 1e-10

    def test_positivity_witness_fails_for_negative(self, grid: CompactGrid, family: SeminormFamily) -> None:
        """A negative element has non-positive truncations."""
        witness = positivity_witness(QuasiElement(grid, np.cos(4 * grid.points)), family)
        assert not witness.holds

    def test_local_growth(self, grid: CompactGrid) -> None:
        """t^-alpha reports exponent alpha at its pole."""
        assert local_growth(power_element(grid, -0.5))[0] == pytest.approx(0.5)
        assert local_growth(power_element(grid, -0.25))[0] == pytest.approx(0.25)


class TestNets:
    """Tests for schedules and convergence criteria."""

    def test_schedule(self) -> None:
        """eps_k = base^-k."""
        assert np.allclose(eps_schedule(2.0, 3), [0.5, 0.25, 0.125])
        with pytest.raises(ValueError):
            eps_schedule(1.0)

    def test_limit_converged(self) -> None:
        """A small last distance or steady geometric decay both count."""
        assert limit_converged([1.0, 1e-9])
        assert limit_converged([0.5**k for k in range(8)])
        assert not limit_converged([1.0, 1.0, 1.0, 1.0, 1.0, 1.0])
        assert not limit_converged([])

    def test_cauchy_needs_window(self) -> None:
        """Cauchy convergence needs window + 1 entries below tol."""
        assert not cauchy_converged([1e-9, 1e-10])
        assert cauchy_converged([10.0**-k for k in range(9, 15)])

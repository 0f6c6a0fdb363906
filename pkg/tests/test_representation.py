"""Tests for invariant forms and GNS representations."""

import numpy as np
import pytest

from common.errors import (
    InvariantViolation,
    NotContinuous,
    NotInvariant,
    NotPositive,
    UnboundedOnSupport,
)
from common.models.report import Verdict
from common.models.schema import DiagonalFormSpec, KernelFormSpec
from engine.commutative.base_algebra import BoundedFunction, CompactGrid
from engine.commutative.nets import CauchySchedule
from engine.commutative.quasi_model import QuasiElement, QuasiModel, SeminormFamily, SeminormSpec
from engine.commutative.representation import (
    ContinuityBound,
    SesquilinearForm,
    bounded_continuity_check,
    extend_rep,
    gns,
    gns_identity_check,
    holder_constant,
    make_form,
    sufficiency_and_faithfulness,
    vector_form,
)
from engine.commutative.sampling import random_bounded

N = 9


@pytest.fixture
def small_grid() -> CompactGrid:
    return CompactGrid.uniform(0.0, 1.0, N)


@pytest.fixture
def l2_model(small_grid: CompactGrid) -> QuasiModel:
    return QuasiModel(grid=small_grid, family=SeminormFamily.lebesgue(small_grid, 2.0))


def _point(grid: CompactGrid, index: int, infinite: bool = False) -> QuasiElement:
    values = np.zeros(grid.size)
    mask = np.zeros(grid.size, dtype=bool)
    if infinite:
        mask[index] = True
    else:
        values[index] = 1.0
    return QuasiElement(grid, values, mask)


def _point_form(model: QuasiModel, rng: np.random.Generator, index: int) -> SesquilinearForm:
    weights = np.zeros(N)
    weights[index] = 1.0
    return make_form(weights, model, rng, name=f"point{index}")


class TestMakeForm:
    """Tests for form validation."""

    def test_diagonal_form_has_exact_bound(self, l2_model: QuasiModel, rng: np.random.Generator) -> None:
        """For p = 2 the continuity constant is max w / quadrature weight."""
        form = make_form(DiagonalFormSpec(kind="diagonal", weights=[1.0] * N), l2_model, rng)
        assert form.continuity.sampled is not None
        assert 0.0 < form.continuity.sampled <= form.continuity.constant
        assert form.continuity.lambda_idx == 0
        assert form.continuity.constant == pytest.approx(16.0)

    def test_kernel_form(self, l2_model: QuasiModel, rng: np.random.Generator) -> None:
        """A diagonal kernel reduces to its weights."""
        kernel = np.diag(np.arange(1.0, N + 1.0))
        form = make_form(KernelFormSpec(kind="kernel", matrix=kernel.tolist()), l2_model, rng)
        assert np.array_equal(form.weights, np.arange(1.0, N + 1.0))
        assert np.array_equal(form.kernel, kernel)

    def test_negative_weight(self, l2_model: QuasiModel, rng: np.random.Generator) -> None:
        """Negative weights are not positive forms."""
        weights = np.ones(N)
        weights[3] = -0.5
        with pytest.raises(NotPositive) as exc:
            make_form(weights, l2_model, rng)
        assert exc.value.witness["index"] == 3

    def test_kernel_not_psd(self, l2_model: QuasiModel, rng: np.random.Generator) -> None:
        """A kernel with a negative eigenvalue is rejected before invariance."""
        kernel = np.eye(N)
        kernel[0, 1] = kernel[1, 0] = 2.0
        with pytest.raises(NotPositive):
            make_form(KernelFormSpec(kind="kernel", matrix=kernel.tolist()), l2_model, rng)

    def test_kernel_not_invariant(self, l2_model: QuasiModel, rng: np.random.Generator) -> None:
        """Off-diagonal entries break phi(ax, y) = phi(x, a* y)."""
        kernel = np.eye(N)
        kernel[0, 1] = kernel[1, 0] = 0.5
        with pytest.raises(NotInvariant) as exc:
            make_form(KernelFormSpec(kind="kernel", matrix=kernel.tolist()), l2_model, rng)
        assert exc.value.witness == {"a": 1, "x": 1, "y": 0, "residual": 0.5}

    def test_size_mismatch(self, l2_model: QuasiModel, rng: np.random.Generator) -> None:
        """One weight per grid point."""
        with pytest.raises(InvariantViolation):
            make_form(np.ones(N + 1), l2_model, rng)

    def test_not_continuous(self, small_grid: CompactGrid, rng: np.random.Generator) -> None:
        """The L1 constant 256 is above a small cap."""
        model = QuasiModel(grid=small_grid, family=SeminormFamily.lebesgue(small_grid, 1.0))
        with pytest.raises(NotContinuous) as exc:
            make_form(np.ones(N), model, rng, samples=10, cap=100.0)
        assert exc.value.witness["constant"] == pytest.approx(256.0)

    def test_l1_bound(self, small_grid: CompactGrid, rng: np.random.Generator) -> None:
        """For p = 1 the constant is max w / m^2, attained by the endpoint indicator."""
        family = SeminormFamily.lebesgue(small_grid, 1.0)
        form = make_form(np.ones(N), QuasiModel(grid=small_grid, family=family), rng, samples=10)
        assert form.continuity.constant == pytest.approx(256.0)
        assert form.continuity.sampled is not None and form.continuity.sampled <= 256.0
        corner = np.zeros(N)
        corner[0] = 1.0
        assert 1.0 / family.evaluate(0, corner) ** 2 == pytest.approx(256.0)

    def test_holder_constant_above_two(self, small_grid: CompactGrid) -> None:
        """For p = 4 the constant is the l^2 norm of w / m^(1/2)."""
        mass = small_grid.weights
        assert holder_constant(np.ones(N), mass, 4.0) == pytest.approx(np.sqrt(7 * 8.0 + 2 * 16.0))
        assert holder_constant(np.zeros(N), mass, 4.0) == 0.0

    def test_smallest_constant_wins(self, small_grid: CompactGrid, rng: np.random.Generator) -> None:
        """With L1 and L2 seminorms the L2 constant 16 is chosen."""
        unit = BoundedFunction.constant(small_grid, 1.0)
        family = SeminormFamily(small_grid, (SeminormSpec(1.0, unit), SeminormSpec(2.0, unit)))
        form = make_form(np.ones(N), QuasiModel(grid=small_grid, family=family), rng, samples=10)
        assert form.continuity.lambda_idx == 1
        assert form.continuity.constant == pytest.approx(16.0)


class TestGNS:
    """Tests for the GNS construction."""

    def test_quotient_by_null_space(self, l2_model: QuasiModel, rng: np.random.Generator) -> None:
        """H_phi has one dimension per point of positive weight."""
        weights = np.zeros(N)
        weights[[1, 4, 7]] = [1.0, 2.0, 3.0]
        g = gns(make_form(weights, l2_model, rng))
        assert g.dim == 3
        assert g.to_dict()["dim"] == 3

    def test_identities(self, small_grid: CompactGrid, l2_model: QuasiModel, rng: np.random.Generator) -> None:
        """pi is a *-homomorphism with cyclic vector lambda(1)."""
        g = gns(make_form(np.linspace(0.0, 2.0, N), l2_model, rng, name="ramp"))
        triples = [tuple(random_bounded(small_grid, rng) for _ in range(3)) for _ in range(10)]
        results = gns_identity_check(g, triples)
        assert [r.check for r in results] == [
            "gns_multiplicative[ramp]",
            "gns_star[ramp]",
            "gns_cyclic[ramp]",
            "gns_form[ramp]",
        ]
        assert all(r.verdict == Verdict.PASS for r in results)

    def test_extend_rep(self, small_grid: CompactGrid, l2_model: QuasiModel, rng: np.random.Generator) -> None:
        """pi(a) for a finite on the support is multiplication by a."""
        weights = np.ones(N)
        weights[4] = 0.0
        g = gns(make_form(weights, l2_model, rng))
        values = np.linspace(0.0, 40.0, N)
        a = QuasiElement(small_grid, values, np.arange(N) == 4)
        image = extend_rep(g, a)
        assert np.allclose(image, np.delete(values, 4))

    def test_truncation_net_reaches_large_values(
        self, small_grid: CompactGrid, l2_model: QuasiModel, rng: np.random.Generator
    ) -> None:
        """Truncations at 2^k pass 1e12 after about forty steps and then stop moving."""
        g = gns(make_form(np.ones(N), l2_model, rng))
        values = np.geomspace(1e-3, 1e12, N)
        image = extend_rep(g, QuasiElement(small_grid, values, np.zeros(N, dtype=bool)))
        assert np.array_equal(image, values)

    def test_short_window_still_needs_a_quiet_tail(
        self, small_grid: CompactGrid, l2_model: QuasiModel, rng: np.random.Generator
    ) -> None:
        """An infinity point keeps the net moving whatever the window."""
        g = gns(make_form(np.ones(N), l2_model, rng))
        with pytest.raises(UnboundedOnSupport):
            extend_rep(g, _point(small_grid, 2, infinite=True), CauchySchedule(window=1, max_steps=2))

    def test_extend_rep_unbounded(self, small_grid: CompactGrid, l2_model: QuasiModel, rng: np.random.Generator) -> None:
        """Infinity on a point of positive weight has no image."""
        g = gns(make_form(np.ones(N), l2_model, rng))
        with pytest.raises(UnboundedOnSupport) as exc:
            extend_rep(g, _point(small_grid, 4, infinite=True))
        assert exc.value.witness["index"] == 4


class TestSufficiency:
    """Tests for sufficiency and faithfulness."""

    def test_full_support_is_sufficient(self, small_grid: CompactGrid, l2_model: QuasiModel, rng: np.random.Generator) -> None:
        """A form of full support separates every sample."""
        forms = [make_form(np.ones(N), l2_model, rng)]
        samples = [_point(small_grid, 0), _point(small_grid, 8), _point(small_grid, 4, infinite=True)]
        results = {r.check: r.verdict for r in sufficiency_and_faithfulness(forms, samples, l2_model.family)}
        assert results == {
            "sufficient": Verdict.PASS,
            "faithful_direct_sum": Verdict.PASS,
            "faithful_iff_sufficient": Verdict.PASS,
            "vector_form_sufficient": Verdict.PASS,
        }

    def test_point_mass_is_not_sufficient(self, small_grid: CompactGrid, l2_model: QuasiModel, rng: np.random.Generator) -> None:
        """A point mass misses elements vanishing at its point; both verdicts agree."""
        forms = [_point_form(l2_model, rng, 4)]
        samples = [_point(small_grid, 0), _point(small_grid, 8)]
        results = {r.check: r for r in sufficiency_and_faithfulness(forms, samples, l2_model.family)}
        assert results["sufficient"].verdict == Verdict.FAIL
        assert results["faithful_direct_sum"].verdict == Verdict.FAIL
        assert results["faithful_iff_sufficient"].verdict == Verdict.PASS
        assert results["vector_form_sufficient"].verdict == Verdict.FAIL

    def test_vector_form_adds_weights(self, l2_model: QuasiModel, rng: np.random.Generator) -> None:
        """The direct-sum cyclic vector sees every form."""
        forms = [_point_form(l2_model, rng, 0), _point_form(l2_model, rng, 8)]
        combined = vector_form(forms, l2_model.family)
        assert combined.weights[0] == 1.0 and combined.weights[8] == 1.0
        assert combined.continuity.constant == pytest.approx(16.0)


class TestBoundedContinuity:
    """Tests for the bounded-family continuity suite."""

    def test_exact_form(self, l2_model: QuasiModel, rng: np.random.Generator) -> None:
        """The ball hypothesis and the continuity of pi hold for an exact form."""
        forms = [make_form(np.ones(N), l2_model, rng)]
        results = {r.check: r for r in bounded_continuity_check(l2_model, forms, rng, samples=5)}
        for name in ("ball_hypothesis", "ball_constant_linear", "bounded_family_admissible", "ball_continuity"):
            assert results[name].verdict == Verdict.PASS, results[name].witness

    def test_l1_form(self, small_grid: CompactGrid, rng: np.random.Generator) -> None:
        """Against L1 the exact constant 256 decides continuity."""
        model = QuasiModel(grid=small_grid, family=SeminormFamily.lebesgue(small_grid, 1.0))
        forms = [make_form(np.ones(N), model, rng, samples=10)]
        results = {r.check: r for r in bounded_continuity_check(model, forms, rng, samples=5)}
        assert results["ball_continuity"].verdict == Verdict.PASS, results["ball_continuity"].witness

    def test_understated_constant_fails(self, small_grid: CompactGrid, rng: np.random.Generator) -> None:
        """A constant far below 256 is caught on the samples."""
        model = QuasiModel(grid=small_grid, family=SeminormFamily.lebesgue(small_grid, 1.0))
        forms = [SesquilinearForm(np.ones(N), ContinuityBound(0, 1e-3), "understated")]
        results = {r.check: r for r in bounded_continuity_check(model, forms, rng, samples=5)}
        assert results["ball_continuity"].verdict == Verdict.FAIL
        assert results["ball_continuity"].witness["form"] == 0

    def test_form_evaluation(self, small_grid: CompactGrid) -> None:
        """Forms evaluate as sum w x conj(y)."""
        form = SesquilinearForm(np.ones(N), None, "plain")  # type: ignore[arg-type]
        x = BoundedFunction.constant(small_grid, 2.0)
        y = BoundedFunction.constant(small_grid, 1j)
        assert form(x, y) == pytest.approx(-2j * N)

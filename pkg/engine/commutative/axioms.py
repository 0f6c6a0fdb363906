"""Empirical verification of the compatibility conditions of a quasi model.

Every check samples elements from a seeded generator and records a
``CheckResult``; a failure never raises, it carries a witness instead.

Check names:
    separate_continuity       module multiplication and involution are continuous
    seminorm_domination       every seminorm is dominated by the sup norm
    commuting_product_bound   p(xy) <= |x|_0 p(y) for commuting x, y
    unit_ball_closedness      tau-limits of U(A0)+ sequences inside A0 stay in U(A0)+
    wedge_intersection        quasi-positive elements of A0 are exactly (A0)+
    cq_star_norm              operator norm of multiplication equals the C*-norm
    cone_pointedness          q+ and -q+ meet only in 0
    dominated_positivity      a <= b with b in A0 puts a in (A0)+
"""

import logging
from collections.abc import Callable
from dataclasses import dataclass, field
from typing import Any

import numpy as np

from common.constants import (
    DEFAULT_CAUCHY_DECAY,
    DEFAULT_CAUCHY_WINDOW,
    DEFAULT_POSITIVITY_FLOOR,
    DEFAULT_SAMPLES,
    DEFAULT_SEMINORM_TOL,
    AlgebraKind,
)
from common.models.report import CheckResult, Verdict, check
from engine.commutative.base_algebra import BoundedFunction, CompactGrid, is_positive, sup_norm
from engine.commutative.nets import eps_schedule, limit_converged
from engine.commutative.quasi_model import (
    QuasiElement,
    QuasiModel,
    SeminormFamily,
    embed,
    invert_one_plus,
    is_dominated,
    is_quasi_positive,
    module_mult,
    positivity_witness,
    regularization_gap,
    regularize,
    seminorm,
)
from engine.commutative.sampling import (
    random_bounded,
    random_positive,
    random_quasi_positive,
    random_unit_positive,
)

logger = logging.getLogger(__name__)

SUITE = "axioms"
# relative slack for inequalities that hold exactly in real arithmetic
SLACK = 1e-12


@dataclass
class NormComparison:
    name: str
    op_norm: float
    c_star_norm: float

    @property
    def equal(self) -> bool:
        return abs(self.op_norm - self.c_star_norm) <= 1e-10 * max(self.c_star_norm, 1e-300)

    def to_dict(self) -> dict[str, Any]:
        return {
            "name": self.name,
            "op_norm": self.op_norm,
            "c_star_norm": self.c_star_norm,
            "equal": self.equal,
        }


@dataclass
class AxiomReport:
    """Verdicts of the axiom suite plus the CQ* norm comparison."""

    checks: list[CheckResult] = field(default_factory=list)
    norms: list[NormComparison] = field(default_factory=list)

    @property
    def passed(self) -> bool:
        return not any(c.failed for c in self.checks)

    def verdict(self, name: str) -> Verdict:
        for c in self.checks:
            if c.check == name:
                return c.verdict
        raise KeyError(name)

    def to_dict(self) -> dict[str, Any]:
        return {
            "passed": self.passed,
            "checks": [c.to_dict() for c in self.checks],
            "norms": [n.to_dict() for n in self.norms],
        }


def _excess(lhs: float, rhs: float) -> float:
    """Relative amount by which lhs exceeds rhs."""
    return max(0.0, lhs - rhs) / max(abs(rhs), 1e-300)


def _separate_continuity(
    family: SeminormFamily, xs: list[BoundedFunction], qs: list[QuasiElement]
) -> CheckResult:
    worst, witness = 0.0, None
    for i, a in enumerate(qs):
        x = xs[i % len(xs)]
        norm_x = sup_norm(x)
        for lam in range(len(family)):
            pa = seminorm(a, family, lam)
            for side in ("left", "right"):
                excess = _excess(seminorm(module_mult(x, a, side), family, lam), norm_x * pa)
                worst = max(worst, excess)
                if excess > SLACK and witness is None:
                    witness = {"sample": i, "lambda": lam, "side": side}
            star = abs(seminorm(a.adjoint(), family, lam) - pa) / max(pa, 1e-300)
            worst = max(worst, star)
            if star > SLACK and witness is None:
                witness = {"sample": i, "lambda": lam, "involution": star}
    return check(SUITE, "separate_continuity", witness is None, worst, witness)


def _seminorm_domination(family: SeminormFamily, xs: list[BoundedFunction]) -> CheckResult:
    worst, witness = 0.0, None
    for i, x in enumerate(xs):
        for lam in range(len(family)):
            bound = family.dominating_constant(lam) * sup_norm(x)
            excess = _excess(seminorm(x, family, lam), bound)
            worst = max(worst, excess)
            if excess > SLACK and witness is None:
                witness = {"sample": i, "lambda": lam}
    return check(SUITE, "seminorm_domination", witness is None, worst, witness)


def _commuting_product_bound(family: SeminormFamily, xs: list[BoundedFunction]) -> CheckResult:
    worst, witness = 0.0, None
    for i, (x, y) in enumerate(zip(xs, xs[1:] + xs[:1], strict=True)):
        if not np.array_equal((x * y).values, (y * x).values):
            continue
        for lam in range(len(family)):
            excess = _excess(seminorm(x * y, family, lam), sup_norm(x) * seminorm(y, family, lam))
            worst = max(worst, excess)
            if excess > SLACK and witness is None:
                witness = {"sample": i, "lambda": lam}
    return check(SUITE, "commuting_product_bound", witness is None, worst, witness)


def ramp(grid_points: np.ndarray, centre: float, slope: float) -> np.ndarray:
    return np.clip(0.5 + slope * (grid_points - centre), 0.0, 1.0)


def _unit_ball_closedness(model: QuasiModel, tol: float) -> CheckResult:
    """
    Ramps of slope 2^k, centred between two grid points, converge to a step.

    Every ramp is kept inside U(A0)+; the step is in A0 and must be in
    U(A0)+ too. A Lipschitz subalgebra cannot contain the step.
    """
    grid = model.grid
    i0 = grid.size // 2 - 1
    centre = 0.5 * (grid.points[i0] + grid.points[i0 + 1])
    step = BoundedFunction(grid, (grid.points > centre).astype(np.float64))
    if model.algebra_kind == AlgebraKind.LIPSCHITZ:
        assert model.lipschitz_bound is not None
        top = model.lipschitz_bound
    else:
        top = 4.0 / float(np.min(np.diff(grid.points)))
    slopes = [2.0**k for k in range(1, 64) if 2.0**k <= top]
    members = [BoundedFunction(grid, ramp(grid.points, centre, s)) for s in slopes]
    if not all(model.in_unit_positive(m) for m in members):
        return check(SUITE, "unit_ball_closedness", False, 0.0, {"reason": "ramp left U(A0)+"})
    distances = [
        model.family.max_seminorm((m - step).values) for m in members
    ]
    if not limit_converged(distances, tol, DEFAULT_CAUCHY_DECAY, DEFAULT_CAUCHY_WINDOW):
        return CheckResult(
            SUITE, "unit_ball_closedness", Verdict.INDETERMINATE, distances[-1] if distances else 0.0,
            None, "ramp sequence too short to decide convergence",
        )
    ok = model.in_unit_positive(step)
    jump = float(np.max(np.abs(np.diff(step.real)) / np.diff(grid.points)))
    witness = {
        "limit": "step",
        "centre": float(centre),
        "slopes": slopes,
        "distances": distances,
        "grid_lipschitz_constant": jump,
        "bound": model.lipschitz_bound,
    }
    return check(SUITE, "unit_ball_closedness", ok, distances[-1], witness)


def _wedge_intersection(xs: list[BoundedFunction], positives: list[BoundedFunction]) -> CheckResult:
    mismatches, witness = 0, None
    for i, x in enumerate(xs + positives):
        if is_quasi_positive(embed(x)) != is_positive(x):
            mismatches += 1
            witness = witness or {"sample": i}
    return check(SUITE, "wedge_intersection", mismatches == 0, float(mismatches), witness)


def operator_norm(x: BoundedFunction, family: SeminormFamily) -> tuple[float, float]:
    """
    Norms of left and right multiplication by x on the weighted L^p grid space.

    Maximizes p(x e_i) / p(e_i) over the indicators e_i of single grid points.
    """
    left = right = 0.0
    for spec in family.specs:
        mass = spec.weight.real * family.grid.weights
        unit = mass ** (1.0 / spec.p)
        # x e_i and e_i x are the same indicator multiple
        image = (mass * np.abs(x.values) ** spec.p) ** (1.0 / spec.p)
        left = max(left, float(np.max(image / unit)))
        right = max(right, float(np.max(image / unit)))
    return left, right


def _cq_star(
    family: SeminormFamily, named: dict[str, BoundedFunction], xs: list[BoundedFunction]
) -> tuple[CheckResult, list[NormComparison]]:
    comparisons: list[NormComparison] = []
    items = list(named.items()) + [(f"sample_{i}", x) for i, x in enumerate(xs)]
    for name, x in items:
        left, right = operator_norm(x, family)
        comparisons.append(NormComparison(name, max(left, right), sup_norm(x)))
    bad = [c for c in comparisons if not c.equal]
    worst = max((abs(c.op_norm - c.c_star_norm) for c in comparisons), default=0.0)
    witness = bad[0].to_dict() if bad else None
    return check(SUITE, "cq_star_norm", not bad, worst, witness), comparisons


def _resolvent_net(family: SeminormFamily, qs: list[QuasiElement], tol: float) -> list[CheckResult]:
    in_ball_witness = None
    net_witness = None
    identity_gap = 0.0
    identity_witness = None
    schedule = eps_schedule(steps=30)
    for i, a in enumerate(qs):
        r = invert_one_plus(a)
        if not (is_positive(r) and sup_norm(r) <= 1.0 + SLACK):
            in_ball_witness = in_ball_witness or {"sample": i, "sup": sup_norm(r)}
        distances = [
            family.max_seminorm(1.0 / (1.0 + regularize(a, eps).real) - r.real)
            for eps in schedule
        ]
        if not limit_converged(distances, tol):
            net_witness = net_witness or {"sample": i, "distances": distances[-6:]}
        finite = a.finite
        lhs = 1.0 - r.real[finite]
        rhs = a.values.real[finite] * r.real[finite]
        gap = float(np.max(np.abs(lhs - rhs))) if finite.any() else 0.0
        identity_gap = max(identity_gap, gap)
        if gap > 1e-12:
            identity_witness = identity_witness or {"sample": i, "gap": gap}
    return [
        check(SUITE, "resolvent_in_unit_ball", in_ball_witness is None, 0.0, in_ball_witness),
        check(SUITE, "resolvent_net_limit", net_witness is None, 0.0, net_witness),
        check(SUITE, "resolvent_identity", identity_witness is None, identity_gap, identity_witness),
    ]


def _regularization_net(family: SeminormFamily, qs: list[QuasiElement]) -> CheckResult:
    witness = None
    schedule = eps_schedule(steps=20)
    for i, a in enumerate(qs):
        previous = float("inf")
        regularized = [regularize(a, eps) for eps in schedule]
        for k, (eps, a_eps) in enumerate(zip(schedule, regularized, strict=True)):
            if not is_quasi_positive(a - a_eps):
                witness = witness or {"sample": i, "eps": float(eps), "reason": "a - a_eps"}
            distance = regularization_gap(a, float(eps), family)
            if distance > previous * (1.0 + SLACK):
                witness = witness or {"sample": i, "step": k, "reason": "not monotone"}
            previous = distance
        first, last = regularized[0], regularized[-1]
        if not np.array_equal((first * last).values, (last * first).values):
            witness = witness or {"sample": i, "reason": "net does not commute"}
    return check(SUITE, "regularization_net", witness is None, 0.0, witness)


def _cone_candidates(grid: CompactGrid, qs: list[QuasiElement]) -> list[QuasiElement]:
    """
    Zero, ordered regularization steps of both signs, and the roundoff left
    between two formulas for the same a_eps (raw and shrunk to the floor).
    """
    candidates = [QuasiElement.zeros(grid)]
    schedule = eps_schedule(steps=4)
    for q in qs:
        a_eps = [regularize(q, float(eps)) for eps in schedule]
        for near, far in zip(a_eps, a_eps[1:], strict=False):
            step = embed(far - near)
            candidates.extend([step, step.scale(-1.0)])
        eps = float(schedule[0])
        other = (1.0 - invert_one_plus(q.scale(eps)).real) / eps
        noise = embed(BoundedFunction(grid, other) - a_eps[0])
        candidates.append(noise)
        size = float(np.max(np.abs(noise.values)))
        if size > 0.0:
            candidates.append(noise.scale(DEFAULT_POSITIVITY_FLOOR / size))
    return candidates + list(qs)


def cone_pointedness_check(
    grid: CompactGrid,
    qs: list[QuasiElement],
    positive: Callable[[QuasiElement], bool] = is_quasi_positive,
) -> CheckResult:
    """
    q+ meets -q+ only in 0.

    For a in both cones a_eps and (-a)_eps lie in (A0)+ while their sum is
    -2 eps a^2 (1 - eps^2 a^2)^-1, so both vanish and so does a.
    """
    worst, witness, both = 0.0, None, 0
    for i, a in enumerate(_cone_candidates(grid, qs)):
        if a.infinite.any():
            continue
        if not (positive(a) and positive(a.scale(-1.0))):
            continue
        both += 1
        re = a.values.real
        eps = 0.5 / max(float(np.max(np.abs(re))), 1.0)
        upper = re / (1.0 + eps * re)
        lower = -re / (1.0 - eps * re)
        size = max(float(np.max(np.abs(re))), float(np.max(np.abs(upper))), float(np.max(np.abs(lower))))
        worst = max(worst, size)
        if size > 1e-12 and witness is None:
            witness = {"candidate": i, "sup": size, "min_a_eps": float(upper.min()), "min_neg_eps": float(lower.min())}
    return check(SUITE, "cone_pointedness", witness is None, worst, witness, f"{both} in both cones")


def dominated_positivity_check(
    grid: CompactGrid,
    rng: np.random.Generator,
    qs: list[QuasiElement],
    count: int,
    dominated: Callable[[QuasiElement, BoundedFunction], bool] = is_dominated,
) -> CheckResult:
    """
    0 <= a <= b with b in A0 forces a into (A0)+ with every ||a_eps||_0 <= ||b||_0.

    Candidates include multiples of b * u that overshoot b or change sign;
    the ``dominated`` predicate alone decides which pairs enter the check.
    """
    cases: list[tuple[QuasiElement, BoundedFunction]] = []
    for _ in range(count):
        b = random_positive(grid, rng)
        base = embed(b * random_unit_positive(grid, rng))
        cases.extend([(base, b), (base.scale(3.0), b), (base.scale(-1.0), b)])
    for q in qs:
        a_eps = regularize(q, 1.0)
        cases.append((embed(a_eps), a_eps + random_positive(grid, rng)))
        cases.append((q, random_positive(grid, rng)))
    schedule = eps_schedule(steps=20)
    worst, witness, n_dominated = 0.0, None, 0
    for i, (a, b) in enumerate(cases):
        if not dominated(a, b):
            continue
        n_dominated += 1
        x = a.to_bounded()
        if not is_positive(x):
            witness = witness or {"case": i, "reason": "a not in (A0)+", "min": float(x.real.min())}
            continue
        bound = sup_norm(b) * (1.0 + 1e-10) + DEFAULT_POSITIVITY_FLOOR
        largest = max(float(np.max(x.real / (1.0 + eps * x.real))) for eps in schedule)
        excess = _excess(largest, bound)
        worst = max(worst, excess)
        if excess > 0.0 and witness is None:
            witness = {"case": i, "reason": "a_eps above b", "sup_a_eps": largest, "sup_b": sup_norm(b)}
    return check(SUITE, "dominated_positivity", witness is None, worst, witness, f"{n_dominated} dominated")


def _positivity_witnesses(family: SeminormFamily, named: dict[str, QuasiElement], qs: list[QuasiElement]) -> CheckResult:
    witness = None
    items = list(named.items()) + [(f"sample_{i}", a) for i, a in enumerate(qs)]
    for name, a in items:
        result = positivity_witness(a, family)
        if not result.holds:
            witness = witness or {"element": name, "distances": result.distances[-6:]}
    return check(SUITE, "positivity_witness", witness is None, 0.0, witness)


def verify_axioms(
    model: QuasiModel,
    rng: np.random.Generator,
    samples: int = DEFAULT_SAMPLES,
    tol: float = DEFAULT_SEMINORM_TOL,
) -> AxiomReport:
    """Run the full axiom suite on ``samples`` random elements."""
    grid, family = model.grid, model.family
    p_max = family.max_exponent
    heavy = max(1, samples // 5)
    xs = [random_bounded(grid, rng) for _ in range(samples)]
    hermitian = [random_bounded(grid, rng, hermitian=True) for _ in range(samples)]
    positives = [random_positive(grid, rng) for _ in range(samples)]
    qs = [random_quasi_positive(grid, rng, p_max, singular=bool(i % 2 == 0)) for i in range(heavy)]
    mixed: list[QuasiElement] = [embed(x) for x in xs[:heavy]] + qs

    report = AxiomReport()
    report.checks.append(_separate_continuity(family, xs[:heavy], mixed))
    report.checks.append(_seminorm_domination(family, xs))
    report.checks.append(_commuting_product_bound(family, xs))
    report.checks.append(_unit_ball_closedness(model, tol))
    report.checks.append(_wedge_intersection(hermitian, positives))

    named_bounded = {n: e.to_bounded() for n, e in sorted(model.elements.items()) if e.is_bounded}
    cq, norms = _cq_star(family, named_bounded, xs[:heavy])
    report.checks.append(cq)
    report.norms = norms

    report.checks.extend(_resolvent_net(family, qs, tol))
    report.checks.append(_regularization_net(family, qs))
    report.checks.append(cone_pointedness_check(grid, qs))
    report.checks.append(dominated_positivity_check(grid, rng, qs, heavy))
    named_positive = {n: e for n, e in sorted(model.elements.items()) if is_quasi_positive(e)}
    report.checks.append(_positivity_witnesses(family, named_positive, qs))

    logger.info(
        "axiom suite finished",
        extra={"samples": samples, "failed": [c.check for c in report.checks if c.failed]},
    )
    return report

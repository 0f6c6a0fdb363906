"""Spectra, the C_k classes, functional calculus, partial multiplication and roots.

Quasi elements are never multiplied with each other directly. Products go
through the regularized nets x_k = a (1 + eps_k a)^-1, y_k = b (1 + eps_k b)^-1
and are accepted only when x_k y_k is tau-Cauchy and the infinity points of the
pointwise product carry integrable growth.
"""

import logging
from dataclasses import dataclass, field
from fractions import Fraction
from typing import Any

import numpy as np

from common.constants import (
    DEFAULT_CLASS_SUP_THRESHOLD,
    DEFAULT_SCHEDULE_BASE,
)
from common.errors import InvariantViolation, NotInClass, NotMultipliable
from common.models.report import CheckResult, check
from engine.commutative.extended import INFINITY
from engine.commutative.functions import (
    ExponentialDecay,
    Polynomial,
    PowerFunction,
    ResolventPower,
    ScalarFunction,
    constant,
    identity,
)
from engine.commutative.gelfand_extension import MixedElement
from engine.commutative.nets import CauchySchedule, richardson
from engine.commutative.quasi_model import (
    QuasiElement,
    SeminormFamily,
    check_seminorms,
    local_growth,
    module_mult,
    regularize,
    require_quasi_positive,
)

logger = logging.getLogger(__name__)

# alpha * p at or above this counts as a non-integrable singularity
DIVERGENCE_MARGIN = 1.0 - 1e-9


@dataclass
class Spectrum:
    """sigma(a): finite spectral values plus the point at infinity."""

    finite_values: np.ndarray
    contains_infinity: bool

    @property
    def sup(self) -> float:
        return float(self.finite_values.max()) if self.finite_values.size else 0.0

    def to_dict(self) -> dict[str, Any]:
        return {
            "finite_min": float(self.finite_values.min()) if self.finite_values.size else None,
            "finite_max": self.sup if self.finite_values.size else None,
            "finite_count": int(self.finite_values.size),
            "contains_infinity": self.contains_infinity,
        }


def spectrum(a: QuasiElement) -> Spectrum:
    """Range of the extended transform of a quasi-positive a."""
    re = require_quasi_positive(a)
    return Spectrum(np.unique(re[a.finite]), bool(a.infinite.any()))


def _g_sup(f: ScalarFunction, values: np.ndarray, k: int) -> float:
    if values.size == 0:
        return 0.0
    g = np.abs(f(values)) / (1.0 + values) ** k
    return float(np.max(g))


def class_index(
    f: ScalarFunction,
    a: QuasiElement,
    n: int,
    threshold: float = DEFAULT_CLASS_SUP_THRESHOLD,
) -> int | None:
    """
    Smallest k <= n with f / (1 + lam)^k bounded on sigma(a).

    With infinity in the spectrum the declared growth decides; the sampled sup
    over the finite spectrum guards against blow-up inside the range.
    """
    if n < 0:
        raise ValueError(f"class order must be >= 0, got {n}")
    sigma = spectrum(a)
    for k in range(n + 1):
        if sigma.contains_infinity and f.growth > k:
            continue
        if _g_sup(f, sigma.finite_values, k) <= threshold:
            return k
    return None


def _require_power(a: QuasiElement, n: int, family: SeminormFamily | None) -> None:
    """a^n must be a valid quasi element with integrable infinity points."""
    if n <= 1:
        return
    re = np.maximum(a.values.real, 0.0)
    with np.errstate(over="ignore"):
        power = re**n
    try:
        element = QuasiElement(a.grid, power, a.infinite)
    except InvariantViolation as e:
        raise InvariantViolation(f"a^{n} is not representable: {e}", e.witness) from e
    if family is None:
        return
    check_seminorms(element, family)
    p_max = family.max_exponent
    for index, alpha in local_growth(a).items():
        if n * alpha * p_max >= DIVERGENCE_MARGIN:
            raise InvariantViolation(
                f"a^{n} diverges at infinity point {index}",
                {"index": index, "alpha": alpha, "n": n},
            )


def _resolve_k(
    f: ScalarFunction,
    a: QuasiElement,
    n: int,
    k: int | None,
    threshold: float = DEFAULT_CLASS_SUP_THRESHOLD,
) -> int:
    lowest = class_index(f, a, n, threshold)
    if lowest is None:
        raise NotInClass(
            f"{f.name} is not in C_{n} of the spectrum",
            {"function": f.name, "n": n, "growth": f.growth},
        )
    if k is None:
        return lowest
    if not lowest <= k <= n:
        raise NotInClass(f"k={k} outside the valid range [{lowest}, {n}]", {"k": k})
    return k


def apply_function(
    f: ScalarFunction,
    a: QuasiElement,
    n: int = 1,
    family: SeminormFamily | None = None,
    k: int | None = None,
    threshold: float = DEFAULT_CLASS_SUP_THRESHOLD,
) -> QuasiElement:
    """
    f(a) for f in C_n(sigma(a)).

    Finite points take f(a(t)); infinity points take the continuous extension
    of f at infinity. ``threshold`` bounds the sampled sup of f / (1 + lam)^k.

    Raises:
        NotQuasiPositive: if a is not quasi-positive
        NotInClass: if no k <= n qualifies
        InvariantViolation: if a^n or the result is not a valid quasi element
    """
    _resolve_k(f, a, n, k, threshold)
    _require_power(a, n, family)
    re = np.maximum(a.values.real, 0.0)
    values = np.zeros(a.grid.size, dtype=np.complex128)
    values[a.finite] = f(re[a.finite])
    infinite = np.zeros(a.grid.size, dtype=bool)
    limit = f.limit_at_infinity()
    if a.infinite.any():
        if limit == INFINITY:
            infinite = a.infinite.copy()
        else:
            values[a.infinite] = limit.value
    result = QuasiElement(a.grid, values, infinite)
    if family is not None:
        check_seminorms(result, family)
    return result


def apply_factorized(
    f: ScalarFunction,
    a: QuasiElement,
    k: int,
    n: int | None = None,
    threshold: float = DEFAULT_CLASS_SUP_THRESHOLD,
) -> QuasiElement:
    """f(a) written as g_k(a) (1 + a)^k with g_k = f / (1 + lam)^k."""
    _resolve_k(f, a, k if n is None else n, k, threshold)
    re = np.maximum(a.values.real, 0.0)
    g_k = f * ResolventPower(k)
    values = np.zeros(a.grid.size, dtype=np.complex128)
    values[a.finite] = g_k(re[a.finite]) * (1.0 + re[a.finite]) ** k
    infinite = np.zeros(a.grid.size, dtype=bool)
    limit = f.limit_at_infinity()
    if a.infinite.any():
        if limit == INFINITY:
            infinite = a.infinite.copy()
        else:
            values[a.infinite] = limit.value
    return QuasiElement(a.grid, values, infinite)


def pointwise_product(a: QuasiElement, b: QuasiElement) -> QuasiElement:
    """Extended pointwise product with 0 * inf = 0; inf * inf stays inf."""
    values = np.where(a.finite & b.finite, a.values * b.values, 0.0)
    infinite = (a.infinite & (b.infinite | (b.values != 0))) | (
        b.infinite & (a.infinite | (a.values != 0))
    )
    return QuasiElement(a.grid, values, infinite)


@dataclass
class ProductTrace:
    """History of the regularized product net for one schedule."""

    limit: QuasiElement
    last_iterate: np.ndarray
    differences: list[float] = field(default_factory=list)
    steps: int = 0
    base: float = DEFAULT_SCHEDULE_BASE
    extrapolated: np.ndarray | None = None

    def to_dict(self) -> dict[str, Any]:
        return {
            "base": self.base,
            "steps": self.steps,
            "differences": [float(d) for d in self.differences],
            "infinity_points": self.limit.infinity_points,
        }


def _refinement_test(candidate: QuasiElement, family: SeminormFamily) -> None:
    p_max = family.max_exponent
    for index, alpha in local_growth(candidate).items():
        if alpha * p_max >= DIVERGENCE_MARGIN:
            raise NotMultipliable(
                f"product grows like |t - t0|^-{alpha:.3f} at index {index}; "
                f"not integrable for p={p_max:g}",
                {"index": index, "alpha": alpha, "p": p_max},
            )


def _regularized(re: np.ndarray, infinite: np.ndarray, eps: float) -> np.ndarray:
    """Real part of a_eps from the clipped real part of a."""
    return np.where(infinite, 1.0 / eps, re / (1.0 + eps * re))


def partial_product_trace(
    a: QuasiElement,
    b: QuasiElement,
    family: SeminormFamily,
    schedule: CauchySchedule | None = None,
) -> ProductTrace:
    """
    Run the regularized product net along eps_k = base^-k.

    Raises:
        NotQuasiPositive: if a or b is not quasi-positive
        NotMultipliable: if the refinement or Cauchy test fails
    """
    schedule = schedule or CauchySchedule()
    ra = require_quasi_positive(a, "left factor")
    rb = require_quasi_positive(b, "right factor")
    candidate = pointwise_product(a, b)
    _refinement_test(candidate, family)
    finite = candidate.finite
    scale = max(1.0, family.max_seminorm(candidate.values, candidate.infinite))

    history: list[float] = []
    previous: np.ndarray | None = None
    current = np.zeros(a.grid.size)
    for step, eps in enumerate(schedule.epsilons(), start=1):
        product = _regularized(ra, a.infinite, eps) * _regularized(rb, b.infinite, eps)
        current = np.where(finite, product, 0.0)
        if previous is not None:
            history.append(family.max_seminorm(current - previous))
            if schedule.converged(history, scale):
                logger.debug(
                    "product net converged",
                    extra={"steps": step, "base": schedule.base, "last": history[-1]},
                )
                return ProductTrace(
                    limit=candidate,
                    last_iterate=current,
                    differences=history,
                    steps=step,
                    base=schedule.base,
                    extrapolated=richardson(current, previous, schedule.base),
                )
        previous = current
    raise NotMultipliable(
        f"product net not Cauchy after {schedule.max_steps} steps (last difference {history[-1]:.3e})",
        {"base": schedule.base, "differences": history[-(schedule.window + 1):]},
    )


def partial_product(
    a: QuasiElement,
    b: QuasiElement,
    family: SeminormFamily,
    schedule: CauchySchedule | None = None,
) -> QuasiElement:
    """ab for a in L(b): the tau-limit of the regularized products."""
    return partial_product_trace(a, b, family, schedule).limit


def schedule_agreement(
    a: QuasiElement,
    b: QuasiElement,
    family: SeminormFamily,
    schedule: CauchySchedule | None = None,
) -> float:
    """Largest gap between the extrapolated limits along the base and the alternative base."""
    schedule = schedule or CauchySchedule()
    first = partial_product_trace(a, b, family, schedule)
    return _extrapolation_gap(first, partial_product_trace(a, b, family, schedule.alternate()))


def _extrapolation_gap(first: ProductTrace, second: ProductTrace) -> float:
    if not np.array_equal(first.limit.infinite, second.limit.infinite):
        return float("inf")
    assert first.extrapolated is not None and second.extrapolated is not None
    return float(np.max(np.abs(first.extrapolated - second.extrapolated)))


def multiplier_identity_residual(
    a: QuasiElement,
    b: QuasiElement,
    family: SeminormFamily,
    schedule: CauchySchedule | None = None,
    product: QuasiElement | None = None,
) -> float:
    """
    Check (1+a)^-1 (ab) (1+b)^-1 = a(1+a)^-1 . b(1+b)^-1 at finite points of ab.

    ``product`` reuses an already computed ab. Returns the largest absolute
    pointwise gap.
    """
    c = product if product is not None else partial_product(a, b, family, schedule)
    ra = require_quasi_positive(a)
    rb = require_quasi_positive(b)
    lhs = c.values.real / ((1.0 + ra) * (1.0 + rb))
    rhs = regularize(a, 1.0).real * regularize(b, 1.0).real
    finite = c.finite & a.finite & b.finite
    if not finite.any():
        return 0.0
    return float(np.max(np.abs(lhs[finite] - rhs[finite])))


def mixed_product(
    m1: MixedElement,
    m2: MixedElement,
    family: SeminormFamily,
    schedule: CauchySchedule | None = None,
) -> QuasiElement:
    """(ax)(by) = (ab) xy for mixed elements without a y-part."""
    for m in (m1, m2):
        if np.any(m.y.values != 0):
            raise InvariantViolation("mixed product needs elements of the form ax")
    ab = partial_product(m1.a, m2.a, family, schedule)
    return module_mult(m1.x * m2.x, ab, family=family)


def nth_root(a: QuasiElement, n: int) -> QuasiElement:
    """The unique quasi-positive b with b^n = a pointwise; inf -> inf."""
    if n < 1:
        raise ValueError(f"root order must be >= 1, got {n}")
    re = require_quasi_positive(a)
    if n == 1:
        return QuasiElement(a.grid, re, a.infinite)
    return QuasiElement(a.grid, np.where(a.infinite, 0.0, re ** (1.0 / n)), a.infinite)


def power_by_partial_product(
    b: QuasiElement,
    n: int,
    family: SeminormFamily,
    schedule: CauchySchedule | None = None,
) -> QuasiElement:
    """b * b * ... * b (n factors) through repeated partial products."""
    result = b
    for _ in range(n - 1):
        result = partial_product(result, b, family, schedule)
    return result


def quasi_residual(a: QuasiElement, b: QuasiElement, family: SeminormFamily) -> float:
    """Max seminorm of a - b on their common finite set; inf if the infinity tags differ."""
    if not np.array_equal(a.infinite, b.infinite):
        return float("inf")
    return family.max_seminorm(np.where(a.finite, a.values - b.values, 0.0))


def root_residual(
    a: QuasiElement,
    n: int,
    family: SeminormFamily,
    schedule: CauchySchedule | None = None,
) -> float:
    """Seminorm distance between a and the n-fold partial product of its root."""
    return quasi_residual(power_by_partial_product(nth_root(a, n), n, family, schedule), a, family)


def root_factorization_residual(
    a: QuasiElement,
    n: int,
    family: SeminormFamily,
    schedule: CauchySchedule | None = None,
) -> float:
    """a against f1(a) f2(a) with f1 = lam^(1/n), f2 = lam^(1 - 1/n)."""
    f1 = PowerFunction(Fraction(1, n))
    f2 = PowerFunction(1 - Fraction(1, n))
    left = apply_function(f1, a, 1, family)
    right = apply_function(f2, a, 1, family)
    return quasi_residual(partial_product(left, right, family, schedule), a, family)


SUITE = "calculus"

# (f1, f2) with k1 + k2 <= 2 for unbounded a
CATALOG_PAIRS: tuple[tuple[ScalarFunction, ScalarFunction], ...] = (
    (PowerFunction(Fraction(1, 2)), PowerFunction(Fraction(1, 2))),
    (PowerFunction(1), ResolventPower(1)),
    (ResolventPower(1), ResolventPower(2)),
    (ExponentialDecay(1.0), PowerFunction(1)),
    (Polynomial([1.0, 1.0]), ResolventPower(1)),
    (PowerFunction(Fraction(1, 2)), ExponentialDecay(1.0)),
)


def _relative_gap(left: np.ndarray, right: np.ndarray) -> float:
    if left.size == 0:
        return 0.0
    scale = np.maximum(1.0, np.maximum(np.abs(left), np.abs(right)))
    return float(np.max(np.abs(left - right) / scale))


def calculus_laws_check(
    samples: list[QuasiElement],
    family: SeminormFamily,
    n: int = 2,
    tol: float = 1e-10,
    schedule: CauchySchedule | None = None,
    threshold: float = DEFAULT_CLASS_SUP_THRESHOLD,
) -> list[CheckResult]:
    """
    Unit laws, homomorphism, linearity, k-independence, the C_b isometry,
    schedule independence of products and the root round trips.

    Values are compared on the finite set of each sample; at infinity points
    only a divergent f1 f2 has to stay infinite.
    """
    schedule = schedule or CauchySchedule()
    results: list[CheckResult] = []
    one, ident = constant(1.0), identity()
    images: dict[tuple[int, str], QuasiElement] = {}

    def image(f: ScalarFunction, i: int) -> QuasiElement:
        key = (i, f.name)
        if key not in images:
            images[key] = apply_function(f, samples[i], n, family, threshold=threshold)
        return images[key]

    witness = None
    for i, a in enumerate(samples):
        u0 = image(one, i)
        u1 = image(ident, i)
        if u0.infinite.any() or np.any(u0.values != 1.0):
            witness = witness or {"sample": i, "law": "u0"}
        if not u1.allclose(a, rtol=0.0, atol=0.0):
            witness = witness or {"sample": i, "law": "u1"}
    results.append(check(SUITE, "unit_laws", witness is None, 0.0, witness))

    worst, witness = 0.0, None
    for i, a in enumerate(samples):
        finite = a.finite
        for f1, f2 in CATALOG_PAIRS:
            lhs = image(f1 * f2, i)
            rhs = mixed_product(MixedElement.of(image(f1, i)), MixedElement.of(image(f2, i)), family, schedule)
            gap = _relative_gap(lhs.values[finite], rhs.values[finite])
            lost = bool(np.any(lhs.infinite & ~rhs.infinite))
            worst = max(worst, gap)
            if (gap > tol or lost) and witness is None:
                witness = {"sample": i, "pair": [f1.name, f2.name], "gap": gap, "lost_infinity": lost}
    results.append(check(SUITE, "homomorphism", witness is None, worst, witness))

    worst, witness = 0.0, None
    for i, a in enumerate(samples):
        finite = a.finite
        for f1, f2 in CATALOG_PAIRS:
            total = image(f1 + f2, i).values[finite]
            parts = (image(f1, i).values + image(f2, i).values)[finite]
            scaled = image(f1.scaled(2.5), i).values[finite]
            single = 2.5 * image(f1, i).values[finite]
            gap = max(_relative_gap(total, parts), _relative_gap(scaled, single))
            worst = max(worst, gap)
            if gap > 1e-12 and witness is None:
                witness = {"sample": i, "pair": [f1.name, f2.name], "gap": gap}
    results.append(check(SUITE, "linearity", witness is None, worst, witness))

    worst, witness = 0.0, None
    for i, a in enumerate(samples):
        for f, _ in CATALOG_PAIRS:
            lowest = class_index(f, a, n, threshold)
            if lowest is None or lowest == n:
                continue
            first = apply_factorized(f, a, lowest, n, threshold)
            last = apply_factorized(f, a, n, n, threshold)
            gap = _relative_gap(first.values[a.finite], last.values[a.finite])
            worst = max(worst, gap)
            if gap > 1e-12 and witness is None:
                witness = {"sample": i, "function": f.name, "k": [lowest, n], "gap": gap}
    results.append(check(SUITE, "k_independence", witness is None, worst, witness))

    worst, witness = 0.0, None
    for i, a in enumerate(samples):
        sigma = spectrum(a)
        for f in (ResolventPower(1), ExponentialDecay(1.0), ResolventPower(2)):
            values = np.abs(f(sigma.finite_values)) if sigma.finite_values.size else np.zeros(0)
            expected = float(values.max(initial=0.0))
            if sigma.contains_infinity:
                expected = max(expected, abs(f.limit_at_infinity().value))
            gap = abs(float(np.max(np.abs(image(f, i).values))) - expected)
            worst = max(worst, gap)
            if gap > 1e-12 and witness is None:
                witness = {"sample": i, "function": f.name, "gap": gap}
    results.append(check(SUITE, "cb_isometry", witness is None, worst, witness))

    # one trace per schedule and pair serves both product checks
    pairs = list(zip(samples, samples[1:] + samples[:1], strict=True))
    traces: list[tuple[int, ProductTrace, ProductTrace]] = []
    for i, (a, b) in enumerate(pairs):
        try:
            first = partial_product_trace(a, b, family, schedule)
            second = partial_product_trace(a, b, family, schedule.alternate())
        except NotMultipliable:
            continue
        traces.append((i, first, second))

    worst, witness = 0.0, None
    for i, first, second in traces:
        gap = _extrapolation_gap(first, second)
        gap /= max(1.0, float(np.abs(first.limit.values).max(initial=0.0)))
        worst = max(worst, gap)
        if gap > 1e-9 and witness is None:
            witness = {"pair": i, "gap": gap}
    results.append(check(SUITE, "schedule_agreement", witness is None, worst, witness))

    worst, witness = 0.0, None
    for i, first, _ in traces:
        a, b = pairs[i]
        gap = multiplier_identity_residual(a, b, family, product=first.limit)
        worst = max(worst, gap)
        if gap > tol and witness is None:
            witness = {"pair": i, "gap": gap}
    results.append(check(SUITE, "multiplier_identity", witness is None, worst, witness))

    worst, witness = 0.0, None
    for i, a in enumerate(samples):
        for order in (2, 3, 4):
            residual = max(
                root_residual(a, order, family, schedule),
                root_factorization_residual(a, order, family, schedule),
            )
            worst = max(worst, residual)
            if residual > 1e-8 and witness is None:
                witness = {"sample": i, "n": order, "residual": residual}
    results.append(check(SUITE, "root_roundtrip", witness is None, worst, witness))
    logger.debug("calculus laws checked", extra={"samples": len(samples), "images": len(images)})
    return results

"""Extension of characters to C*-valued functionals on mixed elements ax + y.

For a quasi-positive a and hermitian x the extended character is

    phi'(ax + y) = phi((ax + y)(1 + a|x|)^-1) / phi((1 + a|x|)^-1)

with the value infinity when the denominator vanishes. A general x is split
into hermitian parts x = x1 + i x2 first and the two ratios are added.
"""

import logging
from dataclasses import dataclass, field
from functools import cached_property
from typing import Any

import numpy as np

from common.constants import DEFAULT_DENOMINATOR_TOL, DEFAULT_WINDOW
from common.errors import InvariantViolation, SpanInput
from common.models.report import CheckResult, Verdict, check
from engine.commutative.base_algebra import (
    BoundedFunction,
    Character,
    CompactGrid,
    decompose_hermitian,
    sup_norm,
)
from engine.commutative.extended import (
    INFINITY,
    ExtendedValue,
    encode_values,
    window_violation,
)
from engine.commutative.quasi_model import QuasiElement, require_quasi_positive, wedge_ops
from engine.commutative.sampling import random_bounded, random_positive, random_quasi_positive

logger = logging.getLogger(__name__)

SUITE = "gelfand"


@dataclass(frozen=True, eq=False)
class MixedElement:
    """ax + y with a quasi-positive and x, y in A0."""

    a: QuasiElement
    x: BoundedFunction
    y: BoundedFunction

    def __post_init__(self) -> None:
        require_quasi_positive(self.a, "mixed element a-part")

    @classmethod
    def of(cls, a: QuasiElement) -> "MixedElement":
        """a itself, as a * 1 + 0."""
        return cls(a, BoundedFunction.constant(a.grid, 1.0), BoundedFunction.constant(a.grid, 0.0))

    @classmethod
    def bounded(cls, y: BoundedFunction) -> "MixedElement":
        """y in A0, as 0 * 0 + y."""
        zero = BoundedFunction.constant(y.grid, 0.0)
        return cls(QuasiElement.zeros(y.grid), zero, y)

    def adjoint(self) -> "MixedElement":
        return MixedElement(self.a, self.x.adjoint(), self.y.adjoint())

    @cached_property
    def hermitian_parts(self) -> tuple[BoundedFunction, BoundedFunction]:
        x1 = BoundedFunction(self.x.grid, self.x.values.real)
        x2 = BoundedFunction(self.x.grid, self.x.values.imag)
        return x1, x2

    @cached_property
    def terms(self) -> tuple[np.ndarray, np.ndarray, np.ndarray]:
        """
        Per-point (numerator, denominator) of both hermitian parts.

        Returns:
            numerators (2, n), denominators (2, n) and y values (n,)
        """
        re_a = np.maximum(self.a.values.real, 0.0)
        numerators = np.zeros((2, self.a.grid.size))
        denominators = np.zeros((2, self.a.grid.size))
        for row, part in enumerate(self.hermitian_parts):
            _, _, abs_part = decompose_hermitian(part)
            absx = abs_part.real
            # a|x| with 0 * inf = 0
            blown = self.a.infinite & (absx != 0)
            a_abs_x = np.where(self.a.infinite, 0.0, re_a * absx)
            d = np.where(blown, 0.0, 1.0 / (1.0 + a_abs_x))
            numerators[row] = np.where(blown, 0.0, re_a * part.real * d)
            denominators[row] = d
        return numerators, denominators, self.y.values


@dataclass(frozen=True, eq=False)
class ExtendedFunction:
    """One extended value per character; infinity only on a sparse set."""

    values: np.ndarray
    infinite: np.ndarray = field(default=None)  # type: ignore[assignment]

    def __post_init__(self) -> None:
        values = np.array(self.values, dtype=np.complex128)
        mask = (
            np.zeros(values.size, dtype=bool)
            if self.infinite is None
            else np.array(self.infinite, dtype=bool)
        )
        values[mask] = 0.0
        start = window_violation(mask, DEFAULT_WINDOW)
        if start is not None:
            raise InvariantViolation(
                f"transform is infinite on {DEFAULT_WINDOW} adjacent characters from {start}",
                {"window_start": start},
            )
        object.__setattr__(self, "values", values)
        object.__setattr__(self, "infinite", mask)

    @property
    def infinity_set(self) -> list[int]:
        return [int(i) for i in np.flatnonzero(self.infinite)]

    @property
    def finite(self) -> np.ndarray:
        return ~self.infinite

    def value_at(self, index: int) -> ExtendedValue:
        if self.infinite[index]:
            return INFINITY
        return ExtendedValue.finite(self.values[index])

    def sup_abs(self) -> float:
        if self.infinite.any():
            return float("inf")
        return float(np.max(np.abs(self.values)))

    def close_to(self, other: "ExtendedFunction", tol: float) -> bool:
        if not np.array_equal(self.infinite, other.infinite):
            return False
        scale = np.maximum(1.0, np.maximum(np.abs(self.values), np.abs(other.values)))
        return bool(np.all(np.abs(self.values - other.values) <= tol * scale))

    def to_json(self) -> dict[str, Any]:
        return {"values": encode_values(self.values, self.infinite)}


def _evaluate(m: MixedElement) -> tuple[np.ndarray, np.ndarray]:
    numerators, denominators, y = m.terms
    infinite = np.any(np.abs(denominators) <= DEFAULT_DENOMINATOR_TOL, axis=0)
    safe = np.where(np.abs(denominators) <= DEFAULT_DENOMINATOR_TOL, 1.0, denominators)
    ratios = numerators / safe
    values = np.where(infinite, 0.0, ratios[0] + 1j * ratios[1] + y)
    return values, infinite


def phi_prime(char: Character, m: MixedElement) -> ExtendedValue:
    """Value of the extended character at ax + y."""
    numerators, denominators, y = m.terms
    i = char.index
    total = ExtendedValue.finite(y[i])
    for row, unit in ((0, 1.0), (1, 1j)):
        d = denominators[row, i]
        if abs(d) <= DEFAULT_DENOMINATOR_TOL:
            return INFINITY
        total = total + ExtendedValue.finite(unit * numerators[row, i] / d)
    return total


def transform(m: MixedElement) -> ExtendedFunction:
    """
    Extended Gelfand transform of ax + y over all characters.

    Raises:
        InvariantViolation: if the infinity set breaks the window rule
    """
    values, infinite = _evaluate(m)
    return ExtendedFunction(values, infinite)


def transform_quasi(a: QuasiElement) -> ExtendedFunction:
    return transform(MixedElement.of(a))


def combine(terms: list[tuple[complex, MixedElement]]) -> MixedElement:
    """
    Non-negative combination of mixed elements sharing one x.

    Raises:
        SpanInput: for anything outside the wedge (negative or complex
            coefficients, or differing x parts)
    """
    if not terms:
        raise SpanInput("empty combination")
    x = terms[0][1].x
    a = QuasiElement.zeros(x.grid)
    y = BoundedFunction.constant(x.grid, 0.0)
    for coefficient, m in terms:
        c = complex(coefficient)
        if c.imag != 0 or c.real < 0:
            raise SpanInput(
                f"coefficient {coefficient!r} leaves the wedge",
                {"coefficient": [c.real, c.imag]},
            )
        if not np.array_equal(m.x.values, x.values):
            raise SpanInput("terms carry different x parts")
        a = wedge_ops(m.a, a, c.real)
        y = y + m.y * c.real
    return MixedElement(a, x, y)


def _product_guard(fa: ExtendedValue, fx: complex) -> bool:
    """False when phi'(a) phi(x) is inf * 0."""
    return not fa.is_indeterminate_product(ExtendedValue.finite(fx))


def functional_laws_check(
    samples: list[MixedElement],
    chars: list[Character] | None = None,
    tol: float = 1e-10,
) -> list[CheckResult]:
    """
    Additivity, homogeneity, the product law and the denominator implications.

    inf * 0 cases of the product law are counted as indeterminate rather than
    decided.
    """
    if not samples:
        return []
    grid = samples[0].a.grid
    indices = [c.index for c in chars] if chars is not None else list(range(grid.size))
    results: list[CheckResult] = []

    worst = 0.0
    witness: dict[str, Any] | None = None
    for i, (m1, m2) in enumerate(zip(samples, samples[1:] + samples[:1], strict=True)):
        total = transform_quasi(wedge_ops(m1.a, m2.a))
        fa, fb = transform_quasi(m1.a), transform_quasi(m2.a)
        for t in indices:
            lhs = total.value_at(t)
            rhs = fa.value_at(t) + fb.value_at(t)
            if not lhs.close_to(rhs, tol):
                worst = max(worst, abs(lhs.value - rhs.value) if lhs.is_finite and rhs.is_finite else float("inf"))
                witness = witness or {"pair": i, "char": t, "lhs": lhs.to_json(), "rhs": rhs.to_json()}
    results.append(check(SUITE, "additivity", witness is None, worst, witness))

    worst, witness = 0.0, None
    for i, m in enumerate(samples):
        fa = transform_quasi(m.a)
        for scale in (0.0, 0.5, 2.0):
            scaled = transform_quasi(m.a.scale(scale))
            for t in indices:
                lhs, rhs = scaled.value_at(t), fa.value_at(t).scale(scale)
                if not lhs.close_to(rhs, tol):
                    worst = float("inf")
                    witness = witness or {"sample": i, "scale": scale, "char": t}
    results.append(check(SUITE, "homogeneity", witness is None, worst, witness))

    worst, witness = 0.0, None
    indeterminate = 0
    for i, m in enumerate(samples):
        fm = transform(m)
        fa = transform_quasi(m.a)
        for t in indices:
            fat = fa.value_at(t)
            if not _product_guard(fat, m.x.values[t]):
                indeterminate += 1
                continue
            rhs = fat * ExtendedValue.finite(m.x.values[t]) + ExtendedValue.finite(m.y.values[t])
            lhs = fm.value_at(t)
            if not lhs.close_to(rhs, tol):
                worst = float("inf")
                witness = witness or {"sample": i, "char": t, "lhs": lhs.to_json(), "rhs": rhs.to_json()}
    results.append(
        check(SUITE, "product_law", witness is None, worst, witness, f"{indeterminate} indeterminate")
    )
    if indeterminate:
        results.append(
            CheckResult(SUITE, "product_law_inf_times_zero", Verdict.INDETERMINATE, 0.0, None, f"{indeterminate} cases")
        )

    witness = None
    for i, m in enumerate(samples):
        fa = transform_quasi(m.a)
        _, denominators, _ = m.terms
        for t in indices:
            for row, part in enumerate(m.hermitian_parts):
                d = denominators[row, t]
                px = part.values[t]
                if fa.infinite[t] and px != 0 and abs(d) > DEFAULT_DENOMINATOR_TOL:
                    witness = witness or {"sample": i, "char": t, "denominator": float(d)}
                if fa.finite[t] and abs(d) <= DEFAULT_DENOMINATOR_TOL:
                    witness = witness or {"sample": i, "char": t, "denominator": float(d)}
    results.append(check(SUITE, "denominator_implications", witness is None, 0.0, witness))

    witness = None
    for i, m in enumerate(samples):
        direct, conj = transform(m), transform(m.adjoint())
        finite = direct.finite & conj.finite
        if not np.array_equal(direct.infinite, conj.infinite) or not np.allclose(
            conj.values[finite], direct.values[finite].conj(), rtol=tol, atol=tol
        ):
            witness = witness or {"sample": i}
    results.append(check(SUITE, "hermiticity", witness is None, 0.0, witness))
    return results


def _finite_close(lhs: ExtendedFunction, rhs: np.ndarray, mask: np.ndarray, tol: float) -> float:
    """Largest relative gap on mask, comparing only finite entries."""
    if not mask.any():
        return 0.0
    gap = np.abs(lhs.values[mask] - rhs[mask])
    scale = np.maximum(1.0, np.abs(rhs[mask]))
    return float(np.max(gap / scale))


def wedge_iso_check(
    quasi: list[QuasiElement],
    bounded: list[BoundedFunction],
    tol: float = 1e-10,
) -> list[CheckResult]:
    """
    The transform as a wedge isomorphism.

    Injective, additive and homogeneous on quasi-positives, an isometric
    *-isomorphism on A0, and multiplicative in the four mixed product laws on
    the set where every factor is finite.
    """
    results: list[CheckResult] = []

    witness: dict[str, Any] | None = None
    transforms = [transform_quasi(a) for a in quasi]
    for i in range(len(quasi)):
        for j in range(i + 1, len(quasi)):
            same_image = transforms[i].close_to(transforms[j], 0.0)
            same_input = quasi[i].allclose(quasi[j], rtol=0.0, atol=0.0)
            if same_image != same_input:
                witness = witness or {"pair": [i, j]}
    results.append(check(SUITE, "iso_injective", witness is None, 0.0, witness))

    worst, witness = 0.0, None
    for i, (a, b) in enumerate(zip(quasi, quasi[1:] + quasi[:1], strict=True)):
        total = transform_quasi(wedge_ops(a, b))
        fa, fb = transforms[i], transform_quasi(b)
        expected_inf = fa.infinite | fb.infinite
        if not np.array_equal(total.infinite, expected_inf):
            witness = witness or {"pair": i, "reason": "infinity tags"}
            continue
        gap = _finite_close(total, fa.values + fb.values, ~expected_inf, tol)
        worst = max(worst, gap)
        if gap > tol:
            witness = witness or {"pair": i, "gap": gap}
    results.append(check(SUITE, "iso_additive", witness is None, worst, witness))

    worst, witness = 0.0, None
    for i, a in enumerate(quasi):
        for scale in (0.0, 0.25, 3.0):
            scaled = transform_quasi(a.scale(scale))
            expected_inf = transforms[i].infinite & (scale != 0)
            if not np.array_equal(scaled.infinite, expected_inf):
                witness = witness or {"sample": i, "scale": scale}
                continue
            gap = _finite_close(scaled, scale * transforms[i].values, ~expected_inf, tol)
            worst = max(worst, gap)
            if gap > tol:
                witness = witness or {"sample": i, "scale": scale, "gap": gap}
    results.append(check(SUITE, "iso_homogeneous", witness is None, worst, witness))

    worst, witness = 0.0, None
    for i, x in enumerate(bounded):
        fx = transform(MixedElement.bounded(x))
        gap = abs(fx.sup_abs() - sup_norm(x))
        star_gap = float(np.max(np.abs(transform(MixedElement.bounded(x.adjoint())).values - fx.values.conj())))
        y = bounded[(i + 1) % len(bounded)]
        mult_gap = float(
            np.max(np.abs(transform(MixedElement.bounded(x * y)).values - fx.values * y.values))
        )
        worst = max(worst, gap, star_gap, mult_gap)
        if max(gap, star_gap, mult_gap) > tol * max(1.0, sup_norm(x)):
            witness = witness or {"sample": i, "sup_gap": gap, "star_gap": star_gap, "mult_gap": mult_gap}
    results.append(check(SUITE, "iso_isometric_on_A0", witness is None, worst, witness))

    worst, witness = 0.0, None
    if bounded:
        for i, a in enumerate(quasi):
            b = quasi[(i + 1) % len(quasi)]
            x = bounded[i % len(bounded)]
            y = bounded[(i + 1) % len(bounded)]
            fa, fb = transforms[i], transform_quasi(b)
            mask = fa.finite & fb.finite
            zero = BoundedFunction.constant(x.grid, 0.0)
            laws = {
                "ax": (MixedElement(a, x, zero), fa.values * x.values),
                "(a+b)x": (MixedElement(wedge_ops(a, b), x, zero), (fa.values + fb.values) * x.values),
                "a(x+y)": (MixedElement(a, x + y, zero), fa.values * (x.values + y.values)),
                "a(xy)": (MixedElement(a, x * y, zero), fa.values * x.values * y.values),
            }
            for name, (m, expected) in laws.items():
                gap = _finite_close(transform(m), expected, mask, tol)
                worst = max(worst, gap)
                if gap > tol:
                    witness = witness or {"sample": i, "law": name, "gap": gap}
    results.append(check(SUITE, "iso_product_laws", witness is None, worst, witness))
    return results


def approach_to_infinity(m: MixedElement, index: int, depth: int = 5) -> list[float]:
    """
    |phi'| on the ``depth`` nearest characters left of an infinity point,
    ordered towards it.
    """
    values, infinite = _evaluate(m)
    if not infinite[index]:
        raise InvariantViolation(f"character {index} is not an infinity point")
    side = range(max(0, index - depth), index) if index >= depth else range(index + depth, index, -1)
    return [float(abs(values[j])) for j in side]


def representation_pairs(
    grid: CompactGrid,
    rng: np.random.Generator,
    count: int,
    p_max: float = 1.0,
) -> list[tuple[MixedElement, MixedElement]]:
    """
    Pairs (ax + y, bz + w) that name the same function.

    Even draws rescale the quasi-positive part, b = a c and z = x / c with c
    strictly positive; odd draws shift it, b = a + h and w = y - h x.
    """
    pairs = []
    for i in range(count):
        a = random_quasi_positive(grid, rng, p_max=p_max)
        x = random_bounded(grid, rng)
        y = random_bounded(grid, rng)
        if i % 2 == 0:
            c = BoundedFunction(grid, 0.5 + random_positive(grid, rng, top=1.5).values.real)
            other = MixedElement(a * c, BoundedFunction(grid, x.values / c.values), y)
        else:
            h = random_positive(grid, rng)
            other = MixedElement(a + h, x, y - h * x)
        pairs.append((MixedElement(a, x, y), other))
    return pairs


def well_definedness_check(
    pairs: list[tuple[MixedElement, MixedElement]], tol: float = 1e-10
) -> list[CheckResult]:
    """The transform depends on the function ax + y, not on the chosen a, x and y."""
    witness: dict[str, Any] | None = None
    worst = 0.0
    for i, (left, right) in enumerate(pairs):
        lhs, rhs = transform(left), transform(right)
        if not np.array_equal(lhs.infinite, rhs.infinite):
            differing = np.flatnonzero(lhs.infinite != rhs.infinite)
            witness = witness or {"pair": i, "character": int(differing[0]), "reason": "infinity set"}
            continue
        gap = _finite_close(lhs, rhs.values, lhs.finite, tol)
        worst = max(worst, gap)
        if gap > tol:
            witness = witness or {"pair": i, "gap": gap}
    return [check(SUITE, "well_defined", witness is None, worst, witness)]

"""Positive invariant forms on A0 and their GNS representations.

Invariance phi(ax, y) = phi(x, a* y) against every indicator a forces a
diagonal kernel on the grid, so a valid form is a weight vector w >= 0 with
phi(x, y) = sum_t w(t) x(t) conj(y(t)).
"""

import logging
import math
from dataclasses import dataclass, field, replace
from typing import Any

import numpy as np
import scipy.linalg

from common.constants import (
    DEFAULT_CONTINUITY_CAP,
    DEFAULT_CONTINUITY_SAMPLES,
    FamilyKind,
)
from common.errors import (
    InvariantViolation,
    NotContinuous,
    NotInvariant,
    NotPositive,
    UnboundedOnSupport,
)
from common.models.report import CheckResult, check
from common.models.schema import DiagonalFormSpec, FormSpec, KernelFormSpec
from engine.commutative.base_algebra import BoundedFunction, CompactGrid, sup_norm
from engine.commutative.nets import CauchySchedule
from engine.commutative.quasi_model import QuasiElement, QuasiModel, SeminormFamily, embed, seminorm
from engine.commutative.sampling import random_bounded, random_quasi_positive
from engine.operators.operator_model import BoundedSetFamily, BoxSet, admissible_check

logger = logging.getLogger(__name__)

SUITE = "representation"
PSD_TOL = 1e-12


@dataclass(frozen=True)
class ContinuityBound:
    """
    |phi(a, b)| <= constant * p_lambda(a) * p_lambda(b).

    ``constant`` is the sharp bound of phi(a, a) / p_lambda(a)^2; ``sampled``
    is the largest ratio seen on random pairs, kept as a cross-check.
    """

    lambda_idx: int
    constant: float
    sampled: float | None = None

    def to_dict(self) -> dict[str, Any]:
        return {"lambda": self.lambda_idx, "constant": self.constant, "sampled": self.sampled}


@dataclass(frozen=True, eq=False)
class SesquilinearForm:
    """Diagonal positive invariant form with its continuity bound."""

    weights: np.ndarray
    continuity: ContinuityBound
    name: str = "form"

    def __call__(self, x: BoundedFunction, y: BoundedFunction) -> complex:
        return complex(np.sum(self.weights * x.values * y.values.conj()))

    def energy(self, a: QuasiElement) -> float:
        """phi~(a, a); +inf when a is infinite on a point of positive weight."""
        if np.any(a.infinite & (self.weights > 0)):
            return math.inf
        return float(np.sum(self.weights * np.abs(a.values) ** 2))

    @property
    def kernel(self) -> np.ndarray:
        return np.diag(self.weights)


def holder_constant(weights: np.ndarray, mass: np.ndarray, p: float) -> float:
    """
    Smallest C with sum w |a|^2 <= C (sum m |a|^p)^(2/p) for every a.

    With d = w / m^(2/p) this is max d for p <= 2 (attained on indicators)
    and the l^r norm of d with r = p / (p - 2) for p > 2 (Hoelder).
    """
    support = weights > 0
    if not support.any():
        return 0.0
    if np.any(mass[support] <= 0):
        return math.inf
    d = weights[support] / mass[support] ** (2.0 / p)
    if p <= 2.0:
        return float(d.max())
    r = p / (p - 2.0) if math.isfinite(p) else 1.0
    top = float(d.max())
    # scaled to keep d^r from overflowing
    return top * float(np.sum((d / top) ** r)) ** (1.0 / r)


def continuity_bound(weights: np.ndarray, family: SeminormFamily, cap: float = math.inf) -> ContinuityBound:
    """
    The seminorm with the smallest exact continuity constant.

    Raises:
        NotContinuous: if even the smallest constant exceeds ``cap``
    """
    constants = [
        holder_constant(weights, spec.weight.real * family.grid.weights, spec.p) for spec in family.specs
    ]
    index = int(np.argmin(constants))
    if not constants[index] <= cap:
        raise NotContinuous(
            f"continuity constant {constants[index]:.3e} exceeds {cap:.1e} for every seminorm",
            {"constant": constants[index], "lambda": index, "constants": constants},
        )
    return ContinuityBound(index, constants[index])


def _sampled_ratio(
    weights: np.ndarray,
    family: SeminormFamily,
    index: int,
    rng: np.random.Generator,
    samples: int,
) -> float:
    """Largest |phi(a, b)| / (p(a) p(b)) over random bounded pairs."""
    grid = family.grid
    ratio = 0.0
    for _ in range(samples):
        a, b = random_bounded(grid, rng), random_bounded(grid, rng)
        value = abs(np.sum(weights * a.values * b.values.conj()))
        denominator = family.evaluate(index, a.values) * family.evaluate(index, b.values)
        if denominator > 0:
            ratio = max(ratio, value / denominator)
    return ratio


def _complex(entry: float | tuple[float, float]) -> complex:
    if isinstance(entry, tuple | list):
        return complex(entry[0], entry[1])
    return complex(entry)


def _kernel_diagonal(kernel: np.ndarray) -> np.ndarray:
    """Diagonal of a psd invariant kernel."""
    scale = max(1.0, float(np.max(np.abs(kernel))))
    gap = float(np.max(np.abs(kernel - kernel.conj().T)))
    if gap > PSD_TOL * scale:
        raise NotPositive("kernel is not hermitian", {"gap": gap})
    lowest = float(scipy.linalg.eigvalsh(0.5 * (kernel + kernel.conj().T))[0])
    if lowest < -PSD_TOL * scale:
        raise NotPositive(f"kernel has eigenvalue {lowest:.3e}", {"eigenvalue": lowest})
    off = np.abs(kernel - np.diag(np.diag(kernel)))
    if off.max(initial=0.0) > PSD_TOL * scale:
        s, v = np.unravel_index(int(np.argmax(off)), off.shape)
        # a = e_v, x = e_v, y = e_s: phi(ax, y) = K[s, v] while phi(x, a* y) = 0
        raise NotInvariant(
            f"kernel entry ({s}, {v}) breaks invariance",
            {"a": int(v), "x": int(v), "y": int(s), "residual": float(off[s, v])},
        )
    return np.real(np.diag(kernel)).copy()


def make_form(
    spec: FormSpec | np.ndarray,
    model: QuasiModel,
    rng: np.random.Generator,
    samples: int = DEFAULT_CONTINUITY_SAMPLES,
    cap: float = DEFAULT_CONTINUITY_CAP,
    name: str = "form",
) -> SesquilinearForm:
    """
    Validate a form given as diagonal weights or as a full kernel.

    Raises:
        InvariantViolation: size does not match the grid
        NotPositive: negative weight or a kernel that is not psd
        NotInvariant: non-diagonal kernel, with the violating (a, x, y)
        NotContinuous: every seminorm has a continuity constant above the cap
        InvariantViolation: a sampled ratio beats the exact constant
    """
    n = model.grid.size
    if isinstance(spec, KernelFormSpec):
        kernel = np.array([[_complex(c) for c in row] for row in spec.matrix], dtype=np.complex128)
        if kernel.shape != (n, n):
            raise InvariantViolation(f"kernel must be {n}x{n}, got {kernel.shape}")
        weights = _kernel_diagonal(kernel)
    elif isinstance(spec, DiagonalFormSpec):
        weights = np.asarray(spec.weights, dtype=np.float64)
    else:
        weights = np.asarray(spec, dtype=np.float64)
    if weights.shape != (n,):
        raise InvariantViolation(f"expected {n} weights, got {weights.shape}")
    if weights.min() < 0:
        index = int(np.argmin(weights))
        raise NotPositive(
            f"negative weight at index {index}", {"index": index, "weight": float(weights[index])}
        )
    bound = continuity_bound(weights, model.family, cap)
    sampled = _sampled_ratio(weights, model.family, bound.lambda_idx, rng, samples)
    if sampled > bound.constant * (1.0 + 1e-9):
        raise InvariantViolation(
            f"sampled ratio {sampled:.6e} above the exact constant {bound.constant:.6e}",
            {"sampled": sampled, **bound.to_dict()},
        )
    bound = replace(bound, sampled=sampled)
    logger.debug("form accepted", extra={"form": name, **bound.to_dict()})
    return SesquilinearForm(weights, bound, name)


@dataclass(frozen=True, eq=False)
class GNSData:
    """H_phi is the space of functions on supp w; pi_phi acts diagonally."""

    form: SesquilinearForm
    support: np.ndarray
    sqrt_weights: np.ndarray = field(repr=False)

    @property
    def dim(self) -> int:
        return int(self.support.size)

    def lambda_map(self, y: BoundedFunction) -> np.ndarray:
        return self.sqrt_weights * y.values[self.support]

    def pi(self, x: BoundedFunction) -> np.ndarray:
        """Diagonal of pi_phi(x)."""
        return x.values[self.support]

    def pi_matrix(self, x: BoundedFunction) -> np.ndarray:
        return np.diag(self.pi(x))

    def inner(self, u: np.ndarray, v: np.ndarray) -> complex:
        return complex(np.vdot(v, u))

    def to_dict(self) -> dict[str, Any]:
        return {
            "name": self.form.name,
            "dim": self.dim,
            "continuity": self.form.continuity.to_dict(),
        }


def gns(phi: SesquilinearForm) -> GNSData:
    """Quotient by the null space {t : w(t) = 0}."""
    support = np.flatnonzero(phi.weights > 0)
    return GNSData(phi, support, np.sqrt(phi.weights[support]))


def gns_identity_residuals(
    g: GNSData, x: BoundedFunction, y: BoundedFunction, z: BoundedFunction
) -> dict[str, float]:
    """Residuals of the representation identities on one sample triple."""

    def gap(u: np.ndarray, v: np.ndarray) -> float:
        return float(np.max(np.abs(u - v), initial=0.0))

    return {
        "gns_multiplicative": gap(g.pi(x * y), g.pi(x) * g.pi(y)),
        "gns_star": gap(g.pi(x.adjoint()), g.pi(x).conj()),
        "gns_cyclic": gap(g.pi(x) * g.lambda_map(y), g.lambda_map(x * y)),
        "gns_form": abs(g.inner(g.pi(x) * g.lambda_map(y), g.lambda_map(z)) - g.form(x * y, z)),
    }


def gns_identity_check(
    g: GNSData,
    triples: list[tuple[BoundedFunction, BoundedFunction, BoundedFunction]],
    tol: float = PSD_TOL,
) -> list[CheckResult]:
    """Representation identities over sample triples, relative to the total weight."""
    scale = 1.0 + float(np.sum(g.form.weights))
    worst: dict[str, float] = {}
    witnesses: dict[str, dict[str, Any]] = {}
    for i, (x, y, z) in enumerate(triples):
        for key, value in gns_identity_residuals(g, x, y, z).items():
            relative = value / scale
            worst[key] = max(worst.get(key, 0.0), relative)
            if relative > tol and key not in witnesses:
                witnesses[key] = {"form": g.form.name, "triple": i, "residual": value}
    return [
        check(SUITE, f"{key}[{g.form.name}]", key not in witnesses, worst.get(key, 0.0), witnesses.get(key))
        for key in ("gns_multiplicative", "gns_star", "gns_cyclic", "gns_form")
    ]


def extend_rep(g: GNSData, a: QuasiElement, schedule: CauchySchedule | None = None) -> np.ndarray:
    """
    pi_phi(a) as the limit of pi_phi(a_k) over the truncations a_k of a at
    height 2^k, infinity points truncated to 2^k.

    The net runs until every finite value on the support is below the height
    plus one Cauchy window; its differences are measured in H_phi.

    Returns:
        the diagonal of pi_phi(a) on the support

    Raises:
        UnboundedOnSupport: if the truncation net is not Cauchy, i.e. a is
            infinite at a point of positive weight
    """
    schedule = schedule or CauchySchedule()
    target = a.values[g.support]
    blown = a.infinite[g.support]
    magnitude = np.where(blown, math.inf, np.abs(target))
    top = float(magnitude[~blown].max(initial=0.0))
    steps = max(math.ceil(math.log2(top)), 0) + schedule.window + 1 if top > 0 else schedule.window + 1

    history: list[float] = []
    previous = np.zeros_like(target)
    step = np.zeros_like(target)
    for k in range(steps + 1):
        height = 2.0 ** min(k, 1023)
        current = np.where(blown, height, target * np.minimum(1.0, height / np.maximum(magnitude, 1e-300)))
        step = current - previous
        history.append(float(np.linalg.norm(g.sqrt_weights * step)))
        previous = current
    if not schedule.converged(history):
        index = int(g.support[np.argmax(np.abs(step))])
        raise UnboundedOnSupport(
            f"element is infinite at index {index} where the form has weight {g.form.weights[index]:g}",
            {"index": index, "weight": float(g.form.weights[index]), "last_step": history[-1]},
        )
    logger.debug("truncation net settled", extra={"form": g.form.name, "steps": len(history)})
    return previous


def _pair_energy(form: SesquilinearForm, a: QuasiElement, b: QuasiElement) -> float:
    """phi~(a - b, a - b) in extended arithmetic; infinity against infinity counts as zero."""
    if np.any((a.infinite != b.infinite) & (form.weights > 0)):
        return math.inf
    both = ~(a.infinite | b.infinite)
    return float(np.sum(form.weights[both] * np.abs(a.values[both] - b.values[both]) ** 2))


def _image(g: GNSData, a: QuasiElement) -> np.ndarray | None:
    """pi_phi(a) lambda_phi(1), or None when a is unbounded on the support."""
    try:
        return extend_rep(g, a) * g.sqrt_weights
    except UnboundedOnSupport:
        return None


def _separates(g: GNSData, a: QuasiElement, b: QuasiElement, tol: float) -> bool:
    left, right = _image(g, a), _image(g, b)
    if left is not None and right is not None:
        return float(np.sum(np.abs(left - right) ** 2)) > tol
    return _pair_energy(g.form, a, b) > tol


def _nonzero(a: QuasiElement, tol: float) -> bool:
    return bool(a.infinite.any()) or float(np.abs(a.values).max(initial=0.0)) > tol


def vector_form(forms: list[SesquilinearForm], family: SeminormFamily) -> SesquilinearForm:
    """Form of the direct-sum cyclic vector; the weights add up."""
    weights = np.sum([f.weights for f in forms], axis=0)
    return SesquilinearForm(weights, continuity_bound(weights, family), "vector_form")


def sufficiency_and_faithfulness(
    forms: list[SesquilinearForm],
    samples: list[QuasiElement],
    family: SeminormFamily,
    tol: float = 1e-12,
) -> list[CheckResult]:
    """
    Sufficiency of the forms and faithfulness of their direct sum, on samples.

    Sufficient: every nonzero sample has phi~(a, a) > 0 for some form.
    Faithful: the direct sum of the GNS representations separates every pair
    of distinct samples. Both verdicts must agree on sample differences.
    """
    results: list[CheckResult] = []

    witness = None
    for i, a in enumerate(samples):
        if witness is None and _nonzero(a, tol) and all(f.energy(a) <= tol for f in forms):
            witness = {"sample": i, "forms": len(forms)}
    results.append(check(SUITE, "sufficient", witness is None, 0.0, witness))

    reps = [gns(f) for f in forms]
    faithful_witness = None
    agreement_witness = None
    for i in range(len(samples)):
        for j in range(i + 1, len(samples)):
            a, b = samples[i], samples[j]
            if a.allclose(b, rtol=0.0, atol=tol):
                continue
            separated = any(_separates(g, a, b, tol) for g in reps)
            if not separated and faithful_witness is None:
                faithful_witness = {"pair": [i, j]}
            detected = any(_pair_energy(f, a, b) > tol for f in forms)
            if detected != separated and agreement_witness is None:
                agreement_witness = {"pair": [i, j], "separated": separated, "energy": detected}
    results.append(check(SUITE, "faithful_direct_sum", faithful_witness is None, 0.0, faithful_witness))
    results.append(
        check(SUITE, "faithful_iff_sufficient", agreement_witness is None, 0.0, agreement_witness)
    )

    if forms:
        combined = vector_form(forms, family)
        witness = None
        for i, a in enumerate(samples):
            if witness is None and _nonzero(a, tol) and combined.energy(a) <= tol:
                witness = {"sample": i}
        results.append(check(SUITE, "vector_form_sufficient", witness is None, 0.0, witness))
    return results


def ball_family(
    g: GNSData,
    radii: tuple[float, ...],
    pool: list[BoundedFunction],
    generators: list[BoundedFunction],
) -> BoundedSetFamily:
    """B_phi: images lambda_phi(B_r) of sup-norm balls, boxes |v_t| <= r sqrt(w_t)."""
    return BoundedSetFamily(
        sets=[BoxSet(g.sqrt_weights, r) for r in radii],
        kind=FamilyKind.CUSTOM,
        pool=[g.lambda_map(y) for y in pool],
        generators=[g.pi(x) for x in generators],
    )


def _unit_ball_sample(grid: CompactGrid, rng: np.random.Generator) -> BoundedFunction:
    y = random_bounded(grid, rng)
    top = sup_norm(y)
    return BoundedFunction(grid, y.values / top) if top > 0 else y


def bounded_continuity_check(
    model: QuasiModel,
    forms: list[SesquilinearForm],
    rng: np.random.Generator,
    radii: tuple[float, ...] = (1.0, 2.0, 4.0),
    samples: int = 20,
) -> list[CheckResult]:
    """
    Ball hypothesis sup_{y in B_r} p(xy) <= c_B p(x) with c_B linear in r, and
    the resulting continuity of pi_phi against the bounded family B_phi.

    Every form carries an exact continuity constant, so the comparison is
    decided for each of them.
    """
    grid, family = model.grid, model.family
    xs = [random_bounded(grid, rng) for _ in range(samples)]
    unit = [_unit_ball_sample(grid, rng) for _ in range(samples)]
    results: list[CheckResult] = []

    constants: list[float] = []
    witness = None
    for r in radii:
        c_b = 0.0
        for i, x in enumerate(xs):
            for lam in range(len(family)):
                px = family.evaluate(lam, x.values)
                if px == 0:
                    continue
                # |xy| <= r |x| pointwise, attained by the constant y = r
                c_b = max(c_b, family.evaluate(lam, (x * r).values) / px)
                for y in unit:
                    ratio = family.evaluate(lam, (x * y * r).values) / px
                    if ratio > r * (1.0 + 1e-12) and witness is None:
                        witness = {"radius": r, "sample": i, "ratio": ratio}
        constants.append(c_b)
    results.append(
        check(SUITE, "ball_hypothesis", witness is None, max(constants, default=0.0), witness)
    )
    linear = all(abs(c - r) <= 1e-12 * r for c, r in zip(constants, radii, strict=True))
    results.append(
        check(SUITE, "ball_constant_linear", linear, 0.0, {"radii": list(radii), "constants": constants})
    )

    quasi = [embed(x) for x in xs]
    quasi += [
        random_quasi_positive(grid, rng, family.max_exponent, singular=k % 2 == 0)
        for k in range(samples)
    ]
    admissible_witness = None
    worst, continuity_witness = 0.0, None
    for k, phi in enumerate(forms):
        g = gns(phi)
        if g.dim == 0:
            continue
        verdict = admissible_check(ball_family(g, radii, unit, unit))
        if not verdict.ok and admissible_witness is None:
            admissible_witness = {"form": k, **(verdict.witness or {})}
        root_c = math.sqrt(phi.continuity.constant)
        lam = phi.continuity.lambda_idx
        for i, a in enumerate(quasi):
            try:
                image = extend_rep(g, a)
            except UnboundedOnSupport:
                continue
            p_a = seminorm(a, family, lam)
            for r, c_b in zip(radii, constants, strict=True):
                # sup over the box of ||pi(a) xi|| is attained at its corner
                lhs = r * float(np.linalg.norm(image * g.sqrt_weights))
                rhs = c_b * root_c * p_a
                excess = max(lhs - rhs, 0.0) / max(rhs, 1e-300)
                worst = max(worst, excess)
                if excess > 1e-9 and continuity_witness is None:
                    continuity_witness = {"form": k, "sample": i, "radius": r, "lhs": lhs, "rhs": rhs}
    results.append(
        check(SUITE, "bounded_family_admissible", admissible_witness is None, 0.0, admissible_witness)
    )
    results.append(check(SUITE, "ball_continuity", continuity_witness is None, worst, continuity_witness))
    return results

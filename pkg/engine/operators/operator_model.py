"""Finite truncations of the operator algebra C(S).

The dense domain is the span of the first N basis vectors and S = diag(s_i)
with every s_i >= 1. Unboundedness shows up only through S in the quasi-norm
||S^-1 X S^-1||.
"""

import logging
from collections.abc import Callable
from dataclasses import dataclass, field
from itertools import combinations
from typing import Any, Protocol

import numpy as np
import scipy.linalg

from common.constants import (
    DEFAULT_HERMITIAN_TOL,
    DEFAULT_PHYSICAL_DECAY_ORDER,
    FamilyKind,
    SeminormKind,
)
from common.errors import FClassViolation, InvariantViolation
from common.models.report import CheckResult, Verdict, check
from engine.commutative.functions import ScalarFunction
from engine.commutative.nets import CauchySchedule, limit_converged, richardson

logger = logging.getLogger(__name__)

SUITE = "opmodel"
# relative slack for inequalities exact in real arithmetic
SLACK = 1e-12


@dataclass(frozen=True, eq=False)
class TruncatedDomain:
    """Span of the first N basis vectors with weight operator S = diag(s)."""

    weights: np.ndarray

    def __post_init__(self) -> None:
        s = np.asarray(self.weights, dtype=np.float64)
        if s.ndim != 1 or s.size < 1:
            raise InvariantViolation("weight operator needs at least one entry")
        if not np.all(np.isfinite(s)) or np.any(s < 1.0):
            raise InvariantViolation("every weight s_i must be finite and >= 1")
        s.setflags(write=False)
        object.__setattr__(self, "weights", s)

    @property
    def dim(self) -> int:
        return int(self.weights.size)

    @property
    def S(self) -> np.ndarray:
        return np.diag(self.weights).astype(np.complex128)

    @property
    def S_inv(self) -> np.ndarray:
        return np.diag(1.0 / self.weights).astype(np.complex128)

    def basis_vector(self, i: int) -> np.ndarray:
        e = np.zeros(self.dim, dtype=np.complex128)
        e[i] = 1.0
        return e


@dataclass(frozen=True, eq=False)
class OperatorElement:
    """N x N complex matrix over a truncated domain."""

    matrix: np.ndarray
    domain: TruncatedDomain

    def __post_init__(self) -> None:
        m = np.array(self.matrix, dtype=np.complex128)
        n = self.domain.dim
        if m.shape != (n, n):
            raise InvariantViolation(f"expected a {n}x{n} matrix, got {m.shape}")
        if not np.all(np.isfinite(m)):
            raise InvariantViolation("matrix entries must be finite")
        m.setflags(write=False)
        object.__setattr__(self, "matrix", m)

    def adjoint(self) -> "OperatorElement":
        return OperatorElement(self.matrix.conj().T, self.domain)

    def __matmul__(self, other: "OperatorElement") -> "OperatorElement":
        return OperatorElement(self.matrix @ other.matrix, self.domain)

    def __add__(self, other: "OperatorElement") -> "OperatorElement":
        return OperatorElement(self.matrix + other.matrix, self.domain)

    def scale(self, factor: complex) -> "OperatorElement":
        return OperatorElement(self.matrix * factor, self.domain)

    @property
    def c_star_norm(self) -> float:
        """||X||_0, the spectral norm."""
        return float(scipy.linalg.norm(self.matrix, 2))

    def is_hermitian(self, tol: float = DEFAULT_HERMITIAN_TOL) -> bool:
        scale = max(1.0, float(np.max(np.abs(self.matrix))))
        return bool(np.max(np.abs(self.matrix - self.matrix.conj().T)) <= tol * scale)

    def commutes_with(self, other: "OperatorElement", tol: float = 1e-12) -> bool:
        gap = self.matrix @ other.matrix - other.matrix @ self.matrix
        scale = max(1.0, self.c_star_norm * other.c_star_norm)
        return bool(np.max(np.abs(gap)) <= tol * scale)


@dataclass(frozen=True, eq=False)
class OperatorModel:
    """Truncated domain plus the named elements of an operator model file."""

    domain: TruncatedDomain
    elements: dict[str, OperatorElement] = field(default_factory=dict)
    name: str = "model"

    def element(self, name: str) -> OperatorElement:
        try:
            return self.elements[name]
        except KeyError:
            known = ", ".join(sorted(self.elements)) or "none"
            raise KeyError(f"unknown element '{name}' (known: {known})") from None


@dataclass
class Commutant:
    """M0 = {X : X S^-1 = S^-1 X} with an explicit basis."""

    domain: TruncatedDomain
    basis: list[np.ndarray]

    @property
    def dimension(self) -> int:
        return len(self.basis)

    def contains(self, X: np.ndarray, tol: float = 1e-12) -> bool:
        s_inv = self.domain.S_inv
        gap = X @ s_inv - s_inv @ X
        return bool(np.max(np.abs(gap)) <= tol * max(1.0, float(np.max(np.abs(X)))))

    def project(self, X: np.ndarray) -> np.ndarray:
        """Orthogonal projection onto M0: keep entries with s_i == s_j."""
        return np.where(_same_weight(self.domain.weights), X, 0.0)


def _same_weight(s: np.ndarray) -> np.ndarray:
    return np.isclose(s[:, None], s[None, :], rtol=1e-12, atol=0.0)


def cs_algebra(domain: TruncatedDomain) -> Commutant:
    """
    Commutant of S^-1.

    X S^-1 = S^-1 X reads X_ij (1/s_j - 1/s_i) = 0 entrywise, so the matrix
    units E_ij with s_i == s_j form a basis.
    """
    n = domain.dim
    same = _same_weight(domain.weights)
    basis = []
    for i in range(n):
        for j in range(n):
            if same[i, j]:
                unit = np.zeros((n, n), dtype=np.complex128)
                unit[i, j] = 1.0
                basis.append(unit)
    return Commutant(domain, basis)


def brute_force_commutant(domain: TruncatedDomain) -> np.ndarray:
    """
    Null space of the commutation operator on vec(X).

    Returns:
        matrix whose columns span {vec(X) : X S^-1 - S^-1 X = 0}
    """
    n = domain.dim
    a = domain.S_inv
    identity = np.eye(n)
    operator = np.kron(identity, a) - np.kron(a.T, identity)
    return scipy.linalg.null_space(operator, rcond=1e-12)


def commutant_agreement(domain: TruncatedDomain) -> tuple[int, int, float]:
    """(basis size, brute-force rank, residual of the basis against the constraint)."""
    commutant = cs_algebra(domain)
    null = brute_force_commutant(domain)
    if commutant.basis:
        stacked = np.stack([b.reshape(-1, order="F") for b in commutant.basis], axis=1)
        combined = np.linalg.matrix_rank(np.hstack([stacked, null]), tol=1e-10)
    else:
        combined = null.shape[1]
    s_inv = domain.S_inv
    residual = max(
        (float(np.max(np.abs(b @ s_inv - s_inv @ b))) for b in commutant.basis), default=0.0
    )
    if combined != null.shape[1]:
        residual = max(residual, float("inf"))
    return commutant.dimension, int(null.shape[1]), residual


def quasi_norm(X: OperatorElement) -> float:
    """||S^-1 X S^-1||_0."""
    s_inv = X.domain.S_inv
    return float(scipy.linalg.norm(s_inv @ X.matrix @ s_inv, 2))


class VectorCollection(Protocol):
    """A bounded set of domain vectors."""

    finite: bool

    def corners(self) -> np.ndarray: ...

    def contains(self, v: np.ndarray, tol: float = 1e-12) -> bool: ...

    def image(self, operator: np.ndarray) -> "VectorCollection": ...

    @property
    def radius(self) -> float: ...


@dataclass(frozen=True, eq=False)
class VectorSet:
    """An explicit finite set of domain vectors, stored as rows."""

    vectors: np.ndarray
    finite: bool = field(default=True, init=False)

    def __post_init__(self) -> None:
        v = np.atleast_2d(np.asarray(self.vectors, dtype=np.complex128))
        object.__setattr__(self, "vectors", v)

    @classmethod
    def of(cls, *vectors: np.ndarray) -> "VectorSet":
        return cls(np.stack(vectors))

    def corners(self) -> np.ndarray:
        return self.vectors

    def contains(self, v: np.ndarray, tol: float = 1e-12) -> bool:
        gaps = np.max(np.abs(self.vectors - v[None, :]), axis=1)
        return bool(np.any(gaps <= tol * max(1.0, float(np.max(np.abs(v))))))

    def union(self, other: "VectorSet") -> "VectorSet":
        return VectorSet(np.vstack([self.vectors, other.vectors]))

    def image(self, operator: np.ndarray) -> "VectorSet":
        if operator.ndim == 1:
            return VectorSet(self.vectors * operator[None, :])
        return VectorSet(self.vectors @ operator.T)

    @property
    def radius(self) -> float:
        """sup of ||xi|| over the set."""
        return float(np.max(np.linalg.norm(self.vectors, axis=1)))

    def subset_of(self, other: VectorCollection) -> bool:
        return all(other.contains(v) for v in self.vectors)


@dataclass(frozen=True, eq=False)
class BoxSet:
    """{v : |v_i| <= r * scale_i}, an infinite bounded set given by a predicate."""

    scale: np.ndarray
    r: float
    finite: bool = field(default=False, init=False)

    def corners(self) -> np.ndarray:
        # a box lies inside another box iff its corner vector does
        return (self.r * np.asarray(self.scale, dtype=np.float64))[None, :].astype(np.complex128)

    def contains(self, v: np.ndarray, tol: float = 1e-12) -> bool:
        bound = self.r * np.asarray(self.scale)
        return bool(np.all(np.abs(v) <= bound * (1.0 + tol)))

    def image(self, operator: np.ndarray) -> "BoxSet":
        if operator.ndim == 1:
            diagonal = operator
        else:
            off = operator - np.diag(np.diag(operator))
            if np.any(off != 0):
                raise InvariantViolation("box sets only map under diagonal operators")
            diagonal = np.diag(operator)
        return BoxSet(np.asarray(self.scale) * np.abs(diagonal), self.r)

    @property
    def radius(self) -> float:
        return float(self.r * np.linalg.norm(self.scale))


def _inside(inner: VectorCollection, outer: VectorCollection) -> bool:
    if not inner.finite and outer.finite:
        return False
    return all(outer.contains(v) for v in inner.corners())


@dataclass
class BoundedSetFamily:
    """
    A family of bounded vector sets.

    With kind ``finite-sets`` every finite set of domain vectors is a member
    and ``sets`` only lists the representatives that checks iterate over.
    """

    sets: list[VectorCollection]
    kind: str = FamilyKind.FINITE_SETS
    pool: list[np.ndarray] = field(default_factory=list)
    generators: list[np.ndarray] = field(default_factory=list)

    def member(self, candidate: VectorCollection) -> bool:
        """Membership up to containment."""
        if self.kind == FamilyKind.FINITE_SETS:
            return bool(candidate.finite)
        return any(_inside(candidate, s) for s in self.sets)

    @property
    def finite_sets(self) -> list[VectorSet]:
        return [s for s in self.sets if isinstance(s, VectorSet)]


@dataclass
class Admissibility:
    ok: bool
    witness: dict[str, Any] | None = None


def admissible_check(B: BoundedSetFamily, generators: list[np.ndarray] | None = None) -> Admissibility:
    """
    Singletons of the pool, union majorants and stability under the generators
    of M0, each up to containment.
    """
    gens = B.generators if generators is None else generators
    for index, v in enumerate(B.pool):
        if not B.member(VectorSet.of(v)):
            return Admissibility(False, {"rule": "singletons", "pool_index": index})
    for i, j in combinations(range(len(B.sets)), 2):
        first, second = B.sets[i], B.sets[j]
        if isinstance(first, VectorSet) and isinstance(second, VectorSet):
            ok = B.member(first.union(second))
        else:
            ok = B.kind != FamilyKind.FINITE_SETS and any(
                _inside(first, s) and _inside(second, s) for s in B.sets
            )
        if not ok:
            return Admissibility(False, {"rule": "union", "sets": [i, j]})
    for i, s in enumerate(B.sets):
        for g, operator in enumerate(gens):
            if not B.member(s.image(operator)):
                return Admissibility(False, {"rule": "action", "set": i, "generator": g})
    return Admissibility(True)


def eval_seminorm(X: OperatorElement, M: VectorSet, kind: str = SeminormKind.STRONG) -> float:
    """
    Seminorms over a finite vector set.

    weak: sup |(X xi | eta)|; strong: sup ||X xi||; strong*: sup ||X xi|| + ||X^dagger xi||.
    """
    vectors = M.vectors
    images = vectors @ X.matrix.T
    if kind == SeminormKind.WEAK:
        # entry [k, l] = (X xi_k | xi_l)
        pairings = images @ vectors.conj().T
        return float(np.max(np.abs(pairings)))
    strong = np.linalg.norm(images, axis=1)
    if kind == SeminormKind.STRONG:
        return float(np.max(strong))
    if kind == SeminormKind.STRONG_STAR:
        adjoint = np.linalg.norm(vectors @ X.matrix.conj(), axis=1)
        return float(np.max(strong + adjoint))
    raise ValueError(f"unknown seminorm kind {kind!r}")


def _abs_operator(Y: np.ndarray) -> np.ndarray:
    """|Y| for hermitian Y."""
    values, vectors = scipy.linalg.eigh(Y)
    return (vectors * np.abs(values)) @ vectors.conj().T


def topology_order_check(
    samples: list[OperatorElement],
    B: BoundedSetFamily,
    commutant: Commutant | None = None,
    schedule: CauchySchedule | None = None,
) -> list[CheckResult]:
    """
    Column and row relations of the seminorm lattice plus product bounds.

    The uniform weak product bound is informational: it reports pass or
    indeterminate, never fail.
    """
    sets = B.finite_sets
    results: list[CheckResult] = []

    worst, witness = 0.0, None
    for i, X in enumerate(samples):
        for m, M in enumerate(sets):
            c = M.radius
            weak = eval_seminorm(X, M, SeminormKind.WEAK)
            strong = eval_seminorm(X, M, SeminormKind.STRONG)
            star = eval_seminorm(X, M, SeminormKind.STRONG_STAR)
            excess = max(weak - c * strong, c * strong - c * star, 0.0) / max(c * star, 1e-300)
            worst = max(worst, excess)
            if excess > SLACK and witness is None:
                witness = {"sample": i, "set": m, "weak": weak, "strong": strong, "strong_star": star}
    results.append(check(SUITE, "lattice_columns", witness is None, worst, witness))

    worst, witness = 0.0, None
    for a, b in combinations(range(len(sets)), 2):
        small, large = (a, b) if sets[a].subset_of(sets[b]) else (b, a)
        if not sets[small].subset_of(sets[large]):
            continue
        for i, X in enumerate(samples):
            for kind in (SeminormKind.WEAK, SeminormKind.STRONG, SeminormKind.STRONG_STAR):
                lhs = eval_seminorm(X, sets[small], kind)
                rhs = eval_seminorm(X, sets[large], kind)
                excess = max(lhs - rhs, 0.0) / max(rhs, 1e-300)
                worst = max(worst, excess)
                if excess > SLACK and witness is None:
                    witness = {"sample": i, "sets": [small, large], "kind": kind}
    results.append(check(SUITE, "lattice_rows", witness is None, worst, witness))

    worst, witness = 0.0, None
    for i, X in enumerate(samples):
        for m, M in enumerate(sets):
            bound = 2.0 * M.radius * X.c_star_norm
            excess = max(eval_seminorm(X, M, SeminormKind.STRONG_STAR) - bound, 0.0) / max(bound, 1e-300)
            worst = max(worst, excess)
            if excess > SLACK and witness is None:
                witness = {"sample": i, "set": m}
    results.append(check(SUITE, "strong_star_domination", witness is None, worst, witness))

    pairs = list(_commuting_pairs(samples))
    worst, witness = 0.0, None
    uniform_worst, uniform_witness = 0.0, None
    for i, (X, Y) in enumerate(pairs):
        abs_y = _abs_operator(Y.matrix)
        for m, M in enumerate(sets):
            # weak product bound against the quadratic form of |Y|
            lhs = eval_seminorm(X @ Y, M, SeminormKind.WEAK)
            forms = np.real(np.einsum("ki,ij,kj->k", M.vectors.conj(), abs_y, M.vectors))
            rhs = X.c_star_norm * float(np.max(forms))
            excess = max(lhs - rhs, 0.0) / max(rhs, 1e-300)
            for kind in (SeminormKind.STRONG, SeminormKind.STRONG_STAR):
                bound = X.c_star_norm * eval_seminorm(Y, M, kind)
                excess = max(excess, max(eval_seminorm(X @ Y, M, kind) - bound, 0.0) / max(bound, 1e-300))
            worst = max(worst, excess)
            if excess > SLACK and witness is None:
                witness = {"pair": i, "set": m}
            uniform_bound = X.c_star_norm * eval_seminorm(Y, M, SeminormKind.WEAK)
            uniform = max(lhs - uniform_bound, 0.0) / max(uniform_bound, 1e-300)
            uniform_worst = max(uniform_worst, uniform)
            if uniform > SLACK and uniform_witness is None:
                uniform_witness = {"pair": i, "set": m, "lhs": lhs, "bound": uniform_bound}
    results.append(check(SUITE, "commuting_product_bound", witness is None, worst, witness, f"{len(pairs)} pairs"))
    results.append(
        CheckResult(
            SUITE,
            "uniform_weak_product_bound",
            Verdict.PASS if uniform_witness is None else Verdict.INDETERMINATE,
            uniform_worst,
            uniform_witness,
            "empirical only",
        )
    )
    if commutant is not None:
        results.append(_unit_ball_limit(samples, commutant, schedule))
    return results


def _commuting_pairs(samples: list[OperatorElement]) -> list[tuple[OperatorElement, OperatorElement]]:
    """(X, Y) with Y hermitian and X a polynomial in Y, from each hermitian part."""
    pairs = []
    for X in samples:
        Y = OperatorElement(0.5 * (X.matrix + X.matrix.conj().T), X.domain)
        poly = Y @ Y + Y.scale(0.5)
        pairs.append((poly, Y))
    return pairs


def _in_unit_ball(P: np.ndarray, commutant: Commutant, tol: float = 1e-12) -> tuple[bool, float, float]:
    eigen = scipy.linalg.eigvalsh(0.5 * (P + P.conj().T))
    lowest, highest = float(eigen.min()), float(eigen.max())
    return commutant.contains(P) and lowest >= -tol and highest <= 1.0 + tol, lowest, highest


def _unit_ball_limit(
    samples: list[OperatorElement],
    commutant: Commutant,
    schedule: CauchySchedule | None = None,
) -> CheckResult:
    """
    The positive unit ball of M0 is closed under the net P_eps = (1 + eps) P (I + eps P)^-1.

    Each member is computed by a linear solve and must stay in the ball; the
    Richardson limit of the net must land in the ball and give back P.
    """
    schedule = schedule or CauchySchedule()
    worst, witness = 0.0, None
    for i, X in enumerate(samples):
        Xc = commutant.project(X.matrix)
        P = Xc.conj().T @ Xc
        top = float(scipy.linalg.norm(P, 2))
        if top == 0.0:
            continue
        P = P / top
        eye = np.eye(P.shape[0])
        history: list[float] = []
        previous: np.ndarray | None = None
        limit: np.ndarray | None = None
        for k, eps in enumerate(schedule.epsilons()):
            member = (1.0 + eps) * scipy.linalg.solve(eye + eps * P, P)
            inside, lowest, highest = _in_unit_ball(member, commutant)
            if not inside and witness is None:
                witness = {"sample": i, "step": k, "eigen_min": lowest, "eigen_max": highest}
            if previous is not None:
                history.append(float(np.max(np.abs(member - previous))))
                # a projection is a fixed point, leaving only roundoff to compare
                if schedule.converged(history) or history[-1] <= 64 * np.finfo(np.float64).eps:
                    limit = richardson(member, previous, schedule.base)
                    break
            previous = member
        if limit is None:
            witness = witness or {"sample": i, "reason": "net does not converge"}
            continue
        inside, lowest, highest = _in_unit_ball(limit, commutant, 1e-10)
        gap = float(np.max(np.abs(limit - P)))
        worst = max(worst, gap)
        if (not inside or gap > 1e-8) and witness is None:
            witness = {"sample": i, "eigen_min": lowest, "eigen_max": highest, "gap": gap}
    return check(SUITE, "unit_ball_weak_limits", witness is None, worst, witness)


@dataclass
class PositivityChainReport:
    """Positivity chain for one element: psd, bounded resolvent, positive closure."""

    psd: bool
    resolvent: bool
    closure: bool
    converse: bool
    witness: dict[str, Any] = field(default_factory=dict)

    @property
    def chain_holds(self) -> bool:
        """Each stage implies the next, and the converse reconstructs the element."""
        if not self.psd:
            return True
        return self.resolvent and self.closure and self.converse

    def to_dict(self) -> dict[str, Any]:
        return {
            "psd": self.psd,
            "resolvent": self.resolvent,
            "closure": self.closure,
            "converse": self.converse,
            "chain_holds": self.chain_holds,
            "witness": self.witness,
        }


def prop43_check(A: OperatorElement, tol: float = 1e-12) -> PositivityChainReport:
    """Check psd => (I+A)^-1 hermitian psd with norm <= 1 => A positive self-adjoint."""
    m = A.matrix
    scale = max(1.0, A.c_star_norm)
    if not A.is_hermitian(tol):
        gap = float(np.max(np.abs(m - m.conj().T)))
        return PositivityChainReport(False, False, False, False, {"stage": "psd", "hermitian_gap": gap})
    hermitian = 0.5 * (m + m.conj().T)
    eigenvalues, vectors = scipy.linalg.eigh(hermitian)
    if eigenvalues[0] < -tol * scale:
        return PositivityChainReport(
            False, False, False, False, {"stage": "psd", "eigenvalue": float(eigenvalues[0])}
        )
    n = A.domain.dim
    identity = np.eye(n)
    resolvent = scipy.linalg.inv(identity + hermitian)
    r_eigen = scipy.linalg.eigvalsh(0.5 * (resolvent + resolvent.conj().T))
    resolvent_ok = bool(
        np.max(np.abs(resolvent - resolvent.conj().T)) <= tol * 10
        and r_eigen.min() > 0.0
        and r_eigen.max() <= 1.0 + tol
    )
    closure = scipy.linalg.inv(resolvent) - identity
    closure_ok = bool(np.max(np.abs(closure - hermitian)) <= tol * scale * n)
    rebuilt = (vectors * eigenvalues) @ vectors.conj().T
    converse_ok = bool(np.max(np.abs(rebuilt - hermitian)) <= tol * scale * n) and _resolvent_net_converges(hermitian)
    witness: dict[str, Any] = {}
    if not resolvent_ok:
        witness = {"stage": "resolvent", "eigen_min": float(r_eigen.min()), "eigen_max": float(r_eigen.max())}
    elif not closure_ok:
        witness = {"stage": "closure"}
    elif not converse_ok:
        witness = {"stage": "converse"}
    return PositivityChainReport(True, resolvent_ok, closure_ok, converse_ok, witness)


def _resolvent_net_converges(A: np.ndarray) -> bool:
    """X_n = A (I + A/n)^-1 commutes with A, is psd and converges to A."""
    identity = np.eye(A.shape[0])
    scale = max(1.0, float(scipy.linalg.norm(A, 2)))
    for n in (1.0, 16.0, 1024.0):
        X = A @ scipy.linalg.inv(identity + A / n)
        if np.max(np.abs(X @ A - A @ X)) > 1e-10 * scale * scale:
            return False
        if scipy.linalg.eigvalsh(0.5 * (X + X.conj().T)).min() < -1e-10 * scale:
            return False
    # ||X_n - A|| = max lam^2 / (n + lam) over the spectrum
    spectrum = np.clip(scipy.linalg.eigvalsh(A), 0.0, None)
    distances = [float(np.max(spectrum**2 / (2.0**k + spectrum))) for k in range(1, 41)]
    return limit_converged(distances, 1e-8 * scale)


def physical_seminorm(
    x: OperatorElement,
    f: ScalarFunction,
    pi: Callable[[np.ndarray], np.ndarray] | None = None,
    decay_order: int = DEFAULT_PHYSICAL_DECAY_ORDER,
) -> float:
    """
    ||f(M) pi(x)||_0 with M the weight operator of the domain.

    Raises:
        FClassViolation: if f is not positive on the spectrum of M or decays
            slower than lam^-decay_order
    """
    s = x.domain.weights
    if f.growth > -decay_order:
        raise FClassViolation(
            f"{f.name} grows like lam^{f.growth:g}; lam^k f must stay bounded for k <= {decay_order}",
            {"function": f.name, "growth": f.growth, "order": decay_order},
        )
    values = f(s)
    if np.any(np.abs(values.imag) > 0) or np.any(values.real <= 0):
        raise FClassViolation(f"{f.name} is not positive on the spectrum of M", {"function": f.name})
    image = x.matrix if pi is None else pi(x.matrix)
    return float(scipy.linalg.norm(values.real[:, None] * image, 2))


def physical_inequality_check(
    f: ScalarFunction,
    xs: list[OperatorElement],
    ys: list[OperatorElement],
    commutant: Commutant,
    decay_order: int = DEFAULT_PHYSICAL_DECAY_ORDER,
) -> CheckResult:
    """p^f(xy) <= ||x||_0 p^f(y) for x in the commutant of M (samples are projected there)."""
    worst, witness = 0.0, None
    for i, (x, y) in enumerate(zip(xs, ys, strict=False)):
        xc = OperatorElement(commutant.project(x.matrix), x.domain)
        lhs = physical_seminorm(xc @ y, f, decay_order=decay_order)
        rhs = xc.c_star_norm * physical_seminorm(y, f, decay_order=decay_order)
        excess = max(lhs - rhs, 0.0) / max(rhs, 1e-300)
        worst = max(worst, excess)
        if excess > SLACK and witness is None:
            witness = {"pair": i, "lhs": lhs, "rhs": rhs}
    return check(SUITE, f"physical_inequality[{f.name}]", witness is None, worst, witness)


def random_operator(domain: TruncatedDomain, rng: np.random.Generator) -> OperatorElement:
    n = domain.dim
    return OperatorElement(rng.normal(size=(n, n)) + 1j * rng.normal(size=(n, n)), domain)


def random_psd(domain: TruncatedDomain, rng: np.random.Generator, top: float = 4.0) -> OperatorElement:
    """Hermitian psd matrix with spectral norm ``top``."""
    G = random_operator(domain, rng).matrix
    P = G @ G.conj().T
    return OperatorElement(top * P / scipy.linalg.norm(P, 2), domain)

"""Dispatcher - routes a validated run configuration to the engine suites."""

import asyncio
import logging
from pathlib import Path
from typing import Any, Literal

import numpy as np
import scipy.linalg
from pydantic import BaseModel, Field, ValidationError, model_validator

from common.constants import (
    DEFAULT_CAUCHY_DECAY,
    DEFAULT_CAUCHY_MAX_STEPS,
    DEFAULT_CAUCHY_TOL,
    DEFAULT_CAUCHY_WINDOW,
    DEFAULT_CLASS_SUP_THRESHOLD,
    DEFAULT_CONTINUITY_CAP,
    DEFAULT_CONTINUITY_SAMPLES,
    DEFAULT_INFINITY_MEASURE_CELLS,
    DEFAULT_MAX_CONCURRENCY,
    DEFAULT_PHYSICAL_DECAY_ORDER,
    DEFAULT_REPORT_PATH,
    DEFAULT_SAMPLES,
    DEFAULT_SCHEDULE_ALT_BASE,
    DEFAULT_SCHEDULE_BASE,
    DEFAULT_SEMINORM_TOL,
    FamilyKind,
    OperatorSuite,
)
from common.errors import FClassViolation, QCStarError, SchemaError
from common.models.report import CheckResult, SuiteReport, Verdict, check
from common.observability.logging import run_context
from engine.commutative.base_algebra import CompactGrid
from engine.commutative.axioms import verify_axioms
from engine.commutative.calculus import (
    apply_function,
    calculus_laws_check,
    class_index,
    multiplier_identity_residual,
    nth_root,
    partial_product_trace,
    root_residual,
    schedule_agreement,
    spectrum,
)
from engine.commutative.functions import ExponentialDecay, PowerFunction, ResolventPower, parse_function
from engine.commutative.gelfand_extension import (
    MixedElement,
    functional_laws_check,
    representation_pairs,
    transform,
    wedge_iso_check,
    well_definedness_check,
)
from engine.commutative.nets import CauchySchedule
from engine.commutative.quasi_model import QuasiElement, QuasiModel, embed
from engine.commutative.representation import (
    bounded_continuity_check,
    extend_rep,
    gns,
    gns_identity_check,
    make_form,
    sufficiency_and_faithfulness,
)
from engine.commutative.sampling import random_bounded, random_quasi_positive
from engine.operators.bridge import bridge_check, eigen_root, maximal_commutative
from engine.operators.operator_model import SUITE as OPMODEL_SUITE
from engine.operators.operator_model import (
    BoundedSetFamily,
    OperatorElement,
    OperatorModel,
    VectorSet,
    admissible_check,
    commutant_agreement,
    cs_algebra,
    physical_inequality_check,
    physical_seminorm,
    prop43_check,
    random_operator,
    random_psd,
    topology_order_check,
)
from engine.suite_pool import SuitePool
from runner.loader import load_forms, load_model

logger = logging.getLogger(__name__)

# Sample caps for the quadratic-cost suites
GELFAND_SAMPLES = 100
CALCULUS_SAMPLES = 20
GNS_SAMPLES = 40
CHARACTER_SAMPLES = 64
ROOT_TOL = 1e-8
OPERATOR_ROOT_TOL = 1e-10
BRUTE_FORCE_MAX_DIM = 16
OPERATOR_SUITES = (
    OperatorSuite.COMMUTANT,
    OperatorSuite.LATTICE,
    OperatorSuite.PROP43,
    OperatorSuite.PHYSICAL,
    OperatorSuite.BRIDGE,
)


class RunConfig(BaseModel):
    """One invocation: command, inputs, tolerances, sampling and output."""

    command: Literal[
        "axioms", "spectrum", "calculus", "root", "product", "gelfand", "gns", "opmodel"
    ]
    model: Path
    out: Path = Path(DEFAULT_REPORT_PATH)
    format: Literal["json", "csv"] = "json"
    seed: int = Field(default=0, ge=0, lt=2**64)
    tol: float = Field(default=DEFAULT_SEMINORM_TOL, gt=0)
    cauchy_tol: float = Field(default=DEFAULT_CAUCHY_TOL, gt=0)
    infinity_measure_cells: int = Field(default=DEFAULT_INFINITY_MEASURE_CELLS, ge=1)
    schedule_base: float = Field(default=DEFAULT_SCHEDULE_BASE, gt=1)
    schedule_alt_base: float = Field(default=DEFAULT_SCHEDULE_ALT_BASE, gt=1)
    cauchy_decay: float = Field(default=DEFAULT_CAUCHY_DECAY, gt=0, lt=1)
    cauchy_window: int = Field(default=DEFAULT_CAUCHY_WINDOW, ge=1)
    cauchy_max_steps: int = Field(default=DEFAULT_CAUCHY_MAX_STEPS, ge=2)
    class_sup_threshold: float = Field(default=DEFAULT_CLASS_SUP_THRESHOLD, gt=0)
    samples: int = Field(default=DEFAULT_SAMPLES, ge=1)
    continuity_samples: int = Field(default=DEFAULT_CONTINUITY_SAMPLES, ge=1)
    continuity_cap: float = Field(default=DEFAULT_CONTINUITY_CAP, gt=0)
    physical_decay_order: int = Field(default=DEFAULT_PHYSICAL_DECAY_ORDER, ge=0)
    max_concurrency: int = Field(default=DEFAULT_MAX_CONCURRENCY, ge=1)
    n: int = Field(default=1, ge=1)
    element: str | None = None
    left: str | None = None
    right: str | None = None
    a: str | None = None
    x: str | None = None
    y: str | None = None
    forms: Path | None = None
    function: str | None = None
    suite: Literal["commutant", "lattice", "prop43", "physical", "bridge", "all"] = "all"

    @model_validator(mode="after")
    def _window_fits(self) -> "RunConfig":
        if self.cauchy_window >= self.cauchy_max_steps:
            raise ValueError("cauchy_window must be smaller than cauchy_max_steps")
        return self

    @property
    def schedule(self) -> CauchySchedule:
        return CauchySchedule(
            base=self.schedule_base,
            alt_base=self.schedule_alt_base,
            tol=self.cauchy_tol,
            decay=self.cauchy_decay,
            window=self.cauchy_window,
            max_steps=self.cauchy_max_steps,
        )


def _failure(command: str, error: Exception) -> CheckResult:
    extra = error.witness if isinstance(error, QCStarError) else {}
    return CheckResult(
        suite=command,
        check="computation",
        verdict=Verdict.FAIL,
        witness={"error": type(error).__name__, "message": str(error), **extra},
        detail=str(error) or type(error).__name__,
    )


def _mixed_samples(grid: CompactGrid, rng: np.random.Generator, count: int, p_max: float) -> list[MixedElement]:
    return [
        MixedElement(random_quasi_positive(grid, rng, p_max), random_bounded(grid, rng), random_bounded(grid, rng))
        for _ in range(count)
    ]


def _sampled_characters(grid: CompactGrid, samples: list[MixedElement]) -> list[Any]:
    """Evenly spread characters plus every infinity point of the samples."""
    indices = set(np.linspace(0, grid.size - 1, min(CHARACTER_SAMPLES, grid.size)).astype(int).tolist())
    for m in samples:
        indices.update(m.a.infinity_points)
    return [grid.character(i) for i in sorted(indices)]


def _gelfand_case(model: QuasiModel, seed: np.random.SeedSequence, count: int) -> list[CheckResult]:
    rng = np.random.default_rng(seed)
    p_max = model.family.max_exponent
    samples = _mixed_samples(model.grid, rng, count, p_max)
    results = functional_laws_check(samples, _sampled_characters(model.grid, samples))
    results.extend(well_definedness_check(representation_pairs(model.grid, rng, count, p_max)))
    return results


def _wedge_case(model: QuasiModel, seed: np.random.SeedSequence, count: int) -> list[CheckResult]:
    rng = np.random.default_rng(seed)
    grid, p_max = model.grid, model.family.max_exponent
    quasi = [random_quasi_positive(grid, rng, p_max, singular=bool(i % 2 == 0)) for i in range(count)]
    bounded = [random_bounded(grid, rng) for _ in range(count)]
    return wedge_iso_check(quasi, bounded)


def _calculus_case(
    model: QuasiModel,
    seed: np.random.SeedSequence,
    count: int,
    schedule: CauchySchedule,
    threshold: float,
) -> list[CheckResult]:
    rng = np.random.default_rng(seed)
    p_max = model.family.max_exponent
    samples = [random_quasi_positive(model.grid, rng, p_max) for _ in range(count)]
    return calculus_laws_check(samples, model.family, schedule=schedule, threshold=threshold)


class Dispatcher:
    """Runs one command against one loaded model."""

    def __init__(self, config: RunConfig) -> None:
        self.config = config
        self._model: QuasiModel | OperatorModel | None = None

    @property
    def model(self) -> QuasiModel | OperatorModel:
        if self._model is None:
            self._model = load_model(self.config.model, self.config.infinity_measure_cells)
        return self._model

    def _grid_model(self) -> QuasiModel:
        if not isinstance(self.model, QuasiModel):
            raise SchemaError(f"'{self.config.command}' needs a grid model with 'space'", path="space")
        return self.model

    def _operator_model(self) -> OperatorModel:
        if not isinstance(self.model, OperatorModel):
            raise SchemaError(f"'{self.config.command}' needs an operator model with 'dim'", path="dim")
        return self.model

    def _named(self, name: str | None, flag: str) -> QuasiElement | OperatorElement:
        if name is None:
            raise SchemaError(f"'{self.config.command}' needs --{flag}")
        try:
            return self.model.element(name)
        except KeyError as e:
            raise SchemaError(str(e.args[0]), path=f"elements.{name}") from e

    def _rng(self) -> np.random.Generator:
        return np.random.default_rng(self.config.seed)

    def run(self) -> SuiteReport:
        """
        Execute the configured command.

        Engine errors and numerical breakdowns (singular matrices, overflow,
        invalid arguments) become a failing ``computation`` check; schema,
        option and OS errors propagate to the caller.
        """
        command = self.config.command
        handler = getattr(self, f"_{command}")
        model_name = self.config.model.stem
        with run_context(command=command, seed=self.config.seed, model=model_name):
            report = SuiteReport(command=command)
            try:
                handler(report)
            except (SchemaError, ValidationError):
                raise
            except (QCStarError, ArithmeticError, ValueError) as e:
                # numpy.linalg.LinAlgError is a ValueError
                logger.warning("computation failed", extra={"error": type(e).__name__, "detail": str(e)})
                report.result = None
                report.checks.append(_failure(command, e))
            logger.info(
                "command finished",
                extra={"checks": len(report.checks), "failures": len(report.failures)},
            )
        return report

    # commands

    def _axioms(self, report: SuiteReport) -> None:
        model = self._grid_model()
        report.checks.extend(asyncio.run(self._axiom_cases(model)))

    async def _axiom_cases(self, model: QuasiModel) -> list[CheckResult]:
        samples = self.config.samples
        axiom_seed, gelfand_seed, wedge_seed, calculus_seed = np.random.SeedSequence(self.config.seed).spawn(4)
        async with SuitePool(self.config.max_concurrency) as pool:
            pool.submit(
                "axioms",
                lambda: verify_axioms(model, np.random.default_rng(axiom_seed), samples, self.config.tol).checks,
            )
            pool.submit("gelfand", _gelfand_case, model, gelfand_seed, min(samples, GELFAND_SAMPLES))
            pool.submit("wedge", _wedge_case, model, wedge_seed, min(samples, GELFAND_SAMPLES))
            pool.submit(
                "calculus",
                _calculus_case,
                model,
                calculus_seed,
                min(samples, CALCULUS_SAMPLES),
                self.config.schedule,
                self.config.class_sup_threshold,
            )
            cases = await pool.wait_all()
        return [result for case in cases for result in case]

    def _spectrum(self, report: SuiteReport) -> None:
        element = self._named(self.config.element, "element")
        if isinstance(element, OperatorElement):
            bridge = maximal_commutative(element)
            report.result = {
                "element": self.config.element,
                "eigenvalues": bridge.eigenvalues,
                "contains_infinity": False,
            }
            return
        report.result = {"element": self.config.element, **spectrum(element).to_dict()}

    def _calculus(self, report: SuiteReport) -> None:
        if self.config.function is None:
            raise SchemaError("'calculus' needs a FUNCTION")
        f = parse_function(self.config.function)
        element = self._named(self.config.element, "element")
        n = self.config.n
        if isinstance(element, OperatorElement):
            image = maximal_commutative(element).apply(f, n)
            report.result = {"function": f.name, "n": n, "matrix": image.matrix}
            return
        model = self._grid_model()
        threshold = self.config.class_sup_threshold
        result = apply_function(f, element, n, model.family, threshold=threshold)
        report.result = {
            "function": f.name,
            "n": n,
            "class_index": class_index(f, element, n, threshold),
            "element": result.to_json(),
        }

    def _root(self, report: SuiteReport) -> None:
        element = self._named(self.config.element, "element")
        n = self.config.n
        if isinstance(element, OperatorElement):
            bridge = maximal_commutative(element)
            root = bridge.root(n)
            power = root.matrix
            for _ in range(n - 1):
                power = power @ root.matrix
            scale = max(1.0, element.c_star_norm)
            oracle_gap = float(np.max(np.abs(root.matrix - eigen_root(element, n)))) / scale
            power_gap = float(np.max(np.abs(power - element.matrix))) / scale
            report.extend(
                [
                    check(OPMODEL_SUITE, "root_matches_eigen_oracle", oracle_gap <= OPERATOR_ROOT_TOL, oracle_gap),
                    check(OPMODEL_SUITE, "root_reproduces", power_gap <= OPERATOR_ROOT_TOL, power_gap),
                ]
            )
            report.result = {"n": n, "matrix": root.matrix}
            return
        model = self._grid_model()
        root_element = nth_root(element, n)
        residual = root_residual(element, n, model.family, self.config.schedule)
        report.extend([check("calculus", "root_reproduces", residual <= ROOT_TOL, residual)])
        report.result = {"n": n, "root": root_element.to_json()}

    def _product(self, report: SuiteReport) -> None:
        left = self._named(self.config.left, "left")
        right = self._named(self.config.right, "right")
        if isinstance(left, OperatorElement) and isinstance(right, OperatorElement):
            product = maximal_commutative(left).product(right)
            gap = float(np.max(np.abs(product.matrix - left.matrix @ right.matrix)))
            gap /= max(1.0, left.c_star_norm * right.c_star_norm)
            report.extend([check(OPMODEL_SUITE, "bridge_product", gap <= OPERATOR_ROOT_TOL, gap)])
            report.result = {"matrix": product.matrix}
            return
        assert isinstance(left, QuasiElement) and isinstance(right, QuasiElement)
        model = self._grid_model()
        schedule = self.config.schedule
        trace = partial_product_trace(left, right, model.family, schedule)
        agreement = schedule_agreement(left, right, model.family, schedule)
        identity = multiplier_identity_residual(left, right, model.family, product=trace.limit)
        scale = max(1.0, float(np.max(np.abs(trace.limit.values), initial=0.0)))
        report.extend(
            [
                check("calculus", "schedule_agreement", agreement / scale <= 1e-9, agreement / scale),
                check("calculus", "multiplier_identity", identity <= 1e-10, identity),
            ]
        )
        report.result = {"trace": trace.to_dict(), "product": trace.limit.to_json()}

    def _gelfand(self, report: SuiteReport) -> None:
        self._grid_model()
        a = self._named(self.config.a, "a")
        x = self._named(self.config.x, "x")
        y = self._named(self.config.y, "y")
        assert isinstance(a, QuasiElement) and isinstance(x, QuasiElement) and isinstance(y, QuasiElement)
        image = transform(MixedElement(a, x.to_bounded(), y.to_bounded()))
        report.result = {"transform": image.to_json(), "infinity_set": image.infinity_set}

    def _gns(self, report: SuiteReport) -> None:
        model = self._grid_model()
        if self.config.forms is None:
            raise SchemaError("'gns' needs --forms")
        form_file = load_forms(self.config.forms)
        rng = self._rng()
        forms = [
            make_form(spec, model, rng, self.config.continuity_samples, self.config.continuity_cap, name=f"form{i}")
            for i, spec in enumerate(form_file.forms)
        ]
        count = min(self.config.samples, GNS_SAMPLES)
        grid, p_max = model.grid, model.family.max_exponent
        triples = [
            (random_bounded(grid, rng), random_bounded(grid, rng), random_bounded(grid, rng)) for _ in range(count)
        ]
        summaries = []
        for form in forms:
            g = gns(form)
            report.extend(gns_identity_check(g, triples))
            extensions = {}
            for name, element in sorted(model.elements.items()):
                try:
                    extend_rep(g, element, self.config.schedule)
                    extensions[name] = "bounded"
                except QCStarError as e:
                    extensions[name] = type(e).__name__
            summaries.append({**g.to_dict(), "extensions": extensions})
        samples = [embed(random_bounded(grid, rng)) for _ in range(count // 2)]
        samples += [random_quasi_positive(grid, rng, p_max) for _ in range(count - count // 2)]
        report.extend(sufficiency_and_faithfulness(forms, samples, model.family))
        report.extend(bounded_continuity_check(model, forms, rng))
        report.result = {"forms": summaries}

    def _opmodel(self, report: SuiteReport) -> None:
        model = self._operator_model()
        suite = self.config.suite
        rng = self._rng()
        chosen = OPERATOR_SUITES if suite == OperatorSuite.ALL else (suite,)
        for name in chosen:
            report.extend(getattr(self, f"_opmodel_{name}")(model, rng))

    def _opmodel_commutant(self, model: OperatorModel, rng: np.random.Generator) -> list[CheckResult]:
        domain = model.domain
        if domain.dim > BRUTE_FORCE_MAX_DIM:
            return [
                CheckResult(
                    OPMODEL_SUITE,
                    "commutant_brute_force",
                    Verdict.INDETERMINATE,
                    detail=f"dim {domain.dim} above {BRUTE_FORCE_MAX_DIM}",
                )
            ]
        size, rank, residual = commutant_agreement(domain)
        witness = {"basis": size, "null_rank": rank}
        return [check(OPMODEL_SUITE, "commutant_brute_force", size == rank and residual <= 1e-10, residual, witness)]

    def _opmodel_lattice(self, model: OperatorModel, rng: np.random.Generator) -> list[CheckResult]:
        domain = model.domain
        commutant = cs_algebra(domain)
        count = self.config.samples
        samples = list(model.elements.values()) + [random_operator(domain, rng) for _ in range(count)]

        def vectors(k: int) -> VectorSet:
            return VectorSet(rng.normal(size=(k, domain.dim)) + 1j * rng.normal(size=(k, domain.dim)))

        small = vectors(3)
        sets = [small, small.union(vectors(2)), vectors(4)]
        B = BoundedSetFamily(
            sets=list(sets),
            kind=FamilyKind.FINITE_SETS,
            pool=[domain.basis_vector(i) for i in range(domain.dim)],
            generators=commutant.basis[:4],
        )
        admissible = admissible_check(B)
        results = [check(OPMODEL_SUITE, "finite_sets_admissible", admissible.ok, 0.0, admissible.witness)]
        results.extend(topology_order_check(samples, B, commutant, self.config.schedule))
        return results

    def _opmodel_prop43(self, model: OperatorModel, rng: np.random.Generator) -> list[CheckResult]:
        domain = model.domain
        candidates = list(model.elements.items())
        candidates += [(f"psd{i}", random_psd(domain, rng)) for i in range(self.config.samples)]
        witness = None
        for name, element in candidates:
            outcome = prop43_check(element)
            if not outcome.chain_holds and witness is None:
                witness = {"element": name, **outcome.to_dict()}
        return [check(OPMODEL_SUITE, "positivity_chain", witness is None, 0.0, witness, f"{len(candidates)} elements")]

    def _opmodel_physical(self, model: OperatorModel, rng: np.random.Generator) -> list[CheckResult]:
        domain = model.domain
        commutant = cs_algebra(domain)
        count = self.config.samples
        xs = [random_operator(domain, rng) for _ in range(count)]
        ys = [random_operator(domain, rng) for _ in range(count)]
        order = self.config.physical_decay_order
        results = [
            physical_inequality_check(f, xs, ys, commutant, order) for f in (ResolventPower(2), ExponentialDecay(1.0))
        ]
        try:
            physical_seminorm(xs[0], PowerFunction(0.5), decay_order=order)
            rejected = False
        except FClassViolation:
            rejected = True
        results.append(check(OPMODEL_SUITE, "physical_rejects_growth", rejected, 0.0, {"function": "pow:1/2"}))
        return results

    def _opmodel_bridge(self, model: OperatorModel, rng: np.random.Generator) -> list[CheckResult]:
        positive = {}
        for name, element in sorted(model.elements.items()):
            hermitian = 0.5 * (element.matrix + element.matrix.conj().T)
            if element.is_hermitian() and scipy.linalg.eigvalsh(hermitian).min() >= -1e-12 * max(1.0, element.c_star_norm):
                positive[name] = element
        positive["random_psd"] = random_psd(model.domain, rng)
        return bridge_check(positive)


def dispatch(config: RunConfig) -> SuiteReport:
    """Build the report for one run; writing it is the caller's job."""
    return Dispatcher(config).run()

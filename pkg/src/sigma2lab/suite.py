"""Identity checks, the per-model checker and the suite orchestrator."""

from __future__ import annotations

import json
import math
import zlib
from collections.abc import Callable, Iterable, Mapping, Sequence
from concurrent.futures import ThreadPoolExecutor
from dataclasses import dataclass, field
from typing import Any, NamedTuple

import numpy as np

from .exceptions import NotEinsteinError, Sigma2LabError, UnknownIdentityError
from .fields import MetricField, ScalarField
from .geometry import CurvatureFrame, curvature_frame, divergence_sym2, frame_from_metric
from .jets import Jet
from .logger import get_logger, log_duration
from .models import ModelKind, ModelSpec, get_model, random_one_form_field, random_scalar_field, random_sym2_field
from .operators import (
    cpe_residual,
    cpe_trace_identity,
    einstein_lambda_star_closed_form,
    gamma_linearized,
    gamma_star,
    gamma_star_divergence_defect,
    lambda_linearized,
    lambda_star,
    lambda_star_divergence_defect,
    lambda_star_one_closed_form,
    lambda_star_one_identities,
    laplacian_eigen_relation,
    obata_residual,
    ricci_eigenvalues,
    sigma2,
    sigma2_from_schouten,
    static_trace_identity,
    trace_lambda_star_direct,
    traceless_ricci,
    vacuum_static_residual,
)
from .quadrature import Grid, Pairing, adjointness_pairings, build_grid, fd_cross_check, integrate, rayleigh_identity
from .status import ReportStatus

log = get_logger(__name__)

# Central-difference step for the linearization oracles
LINEARIZATION_STEP = 1e-5
# Step for differentiating curvature in the Lambda*(1) finite-difference oracle
FD_LAMBDA_STEP = 1e-3
# Negative controls must stay at least this far from zero
CONTROL_THRESHOLD = 1e-3
# Gram eigenvalues of the sphere kernel must exceed this fraction of vol / (n + 1)
GRAM_FRACTION = 0.1
SCALING_FACTOR = 2.0


@dataclass(frozen=True)
class SuiteSettings:
    """Knobs shared by every identity check of a run."""

    seed: int = 42
    points: int | None = None
    functions: int = 5
    pairs: int = 10
    chunk_size: int = 512
    workers: int = 1
    tolerances: Mapping[str, float] = field(default_factory=dict)
    resolutions: Mapping[str, Sequence[int]] = field(default_factory=dict)
    identities: tuple[str, ...] | None = None


class CheckOutcome(NamedTuple):
    residual: float
    points_or_grid: str
    message: str = ""


@dataclass
class IdentityReport:
    """Result of one identity check on one model."""

    model: str
    identity: str
    points_or_grid: str
    max_residual: float
    tolerance: float
    status: ReportStatus
    message: str = ""
    wall_time_ms: int = 0

    @property
    def passed(self) -> bool:
        return self.status is ReportStatus.PASS

    def to_dict(self, timings: bool = False) -> dict[str, Any]:
        """JSON-ready mapping; non-finite residuals become null."""
        data: dict[str, Any] = {
            "model": self.model,
            "identity": self.identity,
            "points_or_grid": self.points_or_grid,
            "max_residual": self.max_residual if math.isfinite(self.max_residual) else None,
            "tolerance": self.tolerance,
            "pass": self.passed,
            "status": self.status.value,
            "message": self.message,
        }
        if timings:
            data["wall_time_ms"] = self.wall_time_ms
        return data


def _sup(values: Jet | np.ndarray | float) -> float:
    array = values.value if isinstance(values, Jet) else np.asarray(values)
    return float(np.max(np.abs(array), initial=0.0))


def _relative(difference: Jet | np.ndarray, reference: Jet | np.ndarray | float) -> float:
    return _sup(difference) / max(1.0, _sup(reference))


def _lower_bound(observed: float) -> float:
    """Encode ``observed >= CONTROL_THRESHOLD`` as a residual that passes at tolerance 1."""
    return CONTROL_THRESHOLD / observed if observed > 0.0 else math.inf


def _described(points: np.ndarray, extra: str = "") -> str:
    count = len(points)
    label = f"{count} point" + ("" if count == 1 else "s")
    return f"{label} x {extra}" if extra else label


class IdentityChecker:
    """Runs identity checks against one model with reproducible random inputs.

    Each identity draws from its own generator seeded by (seed, model, identity),
    so selecting a subset of identities does not change the inputs of the rest.
    """

    def __init__(self, model: ModelSpec, settings: SuiteSettings | None = None):
        self.model = model
        self.settings = settings or SuiteSettings()
        self._grid: Grid | None = None
        self._kernel_moments: np.ndarray | None = None

    def rng(self, identity: str) -> np.random.Generator:
        entropy = [self.settings.seed, zlib.crc32(self.model.name.encode()), zlib.crc32(identity.encode())]
        return np.random.default_rng(entropy)

    def sample(self, rng: np.random.Generator, default: int) -> np.ndarray:
        return self.model.sample_points(rng, self.settings.points or default)

    def frame(self, points: np.ndarray, order: int) -> CurvatureFrame:
        return curvature_frame(self.model.chart, points, order)

    def scalar_fields(self, rng: np.random.Generator) -> list[ScalarField]:
        return [random_scalar_field(self.model, rng, f"f{index}") for index in range(self.settings.functions)]

    @property
    def grid(self) -> Grid:
        if self._grid is None:
            self._grid = build_grid(self.model, self.settings.resolutions.get(self.model.name))
        return self._grid

    @property
    def integration(self) -> dict[str, int]:
        return {"chunk_size": self.settings.chunk_size, "workers": self.settings.workers}

    def grid_label(self) -> str:
        return f"grid {self.grid.describe()} ({self.grid.size} nodes)"

    def run(self, identities: Iterable[str] | None = None, report_inapplicable: bool = False) -> list[IdentityReport]:
        """Run the selected identities that apply to this model.

        Without a selection every applicable identity runs, except grid sweeps
        whose ``routine`` predicate leaves this model out.
        """
        explicit = identities is not None
        reports = []
        for check in select_checks(identities):
            if check.applies(self.model):
                if explicit or check.routine(self.model):
                    reports.append(self.execute(check))
            elif report_inapplicable:
                reports.append(
                    IdentityReport(
                        model=self.model.name,
                        identity=check.identity,
                        points_or_grid="-",
                        max_residual=math.nan,
                        tolerance=self.tolerance(check),
                        status=ReportStatus.SKIPPED,
                        message=f"not applicable to {self.model.kind} models",
                    )
                )
        return reports

    def tolerance(self, check: IdentityCheck) -> float:
        return float(self.settings.tolerances.get(check.identity, check.tolerance))

    def execute(self, check: IdentityCheck) -> IdentityReport:
        """Run one check; exceptions become skipped or error reports instead of propagating."""
        tolerance = self.tolerance(check)
        label = f"{self.model.name}/{check.identity}"
        with log_duration(label, log) as timing:
            try:
                outcome = check.run(self)
                status = ReportStatus.from_residual(outcome.residual, tolerance)
            except NotEinsteinError as e:
                log.warning("Skipping %s: %s", label, e.message)
                outcome, status = CheckOutcome(math.nan, "-", e.message), ReportStatus.SKIPPED
            except Exception as e:
                log.error("Error checking %s: %s", label, e)
                outcome, status = CheckOutcome(math.inf, "-", f"{type(e).__name__}: {e}"), ReportStatus.ERROR

        if status is ReportStatus.FAIL:
            log.error("%s: residual %.3e exceeds tolerance %.1e", label, outcome.residual, tolerance)
        return IdentityReport(
            model=self.model.name,
            identity=check.identity,
            points_or_grid=outcome.points_or_grid,
            max_residual=float(outcome.residual),
            tolerance=tolerance,
            status=status,
            message=outcome.message,
            wall_time_ms=int(round(timing["elapsed_ms"])),
        )

    # Curvature

    def check_curvature_ground_truth(self) -> CheckOutcome:
        points = self.sample(self.rng("curvature-ground-truth"), 20)
        frame = self.frame(points, 2)
        known = self.model.known
        scalar = float(known.scalar or 0.0)
        residual = _relative(frame.scalar.value - scalar, scalar)
        if known.ricci_eigenvalues is not None:
            expected = np.sort(np.asarray(known.ricci_eigenvalues))
            residual = max(residual, _relative(ricci_eigenvalues(frame) - expected, expected))
        return CheckOutcome(residual, _described(points))

    def check_riemann_flat(self) -> CheckOutcome:
        points = self.sample(self.rng("riemann-flat"), 20)
        return CheckOutcome(_sup(self.frame(points, 2).riemann.value), _described(points))

    def check_riemann_symmetries(self) -> CheckOutcome:
        points = self.sample(self.rng("riemann-symmetries"), 20)
        frame = self.frame(points, 2)
        riemann = frame.riemann.value
        defects = [
            riemann + np.einsum("bacd...->abcd...", riemann),
            riemann + np.einsum("abdc...->abcd...", riemann),
            riemann - np.einsum("cdab...->abcd...", riemann),
            riemann + np.einsum("bcad...->abcd...", riemann) + np.einsum("cabd...->abcd...", riemann),
        ]
        ricci = frame.ricci.value
        residual = max(_sup(defect) for defect in defects) / max(1.0, _sup(riemann))
        residual = max(residual, _relative(ricci - np.swapaxes(ricci, 0, 1), ricci))
        return CheckOutcome(residual, _described(points))

    def check_bianchi_contracted(self) -> CheckOutcome:
        points = self.sample(self.rng("bianchi-contracted"), 20)
        frame = self.frame(points, 3)
        div_ricci = -divergence_sym2(frame, frame.ricci).truncate(0).value
        d_scalar = frame.scalar.truncate(1).gradient().value
        return CheckOutcome(_relative(div_ricci - 0.5 * d_scalar, frame.ricci.truncate(0)), _described(points))

    def check_order_consistency(self) -> CheckOutcome:
        points = self.sample(self.rng("order-consistency"), 20)
        low, high = self.frame(points, 2), self.frame(points, 4)
        residual = max(
            _relative(low.scalar.value - high.scalar.value, low.scalar),
            _relative(low.ricci.value - high.ricci.value, low.ricci),
        )
        return CheckOutcome(residual, _described(points), "orders 2 and 4")

    def check_finite_difference_curvature(self) -> CheckOutcome:
        points = self.sample(self.rng("finite-difference-curvature"), 3)
        checks = [fd_cross_check(self.model, quantity, point) for point in points for quantity in ("R", "sigma2")]
        message = "central differences of the metric at steps 1e-4 and 2e-4, Richardson-extrapolated"
        if self.model.kind is ModelKind.PERTURBED_TORUS:
            checks += [
                fd_cross_check(self.model, "lambda_star_entry", point, step=FD_LAMBDA_STEP, entry=(0, 1))
                for point in points
            ]
            message += f"; Lambda*(1)[0, 1] from differentiated curvature, step {FD_LAMBDA_STEP:g}"
        residual = max(max(check.relative_error, check.extrapolated_error) for check in checks)
        return CheckOutcome(residual, _described(points), message)

    def check_sigma2_schouten(self) -> CheckOutcome:
        points = self.sample(self.rng("sigma2-schouten"), 100)
        frame = self.frame(points, 2)
        direct = sigma2(frame)
        return CheckOutcome(_relative(direct - sigma2_from_schouten(frame), direct), _described(points))

    def check_sigma2_known(self) -> CheckOutcome:
        points = self.sample(self.rng("sigma2-known"), 20)
        expected = float(self.model.known.sigma2 or 0.0)
        return CheckOutcome(_relative(sigma2(self.frame(points, 2)) - expected, expected), _described(points))

    def check_gamma_of_metric(self) -> CheckOutcome:
        points = self.sample(self.rng("gamma-of-metric"), 20)
        frame = self.frame(points, 2)
        value = gamma_linearized(frame, MetricField(self.model.chart))
        return CheckOutcome(_relative(value + frame.scalar.value, frame.scalar), _described(points))

    def check_lambda_of_metric(self) -> CheckOutcome:
        points = self.sample(self.rng("lambda-of-metric"), 20)
        frame = self.frame(points, 2)
        value = lambda_linearized(frame, MetricField(self.model.chart))
        reference = sigma2(frame)
        return CheckOutcome(_relative(value + 2.0 * reference, reference), _described(points))

    # Linearizations against finite differences

    def _linearization(self, identity: str, exact_map: Callable, curvature: Callable) -> CheckOutcome:
        rng = self.rng(identity)
        points = self.sample(rng, self.settings.pairs)
        residual = 0.0
        for index, point in enumerate(points):
            point = point[None, :]
            h = random_sym2_field(self.model, rng, f"h{index}").evaluate(point, 2)
            frame = self.frame(point, 2)
            exact = exact_map(frame, h)
            plus = frame_from_metric(point, frame.g + LINEARIZATION_STEP * h, self.model.chart)
            minus = frame_from_metric(point, frame.g - LINEARIZATION_STEP * h, self.model.chart)
            difference = (curvature(plus) - curvature(minus)) / (2.0 * LINEARIZATION_STEP)
            residual = max(residual, _relative(exact - difference, exact))
        return CheckOutcome(residual, _described(points), f"step {LINEARIZATION_STEP:g}")

    def check_gamma_linearization(self) -> CheckOutcome:
        return self._linearization("gamma-linearization", gamma_linearized, lambda frame: frame.scalar.value)

    def check_lambda_linearization(self) -> CheckOutcome:
        return self._linearization("lambda-linearization", lambda_linearized, sigma2)

    # L2 adjointness on closed models

    def _adjoint(self, identity: str, pairing: Pairing) -> CheckOutcome:
        rng = self.rng(identity)
        pairs = []
        for index in range(self.settings.pairs):
            if pairing == "divergence":
                first = random_one_form_field(self.model, rng, f"omega{index}")
            else:
                first = random_scalar_field(self.model, rng, f"f{index}")
            pairs.append((first, random_sym2_field(self.model, rng, f"h{index}")))
        defects = adjointness_pairings(self.grid, pairs, pairing, **self.integration)
        return CheckOutcome(max(defect.defect for defect in defects), self.grid_label(), f"{len(pairs)} pairs")

    def check_adjoint_gamma(self) -> CheckOutcome:
        return self._adjoint("adjoint-gamma", "gamma")

    def check_adjoint_lambda(self) -> CheckOutcome:
        return self._adjoint("adjoint-lambda", "lambda")

    def check_adjoint_divergence(self) -> CheckOutcome:
        return self._adjoint("adjoint-divergence", "divergence")

    # Trace and divergence identities of the adjoints

    def check_lambda_star_trace(self) -> CheckOutcome:
        rng = self.rng("lambda-star-trace")
        points = self.sample(rng, 50)
        frame = self.frame(points, 4)
        fields = self.scalar_fields(rng)
        residual = 0.0
        for f in fields:
            comparison = trace_lambda_star_direct(frame, f)
            residual = max(residual, _relative(comparison.defect, comparison.lhs))
        return CheckOutcome(residual, _described(points, f"{len(fields)} functions"))

    def check_lambda_star_one_trace(self) -> CheckOutcome:
        points = self.sample(self.rng("lambda-star-one-trace"), 20)
        frame = self.frame(points, 4)
        defects = lambda_star_one_identities(frame)
        return CheckOutcome(_relative(defects.trace_defect, sigma2(frame)), _described(points))

    def check_lambda_star_one_divergence(self) -> CheckOutcome:
        points = self.sample(self.rng("lambda-star-one-divergence"), 20)
        defects = lambda_star_one_identities(self.frame(points, 5))
        return CheckOutcome(_sup(defects.div_defect), _described(points), "order-5 frames")

    def check_lambda_star_one_closed_form(self) -> CheckOutcome:
        points = self.sample(self.rng("lambda-star-one-closed-form"), 20)
        frame = self.frame(points, 4)
        assembled = lambda_star(frame, frame.one())
        return CheckOutcome(
            _relative(assembled - lambda_star_one_closed_form(frame), assembled), _described(points)
        )

    def _pointwise_over_functions(self, identity: str, order: int, residual_of: Callable) -> CheckOutcome:
        rng = self.rng(identity)
        points = self.sample(rng, 10)
        frame = self.frame(points, order)
        fields = self.scalar_fields(rng) + list(self.model.kernel_candidates)
        residual = max(_sup(residual_of(frame, f)) for f in fields)
        return CheckOutcome(residual, _described(points, f"{len(fields)} functions"))

    def check_lambda_star_divergence(self) -> CheckOutcome:
        return self._pointwise_over_functions("lambda-star-divergence", 5, lambda_star_divergence_defect)

    def check_gamma_star_divergence(self) -> CheckOutcome:
        return self._pointwise_over_functions("gamma-star-divergence", 3, gamma_star_divergence_defect)

    def check_cpe_trace_extended(self) -> CheckOutcome:
        return self._pointwise_over_functions("cpe-trace-extended", 4, cpe_trace_identity)

    def check_static_trace_extended(self) -> CheckOutcome:
        return self._pointwise_over_functions("static-trace-extended", 4, static_trace_identity)

    def check_einstein_closed_form(self) -> CheckOutcome:
        rng = self.rng("einstein-closed-form")
        points = self.sample(rng, 10)
        frame = self.frame(points, 4)
        fields = self.scalar_fields(rng)
        residual = 0.0
        for f in fields:
            full, closed = einstein_lambda_star_closed_form(frame, f)
            residual = max(residual, _relative(full - closed, full))
        return CheckOutcome(residual, _described(points, f"{len(fields)} functions"))

    def check_scaling_covariance(self) -> CheckOutcome:
        """Under ``g -> c^2 g``: ``R / c^2``, ``sigma2 / c^4``, ``gamma*`` fixed and ``Lambda* / c^2``."""
        rng = self.rng("scaling-covariance")
        points = self.sample(rng, 10)
        c = SCALING_FACTOR
        base = self.frame(points, 4)
        scaled = curvature_frame(self.model.chart.scaled(c), points, 4)
        residual = max(
            _relative(scaled.scalar.value - base.scalar.value / c**2, base.scalar),
            _relative(sigma2(scaled) - sigma2(base) / c**4, sigma2(base)),
        )
        for f in self.scalar_fields(rng):
            vacuum = gamma_star(base, f)
            adjoint = lambda_star(base, f)
            residual = max(
                residual,
                _relative(gamma_star(scaled, f) - vacuum, vacuum),
                _relative(lambda_star(scaled, f) - adjoint / c**2, adjoint),
            )
        return CheckOutcome(residual, _described(points), f"homothety factor {c:g}")

    # Sphere kernel package

    def _kernel_norms(self, frame: CurvatureFrame) -> float:
        return max(
            max(_sup(gamma_star(frame, f)), _sup(lambda_star(frame, f))) for f in self.model.kernel_candidates
        )

    def check_sphere_kernel(self) -> CheckOutcome:
        points = self.sample(self.rng("sphere-kernel"), 20)
        frame = self.frame(points, 4)
        count = len(self.model.kernel_candidates)
        return CheckOutcome(self._kernel_norms(frame), _described(points, f"{count} coordinate functions"))

    def check_sphere_cpe(self) -> CheckOutcome:
        """Coordinate functions solve the CPE, vacuum static and sigma2-singular equations together."""
        points = self.sample(self.rng("sphere-cpe"), 20)
        frame = self.frame(points, 4)
        residual = _sup(traceless_ricci(frame).truncate(0))
        for f in self.model.kernel_candidates:
            residual = max(
                residual,
                _sup(cpe_residual(frame, f)),
                _sup(vacuum_static_residual(frame, f)),
                _sup(lambda_star(frame, f)),
            )
        return CheckOutcome(residual, _described(points), "traceless Ric, CPE, vacuum static and Lambda* residuals")

    def check_sphere_eigen_relation(self) -> CheckOutcome:
        points = self.sample(self.rng("sphere-eigen-relation"), 20)
        frame = self.frame(points, 2)
        residual = max(_sup(laplacian_eigen_relation(frame, f)) for f in self.model.kernel_candidates)
        return CheckOutcome(residual, _described(points))

    def check_sphere_hessian_relation(self) -> CheckOutcome:
        points = self.sample(self.rng("sphere-hessian-relation"), 20)
        frame = self.frame(points, 2)
        residual = max(_sup(obata_residual(frame, f)) for f in self.model.kernel_candidates)
        return CheckOutcome(residual, _described(points))

    def kernel_moments(self) -> np.ndarray:
        """Integrals of each coordinate function followed by the flattened Gram matrix."""
        if self._kernel_moments is None:
            candidates = self.model.kernel_candidates

            def integrand(nodes: np.ndarray) -> np.ndarray:
                values = np.stack([f.evaluate(nodes, 0).value for f in candidates])
                products = (values[:, None, :] * values[None, :, :]).reshape(-1, values.shape[-1])
                return np.concatenate([values, products])

            self._kernel_moments = integrate(self.grid, integrand, **self.integration)
        return self._kernel_moments

    def check_sphere_kernel_mean_zero(self) -> CheckOutcome:
        count = len(self.model.kernel_candidates)
        means = self.kernel_moments()[:count]
        return CheckOutcome(_sup(means) / self.grid.volume, self.grid_label())

    def check_sphere_kernel_gram(self) -> CheckOutcome:
        count = len(self.model.kernel_candidates)
        gram = self.kernel_moments()[count:].reshape(count, count)
        smallest = float(np.min(np.linalg.eigvalsh(0.5 * (gram + gram.T))))
        threshold = GRAM_FRACTION * self.grid.volume / count
        residual = threshold / smallest if smallest > 0.0 else math.inf
        return CheckOutcome(residual, self.grid_label(), f"smallest Gram eigenvalue {smallest:.6g}")

    def check_rayleigh(self) -> CheckOutcome:
        defects = [rayleigh_identity(self.model, f, self.grid, **self.integration) for f in self.model.kernel_candidates]
        return CheckOutcome(max(defect.defect for defect in defects), self.grid_label())

    # Solution branches and negative controls

    def check_ricci_flat_branch(self) -> CheckOutcome:
        points = self.sample(self.rng("ricci-flat-branch"), 20)
        frame = self.frame(points, 4)
        one = ScalarField.constant(1.0, "one")
        residual = max(_sup(gamma_star(frame, one)), _sup(lambda_star(frame, one)), _sup(sigma2(frame)))
        return CheckOutcome(residual, _described(points), "f = 1")

    def check_einstein_branch(self) -> CheckOutcome:
        points = self.sample(self.rng("einstein-branch"), 20)
        frame = self.frame(points, 4)
        if np.min(frame.scalar.value) <= 0.0:
            return CheckOutcome(math.inf, _described(points), "scalar curvature is not positive")
        return CheckOutcome(self._kernel_norms(frame), _described(points))

    def check_control_trace_of_one(self) -> CheckOutcome:
        points = self.sample(self.rng("control-trace-of-one"), 20)
        frame = self.frame(points, 4)
        lambda_one = lambda_star(frame, frame.one())
        observed = float(np.min(np.abs(np.einsum("ij...,ij...->...", frame.g_inv.value, lambda_one.value))))
        return CheckOutcome(_lower_bound(observed), _described(points), f"min |tr Lambda*(1)| = {observed:.6g}")

    def check_control_cpe_traceless(self) -> CheckOutcome:
        points = self.sample(self.rng("control-cpe-traceless"), 20)
        residual = cpe_residual(self.frame(points, 2), ScalarField.constant(0.0, "zero")).value
        per_point = np.max(np.abs(residual), axis=(0, 1))
        observed = float(np.min(per_point))
        return CheckOutcome(_lower_bound(observed), _described(points), f"min sup |cpe residual| = {observed:.6g}")

    def check_control_obata_nonzero(self) -> CheckOutcome:
        points = self.sample(self.rng("control-obata-nonzero"), 20)
        frame = self.frame(points, 2)
        observed = min(_sup(obata_residual(frame, f)) for f in self.model.negative_controls)
        return CheckOutcome(_lower_bound(observed), _described(points), f"sup |Hessian relation| = {observed:.6g}")


def _always(model: ModelSpec) -> bool:
    return True


class IdentityCheck(NamedTuple):
    identity: str
    tolerance: float
    applies: Callable[[ModelSpec], bool]
    run: Callable[[IdentityChecker], CheckOutcome]
    summary: str
    routine: Callable[[ModelSpec], bool] = _always


def _closed(model: ModelSpec) -> bool:
    return model.is_closed


def _routine_adjoint(model: ModelSpec) -> bool:
    """Models whose adjointness sweep runs by default: tori, round 2-spheres and the Einstein product."""
    if model.kind in (ModelKind.FLAT_TORUS, ModelKind.PERTURBED_TORUS):
        return True
    if model.kind is ModelKind.SPHERE:
        return model.dim == 2
    return model.kind is ModelKind.SPHERE_PRODUCT and model.known.einstein


def _flat(model: ModelSpec) -> bool:
    return model.kind in (ModelKind.EUCLIDEAN, ModelKind.FLAT_TORUS)


def _sphere(model: ModelSpec) -> bool:
    return model.kind is ModelKind.SPHERE and bool(model.kernel_candidates)


def _closed_sphere(model: ModelSpec) -> bool:
    return _sphere(model) and model.is_closed


def _non_einstein_product(model: ModelSpec) -> bool:
    return model.kind is ModelKind.SPHERE_PRODUCT and not model.known.einstein


def _sphere_control(model: ModelSpec) -> bool:
    return model.kind is ModelKind.SPHERE and bool(model.negative_controls)


# fmt: off
IDENTITY_CHECKS: tuple[IdentityCheck, ...] = (
    IdentityCheck("curvature-ground-truth", 1e-9, lambda m: m.known.scalar is not None,
                  IdentityChecker.check_curvature_ground_truth, "scalar curvature and Ricci eigenvalues match the model"),
    IdentityCheck("riemann-flat", 1e-12, _flat, IdentityChecker.check_riemann_flat, "Riemann tensor vanishes"),
    IdentityCheck("riemann-symmetries", 1e-11, _always, IdentityChecker.check_riemann_symmetries,
                  "Riemann antisymmetries, pair symmetry and first Bianchi identity"),
    IdentityCheck("bianchi-contracted", 1e-10, _always, IdentityChecker.check_bianchi_contracted,
                  "div Ric = dR / 2"),
    IdentityCheck("order-consistency", 1e-12, _always, IdentityChecker.check_order_consistency,
                  "curvature values do not depend on the jet order"),
    IdentityCheck("finite-difference-curvature", 1e-4, _always, IdentityChecker.check_finite_difference_curvature,
                  "R, sigma2 and Lambda*(1) agree with finite-difference reconstructions"),
    IdentityCheck("sigma2-schouten", 1e-11, _always, IdentityChecker.check_sigma2_schouten,
                  "sigma2 from Ricci equals sigma2 of the Schouten tensor"),
    IdentityCheck("sigma2-known", 1e-9, lambda m: m.known.sigma2 is not None, IdentityChecker.check_sigma2_known,
                  "sigma2 matches the model"),
    IdentityCheck("gamma-of-metric", 1e-10, _always, IdentityChecker.check_gamma_of_metric, "gamma(g) = -R"),
    IdentityCheck("lambda-of-metric", 1e-10, _always, IdentityChecker.check_lambda_of_metric,
                  "Lambda(g) = -2 sigma2"),
    IdentityCheck("gamma-linearization", 1e-5, _always, IdentityChecker.check_gamma_linearization,
                  "gamma(h) matches central differences of R(g + t h)"),
    IdentityCheck("lambda-linearization", 1e-5, _always, IdentityChecker.check_lambda_linearization,
                  "Lambda(h) matches central differences of sigma2(g + t h)"),
    IdentityCheck("adjoint-gamma", 1e-8, _closed, IdentityChecker.check_adjoint_gamma,
                  "int f gamma(h) = int <gamma*(f), h>", _routine_adjoint),
    IdentityCheck("adjoint-lambda", 1e-7, _closed, IdentityChecker.check_adjoint_lambda,
                  "int f Lambda(h) = int <Lambda*(f), h>", _routine_adjoint),
    IdentityCheck("adjoint-divergence", 1e-8, _closed, IdentityChecker.check_adjoint_divergence,
                  "int <delta h, omega> = int <h, delta* omega>", _routine_adjoint),
    IdentityCheck("lambda-star-trace", 1e-9, _always, IdentityChecker.check_lambda_star_trace,
                  "trace of Lambda*(f) in terms of R, Hess f and sigma2"),
    IdentityCheck("lambda-star-one-trace", 1e-8, _always, IdentityChecker.check_lambda_star_one_trace,
                  "tr Lambda*(1) = -2 sigma2"),
    IdentityCheck("lambda-star-one-divergence", 1e-7, _always, IdentityChecker.check_lambda_star_one_divergence,
                  "div Lambda*(1) = -d sigma2 / 2"),
    IdentityCheck("lambda-star-one-closed-form", 1e-9, _always, IdentityChecker.check_lambda_star_one_closed_form,
                  "Lambda*(1) equals its curvature-only closed form"),
    IdentityCheck("lambda-star-divergence", 1e-7, _always, IdentityChecker.check_lambda_star_divergence,
                  "div Lambda*(f) = -f d sigma2 / 2"),
    IdentityCheck("gamma-star-divergence", 1e-9, _always, IdentityChecker.check_gamma_star_divergence,
                  "div gamma*(f) = -f dR / 2"),
    IdentityCheck("cpe-trace-extended", 1e-9, _always, IdentityChecker.check_cpe_trace_extended,
                  "tr Lambda*(f) through the CPE defect tensor"),
    IdentityCheck("static-trace-extended", 1e-9, _always, IdentityChecker.check_static_trace_extended,
                  "tr Lambda*(f) through the vacuum static defect tensor"),
    IdentityCheck("einstein-closed-form", 1e-9, _always, IdentityChecker.check_einstein_closed_form,
                  "Lambda*(f) on Einstein metrics"),
    IdentityCheck("scaling-covariance", 1e-10, _always, IdentityChecker.check_scaling_covariance,
                  "curvature and adjoints under a homothety"),
    IdentityCheck("sphere-kernel", 1e-8, _sphere, IdentityChecker.check_sphere_kernel,
                  "coordinate functions lie in the kernels of gamma* and Lambda*"),
    IdentityCheck("sphere-kernel-mean-zero", 1e-9, _closed_sphere, IdentityChecker.check_sphere_kernel_mean_zero,
                  "coordinate functions integrate to zero"),
    IdentityCheck("sphere-kernel-gram", 1.0, _closed_sphere, IdentityChecker.check_sphere_kernel_gram,
                  "coordinate functions are linearly independent"),
    IdentityCheck("sphere-eigen-relation", 1e-10, _sphere, IdentityChecker.check_sphere_eigen_relation,
                  "Delta f = -R f / (n-1)"),
    IdentityCheck("sphere-hessian-relation", 1e-10, _sphere, IdentityChecker.check_sphere_hessian_relation,
                  "Hess f = -R f g / (n(n-1))"),
    IdentityCheck("rayleigh", 1e-7, _closed_sphere, IdentityChecker.check_rayleigh,
                  "R / (n-1) int f^2 = int |grad f|^2"),
    IdentityCheck("ricci-flat-branch", 1e-12, _flat, IdentityChecker.check_ricci_flat_branch,
                  "f = 1 solves both equations with sigma2 = 0"),
    IdentityCheck("einstein-branch", 1e-8, _sphere, IdentityChecker.check_einstein_branch,
                  "coordinate functions solve both equations with R > 0"),
    IdentityCheck("sphere-cpe", 1e-8, _sphere, IdentityChecker.check_sphere_cpe,
                  "coordinate functions are CPE, vacuum static and sigma2-singular on an Einstein metric"),
    IdentityCheck("control-trace-of-one", 1.0, _non_einstein_product, IdentityChecker.check_control_trace_of_one,
                  "tr Lambda*(1) stays away from zero"),
    IdentityCheck("control-cpe-traceless", 1.0, _non_einstein_product, IdentityChecker.check_control_cpe_traceless,
                  "traceless Ricci stays away from zero"),
    IdentityCheck("control-obata-nonzero", 1.0, _sphere_control, IdentityChecker.check_control_obata_nonzero,
                  "a non-eigenfunction violates the Hessian relation"),
)
# fmt: on

IDENTITY_IDS: tuple[str, ...] = tuple(check.identity for check in IDENTITY_CHECKS)
DEFAULT_TOLERANCES: dict[str, float] = {check.identity: check.tolerance for check in IDENTITY_CHECKS}

ADJOINT_IDENTITIES = ("adjoint-gamma", "adjoint-lambda", "adjoint-divergence")
KERNEL_IDENTITIES = (
    "sphere-kernel",
    "sphere-kernel-mean-zero",
    "sphere-kernel-gram",
    "sphere-eigen-relation",
    "sphere-hessian-relation",
    "rayleigh",
    "einstein-branch",
    "sphere-cpe",
)


def select_checks(identities: Iterable[str] | None = None) -> list[IdentityCheck]:
    """Checks in registry order, restricted to ``identities`` when given."""
    if identities is None:
        return list(IDENTITY_CHECKS)
    wanted = set(identities)
    unknown = sorted(wanted - set(IDENTITY_IDS))
    if unknown:
        raise UnknownIdentityError(unknown[0])
    return [check for check in IDENTITY_CHECKS if check.identity in wanted]


class SuiteOrchestrator:
    """Runs the identity checks of every configured model."""

    def __init__(
        self,
        model_names: Sequence[str],
        settings: SuiteSettings | None = None,
        params: Mapping[str, Mapping[str, float]] | None = None,
    ):
        self.model_names = list(model_names)
        self.settings = settings or SuiteSettings()
        self.params = params or {}

    def run_all(self) -> list[IdentityReport]:
        """Reports grouped by model in configuration order, whatever the worker count."""
        workers = max(1, self.settings.workers)
        if workers > 1 and len(self.model_names) > 1:
            with ThreadPoolExecutor(max_workers=workers) as pool:
                per_model = list(pool.map(self.run_model, self.model_names))
        else:
            per_model = [self.run_model(name) for name in self.model_names]
        return [report for reports in per_model for report in reports]

    def run_model(self, name: str) -> list[IdentityReport]:
        log.info("Checking identities on %s", name)
        try:
            model = get_model(name, self.params.get(name))
        except Sigma2LabError as e:
            log.error("Error preparing model %s: %s", name, e)
            return [
                IdentityReport(
                    model=name,
                    identity="model-validation",
                    points_or_grid="-",
                    max_residual=math.inf,
                    tolerance=0.0,
                    status=ReportStatus.ERROR,
                    message=str(e),
                )
            ]
        return IdentityChecker(model, self.settings).run(self.settings.identities)


def summarize(reports: Sequence[IdentityReport]) -> dict[str, int]:
    counts = {status.value: 0 for status in ReportStatus}
    for report in reports:
        counts[report.status.value] += 1
    counts["total"] = len(reports)
    return counts


def exit_code(reports: Sequence[IdentityReport]) -> int:
    """0 when no report failed or errored, 1 otherwise."""
    return 1 if any(report.status.is_failure for report in reports) else 0


def bundle_json(reports: Sequence[IdentityReport], seed: int, timings: bool = False) -> str:
    """Serialize reports deterministically; wall times only appear when ``timings`` is set."""
    bundle = {
        "seed": seed,
        "reports": [report.to_dict(timings) for report in reports],
        "summary": summarize(reports),
    }
    return json.dumps(bundle, indent=2, sort_keys=True, allow_nan=False)


def format_reports(reports: Sequence[IdentityReport], verbose: bool = False) -> str:
    """Format identity reports for display."""
    if not reports:
        return "No identities to check."

    output = []

    def format_group(group: list[IdentityReport], status: ReportStatus) -> None:
        if not group:
            return
        output.append(f"\n{status.to_colored_string()} ({len(group)} checks):")
        for report in group:
            prefix = f"  {report.model}:{report.identity}"
            if math.isfinite(report.max_residual):
                detail = f"residual {report.max_residual:.3e} (tolerance {report.tolerance:.1e})"
            else:
                detail = report.message
            if verbose:
                output.append(f"{prefix} [{report.points_or_grid}, {report.wall_time_ms} ms]")
                output.append(f"    {detail}")
                if report.message and report.message != detail:
                    output.append(f"    {report.message}")
            else:
                output.append(f"{prefix}: {detail}")

    for status in (ReportStatus.PASS, ReportStatus.SKIPPED, ReportStatus.FAIL, ReportStatus.ERROR):
        format_group([report for report in reports if report.status is status], status)

    counts = summarize(reports)
    output.append(
        f"\nSummary: {counts['pass']} passed, {counts['fail']} failed, {counts['skipped']} skipped, "
        f"{counts['error']} errors out of {counts['total']} checks."
    )
    return "\n".join(output)

"""Catalog of model geometries with closed-form curvature.

Every model is a chart plus a table of what its curvature must be. Loading a
model re-derives the curvature at a few sample points and refuses a model whose
table is wrong. The module also draws seeded random smooth fields on a model:
ambient polynomials restricted to embedded models (smooth through the chart's
coordinate singularities), trigonometric polynomials in chart coordinates
otherwise.
"""

from __future__ import annotations

import dataclasses
import math
from collections.abc import Callable, Mapping, Sequence
from dataclasses import dataclass, field
from enum import StrEnum, auto
from typing import NamedTuple

import numpy as np

from .exceptions import ModelError, ModelValidationError, UnknownModelError
from .fields import Chart, OneFormField, ScalarField, Sym2Field, metric_eigenvalues
from .geometry import curvature_frame
from .jets import Jet, block, contract, diagonal
from .logger import get_logger
from .operators import EINSTEIN_TOLERANCE, einstein_sigma2, sigma2, traceless_ricci

log = get_logger(__name__)

Embedding = Callable[[Sequence[Jet]], list[Jet]]

# Polar chart axes stop this far from the poles
POLE_MARGIN = 1e-2
# Random sample points stay this far from the poles
SAMPLE_MARGIN = 0.25
TWO_PI = 2.0 * math.pi


class ModelKind(StrEnum):
    EUCLIDEAN = auto()
    FLAT_TORUS = auto()
    PERTURBED_TORUS = auto()
    SPHERE = auto()
    SPHERE_PRODUCT = auto()
    HYPERBOLIC = auto()


class AxisMeasure(NamedTuple):
    """How a closed model's volume density depends on one coordinate.

    ``polar`` axes carry a factor ``sin(x)**power`` on ``(0, pi)``; ``uniform``
    axes are periodic with period 2 pi.
    """

    kind: str
    power: int = 0


@dataclass(frozen=True)
class KnownCurvature:
    """Closed-form curvature of a model; None where no closed form is claimed."""

    scalar: float | None
    ricci_eigenvalues: tuple[float, ...] | None
    sigma2: float | None
    einstein: bool
    closed: bool
    volume: float | None = None


@dataclass(frozen=True)
class ModelSpec:
    name: str
    kind: ModelKind
    chart: Chart
    known: KnownCurvature
    sample_box: tuple[tuple[float, float], ...]
    params: Mapping[str, float] = field(default_factory=dict)
    unit_embedding: Embedding | None = None
    ambient_dim: int = 0
    kernel_candidates: tuple[ScalarField, ...] = ()
    negative_controls: tuple[ScalarField, ...] = ()
    axis_measures: tuple[AxisMeasure, ...] | None = None
    default_resolution: tuple[int, ...] | None = None

    @property
    def dim(self) -> int:
        return self.chart.dim

    @property
    def is_closed(self) -> bool:
        return self.known.closed

    def sample_points(self, rng: np.random.Generator, count: int) -> np.ndarray:
        """Uniform random points in the model's sample box, shape ``(count, dim)``."""
        lower = np.array([low for low, _ in self.sample_box])
        upper = np.array([high for _, high in self.sample_box])
        return lower + (upper - lower) * rng.random((count, self.dim))


def _sphere_metric(radius: float) -> Callable[[Sequence[Jet]], Jet]:
    def metric(x: Sequence[Jet]) -> Jet:
        entries: list[Jet | float] = []
        weight: Jet | float = radius**2
        for axis in range(len(x)):
            entries.append(weight)
            if axis < len(x) - 1:
                sine = x[axis].sin()
                weight = weight * (sine * sine)
        return diagonal(entries, like=x[0])

    return metric


def _unit_sphere_embedding(x: Sequence[Jet]) -> list[Jet]:
    """Hyperspherical coordinates (polar angles, then the azimuth) into the unit sphere."""
    coordinates = []
    prefix: Jet | float = 1.0
    for axis in range(len(x) - 1):
        coordinates.append(prefix * x[axis].cos())
        prefix = prefix * x[axis].sin()
    coordinates.append(prefix * x[-1].cos())
    coordinates.append(prefix * x[-1].sin())
    return coordinates


def _polar_box(n: int, margin: float) -> tuple[tuple[float, float], ...]:
    return tuple((margin, math.pi - margin) for _ in range(n - 1)) + ((0.0, TWO_PI),)


def _sphere_volume(n: int, radius: float) -> float:
    return 2.0 * math.pi ** ((n + 1) / 2) / math.gamma((n + 1) / 2) * radius**n


def _coordinate_functions(embedding: Embedding, count: int, prefix: str = "x") -> tuple[ScalarField, ...]:
    return tuple(
        ScalarField(f"{prefix}{index}", lambda x, index=index: embedding(x)[index]) for index in range(count)
    )


def _flat_metric(x: Sequence[Jet]) -> Jet:
    return diagonal([1.0] * len(x), like=x[0])


def euclidean(dim: int) -> ModelSpec:
    chart = Chart(f"euclidean{dim}", _flat_metric, (-10.0,) * dim, (10.0,) * dim, (False,) * dim)
    return ModelSpec(
        name=f"euclidean{dim}",
        kind=ModelKind.EUCLIDEAN,
        chart=chart,
        known=KnownCurvature(0.0, (0.0,) * dim, 0.0, einstein=True, closed=False),
        sample_box=((-2.0, 2.0),) * dim,
        params={"dim": dim},
    )


def flat_torus(dim: int) -> ModelSpec:
    chart = Chart(f"flat_torus{dim}", _flat_metric, (0.0,) * dim, (TWO_PI,) * dim, (True,) * dim)
    return ModelSpec(
        name=f"flat_torus{dim}",
        kind=ModelKind.FLAT_TORUS,
        chart=chart,
        known=KnownCurvature(0.0, (0.0,) * dim, 0.0, einstein=True, closed=True, volume=TWO_PI**dim),
        sample_box=((0.0, TWO_PI),) * dim,
        params={"dim": dim},
        kernel_candidates=(ScalarField.constant(1.0, "one"),),
        axis_measures=(AxisMeasure("uniform"),) * dim,
        default_resolution=(32, 32) if dim == 2 else (16,) * dim,
    )


def sphere(dim: int, radius: float = 1.0) -> ModelSpec:
    """Round sphere S^dim(radius) in hyperspherical coordinates."""
    if radius <= 0.0:
        raise ModelError(f"Sphere radius must be positive, got {radius}")
    name = f"s{dim}_r{radius:g}"
    chart = Chart(
        name,
        _sphere_metric(radius),
        (POLE_MARGIN,) * (dim - 1) + (0.0,),
        (math.pi - POLE_MARGIN,) * (dim - 1) + (TWO_PI,),
        (False,) * (dim - 1) + (True,),
    )
    scalar = dim * (dim - 1) / radius**2
    resolutions = {2: (32, 64), 3: (12, 12, 24)}
    return ModelSpec(
        name=name,
        kind=ModelKind.SPHERE,
        chart=chart,
        known=KnownCurvature(
            scalar,
            ((dim - 1) / radius**2,) * dim,
            einstein_sigma2(dim, scalar),
            einstein=True,
            closed=True,
            volume=_sphere_volume(dim, radius),
        ),
        sample_box=_polar_box(dim, SAMPLE_MARGIN),
        params={"radius": radius},
        unit_embedding=_unit_sphere_embedding,
        ambient_dim=dim + 1,
        kernel_candidates=_coordinate_functions(_unit_sphere_embedding, dim + 1),
        negative_controls=(ScalarField("x0^2", lambda x: _unit_sphere_embedding(x)[0] ** 2),),
        axis_measures=tuple(AxisMeasure("polar", dim - 1 - axis) for axis in range(dim - 1)) + (AxisMeasure("uniform"),),
        default_resolution=resolutions.get(dim, (8,) * (dim - 1) + (16,)),
    )


def sphere_product(r1: float = 1.0, r2: float = 1.0) -> ModelSpec:
    """S^2(r1) x S^2(r2) with coordinates (theta1, phi1, theta2, phi2)."""
    if r1 <= 0.0 or r2 <= 0.0:
        raise ModelError(f"Factor radii must be positive, got {r1}, {r2}")
    name = f"s2xs2_r{r1:g}_r{r2:g}"
    first, second = _sphere_metric(r1), _sphere_metric(r2)

    def metric(x: Sequence[Jet]) -> Jet:
        upper, lower = first(x[:2]), second(x[2:])
        return diagonal([upper[0, 0], upper[1, 1], lower[0, 0], lower[1, 1]], like=x[0])

    def embedding(x: Sequence[Jet]) -> list[Jet]:
        return _unit_sphere_embedding(x[:2]) + _unit_sphere_embedding(x[2:])

    eigenvalues = (1 / r1**2, 1 / r1**2, 1 / r2**2, 1 / r2**2)
    scalar = sum(eigenvalues)
    einstein = math.isclose(r1, r2)
    chart = Chart(
        name,
        metric,
        (POLE_MARGIN, 0.0, POLE_MARGIN, 0.0),
        (math.pi - POLE_MARGIN, TWO_PI, math.pi - POLE_MARGIN, TWO_PI),
        (False, True, False, True),
    )
    polar_axis = _polar_box(2, SAMPLE_MARGIN)
    return ModelSpec(
        name=name,
        kind=ModelKind.SPHERE_PRODUCT,
        chart=chart,
        known=KnownCurvature(
            scalar,
            eigenvalues,
            -0.5 * sum(value**2 for value in eigenvalues) + 4 * scalar**2 / 24.0,
            einstein=einstein,
            closed=True,
            volume=_sphere_volume(2, r1) * _sphere_volume(2, r2),
        ),
        sample_box=polar_axis + polar_axis,
        params={"r1": r1, "r2": r2},
        unit_embedding=embedding,
        ambient_dim=6,
        negative_controls=() if einstein else (ScalarField.constant(1.0, "one"),),
        axis_measures=(AxisMeasure("polar", 1), AxisMeasure("uniform")) * 2,
        default_resolution=(8, 8, 8, 8),
    )


def poincare_ball(dim: int) -> ModelSpec:
    """Hyperbolic space as the unit ball with metric ``4 |dx|^2 / (1 - |x|^2)^2``."""

    def metric(x: Sequence[Jet]) -> Jet:
        conformal = 4.0 * (1.0 - sum(xi * xi for xi in x)) ** -2
        return diagonal([conformal] * len(x), like=x[0])

    scalar = -dim * (dim - 1.0)
    chart = Chart(f"poincare{dim}", metric, (-1.0,) * dim, (1.0,) * dim, (False,) * dim, ball_radius=1.0 - POLE_MARGIN)
    return ModelSpec(
        name=f"poincare{dim}",
        kind=ModelKind.HYPERBOLIC,
        chart=chart,
        known=KnownCurvature(scalar, (-(dim - 1.0),) * dim, einstein_sigma2(dim, scalar), einstein=True, closed=False),
        sample_box=((-0.5, 0.5),) * dim,
        params={"dim": dim},
    )


def _stereographic_embedding(u: Sequence[Jet]) -> list[Jet]:
    norm = u[0] * u[0] + u[1] * u[1]
    denominator = (1.0 + norm).reciprocal()
    return [(norm - 1.0) * denominator, 2.0 * u[0] * denominator, 2.0 * u[1] * denominator]


def stereographic_sphere() -> ModelSpec:
    """Unit S^2 through stereographic projection from the pole ``x0 = 1``.

    A second, open chart of ``s2_r1``: the kernel candidates are the same ambient
    coordinate functions, pulled back through the projection.
    """

    def metric(u: Sequence[Jet]) -> Jet:
        conformal = 4.0 * (1.0 + u[0] * u[0] + u[1] * u[1]) ** -2
        return diagonal([conformal, conformal], like=u[0])

    chart = Chart("s2_stereo", metric, (-10.0, -10.0), (10.0, 10.0), (False, False))
    return ModelSpec(
        name="s2_stereo",
        kind=ModelKind.SPHERE,
        chart=chart,
        known=KnownCurvature(2.0, (1.0, 1.0), 0.0, einstein=True, closed=False),
        sample_box=((-2.0, 2.0),) * 2,
        unit_embedding=_stereographic_embedding,
        ambient_dim=3,
        kernel_candidates=_coordinate_functions(_stereographic_embedding, 3),
        negative_controls=(ScalarField("x0^2", lambda u: _stereographic_embedding(u)[0] ** 2),),
    )


def stereographic_coordinates(points: np.ndarray) -> np.ndarray:
    """Map (theta, phi) points of the unit S^2 chart to the stereographic chart."""
    points = np.asarray(points, dtype=float)
    theta, phi = points[..., 0], points[..., 1]
    scale = np.sin(theta) / (1.0 - np.cos(theta))
    return np.stack([scale * np.cos(phi), scale * np.sin(phi)], axis=-1)


def _torus_perturbation(x: Sequence[Jet]) -> list[list[Jet]]:
    x0, x1, x2 = x
    diagonal_terms = [
        x1.cos() + 0.5 * x2.sin(),
        x0.sin() + 0.5 * (x2 + x0).cos(),
        x0.cos() - 0.5 * x1.sin(),
    ]
    a01 = 0.5 * (x2 + x1).sin()
    a02 = 0.5 * x1.cos()
    a12 = 0.5 * (x0 - x2).sin()
    return [
        [diagonal_terms[0], a01, a02],
        [a01, diagonal_terms[1], a12],
        [a02, a12, diagonal_terms[2]],
    ]


def perturbed_torus(epsilon: float = 0.05) -> ModelSpec:
    """Flat 3-torus plus a smooth trigonometric perturbation of size ``epsilon``.

    Gershgorin bounds the smallest metric eigenvalue below by ``1 - 2.5 epsilon``.
    """
    if not 0.0 <= epsilon < 0.4:
        raise ModelError(f"Perturbation size must lie in [0, 0.4), got {epsilon}")

    def metric(x: Sequence[Jet]) -> Jet:
        a = _torus_perturbation(x)
        return block([[(1.0 if i == j else 0.0) + epsilon * a[i][j] for j in range(3)] for i in range(3)], like=x[0])

    chart = Chart("perturbed_torus", metric, (0.0,) * 3, (TWO_PI,) * 3, (True,) * 3)
    return ModelSpec(
        name="perturbed_torus",
        kind=ModelKind.PERTURBED_TORUS,
        chart=chart,
        known=KnownCurvature(None, None, None, einstein=epsilon == 0.0, closed=True),
        sample_box=((0.0, TWO_PI),) * 3,
        params={"epsilon": epsilon},
        axis_measures=(AxisMeasure("uniform"),) * 3,
        default_resolution=(16, 16, 16),
    )


_CATALOG: dict[str, tuple[Callable[..., ModelSpec], dict[str, float]]] = {
    "euclidean2": (lambda: euclidean(2), {}),
    "euclidean3": (lambda: euclidean(3), {}),
    "flat_torus2": (lambda: flat_torus(2), {}),
    "flat_torus3": (lambda: flat_torus(3), {}),
    "s2_r1": (lambda radius: sphere(2, radius), {"radius": 1.0}),
    "s2_r2": (lambda radius: sphere(2, radius), {"radius": 2.0}),
    "s3_r1": (lambda radius: sphere(3, radius), {"radius": 1.0}),
    "s3_r2": (lambda radius: sphere(3, radius), {"radius": 2.0}),
    "s4_r1": (lambda radius: sphere(4, radius), {"radius": 1.0}),
    "s4_r2": (lambda radius: sphere(4, radius), {"radius": 2.0}),
    "s2xs2_r1_r1": (sphere_product, {"r1": 1.0, "r2": 1.0}),
    "s2xs2_r1_r2": (sphere_product, {"r1": 1.0, "r2": 2.0}),
    "poincare2": (lambda: poincare_ball(2), {}),
    "poincare3": (lambda: poincare_ball(3), {}),
    "perturbed_torus": (perturbed_torus, {"epsilon": 0.05}),
    "s2_stereo": (stereographic_sphere, {}),
}

MODEL_NAMES: tuple[str, ...] = tuple(_CATALOG)

# Models a suite runs when no configuration names any
DEFAULT_SUITE_MODELS: tuple[str, ...] = (
    "flat_torus2",
    "flat_torus3",
    "perturbed_torus",
    "s2_r1",
    "s2_r2",
    "s3_r1",
    "s3_r2",
    "s4_r1",
    "s2xs2_r1_r1",
    "s2xs2_r1_r2",
)


def model_dim(name: str) -> int:
    """Dimension of a catalog model without building it."""
    return build_model(name).dim


def build_model(name: str, params: Mapping[str, float] | None = None) -> ModelSpec:
    """Construct a catalog model, applying parameter overrides; no self-validation."""
    if name not in _CATALOG:
        raise UnknownModelError(name)
    builder, defaults = _CATALOG[name]
    unknown = set(params or {}) - set(defaults)
    if unknown:
        raise ModelError(f"Model '{name}' has no parameter(s) {', '.join(sorted(unknown))}")
    model = builder(**{**defaults, **(params or {})})
    # Catalog names stay stable under parameter overrides
    return dataclasses.replace(model, name=name)


def validate_model(model: ModelSpec, rng: np.random.Generator | None = None, samples: int = 16) -> ModelSpec:
    """Re-derive the model's curvature at sample points and compare with its table."""
    rng = rng if rng is not None else np.random.default_rng(0)
    points = model.sample_points(rng, samples)
    frame = curvature_frame(model.chart, points, 2)
    known = model.known

    if known.scalar is not None:
        error = float(np.max(np.abs(frame.scalar.value - known.scalar)))
        if error > 1e-9 * max(1.0, abs(known.scalar)):
            raise ModelValidationError(model.name, f"scalar curvature off by {error:.3e}")
    if known.sigma2 is not None:
        error = float(np.max(np.abs(sigma2(frame) - known.sigma2)))
        if error > 1e-9 * max(1.0, abs(known.sigma2)):
            raise ModelValidationError(model.name, f"sigma2 off by {error:.3e}")
    traceless = float(np.max(np.abs(traceless_ricci(frame).value)))
    if known.einstein != (traceless <= EINSTEIN_TOLERANCE):
        raise ModelValidationError(
            model.name, f"Einstein flag {known.einstein} contradicts max |traceless Ricci| = {traceless:.3e}"
        )
    if model.kind is ModelKind.PERTURBED_TORUS and model.default_resolution is not None:
        axes = [np.linspace(0.0, TWO_PI, count, endpoint=False) for count in model.default_resolution]
        nodes = np.stack(np.meshgrid(*axes, indexing="ij"), axis=-1).reshape(-1, model.dim)
        smallest = float(np.min(metric_eigenvalues(model.chart.metric(nodes, 0).value)))
        if smallest < 0.8:
            raise ModelValidationError(model.name, f"metric eigenvalue {smallest:.3f} below 0.8 on the grid")
    log.debug("model '%s' validated at %d points", model.name, samples)
    return model


def get_model(name: str, params: Mapping[str, float] | None = None, validate: bool = True) -> ModelSpec:
    model = build_model(name, params)
    return validate_model(model) if validate else model


def model_catalog(
    overrides: Mapping[str, Mapping[str, float]] | None = None, validate: bool = True
) -> list[ModelSpec]:
    """All catalog models in their fixed order."""
    overrides = overrides or {}
    unknown = set(overrides) - set(MODEL_NAMES)
    if unknown:
        raise UnknownModelError(sorted(unknown)[0])
    return [get_model(name, overrides.get(name), validate) for name in MODEL_NAMES]


def _trig_modes(dim: int) -> np.ndarray:
    """Wave vectors with every component in {-1, 0, 1} and at most two nonzero."""
    modes = [np.zeros(dim, dtype=int)]
    for i in range(dim):
        unit = np.zeros(dim, dtype=int)
        unit[i] = 1
        modes.append(unit)
    for i in range(dim):
        for j in range(i + 1, dim):
            for sign in (1, -1):
                mode = np.zeros(dim, dtype=int)
                mode[i], mode[j] = 1, sign
                modes.append(mode)
    return np.array(modes)


def _trig_polynomial(modes: np.ndarray, cos_coeffs: np.ndarray, sin_coeffs: np.ndarray) -> Callable:
    def evaluate(x: Sequence[Jet]) -> Jet | float:
        total: Jet | float = 0.0
        for mode, a, b in zip(modes, cos_coeffs, sin_coeffs):
            if not mode.any():
                total = total + float(a)
                continue
            phase = sum(int(k) * xi for k, xi in zip(mode, x) if k)
            total = total + float(a) * phase.cos() + float(b) * phase.sin()
        return total

    return evaluate


def _ambient_polynomial(
    constant: float, linear: np.ndarray, quadratic: np.ndarray, ambient: Sequence[Jet]
) -> Jet | float:
    total: Jet | float = constant
    for i, coordinate in enumerate(ambient):
        total = total + float(linear[i]) * coordinate
        for j in range(i, len(ambient)):
            total = total + float(quadratic[i, j]) * coordinate * ambient[j]
    return total


def _jacobian(ambient: Sequence[Jet]) -> Jet:
    """``J[i, a] = d_a X_i`` for ambient coordinate jets ``X``."""
    gradients = [coordinate.gradient() for coordinate in ambient]
    return Jet(gradients[0].space, np.stack([gradient.coeffs for gradient in gradients], axis=0))


def random_scalar_field(model: ModelSpec, rng: np.random.Generator, name: str = "f") -> ScalarField:
    """Smooth random function: an ambient quadratic on embedded models, trig polynomial otherwise."""
    if model.unit_embedding is not None:
        embedding = model.unit_embedding
        size = model.ambient_dim
        constant, linear = rng.standard_normal(), rng.standard_normal(size)
        quadratic = rng.standard_normal((size, size)) / size
        return ScalarField(name, lambda x: _ambient_polynomial(constant, linear, quadratic, embedding(x)))
    modes = _trig_modes(model.dim)
    scale = 1.0 / np.sqrt(len(modes))
    return ScalarField(
        name, _trig_polynomial(modes, scale * rng.standard_normal(len(modes)), scale * rng.standard_normal(len(modes)))
    )


def random_sym2_field(model: ModelSpec, rng: np.random.Generator, name: str = "h") -> Sym2Field:
    """Smooth random symmetric 2-tensor.

    On embedded models this is the pullback of an ambient symmetric tensor field
    with constant plus linear coefficients.
    """
    n = model.dim
    if model.unit_embedding is not None:
        embedding = model.unit_embedding
        size = model.ambient_dim
        constant = rng.standard_normal((size, size))
        constant = 0.5 * (constant + constant.T)
        linear = rng.standard_normal((size, size, size)) / size
        linear = 0.5 * (linear + linear.transpose(1, 0, 2))

        def pullback(x: Sequence[Jet]) -> Jet:
            ambient = embedding(x)
            jacobian = _jacobian(ambient)
            order = jacobian.order
            base = [coordinate.truncate(order) for coordinate in ambient]
            tensor = block(
                [
                    [float(constant[i, j]) + sum(float(linear[i, j, k]) * base[k] for k in range(size)) for j in range(size)]
                    for i in range(size)
                ],
                like=base[0],
            )
            return contract("aj,jb->ab", contract("ia,ij->aj", jacobian, tensor), jacobian).symmetrize()

        return Sym2Field(name, pullback, derivative_loss=1)

    modes = _trig_modes(n)
    scale = 1.0 / np.sqrt(len(modes))
    components = {
        (i, j): _trig_polynomial(modes, scale * rng.standard_normal(len(modes)), scale * rng.standard_normal(len(modes)))
        for i in range(n)
        for j in range(i, n)
    }

    def trig_tensor(x: Sequence[Jet]) -> Jet:
        values = {key: component(x) for key, component in components.items()}
        return block([[values[min(i, j), max(i, j)] for j in range(n)] for i in range(n)], like=x[0])

    return Sym2Field(name, trig_tensor)


def random_one_form_field(model: ModelSpec, rng: np.random.Generator, name: str = "omega") -> OneFormField:
    n = model.dim
    if model.unit_embedding is not None:
        embedding = model.unit_embedding
        size = model.ambient_dim
        constant = rng.standard_normal(size)
        linear = rng.standard_normal((size, size)) / size

        def pullback(x: Sequence[Jet]) -> Jet:
            ambient = embedding(x)
            jacobian = _jacobian(ambient)
            base = [coordinate.truncate(jacobian.order) for coordinate in ambient]
            weights = block(
                [float(constant[i]) + sum(float(linear[i, k]) * base[k] for k in range(size)) for i in range(size)],
                like=base[0],
            )
            return contract("ia,i->a", jacobian, weights)

        return OneFormField(name, pullback, derivative_loss=1)

    modes = _trig_modes(n)
    scale = 1.0 / np.sqrt(len(modes))
    components = [
        _trig_polynomial(modes, scale * rng.standard_normal(len(modes)), scale * rng.standard_normal(len(modes)))
        for _ in range(n)
    ]
    return OneFormField(name, lambda x: block([component(x) for component in components], like=x[0]))

"""Integration grids on closed models, L2 pairings and finite-difference oracles.

Grids are tensor products of one-dimensional rules: uniform nodes on periodic
axes and Gauss-Gegenbauer nodes in ``cos(theta)`` on polar axes, whose weight
``sin(theta)**m`` matches the sphere's volume density. Node weights are stored
as coordinate weights, so an integral is always ``sum(F * w * sqrt(det g))``.

Integration runs chunk by chunk (optionally on a thread pool) and the partial
sums are reduced in chunk order, so results do not depend on the worker count.
"""

from __future__ import annotations

import math
from collections.abc import Callable, Sequence
from concurrent.futures import ThreadPoolExecutor
from dataclasses import dataclass, replace
from typing import Literal, NamedTuple

import numpy as np
from scipy.special import roots_gegenbauer, roots_legendre

from .exceptions import GridMismatchError, NonClosedModelError, StencilError
from .fields import Field, ScalarField
from .geometry import (
    CurvatureFrame,
    curvature_frame,
    delta_star,
    divergence_sym2,
    frame_from_metric,
)
from .jets import Jet, jet_space
from .logger import get_logger
from .models import ModelSpec
from .operators import (
    gamma_linearized,
    gamma_star,
    gradient_norm_squared,
    lambda_linearized,
    lambda_star,
    sigma2,
)

log = get_logger(__name__)

DEFAULT_CHUNK_SIZE = 512
MIN_NODES_PER_AXIS = 8

Pairing = Literal["gamma", "lambda", "divergence"]
FiniteDifferenceQuantity = Literal["R", "sigma2", "lambda_star_entry"]

# Frame order each adjoint pair needs; the paired fields only ever need order 2
_PAIR_ORDERS: dict[str, int] = {"gamma": 2, "lambda": 4, "divergence": 2}
_PAIR_FIELD_ORDER = 2


@dataclass(frozen=True, eq=False)
class Grid:
    model: ModelSpec
    resolution: tuple[int, ...]
    nodes: np.ndarray
    weights: np.ndarray
    density: np.ndarray

    @property
    def size(self) -> int:
        return len(self.nodes)

    @property
    def volume(self) -> float:
        return float(np.dot(self.weights, self.density))

    def describe(self) -> str:
        return "x".join(str(count) for count in self.resolution)

    def chunks(self, chunk_size: int) -> list[slice]:
        chunk_size = max(1, int(chunk_size))
        return [slice(start, min(start + chunk_size, self.size)) for start in range(0, self.size, chunk_size)]


class PairingDefect(NamedTuple):
    lhs: float
    rhs: float

    @property
    def defect(self) -> float:
        return abs(self.lhs - self.rhs) / max(1.0, abs(self.lhs), abs(self.rhs))


class FiniteDifferenceCheck(NamedTuple):
    """A jet value next to central-difference values at steps h and 2h."""

    jet_value: float
    fd_value: float
    coarse_value: float

    @property
    def relative_error(self) -> float:
        return abs(self.jet_value - self.fd_value) / max(1.0, abs(self.jet_value))

    @property
    def extrapolated_value(self) -> float:
        """Richardson extrapolation of the two central differences (error O(h^4))."""
        return (4.0 * self.fd_value - self.coarse_value) / 3.0

    @property
    def extrapolated_error(self) -> float:
        return abs(self.jet_value - self.extrapolated_value) / max(1.0, abs(self.jet_value))

    @property
    def observed_order(self) -> float:
        """``log2`` of the error ratio between steps 2h and h; 2 for central differences.

        NaN when either difference is exact.
        """
        fine, coarse = abs(self.fd_value - self.jet_value), abs(self.coarse_value - self.jet_value)
        if fine == 0.0 or coarse == 0.0:
            return math.nan
        return math.log2(coarse / fine)


def _axis_rule(kind: str, power: int, count: int) -> tuple[np.ndarray, np.ndarray]:
    if kind == "uniform":
        return np.arange(count) * (2.0 * np.pi / count), np.full(count, 2.0 * np.pi / count)
    if power == 1:
        roots, weights = roots_legendre(count)
    else:
        roots, weights = roots_gegenbauer(count, power / 2.0)
    theta = np.arccos(roots)
    order = np.argsort(theta)
    theta, weights = theta[order], weights[order]
    return theta, weights / np.sin(theta) ** power


def build_grid(model: ModelSpec, resolution: Sequence[int] | None = None) -> Grid:
    """Tensor-product quadrature grid on a closed model."""
    if not model.is_closed or model.axis_measures is None:
        raise NonClosedModelError(model.name)
    resolution = tuple(int(count) for count in (resolution or model.default_resolution or ()))
    if len(resolution) != model.dim:
        raise GridMismatchError(
            f"Grid for '{model.name}' needs {model.dim} axis counts, got {len(resolution)}",
            {"model": model.name, "resolution": list(resolution)},
        )
    if min(resolution) < MIN_NODES_PER_AXIS:
        raise GridMismatchError(
            f"Grid for '{model.name}' needs at least {MIN_NODES_PER_AXIS} nodes per axis, got {list(resolution)}"
        )

    rules = [_axis_rule(m.kind, m.power, count) for m, count in zip(model.axis_measures, resolution)]
    nodes = np.stack(np.meshgrid(*[r[0] for r in rules], indexing="ij"), axis=-1).reshape(-1, model.dim)
    weights = np.prod(np.stack(np.meshgrid(*[r[1] for r in rules], indexing="ij"), axis=-1), axis=-1).reshape(-1)

    g = model.chart.metric(nodes, 0).value
    density = np.sqrt(np.linalg.det(np.moveaxis(g, (0, 1), (-2, -1))))
    grid = Grid(model, resolution, nodes, weights, density)
    log.debug("grid %s on '%s': %d nodes, volume %.12g", grid.describe(), model.name, grid.size, grid.volume)
    return grid


def integrate(
    grid: Grid,
    integrand: Callable[[np.ndarray], np.ndarray],
    *,
    chunk_size: int = DEFAULT_CHUNK_SIZE,
    workers: int = 1,
) -> np.ndarray:
    """Integrate ``integrand(nodes) -> values`` against the grid's volume form.

    ``values`` may carry leading axes (several integrands at once); the node axis
    is last.
    """

    def partial(chunk: slice) -> np.ndarray:
        values = np.asarray(integrand(grid.nodes[chunk]), dtype=float)
        return values @ (grid.weights[chunk] * grid.density[chunk])

    chunks = grid.chunks(chunk_size)
    if workers > 1 and len(chunks) > 1:
        with ThreadPoolExecutor(max_workers=workers) as pool:
            partials = list(pool.map(partial, chunks))
    else:
        partials = [partial(chunk) for chunk in chunks]
    total = partials[0]
    for part in partials[1:]:
        total = total + part
    return np.asarray(total)


def integrate_scalar(grid: Grid, f: Field, **options) -> float:
    return float(integrate(grid, lambda nodes: f.evaluate(nodes, 0).value, **options))


def _check_model(grid: Grid, model: ModelSpec) -> None:
    if grid.model.name != model.name or grid.model.dim != model.dim:
        raise GridMismatchError(f"Grid built for '{grid.model.name}' used with model '{model.name}'")


def _metric_inverse(nodes_metric: np.ndarray) -> np.ndarray:
    return np.moveaxis(np.linalg.inv(np.moveaxis(nodes_metric, (0, 1), (-2, -1))), (-2, -1), (0, 1))


def _inner_values(g_inv: np.ndarray, a: np.ndarray, b: np.ndarray) -> np.ndarray:
    if a.ndim == g_inv.ndim:
        return np.einsum("ik...,jl...,ij...,kl...->...", g_inv, g_inv, a, b)
    return np.einsum("ij...,i...,j...->...", g_inv, a, b)


def l2_pair(grid: Grid, a: Field, b: Field, **options) -> float:
    """L2 inner product of two fields of equal rank (scalar, one-form or symmetric 2-tensor)."""
    if a.rank != b.rank:
        raise GridMismatchError(f"Cannot pair fields of rank {a.rank} and {b.rank}")

    def integrand(nodes: np.ndarray) -> np.ndarray:
        left, right = a.evaluate(nodes, 0).value, b.evaluate(nodes, 0).value
        if a.rank == 0:
            return left * right
        g_inv = _metric_inverse(grid.model.chart.metric(nodes, 0).value)
        return _inner_values(g_inv, left, right)

    return float(integrate(grid, integrand, **options))


def _pair_values(frame: CurvatureFrame, pairing: str, first: Field, second: Field) -> tuple[np.ndarray, np.ndarray]:
    """Pointwise integrands of both sides of an adjoint pair."""
    g_inv = frame.g_inv.value
    if pairing == "divergence":
        omega, h = first, second
        omega_jet = omega.evaluate(frame.points, min(_PAIR_FIELD_ORDER, omega.max_order))
        h_jet = h.evaluate(frame.points, min(_PAIR_FIELD_ORDER, h.max_order))
        lhs = _inner_values(g_inv, divergence_sym2(frame, h_jet).truncate(0).value, omega_jet.value)
        rhs = _inner_values(g_inv, h_jet.value, delta_star(frame, omega_jet).truncate(0).value)
        return lhs, rhs
    f, h = first, second
    f_jet = f.evaluate(frame.points, min(_PAIR_FIELD_ORDER, f.max_order))
    h_jet = h.evaluate(frame.points, min(_PAIR_FIELD_ORDER, h.max_order))
    if pairing == "gamma":
        return f_jet.value * gamma_linearized(frame, h_jet), _inner_values(
            g_inv, gamma_star(frame, f_jet).truncate(0).value, h_jet.value
        )
    return f_jet.value * lambda_linearized(frame, h_jet), _inner_values(
        g_inv, lambda_star(frame, f_jet).truncate(0).value, h_jet.value
    )


def adjointness_pairings(
    grid: Grid,
    pairs: Sequence[tuple[Field, Field]],
    pairing: Pairing,
    **options,
) -> list[PairingDefect]:
    """Both sides of ``int f P(h) = int <P* f, h>`` for every pair, sharing frames per chunk.

    For ``pairing="divergence"`` the pairs are ``(omega, h)`` and the identity is
    ``int <delta h, omega> = int <h, delta* omega>``.
    """
    if pairing not in _PAIR_ORDERS:
        raise GridMismatchError(f"Unknown adjoint pairing '{pairing}'")
    if not pairs:
        return []
    order = _PAIR_ORDERS[pairing]

    def integrand(nodes: np.ndarray) -> np.ndarray:
        frame = curvature_frame(grid.model.chart, nodes, order)
        rows = []
        for first, second in pairs:
            rows.extend(_pair_values(frame, pairing, first, second))
        return np.stack(rows, axis=0)

    totals = integrate(grid, integrand, **options).reshape(len(pairs), 2)
    return [PairingDefect(float(lhs), float(rhs)) for lhs, rhs in totals]


def adjointness_defect(grid: Grid, f: Field, h: Field, pair: Pairing, **options) -> float:
    """Relative defect ``|lhs - rhs| / max(1, |lhs|, |rhs|)`` of one adjoint pair."""
    return adjointness_pairings(grid, [(f, h)], pair, **options)[0].defect


def rayleigh_identity(model: ModelSpec, f: Field, grid: Grid, **options) -> PairingDefect:
    """``R/(n-1) int f^2`` next to ``int |grad f|^2``."""
    _check_model(grid, model)
    n = model.dim

    def integrand(nodes: np.ndarray) -> np.ndarray:
        frame = curvature_frame(model.chart, nodes, 2)
        f_jet = f.evaluate(nodes, 1)
        lhs = frame.scalar.value / (n - 1) * f_jet.value**2
        return np.stack([lhs, gradient_norm_squared(frame, f_jet)], axis=0)

    lhs, rhs = integrate(grid, integrand, **options)
    return PairingDefect(float(lhs), float(rhs))


def _stencil(point: np.ndarray, step: float) -> np.ndarray:
    """Base point, then +-step along each axis, then the four diagonal offsets per axis pair."""
    n = len(point)
    offsets = [np.zeros(n)]
    for i in range(n):
        for sign in (1.0, -1.0):
            offset = np.zeros(n)
            offset[i] = sign * step
            offsets.append(offset)
    for i in range(n):
        for j in range(i + 1, n):
            for si, sj in ((1.0, 1.0), (1.0, -1.0), (-1.0, 1.0), (-1.0, -1.0)):
                offset = np.zeros(n)
                offset[i], offset[j] = si * step, sj * step
                offsets.append(offset)
    return point + np.array(offsets)


def finite_difference_jet(values: np.ndarray, dim: int, step: float) -> Jet:
    """Order-2 jet from central differences of ``values`` sampled on :func:`_stencil`.

    ``values`` has the stencil axis last; leading axes are kept as tensor axes.
    """
    space = jet_space(dim, 2)
    coeffs = np.zeros(values.shape[:-1] + (space.size,))
    coeffs[..., 0] = values[..., 0]
    for i in range(dim):
        plus, minus = values[..., 1 + 2 * i], values[..., 2 + 2 * i]
        unit = [0] * dim
        unit[i] = 1
        coeffs[..., space.index(unit)] = (plus - minus) / (2.0 * step)
        unit[i] = 2
        coeffs[..., space.index(unit)] = (plus - 2.0 * values[..., 0] + minus) / (2.0 * step**2)
    column = 1 + 2 * dim
    for i in range(dim):
        for j in range(i + 1, dim):
            pp, pm, mp, mm = (values[..., column + k] for k in range(4))
            column += 4
            mixed = [0] * dim
            mixed[i] = mixed[j] = 1
            coeffs[..., space.index(mixed)] = (pp - pm - mp + mm) / (4.0 * step**2)
    return Jet(space, coeffs)


def _fd_value(
    model: ModelSpec, quantity: FiniteDifferenceQuantity, point: np.ndarray, step: float, f: Field, entry: tuple[int, int]
) -> float:
    stencil = _stencil(point, step)
    if not np.all(model.chart.contains(stencil)):
        raise StencilError(model.chart.name, step)
    n = model.dim
    if quantity in ("R", "sigma2"):
        g = finite_difference_jet(model.chart.metric(stencil, 0).value, n, step)
        frame = frame_from_metric(point, g, model.chart)
        return float(frame.scalar.value if quantity == "R" else sigma2(frame))
    stencil_frame = curvature_frame(model.chart, stencil, 2)
    ricci = finite_difference_jet(stencil_frame.ricci.value, n, step)
    scalar = finite_difference_jet(stencil_frame.scalar.value, n, step)
    hybrid = replace(curvature_frame(model.chart, point, 4), ricci=ricci, scalar=scalar)
    return float(lambda_star(hybrid, f.evaluate(point, 2)).value[entry])


def fd_cross_check(
    model: ModelSpec,
    quantity: FiniteDifferenceQuantity,
    point: Sequence[float],
    step: float = 1e-4,
    f: Field | None = None,
    entry: tuple[int, int] = (0, 0),
) -> FiniteDifferenceCheck:
    """Compare a jet-computed quantity with a finite-difference reconstruction.

    ``R`` and ``sigma2`` differentiate the metric twice numerically; the
    ``lambda_star_entry`` check differentiates analytic Ricci and scalar
    curvature twice numerically and feeds them to ``lambda_star``.
    """
    point = model.chart.check_points(np.asarray(point, dtype=float))
    f = f if f is not None else ScalarField.constant(1.0, "one")
    if quantity == "lambda_star_entry":
        jet_value = float(lambda_star(curvature_frame(model.chart, point, 4), f).value[entry])
    else:
        frame = curvature_frame(model.chart, point, 2)
        jet_value = float(frame.scalar.value if quantity == "R" else sigma2(frame))
    return FiniteDifferenceCheck(
        jet_value,
        _fd_value(model, quantity, point, step, f, entry),
        _fd_value(model, quantity, point, 2.0 * step, f, entry),
    )

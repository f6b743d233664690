"""Coordinate charts and smooth fields evaluated as jets.

A chart turns a point batch into the jet of its metric; a field turns a point
batch into the jet of a scalar, a symmetric 2-tensor or a one-form. Both are built
from closed-form expressions on coordinate seed jets, so every derivative is
exact up to rounding.
"""

from __future__ import annotations

import dataclasses
from abc import ABC, abstractmethod
from collections.abc import Callable, Sequence
from dataclasses import dataclass, field

import numpy as np

from .exceptions import ChartDomainError, GeometryError, JetOrderError, MetricNotPositiveDefiniteError
from .jets import MAX_ORDER, Jet, jet_seeds

CoordinateExpression = Callable[[Sequence[Jet]], "Jet | float"]

# Asymmetry above this (relative) means a metric expression is wrong, not rounding
SYMMETRY_TOLERANCE = 1e-12


def symmetry_defect(value: np.ndarray) -> float:
    """Largest |T_ij - T_ji| relative to max(1, max |T|) for a value array shaped (n, n, *batch)."""
    asymmetry = float(np.max(np.abs(value - np.swapaxes(value, 0, 1)), initial=0.0))
    return asymmetry / max(1.0, float(np.max(np.abs(value), initial=0.0)))


def metric_eigenvalues(metric_value: np.ndarray) -> np.ndarray:
    """Eigenvalues of a metric value array shaped ``(n, n, *batch)``."""
    matrices = np.moveaxis(metric_value, (0, 1), (-2, -1))
    return np.linalg.eigvalsh(matrices)


@dataclass(frozen=True)
class Chart:
    """A coordinate domain with a closed-form metric.

    Non-periodic axes are open intervals ``(lower, upper)``; periodic axes accept
    any real coordinate. ``ball_radius`` additionally restricts points to the open
    ball of that radius about the origin. ``scale`` multiplies the metric by
    ``scale**2`` (a homothety).
    """

    name: str
    metric_expression: CoordinateExpression
    lower: tuple[float, ...]
    upper: tuple[float, ...]
    periodic: tuple[bool, ...]
    ball_radius: float | None = None
    scale: float = 1.0

    @property
    def dim(self) -> int:
        return len(self.lower)

    def contains(self, points: np.ndarray) -> np.ndarray:
        """Boolean mask of points inside the chart domain."""
        points = np.asarray(points, dtype=float)
        inside = np.all(np.isfinite(points), axis=-1)
        for axis in range(self.dim):
            if not self.periodic[axis]:
                coordinate = points[..., axis]
                inside &= (coordinate > self.lower[axis]) & (coordinate < self.upper[axis])
        if self.ball_radius is not None:
            inside &= np.sum(points**2, axis=-1) < self.ball_radius**2
        return inside

    def check_points(self, points: np.ndarray) -> np.ndarray:
        points = np.asarray(points, dtype=float)
        if points.ndim == 0 or points.shape[-1] != self.dim:
            raise ChartDomainError(self.name, f"expected {self.dim} coordinates per point, got shape {points.shape}")
        inside = self.contains(points)
        if not np.all(inside):
            outside = points[~inside].reshape(-1, self.dim)[0]
            raise ChartDomainError(self.name, f"{np.array2string(outside, precision=6)} is outside the domain")
        return points

    def metric(self, points: np.ndarray, order: int) -> Jet:
        """Jet of the metric at ``points``, checked to be symmetric positive definite."""
        points = self.check_points(points)
        g = self.metric_expression(jet_seeds(points, order))
        if not isinstance(g, Jet) or g.shape[:2] != (self.dim, self.dim):
            raise GeometryError(f"Metric expression of chart '{self.name}' must return an {self.dim}x{self.dim} jet")
        if self.scale != 1.0:
            g = g * self.scale**2

        defect = symmetry_defect(g.value)
        if defect > SYMMETRY_TOLERANCE:
            raise GeometryError(f"Metric of chart '{self.name}' is not symmetric (defect {defect:.3e})")
        smallest = float(np.min(metric_eigenvalues(g.value)))
        if smallest <= 0.0:
            raise MetricNotPositiveDefiniteError(smallest, self.name)
        return g

    def scaled(self, factor: float) -> Chart:
        """The same chart with metric ``factor**2 * g``."""
        if factor <= 0.0:
            raise GeometryError(f"Homothety factor must be positive, got {factor}")
        return dataclasses.replace(self, name=f"{self.name}*{factor:g}", scale=self.scale * factor)


class Field(ABC):
    """A smooth field on a chart that can be evaluated as a jet at any order it supports."""

    name: str
    rank: int
    max_order: int

    @abstractmethod
    def evaluate(self, points: np.ndarray, order: int) -> Jet:
        """Jet of the field at ``points`` truncated to ``order``."""

    def _check_order(self, order: int) -> None:
        if not 0 <= order <= self.max_order:
            raise JetOrderError(
                f"Field '{self.name}' can be evaluated up to order {self.max_order}, requested {order}", order
            )


@dataclass(frozen=True)
class ExpressionField(Field):
    """Field given by a closed-form expression on coordinate seed jets.

    ``derivative_loss`` is the number of orders the expression consumes, e.g. 1 for
    a pullback that differentiates an embedding once; seeds are built that many
    orders higher.
    """

    name: str
    expression: CoordinateExpression
    derivative_loss: int = 0
    rank: int = field(default=0, init=False)

    @property
    def max_order(self) -> int:  # type: ignore[override]
        return MAX_ORDER - self.derivative_loss

    def evaluate(self, points: np.ndarray, order: int) -> Jet:
        self._check_order(order)
        points = np.asarray(points, dtype=float)
        seeds = jet_seeds(points, order + self.derivative_loss)
        result = self.expression(seeds)
        if not isinstance(result, Jet):
            tensor_shape = (points.shape[-1],) * self.rank
            value = np.asarray(result, dtype=float).reshape(tensor_shape + (1,) * (points.ndim - 1))
            value = np.broadcast_to(value, tensor_shape + points.shape[:-1])
            return Jet.constant(seeds[0].truncate(order).space, value)
        expected = (points.shape[-1],) * self.rank
        if result.shape[: self.rank] != expected:
            raise GeometryError(f"Field '{self.name}' returned shape {result.shape}, expected rank {self.rank}")
        return result.truncate(order)


@dataclass(frozen=True)
class ScalarField(ExpressionField):
    rank: int = field(default=0, init=False)

    @classmethod
    def constant(cls, value: float, name: str | None = None) -> ScalarField:
        return cls(name or f"const({value:g})", lambda _: float(value))


@dataclass(frozen=True)
class Sym2Field(ExpressionField):
    rank: int = field(default=2, init=False)

    def evaluate(self, points: np.ndarray, order: int) -> Jet:
        result = super().evaluate(points, order)
        if symmetry_defect(result.value) > SYMMETRY_TOLERANCE:
            raise GeometryError(f"Field '{self.name}' is not symmetric")
        return result


@dataclass(frozen=True)
class OneFormField(ExpressionField):
    rank: int = field(default=1, init=False)


@dataclass(frozen=True)
class MetricField(Field):
    """The metric of a chart viewed as a symmetric 2-tensor field."""

    chart: Chart
    rank: int = field(default=2, init=False)
    max_order: int = field(default=MAX_ORDER, init=False)

    @property
    def name(self) -> str:  # type: ignore[override]
        return f"g[{self.chart.name}]"

    def evaluate(self, points: np.ndarray, order: int) -> Jet:
        self._check_order(order)
        return self.chart.metric(points, order)

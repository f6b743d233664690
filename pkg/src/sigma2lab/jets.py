"""Truncated multivariate Taylor arithmetic.

A jet of order K in n variables holds the Taylor coefficients
``c_alpha = (d^alpha u)(x0) / alpha!`` of a quantity ``u`` at a base point, for every
multi-index ``alpha`` with ``|alpha| <= K``. Coefficients sit on the LAST axis of a
numpy array in graded-lexicographic order. Every leading axis is either a tensor
index or a batch (point) axis; they broadcast like ordinary numpy axes, which is
how one jet evaluates a whole grid chunk at once.

Products and contractions go through precomputed index tables: for each output
multi-index the pairs ``(beta, gamma)`` with ``beta + gamma = alpha`` are gathered,
multiplied and reduced with ``np.add.reduceat``. The graded ordering makes the
order-(K-1) layout a prefix of the order-K one, so truncation is a slice.
"""

from __future__ import annotations

import itertools
import math
from collections.abc import Callable, Sequence
from dataclasses import dataclass
from functools import lru_cache
from typing import Literal

import numpy as np

from .exceptions import JetDomainError, JetOrderError, JetShapeError

MAX_ORDER = 5

ElementaryFunction = Literal["sin", "cos", "exp", "log", "sqrt", "pow", "reciprocal"]
ArithmeticOp = Literal["+", "-", "*", "/", "add", "sub", "mul", "div"]

_ARITHMETIC_NAMES = {"add": "+", "sub": "-", "mul": "*", "div": "/"}


@dataclass(frozen=True, eq=False)
class JetSpace:
    """Index tables for jets of a fixed dimension and order.

    Obtain instances through :func:`jet_space`; they are cached, so two jets are
    compatible exactly when they share the same space object.
    """

    dim: int
    order: int
    exponents: np.ndarray
    degrees: np.ndarray
    factorials: np.ndarray
    lookup: dict[tuple[int, ...], int]
    product_left: np.ndarray
    product_right: np.ndarray
    product_starts: np.ndarray
    derivative_tables: tuple[tuple[np.ndarray, np.ndarray], ...]

    @property
    def size(self) -> int:
        return len(self.exponents)

    def index(self, alpha: Sequence[int]) -> int:
        """Position of multi-index ``alpha`` on the coefficient axis."""
        key = tuple(int(a) for a in alpha)
        if len(key) != self.dim or min(key, default=0) < 0:
            raise JetShapeError(f"Multi-index {key} not available in jets of dim {self.dim}")
        if sum(key) > self.order:
            raise JetOrderError(f"Multi-index {key} has degree {sum(key)} above the jet order {self.order}", sum(key))
        return self.lookup[key]

    def multiply(self, a: np.ndarray, b: np.ndarray) -> np.ndarray:
        """Truncated product of two coefficient arrays (broadcasting leading axes)."""
        terms = a[..., self.product_left] * b[..., self.product_right]
        return np.add.reduceat(terms, self.product_starts, axis=-1)

    def contract(self, subscripts: str, a: np.ndarray, b: np.ndarray) -> np.ndarray:
        """Truncated product with an einsum contraction over tensor axes.

        ``subscripts`` names tensor axes only, e.g. ``"ij,jk->ik"``; batch axes and
        the coefficient axis are appended automatically.
        """
        inputs, output = subscripts.replace(" ", "").split("->")
        left, right = inputs.split(",")
        terms = np.einsum(
            f"{left}...Z,{right}...Z->{output}...Z",
            a[..., self.product_left],
            b[..., self.product_right],
        )
        return np.add.reduceat(terms, self.product_starts, axis=-1)


@lru_cache(maxsize=None)
def jet_space(dim: int, order: int) -> JetSpace:
    """Build (once) the index tables for jets in ``dim`` variables up to ``order``."""
    if dim < 1:
        raise JetShapeError(f"Jet dimension must be positive, got {dim}")
    if not 0 <= order <= MAX_ORDER:
        raise JetOrderError(f"Jet order must lie in [0, {MAX_ORDER}], got {order}", order)

    exponents: list[tuple[int, ...]] = []
    for degree in range(order + 1):
        for combo in itertools.combinations_with_replacement(range(dim), degree):
            alpha = [0] * dim
            for axis in combo:
                alpha[axis] += 1
            exponents.append(tuple(alpha))
    lookup = {alpha: position for position, alpha in enumerate(exponents)}

    pairs = []
    for i, beta in enumerate(exponents):
        for j, gamma in enumerate(exponents):
            if sum(beta) + sum(gamma) <= order:
                pairs.append((lookup[tuple(b + c for b, c in zip(beta, gamma))], i, j))
    pairs.sort()
    table = np.array(pairs, dtype=np.intp)
    starts = np.searchsorted(table[:, 0], np.arange(len(exponents)))

    derivative_tables = []
    if order >= 1:
        lower = math.comb(dim + order - 1, dim)
        for axis in range(dim):
            sources = np.empty(lower, dtype=np.intp)
            multipliers = np.empty(lower)
            for position, beta in enumerate(exponents[:lower]):
                raised = list(beta)
                raised[axis] += 1
                sources[position] = lookup[tuple(raised)]
                multipliers[position] = raised[axis]
            derivative_tables.append((sources, multipliers))

    exponent_array = np.array(exponents, dtype=np.intp).reshape(len(exponents), dim)
    return JetSpace(
        dim=dim,
        order=order,
        exponents=exponent_array,
        degrees=exponent_array.sum(axis=1),
        factorials=np.array([math.prod(math.factorial(a) for a in alpha) for alpha in exponents], dtype=float),
        lookup=lookup,
        product_left=table[:, 1].copy(),
        product_right=table[:, 2].copy(),
        product_starts=starts,
        derivative_tables=tuple(derivative_tables),
    )


class Jet:
    """Order-K Taylor jet of a scalar, tensor or batch of either.

    ``coeffs`` has shape ``(*tensor_axes, *batch_axes, space.size)``. Arithmetic with
    plain numbers or numpy arrays treats them as constants broadcast against the
    leading axes.
    """

    __slots__ = ("space", "coeffs")
    __array_ufunc__ = None  # numpy defers to the reflected operators below

    def __init__(self, space: JetSpace, coeffs: np.ndarray):
        coeffs = np.asarray(coeffs, dtype=float)
        if coeffs.ndim == 0 or coeffs.shape[-1] != space.size:
            raise JetShapeError(
                f"Coefficient axis of length {coeffs.shape[-1] if coeffs.ndim else 0} "
                f"does not match jet space of size {space.size}"
            )
        self.space = space
        self.coeffs = coeffs

    @classmethod
    def constant(cls, space: JetSpace, value: np.ndarray | float) -> Jet:
        value = np.asarray(value, dtype=float)
        coeffs = np.zeros(value.shape + (space.size,))
        coeffs[..., 0] = value
        return cls(space, coeffs)

    @property
    def dim(self) -> int:
        return self.space.dim

    @property
    def order(self) -> int:
        return self.space.order

    @property
    def shape(self) -> tuple[int, ...]:
        return self.coeffs.shape[:-1]

    @property
    def ndim(self) -> int:
        return self.coeffs.ndim - 1

    @property
    def value(self) -> np.ndarray:
        """The constant term, i.e. the quantity itself at the base point."""
        return self.coeffs[..., 0]

    def __repr__(self) -> str:
        return f"Jet(dim={self.dim}, order={self.order}, shape={self.shape})"

    def __getitem__(self, key) -> Jet:
        return Jet(self.space, self.coeffs[key])

    def _require_compatible(self, other: Jet) -> None:
        if other.space is not self.space:
            if other.dim != self.dim:
                raise JetShapeError(f"Cannot combine jets of dimension {self.dim} and {other.dim}")
            raise JetOrderError(
                f"Cannot combine jets of order {self.order} and {other.order}; truncate first",
                min(self.order, other.order),
            )

    def _shifted(self, value: np.ndarray | float) -> Jet:
        value = np.asarray(value, dtype=float)
        shape = np.broadcast_shapes(self.shape, value.shape)
        coeffs = np.array(np.broadcast_to(self.coeffs, shape + (self.space.size,)))
        coeffs[..., 0] += value
        return Jet(self.space, coeffs)

    def __add__(self, other) -> Jet:
        if isinstance(other, Jet):
            self._require_compatible(other)
            return Jet(self.space, self.coeffs + other.coeffs)
        return self._shifted(other)

    __radd__ = __add__

    def __neg__(self) -> Jet:
        return Jet(self.space, -self.coeffs)

    def __sub__(self, other) -> Jet:
        if isinstance(other, Jet):
            self._require_compatible(other)
            return Jet(self.space, self.coeffs - other.coeffs)
        return self._shifted(-np.asarray(other, dtype=float))

    def __rsub__(self, other) -> Jet:
        return (-self)._shifted(other)

    def __mul__(self, other) -> Jet:
        if isinstance(other, Jet):
            self._require_compatible(other)
            return Jet(self.space, self.space.multiply(self.coeffs, other.coeffs))
        return Jet(self.space, self.coeffs * np.asarray(other, dtype=float)[..., None])

    __rmul__ = __mul__

    def __truediv__(self, other) -> Jet:
        if isinstance(other, Jet):
            return self * other.reciprocal()
        other = np.asarray(other, dtype=float)
        if np.any(other == 0.0):
            raise JetDomainError("division", "divisor is zero")
        return self * (1.0 / other)

    def __rtruediv__(self, other) -> Jet:
        return self.reciprocal() * other

    def __pow__(self, exponent: float) -> Jet:
        if float(exponent).is_integer() and exponent >= 0:
            result = Jet.constant(self.space, np.ones(self.shape))
            for _ in range(int(exponent)):
                result = result * self
            return result
        return self.map("pow", exponent)

    def truncate(self, order: int) -> Jet:
        """Drop all coefficients of degree above ``order``."""
        if order == self.order:
            return self
        if not 0 <= order <= self.order:
            raise JetOrderError(f"Cannot truncate an order-{self.order} jet to order {order}", order)
        space = jet_space(self.dim, order)
        return Jet(space, self.coeffs[..., : space.size])

    def diff(self, axis: int) -> Jet:
        """Partial derivative along ``axis``; the result has one order less."""
        if self.order == 0:
            raise JetOrderError("Cannot differentiate an order-0 jet", 0)
        if not 0 <= axis < self.dim:
            raise JetShapeError(f"Axis {axis} out of range for dimension {self.dim}")
        sources, multipliers = self.space.derivative_tables[axis]
        return Jet(jet_space(self.dim, self.order - 1), self.coeffs[..., sources] * multipliers)

    def gradient(self) -> Jet:
        """All partial derivatives, stacked on a new leading tensor axis."""
        parts = [self.diff(axis) for axis in range(self.dim)]
        return Jet(parts[0].space, np.stack([part.coeffs for part in parts], axis=0))

    def derivative(self, alpha: Sequence[int]) -> np.ndarray:
        """The partial derivative ``d^alpha`` of the quantity at the base point."""
        position = self.space.index(alpha)
        return self.coeffs[..., position] * self.space.factorials[position]

    def permute(self, *axes: int) -> Jet:
        """Reorder the leading tensor axes (numpy ``transpose`` convention)."""
        rest = tuple(range(len(axes), self.coeffs.ndim))
        return Jet(self.space, self.coeffs.transpose(tuple(axes) + rest))

    def einsum(self, subscripts: str) -> Jet:
        """Linear einsum over tensor axes, e.g. ``"aabc->bc"`` for a trace."""
        inputs, output = subscripts.replace(" ", "").split("->")
        return Jet(self.space, np.einsum(f"{inputs}...->{output}...", self.coeffs))

    def symmetrize(self) -> Jet:
        """Symmetric part of a rank-2 tensor jet."""
        return 0.5 * (self + self.permute(1, 0))

    def compose(self, taylor: Sequence[np.ndarray]) -> Jet:
        """Compose a one-variable function with this jet.

        ``taylor[k]`` is the k-th Taylor coefficient of the outer function at this
        jet's constant term (shape broadcastable to ``self.shape``).
        """
        shift = self.coeffs.copy()
        shift[..., 0] = 0.0
        result = np.zeros_like(self.coeffs)
        result[..., 0] = taylor[self.order]
        for k in range(self.order - 1, -1, -1):
            result = self.space.multiply(result, shift)
            result[..., 0] += taylor[k]
        return Jet(self.space, result)

    def map(self, function: ElementaryFunction, power: float | None = None) -> Jet:
        """Apply an elementary function, checking its domain at the base point."""
        return self.compose(_taylor_coefficients(function, self.value, self.order, power))

    def sin(self) -> Jet:
        return self.map("sin")

    def cos(self) -> Jet:
        return self.map("cos")

    def exp(self) -> Jet:
        return self.map("exp")

    def log(self) -> Jet:
        return self.map("log")

    def sqrt(self) -> Jet:
        return self.map("sqrt")

    def reciprocal(self) -> Jet:
        return self.map("reciprocal")


def _taylor_coefficients(
    function: ElementaryFunction, x0: np.ndarray, order: int, power: float | None
) -> list[np.ndarray]:
    factorials = [float(math.factorial(k)) for k in range(order + 1)]
    match function:
        case "sin" | "cos":
            sin, cos = np.sin(x0), np.cos(x0)
            cycle = [sin, cos, -sin, -cos] if function == "sin" else [cos, -sin, -cos, sin]
            return [cycle[k % 4] / factorials[k] for k in range(order + 1)]
        case "exp":
            base = np.exp(x0)
            return [base / factorials[k] for k in range(order + 1)]
        case "log":
            if np.any(x0 <= 0.0):
                raise JetDomainError("log", f"argument must be positive, got min {np.min(x0):g}")
            return [np.log(x0)] + [(-1.0) ** (k + 1) / (k * x0**k) for k in range(1, order + 1)]
        case "sqrt":
            return _taylor_coefficients("pow", x0, order, 0.5)
        case "reciprocal":
            if np.any(x0 == 0.0):
                raise JetDomainError("reciprocal", "argument is zero")
            return _taylor_coefficients("pow", x0, order, -1.0)
        case "pow":
            if power is None:
                raise JetDomainError("pow", "no exponent given")
            if float(power).is_integer():
                if power < 0 and np.any(x0 == 0.0):
                    raise JetDomainError("pow", f"negative power {power:g} of zero")
            elif np.any(x0 <= 0.0):
                raise JetDomainError("pow", f"non-integer power {power:g} needs a positive base")
            coefficients = []
            binomial = 1.0
            for k in range(order + 1):
                coefficients.append(binomial * x0 ** (power - k))
                binomial *= (power - k) / (k + 1)
            return coefficients
        case _:
            raise JetDomainError(str(function), "unknown elementary function")


def jet_seed(point: np.ndarray, axis: int, order: int) -> Jet:
    """Jet of the coordinate function ``x_axis`` at ``point`` (shape ``(..., dim)``)."""
    point = np.asarray(point, dtype=float)
    if point.ndim == 0:
        raise JetShapeError("Seed point must have a trailing coordinate axis")
    dim = point.shape[-1]
    if not 0 <= axis < dim:
        raise JetShapeError(f"Axis {axis} out of range for dimension {dim}")
    space = jet_space(dim, order)
    coeffs = np.zeros(point.shape[:-1] + (space.size,))
    coeffs[..., 0] = point[..., axis]
    if order >= 1:
        unit = [0] * dim
        unit[axis] = 1
        coeffs[..., space.index(unit)] = 1.0
    return Jet(space, coeffs)


def jet_seeds(point: np.ndarray, order: int) -> list[Jet]:
    """Coordinate jets for every axis of ``point``."""
    point = np.asarray(point, dtype=float)
    return [jet_seed(point, axis, order) for axis in range(point.shape[-1])]


def jet_constant(value: np.ndarray | float, dim: int, order: int) -> Jet:
    return Jet.constant(jet_space(dim, order), value)


def jet_arith(a: Jet | float, b: Jet | float, op: ArithmeticOp) -> Jet:
    """Binary arithmetic by operator symbol or name (``"*"`` or ``"mul"``)."""
    operations: dict[str, Callable] = {
        "+": lambda x, y: x + y,
        "-": lambda x, y: x - y,
        "*": lambda x, y: x * y,
        "/": lambda x, y: x / y,
    }
    symbol = _ARITHMETIC_NAMES.get(op, op)
    if symbol not in operations:
        raise JetShapeError(f"Unknown jet operation '{op}'")
    if not isinstance(a, Jet) and not isinstance(b, Jet):
        raise JetShapeError("At least one operand must be a jet")
    return operations[symbol](a, b)


def jet_map(a: Jet, function: ElementaryFunction, power: float | None = None) -> Jet:
    return a.map(function, power)


def jet_derivative(a: Jet, alpha: Sequence[int]) -> np.ndarray:
    return a.derivative(alpha)


def contract(subscripts: str, a: Jet, b: Jet) -> Jet:
    """Truncated product of two tensor jets contracted over named tensor axes."""
    a._require_compatible(b)
    return Jet(a.space, a.space.contract(subscripts, a.coeffs, b.coeffs))


def common_order(*jets: Jet) -> tuple[Jet, ...]:
    """Truncate all jets to the lowest order among them."""
    order = min(jet.order for jet in jets)
    return tuple(jet.truncate(order) for jet in jets)


def block(rows: Sequence, like: Jet) -> Jet:
    """Assemble a tensor jet from nested lists of jets and plain numbers.

    Plain numbers become constant jets in ``like``'s space with its batch shape.
    """

    def convert(entry):
        if isinstance(entry, Jet):
            return entry.coeffs
        if isinstance(entry, (list, tuple)):
            return np.stack([convert(item) for item in entry], axis=0)
        return Jet.constant(like.space, np.full(like.shape, float(entry))).coeffs

    return Jet(like.space, convert(rows))


def diagonal(entries: Sequence, like: Jet) -> Jet:
    """Diagonal rank-2 tensor jet from per-axis entries."""
    size = len(entries)
    return block([[entries[i] if i == j else 0.0 for j in range(size)] for i in range(size)], like)

"""Curvature frames and covariant differential operators on jets.

Index conventions: the Riemann tensor is ``R^l_abc = d_a Gamma^l_bc - d_b Gamma^l_ac
+ Gamma^l_am Gamma^m_bc - Gamma^l_bm Gamma^m_ac`` with ``R_abcd = g_dl R^l_abc``,
Ricci is ``R^a_abc`` and the curvature action on symmetric 2-tensors is
``(R h)_ij = R_kijs h^ks`` so that ``R g = Ric``. Laplacians are ``g^ab nabla_a
nabla_b`` (negative spectrum) and ``delta h = -div h``.

Each derivative costs one jet order: a frame built from an order-K metric carries
Christoffel symbols at order K-1 and curvature at order K-2.
"""

from __future__ import annotations

from dataclasses import dataclass, field
from typing import Literal

import numpy as np

from .exceptions import GeometryError, InsufficientOrderError, MetricNotPositiveDefiniteError
from .fields import Chart, Field, ScalarField, metric_eigenvalues
from .jets import MAX_ORDER, Jet, common_order, contract
from .logger import get_logger

log = get_logger(__name__)

_INDEX_LETTERS = "bcdefghij"


@dataclass(frozen=True, eq=False)
class CurvatureFrame:
    """Metric, inverse, Christoffel symbols and curvature at a batch of points."""

    points: np.ndarray
    g: Jet
    g_inv: Jet
    christoffel: Jet
    riemann: Jet
    ricci: Jet
    scalar: Jet
    chart: Chart | None = None

    @property
    def dim(self) -> int:
        return self.g.dim

    @property
    def order(self) -> int:
        return self.g.order

    @property
    def batch_shape(self) -> tuple[int, ...]:
        return self.points.shape[:-1]

    @property
    def batch_ndim(self) -> int:
        return self.points.ndim - 1

    def metric_at(self, order: int) -> Jet:
        return self.g.truncate(min(order, self.g.order))

    def inverse_at(self, order: int) -> Jet:
        return self.g_inv.truncate(min(order, self.g_inv.order))

    def one(self, order: int | None = None) -> Jet:
        """The constant function 1 as a jet over this frame's points."""
        g = self.g if order is None else self.g.truncate(order)
        return Jet.constant(g.space, np.ones(self.batch_shape))


def inverse_metric(g: Jet) -> Jet:
    """Jet of the matrix inverse via a Neumann series around the constant term."""
    n = g.shape[0]
    base_value = np.moveaxis(np.linalg.inv(np.moveaxis(g.value, (0, 1), (-2, -1))), (-2, -1), (0, 1))
    base = Jet.constant(g.space, base_value)
    step = -contract("ij,jk->ik", base, g - g.value)
    identity_value = np.broadcast_to(np.eye(n).reshape((n, n) + (1,) * (g.ndim - 2)), g.shape)
    identity = Jet.constant(g.space, identity_value)
    series = identity
    for _ in range(g.order):
        series = identity + contract("ij,jk->ik", step, series)
    return contract("ij,jk->ik", series, base)


def frame_from_metric(points: np.ndarray, g: Jet, chart: Chart | None = None) -> CurvatureFrame:
    """Curvature frame from an arbitrary metric jet (analytic or finite-difference)."""
    order = g.order
    if order < 2:
        raise InsufficientOrderError("curvature_frame", 2, order)
    smallest = float(np.min(metric_eigenvalues(g.value)))
    if smallest <= 0.0:
        raise MetricNotPositiveDefiniteError(smallest, chart.name if chart else None)

    g_inv = inverse_metric(g)

    dg = g.gradient()  # dg[l, i, j] = d_l g_ij
    first_kind = dg.permute(2, 0, 1) + dg.permute(2, 1, 0) - dg
    christoffel = 0.5 * contract("kl,lij->kij", g_inv.truncate(order - 1), first_kind)

    d_christoffel = christoffel.gradient()  # [a, l, b, c] = d_a Gamma^l_bc
    gamma = christoffel.truncate(order - 2)
    quadratic = contract("lam,mbc->labc", gamma, gamma)
    riemann_up = (
        d_christoffel.permute(1, 0, 2, 3)
        - d_christoffel.permute(1, 2, 0, 3)
        + quadratic
        - quadratic.permute(0, 2, 1, 3)
    )
    riemann = contract("dl,labc->abcd", g.truncate(order - 2), riemann_up)
    ricci = riemann_up.einsum("aabc->bc")
    scalar = contract("bc,bc->", g_inv.truncate(order - 2), ricci)

    return CurvatureFrame(
        points=np.asarray(points, dtype=float),
        g=g,
        g_inv=g_inv,
        christoffel=christoffel,
        riemann=riemann,
        ricci=ricci,
        scalar=scalar,
        chart=chart,
    )


def curvature_frame(chart: Chart, points: np.ndarray, order: int) -> CurvatureFrame:
    """Evaluate a chart's metric at ``points`` to ``order`` and derive its curvature."""
    points = np.asarray(points, dtype=float)
    if order < 2:
        raise InsufficientOrderError("curvature_frame", 2, order)
    g = chart.metric(points, order)
    log.debug("frame on '%s': order %d, %d point(s)", chart.name, order, int(np.prod(points.shape[:-1])))
    return frame_from_metric(points, g, chart)


def as_jet(frame: CurvatureFrame, field: Field | Jet, order: int | None = None) -> Jet:
    """Evaluate a field at the frame's points, or pass a jet through unchanged."""
    if isinstance(field, Jet):
        return field
    wanted = frame.order if order is None else order
    return field.evaluate(frame.points, min(wanted, field.max_order))


def tensor_rank(frame: CurvatureFrame, tensor: Jet) -> int:
    rank = tensor.ndim - frame.batch_ndim
    if rank < 0:
        raise GeometryError(f"Jet of shape {tensor.shape} does not match frame batch {frame.batch_shape}")
    return rank


def covariant_derivative(frame: CurvatureFrame, tensor: Jet, operation: str = "covariant_derivative") -> Jet:
    """``(nabla t)_{a i1..ir} = d_a t_{i1..ir} - sum_p Gamma^k_{a i_p} t_{..k..}``.

    The derivative index is prepended; the result has one order less than the
    input (or than the Christoffel symbols allow, whichever is lower).
    """
    rank = tensor_rank(frame, tensor)
    order = min(tensor.order, frame.christoffel.order + 1) - 1
    if order < 0:
        raise InsufficientOrderError(operation, 1, tensor.order)
    result = tensor.truncate(order + 1).gradient()
    if rank == 0:
        return result
    gamma = frame.christoffel.truncate(order)
    body = tensor.truncate(order)
    letters = _INDEX_LETTERS[:rank]
    for slot, letter in enumerate(letters):
        moved = letters[:slot] + "k" + letters[slot + 1 :]
        result = result - contract(f"ka{letter},{moved}->a{letters}", gamma, body)
    return result


def _require(operation: str, jet: Jet, required: int) -> None:
    if jet.order < required:
        raise InsufficientOrderError(operation, required, jet.order)


def hessian(frame: CurvatureFrame, f: Field | Jet) -> Jet:
    fj = as_jet(frame, f)
    _require("hessian", fj, 2)
    return covariant_derivative(frame, covariant_derivative(frame, fj, "hessian"), "hessian")


def laplacian_scalar(frame: CurvatureFrame, f: Field | Jet) -> Jet:
    hess = hessian(frame, f)
    return contract("ab,ab->", frame.inverse_at(hess.order), hess)


def trace(frame: CurvatureFrame, h: Field | Jet) -> Jet:
    hj = as_jet(frame, h)
    g_inv, hj = common_order(frame.g_inv, hj)
    return contract("ij,ij->", g_inv, hj)


def raise_both(frame: CurvatureFrame, h: Jet) -> Jet:
    """``h^{ij} = g^{ik} g^{jl} h_kl``."""
    g_inv, h = common_order(frame.g_inv, h)
    return contract("il,jl->ij", contract("ik,kl->il", g_inv, h), g_inv)


def inner(frame: CurvatureFrame, a: Jet, b: Jet) -> Jet:
    """Metric inner product of two symmetric 2-tensors."""
    a, b = common_order(a, b)
    return contract("ij,ij->", raise_both(frame, a), b)


def inner_one_form(frame: CurvatureFrame, a: Jet, b: Jet) -> Jet:
    g_inv, a, b = common_order(frame.g_inv, a, b)
    return contract("i,i->", contract("ij,j->i", g_inv, a), b)


def divergence_sym2(frame: CurvatureFrame, h: Field | Jet) -> Jet:
    """``(delta h)_j = -g^{ik} nabla_i h_kj``."""
    dh = covariant_derivative(frame, as_jet(frame, h), "divergence_sym2")
    return -contract("ik,ikj->j", frame.inverse_at(dh.order), dh)


def divergence_one_form(frame: CurvatureFrame, omega: Field | Jet) -> Jet:
    """``delta omega = -g^{ij} nabla_i omega_j``."""
    d_omega = covariant_derivative(frame, as_jet(frame, omega), "divergence_one_form")
    return -contract("ij,ij->", frame.inverse_at(d_omega.order), d_omega)


def double_divergence(frame: CurvatureFrame, h: Field | Jet) -> Jet:
    """``delta^2 h = nabla^i nabla^j h_ij``."""
    hj = as_jet(frame, h)
    _require("double_divergence", hj, 2)
    ddh = covariant_derivative(frame, covariant_derivative(frame, hj, "double_divergence"), "double_divergence")
    g_inv = frame.inverse_at(ddh.order)
    return contract("jb,bj->", g_inv, contract("ia,abij->bj", g_inv, ddh))


def delta_star(frame: CurvatureFrame, omega: Field | Jet) -> Jet:
    """Symmetrized covariant derivative of a one-form (formal adjoint of delta)."""
    return covariant_derivative(frame, as_jet(frame, omega), "delta_star").symmetrize()


def rough_laplacian_sym2(frame: CurvatureFrame, h: Field | Jet) -> Jet:
    hj = as_jet(frame, h)
    _require("rough_laplacian_sym2", hj, 2)
    ddh = covariant_derivative(frame, covariant_derivative(frame, hj, "rough_laplacian_sym2"))
    return contract("ab,abij->ij", frame.inverse_at(ddh.order), ddh)


def curvature_action(frame: CurvatureFrame, h: Field | Jet) -> Jet:
    """``(R h)_ij = R_kijs h^ks``."""
    hj = as_jet(frame, h)
    riemann, raised = common_order(frame.riemann, raise_both(frame, hj))
    return contract("kijs,ks->ij", riemann, raised)


DerivedQuantity = Literal["ricci", "scalar", "f_ricci", "f_scalar"]


@dataclass(frozen=True)
class DerivedField(Field):
    """Ricci or scalar curvature of a chart (optionally times a scalar) as a field.

    Evaluating at order m builds an order m+2 frame, so derived fields stop at
    order ``MAX_ORDER - 2``.
    """

    chart: Chart
    quantity: DerivedQuantity
    factor: ScalarField | None = None
    max_order: int = field(default=MAX_ORDER - 2, init=False)

    @property
    def name(self) -> str:  # type: ignore[override]
        base = "Ric" if self.quantity.endswith("ricci") else "R"
        return f"{self.factor.name}*{base}" if self.factor else base

    @property
    def rank(self) -> int:  # type: ignore[override]
        return 2 if self.quantity.endswith("ricci") else 0

    def evaluate(self, points: np.ndarray, order: int) -> Jet:
        if order > self.max_order:
            raise InsufficientOrderError(f"derived field '{self.name}'", order + 2, MAX_ORDER)
        self._check_order(order)
        frame = curvature_frame(self.chart, points, order + 2)
        result = frame.ricci if self.rank == 2 else frame.scalar
        if self.quantity.startswith("f_"):
            if self.factor is None:
                raise GeometryError(f"Derived quantity '{self.quantity}' needs a scalar factor")
            result = self.factor.evaluate(points, order) * result
        return result


def derived_field(chart: Chart, quantity: DerivedQuantity, f: ScalarField | None = None) -> DerivedField:
    return DerivedField(chart=chart, quantity=quantity, factor=f)

"""Sigma2-curvature, linearized curvature maps and their formal adjoints.

Everything here is a pure function of a :class:`CurvatureFrame` and optional
fields. Tensor-valued operators return jets (their order drops with every
derivative taken); scalar identities return value arrays over the frame's batch.

Orders needed, for a frame built at order K:

* ``gamma_star``, ``cpe_residual`` and the other Hessian residuals: K >= 2
* ``gamma_linearized``, ``lambda_linearized``: K >= 2 and h to order 2
* ``lambda_star`` and everything built on it: K >= 4
* divergence identities of ``lambda_star``: K >= 5
"""

from __future__ import annotations

from typing import NamedTuple

import numpy as np

from .exceptions import InsufficientOrderError, NotEinsteinError, RearrangementMismatchError
from .fields import Field
from .geometry import (
    CurvatureFrame,
    as_jet,
    curvature_action,
    delta_star,
    divergence_sym2,
    double_divergence,
    hessian,
    inner,
    laplacian_scalar,
    rough_laplacian_sym2,
    trace,
)
from .jets import Jet

# Max |traceless Ricci| for a frame to count as Einstein
EINSTEIN_TOLERANCE = 1e-10
# Relative agreement required between algebraically equivalent residual forms
REARRANGEMENT_TOLERANCE = 1e-12


class TraceComparison(NamedTuple):
    lhs: np.ndarray
    rhs: np.ndarray

    @property
    def defect(self) -> np.ndarray:
        return np.abs(self.lhs - self.rhs)


class LambdaStarOneDefects(NamedTuple):
    trace_defect: np.ndarray
    div_defect: np.ndarray | None


class DefectTensors(NamedTuple):
    """How far (g, f) is from solving the CPE and the vacuum static equation."""

    cpe: Jet
    static: Jet


class EinsteinClosedForm(NamedTuple):
    full: Jet
    closed: Jet


def _lambda_star_order(frame: CurvatureFrame, operation: str) -> None:
    if frame.order < 4:
        raise InsufficientOrderError(operation, 4, frame.order)


def _sigma2_weight(n: int) -> float:
    return n / (8.0 * (n - 1))


def _linear_weight(n: int) -> float:
    return n / (4.0 * (n - 1))


def traceless_ricci(frame: CurvatureFrame) -> Jet:
    n = frame.dim
    return frame.ricci - (frame.scalar / n) * frame.metric_at(frame.ricci.order)


def schouten(frame: CurvatureFrame) -> Jet:
    n = frame.dim
    return frame.ricci - (frame.scalar / (2.0 * (n - 1))) * frame.metric_at(frame.ricci.order)


def ricci_eigenvalues(frame: CurvatureFrame) -> np.ndarray:
    """Sorted eigenvalues of ``g^-1 Ric`` per point, shape ``(*batch, n)``."""
    endomorphism = np.einsum("ik...,kj...->...ij", frame.g_inv.value, frame.ricci.value)
    return np.sort(np.linalg.eigvals(endomorphism).real, axis=-1)


def traceless_ricci_norm(frame: CurvatureFrame) -> np.ndarray:
    """``|traceless Ric|`` at order 0."""
    traceless = traceless_ricci(frame).truncate(0)
    return np.sqrt(np.maximum(inner(frame, traceless, traceless).value, 0.0))


def sigma2_jet(frame: CurvatureFrame, order: int | None = None) -> Jet:
    """``sigma2 = -|Ric|^2 / 2 + n R^2 / (8(n-1))`` as a jet (order K-2 by default)."""
    order = frame.ricci.order if order is None else order
    ricci, scalar = frame.ricci.truncate(order), frame.scalar.truncate(order)
    return -0.5 * inner(frame, ricci, ricci) + _sigma2_weight(frame.dim) * (scalar * scalar)


def sigma2(frame: CurvatureFrame) -> np.ndarray:
    return sigma2_jet(frame, order=0).value


def sigma2_from_schouten(frame: CurvatureFrame) -> np.ndarray:
    """Second elementary symmetric function of the Schouten eigenvalues, ``((tr A)^2 - |A|^2) / 2``."""
    a = schouten(frame).truncate(0)
    tr_a = trace(frame, a).value
    return 0.5 * (tr_a**2 - inner(frame, a, a).value)


def einstein_sigma2(n: int, scalar: float) -> float:
    """Sigma2 of an Einstein metric with scalar curvature ``scalar``."""
    return (n - 2) ** 2 * scalar**2 / (8.0 * n * (n - 1))


def gamma_linearized(frame: CurvatureFrame, h: Field | Jet) -> np.ndarray:
    """Linearized scalar curvature ``-Delta tr h + delta^2 h - <Ric, h>``."""
    hj = as_jet(frame, h)
    if hj.order < 2:
        raise InsufficientOrderError("gamma_linearized", 2, hj.order)
    tr_h = trace(frame, hj)
    return (
        -laplacian_scalar(frame, tr_h).value
        + double_divergence(frame, hj).value
        - inner(frame, frame.ricci.truncate(0), hj.truncate(0)).value
    )


def gamma_star(frame: CurvatureFrame, f: Field | Jet) -> Jet:
    """``nabla^2 f - (Delta f) g - f Ric``; also the vacuum static operator."""
    fj = as_jet(frame, f)
    hess = hessian(frame, fj)
    order = hess.order
    lap = trace(frame, hess)
    return hess - lap * frame.metric_at(order) - fj.truncate(order) * frame.ricci.truncate(order)


def lambda_linearized(frame: CurvatureFrame, h: Field | Jet) -> np.ndarray:
    """Linearization of sigma2 in direction ``h``."""
    hj = as_jet(frame, h)
    if hj.order < 2:
        raise InsufficientOrderError("lambda_linearized", 2, hj.order)
    tr_h = trace(frame, hj)
    bracket = (
        rough_laplacian_sym2(frame, hj).truncate(0)
        + hessian(frame, tr_h).truncate(0)
        + 2.0 * delta_star(frame, divergence_sym2(frame, hj)).truncate(0)
        + 2.0 * curvature_action(frame, hj).truncate(0)
    )
    ricci_term = 0.5 * inner(frame, frame.ricci.truncate(0), bracket).value
    scalar = frame.scalar.value
    return ricci_term + _linear_weight(frame.dim) * scalar * gamma_linearized(frame, hj)


def lambda_star(frame: CurvatureFrame, f: Field | Jet) -> Jet:
    """Formal L2 adjoint of :func:`lambda_linearized`, returned at order ``min(K, order f) - 4``."""
    _lambda_star_order(frame, "lambda_star")
    fj = as_jet(frame, f)
    order = min(fj.order, frame.ricci.order)
    if order < 2:
        raise InsufficientOrderError("lambda_star", 4, fj.order)
    low = order - 2
    f_top = fj.truncate(order)
    ricci, scalar = frame.ricci.truncate(order), frame.scalar.truncate(order)
    f_ricci = f_top * ricci
    f_scalar = f_top * scalar
    g = frame.metric_at(low)

    ricci_part = (
        0.5 * rough_laplacian_sym2(frame, f_ricci)
        + 0.5 * double_divergence(frame, f_ricci) * g
        + delta_star(frame, divergence_sym2(frame, f_ricci))
        + f_top.truncate(low) * curvature_action(frame, frame.ricci).truncate(low)
    )
    scalar_part = (
        laplacian_scalar(frame, f_scalar) * g - hessian(frame, f_scalar) + f_scalar.truncate(low) * ricci.truncate(low)
    )
    return ricci_part - _linear_weight(frame.dim) * scalar_part


def trace_lambda_star_direct(frame: CurvatureFrame, f: Field | Jet) -> TraceComparison:
    """``tr Lambda*(f)`` next to ``(2-n)/4 R Delta f + (n-2)/2 <Hess f, Ric> - 2 sigma2 f``."""
    n = frame.dim
    fj = as_jet(frame, f)
    lhs = trace(frame, lambda_star(frame, fj).truncate(0)).value
    hess = hessian(frame, fj).truncate(0)
    lap = trace(frame, hess).value
    rhs = (
        (2 - n) / 4.0 * frame.scalar.value * lap
        + (n - 2) / 2.0 * inner(frame, hess, frame.ricci.truncate(0)).value
        - 2.0 * sigma2(frame) * fj.value
    )
    return TraceComparison(lhs, rhs)


def lambda_star_one_closed_form(frame: CurvatureFrame) -> Jet:
    """``Lambda*(1)`` written through curvature alone.

    ``Delta Ric / 2 - Delta R g / (4(n-1)) + (2-n) Hess R / (4(n-1)) + R(Ric) - n R Ric / (4(n-1))``
    """
    _lambda_star_order(frame, "lambda_star_one_closed_form")
    n = frame.dim
    ricci, scalar = frame.ricci, frame.scalar
    low = ricci.order - 2
    g = frame.metric_at(low)
    return (
        0.5 * rough_laplacian_sym2(frame, ricci)
        - laplacian_scalar(frame, scalar) * g / (4.0 * (n - 1))
        + (2 - n) / (4.0 * (n - 1)) * hessian(frame, scalar)
        + curvature_action(frame, ricci).truncate(low)
        - _linear_weight(n) * (scalar * ricci).truncate(low)
    )


def _divergence_defect(frame: CurvatureFrame, tensor: Jet, f: Jet, potential: Jet) -> np.ndarray:
    """``div tensor + f d(potential) / 2`` at order 0."""
    divergence = -divergence_sym2(frame, tensor).truncate(0).value
    return divergence + 0.5 * f.value * potential.truncate(1).gradient().value


def lambda_star_one_identities(frame: CurvatureFrame) -> LambdaStarOneDefects:
    """Trace and divergence defects of ``Lambda*(1)``; the divergence needs order 5."""
    _lambda_star_order(frame, "lambda_star_one_identities")
    one = frame.one()
    lambda_one = lambda_star(frame, one)
    trace_defect = trace(frame, lambda_one.truncate(0)).value + 2.0 * sigma2(frame)
    div_defect = None
    if lambda_one.order >= 1:
        div_defect = _divergence_defect(frame, lambda_one, one, sigma2_jet(frame))
    return LambdaStarOneDefects(trace_defect, div_defect)


def lambda_star_divergence_defect(frame: CurvatureFrame, f: Field | Jet) -> np.ndarray:
    """``div Lambda*(f) + f d sigma2 / 2``, which vanishes for every f (needs order 5)."""
    if frame.order < 5:
        raise InsufficientOrderError("lambda_star_divergence_defect", 5, frame.order)
    fj = as_jet(frame, f)
    return _divergence_defect(frame, lambda_star(frame, fj), fj, sigma2_jet(frame))


def gamma_star_divergence_defect(frame: CurvatureFrame, f: Field | Jet) -> np.ndarray:
    """``div gamma*(f) + f dR / 2``, which vanishes for every f (needs order 3)."""
    if frame.order < 3:
        raise InsufficientOrderError("gamma_star_divergence_defect", 3, frame.order)
    fj = as_jet(frame, f)
    return _divergence_defect(frame, gamma_star(frame, fj), fj, frame.scalar)


def einstein_lambda_star_closed_form(frame: CurvatureFrame, f: Field | Jet) -> EinsteinClosedForm:
    """``Lambda*(f)`` next to ``R(n-2)^2 / (4n(n-1)) (Hess f - Delta f g - R f g / n)``."""
    traceless = np.max(np.abs(traceless_ricci(frame).value), initial=0.0)
    if traceless > EINSTEIN_TOLERANCE:
        raise NotEinsteinError(float(traceless))
    n = frame.dim
    fj = as_jet(frame, f)
    full = lambda_star(frame, fj)
    order = full.order
    hess = hessian(frame, fj).truncate(order)
    g = frame.metric_at(order)
    scalar = frame.scalar.truncate(order)
    bracket = hess - trace(frame, hess) * g - (scalar * fj.truncate(order) / n) * g
    closed = scalar * (n - 2) ** 2 / (4.0 * n * (n - 1)) * bracket
    return EinsteinClosedForm(full, closed)


def defect_tensors(frame: CurvatureFrame, f: Field | Jet) -> DefectTensors:
    fj = as_jet(frame, f)
    hess = hessian(frame, fj)
    order = hess.order
    n = frame.dim
    shifted_ricci = frame.ricci.truncate(order) - frame.scalar.truncate(order) / (n - 1) * frame.metric_at(order)
    f_shifted = fj.truncate(order) * shifted_ricci
    cpe = hess - traceless_ricci(frame).truncate(order) - f_shifted
    static = hess - f_shifted
    return DefectTensors(cpe, static)


def cpe_residual(frame: CurvatureFrame, f: Field | Jet) -> Jet:
    """``gamma*(f) - traceless Ric``; zero exactly for solutions of the critical point equation.

    The two equivalent trace-free rearrangements of the equation are evaluated as
    well and must agree with each other and with the trace-adjusted residual.
    """
    fj = as_jet(frame, f)
    vacuum = gamma_star(frame, fj)
    residual = vacuum - traceless_ricci(frame).truncate(vacuum.order)
    _check_rearrangements(frame, fj, residual)
    return residual


def _check_rearrangements(frame: CurvatureFrame, fj: Jet, residual: Jet) -> None:
    n = frame.dim
    g = frame.g.value
    ricci, scalar = frame.ricci.value, frame.scalar.value
    f = fj.value
    hess = hessian(frame, fj).value
    traceless = traceless_ricci(frame).value
    rho = residual.value

    shifted_form = hess - (ricci - scalar / (n - 1) * g) * f - traceless
    obata_form = hess + (scalar * f / (n * (n - 1))) * g - (1.0 + f) * traceless
    trace_adjusted = rho - (trace(frame, residual.truncate(0)).value / (n - 1)) * g

    scale = 1.0 + np.max(np.abs(hess), initial=0.0) + np.max(np.abs(ricci), initial=0.0) * (
        1.0 + np.max(np.abs(f), initial=0.0)
    )
    for label, other in (("obata form", obata_form), ("trace-adjusted form", trace_adjusted)):
        mismatch = float(np.max(np.abs(shifted_form - other), initial=0.0))
        if mismatch > REARRANGEMENT_TOLERANCE * scale:
            raise RearrangementMismatchError(f"cpe_residual ({label})", mismatch)


def vacuum_static_residual(frame: CurvatureFrame, f: Field | Jet) -> Jet:
    return gamma_star(frame, f)


def laplacian_eigen_relation(frame: CurvatureFrame, f: Field | Jet) -> np.ndarray:
    """``Delta f + R f / (n-1)``, the trace consequence of the vacuum static equation."""
    fj = as_jet(frame, f)
    return laplacian_scalar(frame, fj).value + frame.scalar.value * fj.value / (frame.dim - 1)


def obata_residual(frame: CurvatureFrame, f: Field | Jet) -> Jet:
    """``Hess f + R f g / (n(n-1))``."""
    n = frame.dim
    fj = as_jet(frame, f)
    hess = hessian(frame, fj)
    order = hess.order
    return hess + (frame.scalar.truncate(order) * fj.truncate(order) / (n * (n - 1))) * frame.metric_at(order)


def _trace_identity_tail(frame: CurvatureFrame, defect: Jet) -> np.ndarray:
    n = frame.dim
    defect = defect.truncate(0)
    return (2 - n) / 4.0 * frame.scalar.value * trace(frame, defect).value + (n - 2) / 2.0 * inner(
        frame, defect, frame.ricci.truncate(0)
    ).value


def cpe_trace_identity(frame: CurvatureFrame, f: Field | Jet) -> np.ndarray:
    """Residual of ``tr Lambda*(f) = (n-2+nf)/2 |traceless Ric|^2 + (2-n)/4 R tr D + (n-2)/2 <D, Ric>``.

    ``D`` is the CPE defect tensor, so the identity holds for every f and reduces to
    the trace formula for CPE metrics when ``D = 0``.
    """
    _lambda_star_order(frame, "cpe_trace_identity")
    n = frame.dim
    fj = as_jet(frame, f)
    lhs = trace_lambda_star_direct(frame, fj).lhs
    traceless = traceless_ricci(frame).truncate(0)
    norm = inner(frame, traceless, traceless).value
    rhs = (n - 2 + n * fj.value) / 2.0 * norm + _trace_identity_tail(frame, defect_tensors(frame, fj).cpe)
    return lhs - rhs


def static_trace_identity(frame: CurvatureFrame, f: Field | Jet) -> np.ndarray:
    """Residual of ``tr Lambda*(f) = n/2 |traceless Ric|^2 f + (2-n)/4 R tr E + (n-2)/2 <E, Ric>``."""
    _lambda_star_order(frame, "static_trace_identity")
    n = frame.dim
    fj = as_jet(frame, f)
    lhs = trace_lambda_star_direct(frame, fj).lhs
    traceless = traceless_ricci(frame).truncate(0)
    norm = inner(frame, traceless, traceless).value
    rhs = n / 2.0 * norm * fj.value + _trace_identity_tail(frame, defect_tensors(frame, fj).static)
    return lhs - rhs


def gradient_norm_squared(frame: CurvatureFrame, f: Field | Jet) -> np.ndarray:
    """``|grad f|^2`` at order 0."""
    gradient = as_jet(frame, f).truncate(1).gradient().value
    return np.einsum("ij...,i...,j...->...", frame.g_inv.value, gradient, gradient)

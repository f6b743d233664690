"""Tests for sigma2-curvature operators."""

import numpy as np
import pytest

from sigma2lab.exceptions import InsufficientOrderError, NotEinsteinError
from sigma2lab.fields import MetricField, ScalarField
from sigma2lab.geometry import curvature_frame, trace
from sigma2lab.models import get_model, random_scalar_field, random_sym2_field
from sigma2lab.operators import (
    cpe_residual,
    cpe_trace_identity,
    defect_tensors,
    einstein_lambda_star_closed_form,
    einstein_sigma2,
    gamma_linearized,
    gamma_star_divergence_defect,
    gradient_norm_squared,
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
    traceless_ricci_norm,
    vacuum_static_residual,
)


def frame_for(model, rng, order, count=4):
    return curvature_frame(model.chart, model.sample_points(rng, count), order)


class TestSigma2:
    """Test sigma2 values on the model geometries."""

    @pytest.mark.parametrize(
        ("name", "expected"),
        [("s3_r1", 0.75), ("s4_r1", 6.0), ("s2_r1", 0.0), ("s2xs2_r1_r2", -1.0 / 48.0), ("flat_torus3", 0.0)],
    )
    def test_known_values(self, rng, name, expected):
        """Test sigma2 against closed-form values."""
        assert np.allclose(sigma2(frame_for(get_model(name), rng, 2)), expected, atol=1e-10)

    def test_einstein_formula(self):
        """Test the closed form of sigma2 for Einstein metrics."""
        assert einstein_sigma2(3, 6.0) == pytest.approx(0.75)
        assert einstein_sigma2(4, 12.0) == pytest.approx(6.0)
        assert einstein_sigma2(2, 2.0) == 0.0

    def test_schouten_form_agrees(self, torus_model, rng):
        """Test that both sigma2 formulas agree on a generic metric."""
        frame = frame_for(torus_model, rng, 2, 10)
        assert np.allclose(sigma2_from_schouten(frame), sigma2(frame), atol=1e-12)

    def test_traceless_ricci_of_product(self, product_model, rng):
        """Test |traceless Ric|^2 and the Ricci spectrum of S^2(1) x S^2(2)."""
        frame = frame_for(product_model, rng, 2)
        assert np.allclose(traceless_ricci_norm(frame) ** 2, 0.5625)
        assert np.allclose(ricci_eigenvalues(frame), [0.25, 0.25, 1.0, 1.0])

    def test_sphere_is_einstein(self, s3_model, rng):
        """Test vanishing traceless Ricci on the round sphere."""
        assert np.allclose(traceless_ricci_norm(frame_for(s3_model, rng, 2)), 0.0, atol=1e-7)


class TestLinearizations:
    """Test the linearized curvature maps."""

    def test_metric_direction(self, torus_model, rng):
        """Test gamma(g) = -R and Lambda(g) = -2 sigma2."""
        frame = frame_for(torus_model, rng, 2)
        g = MetricField(torus_model.chart)
        assert np.allclose(gamma_linearized(frame, g), -frame.scalar.value, atol=1e-12)
        assert np.allclose(lambda_linearized(frame, g), -2.0 * sigma2(frame), atol=1e-12)

    def test_lambda_vanishes_in_two_dimensions(self, s2_model, rng):
        """Test that sigma2 has zero linearization on surfaces."""
        frame = frame_for(s2_model, rng, 2)
        h = random_sym2_field(s2_model, rng)
        assert np.allclose(lambda_linearized(frame, h), 0.0, atol=1e-10)

    def test_needs_second_order_direction(self, torus_model, rng):
        """Test rejection of a direction known only to first order."""
        frame = frame_for(torus_model, rng, 2)
        h = random_sym2_field(torus_model, rng).evaluate(frame.points, 1)
        with pytest.raises(InsufficientOrderError):
            gamma_linearized(frame, h)


class TestLambdaStar:
    """Test the formal adjoint of the sigma2 linearization."""

    def test_trace_of_one_on_product(self, product_model, rng):
        """Test tr Lambda*(1) = 1/24 on S^2(1) x S^2(2)."""
        frame = frame_for(product_model, rng, 4)
        assert np.allclose(trace(frame, lambda_star(frame, frame.one()).truncate(0)).value, 1.0 / 24.0, atol=1e-10)

    def test_closed_form_of_one(self, torus_model, rng):
        """Test the curvature-only expression of Lambda*(1)."""
        frame = frame_for(torus_model, rng, 4)
        assert np.allclose(lambda_star_one_closed_form(frame).value, lambda_star(frame, frame.one()).value, atol=1e-11)

    def test_trace_formula(self, torus_model, rng):
        """Test the direct trace formula for a random function."""
        frame = frame_for(torus_model, rng, 4)
        comparison = trace_lambda_star_direct(frame, random_scalar_field(torus_model, rng))
        assert np.all(comparison.defect < 1e-10)

    def test_one_identities(self, torus_model, rng):
        """Test the trace and divergence of Lambda*(1)."""
        defects = lambda_star_one_identities(frame_for(torus_model, rng, 5))
        assert np.allclose(defects.trace_defect, 0.0, atol=1e-10)
        assert defects.div_defect is not None
        assert np.allclose(defects.div_defect, 0.0, atol=1e-9)

    def test_one_divergence_needs_fifth_order(self, torus_model, rng):
        """Test that the divergence is skipped on a fourth-order frame."""
        assert lambda_star_one_identities(frame_for(torus_model, rng, 4)).div_defect is None

    def test_divergence_identities(self, torus_model, rng):
        """Test div Lambda*(f) = -f d sigma2 / 2 and div gamma*(f) = -f dR / 2."""
        f = random_scalar_field(torus_model, rng)
        frame = frame_for(torus_model, rng, 5)
        assert np.allclose(lambda_star_divergence_defect(frame, f), 0.0, atol=1e-9)
        assert np.allclose(gamma_star_divergence_defect(frame, f), 0.0, atol=1e-11)

    def test_divergence_orders(self, torus_model, rng):
        """Test the orders the divergence identities need."""
        f = random_scalar_field(torus_model, rng)
        with pytest.raises(InsufficientOrderError):
            lambda_star_divergence_defect(frame_for(torus_model, rng, 4), f)
        with pytest.raises(InsufficientOrderError):
            gamma_star_divergence_defect(frame_for(torus_model, rng, 2), f)

    def test_needs_fourth_order(self, torus_model, rng):
        """Test rejection of frames below order 4."""
        frame = frame_for(torus_model, rng, 3)
        with pytest.raises(InsufficientOrderError):
            lambda_star(frame, frame.one())

    def test_einstein_closed_form(self, s3_model, rng):
        """Test the Einstein closed form for a random function on S^3."""
        result = einstein_lambda_star_closed_form(frame_for(s3_model, rng, 4), random_scalar_field(s3_model, rng))
        assert np.allclose(result.full.value, result.closed.value, atol=1e-9)

    def test_einstein_closed_form_refuses_product(self, product_model, rng):
        """Test that the closed form refuses a non-Einstein metric."""
        with pytest.raises(NotEinsteinError):
            einstein_lambda_star_closed_form(frame_for(product_model, rng, 4), ScalarField.constant(1.0))

    @pytest.mark.parametrize("identity", [cpe_trace_identity, static_trace_identity])
    def test_extended_trace_identities(self, product_model, rng, identity):
        """Test the trace identities that hold for every function."""
        frame = frame_for(product_model, rng, 4)
        assert np.allclose(identity(frame, random_scalar_field(product_model, rng)), 0.0, atol=1e-9)


class TestSphereKernel:
    """Test the Hessian equations on the round sphere."""

    def test_coordinate_functions_solve_static_equation(self, s3_model, rng):
        """Test that x0 on S^3 solves the vacuum static equation and the CPE."""
        frame = frame_for(s3_model, rng, 2)
        x0 = s3_model.kernel_candidates[0]
        assert np.allclose(vacuum_static_residual(frame, x0).value, 0.0, atol=1e-10)
        assert np.allclose(cpe_residual(frame, x0).value, 0.0, atol=1e-10)
        assert np.allclose(laplacian_eigen_relation(frame, x0), 0.0, atol=1e-10)
        assert np.allclose(obata_residual(frame, x0).value, 0.0, atol=1e-10)

    def test_defects_vanish_for_kernel(self, s3_model, rng):
        """Test both defect tensors for a kernel function."""
        defects = defect_tensors(frame_for(s3_model, rng, 2), s3_model.kernel_candidates[1])
        assert np.allclose(defects.cpe.value, 0.0, atol=1e-10)
        assert np.allclose(defects.static.value, 0.0, atol=1e-10)

    def test_negative_control_is_not_in_kernel(self, s3_model, rng):
        """Test that x0^2 violates the Hessian equation."""
        frame = frame_for(s3_model, rng, 2)
        assert np.max(np.abs(obata_residual(frame, s3_model.negative_controls[0]).value)) > 1e-3


class TestGradientNorm:
    """Test |grad f|^2."""

    def test_flat(self, flat_model, rng):
        """Test |grad sin(x0)|^2 = cos(x0)^2 on the flat torus."""
        frame = frame_for(flat_model, rng, 2)
        f = ScalarField("sin", lambda x: x[0].sin())
        assert np.allclose(gradient_norm_squared(frame, f), np.cos(frame.points[:, 0]) ** 2)

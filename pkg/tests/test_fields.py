"""Tests for charts and fields."""

import numpy as np
import pytest

from sigma2lab.exceptions import ChartDomainError, GeometryError, JetOrderError, MetricNotPositiveDefiniteError
from sigma2lab.fields import (
    Chart,
    MetricField,
    OneFormField,
    ScalarField,
    Sym2Field,
    metric_eigenvalues,
    symmetry_defect,
)
from sigma2lab.jets import MAX_ORDER, block, diagonal


def plane_chart(metric=None, **kwargs) -> Chart:
    expression = metric or (lambda x: diagonal([1.0, 1.0], like=x[0]))
    return Chart("plane", expression, (-1.0, -1.0), (1.0, 1.0), (False, False), **kwargs)


class TestHelpers:
    """Test symmetry and eigenvalue helpers."""

    def test_symmetry_defect(self):
        """Test the relative asymmetry of a value array."""
        value = np.array([[2.0, 1.0], [1.0, 2.0]])
        assert symmetry_defect(value) == 0.0
        value[0, 1] = 1.5
        assert symmetry_defect(value) == pytest.approx(0.25)

    def test_metric_eigenvalues_move_tensor_axes(self):
        """Test eigenvalues of a batch of metrics stored tensor-axes first."""
        values = np.stack([np.diag([1.0, 3.0]), np.diag([2.0, 5.0])], axis=-1)
        assert np.allclose(metric_eigenvalues(values), [[1.0, 3.0], [2.0, 5.0]])


class TestChart:
    """Test chart domains and metric evaluation."""

    def test_contains(self):
        """Test the open box and ball restrictions."""
        chart = plane_chart(ball_radius=0.5)
        mask = chart.contains(np.array([[0.1, 0.1], [0.45, 0.45], [2.0, 0.0], [np.nan, 0.0]]))
        assert mask.tolist() == [True, False, False, False]

    def test_periodic_axes_accept_any_coordinate(self):
        """Test that periodic axes are not bounded."""
        chart = Chart("circle", lambda x: diagonal([1.0], like=x[0]), (0.0,), (1.0,), (True,))
        assert chart.contains(np.array([[7.5], [-3.0]])).all()

    def test_wrong_coordinate_count(self):
        """Test rejection of points with the wrong number of coordinates."""
        with pytest.raises(ChartDomainError, match="expected 2 coordinates"):
            plane_chart().check_points(np.array([0.0, 0.0, 0.0]))

    def test_point_outside(self):
        """Test rejection of points outside the domain."""
        with pytest.raises(ChartDomainError, match="outside the domain"):
            plane_chart().metric(np.array([[0.0, 0.0], [1.5, 0.0]]), 2)

    def test_metric_is_batched(self):
        """Test that the metric jet carries the point batch."""
        g = plane_chart().metric(np.zeros((5, 2)), 3)
        assert g.shape == (2, 2, 5)
        assert g.order == 3

    def test_indefinite_metric(self):
        """Test rejection of a metric that is not positive definite."""
        chart = plane_chart(lambda x: diagonal([1.0, -1.0], like=x[0]))
        with pytest.raises(MetricNotPositiveDefiniteError):
            chart.metric(np.zeros((1, 2)), 2)

    def test_asymmetric_metric(self):
        """Test rejection of an asymmetric metric expression."""
        chart = plane_chart(lambda x: block([[1.0, x[0]], [0.0, 1.0]], like=x[0]))
        with pytest.raises(GeometryError, match="not symmetric"):
            chart.metric(np.array([[0.5, 0.0]]), 2)

    def test_metric_shape_checked(self):
        """Test rejection of a metric expression of the wrong size."""
        chart = plane_chart(lambda x: diagonal([1.0, 1.0, 1.0], like=x[0]))
        with pytest.raises(GeometryError, match="2x2"):
            chart.metric(np.zeros((1, 2)), 2)

    def test_scaled_chart(self):
        """Test that a homothety multiplies the metric by the squared factor."""
        chart = plane_chart().scaled(3.0)
        assert np.allclose(chart.metric(np.zeros((1, 2)), 2).value[..., 0], 9.0 * np.eye(2))
        assert chart.name == "plane*3"

    def test_scale_must_be_positive(self):
        """Test rejection of a non-positive homothety factor."""
        with pytest.raises(GeometryError):
            plane_chart().scaled(0.0)


class TestFields:
    """Test expression fields."""

    def test_constant_field_broadcasts(self):
        """Test that a constant field takes the batch shape of the points."""
        one = ScalarField.constant(1.0)
        jet = one.evaluate(np.zeros((4, 2)), 3)
        assert jet.shape == (4,)
        assert np.allclose(jet.value, 1.0)
        assert np.allclose(jet.coeffs[..., 1:], 0.0)
        assert one.name == "const(1)"

    def test_scalar_expression(self):
        """Test a scalar expression and its derivatives."""
        f = ScalarField("x*y", lambda x: x[0] * x[1])
        jet = f.evaluate(np.array([[2.0, 3.0]]), 2)
        assert jet.value[0] == pytest.approx(6.0)
        assert jet.derivative((1, 1))[0] == pytest.approx(1.0)

    def test_order_limit(self):
        """Test that a field refuses orders above its maximum."""
        f = ScalarField("x", lambda x: x[0])
        with pytest.raises(JetOrderError):
            f.evaluate(np.zeros((1, 2)), MAX_ORDER + 1)

    def test_derivative_loss_lowers_max_order(self):
        """Test that fields consuming a derivative stop one order earlier."""
        omega = OneFormField("dx", lambda x: block([x[0], x[1]], like=x[0]), 1)
        assert omega.max_order == MAX_ORDER - 1
        assert omega.evaluate(np.zeros((2, 2)), 2).order == 2

    def test_rank_checked(self):
        """Test rejection of an expression returning the wrong rank."""
        h = Sym2Field("bad", lambda x: x[0])
        with pytest.raises(GeometryError, match="rank 2"):
            h.evaluate(np.zeros((1, 2)), 1)

    def test_asymmetric_sym2(self):
        """Test rejection of an asymmetric symmetric-tensor field."""
        h = Sym2Field("bad", lambda x: block([[x[0], 1.0], [0.0, x[1]]], like=x[0]))
        with pytest.raises(GeometryError, match="not symmetric"):
            h.evaluate(np.zeros((1, 2)), 1)

    def test_metric_field(self):
        """Test the metric of a chart viewed as a field."""
        chart = plane_chart()
        g = MetricField(chart)
        assert g.name == "g[plane]"
        assert g.rank == 2
        assert np.allclose(g.evaluate(np.zeros((1, 2)), 2).coeffs, chart.metric(np.zeros((1, 2)), 2).coeffs)

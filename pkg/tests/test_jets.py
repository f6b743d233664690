"""Tests for the jets module."""

import math

import numpy as np
import pytest
from hypothesis import given, settings
from hypothesis import strategies as st

from sigma2lab.exceptions import JetDomainError, JetOrderError, JetShapeError
from sigma2lab.jets import (
    MAX_ORDER,
    Jet,
    block,
    common_order,
    contract,
    diagonal,
    jet_arith,
    jet_constant,
    jet_derivative,
    jet_map,
    jet_seed,
    jet_seeds,
    jet_space,
)


def random_jet(seed: int, dim: int, order: int, shape: tuple[int, ...] = ()) -> Jet:
    space = jet_space(dim, order)
    generator = np.random.default_rng(seed)
    return Jet(space, generator.standard_normal(shape + (space.size,)))


class TestJetSpace:
    """Test jet index tables."""

    def test_size_counts_multi_indices(self):
        """Test that the space holds C(n + K, n) coefficients."""
        for dim in range(1, 5):
            for order in range(MAX_ORDER + 1):
                assert jet_space(dim, order).size == math.comb(dim + order, dim)

    def test_graded_order_is_prefix(self):
        """Test that a lower-order layout is a prefix of a higher-order one."""
        low, high = jet_space(3, 2), jet_space(3, 4)
        assert np.array_equal(high.exponents[: low.size], low.exponents)

    def test_constant_term_first(self):
        """Test that the zero multi-index sits at position 0."""
        assert jet_space(2, 3).index((0, 0)) == 0

    def test_spaces_are_cached(self):
        """Test that equal parameters give the same space object."""
        assert jet_space(2, 3) is jet_space(2, 3)

    def test_order_out_of_range(self):
        """Test rejection of orders above the supported maximum."""
        with pytest.raises(JetOrderError):
            jet_space(2, MAX_ORDER + 1)

    def test_dimension_must_be_positive(self):
        """Test rejection of zero-dimensional spaces."""
        with pytest.raises(JetShapeError):
            jet_space(0, 2)

    def test_unknown_multi_index(self):
        """Test lookup of a multi-index above the order."""
        with pytest.raises(JetOrderError):
            jet_space(2, 2).index((2, 1))

    def test_multi_index_of_wrong_length(self):
        """Test that malformed multi-indices are shape errors."""
        with pytest.raises(JetShapeError):
            jet_space(2, 2).index((1, 0, 0))
        with pytest.raises(JetShapeError):
            jet_space(2, 2).index((-1, 1))

    def test_derivative_above_order(self):
        """Test that asking a jet for a derivative above its order is an order error."""
        with pytest.raises(JetOrderError) as excinfo:
            jet_derivative(jet_seed(np.array([0.0, 0.0]), 0, 2), (2, 1))
        assert excinfo.value.order == 3


class TestSeeds:
    """Test coordinate seeds and constants."""

    def test_seed_value_and_slope(self):
        """Test that a seed carries the coordinate and a unit first derivative."""
        x = jet_seed(np.array([0.3, 0.7]), 0, 3)
        assert x.value == pytest.approx(0.3)
        assert x.derivative((1, 0)) == pytest.approx(1.0)
        assert x.derivative((0, 1)) == pytest.approx(0.0)
        assert x.derivative((2, 0)) == pytest.approx(0.0)

    def test_batched_seeds(self):
        """Test that leading point axes become batch axes."""
        points = np.arange(8.0).reshape(4, 2)
        x, y = jet_seeds(points, 2)
        assert x.shape == (4,)
        assert np.allclose(y.value, points[:, 1])

    def test_seed_axis_out_of_range(self):
        """Test rejection of a seed axis beyond the dimension."""
        with pytest.raises(JetShapeError):
            jet_seed(np.array([0.0, 1.0]), 2, 1)

    def test_constant_has_no_derivatives(self):
        """Test that constants carry only a value."""
        c = jet_constant(2.5, 3, 2)
        assert c.value == pytest.approx(2.5)
        assert np.all(c.coeffs[1:] == 0.0)

    def test_coefficient_axis_checked(self):
        """Test rejection of coefficient arrays of the wrong length."""
        with pytest.raises(JetShapeError):
            Jet(jet_space(2, 2), np.zeros(5))


class TestArithmetic:
    """Test truncated Taylor arithmetic."""

    def test_product_derivatives(self):
        """Test the derivatives of x * y."""
        x, y = jet_seeds(np.array([1.0, 2.0]), 3)
        f = x * y
        assert f.value == pytest.approx(2.0)
        assert f.derivative((1, 0)) == pytest.approx(2.0)
        assert f.derivative((0, 1)) == pytest.approx(1.0)
        assert f.derivative((1, 1)) == pytest.approx(1.0)
        assert f.derivative((2, 0)) == pytest.approx(0.0)

    def test_integer_power(self):
        """Test that x**3 has third derivative 6."""
        x, _ = jet_seeds(np.array([0.5, 0.0]), 3)
        cube = x**3
        assert cube.value == pytest.approx(0.125)
        assert cube.derivative((2, 0)) == pytest.approx(3.0)
        assert cube.derivative((3, 0)) == pytest.approx(6.0)

    def test_scalar_operands(self):
        """Test mixing jets with plain numbers on either side."""
        x, _ = jet_seeds(np.array([2.0, 0.0]), 2)
        f = 3.0 - 2.0 * x + 1.0
        assert f.value == pytest.approx(0.0)
        assert f.derivative((1, 0)) == pytest.approx(-2.0)
        g = 1.0 / x
        assert g.derivative((1, 0)) == pytest.approx(-0.25)
        assert g.derivative((2, 0)) == pytest.approx(0.25)

    def test_numpy_array_on_the_left(self):
        """Test that numpy arrays defer to the jet operators."""
        x, _ = jet_seeds(np.zeros((3, 2)), 1)
        scaled = np.array([1.0, 2.0, 3.0]) * (x + 1.0)
        assert isinstance(scaled, Jet)
        assert np.allclose(scaled.value, [1.0, 2.0, 3.0])

    def test_division_by_zero_number(self):
        """Test that dividing by the number zero is a domain error."""
        x, _ = jet_seeds(np.array([1.0, 0.0]), 1)
        with pytest.raises(JetDomainError):
            x / 0.0

    def test_incompatible_orders(self):
        """Test that jets of different orders do not combine silently."""
        a = jet_seed(np.array([1.0, 2.0]), 0, 2)
        b = jet_seed(np.array([1.0, 2.0]), 0, 3)
        with pytest.raises(JetOrderError):
            a + b
        assert (a + b.truncate(2)).order == 2

    def test_incompatible_dimensions(self):
        """Test that jets in different numbers of variables do not combine."""
        a = jet_seed(np.array([1.0, 2.0]), 0, 2)
        b = jet_seed(np.array([1.0, 2.0, 3.0]), 0, 2)
        with pytest.raises(JetShapeError):
            a * b

    def test_jet_arith_by_symbol(self):
        """Test operator dispatch by symbol."""
        x, y = jet_seeds(np.array([3.0, 4.0]), 1)
        assert jet_arith(x, y, "*").value == pytest.approx(12.0)
        assert jet_arith(x, 1.0, "-").value == pytest.approx(2.0)
        assert jet_arith(6.0, x, "/").value == pytest.approx(2.0)
        with pytest.raises(JetShapeError):
            jet_arith(x, y, "%")
        with pytest.raises(JetShapeError):
            jet_arith(1.0, 2.0, "+")

    @pytest.mark.parametrize(("name", "symbol"), [("add", "+"), ("sub", "-"), ("mul", "*"), ("div", "/")])
    def test_jet_arith_by_name(self, name, symbol):
        """Test that operation names dispatch like their symbols."""
        x, y = jet_seeds(np.array([3.0, 4.0]), 2)
        by_name, by_symbol = jet_arith(x, y, name), jet_arith(x, y, symbol)
        assert np.array_equal(by_name.coeffs, by_symbol.coeffs)


class TestElementaryFunctions:
    """Test composition with one-variable functions."""

    def test_pythagorean_identity(self):
        """Test sin^2 + cos^2 = 1 to every order."""
        x, y = jet_seeds(np.array([0.4, -1.1]), 5)
        u = x * y + x
        one = u.sin() ** 2 + u.cos() ** 2
        assert one.value == pytest.approx(1.0)
        assert np.allclose(one.coeffs[1:], 0.0, atol=1e-13)

    def test_log_inverts_exp(self):
        """Test log(exp(u)) = u."""
        x, y = jet_seeds(np.array([0.2, 0.3]), 5)
        u = x * x - 0.5 * y
        assert np.allclose(u.exp().log().coeffs, u.coeffs, atol=1e-13)

    def test_sqrt_squares_back(self):
        """Test sqrt(u)^2 = u."""
        x, y = jet_seeds(np.array([1.5, 0.5]), 4)
        u = x + y * y
        assert np.allclose((u.sqrt() * u.sqrt()).coeffs, u.coeffs, atol=1e-13)

    def test_reciprocal(self):
        """Test u * (1/u) = 1."""
        x, y = jet_seeds(np.array([2.0, 1.0]), 4)
        u = x * y + 1.0
        product = u * u.reciprocal()
        assert product.value == pytest.approx(1.0)
        assert np.allclose(product.coeffs[1:], 0.0, atol=1e-13)

    def test_chain_rule_mixed_derivative(self):
        """Test d^2/dxdy sin(x + y) = -sin(x + y)."""
        x, y = jet_seeds(np.array([0.3, 0.4]), 3)
        f = (x + y).sin()
        assert f.derivative((1, 1)) == pytest.approx(-math.sin(0.7))
        assert jet_derivative(f, (2, 1)) == pytest.approx(-math.cos(0.7))

    def test_fractional_power(self):
        """Test derivatives of u**-2."""
        x, _ = jet_seeds(np.array([2.0, 0.0]), 2)
        f = x**-2
        assert f.value == pytest.approx(0.25)
        assert f.derivative((1, 0)) == pytest.approx(-0.25)
        assert f.derivative((2, 0)) == pytest.approx(6.0 / 16.0)

    @pytest.mark.parametrize(
        ("function", "point", "power"),
        [("log", -1.0, None), ("sqrt", -0.5, None), ("reciprocal", 0.0, None), ("pow", 0.0, -1.0)],
    )
    def test_domain_errors(self, function, point, power):
        """Test that functions refuse base points outside their domain."""
        x, _ = jet_seeds(np.array([point, 0.0]), 2)
        with pytest.raises(JetDomainError):
            jet_map(x, function, power)


class TestStructure:
    """Test truncation, differentiation and tensor manipulation."""

    def test_truncate_is_prefix(self):
        """Test that truncation keeps the leading coefficients."""
        f = random_jet(1, 3, 4)
        low = f.truncate(2)
        assert low.order == 2
        assert np.array_equal(low.coeffs, f.coeffs[: jet_space(3, 2).size])

    def test_truncate_upwards_fails(self):
        """Test that truncation cannot raise the order."""
        with pytest.raises(JetOrderError):
            random_jet(1, 2, 2).truncate(3)

    def test_diff_lowers_order(self):
        """Test the derivative of x^2 y."""
        x, y = jet_seeds(np.array([1.0, 3.0]), 3)
        f = (x * x * y).diff(0)
        assert f.order == 2
        assert f.value == pytest.approx(6.0)
        assert f.derivative((0, 1)) == pytest.approx(2.0)

    def test_diff_of_order_zero(self):
        """Test that an order-0 jet cannot be differentiated."""
        with pytest.raises(JetOrderError):
            jet_constant(1.0, 2, 0).diff(0)

    def test_gradient_stacks_axes(self):
        """Test that the gradient adds a leading axis."""
        f = random_jet(2, 3, 3, shape=(5,))
        grad = f.gradient()
        assert grad.shape == (3, 5)
        assert grad.order == 2

    def test_permute_and_symmetrize(self):
        """Test permutation of tensor axes and the symmetric part."""
        t = random_jet(3, 2, 2, shape=(2, 2))
        assert np.allclose(t.permute(1, 0).coeffs, np.swapaxes(t.coeffs, 0, 1))
        sym = t.symmetrize()
        assert np.allclose(sym.coeffs, np.swapaxes(sym.coeffs, 0, 1))

    def test_einsum_trace(self):
        """Test a linear trace over tensor axes."""
        t = random_jet(4, 2, 2, shape=(3, 3))
        assert np.allclose(t.einsum("aa->").coeffs, np.trace(t.coeffs, axis1=0, axis2=1))

    def test_contract_constant_matrices(self):
        """Test that contraction of constant jets is a matrix product."""
        space = jet_space(2, 2)
        a, b = np.arange(4.0).reshape(2, 2), np.array([[1.0, -1.0], [0.5, 2.0]])
        product = contract("ij,jk->ik", Jet.constant(space, a), Jet.constant(space, b))
        assert np.allclose(product.value, a @ b)
        assert np.allclose(product.coeffs[..., 1:], 0.0)

    def test_block_and_diagonal(self):
        """Test assembly of tensor jets from entries and numbers."""
        x, y = jet_seeds(np.array([[1.0, 2.0], [3.0, 4.0]]), 1)
        matrix = block([[x, 0.0], [1.0, y]], like=x)
        assert matrix.shape == (2, 2, 2)
        assert np.allclose(matrix.value[1, 0], 1.0)
        assert np.allclose(matrix.value[1, 1], [2.0, 4.0])
        diag = diagonal([x, y], like=x)
        assert np.allclose(diag.value[0, 1], 0.0)
        assert np.allclose(diag.value[0, 0], [1.0, 3.0])

    def test_common_order(self):
        """Test truncation of several jets to the lowest order."""
        a, b = random_jet(5, 2, 4), random_jet(6, 2, 2)
        low_a, low_b = common_order(a, b)
        assert low_a.order == low_b.order == 2


class TestAlgebraProperties:
    """Property-based checks of the truncated product."""

    @settings(max_examples=40, deadline=None)
    @given(seed=st.integers(0, 2**32 - 1), dim=st.integers(1, 3), order=st.integers(0, 4))
    def test_product_is_commutative_and_associative(self, seed, dim, order):
        """Test ring laws of the jet product."""
        a, b, c = (random_jet(seed + k, dim, order) for k in range(3))
        assert np.allclose((a * b).coeffs, (b * a).coeffs)
        assert np.allclose(((a * b) * c).coeffs, (a * (b * c)).coeffs)
        assert np.allclose((a * (b + c)).coeffs, (a * b + a * c).coeffs)

    @settings(max_examples=40, deadline=None)
    @given(seed=st.integers(0, 2**32 - 1), dim=st.integers(1, 3), order=st.integers(1, 4))
    def test_leibniz_rule(self, seed, dim, order):
        """Test d(ab) = da b + a db."""
        a, b = random_jet(seed, dim, order), random_jet(seed + 1, dim, order)
        low = order - 1
        for axis in range(dim):
            lhs = (a * b).diff(axis)
            rhs = a.diff(axis) * b.truncate(low) + a.truncate(low) * b.diff(axis)
            assert np.allclose(lhs.coeffs, rhs.coeffs)

    @settings(max_examples=30, deadline=None)
    @given(seed=st.integers(0, 2**32 - 1), order=st.integers(1, 5))
    def test_truncation_commutes_with_product(self, seed, order):
        """Test that truncating before or after multiplying agrees."""
        a, b = random_jet(seed, 2, order), random_jet(seed + 1, 2, order)
        low = order - 1
        assert np.allclose((a * b).truncate(low).coeffs, (a.truncate(low) * b.truncate(low)).coeffs)

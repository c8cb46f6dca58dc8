"""test the quadrature wrappers and modified Mellin transforms"""

import math

import pytest

from relspec.errors import AccuracyError, DomainError
from relspec.quadrature import (
    MellinKind,
    MellinTransform,
    QuadratureControl,
    integrate_finite,
    integrate_quadrant,
    integrate_semi_infinite,
    mellin_hat,
    mellin_hat_derivative,
    minus_derivative,
    richardson_extrapolate,
)


@pytest.mark.unit
class TestIntegrals:
    """Test the adaptive quadrature wrappers"""

    def test_finite(self):
        """Test the integral of sin over (0, pi)"""
        result = integrate_finite(math.sin, 0.0, math.pi)
        assert result.value == pytest.approx(2.0, abs=1e-12)
        assert result.evaluations > 0
        assert float(result) == result.value

    def test_semi_infinite(self):
        """Test the integral of e^{-t} over (0, inf)"""
        result = integrate_semi_infinite(lambda t: math.exp(-t))
        assert result.value == pytest.approx(1.0, abs=1e-12)

    def test_endpoint_singularity(self):
        """Test the t^{-1/2} weighted panel"""
        result = integrate_semi_infinite(
            lambda t: t**-0.5 * math.exp(-t), left_exponent=-0.5
        )
        assert result.value == pytest.approx(math.sqrt(math.pi), rel=1e-10)

    def test_quadrant(self):
        """Test the double integral of e^{-t-2s}"""
        result = integrate_quadrant(lambda t, s: math.exp(-t - 2.0 * s))
        assert result.value == pytest.approx(0.5, abs=1e-10)

    def test_failure_raises(self):
        """Test that an unresolved integrand raises with the best value attached"""
        ctl = QuadratureControl(abs_tol=1e-14, rel_tol=1e-14, limit=1)
        with pytest.raises(AccuracyError) as info:
            integrate_finite(lambda t: math.sin(200.0 * t), 0.0, 10.0, ctl)
        assert info.value.value is not None
        assert info.value.error_estimate is not None

    def test_bad_scale(self):
        """Test that the split point must be positive"""
        with pytest.raises(DomainError, match="scale"):
            integrate_semi_infinite(math.exp, scale=0.0)

    @pytest.mark.parametrize(
        "params", [{"abs_tol": 0.0}, {"rel_tol": -1e-3}, {"limit": 0}, {"limit": 2.5}]
    )
    def test_invalid_control(self, params):
        """Test that bad controls are rejected"""
        with pytest.raises(DomainError):
            QuadratureControl(**params)

    def test_tighter(self):
        """Test that tighter divides both tolerances"""
        ctl = QuadratureControl(1e-8, 1e-6, 50).tighter(100.0)
        assert ctl.abs_tol == pytest.approx(1e-10)
        assert ctl.rel_tol == pytest.approx(1e-8)
        assert ctl.limit == 50


@pytest.mark.unit
class TestDifferences:
    """Test finite differences and Richardson extrapolation"""

    @pytest.mark.parametrize("order", [1, 2, 3])
    def test_minus_derivative_of_exponential(self, order):
        """Test (-d/du)^N e^{-u} = e^{-u}"""
        assert minus_derivative(lambda u: math.exp(-u), order, 1.0) == pytest.approx(
            math.exp(-1.0), rel=1e-6
        )

    def test_richardson_removes_leading_error(self):
        """Test that one level removes an h^2 error exactly"""
        values = [1.0 + 0.1**2, 1.0 + 0.05**2]
        assert richardson_extrapolate(values, order=2) == pytest.approx(1.0, abs=1e-14)

    def test_richardson_needs_values(self):
        """Test that an empty sequence is rejected"""
        with pytest.raises(DomainError):
            richardson_extrapolate([], order=2)


@pytest.fixture
def exponential_transform():
    """f(t) = e^{-t}, whose modified transform is 1 everywhere"""
    return MellinTransform.from_function(
        lambda t: math.exp(-t),
        0.0,
        MellinKind.F,
        derivatives={order: (lambda u: math.exp(-u)) for order in range(1, 5)},
    )


@pytest.mark.unit
class TestMellinTransform:
    """Test the continued modified Mellin transform"""

    @pytest.mark.parametrize("q", [-0.5, 0.5, 1.0, 1.5, 2.0])
    def test_unit_transform(self, exponential_transform, q):
        """Test that e^{-t} transforms to 1 on both sides of the integers"""
        assert exponential_transform(q) == pytest.approx(1.0, rel=1e-9)

    def test_parts_order(self, exponential_transform):
        """Test how many integrations by parts are used"""
        assert exponential_transform.order_for(-0.5) == 0
        assert exponential_transform.order_for(0.0) == 1
        assert exponential_transform.order_for(1.5) == 2

    def test_derivative_of_constant(self, exponential_transform):
        """Test that the q-derivative of a constant transform vanishes"""
        assert exponential_transform.derivative(1) == pytest.approx(0.0, abs=1e-6)

    def test_forced_order_too_small(self, exponential_transform):
        """Test that q must stay below the number of integrations by parts"""
        with pytest.raises(DomainError, match="integrations by parts"):
            exponential_transform.evaluate(1.5, parts_order=1)

    def test_closed_form_bypass(self):
        """Test that a closed form is used without quadrature"""
        transform = MellinTransform(
            profile=lambda u: 1 / 0, offset=0.0, closed_form=lambda q: 2.0 * q
        )
        assert transform(3.0) == 6.0

    def test_mellin_hat(self):
        """Test the one-shot helper on the gamma integral"""
        assert mellin_hat(lambda t: math.exp(-t), 0.0, -0.3) == pytest.approx(1.0, rel=1e-9)

    def test_mellin_hat_domain(self):
        """Test that q >= parts_order is rejected"""
        with pytest.raises(DomainError, match="parts_order"):
            mellin_hat(lambda t: math.exp(-t), 0.0, 0.5, parts_order=0)

    def test_mellin_hat_derivative(self):
        """Test the one-shot derivative helper"""
        derivative = mellin_hat_derivative(
            lambda t: math.exp(-t),
            0.0,
            0,
            derivatives={order: (lambda u: math.exp(-u)) for order in range(1, 4)},
        )
        assert derivative == pytest.approx(0.0, abs=1e-6)

    def test_h_type_profile(self):
        """Test that an h-type transform samples x^{-nu} h(1/x)"""
        transform = MellinTransform.from_function(lambda t: t**-2.0, 2.0, MellinKind.H)
        assert transform.profile(0.5) == pytest.approx(1.0)

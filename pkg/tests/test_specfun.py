"""test the statistical functions E, the kernels h and the special-function helpers"""

import math

import numpy as np
import pytest

from relspec.errors import AccuracyError, DomainError
from relspec.specfun import (
    DEFAULT_SERIES_CONTROL,
    KernelKind,
    SeriesControl,
    bernoulli_even,
    digamma,
    eval_E,
    eval_E_series,
    eval_f_tanh,
    eval_h,
    eval_h_derivative,
    h_dual_series,
    h_theta_series,
)


@pytest.mark.unit
class TestStatisticalFunctions:
    """Test eval_E, its series and the tanh regulator"""

    def test_closed_forms(self):
        """Test E_b, E_f and E_0 against their closed forms at x = 1"""
        assert eval_E(KernelKind.BOSE, 1.0) == pytest.approx(1.0 / (math.e - 1.0), rel=1e-15)
        assert eval_E(KernelKind.FERMI, 1.0) == pytest.approx(1.0 / (math.e + 1.0), rel=1e-15)
        assert eval_E(KernelKind.ZERO, 1.0) == pytest.approx(0.5 / math.sinh(1.0), rel=1e-15)

    def test_string_kind(self):
        """Test that kinds can be given by name"""
        assert eval_E("bose", 2.0) == eval_E(KernelKind.BOSE, 2.0)

    def test_fermi_at_zero(self):
        """Test that E_f is finite at zero"""
        assert eval_E(KernelKind.FERMI, 0.0) == 0.5

    def test_array_input(self):
        """Test that arrays go in and arrays come out"""
        x = np.array([0.5, 1.0, 2.0])
        out = eval_E(KernelKind.BOSE, x)
        assert isinstance(out, np.ndarray)
        assert out.shape == (3,)
        assert out[1] == pytest.approx(eval_E(KernelKind.BOSE, 1.0))

    def test_large_argument_underflows(self):
        """Test that very large arguments give 0 without warnings"""
        assert eval_E(KernelKind.BOSE, 1e4) == 0.0

    @pytest.mark.parametrize("kind", [KernelKind.BOSE, KernelKind.ZERO])
    def test_nonpositive_argument(self, kind):
        """Test that E_b and E_0 reject x <= 0"""
        with pytest.raises(DomainError, match="x > 0"):
            eval_E(kind, 0.0)

    def test_unknown_kind(self):
        """Test that an unknown kind is a domain error"""
        with pytest.raises(DomainError, match="unknown kernel kind"):
            eval_E("boson", 1.0)

    @pytest.mark.parametrize("kind", list(KernelKind))
    def test_series_agrees(self, kind):
        """Test that the geometric series reproduces the closed form"""
        result = eval_E_series(kind, 2.0)
        assert result.value == pytest.approx(eval_E(kind, 2.0), abs=1e-13)
        assert result.terms > 0

    def test_series_term_limit(self):
        """Test that the series gives up when it needs too many terms"""
        with pytest.raises(AccuracyError, match="max_terms"):
            eval_E_series(KernelKind.BOSE, 1e-3, SeriesControl(max_terms=10))

    def test_tanh_regulator_identities(self):
        """Test f = 1 - 2 E_f and 1/f = 1 + 2 E_b"""
        x = 1.3
        f = eval_f_tanh(x)
        assert f == pytest.approx(1.0 - 2.0 * eval_E(KernelKind.FERMI, x), rel=1e-14)
        assert 1.0 / f == pytest.approx(1.0 + 2.0 * eval_E(KernelKind.BOSE, x), rel=1e-14)

    def test_tanh_regulator_negative(self):
        """Test that the regulator rejects negative arguments"""
        with pytest.raises(DomainError):
            eval_f_tanh(-1.0)


@pytest.mark.unit
class TestSpecialFunctions:
    """Test bernoulli_even and digamma"""

    @pytest.mark.parametrize(
        "k,expected", [(1, 1 / 6), (2, -1 / 30), (6, -691 / 2730), (11, 854513 / 138)]
    )
    def test_bernoulli_even(self, k, expected):
        """Test table and recurrence values of B_2k"""
        assert bernoulli_even(k) == pytest.approx(expected, rel=1e-14)

    @pytest.mark.parametrize("k", [0, -1, 1.5])
    def test_bernoulli_even_domain(self, k):
        """Test that only positive integers are accepted"""
        with pytest.raises(DomainError):
            bernoulli_even(k)

    def test_digamma(self):
        """Test psi(1) = -gamma and the recurrence psi(x+1) = psi(x) + 1/x"""
        assert digamma(1.0) == pytest.approx(-0.5772156649015329, rel=1e-14)
        assert digamma(3.5) == pytest.approx(digamma(2.5) + 1.0 / 2.5, rel=1e-14)

    @pytest.mark.parametrize("x", [0.0, -1.0, -3.0])
    def test_digamma_poles(self, x):
        """Test that the poles are domain errors"""
        with pytest.raises(DomainError, match="pole"):
            digamma(x)


@pytest.mark.unit
class TestKernels:
    """Test the kernels h and their two representations"""

    @pytest.mark.parametrize("t", [0.3, 1.0, 2.5])
    @pytest.mark.parametrize("kind", [KernelKind.BOSE, KernelKind.FERMI])
    def test_representations_agree(self, kind, t):
        """Test that the theta and dual series give the same h"""
        theta = h_theta_series(kind, t).value
        dual = h_dual_series(kind, t).value
        assert theta == pytest.approx(dual, abs=1e-10)

    @pytest.mark.parametrize("t", [0.1, 1.0, 10.0])
    def test_zero_kernel_is_mean(self, t):
        """Test h_0 = (h_b + h_f) / 2"""
        mean = 0.5 * (eval_h(KernelKind.BOSE, t) + eval_h(KernelKind.FERMI, t))
        assert eval_h(KernelKind.ZERO, t) == pytest.approx(mean, abs=1e-14)

    def test_leading_large_t(self):
        """Test the leading power laws of h_b and h_f at t = 100"""
        t = 100.0
        assert eval_h(KernelKind.BOSE, t) * math.sqrt(math.pi * t) == pytest.approx(1.0, abs=5e-3)
        fermi = eval_h(KernelKind.FERMI, t) * 8.0 * math.sqrt(math.pi) * t**1.5
        assert fermi == pytest.approx(1.0, abs=1e-2)

    def test_small_t_vanishes(self):
        """Test that h decays to zero as t -> 0"""
        assert eval_h(KernelKind.BOSE, 1e-3) == pytest.approx(0.0, abs=1e-100)

    @pytest.mark.parametrize("t", [0.5, 2.0])
    @pytest.mark.parametrize("kind", list(KernelKind))
    def test_derivative(self, kind, t):
        """Test the term-wise derivative against a central difference"""
        step = 1e-5 * t
        numeric = (eval_h(kind, t + step) - eval_h(kind, t - step)) / (2.0 * step)
        assert eval_h_derivative(kind, t) == pytest.approx(numeric, rel=1e-6, abs=1e-10)

    def test_nonpositive_t(self):
        """Test that h is only defined for t > 0"""
        with pytest.raises(DomainError, match="t > 0"):
            eval_h(KernelKind.BOSE, 0.0)

    def test_crossover_control(self):
        """Test that moving the crossover does not change the value"""
        shifted = SeriesControl(crossover_t=3.0)
        assert eval_h(KernelKind.FERMI, 2.0, shifted) == pytest.approx(
            eval_h(KernelKind.FERMI, 2.0, DEFAULT_SERIES_CONTROL), abs=1e-12
        )

    @pytest.mark.parametrize(
        "params", [{"abs_tol": 0.0}, {"rel_tol": -1.0}, {"max_terms": 0}, {"crossover_t": 0.0}]
    )
    def test_invalid_control(self, params):
        """Test that bad series controls are rejected"""
        with pytest.raises(DomainError):
            SeriesControl(**params)

"""
Statistical functions and their inverse-Laplace kernels

The three statistical functions

    E_b(x) = 1/(e^x - 1),  E_f(x) = 1/(e^x + 1),  E_0(x) = 1/(2 sinh x)

are Laplace transforms in x^2 of the kernels h_b, h_f, h_0:

    E(x) = int_0^inf h(t) e^{-t x^2} dt

Each kernel has two representations. For small t the Gaussian theta series
converges fast; for large t the dual series over the poles of E converges fast.
The dual series is summed exactly (through the Dawson function) for the first
few poles and the rest is expanded asymptotically. With no exact poles the
expansion is the classical Bernoulli series.
"""

import logging
import math
from dataclasses import dataclass
from enum import Enum
from fractions import Fraction
from functools import lru_cache
from typing import Dict, NamedTuple, Tuple, Union

import numpy as np
from numpy.typing import ArrayLike, NDArray
from scipy import special

from .errors import AccuracyError, DomainError


logger = logging.getLogger(__name__)

_SQRT_PI = math.sqrt(math.pi)

# B_{2k} for k = 1..10; anything past this is generated by the recurrence
_BERNOULLI_EVEN_TABLE: Dict[int, Fraction] = {
    1: Fraction(1, 6),
    2: Fraction(-1, 30),
    3: Fraction(1, 42),
    4: Fraction(-1, 30),
    5: Fraction(5, 66),
    6: Fraction(-691, 2730),
    7: Fraction(7, 6),
    8: Fraction(-3617, 510),
    9: Fraction(43867, 798),
    10: Fraction(-174611, 330),
}

# (2j)! overflows a double past this order
_MAX_BERNOULLI_ORDER = 85


class KernelKind(str, Enum):
    """Which member of the E/h family: bosonic, fermionic or the E_0 = 1/(2 sinh x) family"""

    BOSE = "bose"
    FERMI = "fermi"
    ZERO = "zero"


@dataclass(frozen=True)
class SeriesControl:
    """
    Tolerances for the series evaluations of h

    Parameters
    ----------
    abs_tol: float, default 1e-14
        absolute error target for a single h evaluation
    rel_tol: float, default 1e-12
        relative error target; a value is accepted if it meets either target
    max_terms: int, default 400
        maximum number of terms (theta terms, exact dual modes or tail orders)
    crossover_t: float, default 1.0
        below this t the theta series is used, at and above it the dual series
    """

    abs_tol: float = 1e-14
    rel_tol: float = 1e-12
    max_terms: int = 400
    crossover_t: float = 1.0

    def __post_init__(self):
        """Validate the control values"""
        if not (self.abs_tol > 0 and self.rel_tol > 0):
            raise DomainError(
                f"series tolerances must be positive; got abs_tol={self.abs_tol}, "
                f"rel_tol={self.rel_tol}"
            )
        if int(self.max_terms) != self.max_terms or self.max_terms < 1:
            raise DomainError(f"max_terms must be a positive integer; got {self.max_terms}")
        if not self.crossover_t > 0:
            raise DomainError(f"crossover_t must be positive; got {self.crossover_t}")

    def tolerance(self, value: float) -> float:
        """Accepted absolute error for a result of size `value`"""
        return max(self.abs_tol, self.rel_tol * abs(value))


DEFAULT_SERIES_CONTROL = SeriesControl()


class SeriesValue(NamedTuple):
    """A series evaluation with its error estimate and the number of terms used"""

    value: float
    error_estimate: float
    terms: int


def _as_kind(kind: Union[KernelKind, str]) -> KernelKind:
    try:
        return KernelKind(kind)
    except ValueError as e:
        raise DomainError(f"unknown kernel kind '{kind}'") from e


def eval_E(kind: Union[KernelKind, str], x: ArrayLike) -> Union[float, NDArray[np.float64]]:
    """
    Evaluate a statistical function E_b, E_f or E_0

    Works on scalars and on numpy arrays. Large arguments underflow to 0
    silently.

    Parameters
    ----------
    kind: KernelKind or str
        "bose", "fermi" or "zero"
    x: float or array
        argument(s); must be > 0 for bose and zero

    Returns
    -------
    float or np.ndarray

    Raises
    ------
    DomainError
        x <= 0 for the bose or zero kind
    """
    kind = _as_kind(kind)
    arr = np.asarray(x, dtype=float)

    if kind is KernelKind.FERMI:
        out = special.expit(-arr)
    else:
        if np.any(arr <= 0):
            raise DomainError(f"E_{kind.value} requires x > 0")
        with np.errstate(under="ignore", over="ignore"):
            decay = np.exp(-arr)
            if kind is KernelKind.BOSE:
                out = -decay / np.expm1(-arr)
            else:
                out = -decay / np.expm1(-2.0 * arr)

    return float(out) if out.ndim == 0 else out


def eval_E_series(
    kind: Union[KernelKind, str], x: float, ctl: SeriesControl = DEFAULT_SERIES_CONTROL
) -> SeriesValue:
    """
    Evaluate E by its geometric series in e^{-x}

    E_b = sum_k e^{-kx}, E_f = sum_k (-1)^{k+1} e^{-kx}, E_0 = sum_{k odd} e^{-kx}.
    This is the cross-check path for `eval_E`.

    Parameters
    ----------
    kind: KernelKind or str
    x: float
        positive argument
    ctl: SeriesControl
        supplies the tolerance and the term limit

    Returns
    -------
    SeriesValue

    Raises
    ------
    DomainError
        x <= 0
    AccuracyError
        more than `ctl.max_terms` terms are needed
    """
    kind = _as_kind(kind)
    if x <= 0:
        raise DomainError(f"the geometric series of E_{kind.value} requires x > 0")

    n_terms = int(math.ceil(math.log(1.0 / ctl.abs_tol) / x)) + 1
    if n_terms > ctl.max_terms:
        raise AccuracyError(
            f"geometric series of E_{kind.value}({x}) needs {n_terms} terms, "
            f"more than max_terms={ctl.max_terms}"
        )

    k = np.arange(1, n_terms + 1, dtype=float)
    if kind is KernelKind.BOSE:
        weights = np.ones_like(k)
    elif kind is KernelKind.FERMI:
        weights = np.where(k % 2 == 1, 1.0, -1.0)
    else:
        weights = np.where(k % 2 == 1, 1.0, 0.0)
    terms = weights * np.exp(-k * x)
    return SeriesValue(float(np.sum(terms)), math.exp(-(n_terms + 1) * x), n_terms)


def eval_f_tanh(x: ArrayLike) -> Union[float, NDArray[np.float64]]:
    """
    The regulator f(x) = tanh(x/2)

    Satisfies f = 1 - 2 E_f and 1/f = 1 + 2 E_b.

    Raises
    ------
    DomainError
        x < 0
    """
    arr = np.asarray(x, dtype=float)
    if np.any(arr < 0):
        raise DomainError("tanh regulator requires x >= 0")
    out = np.tanh(arr / 2.0)
    return float(out) if out.ndim == 0 else out


@lru_cache(maxsize=None)
def _bernoulli_numbers(n: int) -> Tuple[Fraction, ...]:
    # sum_{j<=m} C(m+1, j) B_j = 0
    numbers = [Fraction(1)]
    for m in range(1, n + 1):
        acc = sum(math.comb(m + 1, j) * numbers[j] for j in range(m))
        numbers.append(-acc / (m + 1))
    return tuple(numbers)


def bernoulli_even(k: int) -> float:
    """
    The even Bernoulli number B_{2k}

    Parameters
    ----------
    k: int
        index >= 1; bernoulli_even(1) == 1/6

    Returns
    -------
    float
    """
    if int(k) != k or k < 1:
        raise DomainError(f"bernoulli_even requires a positive integer; got {k}")
    k = int(k)
    if k in _BERNOULLI_EVEN_TABLE:
        return float(_BERNOULLI_EVEN_TABLE[k])
    return float(_bernoulli_numbers(2 * k)[2 * k])


def digamma(x: float) -> float:
    """
    The digamma function psi(x) = Gamma'(x)/Gamma(x)

    Raises
    ------
    DomainError
        x is a nonpositive integer (pole)
    """
    if x <= 0 and float(x).is_integer():
        raise DomainError(f"digamma has a pole at {x}")
    return float(special.psi(x))


def _target_exponent(ctl: SeriesControl) -> float:
    return math.log(1.0 / ctl.abs_tol) + 3.0


def h_theta_series(
    kind: Union[KernelKind, str], t: float, ctl: SeriesControl = DEFAULT_SERIES_CONTROL
) -> SeriesValue:
    """
    Small-t representation of h

    h_b = (4 pi)^{-1/2} t^{-3/2} sum_k k e^{-k^2/4t}, h_f the same with
    alternating signs, h_0 = (h_b + h_f)/2.

    Parameters
    ----------
    kind: KernelKind or str
    t: float
        positive argument
    ctl: SeriesControl

    Returns
    -------
    SeriesValue
    """
    return _theta_series(_as_kind(kind), t, ctl, derivative=False)


def h_dual_series(
    kind: Union[KernelKind, str], t: float, ctl: SeriesControl = DEFAULT_SERIES_CONTROL
) -> SeriesValue:
    """
    Large-t representation of h

    h_b = pi^{-1/2} t^{-1/2} [1 + 2 sum_n D(2 pi n sqrt t)] and
    h_f = -2 pi^{-1/2} t^{-1/2} sum_n D((2n-1) pi sqrt t), with
    D(y) = 1 - 2y F(y) and F the Dawson function. The lowest modes are summed
    exactly and the remaining ones through the asymptotic expansion of D,
    truncated at its smallest term.

    Parameters
    ----------
    kind: KernelKind or str
    t: float
        positive argument
    ctl: SeriesControl

    Returns
    -------
    SeriesValue

    Raises
    ------
    AccuracyError
        the tolerance cannot be met within `ctl.max_terms` exact modes
    """
    return _dual_series(_as_kind(kind), t, ctl, derivative=False)


def _check_t(t: float) -> float:
    if not t > 0:
        raise DomainError(f"h is defined for t > 0; got {t}")
    return float(t)


def _theta_series(kind: KernelKind, t: float, ctl: SeriesControl, derivative: bool) -> SeriesValue:
    t = _check_t(t)
    if kind is KernelKind.ZERO:
        bose = _theta_series(KernelKind.BOSE, t, ctl, derivative)
        fermi = _theta_series(KernelKind.FERMI, t, ctl, derivative)
        return SeriesValue(
            0.5 * (bose.value + fermi.value),
            0.5 * (bose.error_estimate + fermi.error_estimate),
            max(bose.terms, fermi.terms),
        )

    n_terms = int(math.ceil(2.0 * math.sqrt(t * _target_exponent(ctl)))) + 1
    if n_terms > ctl.max_terms:
        raise AccuracyError(
            f"theta series of h_{kind.value}({t}) needs {n_terms} terms, "
            f"more than max_terms={ctl.max_terms}"
        )

    k = np.arange(1, n_terms + 2, dtype=float)
    signs = np.ones_like(k) if kind is KernelKind.BOSE else np.where(k % 2 == 1, 1.0, -1.0)
    with np.errstate(under="ignore"):
        gauss = np.exp(-(k**2) / (4.0 * t))
    prefactor = t**-1.5 / (2.0 * _SQRT_PI)
    if derivative:
        terms = prefactor * signs * k * gauss * (k**2 / (4.0 * t**2) - 1.5 / t)
    else:
        terms = prefactor * signs * k * gauss

    return SeriesValue(float(np.sum(terms[:-1])), float(abs(terms[-1])), n_terms)


def _dawson_modes(y: NDArray[np.float64]) -> Tuple[NDArray[np.float64], NDArray[np.float64]]:
    """D(y) = 1 - 2yF(y) and y D'(y)"""
    dawson = special.dawsn(y)
    d = 1.0 - 2.0 * y * dawson
    d_prime = -2.0 * dawson - 2.0 * y + 4.0 * y**2 * dawson
    return d, y * d_prime


@lru_cache(maxsize=4096)
def _hurwitz_moment(order: int, q: float) -> float:
    # q^{2j} zeta(2j, q) = 1 + q^{2j} zeta(2j, q + 1), kept O(1) for any q
    rest = float(special.zeta(2.0 * order, q + 1.0))
    if rest <= 0.0:
        return 1.0
    return 1.0 + math.exp(2.0 * order * math.log(q) + math.log(rest))


def _tail_moment(kind: KernelKind, n_exact: int, order: int) -> float:
    """q^{2j} sum_{n > M} (nu_n / 2pi)^{-2j}, q = nu_{M+1} / 2pi"""
    if n_exact == 0:
        # even zeta values from the Bernoulli numbers
        zeta_even = (
            (-1) ** (order + 1)
            * bernoulli_even(order)
            * (2.0 * math.pi) ** (2 * order)
            / (2.0 * math.gamma(2 * order + 1))
        )
        if kind is KernelKind.BOSE:
            return zeta_even
        return (1.0 - 4.0**-order) * zeta_even
    q = n_exact + 1.0 if kind is KernelKind.BOSE else n_exact + 0.5
    return _hurwitz_moment(order, q)


def _dual_at(
    kind: KernelKind, t: float, n_exact: int, ctl: SeriesControl, derivative: bool
) -> Tuple[float, float, int]:
    """Sum of D over all modes (or its t-derivative) with M exact modes; (sum, err, orders)"""
    n = np.arange(1, n_exact + 1, dtype=float)
    nu = 2.0 * math.pi * n if kind is KernelKind.BOSE else (2.0 * n - 1.0) * math.pi
    q = n_exact + 1.0 if kind is KernelKind.BOSE else n_exact + 0.5
    nu_next = 2.0 * math.pi * q
    sqrt_t = math.sqrt(t)

    d, yd_prime = _dawson_modes(nu * sqrt_t)
    # exact part of t^{-1/2} sum D, or of its derivative
    if derivative:
        exact = float(np.sum(0.5 * t**-1.5 * (yd_prime - d)))
    else:
        exact = float(np.sum(d)) * t**-0.5

    max_order = ctl.max_terms if n_exact > 0 else min(ctl.max_terms, _MAX_BERNOULLI_ORDER)
    ratio_base = 2.0 * t * nu_next**2
    coeff = 1.0
    tail = 0.0
    previous = math.inf
    error = math.inf
    orders = 0
    for order in range(1, max_order + 1):
        coeff *= (2.0 * order - 1.0) / ratio_base
        term = coeff * _tail_moment(kind, n_exact, order)
        if derivative:
            term *= (order + 0.5) / t
        if abs(term) >= previous:
            error = abs(term)
            break
        tail += term
        orders = order
        previous = abs(term)
        if abs(term) <= max(1e-17 * abs(tail), 1e-3 * ctl.abs_tol):
            error = abs(term)
            break

    if derivative:
        # d/dt of -t^{-1/2} b_j r_j is (j + 1/2) b_j r_j t^{-3/2}
        return exact + tail * t**-0.5, error * t**-0.5, orders
    return exact - tail * t**-0.5, error * t**-0.5, orders


def _dual_series(kind: KernelKind, t: float, ctl: SeriesControl, derivative: bool) -> SeriesValue:
    t = _check_t(t)
    if kind is KernelKind.ZERO:
        bose = _dual_series(KernelKind.BOSE, t, ctl, derivative)
        fermi = _dual_series(KernelKind.FERMI, t, ctl, derivative)
        return SeriesValue(
            0.5 * (bose.value + fermi.value),
            0.5 * (bose.error_estimate + fermi.error_estimate),
            max(bose.terms, fermi.terms),
        )

    q_min = math.sqrt(_target_exponent(ctl) / t) / (2.0 * math.pi)
    shift = 1.0 if kind is KernelKind.BOSE else 0.5
    n_exact = max(0, int(math.ceil(q_min - shift)))

    best = None
    while n_exact <= ctl.max_terms:
        total, error, orders = _dual_at(kind, t, n_exact, ctl, derivative)
        if kind is KernelKind.BOSE:
            lead = -0.5 * t**-1.5 if derivative else t**-0.5
            value = (lead + 2.0 * total) / _SQRT_PI
            error = 2.0 * error / _SQRT_PI
        else:
            value = -2.0 * total / _SQRT_PI
            error = 2.0 * error / _SQRT_PI
        best = SeriesValue(value, error, n_exact + orders)
        if error <= ctl.tolerance(value):
            logger.debug(
                "dual series h_%s(%g): %d exact modes, %d tail orders",
                kind.value,
                t,
                n_exact,
                orders,
            )
            return best
        n_exact += 1

    raise AccuracyError(
        f"dual series of h_{kind.value}({t}) did not reach tolerance",
        value=best.value if best else None,
        error_estimate=best.error_estimate if best else None,
    )


def _select(kind: KernelKind, t: float, ctl: SeriesControl, derivative: bool) -> SeriesValue:
    t = _check_t(t)
    if t < ctl.crossover_t:
        result = _theta_series(kind, t, ctl, derivative)
    else:
        result = _dual_series(kind, t, ctl, derivative)
    if result.error_estimate > ctl.tolerance(result.value):
        raise AccuracyError(
            f"h_{kind.value}({t}) reached only {result.error_estimate:.3e}",
            value=result.value,
            error_estimate=result.error_estimate,
        )
    return result


def eval_h(
    kind: Union[KernelKind, str], t: float, ctl: SeriesControl = DEFAULT_SERIES_CONTROL
) -> float:
    """
    Evaluate the kernel h_b, h_f or h_0 at t > 0

    Uses the theta series below `ctl.crossover_t` and the dual series above it.

    Parameters
    ----------
    kind: KernelKind or str
    t: float
        positive argument
    ctl: SeriesControl, default DEFAULT_SERIES_CONTROL

    Returns
    -------
    float

    Raises
    ------
    DomainError
        t <= 0
    AccuracyError
        neither representation meets the tolerance at t
    """
    kind = _as_kind(kind)
    if kind is KernelKind.ZERO:
        return 0.5 * (
            _select(KernelKind.BOSE, t, ctl, False).value
            + _select(KernelKind.FERMI, t, ctl, False).value
        )
    return _select(kind, t, ctl, False).value


def eval_h_derivative(
    kind: Union[KernelKind, str], t: float, ctl: SeriesControl = DEFAULT_SERIES_CONTROL
) -> float:
    """
    Evaluate dh/dt by term-wise differentiation of the same representation as `eval_h`

    Parameters
    ----------
    kind: KernelKind or str
    t: float
        positive argument
    ctl: SeriesControl, default DEFAULT_SERIES_CONTROL

    Returns
    -------
    float
    """
    kind = _as_kind(kind)
    if kind is KernelKind.ZERO:
        return 0.5 * (
            _select(KernelKind.BOSE, t, ctl, True).value
            + _select(KernelKind.FERMI, t, ctl, True).value
        )
    return _select(kind, t, ctl, True).value

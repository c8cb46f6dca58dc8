"""heat traces of single operators and of operator pairs, plus closed forms for solvable pairs"""

from typing import Union

import numpy as np

from .errors import DomainError, KindMismatchError
from .spectral import OperatorPair, Spectrum


# all sums below go through np.sum, which accumulates pairwise


def _check_positive(**kwargs: float):
    for name, value in kwargs.items():
        if not value > 0:
            raise DomainError(f"{name} must be positive; got {value}")


def _require_dirac(pair_or_spectrum: Union[OperatorPair, Spectrum], op: str):
    if not pair_or_spectrum.is_dirac:
        raise KindMismatchError(f"{op} is only defined for Dirac type spectra")


def theta(spectrum: Spectrum, t: float, m: float = 0.0) -> float:
    """
    Classical heat trace sum_k exp(-t (lambda_k + m^2))

    Dirac spectra enter through their squares. The default m = 0 leaves the
    mass factor to the caller.
    """
    _check_positive(t=t)
    return float(np.sum(np.exp(-t * (spectrum.squared + m**2))))


def dtheta(spectrum: Spectrum, t: float) -> float:
    """d/dt of the classical heat trace, -sum_k lambda_k exp(-t lambda_k), summed term-wise"""
    _check_positive(t=t)
    lam = spectrum.squared
    return float(-np.sum(lam * np.exp(-t * lam)))


def X_trace(pair: OperatorPair, t: float, s: float) -> float:
    """
    Combined heat trace sum_{j,k} exp(-t lambda^+_k - s lambda^-_j) |(phi^-_j, phi^+_k)|^2

    Parameters
    ----------
    pair: OperatorPair
    t: float
        time conjugate to the plus operator
    s: float
        time conjugate to the minus operator

    Returns
    -------
    float
    """
    _check_positive(t=t, s=s)
    return pair.overlap.bilinear(
        np.exp(-s * pair.minus.squared), np.exp(-t * pair.plus.squared)
    )


def Y_trace(pair: OperatorPair, t: float, s: float) -> float:
    """sum_{j,k} mu^+_k mu^-_j exp(-t (mu^+_k)^2 - s (mu^-_j)^2) |overlap|^2 for a Dirac pair"""
    _require_dirac(pair, "Y_trace")
    _check_positive(t=t, s=s)
    mu_plus = pair.plus.values
    mu_minus = pair.minus.values
    return pair.overlap.bilinear(
        mu_minus * np.exp(-s * mu_minus**2), mu_plus * np.exp(-t * mu_plus**2)
    )


def Xi_trace(spectrum: Spectrum, t: float, alpha: float) -> complex:
    """Generalized trace sum_k exp(-t mu_k^2 + i alpha mu_k) of a Dirac spectrum"""
    _require_dirac(spectrum, "Xi_trace")
    _check_positive(t=t)
    mu = spectrum.values
    return complex(np.sum(np.exp(-t * mu**2 + 1j * alpha * mu)))


def W_trace(pair: OperatorPair, t: float, s: float, alpha: float, beta: float) -> complex:
    """
    Generalized combined trace of a Dirac pair

    sum_{j,k} exp(-t (mu^+_k)^2 + i alpha mu^+_k) exp(-s (mu^-_j)^2 + i beta mu^-_j) |overlap|^2

    At alpha = beta = 0 this is `X_trace`, and -d_alpha d_beta at the origin gives `Y_trace`.
    """
    _require_dirac(pair, "W_trace")
    _check_positive(t=t, s=s)
    mu_plus = pair.plus.values
    mu_minus = pair.minus.values
    return complex(
        pair.overlap.bilinear(
            np.exp(-s * mu_minus**2 + 1j * beta * mu_minus),
            np.exp(-t * mu_plus**2 + 1j * alpha * mu_plus),
        )
    )


def Psi(pair: OperatorPair, t: float, s: float) -> float:
    """
    Relative heat trace Theta_+(t+s) + Theta_-(t+s) - X(t,s) - X(s,t)

    Vanishes for equal pairs and is symmetric in (t, s): both orders are
    summed the same way.
    """
    _check_positive(t=t, s=s)
    diagonal = theta(pair.plus, t + s) + theta(pair.minus, t + s)
    cross = X_trace(pair, t, s) + X_trace(pair, s, t)
    return diagonal - cross


def Phi(pair: OperatorPair, t: float, s: float) -> float:
    """Relative Dirac trace -dTheta_+(t+s) - dTheta_-(t+s) - Y(t,s) - Y(s,t)"""
    _require_dirac(pair, "Phi")
    _check_positive(t=t, s=s)
    diagonal = -dtheta(pair.plus, t + s) - dtheta(pair.minus, t + s)
    cross = Y_trace(pair, t, s) + Y_trace(pair, s, t)
    return diagonal - cross


def X_direct(pair: OperatorPair, t: float, s: float) -> float:
    """`X_trace` as the plain double sum over the dense overlap"""
    _check_positive(t=t, s=s)
    weights = np.exp(-s * pair.minus.squared)[:, None] * np.exp(-t * pair.plus.squared)[None, :]
    return float(np.sum(pair.overlap.entries * weights))


def Psi_direct(pair: OperatorPair, t: float, s: float) -> float:
    """`Psi` from the plain double sums, for cross-checking the fast paths"""
    return (
        theta(pair.plus, t + s)
        + theta(pair.minus, t + s)
        - X_direct(pair, t, s)
        - X_direct(pair, s, t)
    )


def Phi_direct(pair: OperatorPair, t: float, s: float) -> float:
    """`Phi` from the plain double sums over the dense overlap"""
    _require_dirac(pair, "Phi_direct")
    _check_positive(t=t, s=s)
    mu_p = pair.plus.values
    mu_m = pair.minus.values
    entries = pair.overlap.entries

    def y(a: float, b: float) -> float:
        left = mu_m * np.exp(-b * mu_m**2)
        right = mu_p * np.exp(-a * mu_p**2)
        return float(np.sum(entries * left[:, None] * right[None, :]))

    return -dtheta(pair.plus, t + s) - dtheta(pair.minus, t + s) - y(t, s) - y(s, t)


def psi_constant_shift(base: Spectrum, M_sq: float, t: float, s: float) -> float:
    """Closed form of Psi for H_+ = H_- + M^2: (e^{-tM^2} - 1)(e^{-sM^2} - 1) Theta_-(t+s)"""
    return float(np.expm1(-t * M_sq) * np.expm1(-s * M_sq) * theta(base, t + s))


def x_constant_shift(base: Spectrum, M_sq: float, t: float, s: float) -> float:
    """Closed form of X for H_+ = H_- + M^2: e^{-tM^2} Theta_-(t+s)"""
    return float(np.exp(-t * M_sq) * theta(base, t + s))


def phi_dirac_shift(base: Spectrum, M_sq: float, t: float, s: float) -> float:
    """
    Closed form of Phi when A_+^2 = A_-^2 + M^2 with anticommuting shift

    -(e^{-tM^2} - 1)(e^{-sM^2} - 1) dTheta_-(t+s) + M^2 e^{-(t+s)M^2} Theta_-(t+s),
    where Theta_- is the trace of A_-^2.
    """
    return float(
        -np.expm1(-t * M_sq) * np.expm1(-s * M_sq) * dtheta(base, t + s)
        + M_sq * np.exp(-(t + s) * M_sq) * theta(base, t + s)
    )


def y_dirac_shift(base: Spectrum, M_sq: float, t: float, s: float) -> float:
    """Closed form of Y for an anticommuting shift A_+^2 = A_-^2 + M^2: -e^{-tM^2} dTheta_-(t+s)"""
    return float(-np.exp(-t * M_sq) * dtheta(base, t + s))


def w_scalar_shift(
    base: Spectrum, shift: float, t: float, s: float, alpha: float, beta: float
) -> complex:
    """
    Closed form of W when A_+ = A_- + M (scalar shift)

    e^{-tM^2 + i alpha M} Xi_-(t+s, alpha + beta + 2itM), with Xi_- continued to a
    complex second argument.
    """
    _require_dirac(base, "w_scalar_shift")
    mu = base.values
    gamma = alpha + beta + 2j * t * shift
    xi = np.sum(np.exp(-(t + s) * mu**2 + 1j * gamma * mu))
    return complex(np.exp(-t * shift**2 + 1j * alpha * shift) * xi)


def theta_circle_poisson(t: float, scale: float = 1.0) -> float:
    """Untruncated trace of -scale^2 d^2/dx^2 on the circle of length 2 pi by Poisson summation"""
    _check_positive(t=t)
    # sum_k e^{-t a^2 k^2} = sqrt(pi/(t a^2)) sum_n e^{-pi^2 n^2/(t a^2)}
    u = t * scale**2
    n = np.arange(1, 64)
    return float(np.sqrt(np.pi / u) * (1.0 + 2.0 * np.sum(np.exp(-(np.pi**2) * n**2 / u))))


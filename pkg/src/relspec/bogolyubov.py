"""bosonic and fermionic Bogolyubov invariants of operator pairs"""

import json
import logging
import math
import os
import warnings
from concurrent.futures import ThreadPoolExecutor
from dataclasses import dataclass
from enum import Enum
from functools import lru_cache
from typing import TYPE_CHECKING, Any, Dict, Iterator, List, Optional, Sequence, Union

import numpy as np
import pandas as pd
from numpy.typing import ArrayLike, NDArray
from scipy import special

from .errors import AccuracyError, DomainError, KindMismatchError, UnsupportedError
from .quadrature import (
    DEFAULT_QUADRATURE_CONTROL,
    QuadratureControl,
    QuadratureResult,
    integrate_finite,
    integrate_quadrant,
    integrate_semi_infinite,
)
from .specfun import DEFAULT_SERIES_CONTROL, KernelKind, SeriesControl, eval_E, eval_h
from .spectral import GeometryPair, OperatorPair
from .traces import Phi, Psi


if TYPE_CHECKING:
    from .asymptotics import AsymptoticExpansion


logger = logging.getLogger(__name__)

# tolerances for the double integrals of the heat route
HEAT_QUADRATURE_CONTROL = QuadratureControl(abs_tol=1e-11, rel_tol=1e-8)

# invariants are nonnegative; anything below this is more than roundoff
NEGATIVITY_TOL = 1e-12

# below this beta * max(omega) the spectral sums are replaced by their beta -> 0 limit
_SMALL_BETA_ARGUMENT = 1e-6

THREADS_ENV_VAR = "RELSPEC_THREADS"


class Flavor(str, Enum):
    """Bosonic (Laplace type pairs) or fermionic (Dirac type pairs)"""

    BOSE = "bose"
    FERMI = "fermi"


class Route(str, Enum):
    """How an invariant is evaluated"""

    SPECTRAL = "spectral"
    HEAT_INTEGRAL = "heat_integral"
    PAIRWISE = "pairwise"


def _check_beta(beta: float):
    if not beta > 0:
        raise DomainError(f"beta must be positive; got {beta}")


def _require_laplace(pair: OperatorPair, op: str):
    if pair.is_dirac:
        raise KindMismatchError(f"{op} needs a pair of Laplace type operators")


def _require_dirac(pair: OperatorPair, op: str):
    if not pair.is_dirac:
        raise KindMismatchError(f"{op} needs a pair of Dirac type operators")


def B_b_spectral(pair: OperatorPair, beta: float) -> float:
    """
    Bosonic Bogolyubov invariant from the spectral sums

    sum_k E_b(2 beta w+_k) + sum_j E_b(2 beta w-_j)
    - sum_{j,k} [E_f(beta w+_k) E_b(beta w-_j) + E_b(beta w+_k) E_f(beta w-_j)] O[j,k]

    Parameters
    ----------
    pair: OperatorPair
        laplace pair
    beta: float
        positive

    Returns
    -------
    float

    Raises
    ------
    KindMismatchError
        the pair is of Dirac type
    """
    _require_laplace(pair, "B_b_spectral")
    _check_beta(beta)
    x_plus = beta * pair.omega_plus
    x_minus = beta * pair.omega_minus

    diagonal = np.sum(eval_E(KernelKind.BOSE, 2.0 * x_plus)) + np.sum(
        eval_E(KernelKind.BOSE, 2.0 * x_minus)
    )
    cross = pair.overlap.bilinear(
        eval_E(KernelKind.BOSE, x_minus), eval_E(KernelKind.FERMI, x_plus)
    ) + pair.overlap.bilinear(eval_E(KernelKind.FERMI, x_minus), eval_E(KernelKind.BOSE, x_plus))
    return float(diagonal - cross)


def B_b_pairwise(pair: OperatorPair, beta: float) -> float:
    """
    Bosonic invariant as sum_{j,k} O[j,k] [E_f(x_k) - E_f(y_j)] [E_b(x_k) - E_b(y_j)]

    With x = beta w+ and y = beta w-. Equal to `B_b_spectral` when the overlap is
    doubly stochastic, and free of the cancellation between large diagonal
    and cross sums at small beta.
    """
    _require_laplace(pair, "B_b_pairwise")
    _check_beta(beta)

    def summand(y: NDArray[np.float64], x: NDArray[np.float64]) -> NDArray[np.float64]:
        return (eval_E(KernelKind.FERMI, x) - eval_E(KernelKind.FERMI, y)) * (
            eval_E(KernelKind.BOSE, x) - eval_E(KernelKind.BOSE, y)
        )

    return pair.overlap.weighted_sum(summand, beta * pair.omega_minus, beta * pair.omega_plus)


def B_b_sinh(pair: OperatorPair, beta: float) -> float:
    """
    Bosonic invariant in the sinh^2 form

    sum_{j,k} O[j,k] sinh^2(beta (w+_k - w-_j)/2) / (sinh beta w+_k sinh beta w-_j)

    Term by term this equals the `B_b_pairwise` summand, so it also needs a
    doubly stochastic overlap to agree with `B_b_spectral`.
    """
    _require_laplace(pair, "B_b_sinh")
    _check_beta(beta)
    return pair.overlap.weighted_sum(_sinh_ratio, beta * pair.omega_minus, beta * pair.omega_plus)


def B_f_spectral(pair: OperatorPair, beta: float) -> float:
    """
    Fermionic Bogolyubov invariant from the spectral sums

    beta^2 [sum w+^2 E_0^2(beta w+) + sum w-^2 E_0^2(beta w-)
    - 2 sum_{j,k} (mu+_k mu-_j + m^2) E_0(beta w-_j) E_0(beta w+_k) O[j,k]]

    Raises
    ------
    KindMismatchError
        the pair is of Laplace type
    """
    _require_dirac(pair, "B_f_spectral")
    _check_beta(beta)
    w_plus, w_minus = pair.omega_plus, pair.omega_minus
    e_plus = eval_E(KernelKind.ZERO, beta * w_plus)
    e_minus = eval_E(KernelKind.ZERO, beta * w_minus)

    diagonal = np.sum((w_plus * e_plus) ** 2) + np.sum((w_minus * e_minus) ** 2)
    cross = pair.overlap.bilinear(
        pair.minus.values * e_minus, pair.plus.values * e_plus
    ) + pair.m**2 * pair.overlap.bilinear(e_minus, e_plus)
    return float(beta**2 * (diagonal - 2.0 * cross))


@lru_cache(maxsize=65536)
def _kernel(kind: KernelKind, t: float, ctl: SeriesControl) -> float:
    return eval_h(kind, t, ctl)


def B_b_heat(
    pair: OperatorPair,
    beta: float,
    ctl: QuadratureControl = HEAT_QUADRATURE_CONTROL,
    series_ctl: SeriesControl = DEFAULT_SERIES_CONTROL,
) -> QuadratureResult:
    """
    Bosonic invariant through the relative heat trace

    int int h_f(t) h_b(s) exp(-m^2 beta^2 (t + s)) Psi(beta^2 t, beta^2 s) dt ds

    Parameters
    ----------
    pair: OperatorPair
    beta: float
    ctl: QuadratureControl, default HEAT_QUADRATURE_CONTROL
    series_ctl: SeriesControl, default DEFAULT_SERIES_CONTROL
        controls the evaluation of the kernels h

    Returns
    -------
    QuadratureResult

    Raises
    ------
    AccuracyError
        the double integral did not converge
    """
    _require_laplace(pair, "B_b_heat")
    _check_beta(beta)
    b2 = beta**2
    damping = pair.m**2 * b2

    def integrand(t: float, s: float) -> float:
        weight = _kernel(KernelKind.FERMI, t, series_ctl) * _kernel(KernelKind.BOSE, s, series_ctl)
        if weight == 0.0:
            return 0.0
        return weight * math.exp(-damping * (t + s)) * Psi(pair, b2 * t, b2 * s)

    result = integrate_quadrant(integrand, ctl)
    logger.debug(
        "B_b_heat(beta=%g): %.12g +- %.2e (%d evaluations)",
        beta,
        result.value,
        result.error_estimate,
        result.evaluations,
    )
    return result


def B_f_heat(
    pair: OperatorPair,
    beta: float,
    ctl: QuadratureControl = HEAT_QUADRATURE_CONTROL,
    series_ctl: SeriesControl = DEFAULT_SERIES_CONTROL,
) -> QuadratureResult:
    """
    Fermionic invariant through the relative heat traces

    int int h_0(t) h_0(s) exp(-m^2 beta^2 (t + s)) beta^2 [Phi + m^2 Psi](beta^2 t, beta^2 s) dt ds
    """
    _require_dirac(pair, "B_f_heat")
    _check_beta(beta)
    b2 = beta**2
    m2 = pair.m**2

    def integrand(t: float, s: float) -> float:
        weight = _kernel(KernelKind.ZERO, t, series_ctl) * _kernel(KernelKind.ZERO, s, series_ctl)
        if weight == 0.0:
            return 0.0
        tau, sigma = b2 * t, b2 * s
        traces = Phi(pair, tau, sigma) + m2 * Psi(pair, tau, sigma)
        return weight * math.exp(-m2 * (tau + sigma)) * b2 * traces

    result = integrate_quadrant(integrand, ctl)
    logger.debug(
        "B_f_heat(beta=%g): %.12g +- %.2e (%d evaluations)",
        beta,
        result.value,
        result.error_estimate,
        result.evaluations,
    )
    return result


def N_truncated(pair: OperatorPair, flavor: Union[Flavor, str]) -> float:
    """
    Number of created particles for the truncated pair (the beta -> 0 limit of B)

    bose: (1/4) sum_{j,k} O[j,k] (sqrt(w-_j / w+_k) - sqrt(w+_k / w-_j))^2
    fermi: (1/4) [K + J - 2 sum_{j,k} O[j,k] (mu+_k mu-_j + m^2) / (w+_k w-_j)]

    Parameters
    ----------
    pair: OperatorPair
    flavor: Flavor or str

    Returns
    -------
    float
    """
    flavor = Flavor(flavor)
    if flavor is Flavor.BOSE:
        return 0.25 * pair.overlap.weighted_sum(
            lambda w_m, w_p: (w_m - w_p) ** 2 / (w_m * w_p), pair.omega_minus, pair.omega_plus
        )

    _require_dirac(pair, "N_truncated(fermi)")
    # trace of (1/8)(F+ - F-)^2 with F = (A + m eta)/w on the doubled fiber
    cross = pair.overlap.bilinear(
        pair.minus.values / pair.omega_minus, pair.plus.values / pair.omega_plus
    ) + pair.m**2 * pair.overlap.bilinear(1.0 / pair.omega_minus, 1.0 / pair.omega_plus)
    return 0.25 * (len(pair.plus) + len(pair.minus) - 2.0 * cross)


def adiabatic_oracle(pair: OperatorPair, flavor: Union[Flavor, str], beta: float) -> float:
    """
    Leading large-beta form of the invariant (every E replaced by its exponential tail)

    bose: sum e^{-2 beta w+} + sum e^{-2 beta w-} - 2 sum O e^{-beta w-} e^{-beta w+}
    fermi: beta^2 [sum w+^2 e^{-2 beta w+} + sum w-^2 e^{-2 beta w-}
           - 2 sum O (mu+ mu- + m^2) e^{-beta w-} e^{-beta w+}]
    """
    flavor = Flavor(flavor)
    _check_beta(beta)
    d_plus = np.exp(-beta * pair.omega_plus)
    d_minus = np.exp(-beta * pair.omega_minus)

    if flavor is Flavor.BOSE:
        cross = pair.overlap.bilinear(d_minus, d_plus)
        return float(np.sum(d_plus**2) + np.sum(d_minus**2) - 2.0 * cross)

    _require_dirac(pair, "adiabatic_oracle(fermi)")
    diagonal = np.sum((pair.omega_plus * d_plus) ** 2) + np.sum((pair.omega_minus * d_minus) ** 2)
    cross = pair.overlap.bilinear(
        pair.minus.values * d_minus, pair.plus.values * d_plus
    ) + pair.m**2 * pair.overlap.bilinear(d_minus, d_plus)
    return float(beta**2 * (diagonal - 2.0 * cross))


def invariant(
    pair: OperatorPair,
    flavor: Union[Flavor, str],
    beta: float,
    route: Union[Route, str] = Route.SPECTRAL,
    ctl: QuadratureControl = HEAT_QUADRATURE_CONTROL,
) -> QuadratureResult:
    """
    Dispatch to the requested flavor and route

    Spectral values are returned with a zero error estimate.

    Raises
    ------
    UnsupportedError
        the pairwise route for the fermionic invariant
    """
    flavor, route = Flavor(flavor), Route(route)
    if route is Route.HEAT_INTEGRAL:
        return B_b_heat(pair, beta, ctl) if flavor is Flavor.BOSE else B_f_heat(pair, beta, ctl)
    if route is Route.PAIRWISE:
        if flavor is not Flavor.BOSE:
            raise UnsupportedError("the pairwise route exists for the bosonic invariant only")
        return QuadratureResult(B_b_pairwise(pair, beta), 0.0, 1)
    value = B_b_spectral(pair, beta) if flavor is Flavor.BOSE else B_f_spectral(pair, beta)
    return QuadratureResult(value, 0.0, 1)


def _spectral_value(pair: OperatorPair, flavor: Flavor, beta: float, limit: float) -> float:
    """B at beta, with its beta -> 0 limit where the sums would cancel catastrophically"""
    if beta * max(pair.omega_plus[-1], pair.omega_minus[-1]) < _SMALL_BETA_ARGUMENT:
        return limit
    return B_b_spectral(pair, beta) if flavor is Flavor.BOSE else B_f_spectral(pair, beta)


def zeta(
    pair: OperatorPair,
    flavor: Union[Flavor, str],
    s: float,
    ctl: QuadratureControl = DEFAULT_QUADRATURE_CONTROL,
    *,
    expansion: Optional["AsymptoticExpansion"] = None,
    beta_split: Optional[float] = None,
) -> float:
    """
    Bogolyubov zeta function Z(s) = Gamma(s)^{-1} int_0^inf beta^{s-1} B(beta) d beta

    Without `expansion` the truncated invariant is integrated down to beta = 0.
    With it, B is replaced below `beta_split` by the expansion terms
    c beta^p, integrated in closed form as c beta_split^{s+p} / (s+p), which
    exposes the pole of the continuum invariant at s = n.

    Parameters
    ----------
    pair: OperatorPair
    flavor: Flavor or str
    s: float
        must exceed the dimension n
    ctl: QuadratureControl, default DEFAULT_QUADRATURE_CONTROL
    expansion: AsymptoticExpansion, optional
        small-beta expansion of B (terms without logarithms)
    beta_split: float, optional
        required with `expansion`

    Returns
    -------
    float

    Raises
    ------
    DomainError
        s <= n, or `expansion` given without `beta_split`
    UnsupportedError
        the expansion carries logarithmic terms
    """
    flavor = Flavor(flavor)
    if not s > pair.n:
        raise DomainError(f"the zeta function is defined for s > n = {pair.n}; got s={s}")

    limit = N_truncated(pair, flavor)
    scale = 1.0 / pair.m

    if expansion is None:
        result = integrate_semi_infinite(
            lambda b: b ** (s - 1.0) * _spectral_value(pair, flavor, b, limit), ctl, scale=scale
        )
        return float(result.value * special.rgamma(s))

    if beta_split is None or not beta_split > 0:
        raise DomainError("a positive beta_split is required together with an expansion")
    head = 0.0
    for term in expansion.terms:
        if term.log_power != 0:
            raise UnsupportedError("logarithmic expansion terms are not integrated")
        exponent = s + term.power
        if exponent <= 0:
            raise DomainError(f"expansion term beta^{term.power} is not integrable at s={s}")
        head += term.coefficient * beta_split**exponent / exponent

    tail = integrate_semi_infinite(
        lambda u: (beta_split + u) ** (s - 1.0)
        * _spectral_value(pair, flavor, beta_split + u, limit),
        ctl,
        scale=scale,
    )
    return float((head + tail.value) * special.rgamma(s))


def _sinh_ratio(x: ArrayLike, y: ArrayLike) -> Union[float, NDArray[np.float64]]:
    """sinh^2((x - y)/2) / (sinh x sinh y) for x, y > 0, without overflow"""
    x, y = np.asarray(x, dtype=float), np.asarray(y, dtype=float)
    with np.errstate(under="ignore"):
        out = np.exp(-2.0 * np.minimum(x, y)) * np.expm1(-np.abs(x - y)) ** 2 / (
            np.expm1(-2.0 * x) * np.expm1(-2.0 * y)
        )
    return float(out) if out.ndim == 0 else out


def _x_over_sinh(x: float) -> float:
    if x == 0.0:
        return 1.0
    return -2.0 * x * math.exp(-x) / math.expm1(-2.0 * x)


def _inv_sinh_product(x: float, y: float) -> float:
    """1 / (sinh x sinh y)"""
    return 4.0 * math.exp(-x - y) / (math.expm1(-2.0 * x) * math.expm1(-2.0 * y))


def _momentum_integral(
    geom: GeometryPair, radial: Any, ctl: QuadratureControl
) -> QuadratureResult:
    """
    int d^n xi / (2 pi)^n F for n in {1, 2}

    `radial(r, a, b, c)` evaluates the integrand at |xi_+| = r a, |xi_-| = r b
    and |xi_+ xi_-| = r^2 c, for a unit direction with symbol lengths a, b, c.
    """
    if geom.n > 2:
        raise UnsupportedError(f"momentum integrals are implemented for n <= 2; got n={geom.n}")

    symmetric = 0.5 * (
        geom.vielbein_plus @ geom.vielbein_minus.T + geom.vielbein_minus @ geom.vielbein_plus.T
    )

    def lengths(u: NDArray[np.float64]):
        return (
            math.sqrt(u @ geom.g_plus @ u),
            math.sqrt(u @ geom.g_minus @ u),
            float(u @ symmetric @ u),
        )

    if geom.n == 1:
        a, b, c = lengths(np.ones(1))
        half = integrate_semi_infinite(
            lambda r: radial(r, a, b, c), ctl, scale=1.0 / min(a, b)
        )
        return QuadratureResult(
            2.0 * half.value / (2.0 * math.pi), 2.0 * half.error_estimate, half.evaluations
        )

    inner_ctl = ctl.tighter()

    def angular(theta: float) -> float:
        a, b, c = lengths(np.array([math.cos(theta), math.sin(theta)]))
        return integrate_semi_infinite(
            lambda r: r * radial(r, a, b, c), inner_ctl, scale=1.0 / min(a, b)
        ).value

    # the integrand is even under xi -> -xi
    half = integrate_finite(angular, 0.0, math.pi, ctl)
    factor = 2.0 / (2.0 * math.pi) ** 2
    return QuadratureResult(factor * half.value, factor * half.error_estimate, half.evaluations)


def V_b(geom: GeometryPair, ctl: QuadratureControl = DEFAULT_QUADRATURE_CONTROL) -> float:
    """
    Leading small-beta coefficient of the bosonic invariant

    N vol int d^n xi/(2 pi)^n sinh^2[(|xi_+| - |xi_-|)/2] / (sinh|xi_+| sinh|xi_-|)

    Parameters
    ----------
    geom: GeometryPair
    ctl: QuadratureControl, default DEFAULT_QUADRATURE_CONTROL

    Returns
    -------
    float

    Raises
    ------
    UnsupportedError
        n > 2
    """
    if np.array_equal(geom.g_plus, geom.g_minus):
        return 0.0

    def radial(r: float, a: float, b: float, c: float) -> float:
        if r == 0.0:
            return (a - b) ** 2 / (4.0 * a * b)
        return _sinh_ratio(r * a, r * b)

    result = _momentum_integral(geom, radial, ctl)
    logger.debug("V_b: %.12g +- %.2e", result.value, result.error_estimate)
    return geom.fiber_dim * geom.volume * result.value


def V_f(geom: GeometryPair, ctl: QuadratureControl = DEFAULT_QUADRATURE_CONTROL) -> float:
    """
    Leading small-beta coefficient of the fermionic invariant

    (N/4) vol int d^n xi/(2 pi)^n {|xi_+|^2/sinh^2|xi_+| + |xi_-|^2/sinh^2|xi_-|
    - 2 |xi_+ xi_-| / (sinh|xi_+| sinh|xi_-|)}, with |xi_+ xi_-| = xi^T e_+ e_-^T xi

    Raises
    ------
    UnsupportedError
        n > 2
    """
    if geom.is_equal:
        return 0.0

    def radial(r: float, a: float, b: float, c: float) -> float:
        x, y = r * a, r * b
        if r == 0.0:
            return 2.0 - 2.0 * c / (a * b)
        diagonal = _x_over_sinh(x) ** 2 + _x_over_sinh(y) ** 2
        return diagonal - 2.0 * r * r * c * _inv_sinh_product(x, y)

    result = _momentum_integral(geom, radial, ctl)
    logger.debug("V_f: %.12g +- %.2e", result.value, result.error_estimate)
    return 0.25 * geom.fiber_dim * geom.volume * result.value


@dataclass
class BetaRecord:
    """
    One point of a beta sweep

    Attributes
    ----------
    beta: float
    value: float
    route: Route
    error_estimate: float
    issue: str, optional
        set when the value violates an invariant (e.g. it is negative beyond roundoff)
    """

    beta: float
    value: float
    route: Route
    error_estimate: float
    issue: Optional[str] = None

    def flag_issue(self, issue: str):
        """Attach an issue to the record and warn about it"""
        self.issue = issue
        warnings.warn(f"beta={self.beta}: {issue}", stacklevel=2)


class BetaSweep:
    """
    Values of one invariant over an increasing list of beta

    Note: Users should not directly initialize this class;
          it is returned by `run_sweep`
    """

    def __init__(self, records: List[BetaRecord], flavor: Flavor, label: str = ""):
        """
        Initialize a BetaSweep

        Parameters
        ----------
        records: List[BetaRecord]
            one record per beta, ordered by strictly increasing beta
        flavor: Flavor
            which invariant was computed
        label: str, default ""
            free text describing the pair
        """
        betas = [r.beta for r in records]
        if any(b1 >= b2 for b1, b2 in zip(betas, betas[1:])):
            raise DomainError("sweep betas must be strictly increasing")
        self.records = records
        self.flavor = Flavor(flavor)
        self.label = label

    def __len__(self) -> int:
        """Number of beta values"""
        return len(self.records)

    def __iter__(self) -> Iterator[BetaRecord]:
        """Iterate over the records in beta order"""
        return iter(self.records)

    @property
    def betas(self) -> NDArray[np.float64]:
        """The beta values"""
        return np.array([r.beta for r in self.records])

    @property
    def values(self) -> NDArray[np.float64]:
        """The invariant values"""
        return np.array([r.value for r in self.records])

    @property
    def error_estimates(self) -> NDArray[np.float64]:
        """The error estimates (0 for spectral values)"""
        return np.array([r.error_estimate for r in self.records])

    @property
    def flagged(self) -> List[BetaRecord]:
        """Records with an issue attached"""
        return [r for r in self.records if r.issue is not None]

    def to_pandas(self) -> pd.DataFrame:
        """
        Convert to a pandas DataFrame

        Columns, in this order: beta, value, route, error_estimate

        Returns
        -------
        pd.DataFrame
        """
        return pd.DataFrame(
            {
                "beta": [r.beta for r in self.records],
                "value": [r.value for r in self.records],
                "route": [r.route.value for r in self.records],
                "error_estimate": [r.error_estimate for r in self.records],
            },
            columns=["beta", "value", "route", "error_estimate"],
        )

    def to_json_dict(self) -> Dict[str, Any]:
        """Serializable form of the sweep"""
        return {
            "flavor": self.flavor.value,
            "label": self.label,
            "records": [
                {
                    "beta": r.beta,
                    "value": r.value,
                    "route": r.route.value,
                    "error_estimate": r.error_estimate,
                    "issue": r.issue,
                }
                for r in self.records
            ],
        }

    def save_as_csv(self, path: Union[str, os.PathLike]):
        """
        Save the sweep as a csv file with header beta,value,route,error_estimate

        Floats are written with their shortest round-trip representation, so
        repeated runs give identical files.
        """
        self.to_pandas().to_csv(path, index=False, float_format=None)

    def save_as_json(self, path: Union[str, os.PathLike]):
        """Save the sweep (including any flagged issues) as a json file"""
        with open(path, "w") as f:
            json.dump(self.to_json_dict(), f, indent=4)

    def get_report_string(self) -> str:
        """Human readable table of the sweep"""
        lines = [f"{self.flavor.value} invariant sweep {self.label}".rstrip()]
        lines.append(f"{'beta':>12}  {'value':>22}  {'error':>10}  route")
        for r in self.records:
            lines.append(
                f"{r.beta:>12.6g}  {r.value:>22.15e}  {r.error_estimate:>10.2e}  {r.route.value}"
                + (f"  ISSUE: {r.issue}" if r.issue else "")
            )
        return "\n".join(lines)


def threads_from_env() -> int:
    """Worker count for sweeps from RELSPEC_THREADS (default 1)"""
    raw = os.environ.get(THREADS_ENV_VAR, "1")
    try:
        threads = int(raw)
    except ValueError as e:
        raise DomainError(f"{THREADS_ENV_VAR} must be a positive integer; got '{raw}'") from e
    if threads < 1:
        raise DomainError(f"{THREADS_ENV_VAR} must be a positive integer; got '{raw}'")
    return threads


def run_sweep(
    pair: OperatorPair,
    betas: Sequence[float],
    flavor: Union[Flavor, str] = Flavor.BOSE,
    route: Union[Route, str] = Route.SPECTRAL,
    ctl: QuadratureControl = HEAT_QUADRATURE_CONTROL,
    threads: Optional[int] = None,
) -> BetaSweep:
    """
    Evaluate an invariant over a list of beta values

    Entries are independent and may run on several threads; the result is
    ordered by beta regardless. A row whose quadrature misses its tolerance
    keeps the best value found and carries an issue instead of aborting the sweep.

    Parameters
    ----------
    pair: OperatorPair
    betas: Sequence[float]
        positive, distinct; sorted before evaluation
    flavor: Flavor or str, default "bose"
    route: Route or str, default "spectral"
    ctl: QuadratureControl, default HEAT_QUADRATURE_CONTROL
        used by the heat route
    threads: int, optional
        defaults to RELSPEC_THREADS

    Returns
    -------
    BetaSweep
    """
    flavor, route = Flavor(flavor), Route(route)
    ordered = sorted(float(b) for b in betas)
    if len(set(ordered)) != len(ordered):
        raise DomainError("sweep betas must be distinct")
    for beta in ordered:
        _check_beta(beta)
    threads = threads_from_env() if threads is None else threads

    def evaluate(beta: float) -> BetaRecord:
        try:
            result = invariant(pair, flavor, beta, route, ctl)
        except AccuracyError as e:
            logger.debug("sweep %s/%s beta=%g failed: %s", flavor.value, route.value, beta, e)
            value = e.value if e.value is not None else math.nan
            error = e.error_estimate if e.error_estimate is not None else math.nan
            return BetaRecord(beta, value, route, error, issue=f"accuracy not reached: {e}")
        logger.debug("sweep %s/%s beta=%g -> %.15g", flavor.value, route.value, beta, result.value)
        return BetaRecord(beta, result.value, route, result.error_estimate)

    if threads > 1 and len(ordered) > 1:
        with ThreadPoolExecutor(max_workers=threads) as pool:
            records = list(pool.map(evaluate, ordered))
    else:
        records = [evaluate(beta) for beta in ordered]

    finite = [abs(r.value) for r in records if math.isfinite(r.value)]
    scale = max([1.0] + finite)
    for record in records:
        if record.issue is not None:
            warnings.warn(f"beta={record.beta}: {record.issue}", stacklevel=2)
        elif not math.isfinite(record.value):
            record.flag_issue("value is not finite")
        elif record.value < -NEGATIVITY_TOL * scale:
            record.flag_issue(f"negative invariant {record.value:.3e}")

    return BetaSweep(records, flavor, label=pair.plus.label)

"""
Small-parameter asymptotics: the Mellin expansion engine, local geometric coefficients, fits

`lemma_expand` expands I(eps) = int_0^inf h(t) f(eps t) dt as eps -> 0 by
summing the residues of the Mellin-Barnes representation. The poles are
simple when mu + nu is not an integer; otherwise double poles produce
logarithms and digamma corrections.

The Bogolyubov invariants behave as

    B(beta) ~ beta^{-n} c_0 + beta^{2-n} c_1 + ...   (+ global beta^{2k} terms)

with c_0 = V_b, d_0 = V_f computed here from the constant leading symbols,
and c_1, d_1 from exactly solvable families.
"""

import logging
import math
from dataclasses import dataclass, field
from enum import Enum
from typing import Any, Callable, Dict, List, Optional, Sequence, Tuple, Union

import numpy as np
from numpy.typing import NDArray
from scipy import special

from .bogolyubov import BetaSweep, Flavor, run_sweep
from .errors import DomainError, FitError, KindMismatchError, UnsupportedError
from .quadrature import (
    DEFAULT_MELLIN_CONTROL,
    DEFAULT_QUADRATURE_CONTROL,
    MellinKind,
    MellinTransform,
    QuadratureControl,
    QuadratureResult,
    integrate_quadrant,
    integrate_semi_infinite,
)
from .specfun import DEFAULT_SERIES_CONTROL, KernelKind, SeriesControl, digamma, eval_h
from .spectral import GeometryPair, OperatorPair


logger = logging.getLogger(__name__)

# mu + nu closer than this to an integer is treated as an integer
INTEGER_TOL = 1e-12

# fits with a (column-scaled) design matrix worse conditioned than this are rejected
MAX_FIT_CONDITION = 1e12


class CaseTag(str, Enum):
    """Which pole structure the Mellin-Barnes integrand has"""

    NONINTEGER = "noninteger"
    POSITIVE_INTEGER = "positive_integer"
    NONPOSITIVE_INTEGER = "nonpositive_integer"


def classify(mu: float, nu: float) -> Tuple[CaseTag, int]:
    """
    Case and integer m for the pair of offsets

    Returns
    -------
    Tuple[CaseTag, int]
        m = mu + nu - 1 for the positive-integer case, 1 - mu - nu for the
        nonpositive-integer case and 0 otherwise
    """
    total = mu + nu
    nearest = round(total)
    if abs(total - nearest) > INTEGER_TOL:
        return CaseTag.NONINTEGER, 0
    if nearest >= 1:
        return CaseTag.POSITIVE_INTEGER, int(nearest) - 1
    return CaseTag.NONPOSITIVE_INTEGER, 1 - int(nearest)


@dataclass(frozen=True)
class AsymptoticTerm:
    """coefficient * x^power * (log x)^log_power"""

    power: float
    log_power: int
    coefficient: float

    def evaluate(self, x: float) -> float:
        """Value of the term at x > 0"""
        return self.coefficient * x**self.power * math.log(x) ** self.log_power


@dataclass
class AsymptoticExpansion:
    """
    A truncated asymptotic expansion in a small parameter

    Attributes
    ----------
    terms: List[AsymptoticTerm]
        kept sorted by (power, log_power)
    truncation_order: int
        the K the expansion was built with
    case_tag: CaseTag, optional
        set by `lemma_expand`
    mu, nu: float, optional
        offsets of the transforms, when built by `lemma_expand`
    next_power: float, optional
        the smallest power left out
    """

    terms: List[AsymptoticTerm]
    truncation_order: int
    case_tag: Optional[CaseTag] = None
    mu: Optional[float] = None
    nu: Optional[float] = None
    next_power: Optional[float] = None

    def __post_init__(self):
        """Sort the terms"""
        self.terms = sorted(self.terms, key=lambda term: (term.power, term.log_power))

    def __len__(self) -> int:
        """Number of terms"""
        return len(self.terms)

    def evaluate(self, x: float) -> float:
        """Sum of all terms at x > 0"""
        if not x > 0:
            raise DomainError(f"expansions are evaluated at positive arguments; got {x}")
        return float(sum(term.evaluate(x) for term in self.terms))

    __call__ = evaluate

    def coefficient(self, power: float, log_power: int = 0) -> float:
        """Summed coefficient of x^power (log x)^log_power (0 when absent)"""
        return float(
            sum(
                term.coefficient
                for term in self.terms
                if abs(term.power - power) < 1e-12 and term.log_power == log_power
            )
        )

    @property
    def has_logs(self) -> bool:
        """True when some term carries a logarithm"""
        return any(term.log_power for term in self.terms)

    def to_json_dict(
        self, residual_diagnostics: Optional[Dict[str, Any]] = None
    ) -> Dict[str, Any]:
        """Serializable expansion report"""
        return {
            "case": None if self.case_tag is None else self.case_tag.value,
            "mu": self.mu,
            "nu": self.nu,
            "truncation_order": self.truncation_order,
            "next_power": self.next_power,
            "terms": [
                {"power": t.power, "log_power": t.log_power, "coefficient": t.coefficient}
                for t in self.terms
            ],
            "residual_diagnostics": residual_diagnostics or {},
        }


def _sign(k: int) -> float:
    return -1.0 if k % 2 else 1.0


def coefficient_c1(k: int, f_hat: MellinTransform, h_hat: MellinTransform) -> float:
    """Simple-pole coefficient at q = k (noninteger case), multiplying eps^{k - mu}"""
    shift = f_hat.offset + h_hat.offset - 1.0
    return (
        _sign(k)
        / math.factorial(k)
        * float(special.gamma(-k + shift))
        * h_hat(k - shift)
        * f_hat(k)
    )


def coefficient_c2(k: int, f_hat: MellinTransform, h_hat: MellinTransform) -> float:
    """Simple-pole coefficient at q = k + mu + nu - 1, multiplying eps^{k + nu - 1}"""
    shift = f_hat.offset + h_hat.offset - 1.0
    return (
        _sign(k)
        / math.factorial(k)
        * float(special.gamma(-k - shift))
        * h_hat(k)
        * f_hat(k + shift)
    )


def coefficient_c3(k: int, m: int, f_hat: MellinTransform, h_hat: MellinTransform) -> float:
    """Simple poles below the double poles (mu + nu = 1 + m), multiplying eps^{k - mu}"""
    return _sign(k) / math.factorial(k) * math.factorial(m - k - 1) * h_hat(k - m) * f_hat(k)


def _double_pole(
    k: int, m: int, h_value: float, f_value: float, h_prime: float, f_prime: float
) -> Tuple[float, float]:
    """(regular, logarithmic) coefficients of a double pole"""
    norm = _sign(m) / (math.factorial(k + m) * math.factorial(k))
    regular = norm * (
        (digamma(k + 1) + digamma(k + 1 + m)) * h_value * f_value
        - h_prime * f_value
        - h_value * f_prime
    )
    return regular, -norm * h_value * f_value


def coefficient_c4_c5(
    k: int, m: int, f_hat: MellinTransform, h_hat: MellinTransform
) -> Tuple[float, float]:
    """Double pole at q = k + m (mu + nu = 1 + m): coefficients of eps^{k+m-mu} and its log"""
    return _double_pole(
        k, m, h_hat(k), f_hat(k + m), h_hat.derivative(k), f_hat.derivative(k + m)
    )


def coefficient_c6(k: int, m: int, f_hat: MellinTransform, h_hat: MellinTransform) -> float:
    """Simple poles at q = k - m (mu + nu = 1 - m), multiplying eps^{k - m - mu}"""
    return _sign(k) / math.factorial(k) * math.factorial(m - k - 1) * h_hat(k) * f_hat(k - m)


def coefficient_c7_c8(
    k: int, m: int, f_hat: MellinTransform, h_hat: MellinTransform
) -> Tuple[float, float]:
    """Double pole at q = k (mu + nu = 1 - m): coefficients of eps^{k - mu} and its log"""
    return _double_pole(k, m, h_hat(k + m), f_hat(k), h_hat.derivative(k + m), f_hat.derivative(k))


def lemma_expand(
    f_hat: MellinTransform,
    h_hat: MellinTransform,
    K: int,
    ctl: QuadratureControl = DEFAULT_MELLIN_CONTROL,
) -> AsymptoticExpansion:
    """
    Asymptotic expansion of I(eps) = int_0^inf h(t) f(eps t) dt as eps -> 0

    Every residue series is summed for k = 0..K; the finite simple-pole sums
    of the integer cases are always complete.

    Parameters
    ----------
    f_hat: MellinTransform
        f-type transform; its offset is mu
    h_hat: MellinTransform
        h-type transform; its offset is nu
    K: int
        truncation order
    ctl: QuadratureControl, default DEFAULT_MELLIN_CONTROL
        applied to transforms that do not set their own control

    Returns
    -------
    AsymptoticExpansion
        in the variable eps; logarithmic terms carry log(eps)
    """
    if K < 0:
        raise DomainError(f"truncation order must be >= 0; got {K}")
    if f_hat.kind is not MellinKind.F or h_hat.kind is not MellinKind.H:
        raise DomainError("lemma_expand takes an f-type and an h-type transform, in that order")
    if ctl is not DEFAULT_MELLIN_CONTROL:
        f_hat = _with_ctl(f_hat, ctl)
        h_hat = _with_ctl(h_hat, ctl)

    mu, nu = f_hat.offset, h_hat.offset
    case, m = classify(mu, nu)
    terms: List[AsymptoticTerm] = []

    if case is CaseTag.NONINTEGER:
        for k in range(K + 1):
            terms.append(AsymptoticTerm(k - mu, 0, coefficient_c1(k, f_hat, h_hat)))
            terms.append(AsymptoticTerm(k + nu - 1.0, 0, coefficient_c2(k, f_hat, h_hat)))
        next_power = min(K + 1 - mu, K + nu)
    elif case is CaseTag.POSITIVE_INTEGER:
        for k in range(m):
            terms.append(AsymptoticTerm(k - mu, 0, coefficient_c3(k, m, f_hat, h_hat)))
        for k in range(K + 1):
            regular, logarithmic = coefficient_c4_c5(k, m, f_hat, h_hat)
            terms.append(AsymptoticTerm(k + m - mu, 0, regular))
            terms.append(AsymptoticTerm(k + m - mu, 1, logarithmic))
        next_power = K + 1 + m - mu
    else:
        for k in range(m):
            terms.append(AsymptoticTerm(k - m - mu, 0, coefficient_c6(k, m, f_hat, h_hat)))
        for k in range(K + 1):
            regular, logarithmic = coefficient_c7_c8(k, m, f_hat, h_hat)
            terms.append(AsymptoticTerm(k - mu, 0, regular))
            terms.append(AsymptoticTerm(k - mu, 1, logarithmic))
        next_power = K + 1 - mu

    logger.debug("lemma_expand: case %s, m=%d, %d terms", case.value, m, len(terms))
    return AsymptoticExpansion(terms, K, case, mu, nu, next_power)


def _with_ctl(transform: MellinTransform, ctl: QuadratureControl) -> MellinTransform:
    if transform.ctl is not DEFAULT_MELLIN_CONTROL:
        return transform
    return MellinTransform(
        profile=transform.profile,
        offset=transform.offset,
        kind=transform.kind,
        parts_order=transform.parts_order,
        derivatives=transform.derivatives,
        closed_form=transform.closed_form,
        closed_form_derivative=transform.closed_form_derivative,
        ctl=ctl,
        scale=transform.scale,
    )


def exponential_f_transform(mu: float = 0.0) -> MellinTransform:
    """
    f(t) = t^{-mu} e^{-t}, whose transform is identically 1 for every q

    Returns
    -------
    MellinTransform
        f-type with offset mu and closed forms for the value and q-derivative
    """
    return MellinTransform(
        profile=lambda u: math.exp(-u),
        offset=mu,
        kind=MellinKind.F,
        derivatives={order: (lambda u: math.exp(-u)) for order in range(1, 12)},
        closed_form=lambda q: 1.0,
        closed_form_derivative=lambda q: 0.0,
    )


def rational_h_transform(nu: float, max_order: int = 10) -> MellinTransform:
    """
    h(t) = e^{-1/t} (1 + t)^{-nu}, an h-type function with t^nu h(t) -> 1 at infinity

    The profile x^{-nu} h(1/x) = e^{-x} (1 + x)^{-nu} has the exact derivatives
    (-d/dx)^N = e^{-x} sum_j C(N, j) (nu)_j (1 + x)^{-nu-j}, used for every
    integration by parts up to `max_order`.

    Parameters
    ----------
    nu: float
        positive offset
    max_order: int, default 10

    Returns
    -------
    MellinTransform
    """
    if not nu > 0:
        raise DomainError(f"h-type offsets must be positive; got {nu}")

    def minus_derivative(order: int) -> Callable[[float], float]:
        weights = [math.comb(order, j) * float(special.poch(nu, j)) for j in range(order + 1)]

        def derivative(x: float) -> float:
            return math.exp(-x) * sum(w * (1.0 + x) ** (-nu - j) for j, w in enumerate(weights))

        return derivative

    return MellinTransform(
        profile=lambda x: math.exp(-x) * (1.0 + x) ** -nu,
        offset=nu,
        kind=MellinKind.H,
        derivatives={order: minus_derivative(order) for order in range(1, max_order + 1)},
    )


def rational_h(nu: float) -> Callable[[float], float]:
    """The function whose transform `rational_h_transform` returns"""

    def h(t: float) -> float:
        if t <= 0.0:
            return 0.0
        return math.exp(-1.0 / t) * (1.0 + t) ** -nu

    return h


# h-type test functions with known transforms, by name
H_TEST_FUNCTIONS: Dict[str, Tuple[Callable, Callable]] = {
    "rational": (rational_h, rational_h_transform),
}


def next_order_terms(
    f_hat: MellinTransform, h_hat: MellinTransform, K: int
) -> AsymptoticExpansion:
    """The terms of the K + 1 expansion sitting at the first power the K expansion leaves out"""
    truncated = lemma_expand(f_hat, h_hat, K)
    extended = lemma_expand(f_hat, h_hat, K + 1)
    terms = [t for t in extended.terms if abs(t.power - truncated.next_power) < 1e-12]
    return AsymptoticExpansion(terms, K + 1, extended.case_tag, extended.mu, extended.nu)


@dataclass(frozen=True)
class ResidualScaling:
    """
    How the remainder of a truncated expansion shrinks when eps is halved

    Attributes
    ----------
    eps: float
    residual, residual_half: float
        I(eps) minus the expansion, at eps and eps/2
    measured_ratio: float
        residual / residual_half
    predicted_ratio: float
        the same ratio for the next-order terms alone
    """

    eps: float
    residual: float
    residual_half: float
    measured_ratio: float
    predicted_ratio: float

    @property
    def relative_deviation(self) -> float:
        """|measured / predicted - 1|"""
        return abs(self.measured_ratio / self.predicted_ratio - 1.0)


def residual_scaling(
    f: Callable[[float], float],
    h: Callable[[float], float],
    f_hat: MellinTransform,
    h_hat: MellinTransform,
    K: int,
    eps: float,
    ctl: QuadratureControl = DEFAULT_MELLIN_CONTROL,
) -> ResidualScaling:
    """
    Compare I(eps) = int h(t) f(eps t) dt against its K-term expansion at eps and eps/2

    Parameters
    ----------
    f, h: Callable[[float], float]
        the functions behind `f_hat` and `h_hat`
    f_hat, h_hat: MellinTransform
    K: int
    eps: float
        small positive parameter
    ctl: QuadratureControl, default DEFAULT_MELLIN_CONTROL
        tolerances of the direct integrals

    Returns
    -------
    ResidualScaling
    """
    if not 0.0 < eps < 1.0:
        raise DomainError(f"eps must lie in (0, 1); got {eps}")
    expansion = lemma_expand(f_hat, h_hat, K)
    following = next_order_terms(f_hat, h_hat, K)

    def residual(e: float) -> float:
        direct = integrate_semi_infinite(lambda t: h(t) * f(e * t), ctl, scale=1.0 / e)
        return direct.value - expansion.evaluate(e)

    r, r_half = residual(eps), residual(eps / 2.0)
    predicted = following.evaluate(eps) / following.evaluate(eps / 2.0)
    logger.debug("residuals %.6e, %.6e; predicted ratio %.6f", r, r_half, predicted)
    return ResidualScaling(eps, r, r_half, r / r_half, predicted)


@dataclass(frozen=True)
class LocalGeometryCoefficients:
    """
    Leading heat-trace coefficients of a constant-coefficient operator pair

    A0_plus/A0_minus are the first heat kernel coefficients of each operator;
    B0, C0 belong to the combined traces X and Y, and Psi0, Phi0 to the
    relative traces. Psi0 is homogeneous of degree -n/2 and Phi0 of degree
    -n/2 - 1.
    """

    geometry: GeometryPair
    flavor: Flavor
    A0_plus: float
    A0_minus: float

    @property
    def n(self) -> int:
        """Dimension"""
        return self.geometry.n

    @property
    def _prefactor(self) -> float:
        return self.geometry.fiber_dim * self.geometry.volume

    def B0(self, t: float, s: float) -> float:
        """N vol det(t g_+ + s g_-)^{-1/2}"""
        combined = t * self.geometry.g_plus + s * self.geometry.g_minus
        return self._prefactor / math.sqrt(np.linalg.det(combined))

    def C0(self, t: float, s: float) -> float:
        """N vol det(G)^{-1/2} (1/2) tr(G^{-1} e_+ e_-^T), G = t g_+ + s g_-"""
        combined = t * self.geometry.g_plus + s * self.geometry.g_minus
        mixed = self.geometry.vielbein_plus @ self.geometry.vielbein_minus.T
        trace = float(np.trace(np.linalg.solve(combined, mixed)))
        return self._prefactor / math.sqrt(np.linalg.det(combined)) * 0.5 * trace

    def Psi0(self, t: float, s: float) -> float:
        """(t+s)^{-n/2} (A0_+ + A0_-) - B0(t,s) - B0(s,t)"""
        total = (t + s) ** (-self.n / 2.0) * (self.A0_plus + self.A0_minus)
        return total - self.B0(t, s) - self.B0(s, t)

    def Phi0(self, t: float, s: float) -> float:
        """(n/2)(t+s)^{-n/2-1} (A0_+ + A0_-) - C0(t,s) - C0(s,t)"""
        total = 0.5 * self.n * (t + s) ** (-self.n / 2.0 - 1.0) * (self.A0_plus + self.A0_minus)
        return total - self.C0(t, s) - self.C0(s, t)


def local_coefficients(
    geom: GeometryPair, flavor: Union[Flavor, str] = Flavor.BOSE
) -> LocalGeometryCoefficients:
    """
    Leading local coefficients of a pair with constant leading symbols

    Parameters
    ----------
    geom: GeometryPair
    flavor: Flavor or str, default "bose"

    Returns
    -------
    LocalGeometryCoefficients
    """
    prefactor = geom.fiber_dim * geom.volume
    return LocalGeometryCoefficients(
        geometry=geom,
        flavor=Flavor(flavor),
        A0_plus=prefactor / math.sqrt(np.linalg.det(geom.g_plus)),
        A0_minus=prefactor / math.sqrt(np.linalg.det(geom.g_minus)),
    )


def _heat_coefficient_integral(
    kinds: Tuple[KernelKind, KernelKind],
    integrand: Callable[[float, float], float],
    n: int,
    ctl: QuadratureControl,
    series_ctl: SeriesControl,
) -> QuadratureResult:
    """(4 pi)^{-n/2} int int h_a(t) h_b(s) F(t, s) dt ds"""

    def weighted(t: float, s: float) -> float:
        weight = eval_h(kinds[0], t, series_ctl) * eval_h(kinds[1], s, series_ctl)
        if weight == 0.0:
            return 0.0
        return weight * integrand(t, s)

    result = integrate_quadrant(weighted, ctl)
    norm = (4.0 * math.pi) ** (-n / 2.0)
    return QuadratureResult(norm * result.value, norm * result.error_estimate, result.evaluations)


def c0_coefficient_b(
    geom: GeometryPair,
    ctl: QuadratureControl = DEFAULT_QUADRATURE_CONTROL,
    series_ctl: SeriesControl = DEFAULT_SERIES_CONTROL,
) -> float:
    """
    Leading coefficient of B_b: (4 pi)^{-n/2} int int h_f(t) h_b(s) Psi0(t, s) dt ds

    Equals V_b for the same geometry.
    """
    if np.array_equal(geom.g_plus, geom.g_minus):
        return 0.0
    local = local_coefficients(geom, Flavor.BOSE)
    result = _heat_coefficient_integral(
        (KernelKind.FERMI, KernelKind.BOSE), local.Psi0, geom.n, ctl, series_ctl
    )
    logger.debug("c0: %.12g +- %.2e", result.value, result.error_estimate)
    return result.value


def d0_coefficient_f(
    geom: GeometryPair,
    ctl: QuadratureControl = DEFAULT_QUADRATURE_CONTROL,
    series_ctl: SeriesControl = DEFAULT_SERIES_CONTROL,
) -> float:
    """
    Leading coefficient of B_f: (4 pi)^{-n/2} int int h_0(t) h_0(s) Phi0(t, s) dt ds

    Equals V_f for the same geometry.
    """
    if geom.is_equal:
        return 0.0
    local = local_coefficients(geom, Flavor.FERMI)
    result = _heat_coefficient_integral(
        (KernelKind.ZERO, KernelKind.ZERO), local.Phi0, geom.n, ctl, series_ctl
    )
    logger.debug("d0: %.12g +- %.2e", result.value, result.error_estimate)
    return result.value


@dataclass(frozen=True)
class FamilyCoefficients:
    """
    Exact small-time coefficients Psi_k, Phi_k of a solvable family

    For constant leading symbols and constant potentials q (or an
    anticommuting Dirac shift) the heat traces are power laws times
    exponentials up to exponentially small terms, so every Psi_k, Phi_k is
    known in closed form.

    Attributes
    ----------
    name: str
        family name recorded by the builder
    local: LocalGeometryCoefficients
    q_plus, q_minus: float
        constant potentials of the squared operators
    dirac_shift: float
        M^2 of an anticommuting Dirac shift (0 otherwise)
    """

    name: str
    local: LocalGeometryCoefficients
    q_plus: float = 0.0
    q_minus: float = 0.0
    dirac_shift: float = 0.0

    @property
    def n(self) -> int:
        """Dimension"""
        return self.local.n

    @property
    def is_dirac(self) -> bool:
        """True for Dirac families"""
        return self.local.flavor is Flavor.FERMI

    def psi(self, k: int) -> Callable[[float, float], float]:
        """Psi_k as a function of (t, s)"""
        if k < 0:
            raise DomainError(f"coefficient order must be >= 0; got {k}")
        local, n = self.local, self.n
        q_p, q_m = self.q_plus, self.q_minus
        norm = 1.0 / math.factorial(k)

        def psi_k(t: float, s: float) -> float:
            diagonal = (t + s) ** (k - n / 2.0) * (
                local.A0_plus * (-q_p) ** k + local.A0_minus * (-q_m) ** k
            )
            cross = local.B0(t, s) * (-(t * q_p + s * q_m)) ** k + local.B0(s, t) * (
                -(s * q_p + t * q_m)
            ) ** k
            return norm * (diagonal - cross)

        if k == 0:
            return local.Psi0
        return psi_k

    def phi(self, k: int) -> Callable[[float, float], float]:
        """Phi_k as a function of (t, s)"""
        if not self.is_dirac:
            raise KindMismatchError("Phi_k exists for Dirac families only")
        if k < 0:
            raise DomainError(f"coefficient order must be >= 0; got {k}")
        if k == 0:
            return self.local.Phi0
        if self.dirac_shift == 0.0:
            return lambda t, s: 0.0

        a0 = self.local.A0_minus
        n = self.n
        shift = self.dirac_shift

        def phi_k(t: float, s: float) -> float:
            # -(e^{-tM^2} - 1)(e^{-sM^2} - 1) dTheta(t+s) + M^2 e^{-(t+s)M^2} Theta(t+s)
            product = sum(
                t**a * s ** (k - a) / (math.factorial(a) * math.factorial(k - a))
                for a in range(1, k)
            )
            first = 0.5 * n * (t + s) ** (-n / 2.0 - 1.0) * (-shift) ** k * product
            second = shift * (-shift) ** (k - 1) * (t + s) ** (k - 1 - n / 2.0) / math.factorial(
                k - 1
            )
            return a0 * (first + second)

        return phi_k


def family_coefficients(pair: OperatorPair) -> FamilyCoefficients:
    """
    Closed-form Psi_k, Phi_k for the pairs built by the solvable-family builders

    Supported: "torus" (any metrics and constant potentials), "constant_shift"
    with a geometry attached, and "dirac_circle" without a shift or with an
    anticommuting shift.

    Raises
    ------
    UnsupportedError
        any other pair
    """
    family = pair.family
    if family is None or pair.geometry is None:
        raise UnsupportedError("the pair does not come from a solvable family with known geometry")
    name = family["name"]
    flavor = Flavor.FERMI if pair.is_dirac else Flavor.BOSE
    local = local_coefficients(pair.geometry, flavor)

    if name == "torus":
        return FamilyCoefficients(name, local, family["q_plus"], family["q_minus"])
    if name == "constant_shift":
        return FamilyCoefficients(name, local, family["M_sq"], 0.0)
    if name == "dirac_circle":
        shift = family["shift"]
        if shift == 0:
            return FamilyCoefficients(name, local)
        if family["shift_kind"] == "anticommuting":
            return FamilyCoefficients(name, local, shift**2, 0.0, dirac_shift=shift**2)
        raise UnsupportedError("no closed-form coefficients for a scalar Dirac shift")
    raise UnsupportedError(f"no closed-form coefficients for the '{name}' family")


def psi_hat_local(family: FamilyCoefficients, k: int, u: float, m: float) -> float:
    """
    Mellin transform at the integer point k of psi(rho, u) = e^{-m^2 rho} Psi(rho u, rho(1-u))

    (4 pi)^{-n/2} sum_{j=0}^k (-1)^{j+k} k!/j! m^{2j} Psi_{k-j}(u, 1-u)
    """
    total = sum(
        _sign(j + k) * math.factorial(k) / math.factorial(j) * m ** (2 * j)
        * family.psi(k - j)(u, 1.0 - u)
        for j in range(k + 1)
    )
    return (4.0 * math.pi) ** (-family.n / 2.0) * total


def psi_hat_numeric(
    psi: Callable[[float, float], float],
    n: int,
    m: float,
    q: float,
    u: float,
    ctl: QuadratureControl = DEFAULT_MELLIN_CONTROL,
) -> float:
    """
    The same transform by quadrature of a relative heat trace Psi(t, s)

    `psi` must follow the continuum small-time behaviour (e.g. built from
    untruncated traces); a truncated spectral Psi vanishes at small times and
    has a different transform.
    """
    if not 0.0 < u < 1.0:
        raise DomainError(f"u must lie in (0, 1); got {u}")
    transform = MellinTransform.from_function(
        lambda rho: math.exp(-(m**2) * rho) * psi(rho * u, rho * (1.0 - u)),
        offset=n / 2.0,
        kind=MellinKind.F,
        ctl=ctl,
    )
    return transform(q)


def _finite_part_kernel_power(kind: KernelKind, n: int) -> float:
    """
    Finite part of int int h(t) h(s) (t + s)^{-n/2} dt ds for n = 1

    Through (t+s)^{-n/2} = pi^{-n/2} int d^n p e^{-(t+s) p^2} this is
    pi^{-1/2} * 2 * FP int_0^inf E(p)^2 dp; for E_0 the finite part is -1/4.
    """
    if kind is not KernelKind.ZERO or n != 1:
        raise UnsupportedError("finite parts are implemented for the E_0 kernel in n = 1")
    # int_0^inf [1/(4 sinh^2 p) - 1/(4 p^2)] dp = [(1/p - coth p)/4]_0^inf = -1/4
    return math.pi**-0.5 * 2.0 * -0.25


def c1_coefficient_b(
    pair: OperatorPair,
    ctl: QuadratureControl = DEFAULT_QUADRATURE_CONTROL,
    series_ctl: SeriesControl = DEFAULT_SERIES_CONTROL,
) -> float:
    """
    Subleading coefficient of B_b for a solvable family

    (4 pi)^{-n/2} int int h_f(t) h_b(s) [Psi_1 - m^2 (t+s) Psi_0] dt ds

    The integrand vanishes identically when both operators share the leading
    symbol (constant shifts included); otherwise the integral converges for
    n >= 3 only.

    Raises
    ------
    UnsupportedError
        no closed-form family, or a nonvanishing integrand in n < 3
    """
    if pair.is_dirac:
        raise KindMismatchError("c1_coefficient_b needs a Laplace type pair")
    family = family_coefficients(pair)
    geom = family.local.geometry
    if np.array_equal(geom.g_plus, geom.g_minus):
        return 0.0
    if family.n < 3:
        raise UnsupportedError(
            f"the c1 kernel integral diverges for unequal metrics in n={family.n}"
        )

    psi0, psi1 = family.psi(0), family.psi(1)
    m2 = pair.m**2
    result = _heat_coefficient_integral(
        (KernelKind.FERMI, KernelKind.BOSE),
        lambda t, s: psi1(t, s) - m2 * (t + s) * psi0(t, s),
        family.n,
        ctl,
        series_ctl,
    )
    return result.value


def d1_coefficient_f(
    pair: OperatorPair,
    ctl: QuadratureControl = DEFAULT_QUADRATURE_CONTROL,
    series_ctl: SeriesControl = DEFAULT_SERIES_CONTROL,
) -> float:
    """
    Subleading coefficient of B_f for a solvable Dirac family

    (4 pi)^{-n/2} int int h_0(t) h_0(s) {Phi_1 + m^2 [-(t+s) Phi_0 + Psi_0]} dt ds

    For an anticommuting shift M with equal scales, Phi_0 = Psi_0 = 0 and
    Phi_1 = M^2 A_0 (t+s)^{-n/2}; in n = 1 the integral is taken as its finite
    part, which gives d_1 = -M^2 A_0 / (4 pi).

    Raises
    ------
    UnsupportedError
        no closed-form family, unequal scales, or n >= 2
    """
    if not pair.is_dirac:
        raise KindMismatchError("d1_coefficient_f needs a Dirac type pair")
    family = family_coefficients(pair)
    if not family.local.geometry.is_equal:
        raise UnsupportedError("the d1 kernel integral diverges for unequal Dirac symbols in n=1")
    if family.dirac_shift == 0.0:
        return 0.0
    fp = _finite_part_kernel_power(KernelKind.ZERO, family.n)
    return (4.0 * math.pi) ** (-family.n / 2.0) * family.dirac_shift * family.local.A0_minus * fp


def fit_powers(n: int, num_terms: int, include_global: bool) -> List[Tuple[float, int]]:
    """
    (power, log_power) pairs of a small-beta model

    Local powers are -n + 2j for j < num_terms. Global terms beta^{2k} (and
    beta^{2k} log beta in even dimension) are added below the highest local power.
    """
    if num_terms < 1:
        raise DomainError(f"num_terms must be >= 1; got {num_terms}")
    powers: List[Tuple[float, int]] = [(-n + 2.0 * j, 0) for j in range(num_terms)]
    if include_global:
        top = -n + 2.0 * (num_terms - 1)
        k = 0
        while 2.0 * k <= top + 1.0:
            if n % 2 == 1:
                powers.append((2.0 * k, 0))
            else:
                if 2.0 * k > top:
                    powers.append((2.0 * k, 0))
                powers.append((2.0 * k, 1))
            k += 1
    return sorted(set(powers))


@dataclass
class FitResult:
    """
    Least-squares fit of a small-beta expansion

    Attributes
    ----------
    powers: List[Tuple[float, int]]
        (power, log_power) of every fitted term
    coefficients: NDArray
    uncertainties: NDArray
        one standard deviation from the covariance of the fit
    residual: float
        RMS residual of beta^n B
    condition: float
        condition number of the column-scaled design matrix
    n: int
    """

    powers: List[Tuple[float, int]]
    coefficients: NDArray[np.float64]
    uncertainties: NDArray[np.float64]
    residual: float
    condition: float
    n: int

    def coefficient(self, power: float, log_power: int = 0) -> float:
        """Fitted coefficient of beta^power (log beta)^log_power"""
        return float(self.coefficients[self._index(power, log_power)])

    def uncertainty(self, power: float, log_power: int = 0) -> float:
        """One-sigma uncertainty of that coefficient"""
        return float(self.uncertainties[self._index(power, log_power)])

    def _index(self, power: float, log_power: int) -> int:
        for i, (p, lp) in enumerate(self.powers):
            if abs(p - power) < 1e-12 and lp == log_power:
                return i
        raise KeyError(f"no fitted term beta^{power} log^{log_power}")

    @property
    def expansion(self) -> AsymptoticExpansion:
        """The fit as an expansion in beta"""
        return AsymptoticExpansion(
            [
                AsymptoticTerm(p, lp, float(c))
                for (p, lp), c in zip(self.powers, self.coefficients)
            ],
            truncation_order=len(self.powers) - 1,
        )

    def to_json_dict(self) -> Dict[str, Any]:
        """Serializable form of the fit"""
        return {
            "n": self.n,
            "terms": [
                {"power": p, "log_power": lp, "coefficient": float(c), "uncertainty": float(u)}
                for (p, lp), c, u in zip(self.powers, self.coefficients, self.uncertainties)
            ],
            "residual": self.residual,
            "condition": self.condition,
        }


def fit_leading(
    sweep: Union[BetaSweep, Tuple[Sequence[float], Sequence[float]]],
    n: int,
    num_terms: int = 2,
    include_global: bool = False,
) -> FitResult:
    """
    Fit beta^n B(beta) against the powers of the small-beta expansion

    Parameters
    ----------
    sweep: BetaSweep or (betas, values)
        samples of B at small beta
    n: int
        dimension
    num_terms: int, default 2
        number of local terms beta^{-n + 2j}
    include_global: bool, default False
        add the global beta^{2k} (and beta^{2k} log beta) terms

    Returns
    -------
    FitResult

    Raises
    ------
    FitError
        fewer samples than terms, or an ill-conditioned design matrix
    """
    if isinstance(sweep, BetaSweep):
        betas, values = sweep.betas, sweep.values
    else:
        betas, values = np.asarray(sweep[0], dtype=float), np.asarray(sweep[1], dtype=float)
    powers = fit_powers(n, num_terms, include_global)
    if len(betas) < len(powers):
        raise FitError(f"{len(powers)} terms need at least as many samples; got {len(betas)}")
    if np.any(betas <= 0):
        raise DomainError("fit samples need positive beta")

    target = betas**n * values
    design = np.column_stack(
        [betas ** (p + n) * np.log(betas) ** lp for p, lp in powers]
    )
    scales = np.linalg.norm(design, axis=0)
    if np.any(scales == 0):
        raise FitError("a fit column vanishes on the samples")
    scaled = design / scales
    condition = float(np.linalg.cond(scaled))
    if not condition < MAX_FIT_CONDITION:
        raise FitError(f"fit is ill-conditioned (condition number {condition:.3e})")

    solution, _, _, _ = np.linalg.lstsq(scaled, target, rcond=None)
    residuals = target - scaled @ solution
    dof = len(betas) - len(powers)
    sigma2 = float(residuals @ residuals) / dof if dof > 0 else 0.0
    covariance = sigma2 * np.linalg.inv(scaled.T @ scaled)

    coefficients = solution / scales
    uncertainties = np.sqrt(np.clip(np.diag(covariance), 0.0, None)) / scales
    rms = float(np.sqrt(np.mean(residuals**2)))
    logger.debug("fit_leading: n=%d, %d terms, rms residual %.3e", n, len(powers), rms)
    return FitResult(powers, coefficients, uncertainties, rms, condition, n)


@dataclass
class ContinuumFit:
    """
    Fits of the same invariant at increasing cutoffs

    Attributes
    ----------
    cutoffs: List[int]
    fits: List[FitResult]
    relative_change: float
        relative change of the leading coefficient over the last doubling
    accepted: bool
        relative_change below the acceptance threshold
    """

    cutoffs: List[int]
    fits: List[FitResult] = field(default_factory=list)
    relative_change: float = math.inf
    accepted: bool = False

    @property
    def final(self) -> FitResult:
        """Fit at the largest cutoff"""
        return self.fits[-1]


def continuum_fit(
    builder: Callable[[int], OperatorPair],
    flavor: Union[Flavor, str],
    betas: Sequence[float],
    n: int,
    cutoffs: Sequence[int] = (32, 64, 128),
    num_terms: int = 2,
    include_global: bool = False,
    tolerance: float = 0.005,
) -> ContinuumFit:
    """
    Fit the small-beta expansion at successive cutoffs

    The expansion describes the untruncated operators, so a fit is only
    accepted once the leading coefficient is stable under doubling the cutoff.

    Parameters
    ----------
    builder: Callable[[int], OperatorPair]
        cutoff -> pair
    flavor: Flavor or str
    betas: Sequence[float]
    n: int
    cutoffs: Sequence[int], default (32, 64, 128)
    num_terms: int, default 2
    include_global: bool, default False
    tolerance: float, default 0.005
        accepted relative change of the leading coefficient

    Returns
    -------
    ContinuumFit
    """
    flavor = Flavor(flavor)
    result = ContinuumFit(cutoffs=list(cutoffs))
    for cutoff in cutoffs:
        sweep = run_sweep(builder(cutoff), betas, flavor)
        result.fits.append(fit_leading(sweep, n, num_terms, include_global))

    if len(result.fits) >= 2:
        last = result.fits[-1].coefficient(-n)
        previous = result.fits[-2].coefficient(-n)
        result.relative_change = abs(last - previous) / max(abs(last), 1e-300)
        result.accepted = result.relative_change < tolerance
    if not result.accepted:
        logger.warning(
            "continuum fit not stable: leading coefficient changed by %.3e over the last doubling",
            result.relative_change,
        )
    return result

"""
Adaptive quadrature on (0, inf), on the quadrant (0, inf)^2, and modified Mellin transforms

Everything wraps ``scipy.integrate.quad`` (QUADPACK): finite panels use QAGS
(or QAWS when an algebraic endpoint exponent is declared) and the tail uses
QAGI, which maps (a, inf) onto (0, 1] and subdivides adaptively with
Gauss-Kronrod error estimates. Evaluation is sequential, so results are
bit-reproducible for fixed inputs.

The modified Mellin transform of an f-type function is

    f_hat(q) = 1/Gamma(-q) int_0^inf t^{-q-1} t^mu f(t) dt

and is continued to Re q < N by integrating by parts N times:

    f_hat(q) = 1/Gamma(-q+N) int_0^inf t^{-q-1+N} (-d/dt)^N [t^mu f(t)] dt

For an h-type function (regular at infinity, flat at zero) the transform
h_hat(q) = 1/Gamma(-q) int t^{q-1+nu} h(t) dt becomes an f-type transform
after the substitution x = 1/t, with profile x^{-nu} h(1/x). Both kinds are
therefore evaluated from a *profile* P(u) that is smooth at u = 0.
"""

import logging
import math
import warnings
from dataclasses import dataclass, field
from enum import Enum
from functools import lru_cache
from typing import Callable, Dict, Mapping, Optional, Sequence, Tuple

import numpy as np
from scipy import integrate, special

from .errors import AccuracyError, DomainError


logger = logging.getLogger(__name__)


@dataclass(frozen=True)
class QuadratureResult:
    """
    Result of a numerical integral

    Parameters
    ----------
    value: float
        the integral
    error_estimate: float
        QUADPACK's absolute error estimate (summed over panels)
    evaluations: int
        number of integrand evaluations
    """

    value: float
    error_estimate: float
    evaluations: int

    def __post_init__(self):
        """Validate the error estimate"""
        if self.error_estimate < 0:
            raise DomainError(f"error_estimate must be >= 0; got {self.error_estimate}")

    def __float__(self) -> float:
        """The integral value"""
        return float(self.value)


@dataclass(frozen=True)
class QuadratureControl:
    """
    Tolerance pair and subdivision limit for adaptive quadrature

    Parameters
    ----------
    abs_tol: float, default 1e-12
    rel_tol: float, default 1e-10
    limit: int, default 200
        maximum number of subintervals per QUADPACK call
    """

    abs_tol: float = 1e-12
    rel_tol: float = 1e-10
    limit: int = 200

    def __post_init__(self):
        """Validate the control values"""
        if not (self.abs_tol > 0 and self.rel_tol > 0):
            raise DomainError(
                f"quadrature tolerances must be positive; got abs_tol={self.abs_tol}, "
                f"rel_tol={self.rel_tol}"
            )
        if int(self.limit) != self.limit or self.limit < 1:
            raise DomainError(f"limit must be a positive integer; got {self.limit}")

    def tighter(self, factor: float = 10.0) -> "QuadratureControl":
        """A control with both tolerances divided by `factor`"""
        return QuadratureControl(self.abs_tol / factor, self.rel_tol / factor, self.limit)

    def tolerance(self, value: float) -> float:
        """Accepted absolute error for a result of size `value`"""
        return max(self.abs_tol, self.rel_tol * abs(value))


DEFAULT_QUADRATURE_CONTROL = QuadratureControl()
DEFAULT_MELLIN_CONTROL = QuadratureControl(abs_tol=1e-13, rel_tol=1e-11)

# accept QUADPACK's roundoff warnings when the estimate is still this close to target
_ROUNDOFF_SLACK = 10.0


def _quad(
    func: Callable[[float], float], a: float, b: float, ctl: QuadratureControl, **kwargs
) -> QuadratureResult:
    """One QUADPACK call, translating failure into AccuracyError"""
    with warnings.catch_warnings():
        warnings.simplefilter("ignore", integrate.IntegrationWarning)
        out = integrate.quad(
            func,
            a,
            b,
            epsabs=ctl.abs_tol,
            epsrel=ctl.rel_tol,
            limit=ctl.limit,
            full_output=1,
            **kwargs,
        )
    value, error, info = float(out[0]), float(out[1]), out[2]
    result = QuadratureResult(value, error, int(info["neval"]))

    if len(out) > 3:
        if not np.isfinite(value) or error > _ROUNDOFF_SLACK * ctl.tolerance(value):
            raise AccuracyError(
                f"quadrature on ({a}, {b}) failed: {out[3]}",
                value=value,
                error_estimate=error,
            )
        logger.debug("quadrature on (%g, %g) accepted despite: %s", a, b, out[3])
    return result


def _combine(results: Sequence[QuadratureResult]) -> QuadratureResult:
    return QuadratureResult(
        float(sum(r.value for r in results)),
        float(sum(r.error_estimate for r in results)),
        int(sum(r.evaluations for r in results)),
    )


def integrate_finite(
    func: Callable[[float], float],
    a: float,
    b: float,
    ctl: QuadratureControl = DEFAULT_QUADRATURE_CONTROL,
) -> QuadratureResult:
    """
    Integrate `func` over the finite interval (a, b)

    Parameters
    ----------
    func: Callable[[float], float]
    a, b: float
        finite endpoints
    ctl: QuadratureControl

    Returns
    -------
    QuadratureResult
    """
    return _quad(func, a, b, ctl)


def integrate_semi_infinite(
    func: Callable[[float], float],
    ctl: QuadratureControl = DEFAULT_QUADRATURE_CONTROL,
    *,
    scale: float = 1.0,
    left_exponent: Optional[float] = None,
) -> QuadratureResult:
    """
    Integrate `func` over (0, inf)

    The interval is split at `scale`. The panel (0, scale) uses QAGS, or QAWS
    with weight t^a when an endpoint exponent a in (-1, 0) is declared; the
    tail (scale, inf) uses QAGI.

    Parameters
    ----------
    func: Callable[[float], float]
        integrand, finite on (0, inf)
    ctl: QuadratureControl, default DEFAULT_QUADRATURE_CONTROL
    scale: float, default 1.0
        split point; put it near where the integrand changes character
    left_exponent: float, optional
        hint that func(t) ~ t^a as t -> 0

    Returns
    -------
    QuadratureResult

    Raises
    ------
    AccuracyError
        QUADPACK did not converge; the exception carries the best value
    """
    if not scale > 0:
        raise DomainError(f"scale must be positive; got {scale}")

    if left_exponent is not None and -1.0 < left_exponent < 0.0:
        alpha = float(left_exponent)
        head = _quad(
            lambda t: func(t) * t**-alpha, 0.0, scale, ctl, weight="alg", wvar=(alpha, 0.0)
        )
    else:
        head = _quad(func, 0.0, scale, ctl)
    tail = _quad(func, scale, np.inf, ctl)
    return _combine([head, tail])


def integrate_quadrant(
    func: Callable[[float, float], float],
    ctl: QuadratureControl = DEFAULT_QUADRATURE_CONTROL,
    *,
    scale: float = 1.0,
) -> QuadratureResult:
    """
    Integrate `func(t, s)` over (0, inf)^2 by iterated semi-infinite quadrature

    The inner integral over s runs with tolerances ten times tighter than the
    outer one. The reported error is the outer estimate plus the largest inner
    estimate.

    Parameters
    ----------
    func: Callable[[float, float], float]
    ctl: QuadratureControl, default DEFAULT_QUADRATURE_CONTROL
    scale: float, default 1.0
        split point used in both directions

    Returns
    -------
    QuadratureResult
    """
    inner_ctl = ctl.tighter()
    inner_errors = []
    inner_evaluations = []

    def outer(t: float) -> float:
        inner = integrate_semi_infinite(lambda s: func(t, s), inner_ctl, scale=scale)
        inner_errors.append(inner.error_estimate)
        inner_evaluations.append(inner.evaluations)
        return inner.value

    result = integrate_semi_infinite(outer, ctl, scale=scale)
    return QuadratureResult(
        result.value,
        result.error_estimate + (max(inner_errors) if inner_errors else 0.0),
        int(sum(inner_evaluations)),
    )


class MellinKind(str, Enum):
    """f-type transforms are regular at t = 0, h-type transforms at t = inf"""

    F = "f"
    H = "h"


@lru_cache(maxsize=None)
def _difference_weights(order: int) -> Tuple[np.ndarray, np.ndarray]:
    """Central stencil offsets and weights for the order-th derivative, 4th-order accurate"""
    radius = (order + 1) // 2 + 1
    offsets = np.arange(-radius, radius + 1, dtype=float)
    vander = np.vander(offsets, increasing=True).T
    rhs = np.zeros(len(offsets))
    rhs[order] = math.factorial(order)
    return offsets, np.linalg.solve(vander, rhs)


# relative step per derivative order; the stencil stays inside (0, inf)
_DIFFERENCE_STEPS = {1: 1e-3, 2: 4e-3, 3: 1e-2, 4: 2e-2}


def minus_derivative(profile: Callable[[float], float], order: int, u: float) -> float:
    """
    (-d/du)^order profile(u) by central finite differences with step proportional to u

    Parameters
    ----------
    profile: Callable[[float], float]
    order: int
        derivative order >= 1
    u: float
        positive evaluation point

    Returns
    -------
    float
    """
    offsets, weights = _difference_weights(order)
    step = _DIFFERENCE_STEPS.get(order, 2e-2) * u
    samples = np.array([profile(u + o * step) for o in offsets])
    return float((-1) ** order * np.dot(weights, samples) / step**order)


@dataclass(frozen=True)
class MellinTransform:
    """
    A modified Mellin transform, continued to the left of `parts_order` or further

    Parameters
    ----------
    profile: Callable[[float], float]
        P(u) = u^offset f(u) for f-type, x^{-offset} h(1/x) for h-type;
        must be smooth at u = 0 and decay fast at infinity
    offset: float
        the exponent shift (mu for f-type, nu for h-type)
    kind: MellinKind, default MellinKind.F
    parts_order: int, default 0
        minimum number of integrations by parts; more are applied automatically
        when a point q >= parts_order is requested
    derivatives: Mapping[int, Callable[[float], float]], optional
        exact (-d/du)^N P for the orders the caller knows; others use
        finite differences
    closed_form: Callable[[float], float], optional
        exact q -> value, bypassing quadrature
    closed_form_derivative: Callable[[float], float], optional
        exact q -> d value / dq
    ctl: QuadratureControl
        tolerances of the defining integral
    scale: float, default 1.0
        quadrature split point in u
    """

    profile: Callable[[float], float]
    offset: float
    kind: MellinKind = MellinKind.F
    parts_order: int = 0
    derivatives: Mapping[int, Callable[[float], float]] = field(default_factory=dict)
    closed_form: Optional[Callable[[float], float]] = None
    closed_form_derivative: Optional[Callable[[float], float]] = None
    ctl: QuadratureControl = DEFAULT_MELLIN_CONTROL
    scale: float = 1.0

    @classmethod
    def from_function(
        cls,
        func: Callable[[float], float],
        offset: float,
        kind: MellinKind = MellinKind.F,
        **kwargs,
    ) -> "MellinTransform":
        """
        Build the transform of a plain function f (or h)

        Parameters
        ----------
        func: Callable[[float], float]
            f(t) for f-type, h(t) for h-type
        offset: float
        kind: MellinKind
        **kwargs
            forwarded to the constructor

        Returns
        -------
        MellinTransform
        """
        kind = MellinKind(kind)
        if kind is MellinKind.F:
            profile = lambda u: u**offset * func(u)  # noqa: E731
        else:
            profile = lambda x: x**-offset * func(1.0 / x)  # noqa: E731
        return cls(profile=profile, offset=offset, kind=kind, **kwargs)

    def order_for(self, q: float) -> int:
        """Number of integrations by parts used at q"""
        needed = int(math.floor(q)) + 1 if q >= 0 else 0
        return max(self.parts_order, needed)

    def _minus_derivative(self, order: int, u: float) -> float:
        if order == 0:
            return self.profile(u)
        if order in self.derivatives:
            return self.derivatives[order](u)
        return minus_derivative(self.profile, order, u)

    def evaluate(self, q: float, parts_order: Optional[int] = None) -> float:
        """
        The transform at real q

        Parameters
        ----------
        q: float
        parts_order: int, optional
            force a specific number of integrations by parts; must exceed q

        Returns
        -------
        float
        """
        if self.closed_form is not None:
            return float(self.closed_form(q))

        n_parts = self.order_for(q) if parts_order is None else int(parts_order)
        if q >= n_parts:
            raise DomainError(f"q={q} needs more than {n_parts} integrations by parts")

        norm = float(special.rgamma(-q + n_parts))
        if norm == 0.0:
            return 0.0

        exponent = -q - 1.0 + n_parts
        result = integrate_semi_infinite(
            lambda u: u**exponent * self._minus_derivative(n_parts, u),
            self.ctl,
            scale=self.scale,
            left_exponent=exponent if exponent < 0 else None,
        )
        return norm * result.value

    __call__ = evaluate

    def derivative(self, k: float, step: float = 0.05, levels: int = 3) -> float:
        """
        dq of the transform at q = k

        Central differences in q at steps h, h/2, ... combined by Richardson
        extrapolation (error order 2 per level).

        Parameters
        ----------
        k: float
            usually a nonnegative integer
        step: float, default 0.05
        levels: int, default 3
            number of step halvings

        Returns
        -------
        float
        """
        if self.closed_form_derivative is not None:
            return float(self.closed_form_derivative(k))

        n_parts = max(self.order_for(k + step), self.order_for(k))
        estimates = []
        for level in range(levels):
            h = step / 2.0**level
            upper = self.evaluate(k + h, parts_order=n_parts)
            lower = self.evaluate(k - h, parts_order=n_parts)
            estimates.append((upper - lower) / (2.0 * h))
        return richardson_extrapolate(estimates, order=2)


def richardson_extrapolate(values: Sequence[float], order: int, ratio: float = 2.0) -> float:
    """
    Richardson extrapolation of a sequence computed at steps shrinking by `ratio`

    Parameters
    ----------
    values: Sequence[float]
        approximations, coarsest first
    order: int
        order of the leading error term; each level removes the next even power
    ratio: float, default 2.0

    Returns
    -------
    float
    """
    if len(values) < 1:
        raise DomainError("richardson_extrapolate needs at least one value")
    vals = [float(v) for v in values]
    for j in range(1, len(vals)):
        factor = ratio ** (order * j)
        for i in range(len(vals) - 1, j - 1, -1):
            vals[i] = (factor * vals[i] - vals[i - 1]) / (factor - 1.0)
    return vals[-1]


def mellin_hat(
    func: Callable[[float], float],
    offset: float,
    q: float,
    parts_order: int = 0,
    ctl: QuadratureControl = DEFAULT_MELLIN_CONTROL,
    *,
    kind: MellinKind = MellinKind.F,
    derivatives: Optional[Dict[int, Callable[[float], float]]] = None,
) -> float:
    """
    Modified Mellin transform of `func` at q with exactly `parts_order` integrations by parts

    Parameters
    ----------
    func: Callable[[float], float]
        f (f-type) or h (h-type)
    offset: float
        mu or nu
    q: float
        must be < parts_order
    parts_order: int, default 0
    ctl: QuadratureControl
    kind: MellinKind, default MellinKind.F
    derivatives: dict, optional
        exact (-d/du)^N of the profile, see MellinTransform

    Returns
    -------
    float

    Raises
    ------
    DomainError
        q >= parts_order
    """
    if q >= parts_order:
        raise DomainError(
            f"mellin_hat needs q < parts_order; got q={q}, parts_order={parts_order}"
        )
    transform = MellinTransform.from_function(
        func, offset, kind, parts_order=parts_order, derivatives=derivatives or {}, ctl=ctl
    )
    return transform.evaluate(q, parts_order=parts_order)


def mellin_hat_derivative(
    func: Callable[[float], float],
    offset: float,
    k: int,
    ctl: QuadratureControl = DEFAULT_MELLIN_CONTROL,
    *,
    kind: MellinKind = MellinKind.F,
    derivatives: Optional[Dict[int, Callable[[float], float]]] = None,
    step: float = 0.05,
    levels: int = 3,
) -> float:
    """
    dq of the modified Mellin transform at the integer q = k

    Parameters
    ----------
    func: Callable[[float], float]
    offset: float
    k: int
        nonnegative integer
    ctl: QuadratureControl
    kind: MellinKind, default MellinKind.F
    derivatives: dict, optional
    step: float, default 0.05
        first difference step in q
    levels: int, default 3
        1 gives a plain central difference, more levels add Richardson refinement

    Returns
    -------
    float
    """
    if k < 0:
        raise DomainError(f"mellin_hat_derivative needs k >= 0; got {k}")
    transform = MellinTransform.from_function(
        func, offset, kind, derivatives=derivatives or {}, ctl=ctl
    )
    return transform.derivative(k, step=step, levels=levels)

"""checks of the small-parameter expansions"""

import math
from typing import Callable, Sequence, Tuple

import numpy as np
from scipy import special

from ..asymptotics import (
    c0_coefficient_b,
    continuum_fit,
    d0_coefficient_f,
    exponential_f_transform,
    rational_h,
    rational_h_transform,
    residual_scaling,
)
from ..bogolyubov import Flavor, V_b, V_f, zeta
from ..spectral import OperatorPair, build_dirac_circle_pair, build_torus_pair
from .base import BaseCheck, CheckLevel, CheckOutcome


# small-beta samples for the continuum fits of the n = 1 scale pair
FIT_BETAS: Tuple[float, ...] = tuple(float(b) for b in np.geomspace(0.15, 0.6, 12))


def _scale_pair_builder(flavor: Flavor, a: float, b: float) -> Callable[[int], OperatorPair]:
    """cutoff -> torus pair (bose) or Dirac pair (fermi) with scales a, b on the circle"""
    if flavor is Flavor.BOSE:
        return lambda cutoff: build_torus_pair(1, a**2, b**2, cutoff=cutoff, m=1.0)
    return lambda cutoff: build_dirac_circle_pair(a, b, cutoff=cutoff, m=1.0)


class LeadingCoefficientChain(BaseCheck):
    """
    Momentum integral, heat-kernel integral and small-beta fit give one leading coefficient

    Runs for the bosonic chain (V_b, c_0, fit of B_b on the torus pair) and the
    fermionic one (V_f, d_0, fit of B_f on the Dirac pair).

    Attributes
    ----------
    issue : str
        Description of what a failure means
    """

    level = CheckLevel.FULL

    def __init__(
        self,
        a: float = 2.0,
        b: float = 1.0,
        cutoffs: Sequence[int] = (32, 64, 128),
        quadrature_tolerance: float = 1e-4,
        fit_tolerance: float = 0.01,
        timeout: float = 600.0,
    ):
        """
        Initialize the check

        Parameters
        ----------
        a, b: float, default 2, 1
            circle scales of the plus and minus operators
        cutoffs: Sequence[int], default (32, 64, 128)
            cutoffs of the continuum fit
        quadrature_tolerance: float, default 1e-4
            accepted relative gap between the two quadratures
        fit_tolerance: float, default 0.01
            accepted relative gap between the fit and the quadratures
        timeout: float, default 600
        """
        self.a = a
        self.b = b
        self.cutoffs = [int(c) for c in cutoffs]
        self.quadrature_tolerance = quadrature_tolerance
        self.fit_tolerance = fit_tolerance
        self.timeout = timeout
        self.issue = "the leading small-beta coefficient is not consistent across its three routes"
        self._description = "V_b / c_0 / fit and V_f / d_0 / fit on the n=1 scale pair"

    def _check(self) -> CheckOutcome:
        worst, details = 0.0, []
        for flavor in Flavor:
            builder = _scale_pair_builder(flavor, self.a, self.b)
            geometry = builder(self.cutoffs[0]).geometry
            if flavor is Flavor.BOSE:
                momentum, kernel = V_b(geometry), c0_coefficient_b(geometry)
            else:
                momentum, kernel = V_f(geometry), d0_coefficient_f(geometry)
            fit = continuum_fit(
                builder, flavor, FIT_BETAS, 1, self.cutoffs, num_terms=3, include_global=True
            )
            fitted = fit.final.coefficient(-1.0)

            quad_gap = abs(momentum - kernel) / abs(momentum)
            fit_gap = max(abs(fitted - momentum), abs(fitted - kernel)) / abs(momentum)
            # both gaps are expressed in units of their tolerance
            worst = max(
                worst,
                quad_gap / self.quadrature_tolerance,
                fit_gap / self.fit_tolerance,
                0.0 if fit.accepted else math.inf,
            )
            details.append(
                f"{flavor.value}: V={momentum:.8g}, kernel={kernel:.8g}, fit={fitted:.6g}"
                f" (cutoff change {fit.relative_change:.2e})"
            )
        return CheckOutcome.below(worst, 1.0, "; ".join(details))


class LemmaEngineScaling(BaseCheck):
    """
    Remainders of truncated Mellin expansions shrink at the predicted rate

    f(t) = t^{-mu} e^{-t} is paired with h(t) = e^{-1/t} (1 + t)^{-nu}; the
    remainder after K orders is compared at eps and eps/2.

    Attributes
    ----------
    issue : str
        Description of what a failure means
    """

    def __init__(
        self,
        configurations: Sequence[Sequence[float]] = ((0.0, 1.5), (0.0, 1.0), (-1.0, 1.0)),
        K: int = 1,
        eps: float = 1e-3,
        tolerance: float = 0.1,
        timeout: float = 120.0,
    ):
        """
        Initialize the check

        Parameters
        ----------
        configurations: Sequence[(mu, nu)]
            default covers a noninteger, a positive-integer and a
            nonpositive-integer mu + nu
        K: int, default 1
        eps: float, default 1e-3
        tolerance: float, default 0.1
            accepted relative deviation of the measured ratio
        timeout: float, default 120
        """
        self.configurations = [(float(mu), float(nu)) for mu, nu in configurations]
        self.K = K
        self.eps = eps
        self.tolerance = tolerance
        self.timeout = timeout
        self.issue = "the Mellin expansion engine leaves a remainder of the wrong order"
        self._description = "remainder scaling of lemma_expand on analytic test pairs"

    def _check(self) -> CheckOutcome:
        worst, where = 0.0, ""
        for mu, nu in self.configurations:
            scaling = residual_scaling(
                lambda t, mu=mu: t**-mu * math.exp(-t) if t > 0 else 0.0,
                rational_h(nu),
                exponential_f_transform(mu),
                rational_h_transform(nu),
                self.K,
                self.eps,
            )
            deviation = scaling.relative_deviation
            if deviation > worst or not math.isfinite(deviation):
                worst = deviation
                where = (
                    f"mu={mu}, nu={nu}: ratio {scaling.measured_ratio:.5g}"
                    f" vs {scaling.predicted_ratio:.5g}"
                )
        return CheckOutcome.below(worst, self.tolerance, f"worst: {where}")


class ZetaPole(BaseCheck):
    """
    The residue of the continuum-regularized zeta function at s = n is c_0

    Attributes
    ----------
    issue : str
        Description of what a failure means
    """

    level = CheckLevel.FULL

    def __init__(
        self,
        a: float = 2.0,
        b: float = 1.0,
        cutoffs: Sequence[int] = (32, 64, 128),
        beta_split: float = 0.3,
        s_points: Sequence[float] = (1.05, 1.1),
        tolerance: float = 0.05,
        timeout: float = 300.0,
    ):
        """
        Initialize the check

        Parameters
        ----------
        a, b: float, default 2, 1
        cutoffs: Sequence[int], default (32, 64, 128)
            the pair at the last cutoff is integrated
        beta_split: float, default 0.3
            below it the fitted expansion replaces the truncated invariant
        s_points: Sequence[float], default (1.05, 1.1)
            (s_1, s_2) with s_2 - 1 = 2 (s_1 - 1) for the linear extrapolation
        tolerance: float, default 0.05
        timeout: float, default 300
        """
        self.a = a
        self.b = b
        self.cutoffs = [int(c) for c in cutoffs]
        self.beta_split = beta_split
        self.s_points = [float(s) for s in s_points]
        self.tolerance = tolerance
        self.timeout = timeout
        self.issue = "the zeta function pole does not carry the leading coefficient"
        self._description = "(s - 1) Gamma(s) Z_b(s) -> c_0 as s -> 1 on the n=1 torus pair"

    def _check(self) -> CheckOutcome:
        builder = _scale_pair_builder(Flavor.BOSE, self.a, self.b)
        fit = continuum_fit(
            builder, Flavor.BOSE, FIT_BETAS, 1, self.cutoffs, num_terms=3, include_global=True
        )
        pair = builder(self.cutoffs[-1])
        c0 = c0_coefficient_b(pair.geometry)

        def residue(s: float) -> float:
            value = zeta(
                pair, Flavor.BOSE, s, expansion=fit.final.expansion, beta_split=self.beta_split
            )
            return (s - 1.0) * float(special.gamma(s)) * value

        near, far = self.s_points
        # linear extrapolation in s - 1 to s = 1
        weight = (far - 1.0) / (far - near)
        extrapolated = weight * residue(near) + (1.0 - weight) * residue(far)
        gap = abs(extrapolated - c0) / abs(c0)
        return CheckOutcome.below(
            gap, self.tolerance, f"extrapolated residue {extrapolated:.6g}, c_0 {c0:.6g}"
        )

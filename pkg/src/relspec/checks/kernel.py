"""checks of the kernel functions h and the generalized heat trace"""

import math
from typing import Sequence

import numpy as np

from ..quadrature import QuadratureControl, integrate_semi_infinite
from ..specfun import KernelKind, eval_E, eval_h, h_dual_series, h_theta_series
from ..spectral import build_dirac_circle_pair
from ..traces import Xi_trace
from .base import BaseCheck, CheckOutcome


class KernelLaplaceIdentity(BaseCheck):
    """
    int_0^inf h(t) e^{-t x^2} dt reproduces E(x) for every kernel kind

    Attributes
    ----------
    issue : str
        Description of what a failure means
    """

    def __init__(
        self,
        xs: Sequence[float] = (0.5, 1.0, 2.0, 5.0),
        tolerance: float = 1e-8,
        timeout: float = 30.0,
    ):
        """
        Initialize the check

        Parameters
        ----------
        xs: Sequence[float], default (0.5, 1, 2, 5)
            arguments of E
        tolerance: float, default 1e-8
            largest accepted absolute error
        timeout: float, default 30
        """
        self.xs = [float(x) for x in xs]
        self.tolerance = tolerance
        self.timeout = timeout
        self.issue = "the Laplace transform of h does not reproduce the statistical function E"
        self._description = "Laplace identity between h and E for bose, fermi and zero kernels"

    def _check(self) -> CheckOutcome:
        ctl = QuadratureControl(abs_tol=1e-13, rel_tol=1e-12)
        worst, where = 0.0, ""
        for kind in KernelKind:
            for x in self.xs:
                result = integrate_semi_infinite(
                    lambda t, k=kind, x=x: eval_h(k, t) * math.exp(-t * x * x),
                    ctl,
                    scale=1.0 / (x * x),
                )
                error = abs(result.value - eval_E(kind, x))
                if error > worst or not math.isfinite(error):
                    worst, where = error, f"{kind.value} at x={x}"
        return CheckOutcome.below(worst, self.tolerance, f"worst: {where}")


class DualRepresentationAgreement(BaseCheck):
    """
    The theta series and the dual series of h agree where both converge

    Attributes
    ----------
    issue : str
        Description of what a failure means
    """

    def __init__(
        self,
        t_min: float = 0.25,
        t_max: float = 4.0,
        num_points: int = 20,
        tolerance: float = 1e-10,
        zero_tolerance: float = 1e-13,
    ):
        """
        Initialize the check

        Parameters
        ----------
        t_min, t_max: float, default 0.25, 4
            range of the log-spaced comparison points
        num_points: int, default 20
        tolerance: float, default 1e-10
            accepted difference of the two representations of h_b and h_f
        zero_tolerance: float, default 1e-13
            accepted deviation of h_0 from (h_b + h_f) / 2
        """
        self.t_min = t_min
        self.t_max = t_max
        self.num_points = num_points
        self.tolerance = tolerance
        self.zero_tolerance = zero_tolerance
        self.issue = "the two representations of h disagree"
        self._description = "theta and dual series of h_b, h_f agree; h_0 is their mean"

    def _check(self) -> CheckOutcome:
        worst, where = 0.0, ""
        zero_worst = 0.0
        for t in np.geomspace(self.t_min, self.t_max, self.num_points):
            for kind in (KernelKind.BOSE, KernelKind.FERMI):
                gap = abs(h_theta_series(kind, t).value - h_dual_series(kind, t).value)
                if gap > worst:
                    worst, where = gap, f"h_{kind.value}({t:.4g})"
            mean = 0.5 * (eval_h(KernelKind.BOSE, t) + eval_h(KernelKind.FERMI, t))
            zero_worst = max(zero_worst, abs(eval_h(KernelKind.ZERO, t) - mean))

        if zero_worst > self.zero_tolerance:
            return CheckOutcome(
                False, zero_worst, self.zero_tolerance, "h_0 differs from (h_b + h_f)/2"
            )
        return CheckOutcome.below(worst, self.tolerance, f"worst: {where}")


class KernelLeadingAsymptotics(BaseCheck):
    """
    h_b and h_f follow their leading large-t power laws

    h_b(t) ~ (pi t)^{-1/2} and h_f(t) ~ t^{-3/2} / (8 sqrt(pi)).

    Attributes
    ----------
    issue : str
        Description of what a failure means
    """

    def __init__(self, t: float = 100.0, bose_band: float = 0.005, fermi_band: float = 0.01):
        """
        Initialize the check

        Parameters
        ----------
        t: float, default 100
        bose_band: float, default 0.005
            accepted relative deviation of h_b from its leading term
        fermi_band: float, default 0.01
            accepted relative deviation of h_f from its leading term
        """
        self.t = t
        self.bose_band = bose_band
        self.fermi_band = fermi_band
        self.issue = "h does not approach its leading large-t behaviour"
        self._description = "leading large-t power laws of h_b and h_f"

    def _check(self) -> CheckOutcome:
        t = self.t
        bose_ratio = eval_h(KernelKind.BOSE, t) * math.sqrt(math.pi * t)
        fermi_ratio = eval_h(KernelKind.FERMI, t) * 8.0 * math.sqrt(math.pi) * t**1.5
        bose_dev = abs(bose_ratio - 1.0) / self.bose_band
        fermi_dev = abs(fermi_ratio - 1.0) / self.fermi_band
        # both deviations are expressed in units of their band
        return CheckOutcome.below(
            max(bose_dev, fermi_dev),
            1.0,
            f"h_b ratio {bose_ratio:.6f}, h_f ratio {fermi_ratio:.6f}",
        )


class HeatEquationProperty(BaseCheck):
    """
    The generalized trace Xi(t, alpha) of a Dirac spectrum solves d_t Xi = d_alpha^2 Xi

    Attributes
    ----------
    issue : str
        Description of what a failure means
    """

    def __init__(
        self,
        ts: Sequence[float] = (0.5, 1.0),
        alphas: Sequence[float] = (0.0, 0.3),
        cutoff: int = 32,
        t_step: float = 1e-4,
        alpha_step: float = 5e-4,
        tolerance: float = 1e-6,
    ):
        """
        Initialize the check

        Parameters
        ----------
        ts, alphas: Sequence[float]
            evaluation points
        cutoff: int, default 32
            cutoff of the Dirac circle spectrum
        t_step, alpha_step: float
            central difference steps
        tolerance: float, default 1e-6
        """
        self.ts = [float(t) for t in ts]
        self.alphas = [float(a) for a in alphas]
        self.cutoff = cutoff
        self.t_step = t_step
        self.alpha_step = alpha_step
        self.tolerance = tolerance
        self.issue = "the generalized heat trace does not satisfy the heat equation"
        self._description = "d_t Xi = d_alpha^2 Xi by central differences"

    def _check(self) -> CheckOutcome:
        spectrum = build_dirac_circle_pair(1.0, 1.0, cutoff=self.cutoff).minus
        dt, da = self.t_step, self.alpha_step
        worst, where = 0.0, ""
        for t in self.ts:
            for alpha in self.alphas:
                d_t = (Xi_trace(spectrum, t + dt, alpha) - Xi_trace(spectrum, t - dt, alpha)) / (
                    2.0 * dt
                )
                d_aa = (
                    Xi_trace(spectrum, t, alpha + da)
                    - 2.0 * Xi_trace(spectrum, t, alpha)
                    + Xi_trace(spectrum, t, alpha - da)
                ) / da**2
                gap = abs(d_t - d_aa)
                if gap > worst:
                    worst, where = gap, f"t={t}, alpha={alpha}"
        return CheckOutcome.below(worst, self.tolerance, f"worst: {where}")

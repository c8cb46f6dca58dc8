"""checks of the invariants, the traces behind them and the overlap data"""

import itertools
import math
from typing import Sequence

import numpy as np

from ..bogolyubov import B_b_heat, B_b_sinh, B_b_spectral, B_f_heat, B_f_spectral
from ..specfun import KernelKind, eval_E
from ..spectral import (
    OperatorPair,
    OverlapMatrix,
    Spectrum,
    SpectrumKind,
    build_dirac_circle_pair,
    build_schrodinger_circle_pair,
    build_torus_pair,
    circle_laplace_spectrum,
    constant_shift_pair,
)
from ..traces import Phi, Psi, phi_dirac_shift, psi_constant_shift
from .base import BaseCheck, CheckLevel, CheckOutcome


class RouteAgreement(BaseCheck):
    """
    The spectral sums and the heat-trace integrals give the same invariants

    Attributes
    ----------
    issue : str
        Description of what a failure means
    """

    level = CheckLevel.FULL

    def __init__(
        self,
        betas: Sequence[float] = (0.5, 1.0, 2.0),
        cutoff: int = 64,
        tolerance: float = 1e-6,
        timeout: float = 600.0,
    ):
        """
        Initialize the check

        Parameters
        ----------
        betas: Sequence[float], default (0.5, 1, 2)
        cutoff: int, default 64
        tolerance: float, default 1e-6
            accepted relative gap between the routes
        timeout: float, default 600
        """
        self.betas = [float(b) for b in betas]
        self.cutoff = cutoff
        self.tolerance = tolerance
        self.timeout = timeout
        self.issue = "spectral and heat-trace routes disagree"
        self._description = "B_b on the torus pair and B_f on the Dirac pair by both routes"

    def _check(self) -> CheckOutcome:
        torus = build_torus_pair(1, 4.0, 1.0, cutoff=self.cutoff, m=1.0)
        dirac = build_dirac_circle_pair(2.0, 1.0, cutoff=self.cutoff, m=1.0)
        worst, where = 0.0, ""
        for beta in self.betas:
            for label, spectral, heat in (
                ("B_b", B_b_spectral(torus, beta), B_b_heat(torus, beta).value),
                ("B_f", B_f_spectral(dirac, beta), B_f_heat(dirac, beta).value),
            ):
                gap = abs(spectral - heat) / abs(spectral)
                if gap > worst or not math.isfinite(gap):
                    worst, where = gap, f"{label} at beta={beta}"
        return CheckOutcome.below(worst, self.tolerance, f"worst: {where}")


class EqualOperatorsVanish(BaseCheck):
    """
    Both invariants vanish when the two operators coincide

    Attributes
    ----------
    issue : str
        Description of what a failure means
    """

    def __init__(
        self,
        betas: Sequence[float] = (0.1, 0.5, 1.0, 2.0, 5.0),
        cutoff: int = 64,
        tolerance: float = 1e-14,
    ):
        """
        Initialize the check

        Parameters
        ----------
        betas: Sequence[float]
        cutoff: int, default 64
        tolerance: float, default 1e-14
            accepted |B| relative to the size of its diagonal terms
        """
        self.betas = [float(b) for b in betas]
        self.cutoff = cutoff
        self.tolerance = tolerance
        self.issue = "an invariant of two equal operators is not zero"
        self._description = "B_b = B_f = 0 for equal operators"

    def _check(self) -> CheckOutcome:
        torus = build_torus_pair(1, 1.0, 1.0, cutoff=self.cutoff)
        dirac = build_dirac_circle_pair(1.0, 1.0, cutoff=self.cutoff)
        worst, where = 0.0, ""
        for beta in self.betas:
            bose_scale = 2.0 * np.sum(eval_E(KernelKind.BOSE, 2.0 * beta * torus.omega_plus))
            w = dirac.omega_plus
            fermi_scale = 2.0 * beta**2 * np.sum((w * eval_E(KernelKind.ZERO, beta * w)) ** 2)
            for label, value, scale in (
                ("B_b", B_b_spectral(torus, beta), bose_scale),
                ("B_f", B_f_spectral(dirac, beta), fermi_scale),
            ):
                relative = abs(value) / scale
                if relative > worst:
                    worst, where = relative, f"{label} at beta={beta}"
        return CheckOutcome.below(worst, self.tolerance, f"worst: {where}")


class ConstantShiftOracle(BaseCheck):
    """
    Spectral Psi and Phi match their closed forms for shifted pairs

    Attributes
    ----------
    issue : str
        Description of what a failure means
    """

    def __init__(
        self,
        times: Sequence[float] = (0.05, 0.2, 0.5, 1.0, 3.0),
        M_sq: float = 1.5,
        cutoff: int = 32,
        tolerance: float = 1e-10,
    ):
        """
        Initialize the check

        Parameters
        ----------
        times: Sequence[float]
            the (t, s) grid is times x times
        M_sq: float, default 1.5
            squared shift
        cutoff: int, default 32
        tolerance: float, default 1e-10
            accepted error relative to max(1, |closed form|)
        """
        self.times = [float(t) for t in times]
        self.M_sq = M_sq
        self.cutoff = cutoff
        self.tolerance = tolerance
        self.issue = "relative heat traces of a shifted pair do not match their closed forms"
        self._description = "Psi for H + M^2 and Phi for an anticommuting Dirac shift"

    def _check(self) -> CheckOutcome:
        base = circle_laplace_spectrum(self.cutoff)
        shifted = constant_shift_pair(base, self.M_sq)
        dirac = build_dirac_circle_pair(1.0, 1.0, shift=math.sqrt(self.M_sq), cutoff=self.cutoff)
        worst, where = 0.0, ""
        for t, s in itertools.product(self.times, repeat=2):
            for label, value, closed in (
                ("Psi", Psi(shifted, t, s), psi_constant_shift(base, self.M_sq, t, s)),
                ("Phi", Phi(dirac, t, s), phi_dirac_shift(dirac.minus, self.M_sq, t, s)),
            ):
                error = abs(value - closed) / max(1.0, abs(closed))
                if error > worst:
                    worst, where = error, f"{label}({t}, {s})"
        return CheckOutcome.below(worst, self.tolerance, f"worst: {where}")


def one_mode_pair(
    omega_minus: float = 1.0, omega_plus: float = 2.0, m: float = 1.0
) -> OperatorPair:
    """A pair with a single mode per side and frequencies omega_minus, omega_plus"""
    plus = Spectrum(SpectrumKind.LAPLACE, [omega_plus**2 - m**2], 1, label="one mode plus")
    minus = Spectrum(SpectrumKind.LAPLACE, [omega_minus**2 - m**2], 1, label="one mode minus")
    return OperatorPair(plus, minus, OverlapMatrix.identity(1), m)


class DiagonalEquivalence(BaseCheck):
    """
    The E-function form and the sinh^2 form of B_b agree on a single mode

    Attributes
    ----------
    issue : str
        Description of what a failure means
    """

    def __init__(
        self,
        omega_minus: float = 1.0,
        omega_plus: float = 2.0,
        beta: float = 1.0,
        tolerance: float = 1e-14,
    ):
        """
        Initialize the check

        Parameters
        ----------
        omega_minus, omega_plus: float, default 1, 2
        beta: float, default 1
        tolerance: float, default 1e-14
        """
        self.omega_minus = omega_minus
        self.omega_plus = omega_plus
        self.beta = beta
        self.tolerance = tolerance
        self.issue = "the two closed forms of the bosonic invariant disagree"
        self._description = "E-function and sinh^2 forms of B_b on one mode"

    def _check(self) -> CheckOutcome:
        pair = one_mode_pair(self.omega_minus, self.omega_plus)
        e_form = B_b_spectral(pair, self.beta)
        sinh_form = B_b_sinh(pair, self.beta)
        detail = f"B_b = {e_form:.15g} (sinh^2: {sinh_form:.15g})"
        return CheckOutcome.below(abs(e_form - sinh_form), self.tolerance, detail)


class OverlapCompleteness(BaseCheck):
    """
    Interior rows of a Schrodinger overlap matrix sum to one

    Attributes
    ----------
    issue : str
        Description of what a failure means
    """

    def __init__(self, cutoff: int = 32, interior: int = 16, tolerance: float = 1e-8):
        """
        Initialize the check

        Parameters
        ----------
        cutoff: int, default 32
        interior: int, default 16
            rows whose free momentum satisfies |k| <= interior are checked
        tolerance: float, default 1e-8
        """
        self.cutoff = cutoff
        self.interior = interior
        self.tolerance = tolerance
        self.issue = "overlap matrix rows are not complete away from the cutoff"
        self._description = "row sums of the overlap of -d^2 + 2 cos x against -d^2"

    def _check(self) -> CheckOutcome:
        pair = build_schrodinger_circle_pair([0.0, 1.0], [0.0], cutoff=self.cutoff)
        rows = pair.overlap.row_sums()
        interior = pair.minus.values <= self.interior**2 + 1e-9
        worst = float(np.max(np.abs(rows[interior] - 1.0)))
        return CheckOutcome.below(worst, self.tolerance, f"{int(interior.sum())} interior rows")

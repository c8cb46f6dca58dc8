"""verification check classes"""

from .base import BaseCheck, CheckError, CheckLevel, CheckOutcome, CheckResult

from .asymptotic import LeadingCoefficientChain, LemmaEngineScaling, ZetaPole
from .invariants import (
    ConstantShiftOracle,
    DiagonalEquivalence,
    EqualOperatorsVanish,
    OverlapCompleteness,
    RouteAgreement,
)
from .kernel import (
    DualRepresentationAgreement,
    HeatEquationProperty,
    KernelLaplaceIdentity,
    KernelLeadingAsymptotics,
)


def get_check(name, *args, **kwargs):
    """Get a verification check by name"""
    try:
        check_class = globals()[name]
    except KeyError as e:
        raise ValueError(f"Unknown verification check: {name}") from e
    if not (isinstance(check_class, type) and issubclass(check_class, BaseCheck)):
        raise ValueError(f"Unknown verification check: {name}")
    return check_class(*args, **kwargs)


# acceptance checks in run order
ALL_CHECKS = (
    KernelLaplaceIdentity,
    DualRepresentationAgreement,
    KernelLeadingAsymptotics,
    RouteAgreement,
    EqualOperatorsVanish,
    ConstantShiftOracle,
    DiagonalEquivalence,
    LeadingCoefficientChain,
    LemmaEngineScaling,
    OverlapCompleteness,
    HeatEquationProperty,
    ZetaPole,
)


__all__ = [
    "BaseCheck",
    "CheckError",
    "CheckLevel",
    "CheckOutcome",
    "CheckResult",
    "KernelLaplaceIdentity",
    "DualRepresentationAgreement",
    "KernelLeadingAsymptotics",
    "HeatEquationProperty",
    "RouteAgreement",
    "EqualOperatorsVanish",
    "ConstantShiftOracle",
    "DiagonalEquivalence",
    "OverlapCompleteness",
    "LeadingCoefficientChain",
    "LemmaEngineScaling",
    "ZetaPole",
    "ALL_CHECKS",
    "get_check",
]

"""base classes and functions for verification checks"""

import abc
import datetime
import hashlib
import inspect
import logging
import math
import warnings
from dataclasses import dataclass
from enum import Enum
from typing import Any, Dict, Optional

from func_timeout import FunctionTimedOut, func_timeout

from ..errors import AccuracyError, RelspecError


logger = logging.getLogger(__name__)

DEFAULT_ISSUE = "Unspecified failure flagged by {} check"


class CheckError(Exception):
    """
    Default exception to throw if there is an error raised with a check

    This should only be raised if there is an error that is caused by the check itself,
    for example a check declared without a description of what its failure means.
    """

    pass


class CheckLevel(str, Enum):
    """Which suite a check belongs to; quick checks also run in the full suite"""

    QUICK = "quick"
    FULL = "full"


@dataclass(frozen=True)
class CheckOutcome:
    """
    What a check measured

    Attributes
    ----------
    passed: bool
    measured: float
        the figure compared against the threshold (usually a max error)
    threshold: float
    detail: str
        free text, e.g. where the worst error occurred
    """

    passed: bool
    measured: float
    threshold: float
    detail: str = ""

    @classmethod
    def below(cls, measured: float, threshold: float, detail: str = "") -> "CheckOutcome":
        """Passed when `measured` is finite and at most `threshold`"""
        passed = bool(math.isfinite(measured) and measured <= threshold)
        return cls(passed, measured, threshold, detail)


@dataclass(frozen=True)
class CheckResult:
    """
    Result of running a check

    Attributes
    ----------
    name: str
    level: CheckLevel
    passed: bool
    measured: float
    threshold: float
    detail: str
    runtime: datetime.timedelta
    issue: str, optional
        the check's issue text when it failed
    """

    name: str
    level: CheckLevel
    passed: bool
    measured: float
    threshold: float
    detail: str
    runtime: datetime.timedelta
    issue: Optional[str] = None

    def to_json_dict(self) -> Dict[str, Any]:
        """Serializable form of the result"""
        return {
            "name": self.name,
            "level": self.level.value,
            "passed": self.passed,
            "measured": self.measured,
            "threshold": self.threshold,
            "detail": self.detail,
            "runtime_seconds": self.runtime.total_seconds(),
            "issue": self.issue,
        }


class PostInitMeta(abc.ABCMeta, type):
    """
    Enables a '__post_init__' hook that is called after '__init__'

    Also records the construction arguments on the instance as `_init_params`,
    so a check can be written to and rebuilt from a suite file.
    """

    def __call__(cls, *args, **kwargs):
        """Add post-init hook"""
        instance = super().__call__(*args, **kwargs)

        init_params = list(inspect.signature(cls.__init__).parameters.values())[1:]
        param_dict = {}
        for i, param in enumerate(init_params):
            if i < len(args):
                param_dict[param.name] = args[i]
            elif param.default is not param.empty:
                param_dict[param.name] = param.default
        param_dict.update(kwargs)

        if post := getattr(cls, "__post_init__", None):
            post(instance)

        instance._init_params = param_dict

        return instance


class BaseCheck(abc.ABC, metaclass=PostInitMeta):
    """
    The base abstract class for all verification checks

    A check computes one measured figure (an error, a ratio, a deviation),
    compares it against a threshold and reports a CheckResult. Checks never
    raise for a numerical failure: accuracy errors and timeouts become failed
    results.

    Attributes
    ----------
    level: CheckLevel, default CheckLevel.QUICK
    timeout: float, default 60
        seconds before the check is stopped and reported as failed
    issue: str
        what a failure of the check means
    """

    _init_params: Dict[str, Any]
    level: CheckLevel = CheckLevel.QUICK
    timeout: float = 60.0
    issue: str = DEFAULT_ISSUE.format(__name__)
    _description: Optional[str] = None

    def __post_init__(self):
        """Runs after __init__ finishes to check the class attributes are defined properly"""
        if not isinstance(self.issue, str):
            raise CheckError(
                f"checks require that the `issue` attribute is a str; not a {type(self.issue)}"
            )
        if self.issue == DEFAULT_ISSUE.format(__name__):
            warnings.warn(
                f"'issue' description for check {self.name} was unset; "
                f"using default issue description; to stop warning, set the 'issue' "
                f"attribute to a description of what a failure means",
                stacklevel=1,
            )
        if not (isinstance(self.timeout, (int, float)) and self.timeout > 0):
            raise CheckError(f"check timeout must be a positive number; got {self.timeout}")
        self.level = CheckLevel(self.level)

    @property
    def name(self) -> str:
        """Name of the check class"""
        return self.__class__.__name__

    @property
    def description(self) -> str:
        """Short description of what the check verifies"""
        return self._description if self._description is not None else "NA"

    def __str__(self) -> str:
        """Return the name of the check class as a str"""
        return self.name

    def __repr__(self) -> str:
        """Return the str representation of the check class"""
        return self.__str__()

    @abc.abstractmethod
    def _check(self) -> CheckOutcome:
        raise NotImplementedError

    def run(self) -> CheckResult:
        """
        Run the check under its timeout

        Returns
        -------
        CheckResult
        """
        _t0 = datetime.datetime.now()
        try:
            outcome = func_timeout(self.timeout, self._check)
        except FunctionTimedOut:
            outcome = CheckOutcome(False, math.nan, math.nan, f"timed out after {self.timeout} s")
        except AccuracyError as e:
            measured = e.error_estimate if e.error_estimate is not None else math.nan
            outcome = CheckOutcome(False, measured, math.nan, f"accuracy not reached: {e}")
        except RelspecError as e:
            outcome = CheckOutcome(False, math.nan, math.nan, f"{e.__class__.__name__}: {e}")
        runtime = datetime.datetime.now() - _t0

        logger.info(
            "check %s: %s (measured %.3e, threshold %.3e) in %s",
            self.name,
            "passed" if outcome.passed else "FAILED",
            outcome.measured,
            outcome.threshold,
            runtime,
        )
        return CheckResult(
            name=self.name,
            level=self.level,
            passed=outcome.passed,
            measured=outcome.measured,
            threshold=outcome.threshold,
            detail=outcome.detail,
            runtime=runtime,
            issue=None if outcome.passed else self.issue,
        )

    def to_json_dict(self) -> Dict[str, Any]:
        """
        Converts the check to a JSON serializable dictionary

        This is how verification suites save checks

        Returns
        -------
        dict[str, Any]
        """
        return {
            "name": self.__class__.__name__,
            "source_code_hash": hashlib.sha256(
                inspect.getsource(self.__class__).encode("utf-8")
            ).hexdigest(),
            "params": self._init_params,
        }

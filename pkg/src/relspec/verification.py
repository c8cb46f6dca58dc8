"""verification suites and their reports"""

import datetime
import hashlib
import inspect
import json
import logging
import os
import warnings
from typing import Any, Dict, List, Optional, Union

import numpy as np
import pandas as pd
import scipy

from relspec import __version__

from .checks import ALL_CHECKS, BaseCheck, CheckLevel, CheckResult, get_check


logger = logging.getLogger(__name__)


class VerificationSuiteError(Exception):
    """
    Exception to raise when a verification suite has an error

    Primary use case is for suite files that do not match the installed package
    """

    pass


def _versions() -> Dict[str, str]:
    return {"numpy": np.__version__, "scipy": scipy.__version__, "relspec": __version__}


def _source_hash(obj: Any) -> str:
    return hashlib.sha256(inspect.getsource(obj).encode("utf-8")).hexdigest()


class VerificationSuite:
    """
    An ordered list of checks run together

    Suites can be written to a JSON suite file and loaded back; loading checks
    that the package versions and the source of every check still match.
    """

    def __init__(
        self,
        checks: List[BaseCheck],
        name: Optional[str] = None,
        description: Optional[str] = None,
    ):
        """
        Initialize a verification suite

        Parameters
        ----------
        checks: list[BaseCheck]
            checks in the order they run
        name: str, optional
            rendered as "NA" when unset
        description: str, optional
            rendered as "NA" when unset
        """
        self.checks = list(checks)
        self._name = name
        self._description = description

    @property
    def name(self) -> str:
        """Return the suite name; will be NA if no name was provided"""
        return self._name if self._name is not None else "NA"

    @property
    def description(self) -> str:
        """Return the suite description; will be NA if no description was provided"""
        return self._description if self._description is not None else "NA"

    def __len__(self) -> int:
        """Number of checks"""
        return len(self.checks)

    def to_string(self) -> str:
        """Check names linked by ' -> '"""
        return " -> ".join(check.name for check in self.checks)

    @classmethod
    def default_suite(
        cls, level: Union[CheckLevel, str] = CheckLevel.QUICK
    ) -> "VerificationSuite":
        """
        The acceptance checks of a level

        The full suite contains every check; the quick suite only the quick ones.
        """
        level = CheckLevel(level)
        checks = [
            check_class()
            for check_class in ALL_CHECKS
            if level is CheckLevel.FULL or check_class.level is CheckLevel.QUICK
        ]
        return cls(checks, name=f"acceptance-{level.value}", description=f"{level.value} suite")

    def save_suite_file(self, path: Union[str, os.PathLike]):
        """
        Save the suite configuration to a JSON file

        Only the configuration is saved, never results.

        Parameters
        ----------
        path: os.PathLike
            directories must already exist
        """
        _suite_dict = {
            "suite_name": self._name,
            "suite_description": self._description,
            "suite_source_code_hash": _source_hash(self.__class__),
            "versions": _versions(),
            "num_checks": len(self.checks),
            "checks": {i: check.to_json_dict() for i, check in enumerate(self.checks)},
        }
        with open(path, "w") as f:
            json.dump(_suite_dict, f, indent=4)

    @classmethod
    def load(cls, path: Union[str, os.PathLike], safe: bool = True) -> "VerificationSuite":
        """
        Load a suite from a JSON suite file

        With `safe`, loading fails when the package versions differ from the
        ones that wrote the file, when the suite or any check source changed,
        or when a check is missing. With `safe=False` mismatches only warn.

        Parameters
        ----------
        path : os.PathLike
        safe: bool, default=True

        Returns
        -------
        VerificationSuite

        Raises
        ------
        VerificationSuiteError
        """
        with open(path, "r") as f:
            _suite_dict = json.load(f)
        _suite_name = _suite_dict["suite_name"]
        _name_str = f" {_suite_name}" if _suite_name is not None else ""

        problems = []
        for package, version in _versions().items():
            if _suite_dict["versions"].get(package) != version:
                problems.append(
                    f"{package} version {version} does not match the version "
                    f"{_suite_dict['versions'].get(package)} used to create the suite{_name_str}"
                )
        if _suite_dict["suite_source_code_hash"] != _source_hash(cls):
            problems.append(f"source code hash for suite{_name_str} does not match")

        num_checks = _suite_dict["num_checks"]
        loaded: List[Optional[BaseCheck]] = [None] * num_checks
        for order, check_data in _suite_dict["checks"].items():
            _order = int(order)
            if _order > num_checks - 1:
                raise VerificationSuiteError(
                    f"verification suite has {num_checks} checks but check "
                    f"{check_data['name']} is in position {order}"
                )
            try:
                _check = get_check(check_data["name"], **check_data["params"])
            except ValueError as e:
                raise VerificationSuiteError(
                    f"could not find verification check {check_data['name']}"
                ) from e
            except TypeError as e:
                raise VerificationSuiteError(
                    f"verification check {check_data['name']} got unexpected parameters"
                ) from e
            if check_data["source_code_hash"] != _source_hash(_check.__class__):
                problems.append(f"source code hash for check {check_data['name']} does not match")
            loaded[_order] = _check

        for i, _check in enumerate(loaded):
            if _check is None:
                raise VerificationSuiteError(
                    f"verification suite check at position {i} is missing"
                )

        if problems:
            if safe:
                raise VerificationSuiteError("; ".join(problems))
            warnings.warn("unsafe suite load: " + "; ".join(problems), stacklevel=2)

        return cls(loaded, name=_suite_name, description=_suite_dict["suite_description"])

    def run(self) -> "VerificationReport":
        """Run every check in order"""
        results = []
        for i, check in enumerate(self.checks):
            logger.info("running check %d/%d: %s", i + 1, len(self.checks), check.name)
            results.append(check.run())
        return VerificationReport(results, self)


class VerificationReport:
    """
    Results of a suite run

    Note: built by `VerificationSuite.run`, not by users.
    """

    def __init__(self, results: List[CheckResult], suite: VerificationSuite):
        """
        Initialize a VerificationReport

        Parameters
        ----------
        results: List[CheckResult]
            one per check of `suite`, in order
        suite: VerificationSuite
        """
        self.results = results
        self.suite = suite
        assert len(self.results) == len(self.suite.checks)

    @property
    def passed(self) -> bool:
        """True when every check passed"""
        return all(result.passed for result in self.results)

    @property
    def failures(self) -> List[CheckResult]:
        """The failed results"""
        return [result for result in self.results if not result.passed]

    @property
    def runtime(self) -> datetime.timedelta:
        """Summed runtime of all checks"""
        return sum((result.runtime for result in self.results), datetime.timedelta())

    def get_report_string(self) -> str:
        """
        Human readable report of the run

        Lists package versions, the suite and one line per check, followed by
        the issue text of every failure.

        Returns
        -------
        str
        """
        versions = ", ".join(f"{k} {v}" for k, v in _versions().items())
        lines = [
            "relspec verification report",
            f"Report generated on "
            f"{datetime.datetime.strftime(datetime.datetime.now(), '%H:%M:%S, %B %d, %Y')}",
            f"Versions: {versions}",
            f"Suite: {self.suite.name} ({self.suite.description})",
            "",
        ]
        for i, result in enumerate(self.results):
            status = "PASSED" if result.passed else "FAILED"
            lines.append(
                f"Check {i}: {result.name} [{result.level.value}]; {status}; "
                f"measured {result.measured:.3e} (threshold {result.threshold:.3e}); "
                f"{result.runtime.total_seconds():.2f} s"
            )
            if result.detail:
                lines.append(f"    {result.detail}")
        lines.append("")
        for result in self.failures:
            lines.append(f"FAILED {result.name}: {result.issue}")
        lines.append(
            f"{len(self.results) - len(self.failures)}/{len(self.results)} checks passed "
            f"in {self.runtime.total_seconds():.1f} s"
        )
        return "\n".join(lines) + "\n"

    def write_report(self, path: Union[str, os.PathLike]):
        """Save the report string to a file"""
        with open(path, "w") as f:
            f.write(self.get_report_string())

    def to_pandas(self) -> pd.DataFrame:
        """One row per check"""
        return pd.DataFrame(
            {
                "name": [r.name for r in self.results],
                "level": [r.level.value for r in self.results],
                "passed": [r.passed for r in self.results],
                "measured": [r.measured for r in self.results],
                "threshold": [r.threshold for r in self.results],
                "runtime_seconds": [r.runtime.total_seconds() for r in self.results],
                "detail": [r.detail for r in self.results],
                "issue": [r.issue if r.issue is not None else "PASSED" for r in self.results],
            }
        )

    def save_as_csv(self, path: Union[str, os.PathLike]):
        """Save `to_pandas` as CSV"""
        self.to_pandas().to_csv(path, index=False)

    def to_json_dict(self) -> Dict[str, Any]:
        """Machine-readable summary"""
        return {
            "suite": self.suite.name,
            "passed": self.passed,
            "versions": _versions(),
            "results": [result.to_json_dict() for result in self.results],
        }

    def save_as_json(self, path: Union[str, os.PathLike]):
        """Save `to_json_dict` as JSON"""
        with open(path, "w") as f:
            json.dump(self.to_json_dict(), f, indent=4)

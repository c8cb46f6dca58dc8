"""test verification suites and reports"""

import json

import pandas as pd
import pytest

from relspec.checks import DiagonalEquivalence, KernelLeadingAsymptotics, ZetaPole
from relspec.checks.base import CheckLevel
from relspec.verification import VerificationReport, VerificationSuite, VerificationSuiteError


@pytest.fixture
def suite():
    """Two cheap checks that pass"""
    return VerificationSuite(
        [DiagonalEquivalence(), KernelLeadingAsymptotics()], name="cheap", description="test"
    )


@pytest.fixture
def failing_suite():
    """A passing check followed by one that cannot pass"""
    return VerificationSuite([DiagonalEquivalence(), DiagonalEquivalence(tolerance=-1.0)])


@pytest.fixture
def suite_file(tmp_path, suite):
    """The cheap suite written to disk"""
    path = tmp_path / "suite.json"
    suite.save_suite_file(path)
    return path


@pytest.mark.unit
class TestVerificationSuite:
    """unit tests for VerificationSuite"""

    def test_names(self, suite):
        """Test name, description and the check chain"""
        assert suite.name == "cheap"
        assert suite.description == "test"
        assert len(suite) == 2
        assert suite.to_string() == "DiagonalEquivalence -> KernelLeadingAsymptotics"

    def test_unnamed(self, failing_suite):
        """Test that an unnamed suite renders as NA"""
        assert failing_suite.name == "NA"
        assert failing_suite.description == "NA"

    def test_default_quick_suite(self):
        """Test that the quick suite holds only quick checks"""
        quick = VerificationSuite.default_suite("quick")
        assert quick.name == "acceptance-quick"
        assert all(check.level is CheckLevel.QUICK for check in quick.checks)
        assert "ZetaPole" not in quick.to_string()

    def test_default_full_suite(self):
        """Test that the full suite holds every check"""
        full = VerificationSuite.default_suite(CheckLevel.FULL)
        assert full.name == "acceptance-full"
        assert len(full) > len(VerificationSuite.default_suite())
        assert any(isinstance(check, ZetaPole) for check in full.checks)

    def test_save_suite_file(self, suite_file):
        """Test that only the configuration is saved"""
        data = json.loads(suite_file.read_text())
        assert data["num_checks"] == 2
        assert data["checks"]["0"]["name"] == "DiagonalEquivalence"
        assert data["checks"]["0"]["params"]["beta"] == 1.0
        assert "relspec" in data["versions"]

    def test_load(self, suite_file):
        """Test loading a saved suite"""
        loaded = VerificationSuite.load(suite_file)
        assert loaded.name == "cheap"
        assert loaded.to_string() == "DiagonalEquivalence -> KernelLeadingAsymptotics"

    def test_load_keeps_params(self, tmp_path):
        """Test that check parameters survive a save and load"""
        path = tmp_path / "suite.json"
        VerificationSuite([KernelLeadingAsymptotics(t=50.0)]).save_suite_file(path)
        assert VerificationSuite.load(path).checks[0].t == 50.0

    def test_version_mismatch(self, suite_file):
        """Test that a different package version blocks a safe load"""
        data = json.loads(suite_file.read_text())
        data["versions"]["relspec"] = "0.0.0"
        suite_file.write_text(json.dumps(data))
        with pytest.raises(VerificationSuiteError, match="relspec version"):
            VerificationSuite.load(suite_file)
        with pytest.warns(UserWarning, match="unsafe suite load"):
            VerificationSuite.load(suite_file, safe=False)

    def test_check_hash_mismatch(self, suite_file):
        """Test that a changed check source blocks a safe load"""
        data = json.loads(suite_file.read_text())
        data["checks"]["1"]["source_code_hash"] = "0" * 64
        suite_file.write_text(json.dumps(data))
        with pytest.raises(VerificationSuiteError, match="KernelLeadingAsymptotics"):
            VerificationSuite.load(suite_file)

    def test_unknown_check(self, suite_file):
        """Test that an unknown check cannot be loaded even unsafely"""
        data = json.loads(suite_file.read_text())
        data["checks"]["1"]["name"] = "NoSuchCheck"
        suite_file.write_text(json.dumps(data))
        with pytest.raises(VerificationSuiteError, match="could not find"):
            VerificationSuite.load(suite_file, safe=False)

    def test_missing_position(self, suite_file):
        """Test that a gap in the check order is an error"""
        data = json.loads(suite_file.read_text())
        del data["checks"]["0"]
        suite_file.write_text(json.dumps(data))
        with pytest.raises(VerificationSuiteError, match="position 0 is missing"):
            VerificationSuite.load(suite_file)

    def test_position_out_of_range(self, suite_file):
        """Test that a position past the check count is an error"""
        data = json.loads(suite_file.read_text())
        data["checks"]["5"] = data["checks"].pop("1")
        suite_file.write_text(json.dumps(data))
        with pytest.raises(VerificationSuiteError, match="in position 5"):
            VerificationSuite.load(suite_file)


@pytest.mark.unit
class TestVerificationReport:
    """unit tests for VerificationReport"""

    def test_passed(self, suite):
        """Test a report where every check passes"""
        report = suite.run()
        assert isinstance(report, VerificationReport)
        assert report.passed
        assert report.failures == []
        summary = f"2/2 checks passed in {report.runtime.total_seconds():.1f} s\n"
        assert report.get_report_string().endswith(summary)

    def test_failed(self, failing_suite):
        """Test that failures are listed with their issue"""
        report = failing_suite.run()
        assert not report.passed
        assert len(report.failures) == 1
        text = report.get_report_string()
        assert f"FAILED DiagonalEquivalence: {DiagonalEquivalence().issue}" in text
        assert "1/2 checks passed" in text

    def test_to_pandas(self, failing_suite):
        """Test the one-row-per-check table"""
        df = failing_suite.run().to_pandas()
        assert isinstance(df, pd.DataFrame)
        assert list(df.columns) == [
            "name",
            "level",
            "passed",
            "measured",
            "threshold",
            "runtime_seconds",
            "detail",
            "issue",
        ]
        assert df["issue"].iloc[0] == "PASSED"
        assert not df["passed"].iloc[1]

    def test_save(self, tmp_path, failing_suite):
        """Test the CSV, JSON and text outputs"""
        report = failing_suite.run()
        report.save_as_csv(tmp_path / "report.csv")
        report.save_as_json(tmp_path / "report.json")
        report.write_report(tmp_path / "report.txt")
        assert len(pd.read_csv(tmp_path / "report.csv")) == 2
        data = json.loads((tmp_path / "report.json").read_text())
        assert data["passed"] is False
        assert [r["passed"] for r in data["results"]] == [True, False]
        assert (tmp_path / "report.txt").read_text().startswith("relspec verification report")

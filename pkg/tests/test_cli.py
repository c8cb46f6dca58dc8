"""test the relspec command line"""

import json

import pandas as pd
import pytest

from relspec.checks import DiagonalEquivalence
from relspec.cli import EXIT_NUMERIC, EXIT_OK, EXIT_USAGE, main
from relspec.config import default_config
from relspec.verification import VerificationSuite


@pytest.fixture
def equal_config(tmp_path):
    """Config of a torus pair with equal metrics"""
    path = tmp_path / "equal.json"
    config = {
        "model": {"family": "torus", "n": 1, "g_plus": 1.0, "g_minus": 1.0, "cutoff": 8, "m": 1.0},
        "sweep": {"betas": [2.0, 0.5, 1.0]},
    }
    path.write_text(json.dumps(config))
    return path


@pytest.fixture
def dirac_config(tmp_path):
    """Config of a Dirac pair with an anticommuting shift 0.5"""
    path = tmp_path / "dirac.json"
    config = {
        "model": {
            "family": "dirac_circle",
            "scale_plus": 1.0,
            "scale_minus": 1.0,
            "shift": 0.5,
            "cutoff": 8,
            "m": 1.0,
        }
    }
    path.write_text(json.dumps(config))
    return path


@pytest.fixture
def equal_pair_file(tmp_path, equal_config):
    """Pair file written by 'relspec model'"""
    path = tmp_path / "pair.json"
    assert main(["model", "--config", str(equal_config), "--out", str(path)]) == EXIT_OK
    return path


@pytest.mark.unit
class TestMain:
    """Test the top level command"""

    def test_print_config(self, capsys):
        """Test that the defaults are printed as JSON"""
        assert main(["--print-config"]) == EXIT_OK
        assert json.loads(capsys.readouterr().out) == default_config()

    def test_no_command(self, capsys):
        """Test that a missing command is a usage error"""
        assert main([]) == EXIT_USAGE
        assert "usage" in capsys.readouterr().err

    def test_unknown_command(self):
        """Test that argparse errors become usage errors"""
        assert main(["plot"]) == EXIT_USAGE

    def test_help(self):
        """Test that --help exits cleanly"""
        assert main(["--help"]) == EXIT_OK


@pytest.mark.unit
class TestModel:
    """Test relspec model"""

    def test_writes_pair(self, tmp_path, equal_config, capsys):
        """Test that the pair file is written and validated"""
        out = tmp_path / "pair.json"
        assert main(["model", "--config", str(equal_config), "--out", str(out)]) == EXIT_OK
        assert json.loads(out.read_text())
        assert "PASS" in capsys.readouterr().out

    def test_missing_mass(self, tmp_path, capsys):
        """Test that a config without m is rejected with the field named"""
        path = tmp_path / "config.json"
        model = {"family": "torus", "n": 1, "g_plus": 1.0, "g_minus": 1.0}
        path.write_text(json.dumps({"model": model}))
        assert main(["model", "--config", str(path), "--out", str(tmp_path / "p.json")]) == 2
        err = capsys.readouterr().err
        assert err.startswith("relspec model: error:")
        assert "model.m" in err

    def test_missing_config(self, tmp_path):
        """Test that an unreadable config is a usage error"""
        code = main(["model", "--config", str(tmp_path / "no.json"), "--out", "p.json"])
        assert code == EXIT_USAGE


@pytest.mark.unit
class TestSweep:
    """Test relspec sweep"""

    def test_equal_pair(self, tmp_path, equal_pair_file, equal_config):
        """Test that equal operators give zeros at every beta, sorted"""
        out = tmp_path / "sweep.csv"
        args = ["sweep", str(equal_pair_file), "--config", str(equal_config), "--out", str(out)]
        assert main(args) == EXIT_OK
        df = pd.read_csv(out)
        assert list(df.columns) == ["beta", "value", "route", "error_estimate"]
        assert df["beta"].tolist() == [0.5, 1.0, 2.0]
        assert df["value"].abs().max() == pytest.approx(0.0, abs=1e-14)

    def test_byte_stable(self, tmp_path, equal_pair_file):
        """Test that repeated sweeps write identical files"""
        outputs = []
        for name in ("first.csv", "second.csv"):
            out = tmp_path / name
            args = ["sweep", str(equal_pair_file), "--betas", "1,0.5", "--out", str(out)]
            assert main(args) == EXIT_OK
            outputs.append(out.read_bytes())
        assert outputs[0] == outputs[1]

    def test_json_output(self, tmp_path, equal_pair_file):
        """Test the JSON table"""
        out = tmp_path / "sweep.json"
        args = ["sweep", str(equal_pair_file), "--betas", "1", "--flavor", "bose"]
        args += ["--out", str(out)]
        assert main(args) == EXIT_OK
        assert json.loads(out.read_text())

    def test_bad_betas(self, tmp_path, equal_pair_file):
        """Test that unparsable betas are a usage error"""
        args = ["sweep", str(equal_pair_file), "--betas", "1,x", "--out", str(tmp_path / "s.csv")]
        assert main(args) == EXIT_USAGE

    def test_missing_pair_file(self, tmp_path, capsys):
        """Test that a missing pair file is a usage error"""
        args = ["sweep", str(tmp_path / "none.json"), "--out", str(tmp_path / "s.csv")]
        assert main(args) == EXIT_USAGE
        assert "relspec sweep: error:" in capsys.readouterr().err


@pytest.mark.unit
class TestAsympt:
    """Test relspec asympt"""

    def test_equal_metrics(self, tmp_path, equal_config):
        """Test that every leading coefficient of equal operators vanishes"""
        out = tmp_path / "asympt.json"
        assert main(["asympt", "--config", str(equal_config), "--out", str(out)]) == EXIT_OK
        report = json.loads(out.read_text())
        assert report["flavor"] == "bose"
        assert report["coefficients"]["c0"] == 0.0
        assert report["coefficients"]["c1"] == 0.0

    def test_dirac_shift(self, dirac_config, capsys):
        """Test d1 = -M^2 for the shifted Dirac pair"""
        assert main(["asympt", "--config", str(dirac_config)]) == EXIT_OK
        report = json.loads(capsys.readouterr().out)
        assert report["flavor"] == "fermi"
        assert report["coefficients"]["d1"] == pytest.approx(-0.25)


@pytest.mark.unit
class TestVerify:
    """Test relspec verify"""

    def test_passing_suite(self, tmp_path, monkeypatch, capsys):
        """Test the exit code and summary of a passing suite"""
        monkeypatch.setattr(
            VerificationSuite,
            "default_suite",
            classmethod(lambda cls, level="quick": cls([DiagonalEquivalence()], name="mock")),
        )
        out = tmp_path / "verify.json"
        assert main(["verify", "--out", str(out)]) == EXIT_OK
        assert "1/1 checks passed" in capsys.readouterr().out
        assert json.loads(out.read_text())["passed"] is True

    def test_failing_suite(self, tmp_path, monkeypatch):
        """Test that a failed check is a numeric failure"""
        monkeypatch.setattr(
            VerificationSuite,
            "default_suite",
            classmethod(lambda cls, level="quick": cls([DiagonalEquivalence(tolerance=-1.0)])),
        )
        out = tmp_path / "verify.csv"
        assert main(["verify", "--level", "full", "--out", str(out)]) == EXIT_NUMERIC
        assert len(pd.read_csv(out)) == 1

    def test_suite_file(self, tmp_path):
        """Test running a saved suite"""
        path = tmp_path / "suite.json"
        VerificationSuite([DiagonalEquivalence()]).save_suite_file(path)
        assert main(["verify", "--suite", str(path)]) == EXIT_OK

    def test_bad_suite_file(self, tmp_path):
        """Test that a suite file from another version is a usage error"""
        path = tmp_path / "suite.json"
        VerificationSuite([DiagonalEquivalence()]).save_suite_file(path)
        data = json.loads(path.read_text())
        data["versions"]["relspec"] = "0.0.0"
        path.write_text(json.dumps(data))
        assert main(["verify", "--suite", str(path)]) == EXIT_USAGE


@pytest.mark.unit
class TestKernel:
    """Test relspec kernel"""

    def test_table(self, tmp_path):
        """Test the columns and row count of the kernel table"""
        out = tmp_path / "kernel.csv"
        args = ["kernel", "--out", str(out), "--t-min", "0.1", "--t-max", "10", "--num", "5"]
        assert main(args) == EXIT_OK
        df = pd.read_csv(out)
        assert list(df.columns) == ["t", "h_b", "h_f", "h_0"]
        assert len(df) == 5
        assert (df["h_0"] - 0.5 * (df["h_b"] + df["h_f"])).abs().max() < 1e-12

    def test_bad_range(self, tmp_path):
        """Test that t-min must be below t-max"""
        args = ["kernel", "--out", str(tmp_path / "k.csv"), "--t-min", "5", "--t-max", "1"]
        assert main(args) == EXIT_USAGE

"""Test bogolyubov module"""

import math

import numpy as np
import pandas as pd
import pytest

from relspec import bogolyubov
from relspec.asymptotics import AsymptoticExpansion, AsymptoticTerm
from relspec.bogolyubov import (
    BetaRecord,
    BetaSweep,
    Flavor,
    Route,
    B_b_heat,
    B_b_pairwise,
    B_b_sinh,
    B_b_spectral,
    B_f_heat,
    B_f_spectral,
    N_truncated,
    V_b,
    V_f,
    adiabatic_oracle,
    invariant,
    run_sweep,
    threads_from_env,
    zeta,
)
from relspec.checks.invariants import one_mode_pair
from relspec.errors import AccuracyError, DomainError, KindMismatchError, UnsupportedError
from relspec.quadrature import QuadratureResult
from relspec.spectral import (
    GeometryPair,
    build_dirac_circle_pair,
    build_schrodinger_circle_pair,
    build_torus_pair,
)


@pytest.fixture
def torus_pair():
    """Torus pair with g_+ = 4, g_- = 1"""
    return build_torus_pair(1, 4.0, 1.0, cutoff=16)


@pytest.fixture
def dirac_pair():
    """Dirac pair with scales 2 and 1"""
    return build_dirac_circle_pair(2.0, 1.0, cutoff=16)


@pytest.mark.unit
class TestBosonicInvariant:
    """Test the forms of B_b"""

    def test_one_mode_value(self):
        """Test sinh^2(1/2) / (sinh 2 sinh 1) for the one-mode pair"""
        expected = math.sinh(0.5) ** 2 / (math.sinh(2.0) * math.sinh(1.0))
        value = B_b_spectral(one_mode_pair(), 1.0)
        assert value == pytest.approx(expected, rel=1e-13)
        assert value == pytest.approx(0.0637076, abs=1e-7)

    @pytest.mark.parametrize("beta", [0.1, 1.0, 5.0])
    def test_forms_agree(self, torus_pair, beta):
        """Test that the spectral, pairwise and sinh^2 forms agree"""
        spectral = B_b_spectral(torus_pair, beta)
        assert B_b_pairwise(torus_pair, beta) == pytest.approx(spectral, rel=1e-11)
        assert B_b_sinh(torus_pair, beta) == pytest.approx(spectral, rel=1e-11)

    def test_nonnegative(self, torus_pair):
        """Test B_b >= 0"""
        assert all(B_b_spectral(torus_pair, b) >= 0 for b in (0.05, 0.5, 5.0))

    def test_equal_pair(self):
        """Test that equal operators give zero"""
        pair = build_torus_pair(1, 1.0, 1.0, cutoff=32)
        assert B_b_spectral(pair, 0.5) == pytest.approx(0.0, abs=1e-13)

    def test_dense_overlap(self):
        """Test the pairwise form on a complete dense overlap"""
        pair = build_schrodinger_circle_pair([2.0, 1.0], [0.0], cutoff=24)
        assert B_b_pairwise(pair, 1.0) == pytest.approx(B_b_spectral(pair, 1.0), rel=1e-9)

    def test_dirac_rejected(self, dirac_pair):
        """Test that B_b needs a laplace pair"""
        with pytest.raises(KindMismatchError):
            B_b_spectral(dirac_pair, 1.0)

    @pytest.mark.parametrize("beta", [0.0, -1.0])
    def test_nonpositive_beta(self, torus_pair, beta):
        """Test that beta must be positive"""
        with pytest.raises(DomainError, match="beta"):
            B_b_spectral(torus_pair, beta)


@pytest.mark.unit
class TestFermionicInvariant:
    """Test B_f"""

    def test_equal_pair(self):
        """Test that equal Dirac operators give zero"""
        pair = build_dirac_circle_pair(1.0, 1.0, cutoff=32)
        assert B_f_spectral(pair, 0.5) == pytest.approx(0.0, abs=1e-13)

    def test_positive(self, dirac_pair):
        """Test B_f > 0 for different operators"""
        assert B_f_spectral(dirac_pair, 1.0) > 0

    def test_laplace_rejected(self, torus_pair):
        """Test that B_f needs a Dirac pair"""
        with pytest.raises(KindMismatchError):
            B_f_spectral(torus_pair, 1.0)


@pytest.mark.unit
class TestLimits:
    """Test N_truncated and the adiabatic oracle"""

    def test_one_mode_particle_number(self):
        """Test (1/4)(sqrt(1/2) - sqrt(2))^2 = 0.125"""
        assert N_truncated(one_mode_pair(), Flavor.BOSE) == pytest.approx(0.125, rel=1e-14)

    def test_small_beta_limit(self, torus_pair):
        """Test that B_b approaches N_truncated as beta -> 0"""
        assert B_b_spectral(torus_pair, 1e-4) == pytest.approx(
            N_truncated(torus_pair, Flavor.BOSE), rel=1e-3
        )

    def test_fermi_particle_number(self, dirac_pair):
        """Test that B_f approaches its particle number as beta -> 0"""
        assert B_f_spectral(dirac_pair, 1e-4) == pytest.approx(
            N_truncated(dirac_pair, Flavor.FERMI), rel=1e-3
        )

    def test_adiabatic_one_mode(self):
        """Test the large-beta oracle on the one-mode pair"""
        pair = one_mode_pair()
        ratio = adiabatic_oracle(pair, Flavor.BOSE, 10.0) / B_b_spectral(pair, 10.0)
        assert ratio == pytest.approx(1.0, abs=1e-4)

    def test_adiabatic_fermi(self, dirac_pair):
        """Test the large-beta oracle of B_f"""
        ratio = adiabatic_oracle(dirac_pair, Flavor.FERMI, 20.0) / B_f_spectral(dirac_pair, 20.0)
        assert ratio == pytest.approx(1.0, abs=1e-4)


@pytest.mark.unit
class TestDispatch:
    """Test invariant dispatch"""

    def test_spectral_route(self, torus_pair):
        """Test that spectral values carry a zero error estimate"""
        result = invariant(torus_pair, "bose", 1.0)
        assert result.value == B_b_spectral(torus_pair, 1.0)
        assert result.error_estimate == 0.0

    def test_pairwise_route(self, torus_pair):
        """Test the pairwise route"""
        result = invariant(torus_pair, Flavor.BOSE, 1.0, Route.PAIRWISE)
        assert result.value == pytest.approx(B_b_spectral(torus_pair, 1.0), rel=1e-11)

    def test_pairwise_fermi_unsupported(self, dirac_pair):
        """Test that the pairwise route is bosonic only"""
        with pytest.raises(UnsupportedError):
            invariant(dirac_pair, Flavor.FERMI, 1.0, Route.PAIRWISE)

    def test_unknown_route(self, torus_pair):
        """Test that an unknown route name is rejected"""
        with pytest.raises(ValueError):
            invariant(torus_pair, Flavor.BOSE, 1.0, "integral")


@pytest.mark.functional
class TestHeatRoute:
    """Test the heat-trace integrals against the spectral sums"""

    def test_bose(self):
        """Test B_b by both routes on a small torus pair"""
        pair = build_torus_pair(1, 4.0, 1.0, cutoff=16)
        result = B_b_heat(pair, 1.0)
        assert result.value == pytest.approx(B_b_spectral(pair, 1.0), rel=1e-6)
        assert result.error_estimate >= 0

    def test_fermi(self):
        """Test B_f by both routes on a small Dirac pair"""
        pair = build_dirac_circle_pair(2.0, 1.0, cutoff=16)
        assert B_f_heat(pair, 1.0).value == pytest.approx(B_f_spectral(pair, 1.0), rel=1e-6)


@pytest.mark.unit
class TestMomentumIntegrals:
    """Test V_b and V_f"""

    def test_equal_geometry(self):
        """Test that equal symbols give zero without integrating"""
        geom = GeometryPair.circle(1.5, 1.5)
        assert V_b(geom) == 0.0
        assert V_f(geom) == 0.0

    def test_swap_symmetric(self):
        """Test that exchanging the symbols leaves V_b unchanged"""
        geom = GeometryPair.circle(2.0, 1.0)
        assert V_b(geom) == pytest.approx(V_b(geom.swapped()), rel=1e-8)

    def test_positive(self):
        """Test V_b > 0 and V_f > 0 for different symbols"""
        geom = GeometryPair.circle(2.0, 1.0, fiber_dim=2)
        assert V_b(geom) > 0
        assert V_f(geom) > 0

    def test_two_dimensions(self):
        """Test that the angular integral of an isotropic pair matches the scaling law"""
        iso = GeometryPair(2, 4.0 * np.eye(2), np.eye(2), 1.0)
        # a rescaled pair (g_+, g_-) -> c (g_+, g_-) divides V_b by c in n = 2
        scaled = GeometryPair(2, 8.0 * np.eye(2), 2.0 * np.eye(2), 1.0)
        assert V_b(scaled) == pytest.approx(V_b(iso) / 2.0, rel=1e-6)

    def test_high_dimension_unsupported(self):
        """Test that n > 2 is not integrated"""
        geom = GeometryPair(3, np.eye(3), 2.0 * np.eye(3), 1.0)
        with pytest.raises(UnsupportedError):
            V_b(geom)


@pytest.mark.unit
class TestZeta:
    """Test the zeta function"""

    def test_domain(self, torus_pair):
        """Test that s must exceed n"""
        with pytest.raises(DomainError, match="s > n"):
            zeta(torus_pair, Flavor.BOSE, 1.0)

    def test_expansion_needs_split(self, torus_pair):
        """Test that an expansion needs a split point"""
        expansion = AsymptoticExpansion([AsymptoticTerm(-1.0, 0, 1.0)], 0)
        with pytest.raises(DomainError, match="beta_split"):
            zeta(torus_pair, Flavor.BOSE, 1.5, expansion=expansion)

    def test_log_terms_unsupported(self, torus_pair):
        """Test that logarithmic terms are refused"""
        expansion = AsymptoticExpansion([AsymptoticTerm(0.0, 1, 1.0)], 0)
        with pytest.raises(UnsupportedError):
            zeta(torus_pair, Flavor.BOSE, 1.5, expansion=expansion, beta_split=0.3)

    def test_truncated_zeta(self):
        """Test that the truncated zeta function is finite and positive for s > n"""
        pair = one_mode_pair()
        direct = zeta(pair, Flavor.BOSE, 2.5)
        assert math.isfinite(direct)
        assert direct > 0


@pytest.mark.unit
class TestSweep:
    """Test run_sweep and BetaSweep"""

    def test_sorted(self, torus_pair):
        """Test that the output is ordered by beta"""
        sweep = run_sweep(torus_pair, [2.0, 0.5, 1.0])
        np.testing.assert_array_equal(sweep.betas, [0.5, 1.0, 2.0])
        assert sweep.values[0] == B_b_spectral(torus_pair, 0.5)
        assert len(sweep) == 3

    def test_duplicates(self, torus_pair):
        """Test that repeated betas are rejected"""
        with pytest.raises(DomainError, match="distinct"):
            run_sweep(torus_pair, [1.0, 1.0])

    def test_threads_same_values(self, torus_pair):
        """Test that threaded sweeps give identical values"""
        serial = run_sweep(torus_pair, [0.3, 0.6, 0.9], threads=1)
        threaded = run_sweep(torus_pair, [0.9, 0.3, 0.6], threads=3)
        np.testing.assert_array_equal(serial.values, threaded.values)

    def test_to_pandas(self, torus_pair):
        """Test the column layout"""
        df = run_sweep(torus_pair, [1.0, 2.0]).to_pandas()
        assert isinstance(df, pd.DataFrame)
        assert list(df.columns) == ["beta", "value", "route", "error_estimate"]
        assert (df["route"] == "spectral").all()

    def test_csv_byte_stable(self, tmp_path, torus_pair):
        """Test that two runs write identical csv files"""
        first, second = tmp_path / "a.csv", tmp_path / "b.csv"
        run_sweep(torus_pair, [0.5, 1.0]).save_as_csv(first)
        run_sweep(torus_pair, [1.0, 0.5]).save_as_csv(second)
        assert first.read_bytes() == second.read_bytes()
        assert first.read_text().splitlines()[0] == "beta,value,route,error_estimate"

    def test_json(self, tmp_path, dirac_pair):
        """Test the json output"""
        path = tmp_path / "sweep.json"
        run_sweep(dirac_pair, [1.0], Flavor.FERMI).save_as_json(path)
        assert '"flavor": "fermi"' in path.read_text()

    def test_accuracy_failure_recorded(self, monkeypatch, torus_pair):
        """Test that a failed row keeps its best value and carries an issue"""
        real = bogolyubov.invariant

        def flaky(pair, flavor, beta, route, ctl):
            if beta == 1.0:
                raise AccuracyError("did not converge", value=0.5, error_estimate=0.1)
            return real(pair, flavor, beta, route, ctl)

        monkeypatch.setattr(bogolyubov, "invariant", flaky)
        with pytest.warns(UserWarning, match="accuracy not reached"):
            sweep = run_sweep(torus_pair, [0.5, 1.0, 2.0])
        assert len(sweep.flagged) == 1
        record = sweep.flagged[0]
        assert (record.beta, record.value, record.error_estimate) == (1.0, 0.5, 0.1)
        assert "ISSUE" in sweep.get_report_string()

    def test_negative_flagged(self, monkeypatch, torus_pair):
        """Test that a clearly negative value is flagged"""
        monkeypatch.setattr(
            bogolyubov,
            "invariant",
            lambda *args: QuadratureResult(-1.0, 0.0, 1),
        )
        with pytest.warns(UserWarning, match="negative"):
            sweep = run_sweep(torus_pair, [1.0])
        assert sweep.flagged

    def test_unsorted_records(self):
        """Test that BetaSweep needs increasing betas"""
        records = [
            BetaRecord(2.0, 0.1, Route.SPECTRAL, 0.0),
            BetaRecord(1.0, 0.2, Route.SPECTRAL, 0.0),
        ]
        with pytest.raises(DomainError):
            BetaSweep(records, Flavor.BOSE)

    def test_threads_env(self, monkeypatch):
        """Test RELSPEC_THREADS"""
        monkeypatch.setenv("RELSPEC_THREADS", "3")
        assert threads_from_env() == 3
        monkeypatch.setenv("RELSPEC_THREADS", "0")
        with pytest.raises(DomainError):
            threads_from_env()
        monkeypatch.delenv("RELSPEC_THREADS")
        assert threads_from_env() == 1

"""Test spectral module"""

import json
import math

import numpy as np
import pytest

from relspec.errors import DomainError, KindMismatchError, SpectralFormatError, UnsupportedError
from relspec.spectral import (
    GeometryPair,
    OperatorPair,
    OverlapMatrix,
    Spectrum,
    SpectrumKind,
    build_dirac_circle_pair,
    build_schrodinger_circle_pair,
    build_torus_pair,
    circle_laplace_spectrum,
    constant_shift_pair,
    load_pair,
    save_pair,
    validate,
)


@pytest.fixture
def torus_pair():
    """Torus pair with g_+ = 4, g_- = 1"""
    return build_torus_pair(1, 4.0, 1.0, cutoff=16)


@pytest.fixture
def schrodinger_pair():
    """Schrodinger pair V_+ = 2 + 2 cos x, V_- = 0"""
    return build_schrodinger_circle_pair([2.0, 1.0], [0.0], cutoff=24)


@pytest.mark.unit
class TestSpectrum:
    """Test Spectrum class"""

    def test_laplace_order(self):
        """Test that laplace values must be nondecreasing"""
        with pytest.raises(DomainError, match="nondecreasing"):
            Spectrum(SpectrumKind.LAPLACE, [1.0, 0.0], 1)

    def test_dirac_order(self):
        """Test that Dirac values are ordered by absolute value with signs kept"""
        spectrum = Spectrum(SpectrumKind.DIRAC, [0.0, 1.0, -1.0, -2.0, 2.0], 1)
        assert spectrum.is_dirac
        np.testing.assert_array_equal(spectrum.squared, [0.0, 1.0, 1.0, 4.0, 4.0])
        with pytest.raises(DomainError, match="ordered by"):
            Spectrum(SpectrumKind.DIRAC, [2.0, 1.0], 1)

    def test_empty(self):
        """Test that a spectrum needs values"""
        with pytest.raises(DomainError):
            Spectrum(SpectrumKind.LAPLACE, [], 1)

    def test_values_frozen(self):
        """Test that the stored values are read only"""
        spectrum = circle_laplace_spectrum(4)
        with pytest.raises(ValueError):
            spectrum.values[0] = 5.0

    def test_to_laplace(self):
        """Test that a Dirac spectrum squares into a laplace spectrum"""
        laplace = Spectrum(SpectrumKind.DIRAC, [1.0, -2.0], 1, fiber_dim=2).to_laplace()
        assert laplace.kind is SpectrumKind.LAPLACE
        np.testing.assert_array_equal(laplace.values, [1.0, 4.0])
        assert laplace.fiber_dim == 2

    def test_shifted(self):
        """Test constant shifts of laplace spectra"""
        shifted = circle_laplace_spectrum(2).shifted(0.5)
        np.testing.assert_allclose(shifted.values, [0.5, 1.5, 1.5, 4.5, 4.5])
        with pytest.raises(KindMismatchError):
            Spectrum(SpectrumKind.DIRAC, [1.0], 1).shifted(1.0)

    def test_circle_spectrum(self):
        """Test -a^2 d^2/dx^2 on the circle"""
        spectrum = circle_laplace_spectrum(3, scale=2.0)
        assert len(spectrum) == 7
        np.testing.assert_allclose(spectrum.values, [0, 4, 4, 16, 16, 36, 36])


@pytest.mark.unit
class TestOverlapMatrix:
    """Test OverlapMatrix class"""

    def test_identity(self):
        """Test the identity overlap"""
        overlap = OverlapMatrix.identity(3)
        assert overlap.is_identity
        assert overlap.shape == (3, 3)
        np.testing.assert_array_equal(overlap.entries, np.eye(3))

    def test_bad_permutation(self):
        """Test that a permutation must be a rearrangement"""
        with pytest.raises(DomainError):
            OverlapMatrix.from_permutation([0, 0, 1])

    def test_detect_permutation(self):
        """Test that 0/1 dense matrices are stored as permutations"""
        overlap = OverlapMatrix.from_dense([[0.0, 1.0], [1.0, 0.0]])
        assert overlap.is_permutation
        assert not overlap.is_identity
        np.testing.assert_array_equal(overlap.permutation, [1, 0])

    def test_dense_kept(self):
        """Test that mixing overlaps stay dense"""
        overlap = OverlapMatrix.from_dense([[0.75, 0.25], [0.25, 0.75]])
        assert not overlap.is_permutation
        np.testing.assert_allclose(overlap.row_sums(), [1.0, 1.0])
        np.testing.assert_allclose(overlap.col_sums(), [1.0, 1.0])

    def test_bilinear(self):
        """Test the bilinear form for permutation and dense storage"""
        a, b = np.array([1.0, 2.0]), np.array([3.0, 5.0])
        swap = OverlapMatrix.from_permutation([1, 0])
        assert swap.bilinear(a, b) == pytest.approx(1.0 * 5.0 + 2.0 * 3.0)
        dense = OverlapMatrix.from_dense([[0.5, 0.5], [0.5, 0.5]])
        assert dense.bilinear(a, b) == pytest.approx(0.5 * 3.0 * 8.0)

    def test_bilinear_complex(self):
        """Test that complex vectors give a complex result"""
        value = OverlapMatrix.identity(2).bilinear([1j, 1.0], [1.0, 1.0])
        assert value == pytest.approx(1.0 + 1j)

    def test_weighted_sum(self):
        """Test a summand that does not factor"""
        overlap = OverlapMatrix.from_dense([[0.5, 0.5], [0.5, 0.5]])
        total = overlap.weighted_sum(lambda x, y: (x - y) ** 2, [0.0, 1.0], [0.0, 2.0])
        assert total == pytest.approx(0.5 * (0 + 4 + 1 + 1))

    def test_transpose(self):
        """Test that the transpose of a permutation is its inverse"""
        overlap = OverlapMatrix.from_permutation([2, 0, 1])
        np.testing.assert_array_equal(overlap.transpose().entries, overlap.entries.T)

    def test_json(self):
        """Test that dense overlaps survive a JSON round trip"""
        overlap = OverlapMatrix.from_dense([[0.75, 0.25], [0.25, 0.75]])
        loaded = OverlapMatrix.from_json_dict(json.loads(json.dumps(overlap.to_json_dict())))
        np.testing.assert_array_equal(loaded.entries, overlap.entries)

    def test_json_unknown(self):
        """Test that an unknown overlap encoding is a format error"""
        with pytest.raises(SpectralFormatError):
            OverlapMatrix.from_json_dict({"sparse": []})


@pytest.mark.unit
class TestGeometryPair:
    """Test GeometryPair class"""

    def test_circle(self):
        """Test the circle geometry of two first-order operators"""
        geom = GeometryPair.circle(2.0, 1.0)
        assert geom.n == 1
        assert geom.volume == pytest.approx(2.0 * math.pi)
        np.testing.assert_allclose(geom.g_plus, [[4.0]])
        np.testing.assert_allclose(geom.vielbein_plus, [[2.0]])
        assert not geom.is_equal

    def test_not_positive_definite(self):
        """Test that metrics must be positive definite"""
        with pytest.raises(DomainError, match="positive definite"):
            GeometryPair(2, np.eye(2), [[1.0, 2.0], [2.0, 1.0]], 1.0)

    def test_wrong_shape(self):
        """Test that metric shapes must match n"""
        with pytest.raises(DomainError, match="2x2"):
            GeometryPair(2, np.eye(3), np.eye(2), 1.0)

    def test_bad_vielbein(self):
        """Test that a vielbein must reproduce the metric"""
        with pytest.raises(DomainError, match="vielbein"):
            GeometryPair(1, 4.0, 1.0, 1.0, vielbein_plus=3.0)

    def test_swapped(self):
        """Test exchanging the sides"""
        geom = GeometryPair.circle(2.0, 1.0).swapped()
        np.testing.assert_allclose(geom.g_plus, [[1.0]])
        np.testing.assert_allclose(geom.g_minus, [[4.0]])


@pytest.mark.unit
class TestOperatorPair:
    """Test OperatorPair class"""

    def test_mass(self):
        """Test that the mass must be positive"""
        spectrum = circle_laplace_spectrum(2)
        with pytest.raises(DomainError, match="mass"):
            OperatorPair(spectrum, spectrum, OverlapMatrix.identity(len(spectrum)), 0.0)

    def test_kind_mismatch(self):
        """Test that both sides must be of the same kind"""
        laplace = Spectrum(SpectrumKind.LAPLACE, [1.0], 1)
        dirac = Spectrum(SpectrumKind.DIRAC, [1.0], 1)
        with pytest.raises(KindMismatchError):
            OperatorPair(laplace, dirac, OverlapMatrix.identity(1), 1.0)

    def test_overlap_shape(self):
        """Test that the overlap shape must match the spectra"""
        spectrum = circle_laplace_spectrum(2)
        with pytest.raises(DomainError, match="overlap shape"):
            OperatorPair(spectrum, spectrum, OverlapMatrix.identity(3), 1.0)

    def test_nonpositive_omega(self):
        """Test that lambda + m^2 must stay positive"""
        spectrum = Spectrum(SpectrumKind.LAPLACE, [-2.0], 1)
        with pytest.raises(DomainError, match="omega"):
            OperatorPair(spectrum, spectrum, OverlapMatrix.identity(1), 1.0)

    def test_omega(self, torus_pair):
        """Test omega = sqrt(lambda + m^2)"""
        np.testing.assert_allclose(torus_pair.omega_plus, np.sqrt(torus_pair.plus.values + 1.0))

    def test_swapped(self, schrodinger_pair):
        """Test that swapping transposes the overlap and drops the family"""
        swapped = schrodinger_pair.swapped()
        np.testing.assert_array_equal(swapped.plus.values, schrodinger_pair.minus.values)
        np.testing.assert_array_equal(swapped.overlap.entries, schrodinger_pair.overlap.entries.T)
        assert swapped.family is None


@pytest.mark.unit
class TestBuilders:
    """Test the model family builders"""

    def test_torus_size(self):
        """Test that the n = 1 torus keeps 2 cutoff + 1 modes"""
        pair = build_torus_pair(1, 4.0, 1.0, cutoff=64)
        assert len(pair.plus) == len(pair.minus) == 129
        assert pair.overlap.is_permutation
        assert pair.family["name"] == "torus"

    def test_torus_two_dimensional(self):
        """Test the lattice size in n = 2"""
        pair = build_torus_pair(2, np.eye(2), 2.0 * np.eye(2), cutoff=3)
        assert len(pair.plus) == 49
        assert pair.n == 2

    def test_torus_equal_is_identity(self):
        """Test that equal operators get the identity overlap"""
        pair = build_torus_pair(1, 1.0, 1.0, cutoff=8)
        assert pair.overlap.is_identity

    def test_torus_overlap_matches_modes(self, torus_pair):
        """Test that the overlap pairs each plane wave with itself"""
        perm = torus_pair.overlap.permutation
        # k^2 on the minus side is 4 k^2 on the plus side
        np.testing.assert_allclose(torus_pair.plus.values[perm], 4.0 * torus_pair.minus.values)

    def test_bad_cutoff(self):
        """Test that the cutoff must be a positive integer"""
        with pytest.raises(DomainError, match="cutoff"):
            build_torus_pair(1, 1.0, 1.0, cutoff=0)

    def test_schrodinger_completeness(self, schrodinger_pair):
        """Test that the dense overlap is doubly stochastic"""
        assert not schrodinger_pair.overlap.is_permutation
        np.testing.assert_allclose(schrodinger_pair.overlap.row_sums(), 1.0, atol=1e-10)
        np.testing.assert_allclose(schrodinger_pair.overlap.col_sums(), 1.0, atol=1e-10)
        assert "edge_weight_plus" in schrodinger_pair.meta

    def test_schrodinger_cutoff_too_small(self):
        """Test that the cutoff must exceed the potential's Fourier range"""
        with pytest.raises(DomainError):
            build_schrodinger_circle_pair([0.0, 0.0, 1.0], [0.0], cutoff=2)

    def test_dirac_size(self):
        """Test the two-component Dirac spectrum"""
        pair = build_dirac_circle_pair(2.0, 1.0, cutoff=8)
        assert pair.is_dirac
        assert pair.fiber_dim == 2
        assert len(pair.plus) == 2 * 17
        assert len(build_dirac_circle_pair(1.0, 1.0, antiperiodic=True, cutoff=8).plus) == 32

    def test_dirac_shift_unsupported(self):
        """Test that an anticommuting shift needs equal scales"""
        with pytest.raises(UnsupportedError):
            build_dirac_circle_pair(2.0, 1.0, shift=0.5)

    def test_dirac_shift_spectrum(self):
        """Test that an anticommuting shift gives mu^2 = k^2 + M^2"""
        pair = build_dirac_circle_pair(1.0, 1.0, shift=0.5, cutoff=8)
        np.testing.assert_allclose(np.sort(pair.plus.squared), np.sort(pair.minus.squared + 0.25))
        np.testing.assert_allclose(pair.overlap.row_sums(), 1.0)

    def test_constant_shift(self):
        """Test H_+ = H_- + M^2"""
        base = circle_laplace_spectrum(4)
        pair = constant_shift_pair(base, 1.5)
        np.testing.assert_allclose(pair.plus.values, base.values + 1.5)
        assert pair.overlap.is_identity
        with pytest.raises(DomainError):
            constant_shift_pair(base, -1.0)


@pytest.mark.unit
class TestPairFiles:
    """Test pair file reading and writing"""

    def test_round_trip(self, tmp_path, schrodinger_pair):
        """Test that values, overlap and geometry survive a save and load"""
        path = tmp_path / "pair.json"
        save_pair(schrodinger_pair, path)
        loaded = load_pair(path)
        np.testing.assert_array_equal(loaded.plus.values, schrodinger_pair.plus.values)
        np.testing.assert_array_equal(loaded.overlap.entries, schrodinger_pair.overlap.entries)
        assert loaded.m == schrodinger_pair.m
        assert loaded.family["name"] == "schrodinger_circle"

    def test_identity_compact(self, tmp_path):
        """Test that identity overlaps are written without a matrix"""
        path = tmp_path / "pair.json"
        save_pair(build_torus_pair(1, 1.0, 1.0, cutoff=4), path)
        data = json.loads(path.read_text())
        assert data["overlap"] == {"identity": True, "size": 9}
        assert load_pair(path).overlap.is_identity

    def test_version_mismatch(self, tmp_path, torus_pair):
        """Test that another format version is rejected"""
        data = torus_pair.to_json_dict()
        data["format_version"] = 99
        path = tmp_path / "pair.json"
        path.write_text(json.dumps(data))
        with pytest.raises(SpectralFormatError, match="format version"):
            load_pair(path)

    def test_missing_field(self, torus_pair):
        """Test that a missing field is a format error"""
        data = torus_pair.to_json_dict()
        del data["values_plus"]
        with pytest.raises(SpectralFormatError, match="values_plus"):
            OperatorPair.from_json_dict(data)

    def test_invalid_json(self, tmp_path):
        """Test that a broken file is a format error"""
        path = tmp_path / "pair.json"
        path.write_text("{not json")
        with pytest.raises(SpectralFormatError, match="not valid JSON"):
            load_pair(path)


@pytest.mark.unit
class TestValidate:
    """Test validate function"""

    def test_torus_passes(self, torus_pair):
        """Test that a commuting pair passes every check"""
        report = validate(torus_pair)
        assert report.passed
        assert report.violations == []
        assert report.max_row_deviation == 0.0

    def test_schrodinger_interior(self, schrodinger_pair):
        """Test that interior rows of a complete basis sum to one"""
        report = validate(schrodinger_pair)
        assert report.passed
        assert report.max_row_deviation < 1e-10
        assert "max interior row-sum deviation" in report.get_report_string()

    def test_excess_row_sum(self):
        """Test that row sums above one are reported, not raised"""
        spectrum = Spectrum(SpectrumKind.LAPLACE, [0.0, 1.0], 1)
        overlap = OverlapMatrix.from_dense([[1.0, 0.5], [0.0, 0.5]])
        pair = OperatorPair(spectrum, spectrum, overlap, 1.0)
        with pytest.warns(UserWarning, match="overlap row sums <= 1"):
            report = validate(pair)
        assert not report.passed
        assert any("row sums" in check.name for check in report.violations)
        assert report.to_json_dict()["passed"] is False

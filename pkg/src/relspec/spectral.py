"""truncated spectral data of operator pairs: spectra, overlaps, model families, validation"""

from __future__ import annotations

import itertools
import json
import math
import warnings
from dataclasses import dataclass, field
from enum import Enum
from functools import cached_property
from os import PathLike
from typing import TYPE_CHECKING, Any, Callable, Dict, List, Mapping, Optional, Sequence, Tuple, Union

import numpy as np
from numpy.typing import ArrayLike, NDArray
from scipy import linalg

if TYPE_CHECKING:
    from typing_extensions import Self

from . import __version__
from .errors import (
    DomainError,
    KindMismatchError,
    NumericError,
    SpectralFormatError,
    UnsupportedError,
)


FORMAT_VERSION = 1

# eigenvector weight on the outermost plane waves above which a row is an "edge" row
EDGE_WEIGHT_TOL = 1e-8

# slack on overlap row/column sums
SUM_TOL = 1e-9


def _readonly(values: ArrayLike, dtype=float) -> NDArray:
    arr = np.array(values, dtype=dtype)
    arr.setflags(write=False)
    return arr


class SpectrumKind(str, Enum):
    """Laplace spectra hold eigenvalues lambda, Dirac spectra hold signed eigenvalues mu"""

    LAPLACE = "laplace"
    DIRAC = "dirac"


@dataclass(frozen=True, eq=False)
class Spectrum:
    """
    Ordered eigenvalues of one truncated operator

    Parameters
    ----------
    kind: SpectrumKind
        laplace (values nondecreasing) or dirac (values ordered by |mu|, signs kept)
    values: array-like
        eigenvalues, one per eigensection (multiplicities repeated)
    n: int
        spatial dimension
    fiber_dim: int, default 1
        rank N of the vector bundle
    label: str, default ""
    cutoff: int, optional
        truncation parameter the spectrum was built with
    """

    kind: SpectrumKind
    values: NDArray[np.float64]
    n: int
    fiber_dim: int = 1
    label: str = ""
    cutoff: Optional[int] = None

    def __post_init__(self):
        """Freeze the values and check ordering"""
        object.__setattr__(self, "kind", SpectrumKind(self.kind))
        values = _readonly(self.values)
        object.__setattr__(self, "values", values)

        if values.ndim != 1 or len(values) == 0:
            raise DomainError("a spectrum needs a non-empty 1-D list of eigenvalues")
        if not np.all(np.isfinite(values)):
            raise DomainError("spectrum values must be finite")
        if self.n < 1 or self.fiber_dim < 1:
            raise DomainError(f"n and fiber_dim must be >= 1; got n={self.n}, N={self.fiber_dim}")

        key = values if self.kind is SpectrumKind.LAPLACE else np.abs(values)
        if np.any(np.diff(key) < 0):
            order = "nondecreasing" if self.kind is SpectrumKind.LAPLACE else "ordered by |mu|"
            raise DomainError(f"{self.kind.value} spectrum values must be {order}")

    def __len__(self) -> int:
        """Number of eigenvalues"""
        return len(self.values)

    @property
    def is_dirac(self) -> bool:
        """True for signed Dirac spectra"""
        return self.kind is SpectrumKind.DIRAC

    @property
    def squared(self) -> NDArray[np.float64]:
        """The Laplace eigenvalues: the values themselves, or mu^2 for a Dirac spectrum"""
        if self.is_dirac:
            return _readonly(self.values**2)
        return self.values

    def to_laplace(self) -> "Spectrum":
        """The spectrum of the square of a Dirac operator (identity for laplace spectra)"""
        if not self.is_dirac:
            return self
        return Spectrum(
            SpectrumKind.LAPLACE, self.squared, self.n, self.fiber_dim, self.label, self.cutoff
        )

    def shifted(self, amount: float, label: Optional[str] = None) -> "Spectrum":
        """A laplace spectrum with every eigenvalue raised by `amount`"""
        if self.is_dirac:
            raise KindMismatchError("only laplace spectra can be shifted by a constant")
        return Spectrum(
            self.kind,
            self.values + amount,
            self.n,
            self.fiber_dim,
            self.label if label is None else label,
            self.cutoff,
        )

    def to_json_dict(self) -> Dict[str, Any]:
        """Serializable form of the spectrum"""
        return {
            "kind": self.kind.value,
            "n": self.n,
            "fiber_dim": self.fiber_dim,
            "label": self.label,
            "cutoff": self.cutoff,
            "values": self.values.tolist(),
        }

    @classmethod
    def from_json_dict(cls, data: Mapping[str, Any]) -> Self:
        """Inverse of `to_json_dict`"""
        return cls(
            kind=data["kind"],
            values=data["values"],
            n=int(data["n"]),
            fiber_dim=int(data.get("fiber_dim", 1)),
            label=data.get("label", ""),
            cutoff=data.get("cutoff"),
        )


class OverlapMatrix:
    """
    The J x K matrix of squared overlaps |(phi_j^-, phi_k^+)|^2

    Rows index the minus eigenbasis, columns the plus eigenbasis. Commuting
    families never store a dense matrix: an identity or a permutation is kept
    instead, and every reduction uses the matching fast path.

    Notes
    -----
    Build with `identity`, `from_permutation` or `from_dense` rather than
    calling the constructor directly.
    """

    def __init__(
        self,
        shape: Tuple[int, int],
        dense: Optional[NDArray[np.float64]] = None,
        permutation: Optional[NDArray[np.int64]] = None,
    ):
        if (dense is None) == (permutation is None):
            raise DomainError("an overlap matrix is either dense or a permutation")
        self._shape = (int(shape[0]), int(shape[1]))
        self._dense = dense
        self._permutation = permutation

    @classmethod
    def identity(cls, size: int) -> Self:
        """Identity overlap of a commuting pair"""
        return cls((size, size), permutation=_readonly(np.arange(size), dtype=np.int64))

    @classmethod
    def from_permutation(cls, permutation: ArrayLike) -> Self:
        """Row j overlaps only with column permutation[j], with weight 1"""
        perm = _readonly(permutation, dtype=np.int64)
        if perm.ndim != 1 or sorted(perm.tolist()) != list(range(len(perm))):
            raise DomainError("permutation must be a rearrangement of 0..K-1")
        return cls((len(perm), len(perm)), permutation=perm)

    @classmethod
    def from_dense(cls, entries: ArrayLike, detect_permutation: bool = True) -> Self:
        """
        Wrap a dense matrix of squared overlaps

        Parameters
        ----------
        entries: array-like
            J x K matrix
        detect_permutation: bool, default True
            store exact 0/1 permutation matrices (including the identity) compactly

        Returns
        -------
        OverlapMatrix
        """
        dense = np.array(entries, dtype=float)
        if dense.ndim != 2:
            raise DomainError("overlap entries must form a 2-D matrix")
        if detect_permutation and dense.shape[0] == dense.shape[1]:
            ones = dense == 1.0
            if np.all(ones | (dense == 0.0)) and np.all(ones.sum(0) == 1) and np.all(
                ones.sum(1) == 1
            ):
                return cls.from_permutation(np.argmax(ones, axis=1))
        dense.setflags(write=False)
        return cls(dense.shape, dense=dense)

    @property
    def shape(self) -> Tuple[int, int]:
        """(J, K)"""
        return self._shape

    @property
    def is_permutation(self) -> bool:
        """True when no dense matrix is stored"""
        return self._permutation is not None

    @property
    def is_identity(self) -> bool:
        """True for the identity overlap of a commuting pair with matching order"""
        return self.is_permutation and bool(
            np.array_equal(self._permutation, np.arange(self._shape[0]))
        )

    @property
    def permutation(self) -> Optional[NDArray[np.int64]]:
        """Column index of the single nonzero entry of each row, when stored that way"""
        return self._permutation

    @property
    def entries(self) -> NDArray[np.float64]:
        """Dense view (built on demand for permutation overlaps)"""
        if self._dense is not None:
            return self._dense
        dense = np.zeros(self._shape)
        dense[np.arange(self._shape[0]), self._permutation] = 1.0
        dense.setflags(write=False)
        return dense

    def row_sums(self) -> NDArray[np.float64]:
        """Sum over plus columns for each minus row"""
        if self._dense is None:
            return np.ones(self._shape[0])
        return self._dense.sum(axis=1)

    def col_sums(self) -> NDArray[np.float64]:
        """Sum over minus rows for each plus column"""
        if self._dense is None:
            return np.ones(self._shape[1])
        return self._dense.sum(axis=0)

    def transpose(self) -> "OverlapMatrix":
        """Overlap of the swapped pair"""
        if self._dense is None:
            inverse = np.empty_like(self._permutation)
            inverse[self._permutation] = np.arange(len(self._permutation))
            return OverlapMatrix.from_permutation(inverse)
        return OverlapMatrix.from_dense(self._dense.T, detect_permutation=False)

    def bilinear(self, minus_vector: ArrayLike, plus_vector: ArrayLike) -> Union[float, complex]:
        """
        sum_{j,k} O[j,k] a_j b_k with a indexed by the minus basis and b by the plus basis

        Parameters
        ----------
        minus_vector: array-like
            length J (real or complex)
        plus_vector: array-like
            length K (real or complex)

        Returns
        -------
        float or complex
        """
        a = np.asarray(minus_vector)
        b = np.asarray(plus_vector)
        if self._dense is None:
            total = np.sum(a * b[self._permutation])
        else:
            total = a @ (self._dense @ b)
        return complex(total) if np.iscomplexobj(total) else float(total)

    def weighted_sum(
        self,
        func: Callable[[NDArray[np.float64], NDArray[np.float64]], NDArray[np.float64]],
        minus_values: ArrayLike,
        plus_values: ArrayLike,
    ) -> float:
        """
        sum_{j,k} O[j,k] func(x_j, y_k) for a summand that does not factor

        `func` must broadcast: it is called on a column of minus values and a
        row of plus values (or on aligned vectors for permutation overlaps).
        """
        x = np.asarray(minus_values, dtype=float)
        y = np.asarray(plus_values, dtype=float)
        if self._dense is None:
            return float(np.sum(func(x, y[self._permutation])))
        return float(np.sum(self._dense * func(x[:, None], y[None, :])))

    def to_json_dict(self) -> Dict[str, Any]:
        """Serializable form: identity, permutation or dense"""
        if self.is_identity:
            return {"identity": True, "size": self._shape[0]}
        if self.is_permutation:
            return {"permutation": self._permutation.tolist()}
        return {"dense": self._dense.tolist()}

    @classmethod
    def from_json_dict(cls, data: Mapping[str, Any]) -> Self:
        """Inverse of `to_json_dict`"""
        if data.get("identity"):
            return cls.identity(int(data["size"]))
        if "permutation" in data:
            return cls.from_permutation(data["permutation"])
        if "dense" in data:
            return cls.from_dense(data["dense"], detect_permutation=False)
        raise SpectralFormatError("overlap must be one of 'identity', 'permutation', 'dense'")


def _as_matrix(value: ArrayLike, n: int, name: str) -> NDArray[np.float64]:
    arr = np.array(value, dtype=float)
    if arr.ndim == 0:
        arr = arr * np.eye(n) if n == 1 else arr * np.eye(n)
    if arr.shape != (n, n):
        raise DomainError(f"{name} must be a {n}x{n} matrix; got shape {arr.shape}")
    return arr


@dataclass(frozen=True, eq=False)
class GeometryPair:
    """
    Constant-coefficient leading symbols of the two operators

    Parameters
    ----------
    n: int
        dimension
    g_plus, g_minus: array-like
        inverse metrics g^{ij} (n x n SPD); scalars are accepted for n = 1
    volume: float
        coordinate volume of the manifold
    fiber_dim: int, default 1
        bundle rank N
    vielbein_plus, vielbein_minus: array-like, optional
        e with g = e e^T; the Cholesky factor is used when omitted
    """

    n: int
    g_plus: NDArray[np.float64]
    g_minus: NDArray[np.float64]
    volume: float
    fiber_dim: int = 1
    vielbein_plus: Optional[NDArray[np.float64]] = None
    vielbein_minus: Optional[NDArray[np.float64]] = None

    def __post_init__(self):
        """Normalize to arrays and check SPD metrics and vielbeins"""
        if self.n < 1:
            raise DomainError(f"dimension must be >= 1; got {self.n}")
        if not self.volume > 0:
            raise DomainError(f"volume must be positive; got {self.volume}")
        if self.fiber_dim < 1:
            raise DomainError(f"fiber_dim must be >= 1; got {self.fiber_dim}")

        for side in ("plus", "minus"):
            g = _as_matrix(getattr(self, f"g_{side}"), self.n, f"g_{side}")
            if not np.allclose(g, g.T, rtol=0, atol=1e-14 * np.abs(g).max()):
                raise DomainError(f"g_{side} must be symmetric")
            if np.any(np.linalg.eigvalsh(g) <= 0):
                raise DomainError(f"g_{side} must be positive definite")

            e = getattr(self, f"vielbein_{side}")
            e = np.linalg.cholesky(g) if e is None else _as_matrix(e, self.n, f"vielbein_{side}")
            if not np.allclose(e @ e.T, g, rtol=1e-12, atol=0):
                raise DomainError(f"vielbein_{side} does not reproduce g_{side}")

            object.__setattr__(self, f"g_{side}", _readonly(g))
            object.__setattr__(self, f"vielbein_{side}", _readonly(e))

    @classmethod
    def circle(cls, scale_plus: float, scale_minus: float, fiber_dim: int = 1) -> Self:
        """
        Geometry of first-order operators a(-i d/dx), b(-i d/dx) on the circle of length 2 pi

        The inverse metrics are a^2 and b^2 and the vielbeins a and b (signs kept).
        """
        return cls(
            n=1,
            g_plus=scale_plus**2,
            g_minus=scale_minus**2,
            volume=2.0 * math.pi,
            fiber_dim=fiber_dim,
            vielbein_plus=scale_plus,
            vielbein_minus=scale_minus,
        )

    @property
    def is_equal(self) -> bool:
        """True when both leading symbols coincide"""
        return bool(
            np.array_equal(self.g_plus, self.g_minus)
            and np.array_equal(self.vielbein_plus, self.vielbein_minus)
        )

    def swapped(self) -> "GeometryPair":
        """Exchange the plus and minus sides"""
        return GeometryPair(
            self.n,
            self.g_minus,
            self.g_plus,
            self.volume,
            self.fiber_dim,
            self.vielbein_minus,
            self.vielbein_plus,
        )

    def to_json_dict(self) -> Dict[str, Any]:
        """Serializable form of the geometry"""
        return {
            "n": self.n,
            "g_plus": self.g_plus.tolist(),
            "g_minus": self.g_minus.tolist(),
            "vielbein_plus": self.vielbein_plus.tolist(),
            "vielbein_minus": self.vielbein_minus.tolist(),
            "volume": self.volume,
            "fiber_dim": self.fiber_dim,
        }

    @classmethod
    def from_json_dict(cls, data: Mapping[str, Any]) -> Self:
        """Inverse of `to_json_dict`"""
        return cls(
            n=int(data["n"]),
            g_plus=data["g_plus"],
            g_minus=data["g_minus"],
            volume=float(data["volume"]),
            fiber_dim=int(data.get("fiber_dim", 1)),
            vielbein_plus=data.get("vielbein_plus"),
            vielbein_minus=data.get("vielbein_minus"),
        )


@dataclass(frozen=True, eq=False)
class OperatorPair:
    """
    Everything the invariants need about a pair of operators

    Parameters
    ----------
    plus, minus: Spectrum
        spectra of the operator after and before the jump; same kind
    overlap: OverlapMatrix
        len(minus) x len(plus) squared overlaps
    m: float
        positive mass
    geometry: GeometryPair, optional
        leading symbols, when the pair comes from a constant-coefficient family
    meta: dict
        free-form metadata; builders record {"family": {"name": ..., ...}} and
        edge weights of numerically computed eigenvectors
    """

    plus: Spectrum
    minus: Spectrum
    overlap: OverlapMatrix
    m: float
    geometry: Optional[GeometryPair] = None
    meta: Mapping[str, Any] = field(default_factory=dict)

    def __post_init__(self):
        """Check the structural invariants"""
        if not self.m > 0:
            raise DomainError(f"mass m must be positive; got {self.m}")
        if self.plus.kind is not self.minus.kind:
            raise KindMismatchError("plus and minus spectra must be of the same kind")
        if self.plus.n != self.minus.n:
            raise DomainError("plus and minus spectra must share the dimension n")
        if self.plus.fiber_dim != self.minus.fiber_dim:
            raise DomainError("plus and minus spectra must share the fiber dimension")
        if self.overlap.shape != (len(self.minus), len(self.plus)):
            raise DomainError(
                f"overlap shape {self.overlap.shape} does not match spectra "
                f"({len(self.minus)}, {len(self.plus)})"
            )
        for side in ("plus", "minus"):
            if np.any(getattr(self, side).squared + self.m**2 <= 0):
                raise DomainError(f"nonpositive omega on the {side} side")

    @property
    def n(self) -> int:
        """Spatial dimension"""
        return self.plus.n

    @property
    def fiber_dim(self) -> int:
        """Bundle rank N"""
        return self.plus.fiber_dim

    @property
    def is_dirac(self) -> bool:
        """True for pairs of Dirac type operators"""
        return self.plus.is_dirac

    @property
    def family(self) -> Optional[Mapping[str, Any]]:
        """The model family record written by the builders, if any"""
        return self.meta.get("family")

    @cached_property
    def omega_plus(self) -> NDArray[np.float64]:
        """sqrt(lambda^+ + m^2)"""
        return _readonly(np.sqrt(self.plus.squared + self.m**2))

    @cached_property
    def omega_minus(self) -> NDArray[np.float64]:
        """sqrt(lambda^- + m^2)"""
        return _readonly(np.sqrt(self.minus.squared + self.m**2))

    def swapped(self) -> "OperatorPair":
        """The pair with plus and minus exchanged (overlap transposed)"""
        meta = dict(self.meta)
        meta.pop("family", None)
        if "edge_weight_plus" in meta or "edge_weight_minus" in meta:
            meta["edge_weight_plus"], meta["edge_weight_minus"] = (
                self.meta.get("edge_weight_minus"),
                self.meta.get("edge_weight_plus"),
            )
        return OperatorPair(
            plus=self.minus,
            minus=self.plus,
            overlap=self.overlap.transpose(),
            m=self.m,
            geometry=None if self.geometry is None else self.geometry.swapped(),
            meta=meta,
        )

    def to_json_dict(self) -> Dict[str, Any]:
        """Versioned, lossless serializable form of the pair"""
        return {
            "format_version": FORMAT_VERSION,
            "relspec_version": __version__,
            "kind": self.plus.kind.value,
            "n": self.n,
            "fiber_dim": self.fiber_dim,
            "m": self.m,
            "plus": self.plus.to_json_dict(),
            "minus": self.minus.to_json_dict(),
            "values_plus": self.plus.values.tolist(),
            "values_minus": self.minus.values.tolist(),
            "overlap": self.overlap.to_json_dict(),
            "geometry": None if self.geometry is None else self.geometry.to_json_dict(),
            "meta": _jsonable(self.meta),
        }

    @classmethod
    def from_json_dict(cls, data: Mapping[str, Any]) -> Self:
        """Inverse of `to_json_dict`"""
        version = data.get("format_version")
        if version != FORMAT_VERSION:
            raise SpectralFormatError(
                f"unsupported pair file format version {version}; expected {FORMAT_VERSION}"
            )
        try:
            plus = Spectrum.from_json_dict({**data["plus"], "values": data["values_plus"]})
            minus = Spectrum.from_json_dict({**data["minus"], "values": data["values_minus"]})
            geometry = data.get("geometry")
            return cls(
                plus=plus,
                minus=minus,
                overlap=OverlapMatrix.from_json_dict(data["overlap"]),
                m=float(data["m"]),
                geometry=None if geometry is None else GeometryPair.from_json_dict(geometry),
                meta=data.get("meta", {}),
            )
        except KeyError as e:
            raise SpectralFormatError(f"pair file is missing the field {e}") from e


def _jsonable(value: Any) -> Any:
    if isinstance(value, Mapping):
        return {str(k): _jsonable(v) for k, v in value.items()}
    if isinstance(value, (list, tuple)):
        return [_jsonable(v) for v in value]
    if isinstance(value, np.ndarray):
        return value.tolist()
    if isinstance(value, np.generic):
        return value.item()
    return value


def save_pair(pair: OperatorPair, path: Union[str, PathLike]):
    """Write the pair as a JSON document"""
    with open(path, "w") as f:
        json.dump(pair.to_json_dict(), f, indent=1)


def load_pair(path: Union[str, PathLike]) -> OperatorPair:
    """Read a pair written by `save_pair`"""
    try:
        with open(path, "r") as f:
            data = json.load(f)
    except json.JSONDecodeError as e:
        raise SpectralFormatError(f"pair file '{path}' is not valid JSON: {e}") from e
    return OperatorPair.from_json_dict(data)


def _sorted_pair(
    kind: SpectrumKind,
    raw_plus: NDArray[np.float64],
    raw_minus: NDArray[np.float64],
    raw_overlap: Optional[NDArray[np.float64]],
    n: int,
    fiber_dim: int,
    cutoff: int,
    m: float,
    geometry: Optional[GeometryPair],
    meta: Dict[str, Any],
    labels: Tuple[str, str],
) -> OperatorPair:
    """
    Sort both spectra and carry the overlap (identity in the raw basis when None) along

    The sort is stable, so ties keep the order of the raw basis.
    """
    key_plus = raw_plus if kind is SpectrumKind.LAPLACE else np.abs(raw_plus)
    key_minus = raw_minus if kind is SpectrumKind.LAPLACE else np.abs(raw_minus)
    order_plus = np.argsort(key_plus, kind="stable")
    order_minus = np.argsort(key_minus, kind="stable")

    if raw_overlap is None:
        position_plus = np.empty_like(order_plus)
        position_plus[order_plus] = np.arange(len(order_plus))
        overlap = OverlapMatrix.from_permutation(position_plus[order_minus])
    else:
        overlap = OverlapMatrix.from_dense(raw_overlap[np.ix_(order_minus, order_plus)])

    for side, order in (("plus", order_plus), ("minus", order_minus)):
        key = f"edge_weight_{side}"
        if key in meta:
            meta[key] = np.asarray(meta[key])[order].tolist()

    plus = Spectrum(kind, raw_plus[order_plus], n, fiber_dim, labels[0], cutoff)
    minus = Spectrum(kind, raw_minus[order_minus], n, fiber_dim, labels[1], cutoff)
    return OperatorPair(plus, minus, overlap, m, geometry, meta)


def _check_cutoff(cutoff: int):
    if int(cutoff) != cutoff or cutoff < 1:
        raise DomainError(f"cutoff must be a positive integer; got {cutoff}")


def build_torus_pair(
    n: int,
    g_plus: ArrayLike,
    g_minus: ArrayLike,
    q_plus: float = 0.0,
    q_minus: float = 0.0,
    cutoff: int = 32,
    m: float = 1.0,
) -> OperatorPair:
    """
    Constant-coefficient Laplace type operators on the flat torus (R/2 pi Z)^n

    H_pm = g_pm^{ij} k_i k_j + q_pm on plane waves e^{ik.x} with |k_i| <= cutoff.
    The operators commute, so every plane wave is an eigensection of both.

    Parameters
    ----------
    n: int
        dimension
    g_plus, g_minus: array-like
        inverse metrics (scalars allowed for n = 1)
    q_plus, q_minus: float, default 0
        constant potentials
    cutoff: int, default 32
    m: float, default 1.0

    Returns
    -------
    OperatorPair

    Raises
    ------
    DomainError
        a metric is not SPD, the cutoff is invalid or some lambda + m^2 <= 0
    """
    _check_cutoff(cutoff)
    geometry = GeometryPair(n, g_plus, g_minus, (2.0 * math.pi) ** n)
    lattice = np.array(list(itertools.product(range(-cutoff, cutoff + 1), repeat=n)), dtype=float)
    raw_plus = np.einsum("ai,ij,aj->a", lattice, geometry.g_plus, lattice) + q_plus
    raw_minus = np.einsum("ai,ij,aj->a", lattice, geometry.g_minus, lattice) + q_minus

    meta = {
        "family": {
            "name": "torus",
            "n": n,
            "g_plus": geometry.g_plus.tolist(),
            "g_minus": geometry.g_minus.tolist(),
            "q_plus": q_plus,
            "q_minus": q_minus,
            "cutoff": cutoff,
        }
    }
    return _sorted_pair(
        SpectrumKind.LAPLACE,
        raw_plus,
        raw_minus,
        None,
        n,
        1,
        cutoff,
        m,
        geometry,
        meta,
        ("torus plus", "torus minus"),
    )


def _fourier_hamiltonian(coefficients: Sequence[complex], cutoff: int) -> NDArray[np.complex128]:
    """-d^2/dx^2 + V in the basis e^{ikx}, |k| <= cutoff, with V = sum_p c_p e^{ipx}"""
    coeffs = np.asarray(coefficients, dtype=complex)
    if len(coeffs) == 0:
        coeffs = np.zeros(1, dtype=complex)
    if abs(coeffs[0].imag) > 1e-14:
        raise DomainError("the constant Fourier coefficient of a real potential must be real")
    if len(coeffs) - 1 >= cutoff:
        raise DomainError(
            f"cutoff must be at least max Fourier index + 1 = {len(coeffs)}; got {cutoff}"
        )

    k = np.arange(-cutoff, cutoff + 1)
    hamiltonian = np.diag(k.astype(complex) ** 2 + coeffs[0].real)
    for p, c in enumerate(coeffs[1:], start=1):
        if c == 0:
            continue
        # <e_a|V|e_b> = c_{k_a - k_b}, with c_{-p} = conj(c_p)
        hamiltonian += np.diag(np.full(len(k) - p, c), -p)
        hamiltonian += np.diag(np.full(len(k) - p, np.conj(c)), p)
    return hamiltonian


def _eigensystem(hamiltonian: NDArray[np.complex128]) -> Tuple[NDArray, NDArray]:
    if np.count_nonzero(hamiltonian - np.diag(np.diag(hamiltonian))) == 0:
        return np.diag(hamiltonian).real.copy(), np.eye(len(hamiltonian), dtype=complex)
    try:
        return linalg.eigh(hamiltonian)
    except linalg.LinAlgError as e:
        raise NumericError(f"diagonalization failed: {e}") from e


def build_schrodinger_circle_pair(
    fourier_V_plus: Sequence[complex],
    fourier_V_minus: Sequence[complex],
    cutoff: int = 32,
    m: float = 1.0,
) -> OperatorPair:
    """
    Schrodinger operators -d^2/dx^2 + V_pm(x) on the circle of length 2 pi

    Both Hamiltonians are diagonalized in the plane-wave basis |k| <= cutoff.
    Potentials are given by Fourier coefficients c_0, c_1, ..., c_L with
    V(x) = c_0 + sum_{p>=1} (c_p e^{ipx} + conj(c_p) e^{-ipx}); so V = 2 cos x
    is [0, 1].

    Parameters
    ----------
    fourier_V_plus, fourier_V_minus: Sequence[complex]
    cutoff: int, default 32
    m: float, default 1.0

    Returns
    -------
    OperatorPair
        `meta` carries the eigenvector weight on the two outermost plane waves
        per eigenvalue ("edge_weight_plus", "edge_weight_minus")
    """
    _check_cutoff(cutoff)
    values_plus, vectors_plus = _eigensystem(_fourier_hamiltonian(fourier_V_plus, cutoff))
    values_minus, vectors_minus = _eigensystem(_fourier_hamiltonian(fourier_V_minus, cutoff))

    raw_overlap = np.abs(vectors_minus.conj().T @ vectors_plus) ** 2
    edge = lambda vectors: np.abs(vectors[0]) ** 2 + np.abs(vectors[-1]) ** 2  # noqa: E731
    meta = {
        "family": {
            "name": "schrodinger_circle",
            "fourier_V_plus": [[complex(c).real, complex(c).imag] for c in fourier_V_plus],
            "fourier_V_minus": [[complex(c).real, complex(c).imag] for c in fourier_V_minus],
            "cutoff": cutoff,
        },
        "edge_weight_plus": edge(vectors_plus),
        "edge_weight_minus": edge(vectors_minus),
    }
    return _sorted_pair(
        SpectrumKind.LAPLACE,
        values_plus,
        values_minus,
        raw_overlap,
        1,
        1,
        cutoff,
        m,
        GeometryPair(1, 1.0, 1.0, 2.0 * math.pi),
        meta,
        ("schrodinger plus", "schrodinger minus"),
    )


class ShiftKind(str, Enum):
    """How the shift M enters a Dirac pair: anticommuting with A_- or as a scalar"""

    ANTICOMMUTING = "anticommuting"
    SCALAR = "scalar"


def build_dirac_circle_pair(
    scale_plus: float,
    scale_minus: float,
    shift: float = 0.0,
    antiperiodic: bool = False,
    cutoff: int = 32,
    m: float = 1.0,
    shift_kind: Union[ShiftKind, str] = ShiftKind.ANTICOMMUTING,
) -> OperatorPair:
    """
    First-order operators sigma_1 (-i c d/dx) (+ shift) on the circle with a 2-dimensional fiber

    On each momentum k the minus operator is b k sigma_1, with eigenvalues
    s b k (s = +-1). Without a shift the plus operator is a k sigma_1 and the
    pair commutes. An anticommuting shift adds M_0 sigma_2: the eigenvalues become
    s' sqrt(a^2 k^2 + M_0^2) and the 2x2 eigenvectors mix with squared overlaps
    (1 + s s' a k / r) / 2. A scalar shift adds M_0 times the identity.

    Parameters
    ----------
    scale_plus, scale_minus: float
        a and b, both positive
    shift: float, default 0
        M_0
    antiperiodic: bool, default False
        use k in Z + 1/2 (k = +-1/2, ..., +-(cutoff - 1/2)) instead of |k| <= cutoff
    cutoff: int, default 32
    m: float, default 1.0
    shift_kind: ShiftKind or str, default "anticommuting"

    Returns
    -------
    OperatorPair

    Raises
    ------
    UnsupportedError
        anticommuting shift with a != b
    """
    _check_cutoff(cutoff)
    shift_kind = ShiftKind(shift_kind)
    if not (scale_plus > 0 and scale_minus > 0):
        raise DomainError("Dirac scales must be positive")
    if shift != 0 and shift_kind is ShiftKind.ANTICOMMUTING and scale_plus != scale_minus:
        raise UnsupportedError("an anticommuting shift needs equal scales a == b")

    if antiperiodic:
        momenta = np.arange(-cutoff, cutoff, dtype=float) + 0.5
    else:
        momenta = np.arange(-cutoff, cutoff + 1, dtype=float)
    # basis order: (k_0, s=+1), (k_0, s=-1), (k_1, s=+1), ...
    k = np.repeat(momenta, 2)
    s = np.tile([1.0, -1.0], len(momenta))
    raw_minus = s * scale_minus * k

    raw_overlap = None
    if shift == 0:
        raw_plus = s * scale_plus * k
    elif shift_kind is ShiftKind.SCALAR:
        raw_plus = s * scale_plus * k + shift
    else:
        radius = np.sqrt((scale_plus * momenta) ** 2 + shift**2)
        raw_plus = s * np.repeat(radius, 2)
        blocks = []
        for k_i, r_i in zip(momenta, radius):
            cos_theta = scale_plus * k_i / r_i
            blocks.append(
                0.5
                * np.array(
                    [[1.0 + cos_theta, 1.0 - cos_theta], [1.0 - cos_theta, 1.0 + cos_theta]]
                )
            )
        raw_overlap = linalg.block_diag(*blocks)

    meta = {
        "family": {
            "name": "dirac_circle",
            "scale_plus": scale_plus,
            "scale_minus": scale_minus,
            "shift": shift,
            "antiperiodic": antiperiodic,
            "shift_kind": shift_kind.value,
            "cutoff": cutoff,
        }
    }
    return _sorted_pair(
        SpectrumKind.DIRAC,
        raw_plus,
        raw_minus,
        raw_overlap,
        1,
        2,
        cutoff,
        m,
        GeometryPair.circle(scale_plus, scale_minus, fiber_dim=2),
        meta,
        ("dirac plus", "dirac minus"),
    )


def circle_laplace_spectrum(cutoff: int, scale: float = 1.0) -> Spectrum:
    """Spectrum scale^2 k^2, |k| <= cutoff, of -scale^2 d^2/dx^2 on the circle of length 2 pi"""
    _check_cutoff(cutoff)
    k = np.arange(-cutoff, cutoff + 1, dtype=float)
    values = np.sort(scale**2 * k**2, kind="stable")
    return Spectrum(SpectrumKind.LAPLACE, values, 1, 1, "circle", cutoff)


def constant_shift_pair(
    base: Spectrum, M_sq: float, m: float = 1.0, geometry: Optional[GeometryPair] = None
) -> OperatorPair:
    """
    The pair H_+ = H_- + M^2, H_- with spectrum `base`

    Parameters
    ----------
    base: Spectrum
        laplace spectrum of H_-
    M_sq: float
        nonnegative shift M^2 (0 gives the equal pair)
    m: float, default 1.0
    geometry: GeometryPair, optional
        leading symbol of H_- (shared by H_+)

    Returns
    -------
    OperatorPair
    """
    if base.is_dirac:
        raise KindMismatchError("constant_shift_pair needs a laplace base spectrum")
    if M_sq < 0:
        raise DomainError(f"M_sq must be nonnegative; got {M_sq}")
    meta = {"family": {"name": "constant_shift", "M_sq": M_sq, "cutoff": base.cutoff}}
    return OperatorPair(
        plus=base.shifted(M_sq, label=f"{base.label} + {M_sq}".strip()),
        minus=base,
        overlap=OverlapMatrix.identity(len(base)),
        m=m,
        geometry=geometry,
        meta=meta,
    )


@dataclass
class ValidationCheck:
    """One line of a validation report"""

    name: str
    passed: bool
    detail: str = ""


@dataclass
class ValidationReport:
    """
    Result of `validate`

    Attributes
    ----------
    checks: List[ValidationCheck]
    max_row_deviation: float
        worst |row sum - 1| over interior rows
    max_col_deviation: float
        worst |column sum - 1| over interior columns
    edge_rows: List[int]
        rows whose eigenvector reaches the truncation edge
    """

    checks: List[ValidationCheck]
    max_row_deviation: float
    max_col_deviation: float
    edge_rows: List[int]

    @property
    def passed(self) -> bool:
        """True when every check passed"""
        return all(check.passed for check in self.checks)

    @property
    def violations(self) -> List[ValidationCheck]:
        """The failed checks"""
        return [check for check in self.checks if not check.passed]

    def get_report_string(self) -> str:
        """Human readable report"""
        lines = [
            f"{'PASS' if c.passed else 'FAIL'}  {c.name}  {c.detail}".rstrip()
            for c in self.checks
        ]
        lines.append(f"max interior row-sum deviation: {self.max_row_deviation:.3e}")
        lines.append(f"max interior column-sum deviation: {self.max_col_deviation:.3e}")
        lines.append(f"edge rows flagged: {len(self.edge_rows)}")
        return "\n".join(lines)

    def to_json_dict(self) -> Dict[str, Any]:
        """Serializable form of the report"""
        return {
            "passed": self.passed,
            "checks": [
                {"name": c.name, "passed": c.passed, "detail": c.detail} for c in self.checks
            ],
            "max_row_deviation": self.max_row_deviation,
            "max_col_deviation": self.max_col_deviation,
            "edge_rows": self.edge_rows,
        }


def validate(pair: OperatorPair, edge_tol: float = EDGE_WEIGHT_TOL) -> ValidationReport:
    """
    Check every invariant of a pair and measure how far the overlaps are from doubly stochastic

    Report only: a violation is warned about, never raised.

    Parameters
    ----------
    pair: OperatorPair
    edge_tol: float, default EDGE_WEIGHT_TOL
        eigenvectors with more weight than this on the outermost plane waves
        are edge rows/columns and are left out of the deviation figures

    Returns
    -------
    ValidationReport
    """
    checks = [
        ValidationCheck("mass is positive", pair.m > 0, f"m={pair.m}"),
        ValidationCheck(
            "omega >= m",
            bool(np.all(pair.omega_plus >= pair.m) and np.all(pair.omega_minus >= pair.m)),
        ),
        ValidationCheck("dimensions agree", pair.plus.n == pair.minus.n),
        ValidationCheck("fiber dimensions agree", pair.plus.fiber_dim == pair.minus.fiber_dim),
        ValidationCheck(
            "overlap shape matches spectra",
            pair.overlap.shape == (len(pair.minus), len(pair.plus)),
            f"{pair.overlap.shape}",
        ),
    ]

    entries_ok = True
    if not pair.overlap.is_permutation:
        entries = pair.overlap.entries
        entries_ok = bool(np.all(entries >= -1e-12) and np.all(entries <= 1 + 1e-12))
    checks.append(ValidationCheck("overlap entries in [0, 1]", entries_ok))

    rows = pair.overlap.row_sums()
    cols = pair.overlap.col_sums()
    checks.append(
        ValidationCheck(
            "overlap row sums <= 1", bool(np.all(rows <= 1 + SUM_TOL)), f"max {rows.max():.12g}"
        )
    )
    checks.append(
        ValidationCheck(
            "overlap column sums <= 1",
            bool(np.all(cols <= 1 + SUM_TOL)),
            f"max {cols.max():.12g}",
        )
    )
    if pair.overlap.is_identity:
        checks.append(
            ValidationCheck("identity overlap is square", len(pair.plus) == len(pair.minus))
        )

    edge_minus = np.asarray(pair.meta.get("edge_weight_minus", np.zeros(len(rows))))
    edge_plus = np.asarray(pair.meta.get("edge_weight_plus", np.zeros(len(cols))))
    interior_rows = edge_minus <= edge_tol
    interior_cols = edge_plus <= edge_tol

    row_dev = float(np.max(np.abs(rows[interior_rows] - 1.0))) if interior_rows.any() else 0.0
    col_dev = float(np.max(np.abs(cols[interior_cols] - 1.0))) if interior_cols.any() else 0.0

    for check in checks:
        if not check.passed:
            message = f"pair validation: {check.name} fails {check.detail}".rstrip()
            warnings.warn(message, stacklevel=2)

    return ValidationReport(
        checks=checks,
        max_row_deviation=row_dev,
        max_col_deviation=col_dev,
        edge_rows=np.flatnonzero(~interior_rows).tolist(),
    )

"""Single-mode truncated Fock space: ladder and quadrature operators, HG states.

Units are hbar = 1.  The quadratures follow the Hermite-Gaussian convention

    X = sigma0 (a + a^dag),    P = (a - a^dag) / (2i sigma0),

so that the Fock state |n> has the position wavefunction ``hermite_wavefunction``
and variances <dP^2> = (2n+1)/(4 sigma0^2), <dX^2> = (2n+1) sigma0^2.

Any finite truncation breaks [a, a^dag] = 1 on the top level, which spoils
[X, P] = i on the top two levels.  States handed to the physics routines must
therefore keep their support at least ``EDGE_LEVELS`` below ``dim``.
"""
from __future__ import annotations

from dataclasses import dataclass

import numpy as np

from .errors import (
    DimensionMismatchError,
    DomainError,
    InvalidSpaceError,
    TruncationEdgeError,
)

EDGE_LEVELS = 2
MODE_BUFFER = 6
HERMITIAN_TOL = 1e-12
NORM_TOL = 1e-12
SUPPORT_TOL = 1e-12


@dataclass(frozen=True)
class FockSpace:
    """Truncated single-mode space with ``dim`` levels and Gaussian width ``sigma0``."""

    dim: int
    sigma0: float = 1.0

    def __post_init__(self):
        if int(self.dim) != self.dim or self.dim < 2:
            raise InvalidSpaceError(f"dim must be an integer >= 2, got {self.dim}")
        if not np.isfinite(self.sigma0) or self.sigma0 <= 0:
            raise InvalidSpaceError(f"sigma0 must be positive, got {self.sigma0}")

    @classmethod
    def for_mode(cls, n: int, sigma0: float = 1.0, buffer: int = MODE_BUFFER) -> "FockSpace":
        """Smallest space that holds HG mode ``n`` with the standard buffer."""
        if n < 0:
            raise DomainError(f"mode order must be >= 0, got {n}")
        return cls(n + buffer, sigma0)

    def padded(self, extra: int) -> "FockSpace":
        return FockSpace(self.dim + int(extra), self.sigma0)

    @property
    def safe_levels(self) -> int:
        """Number of low levels on which the canonical algebra is exact."""
        return self.dim - EDGE_LEVELS


def _check_space(a: FockSpace, b: FockSpace):
    if a != b:
        raise DimensionMismatchError(f"space mismatch: {a} vs {b}")


@dataclass(frozen=True, eq=False)
class OperatorMatrix:
    """Dense complex operator on a :class:`FockSpace`."""

    space: FockSpace
    entries: np.ndarray

    def __post_init__(self):
        m = np.array(self.entries, dtype=complex)
        if m.shape != (self.space.dim, self.space.dim):
            raise DimensionMismatchError(
                f"operator shape {m.shape} does not match dim {self.space.dim}"
            )
        m.setflags(write=False)
        object.__setattr__(self, "entries", m)

    @property
    def dag(self) -> "OperatorMatrix":
        return OperatorMatrix(self.space, self.entries.conj().T)

    def hermiticity_defect(self) -> float:
        return float(np.max(np.abs(self.entries - self.entries.conj().T)))

    def is_hermitian(self, tol: float = HERMITIAN_TOL) -> bool:
        scale = max(1.0, float(np.max(np.abs(self.entries))))
        return self.hermiticity_defect() < tol * scale

    def __matmul__(self, other):
        if isinstance(other, OperatorMatrix):
            _check_space(self.space, other.space)
            return OperatorMatrix(self.space, self.entries @ other.entries)
        if isinstance(other, PointerState):
            _check_space(self.space, other.space)
            return PointerState(self.space, self.entries @ other.amplitudes)
        return NotImplemented

    def __add__(self, other: "OperatorMatrix") -> "OperatorMatrix":
        _check_space(self.space, other.space)
        return OperatorMatrix(self.space, self.entries + other.entries)

    def __sub__(self, other: "OperatorMatrix") -> "OperatorMatrix":
        _check_space(self.space, other.space)
        return OperatorMatrix(self.space, self.entries - other.entries)

    def __mul__(self, c) -> "OperatorMatrix":
        return OperatorMatrix(self.space, c * self.entries)

    __rmul__ = __mul__

    def __neg__(self) -> "OperatorMatrix":
        return OperatorMatrix(self.space, -self.entries)


@dataclass(frozen=True, eq=False)
class PointerState:
    """Complex amplitude vector on a :class:`FockSpace`.

    ``normalized`` is an assertion made by the constructor's caller; when it is
    set the norm is checked against ``NORM_TOL``.
    """

    space: FockSpace
    amplitudes: np.ndarray
    normalized: bool = False

    def __post_init__(self):
        v = np.array(self.amplitudes, dtype=complex).reshape(-1)
        if v.shape != (self.space.dim,):
            raise DimensionMismatchError(
                f"state length {v.shape[0]} does not match dim {self.space.dim}"
            )
        if self.normalized and abs(np.vdot(v, v).real - 1.0) > NORM_TOL:
            raise DomainError(f"state flagged normalized has norm^2 {np.vdot(v, v).real!r}")
        v.setflags(write=False)
        object.__setattr__(self, "amplitudes", v)

    @property
    def norm(self) -> float:
        return float(np.linalg.norm(self.amplitudes))

    def normalize(self) -> "PointerState":
        nrm = self.norm
        if nrm == 0:
            raise DomainError("cannot normalize the zero vector")
        return PointerState(self.space, self.amplitudes / nrm, normalized=True)

    def inner(self, other: "PointerState") -> complex:
        """<self|other>."""
        _check_space(self.space, other.space)
        return complex(np.vdot(self.amplitudes, other.amplitudes))

    @property
    def at_truncation_edge(self) -> bool:
        top = self.amplitudes[self.space.dim - EDGE_LEVELS:]
        return bool(np.any(np.abs(top) > SUPPORT_TOL * max(self.norm, 1.0)))

    def require_safe(self):
        if self.at_truncation_edge:
            raise TruncationEdgeError(
                f"state has support on the top {EDGE_LEVELS} of {self.space.dim} levels"
            )
        return self

    def __add__(self, other: "PointerState") -> "PointerState":
        _check_space(self.space, other.space)
        return PointerState(self.space, self.amplitudes + other.amplitudes)

    def __sub__(self, other: "PointerState") -> "PointerState":
        _check_space(self.space, other.space)
        return PointerState(self.space, self.amplitudes - other.amplitudes)

    def __mul__(self, c) -> "PointerState":
        return PointerState(self.space, c * self.amplitudes)

    __rmul__ = __mul__


def ladder_operators(space: FockSpace) -> tuple[OperatorMatrix, OperatorMatrix]:
    """Annihilation and creation operators, ``a[n-1, n] = sqrt(n)``."""
    a = np.diag(np.sqrt(np.arange(1, space.dim, dtype=float)), 1)
    return OperatorMatrix(space, a), OperatorMatrix(space, a.T)


def quadrature_operators(space: FockSpace) -> tuple[OperatorMatrix, OperatorMatrix]:
    """Momentum and position operators ``(P, X)``."""
    a, ad = ladder_operators(space)
    s = space.sigma0
    P = (a - ad) * (1.0 / (2j * s))
    X = (a + ad) * s
    return P, X


def number_operator(space: FockSpace) -> OperatorMatrix:
    return OperatorMatrix(space, np.diag(np.arange(space.dim, dtype=float)))


def identity(space: FockSpace) -> OperatorMatrix:
    return OperatorMatrix(space, np.eye(space.dim))


def fock_state(space: FockSpace, n: int) -> PointerState:
    """Basis state |n>.  ``n = dim - 1`` is allowed; check ``at_truncation_edge``."""
    if not 0 <= n < space.dim:
        raise IndexError(f"Fock level {n} outside 0..{space.dim - 1}")
    v = np.zeros(space.dim, dtype=complex)
    v[n] = 1.0
    return PointerState(space, v, normalized=True)


def expectation(op: OperatorMatrix, state: PointerState) -> complex:
    _check_space(op.space, state.space)
    psi = state.amplitudes
    return complex(np.vdot(psi, op.entries @ psi))


def variance(op: OperatorMatrix, state: PointerState) -> float:
    """<op^2> - <op>^2 for Hermitian ``op``."""
    if not op.is_hermitian():
        raise DomainError("variance requires a Hermitian operator")
    _check_space(op.space, state.space)
    psi = state.amplitudes
    phi = op.entries @ psi
    mean = np.vdot(psi, phi).real
    return float(np.vdot(phi, phi).real - mean**2)


def commutator_expectation(A: OperatorMatrix, B: OperatorMatrix, state: PointerState) -> complex:
    """<[A, B]> = <AB - BA>."""
    _check_space(A.space, B.space)
    _check_space(A.space, state.space)
    psi = state.amplitudes
    Apsi, Bpsi = A.entries @ psi, B.entries @ psi
    # <psi|AB|psi> - <psi|BA|psi> using Hermitian-conjugate bra vectors
    AdPsi = A.entries.conj().T @ psi
    BdPsi = B.entries.conj().T @ psi
    return complex(np.vdot(AdPsi, Bpsi) - np.vdot(BdPsi, Apsi))


def anticommutator_expectation(A: OperatorMatrix, B: OperatorMatrix, state: PointerState) -> complex:
    _check_space(A.space, B.space)
    _check_space(A.space, state.space)
    psi = state.amplitudes
    AdPsi = A.entries.conj().T @ psi
    BdPsi = B.entries.conj().T @ psi
    return complex(np.vdot(AdPsi, B.entries @ psi) + np.vdot(BdPsi, A.entries @ psi))


def hermite_functions(n_max: int, sigma0: float, x) -> np.ndarray:
    """All HG wavefunctions psi_0..psi_{n_max} on ``x``, shape ``(n_max+1, len(x))``.

    Uses the normalized three-term recurrence
    psi_{k+1} = sqrt(2/(k+1)) xi psi_k - sqrt(k/(k+1)) psi_{k-1}, xi = x/(sqrt(2) sigma0),
    which never forms H_n or n! explicitly and so stays finite for large n.
    """
    if n_max < 0:
        raise DomainError(f"order must be >= 0, got {n_max}")
    if sigma0 <= 0:
        raise DomainError(f"sigma0 must be positive, got {sigma0}")
    x = np.atleast_1d(np.asarray(x, dtype=float))
    xi = x / (np.sqrt(2.0) * sigma0)
    out = np.empty((n_max + 1,) + x.shape)
    out[0] = (2.0 * np.pi * sigma0**2) ** -0.25 * np.exp(-(x**2) / (4.0 * sigma0**2))
    if n_max >= 1:
        out[1] = np.sqrt(2.0) * xi * out[0]
    for k in range(1, n_max):
        out[k + 1] = np.sqrt(2.0 / (k + 1)) * xi * out[k] - np.sqrt(k / (k + 1)) * out[k - 1]
    return out


def hermite_wavefunction(n: int, sigma0: float, x):
    """Position wavefunction psi_n(x) of the n-th HG mode (real)."""
    vals = hermite_functions(n, sigma0, x)[n]
    return float(vals[0]) if np.ndim(x) == 0 else vals


def position_wavefunction(state: PointerState, x) -> np.ndarray:
    """<x|psi> for a Fock-basis state, expanded in HG wavefunctions."""
    basis = hermite_functions(state.space.dim - 1, state.space.sigma0, x)
    return state.amplitudes @ basis

"""Post-selected weak measurement of a displacement g1 and a kick g2.

A two-level system (basis |H>, |V>) couples to the transverse pointer through
exp(-i (g1 P + g2 X) (x) A).  After post-selection on <f| the pointer is, to first
order,

    |psi_f> = |n> - (g1~ |psi_P> + i g2~ |psi_X>) / 2,

with the normalized parameters g1~ = A_w sqrt(2n+1) g1/sigma0 and
g2~ = 2 A_w sqrt(2n+1) sigma0 g2.  First-order states are left unnormalized;
their norm differs from one only at second order.
"""
from __future__ import annotations

import warnings
from dataclasses import dataclass

import numpy as np
from scipy.linalg import expm

from .errors import DegenerateError, DomainError, TruncationEdgeError, WeakRegimeError
from .estimation import GeneratorPair, QuantumGeometry, quantum_geometry
from .fock import (
    FockSpace,
    PointerState,
    fock_state,
    quadrature_operators,
)

WEAK_ERROR = 0.05
WEAK_WARN = 0.01
AW_WARN = 1e6
ORTHOGONAL_TOL = 1e-12

PROJECTOR_A = np.diag([1.0, 0.0]).astype(complex)


@dataclass(frozen=True, eq=False)
class TwoLevelState:
    amplitudes: np.ndarray

    def __post_init__(self):
        v = np.array(self.amplitudes, dtype=complex).reshape(-1)
        if v.shape != (2,):
            raise DomainError("two-level state needs exactly two amplitudes")
        if abs(np.vdot(v, v).real - 1.0) > 1e-12:
            raise DomainError(f"two-level state must be unit norm, got {np.vdot(v, v).real!r}")
        v.setflags(write=False)
        object.__setattr__(self, "amplitudes", v)

    @classmethod
    def from_unnormalized(cls, v) -> "TwoLevelState":
        v = np.asarray(v, dtype=complex)
        return cls(v / np.linalg.norm(v))


def diagonal_preselection() -> TwoLevelState:
    """(|H> + |V>)/sqrt(2)."""
    return TwoLevelState(np.array([1.0, 1.0]) / np.sqrt(2.0))


def angle_postselection(epsilon: float) -> TwoLevelState:
    """cos(pi/4 - eps/2)|H> - sin(pi/4 - eps/2)|V>, nearly orthogonal to the diagonal state."""
    t = np.pi / 4 - epsilon / 2
    return TwoLevelState(np.array([np.cos(t), -np.sin(t)]))


def postselection_for_weak_value(A_w: complex) -> TwoLevelState:
    """Post-selection giving weak value ``A_w`` for the diagonal pre-selection and A = |H><H|."""
    if A_w == 0:
        raise DomainError("zero weak value is not reachable with a projector observable")
    # A_w = f_H* / (f_H* + f_V*)  =>  f_V* = f_H* (1/A_w - 1)
    return TwoLevelState.from_unnormalized([1.0, np.conj(1.0 / A_w - 1.0)])


def weak_value(pre: TwoLevelState, post: TwoLevelState, A=PROJECTOR_A) -> complex:
    """<f|A|i> / <f|i>."""
    A = np.asarray(A, dtype=complex)
    if A.shape != (2, 2) or np.max(np.abs(A - A.conj().T)) > 1e-12:
        raise DomainError("system observable must be a 2x2 Hermitian matrix")
    overlap = np.vdot(post.amplitudes, pre.amplitudes)
    if abs(overlap) <= ORTHOGONAL_TOL:
        raise ZeroDivisionError(
            f"post-selection orthogonal to pre-selection (|<f|i>| = {abs(overlap):.3e})"
        )
    A_w = complex(np.vdot(post.amplitudes, A @ pre.amplitudes) / overlap)
    if abs(A_w) > AW_WARN:
        warnings.warn(f"weak value {abs(A_w):.3e} is extreme; first-order expansion fragile")
    return A_w


def angle_weak_value(epsilon: float) -> float:
    """Closed form (cot(eps/2) + 1)/2 for the angle post-selection."""
    return 0.5 * (1.0 / np.tan(epsilon / 2) + 1.0)


@dataclass(frozen=True)
class NormalizedParams:
    g1_tilde: complex
    g2_tilde: complex


def pointer_spreads(n: int, sigma0: float) -> tuple[float, float]:
    """Standard deviations of P and X on |n>."""
    return np.sqrt(2 * n + 1) / (2 * sigma0), np.sqrt(2 * n + 1) * sigma0


def check_weakness(n: int, sigma0: float, g1: float, g2: float) -> float:
    """Largest of |g1| dP and |g2| dX; raise above ``WEAK_ERROR``, warn above ``WEAK_WARN``."""
    sp, sx = pointer_spreads(n, sigma0)
    r = max(abs(g1) * sp, abs(g2) * sx)
    if r >= WEAK_ERROR:
        raise WeakRegimeError(f"coupling not weak: max(|g1| dP, |g2| dX) = {r:.3g}")
    if r > WEAK_WARN:
        warnings.warn(f"coupling only marginally weak: {r:.3g}")
    return r


@dataclass(frozen=True, eq=False)
class WeakScheme:
    """Pointer mode |n>, selections, observable and the two couplings (SI units)."""

    n: int
    space: FockSpace
    pre: TwoLevelState
    post: TwoLevelState
    system_op: np.ndarray = PROJECTOR_A
    g1: float = 0.0
    g2: float = 0.0
    epsilon: float | None = None

    def __post_init__(self):
        A = np.array(self.system_op, dtype=complex)
        if A.shape != (2, 2) or np.max(np.abs(A - A.conj().T)) > 1e-12:
            raise DomainError("system observable must be a 2x2 Hermitian matrix")
        A.setflags(write=False)
        object.__setattr__(self, "system_op", A)
        _check_mode(self.n, self.space)
        check_weakness(self.n, self.space.sigma0, self.g1, self.g2)

    @property
    def weak_value(self) -> complex:
        return weak_value(self.pre, self.post, self.system_op)

    @property
    def normalized(self) -> NormalizedParams:
        return normalized_params(self.n, self.space.sigma0, self.weak_value, self.g1, self.g2)

    def with_couplings(self, g1: float, g2: float) -> "WeakScheme":
        return WeakScheme(self.n, self.space, self.pre, self.post, self.system_op, g1, g2, self.epsilon)


def normalized_params(n: int, sigma0: float, A_w: complex, g1: float, g2: float) -> NormalizedParams:
    r = A_w * np.sqrt(2 * n + 1)
    return NormalizedParams(complex(r * g1 / sigma0), complex(2.0 * r * sigma0 * g2))


def physical_couplings(n: int, sigma0: float, A_w: complex, g1_tilde: float, g2_tilde: float):
    """Inverse of :func:`normalized_params` using |A_w| (real normalized inputs)."""
    r = abs(A_w) * np.sqrt(2 * n + 1)
    return g1_tilde * sigma0 / r, g2_tilde / (2.0 * r * sigma0)


def standard_scheme(
    n: int,
    epsilon: float = np.radians(5.0),
    sigma0: float = 1.0,
    g1: float = 0.0,
    g2: float = 0.0,
    dim: int | None = None,
) -> WeakScheme:
    """Diagonal pre-selection, angle post-selection and A = |H><H|."""
    space = FockSpace(dim, sigma0) if dim else FockSpace.for_mode(n, sigma0)
    return WeakScheme(
        n, space, diagonal_preselection(), angle_postselection(epsilon), PROJECTOR_A, g1, g2, epsilon
    )


def scheme_with_weak_value(
    n: int, A_w: complex, sigma0: float = 1.0, g1: float = 0.0, g2: float = 0.0, dim: int | None = None
) -> WeakScheme:
    space = FockSpace(dim, sigma0) if dim else FockSpace.for_mode(n, sigma0)
    return WeakScheme(
        n, space, diagonal_preselection(), postselection_for_weak_value(A_w), PROJECTOR_A, g1, g2
    )


def _check_mode(n: int, space: FockSpace):
    if n < 0:
        raise DomainError(f"mode order must be >= 0, got {n}")
    if n + 1 >= space.safe_levels:
        raise TruncationEdgeError(
            f"level {n + 1} lies within the top {space.dim - space.safe_levels} of {space.dim}"
        )


def generated_states(n: int, space: FockSpace) -> tuple[PointerState, PointerState]:
    """Unit states along P|n> and X|n>: (sqrt(n)|n-1> -/+ sqrt(n+1)|n+1>)/sqrt(2n+1)."""
    _check_mode(n, space)
    vp = np.zeros(space.dim, dtype=complex)
    vx = np.zeros(space.dim, dtype=complex)
    r = np.sqrt(2 * n + 1)
    if n > 0:
        vp[n - 1] = vx[n - 1] = np.sqrt(n) / r
    vp[n + 1] = -np.sqrt(n + 1) / r
    vx[n + 1] = np.sqrt(n + 1) / r
    return PointerState(space, vp, normalized=True), PointerState(space, vx, normalized=True)


def orthogonal_projector_states(n: int, space: FockSpace) -> tuple[PointerState, PointerState]:
    """States orthogonal to |psi_X> and to |psi_P> within span{|n-1>, |n+1>}."""
    if n == 0:
        raise DegenerateError("no two-dimensional n +/- 1 subspace for the Gaussian mode")
    _check_mode(n, space)
    r = np.sqrt(2 * n + 1)
    vxp = np.zeros(space.dim, dtype=complex)
    vpp = np.zeros(space.dim, dtype=complex)
    vxp[n - 1], vxp[n + 1] = np.sqrt(n + 1) / r, -np.sqrt(n) / r
    vpp[n - 1], vpp[n + 1] = np.sqrt(n + 1) / r, np.sqrt(n) / r
    return PointerState(space, vxp, normalized=True), PointerState(space, vpp, normalized=True)


def first_order_pointer(n: int, space: FockSpace, g1_tilde: complex, g2_tilde: complex) -> PointerState:
    """|n> - (g1~ |psi_P> + i g2~ |psi_X>)/2, unnormalized."""
    psi_p, psi_x = generated_states(n, space)
    base = fock_state(space, n)
    return base - 0.5 * (g1_tilde * psi_p + 1j * g2_tilde * psi_x)


def final_pointer_first_order(scheme: WeakScheme) -> PointerState:
    g = scheme.normalized
    return first_order_pointer(scheme.n, scheme.space, g.g1_tilde, g.g2_tilde)


def joint_unitary(scheme: WeakScheme) -> np.ndarray:
    """exp(-i (g1 P + g2 X) (x) A) on system (x) pointer, system index slow."""
    P, X = quadrature_operators(scheme.space)
    G = scheme.g1 * P.entries + scheme.g2 * X.entries
    return expm(-1j * np.kron(scheme.system_op, G))


def final_pointer_exact(scheme: WeakScheme) -> tuple[PointerState, float]:
    """Exact post-selected pointer (normalized) and the post-selection probability."""
    dim = scheme.space.dim
    psi_in = np.kron(scheme.pre.amplitudes, fock_state(scheme.space, scheme.n).amplitudes)
    out = joint_unitary(scheme) @ psi_in
    pointer = scheme.post.amplitudes.conj() @ out.reshape(2, dim)
    prob = float(np.vdot(pointer, pointer).real)
    if prob <= 0:
        raise ZeroDivisionError("post-selection probability vanished")
    return PointerState(scheme.space, pointer / np.sqrt(prob), normalized=True), prob


def align_phase(state: PointerState, reference: PointerState) -> PointerState:
    """Normalize ``state`` and rotate its global phase so <reference|state> is real positive."""
    s = state.normalize()
    ov = reference.inner(s)
    phase = ov / abs(ov) if abs(ov) > 0 else 1.0
    return PointerState(s.space, s.amplitudes / phase, normalized=True)


def first_order_defect(scheme: WeakScheme) -> float:
    """Distance between the exact and first-order pointers, both normalized and phase aligned."""
    exact, _ = final_pointer_exact(scheme)
    ref = fock_state(scheme.space, scheme.n)
    a = align_phase(exact, ref)
    b = align_phase(final_pointer_first_order(scheme), ref)
    return float(np.linalg.norm(a.amplitudes - b.amplitudes))


def projection_probability(state: PointerState, projector_state: PointerState) -> float:
    """|<projector_state|state>|^2."""
    return float(abs(projector_state.inner(state)) ** 2)


def projection_probabilities_first_order(n: int, g1_tilde: complex, g2_tilde: complex) -> tuple[float, float]:
    """n(n+1)|g~|^2/(2n+1)^2 for the two non-orthogonal projectors."""
    c = n * (n + 1) / (2 * n + 1) ** 2
    return c * abs(g1_tilde) ** 2, c * abs(g2_tilde) ** 2


def scheme_geometry(scheme: WeakScheme) -> QuantumGeometry:
    """Leading-order geometry of the post-selected pointer family.

    The pointer generators are A_w P and A_w X acting on |n>, so every tensor is
    the post-selection-free result scaled by |A_w|^2 and the criterion is unchanged.
    """
    P, X = quadrature_operators(scheme.space)
    base = quantum_geometry(GeneratorPair(P, X, fock_state(scheme.space, scheme.n)))
    w = abs(scheme.weak_value) ** 2
    return QuantumGeometry(
        base.qfim * w,
        base.qgt * w,
        base.berry * w,
        base.qmec,
        base.normalized_curvature,
        base.compatible,
    )

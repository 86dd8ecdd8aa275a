"""Paraxial propagation of HG beams and the experiment-frame parameterization.

Free propagation over z is U(z) = exp(-i P^2 z / (2k)).  In the Heisenberg
picture P is conserved and X(z) = X - (z/k) P.  The Rayleigh range is
b = 2 k sigma0^2.

U(z) spreads a low Fock state over many levels once z is comparable to b (at
z/b ~ 3 a mode that starts below level 24 reaches level ~400), so a plain
truncation at the working dimension is badly wrong there.  ``propagation_unitary``
exponentiates in a padded space and returns the leading block.
"""
from __future__ import annotations

from dataclasses import dataclass
from functools import lru_cache

import numpy as np

from .errors import DegenerateError, DomainError
from .fock import EDGE_LEVELS, FockSpace, OperatorMatrix, hermite_functions, quadrature_operators
from .weak import WeakScheme, final_pointer_first_order, orthogonal_projector_states, angle_weak_value

PAD_BASE = 64
PAD_QUADRATIC = 60


@dataclass(frozen=True)
class ExperimentGeometry:
    """Wavelength, waist width and the two optical path lengths (all meters)."""

    wavelength: float = 780e-9
    sigma0: float = 120e-6
    z1: float = -0.272
    z2: float = 0.64

    def __post_init__(self):
        if self.wavelength <= 0 or self.sigma0 <= 0:
            raise DomainError("wavelength and sigma0 must be positive")

    @property
    def k(self) -> float:
        return 2.0 * np.pi / self.wavelength

    @property
    def z0(self) -> float:
        return self.z1 + self.z2

    @property
    def b(self) -> float:
        return 2.0 * self.k * self.sigma0**2


@dataclass(frozen=True)
class BeamGeometry:
    sigma_z: float
    gouy: float
    q_inv: complex


def default_padding(z: float, b: float) -> int:
    """Extra Fock levels needed to represent U(z) on a low block to ~1e-11."""
    t = abs(z) / b
    return int(PAD_BASE + np.ceil(PAD_QUADRATIC * t * t))


@lru_cache(maxsize=32)
def _p2_eigensystem(dim: int, sigma0: float):
    P, _ = quadrature_operators(FockSpace(dim, sigma0))
    w, V = np.linalg.eigh(P.entries @ P.entries)
    return w, V


def _unitary_full(z: float, k: float, dim: int, sigma0: float) -> np.ndarray:
    w, V = _p2_eigensystem(dim, sigma0)
    return (V * np.exp(-0.5j * w * z / k)) @ V.conj().T


def propagation_unitary(
    z: float, geom: ExperimentGeometry, space: FockSpace, padding: int | None = None
) -> OperatorMatrix:
    """Free-propagation operator on ``space``.

    With ``padding=0`` this is the exponential of the truncated P^2 matrix, exactly
    unitary and a one-parameter group but physically inaccurate when z/b is not
    small.  Otherwise the exponential is taken in a space larger by ``padding``
    levels (default from :func:`default_padding`) and the leading block returned;
    that block is accurate but leaks norm once the beam leaves the working space.
    """
    if padding is None:
        padding = default_padding(z, geom.b)
    big = space.dim + int(padding)
    U = _unitary_full(float(z), geom.k, big, space.sigma0)
    return OperatorMatrix(space, U[: space.dim, : space.dim])


def unitarity_defect(U: OperatorMatrix) -> float:
    """max |U^dag U - I| on the block at least two levels below truncation."""
    m = U.space.dim - EDGE_LEVELS
    G = U.entries.conj().T @ U.entries
    return float(np.max(np.abs(G[:m, :m] - np.eye(m))))


def beam_geometry(z: float, geom: ExperimentGeometry, sigma0: float | None = None) -> BeamGeometry:
    """Width sigma(z), Gouy phase chi(z) = atan2(z, b) and curvature 1/q(z) = z/(z^2 + b^2)."""
    s0 = geom.sigma0 if sigma0 is None else sigma0
    b = 2.0 * geom.k * s0**2
    sigma_z = s0 * np.sqrt(1.0 + (z / b) ** 2)
    return BeamGeometry(float(sigma_z), float(np.arctan2(z, b)), complex(z / (z * z + b * b)))


def hg_beam_profile(n: int, x, z: float, geom: ExperimentGeometry) -> np.ndarray:
    """Propagated HG_n field u_n(x, z) with width, curvature and Gouy phase."""
    bg = beam_geometry(z, geom)
    s0 = geom.sigma0
    shape = hermite_functions(n, s0, s0 * np.asarray(x, float) / bg.sigma_z)[n]
    phase = np.exp(0.5j * geom.k * bg.q_inv.real * np.asarray(x, float) ** 2 - 1j * (n + 0.5) * bg.gouy)
    return np.sqrt(s0 / bg.sigma_z) * shape * phase


def gouy_overlap(m: int, n: int, z: float, geom: ExperimentGeometry, points_per_sigma: int = 200) -> complex:
    """<m|U(z)|n> from the position-space profile, by trapezoid quadrature."""
    bg = beam_geometry(z, geom)
    half = 8.0 * np.sqrt(2 * max(m, n) + 1) * bg.sigma_z
    x = np.linspace(-half, half, int(2 * half / geom.sigma0 * points_per_sigma) + 1)
    integrand = hermite_functions(m, geom.sigma0, x)[m] * hg_beam_profile(n, x, z, geom)
    return complex(np.trapezoid(integrand, x))


def heisenberg_quadratures(
    z: float, geom: ExperimentGeometry, space: FockSpace
) -> tuple[OperatorMatrix, OperatorMatrix]:
    """(P(z), X(z)) = (P, X - (z/k) P)."""
    P, X = quadrature_operators(space)
    return P, X - P * (z / geom.k)


def heisenberg_defect(z: float, geom: ExperimentGeometry, space: FockSpace, padding: int | None = None) -> float:
    """Distance between U X U^dag and X - (z/k)P on the working block, in units of sigma0.

    The conjugation is done in the padded space so the working block sees no
    truncation artefacts.
    """
    if padding is None:
        padding = default_padding(z, geom.b)
    big = FockSpace(space.dim + int(padding), space.sigma0)
    U = _unitary_full(float(z), geom.k, big.dim, big.sigma0)
    P, X = quadrature_operators(big)
    lhs = U @ X.entries @ U.conj().T
    rhs = X.entries - (z / geom.k) * P.entries
    m = space.dim - EDGE_LEVELS
    return float(np.max(np.abs(lhs[:m, :m] - rhs[:m, :m])) / space.sigma0)


def experiment_params(d: float, phi: float, geom: ExperimentGeometry) -> tuple[float, float]:
    """Displacement d and tilt phi at the mirror -> (g1, g2) at the waist frame."""
    return d + geom.z1 * phi, geom.k * phi


def experiment_params_inverse(g1: float, g2: float, geom: ExperimentGeometry) -> tuple[float, float]:
    return g1 - geom.z1 / geom.k * g2, g2 / geom.k


def modulation_amplitudes(d_amp: float, phi_amp: float, geom: ExperimentGeometry) -> tuple[float, float]:
    """Line amplitudes of g1, g2 when d and phi are driven in phase quadrature."""
    return float(np.hypot(d_amp, geom.z1 * phi_amp)), geom.k * phi_amp


def _joint_exp(A: np.ndarray, G: np.ndarray) -> np.ndarray:
    """exp(-i A (x) G) for Hermitian A (2x2) and G, through both eigenbases."""
    a, Va = np.linalg.eigh(A)
    w, Vg = np.linalg.eigh(G)
    out = np.zeros((2 * G.shape[0],) * 2, dtype=complex)
    for ak, vk in zip(a, Va.T):
        E = (Vg * np.exp(-1j * ak * w)) @ Vg.conj().T
        out += np.kron(np.outer(vk, vk.conj()), E)
    return out


@dataclass(frozen=True)
class EquivalenceReport:
    operator_defect: float
    state_defect: float
    probability_defect: float


def experiment_unitary_equivalence(
    scheme: WeakScheme, geom: ExperimentGeometry, padding: int | None = None
) -> EquivalenceReport:
    """Check the experiment-frame identities in a padded space.

    ``operator_defect``: max |U(z2) U_mirror U(z2)^dag - exp(-i (g1 P(z0) + g2 X(z0)) (x) A)|
    on the working block of each system sector, with U_mirror = exp(-i (d P + k phi X) (x) A).
    ``state_defect``: the first-order experiment-frame state against U(z0) applied to
    the waist-frame first-order pointer.
    ``probability_defect``: projection probabilities in the waist frame against the
    same probabilities with propagated pointer and projector states.
    """
    if scheme.space.sigma0 != geom.sigma0:
        raise DomainError("scheme and geometry disagree on sigma0")
    dim = scheme.space.dim
    if padding is None:
        padding = max(default_padding(geom.z2, geom.b), default_padding(geom.z0, geom.b))
    big = FockSpace(dim + int(padding), geom.sigma0)
    P, X = (op.entries for op in quadrature_operators(big))
    k = geom.k
    d, phi = experiment_params_inverse(scheme.g1, scheme.g2, geom)
    A = np.asarray(scheme.system_op)

    U2 = _unitary_full(geom.z2, k, big.dim, big.sigma0)
    mirror = _joint_exp(A, d * P + k * phi * X)
    U2j = np.kron(np.eye(2), U2)
    lhs = U2j @ mirror @ U2j.conj().T
    rhs = _joint_exp(A, scheme.g1 * P + scheme.g2 * (X - geom.z0 / k * P))
    op_def = 0.0
    for i in range(2):
        for j in range(2):
            blk = slice(i * big.dim, i * big.dim + dim), slice(j * big.dim, j * big.dim + dim)
            op_def = max(op_def, float(np.max(np.abs(lhs[blk] - rhs[blk]))))

    # first-order states: experiment frame vs propagated waist frame
    U0 = _unitary_full(geom.z0, k, big.dim, big.sigma0)
    A_w = scheme.weak_value
    base = np.zeros(big.dim, dtype=complex)
    base[scheme.n] = 1.0
    un = U0 @ base
    X0 = X - geom.z0 / k * P
    u_f = un - 1j * A_w * (scheme.g1 * (P @ un) + scheme.g2 * (X0 @ un))
    psi_f = np.zeros(big.dim, dtype=complex)
    psi_f[:dim] = final_pointer_first_order(scheme).amplitudes
    state_def = float(np.max(np.abs(u_f - U0 @ psi_f)))

    prob_def = 0.0
    if scheme.n >= 1:
        for proj in orthogonal_projector_states(scheme.n, scheme.space):
            v = np.zeros(big.dim, dtype=complex)
            v[:dim] = proj.amplitudes
            waist = abs(np.vdot(v, psi_f)) ** 2
            moved = abs(np.vdot(U0 @ v, u_f)) ** 2
            prob_def = max(prob_def, abs(waist - moved))
    return EquivalenceReport(op_def, state_def, prob_def)


@dataclass(frozen=True)
class MinDetectable:
    g1: float
    g2: float
    d: float
    phi: float


def effective_epsilon(epsilon: float, weak_value_model: str = "small_angle") -> float:
    """1/A_w used in the detection formulas: eps itself, or the exact (cot(eps/2)+1)/2 inverse."""
    if weak_value_model == "small_angle":
        return epsilon
    if weak_value_model == "exact":
        return 1.0 / angle_weak_value(epsilon)
    raise DomainError(f"unknown weak-value model {weak_value_model!r}")


def min_detectable_displacement_tilt(
    n: int,
    nu: float,
    epsilon: float,
    sigma0: float,
    geom: ExperimentGeometry,
    weak_value_model: str = "small_angle",
) -> MinDetectable:
    """Shot-noise limited minimum detectable g1, g2 and the mirror d, phi (SNR = 1).

    dg1 = eps sigma0 sqrt((2n+1)/(n(n+1) nu)) / 2 and dg2 = dg1 / (2 sigma0^2);
    d and phi follow by linear error propagation through the path-length mapping.
    """
    if n < 1:
        raise DegenerateError("minimum detectable values need n >= 1")
    if nu <= 0:
        raise DomainError("nu must be positive")
    e = effective_epsilon(epsilon, weak_value_model)
    root = np.sqrt((2 * n + 1) / (n * (n + 1) * nu))
    dg1 = 0.5 * e * sigma0 * root
    dg2 = 0.25 * e * root / sigma0
    dd = np.hypot(dg1, geom.z1 / geom.k * dg2)
    return MinDetectable(float(dg1), float(dg2), float(dd), float(dg2 / geom.k))

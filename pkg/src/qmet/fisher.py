"""Classical Fisher information of pointer read-outs.

Two read-outs are modelled: position-resolved (direct) imaging and projection onto
the states orthogonal to the cross-parameter generated states.  Each has a
closed form at leading order and a finite-difference evaluation of

    F_ij = sum_l (d_i p_l)(d_j p_l) / p_l

that serves as its oracle.
"""
from __future__ import annotations

from dataclasses import dataclass, field
from typing import Callable

import numpy as np

from .errors import CoverageError, DegenerateError, DomainError
from .estimation import BoundPoint
from .fock import FockSpace, OperatorMatrix, PointerState, hermite_functions, identity
from .weak import (
    WeakScheme,
    final_pointer_exact,
    first_order_pointer,
    orthogonal_projector_states,
    physical_couplings,
)

PROB_FLOOR = 1e-12
PSD_TOL = 1e-10
COMPLETE_TOL = 1e-8
DEFAULT_DG = 1e-4
GRID_SIGMAS = 6.0
GRID_STEP_FRACTION = 1.0 / 50.0

StateFamily = Callable[[float, float], PointerState]


@dataclass(frozen=True, eq=False)
class Povm:
    elements: tuple
    completeness_defect: float = field(init=False)

    def __post_init__(self):
        elems = tuple(self.elements)
        if not elems:
            raise DomainError("empty POVM")
        space = elems[0].space
        total = np.zeros((space.dim, space.dim), dtype=complex)
        for E in elems:
            if E.space != space:
                raise DomainError("POVM elements live on different spaces")
            if not E.is_hermitian():
                raise DomainError("POVM element not Hermitian")
            lo = np.linalg.eigvalsh(E.entries).min()
            if lo < -PSD_TOL:
                raise DomainError(f"POVM element not positive semidefinite (min eig {lo:.3e})")
            total += E.entries
        defect = float(np.max(np.abs(total - np.eye(space.dim))))
        if defect >= COMPLETE_TOL:
            raise DomainError(f"POVM incomplete: defect {defect:.3e}")
        object.__setattr__(self, "elements", elems)
        object.__setattr__(self, "completeness_defect", defect)

    @property
    def space(self) -> FockSpace:
        return self.elements[0].space

    def probabilities(self, state: PointerState) -> np.ndarray:
        psi = state.amplitudes
        return np.array([np.vdot(psi, E.entries @ psi).real for E in self.elements])


@dataclass(frozen=True, eq=False)
class Cfim:
    matrix: np.ndarray
    method: str
    notes: tuple = ()

    METHODS = ("direct_imaging", "nonorthogonal", "numeric_oracle")

    def __post_init__(self):
        if self.method not in self.METHODS:
            raise ValueError(f"unknown method {self.method!r}")
        m = np.array(self.matrix, dtype=float)
        if m.shape != (2, 2):
            raise DomainError("CFIM must be 2x2")
        m = 0.5 * (m + m.T)
        scale = max(float(np.max(np.abs(m))), 1e-300)
        if np.linalg.eigvalsh(m).min() < -PSD_TOL * scale:
            raise DomainError("CFIM is not positive semidefinite")
        m.setflags(write=False)
        object.__setattr__(self, "matrix", m)

    def __add__(self, other: "Cfim") -> "Cfim":
        return Cfim(self.matrix + other.matrix, "numeric_oracle", self.notes + other.notes)


@dataclass(frozen=True)
class PositionGrid:
    x_max: float
    step: float

    def nodes(self) -> np.ndarray:
        """Midpoint-offset nodes: x = 0 (a node of every odd mode) is never sampled."""
        m = int(np.ceil(self.x_max / self.step))
        return (np.arange(-m, m) + 0.5) * self.step

    @classmethod
    def for_mode(cls, n: int, sigma0: float) -> "PositionGrid":
        return cls(GRID_SIGMAS * np.sqrt(2 * n + 1) * sigma0, sigma0 * GRID_STEP_FRACTION)

    def check(self, n: int, sigma0: float):
        need = GRID_SIGMAS * np.sqrt(2 * n + 1) * sigma0
        if self.x_max < need * (1 - 1e-12):
            raise CoverageError(f"grid half-width {self.x_max:.3g} below {need:.3g}")
        if self.step > sigma0 * GRID_STEP_FRACTION * (1 + 1e-12):
            raise CoverageError(f"grid step {self.step:.3g} above sigma0/50")


def projector(state: PointerState) -> OperatorMatrix:
    v = state.amplitudes
    return OperatorMatrix(state.space, np.outer(v, v.conj()))


def binary_povm(state: PointerState) -> Povm:
    """{|s><s|, I - |s><s|} for a unit state."""
    E = projector(state.normalize())
    return Povm((E, identity(state.space) - E))


def nonorthogonal_povms(n: int, space: FockSpace) -> tuple[Povm, Povm]:
    """The two binary projections used to read out g1 and g2.

    Pi1 and Pi2 are not orthogonal (their overlap is 1/(2n+1)), so I - Pi1 - Pi2
    has a negative eigenvalue -1/(2n+1) and the three operators are not a POVM.
    The read-out is modelled as two separate binary measurements, each on its own
    share of the photons, whose Fisher matrices add.
    """
    if n < 1:
        raise DegenerateError("projections need n >= 1; the Gaussian mode gives zero information")
    xperp, pperp = orthogonal_projector_states(n, space)
    return binary_povm(xperp), binary_povm(pperp)


def cfim_numeric(
    povm: Povm, state_family: StateFamily, g: tuple[float, float], dg: tuple[float, float]
) -> Cfim:
    """Central-difference CFIM of ``povm`` for the two-parameter family.

    ``dg`` holds the physical steps for (g1, g2).  States are normalized before the
    probabilities are formed.  Outcomes with probability below 1e-12 at ``g`` are
    skipped and listed in ``notes``.
    """
    dg = np.broadcast_to(np.asarray(dg, dtype=float), (2,))
    if np.any(dg <= 0):
        raise DomainError("finite-difference step must be positive")
    g = np.asarray(g, dtype=float)

    def probs(gv):
        return povm.probabilities(state_family(gv[0], gv[1]).normalize())

    p0 = probs(g)
    if np.all(p0 < PROB_FLOOR):
        raise DegenerateError("all outcome probabilities vanish")
    grads = []
    for i in range(2):
        e = np.zeros(2)
        e[i] = dg[i]
        grads.append((probs(g + e) - probs(g - e)) / (2 * dg[i]))
    grads = np.array(grads)
    keep = p0 >= PROB_FLOOR
    notes = tuple(f"skipped outcome {k} (p={p0[k]:.2e})" for k in np.flatnonzero(~keep))
    F = (grads[:, keep] / p0[keep]) @ grads[:, keep].T
    return Cfim(F, "numeric_oracle", notes)


def cfim_direct_imaging(n: int, sigma0: float, A_w: complex, grid: PositionGrid | None = None) -> Cfim:
    """Leading-order CFIM of position-resolved detection."""
    if n < 0 or sigma0 <= 0:
        raise DomainError("need n >= 0 and sigma0 > 0")
    if grid is not None:
        grid.check(n, sigma0)
    re, im = np.real(A_w), np.imag(A_w)
    m = np.array(
        [
            [(2 * n + 1) * re**2 / sigma0**2, 2 * re * im],
            [2 * re * im, 4 * (2 * n + 1) * sigma0**2 * im**2],
        ]
    )
    return Cfim(m, "direct_imaging")


def cfim_direct_imaging_numeric(
    n: int,
    sigma0: float,
    A_w: complex,
    grid: PositionGrid | None = None,
    g_tilde: tuple[float, float] = (0.0, 0.0),
    dg: float = DEFAULT_DG,
) -> Cfim:
    """Trapezoid-rule CFIM of the position density of the first-order pointer.

    The density is quadratic in g, so central differences are exact up to rounding.
    At g = 0 every node of psi_n is a removable 0/0 point; elsewhere a zero of the
    perturbed density near each node adds an O(g~) excess to F22 when A_w is real,
    which is why the default evaluation point is the origin.
    """
    grid = grid or PositionGrid.for_mode(n, sigma0)
    grid.check(n, sigma0)
    space = FockSpace.for_mode(n, sigma0)
    x = grid.nodes()
    basis = hermite_functions(space.dim - 1, sigma0, x)

    def density(t1, t2):
        amp = first_order_pointer(n, space, t1, t2).amplitudes @ basis
        return np.abs(amp) ** 2

    # steps in normalized units mapped back through g~ = A_w sqrt(2n+1) (g1/sigma0, 2 sigma0 g2)
    r = A_w * np.sqrt(2 * n + 1)
    d1, d2 = r / sigma0, 2 * r * sigma0
    t1, t2 = g_tilde
    h1, h2 = dg * sigma0 / (abs(A_w) * np.sqrt(2 * n + 1)), dg / (2 * abs(A_w) * np.sqrt(2 * n + 1) * sigma0)
    p0 = density(t1, t2)
    dp1 = (density(t1 + d1 * h1, t2) - density(t1 - d1 * h1, t2)) / (2 * h1)
    dp2 = (density(t1, t2 + d2 * h2) - density(t1, t2 - d2 * h2)) / (2 * h2)
    ok = p0 > 0
    F = np.empty((2, 2))
    for i, a in enumerate((dp1, dp2)):
        for j, b in enumerate((dp1, dp2)):
            F[i, j] = np.trapezoid(np.where(ok, a * b / np.where(ok, p0, 1.0), 0.0), x)
    return Cfim(F, "direct_imaging")


def cfim_nonorthogonal(n: int, sigma0: float, A_w: complex) -> Cfim:
    """|A_w|^2 diag(4n(n+1)/((2n+1) sigma0^2), 16 n(n+1) sigma0^2/(2n+1))."""
    if n < 1:
        raise DegenerateError("zero information: projections undefined for n = 0")
    w = abs(A_w) ** 2
    c = n * (n + 1) / (2 * n + 1)
    return Cfim(np.diag([4 * c * w / sigma0**2, 16 * c * w * sigma0**2]), "nonorthogonal")


def exact_pointer_family(scheme: WeakScheme) -> StateFamily:
    return lambda g1, g2: final_pointer_exact(scheme.with_couplings(g1, g2))[0]


def first_order_family(scheme: WeakScheme) -> StateFamily:
    def family(g1, g2):
        s = scheme.with_couplings(g1, g2).normalized
        return first_order_pointer(scheme.n, scheme.space, s.g1_tilde, s.g2_tilde)

    return family


def cfim_nonorthogonal_numeric(
    scheme: WeakScheme, g_tilde: float = 1e-2, dg: float = DEFAULT_DG, exact: bool = True
) -> Cfim:
    """Finite-difference CFIM of the two projections at g~1 = g~2 = ``g_tilde``.

    The exact post-selected pointer is used by default.  The projected
    probabilities vanish at g = 0, so the point is offset into the leading-order
    regime where p ~ g~^2 and (dp)^2/p is finite.
    """
    n, sigma0, A_w = scheme.n, scheme.space.sigma0, scheme.weak_value
    g = physical_couplings(n, sigma0, A_w, g_tilde, g_tilde)
    h = physical_couplings(n, sigma0, A_w, dg, dg)
    family = exact_pointer_family(scheme) if exact else first_order_family(scheme)
    p1, p2 = nonorthogonal_povms(n, scheme.space)
    total = cfim_numeric(p1, family, g, h) + cfim_numeric(p2, family, g, h)
    return Cfim(total.matrix, "numeric_oracle", total.notes)


def relative_defect(numeric: Cfim, analytic: Cfim) -> float:
    """max |F_num - F_an| scaled per element by sqrt(F_an,ii F_an,jj)."""
    a = analytic.matrix
    d = np.sqrt(np.abs(np.diag(a)))
    d = np.where(d > 0, d, 1.0)
    return float(np.max(np.abs(numeric.matrix - a) / np.outer(d, d)))


def quantum_classical_gap(qfim: np.ndarray, cfim: Cfim) -> np.ndarray:
    """Eigenvalues of Q - F in units where Q has unit diagonal."""
    d = np.sqrt(np.diag(qfim))
    D = np.diag(1.0 / d)
    return np.linalg.eigvalsh(D @ (qfim - cfim.matrix) @ D)


def nonorthogonal_precision_point(n: int) -> BoundPoint:
    """sqrt(nu) (dg~1, dg~2) reached by the projections: (2n+1)/(2 sqrt(n(n+1))) on both axes."""
    if n < 1:
        raise DegenerateError("projections need n >= 1")
    e = (2 * n + 1) / (2.0 * np.sqrt(n * (n + 1)))
    return BoundPoint(e, e)


def direct_imaging_joint_bound(n: int) -> float:
    """Upper bound on 1/(nu dg~1^2) + 1/(nu dg~2^2) under direct imaging."""
    return 4.0 * n * (n + 1) / (2 * n + 1) ** 2

"""Pure-state multiparameter bounds: QGT, QFIM, Berry curvature, incompatibility
criterion, trade-off curves and the two-parameter Holevo bound.

Bound curves live in the plane of normalized errors (x, y) = sqrt(nu) * (dg~_i, dg~_j),
where dg~ = sqrt(Q_ii) dg.  The quantum-limit point is (1, 1).
"""
from __future__ import annotations

from dataclasses import dataclass
from typing import Callable

import numpy as np
from scipy.optimize import brentq, minimize_scalar

from .errors import DegenerateError, DomainError
from .fock import (
    OperatorMatrix,
    PointerState,
    anticommutator_expectation,
    commutator_expectation,
    expectation,
    variance,
)

COMPATIBLE_TOL = 1e-14
ROOT_TOL = 1e-9
DEFAULT_Y_MAX = 10.0


@dataclass(frozen=True)
class GeneratorPair:
    Hi: OperatorMatrix
    Hj: OperatorMatrix
    probe: PointerState

    def __post_init__(self):
        for H in (self.Hi, self.Hj):
            if not H.is_hermitian():
                raise DomainError("generators must be Hermitian")
        if not (self.Hi.space == self.Hj.space == self.probe.space):
            raise DomainError("generators and probe must share a Fock space")


@dataclass(frozen=True)
class QuantumGeometry:
    qfim: np.ndarray
    qgt: np.ndarray
    berry: float
    qmec: float
    normalized_curvature: float
    compatible: bool = False


@dataclass(frozen=True)
class BoundPoint:
    x: float
    y: float

    def as_tuple(self) -> tuple[float, float]:
        return (self.x, self.y)


@dataclass(frozen=True)
class BoundCurve:
    points: np.ndarray
    kind: str
    s_value: float

    KINDS = ("tradeoff", "holevo", "ql_point", "ccr_lines")

    def __post_init__(self):
        if self.kind not in self.KINDS:
            raise ValueError(f"unknown curve kind {self.kind!r}")
        pts = np.asarray(self.points, dtype=float).reshape(-1, 2)
        object.__setattr__(self, "points", pts)

    @property
    def x(self) -> np.ndarray:
        return self.points[:, 0]

    @property
    def y(self) -> np.ndarray:
        return self.points[:, 1]


def quantum_geometry(pair: GeneratorPair) -> QuantumGeometry:
    """Geometry of the two-parameter family generated by ``pair`` at the probe.

    The QFIM uses the anticommutator covariance; the QGT is built independently
    from the derivative vectors d_k = -i H_k |psi>, so Re T = Q/4 is a real check.
    The Berry curvature is C = -2 Im T_ij.
    """
    psi = pair.probe.require_safe()
    Hi, Hj = pair.Hi, pair.Hj
    vi, vj = variance(Hi, psi), variance(Hj, psi)
    mi, mj = expectation(Hi, psi).real, expectation(Hj, psi).real
    anti = anticommutator_expectation(Hi, Hj, psi).real
    comm = commutator_expectation(Hi, Hj, psi)

    qij = 2.0 * anti - 4.0 * mi * mj
    qfim = np.array([[4.0 * vi, qij], [qij, 4.0 * vj]])

    p = psi.amplitudes
    derivs = [-1j * (H.entries @ p) for H in (Hi, Hj)]
    qgt = np.empty((2, 2), dtype=complex)
    for k, dk in enumerate(derivs):
        for l, dl in enumerate(derivs):
            qgt[k, l] = np.vdot(dk, dl) - np.vdot(dk, p) * np.vdot(p, dl)
    berry = float(-2.0 * qgt[0, 1].imag)

    scale = max(1.0, 2.0 * np.sqrt(max(vi * vj, 0.0)))
    if abs(comm) < COMPATIBLE_TOL * scale:
        return QuantumGeometry(qfim, qgt, berry, np.inf, 0.0, compatible=True)
    qmec = 4.0 * vi * vj / abs(comm) ** 2
    c_tilde = 2.0 * berry / np.sqrt(qfim[0, 0] * qfim[1, 1])
    return QuantumGeometry(qfim, qgt, berry, float(qmec), float(c_tilde))


def qmec_from_geometry(qfim: np.ndarray, berry: float) -> float:
    """The criterion expressed through the metric and the curvature."""
    if berry == 0:
        return np.inf
    return float(qfim[0, 0] * qfim[1, 1] / (4.0 * berry**2))


def hg_qmec(n: int) -> float:
    return float((2 * n + 1) ** 2)


def _check_s(s: float):
    if not s >= 1.0:
        raise DomainError(f"criterion value must be >= 1, got {s}")


def tradeoff_residual(a, b, s: float):
    """LHS - RHS of the trade-off relation at equality, in the (a, b) variables."""
    a, b = np.asarray(a, float), np.asarray(b, float)
    c = np.sqrt(1.0 - 1.0 / s)
    return 2.0 - a - b + 2.0 * c * np.sqrt(np.clip((1 - a) * (1 - b), 0, None)) - 1.0 / s


def tradeoff_b(a: float, s: float) -> float:
    """Solve the equality locus for b = 1/(nu dg~_j^2) given a = 1/(nu dg~_i^2).

    Isolating the square root, 2c sqrt(u v) = gamma - v, and squaring gives a
    quadratic in v = 1 - b.  A root belongs to the unsquared relation iff
    gamma - v >= 0; testing the residual itself is ill-conditioned as v -> 0.
    """
    _check_s(s)
    if not 0.0 <= a <= 1.0:
        raise DomainError(f"a must lie in [0, 1], got {a}")
    if np.isinf(s):
        if a == 1.0:
            return 1.0
        raise DomainError("compatible parameters: locus is the QCR corner only")
    u = 1.0 - a
    c2 = 1.0 - 1.0 / s
    gamma = 1.0 / s - u
    beta = gamma + 2.0 * c2 * u
    disc = np.sqrt(max(beta**2 - gamma**2, 0.0))
    feasible = []
    for v in (beta + disc, beta - disc):
        if v < -ROOT_TOL or gamma - v < -ROOT_TOL:
            continue
        feasible.append(min(1.0 - max(v, 0.0), 1.0))
    if not feasible:
        raise DomainError(f"a={a} is outside the trade-off locus for s={s}")
    return min(feasible)


def tradeoff_y(x: float, s: float) -> float:
    """y on the trade-off curve at abscissa ``x``."""
    b = tradeoff_b(1.0 / x**2, s)
    return float(1.0 / np.sqrt(b)) if b > 0 else np.inf


def tradeoff_curve(s: float, num_points: int = 200, y_max: float = DEFAULT_Y_MAX) -> BoundCurve:
    """Sample the trade-off boundary, ordered by increasing x.

    Samples are uniform in a over the part of the locus with x, y <= ``y_max``.
    For s = 1 this is the Gaussian-pointer arc a + b = 1; for s = inf the
    boundary collapses onto the two QCR lines.
    """
    _check_s(s)
    if num_points < 2:
        raise DomainError("num_points must be >= 2")
    if np.isinf(s):
        return qcr_lines(y_max, num_points)
    w = 1.0 / y_max**2
    a_edge = 1.0 - 1.0 / s
    a_lo = max(a_edge, w)
    # the locus is symmetric under a <-> b, so the cut where b = w sits at a = b(w)
    a_hi = 1.0 if a_edge >= w else tradeoff_b(w, s)
    a = np.linspace(a_hi, a_lo, num_points)
    b = np.array([tradeoff_b(ai, s) for ai in a])
    pts = np.column_stack([1.0 / np.sqrt(a), 1.0 / np.sqrt(b)])
    return BoundCurve(pts, "tradeoff", s)


def qcr_lines(y_max: float = DEFAULT_Y_MAX, num_points: int = 2) -> BoundCurve:
    """The two single-parameter QCR lines x = 1 and y = 1 as one L-shaped path."""
    half = max(num_points // 2, 2)
    up = np.column_stack([np.ones(half), np.linspace(y_max, 1.0, half)])
    right = np.column_stack([np.linspace(1.0, y_max, half), np.ones(half)])
    return BoundCurve(np.vstack([up, right[1:]]), "ccr_lines", np.inf)


def ql_point() -> BoundCurve:
    return BoundCurve(np.array([[1.0, 1.0]]), "ql_point", np.inf)


def tradeoff_endpoints(n: int) -> tuple[BoundPoint, BoundPoint]:
    """Endpoints of the HG_n trade-off curve on the QCR lines."""
    if n < 0:
        raise DomainError(f"mode order must be >= 0, got {n}")
    if n == 0:
        raise DegenerateError("Gaussian pointer: trade-off endpoints lie at infinity")
    e = (2 * n + 1) / (2.0 * np.sqrt(n * (n + 1)))
    return BoundPoint(1.0, e), BoundPoint(e, 1.0)


def holevo_rhs(c_tilde: float) -> float:
    """Lower bound on the mean normalized squared error (nu dg~_i^2 + nu dg~_j^2)/2."""
    if abs(c_tilde) > 1.0:
        raise DomainError(f"|normalized curvature| must be <= 1, got {c_tilde}")
    return float(2.0 / (1.0 + np.sqrt(1.0 - c_tilde**2)))


def holevo_bound(c_tilde: float, num_points: int = 200) -> BoundCurve:
    """Arc x^2 + y^2 = 2 R restricted to x, y >= 1, ordered by increasing x."""
    R = holevo_rhs(c_tilde)
    s = np.inf if c_tilde == 0 else 1.0 / c_tilde**2
    x_top = np.sqrt(max(2.0 * R - 1.0, 1.0))
    x = np.linspace(1.0, x_top, num_points)
    y = np.sqrt(np.clip(2.0 * R - x**2, 1.0, None))
    return BoundCurve(np.column_stack([x, y]), "holevo", s)


def holevo_y(x, c_tilde: float):
    R = holevo_rhs(c_tilde)
    return np.sqrt(2.0 * R - np.asarray(x, float) ** 2)


def holevo_tangent_point(c_tilde: float) -> BoundPoint:
    r = np.sqrt(holevo_rhs(c_tilde))
    return BoundPoint(float(r), float(r))


def _tradeoff_point(a: float, s: float) -> tuple[float, float, float, float]:
    """(x, y, dx/da, dy/da) on the trade-off curve; slopes are nan where b or 1-a, 1-b vanish."""
    b = tradeoff_b(a, s)
    x = 1.0 / np.sqrt(a)
    if b <= 0:
        return x, np.inf, np.nan, np.nan
    y = 1.0 / np.sqrt(b)
    u, v = 1.0 - a, 1.0 - b
    if u <= 0 or v <= 0:
        return x, y, np.nan, np.nan
    # implicit slope of 2 - a - b + 2c sqrt(uv) - 1/s = 0
    c = np.sqrt(1.0 - 1.0 / s)
    db = -np.sqrt(v / u) * (np.sqrt(u) + c * np.sqrt(v)) / (np.sqrt(v) + c * np.sqrt(u))
    return x, y, -0.5 * a**-1.5, -0.5 * b**-1.5 * db


def distance_to_tradeoff(point, s: float) -> tuple[float, BoundPoint]:
    """Euclidean distance from ``point`` to the trade-off curve and the nearest curve point.

    A grid brackets the foot point, which is then refined as a root of
    (C(a) - p) . C'(a); minimizing the distance directly stalls near sqrt(eps).
    """
    _check_s(s)
    px, py = point
    a_lo = max(1.0 - 1.0 / s, 1e-6)

    def dist(a):
        x, y, _, _ = _tradeoff_point(a, s)
        return np.hypot(x - px, y - py)

    def foot(a):
        x, y, dx, dy = _tradeoff_point(a, s)
        return (x - px) * dx + (y - py) * dy

    grid = np.linspace(a_lo, 1.0, 257)
    d = np.array([dist(a) for a in grid])
    i = int(np.argmin(d))
    candidates = [grid[i]]
    for lo, hi in ((grid[max(i - 1, 0)], grid[i]), (grid[i], grid[min(i + 1, len(grid) - 1)])):
        if lo == hi:
            continue
        flo, fhi = foot(lo), foot(hi)
        if np.isfinite(flo) and np.isfinite(fhi) and flo * fhi <= 0:
            candidates.append(brentq(foot, lo, hi, xtol=1e-15, rtol=4 * np.finfo(float).eps))
        else:
            res = minimize_scalar(dist, bounds=(lo, hi), method="bounded", options={"xatol": 1e-14})
            candidates.append(res.x)
    a_best = min(candidates, key=dist)
    x, y, _, _ = _tradeoff_point(a_best, s)
    return float(dist(a_best)), BoundPoint(float(x), float(y))


def holevo_tradeoff_gap(c_tilde: float) -> tuple[float, BoundPoint]:
    """Minimum distance between the Holevo arc and the trade-off curve with s = 1/c~^2.

    Returns the gap and the Holevo-arc point where it is attained.
    """
    if c_tilde == 0:
        raise DegenerateError("compatible parameters: both bounds reduce to the QL point")
    s = 1.0 / c_tilde**2
    R = holevo_rhs(c_tilde)
    theta_lo = np.arctan2(1.0, np.sqrt(2 * R - 1.0))
    theta_hi = np.pi / 2 - theta_lo

    def arc(theta):
        r = np.sqrt(2 * R)
        return r * np.cos(theta), r * np.sin(theta)

    def gap(theta):
        return distance_to_tradeoff(arc(theta), s)[0]

    grid = np.linspace(theta_lo, theta_hi, 65)
    g = np.array([gap(t) for t in grid])
    i = int(np.argmin(g))
    lo, hi = grid[max(i - 1, 0)], grid[min(i + 1, len(grid) - 1)]
    res = minimize_scalar(gap, bounds=(lo, hi), method="bounded", options={"xatol": 1e-12})
    theta = res.x if res.fun < g[i] else grid[i]
    x, y = arc(theta)
    return float(min(res.fun, g[i])), BoundPoint(float(x), float(y))


def qfi_fidelity_oracle(
    state_family: Callable[[float], PointerState], g: float, dg: float
) -> float:
    """Finite-difference pure-state QFI, 8 (1 - |<psi_g|psi_{g+dg}>|) / dg^2."""
    if dg <= 0:
        raise DomainError("dg must be positive")
    psi0, psi1 = state_family(g), state_family(g + dg)
    for psi in (psi0, psi1):
        if abs(psi.norm - 1.0) > 1e-10:
            raise DomainError("fidelity oracle needs normalized states")
    overlap = abs(psi0.inner(psi1))
    return float(8.0 * (1.0 - overlap) / dg**2)

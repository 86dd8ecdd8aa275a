import numpy as np
import pytest

from qmet.errors import CoverageError, DegenerateError, DomainError
from qmet.estimation import tradeoff_endpoints
from qmet.fisher import (
    Cfim,
    PositionGrid,
    Povm,
    binary_povm,
    cfim_direct_imaging,
    cfim_direct_imaging_numeric,
    cfim_nonorthogonal,
    cfim_nonorthogonal_numeric,
    cfim_numeric,
    direct_imaging_joint_bound,
    first_order_family,
    nonorthogonal_povms,
    nonorthogonal_precision_point,
    projector,
    quantum_classical_gap,
    relative_defect,
)
from qmet.fock import FockSpace, fock_state, identity
from qmet.weak import orthogonal_projector_states, standard_scheme, angle_weak_value, scheme_geometry, scheme_with_weak_value

AW5 = angle_weak_value(np.radians(5.0))


def test_three_outcome_set_is_not_a_povm():
    n = 2
    sp = FockSpace.for_mode(n)
    xperp, pperp = orthogonal_projector_states(n, sp)
    rest = identity(sp) - projector(xperp) - projector(pperp)
    assert np.linalg.eigvalsh(rest.entries).min() == pytest.approx(-1 / (2 * n + 1))
    with pytest.raises(DomainError):
        Povm((projector(xperp), projector(pperp), rest))


def test_binary_povms_valid():
    p1, p2 = nonorthogonal_povms(3, FockSpace.for_mode(3))
    assert p1.completeness_defect < 1e-12 and p2.completeness_defect < 1e-12
    with pytest.raises(DegenerateError):
        nonorthogonal_povms(0, FockSpace(6))


def test_incomplete_povm_rejected():
    sp = FockSpace(4)
    with pytest.raises(DomainError):
        Povm((projector(fock_state(sp, 0)),))


def test_cfim_psd_enforced():
    with pytest.raises(DomainError):
        Cfim(np.diag([1.0, -1.0]), "numeric_oracle")


@pytest.mark.parametrize("n,sigma0", [(1, 1.0), (3, 0.5), (5, 120e-6)])
def test_direct_imaging_real_weak_value(n, sigma0):
    F = cfim_direct_imaging(n, sigma0, AW5).matrix
    assert F[0, 0] == pytest.approx((2 * n + 1) * AW5**2 / sigma0**2)
    assert F[0, 1] == 0 and F[1, 1] == 0


def test_direct_imaging_imaginary_weak_value_gaussian():
    F = cfim_direct_imaging(0, 1.0, 3j).matrix
    assert F[0, 0] == 0 and F[0, 1] == 0 and F[1, 1] == pytest.approx(36)


@pytest.mark.parametrize("n", [0, 1, 2, 5])
@pytest.mark.parametrize("A_w", [AW5, 3 + 2j, 2j])
def test_direct_imaging_numeric_matches(n, A_w):
    an = cfim_direct_imaging(n, 0.7, A_w)
    nu = cfim_direct_imaging_numeric(n, 0.7, A_w)
    assert relative_defect(nu, an) < 1e-6


def test_direct_imaging_numeric_off_origin():
    # away from g = 0 the density has near-zeros next to the nodes; the excess in F22 is O(g~)
    an = cfim_direct_imaging(3, 1.0, 5.0 + 1.0j)
    nu = cfim_direct_imaging_numeric(3, 1.0, 5.0 + 1.0j, g_tilde=(1e-2, 1e-2))
    assert relative_defect(nu, an) < 0.01


def test_grid_coverage():
    with pytest.raises(CoverageError):
        cfim_direct_imaging(2, 1.0, 1.0, PositionGrid(5.0, 0.01))
    with pytest.raises(CoverageError):
        cfim_direct_imaging(2, 1.0, 1.0, PositionGrid(20.0, 0.05))
    grid = PositionGrid.for_mode(2, 1.0)
    assert not np.any(grid.nodes() == 0)


def test_nonorthogonal_analytic():
    F = cfim_nonorthogonal(1, 1.0, 1.0).matrix
    assert np.allclose(F, np.diag([8 / 3, 32 / 3]))
    with pytest.raises(DegenerateError):
        cfim_nonorthogonal(0, 1.0, 1.0)


@pytest.mark.parametrize("n", [1, 2, 3, 4, 5])
@pytest.mark.parametrize("sigma0", [1.0, 120e-6])
def test_nonorthogonal_numeric_converges(n, sigma0):
    sc = standard_scheme(n, sigma0=sigma0)
    an = cfim_nonorthogonal(n, sigma0, sc.weak_value)
    d1 = relative_defect(cfim_nonorthogonal_numeric(sc, 1e-2), an)
    d2 = relative_defect(cfim_nonorthogonal_numeric(sc, 5e-3), an)
    assert d1 < 0.01 and d2 < 0.0025
    assert d1 / d2 == pytest.approx(4, rel=0.05)


def test_numeric_oracle_step_convergence():
    sc = scheme_with_weak_value(2, 4.0 + 1.0j)
    an = cfim_nonorthogonal(2, 1.0, sc.weak_value)
    d = [relative_defect(cfim_nonorthogonal_numeric(sc, 1e-2, dg), an) for dg in (1e-3, 1e-4)]
    # the step error is already far below the O(g~^2) model error
    assert abs(d[0] - d[1]) < 1e-5


def test_numeric_cfim_trivial_families():
    sc = standard_scheme(3)
    sp = sc.space
    povm = binary_povm(fock_state(sp, 3))
    F = cfim_numeric(povm, lambda g1, g2: fock_state(sp, 2), (0.0, 0.0), (1e-3, 1e-3))
    assert np.all(F.matrix == 0)
    F = cfim_numeric(povm, first_order_family(sc), (0.0, 0.0), (1e-5, 1e-5))
    assert np.max(np.abs(F.matrix)) < 1e-6 * cfim_nonorthogonal(3, 1.0, AW5).matrix.max()
    assert F.notes and "skipped" in F.notes[0]
    with pytest.raises(DomainError):
        cfim_numeric(povm, first_order_family(sc), (0.0, 0.0), (0.0, 1e-3))


@pytest.mark.parametrize("n", [1, 2, 3, 4, 5])
def test_classical_below_quantum(n):
    sc = standard_scheme(n)
    Q = scheme_geometry(sc).qfim
    for F in (
        cfim_direct_imaging(n, 1.0, AW5),
        cfim_direct_imaging_numeric(n, 1.0, AW5),
        cfim_nonorthogonal(n, 1.0, AW5),
        cfim_nonorthogonal_numeric(sc),
    ):
        assert quantum_classical_gap(Q, F).min() >= -1e-8


@pytest.mark.parametrize("n", [1, 2, 5, 10])
def test_precision_point_on_endpoint_diagonal(n):
    p = nonorthogonal_precision_point(n)
    e = tradeoff_endpoints(n)[0].y
    assert p.x == pytest.approx(e, abs=1e-9) and p.y == pytest.approx(e, abs=1e-9)
    # equality follows from Q_ii / F_ii
    Q = scheme_geometry(standard_scheme(n)).qfim
    F = cfim_nonorthogonal(n, 1.0, AW5).matrix
    assert np.sqrt(Q[0, 0] / F[0, 0]) == pytest.approx(p.x)
    assert np.sqrt(Q[1, 1] / F[1, 1]) == pytest.approx(p.y)


def test_precision_point_limit_and_joint_bound():
    assert nonorthogonal_precision_point(5).x == pytest.approx(1.0041580220928045)
    assert nonorthogonal_precision_point(500).x == pytest.approx(1, abs=1e-6)
    assert direct_imaging_joint_bound(1) == pytest.approx(8 / 9)
    with pytest.raises(DegenerateError):
        nonorthogonal_precision_point(0)


@pytest.mark.parametrize("n", [1, 3])
def test_projection_beats_imaging_for_kick(n):
    assert cfim_direct_imaging(n, 1.0, AW5).matrix[1, 1] == 0
    assert cfim_nonorthogonal(n, 1.0, AW5).matrix[1, 1] > 0

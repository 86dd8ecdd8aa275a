import numpy as np
import pytest
from hypothesis import example, given, strategies as st
from scipy.linalg import expm

from qmet.errors import DegenerateError, DomainError, TruncationEdgeError
from qmet.estimation import (
    BoundCurve,
    GeneratorPair,
    distance_to_tradeoff,
    holevo_bound,
    holevo_rhs,
    holevo_tangent_point,
    holevo_tradeoff_gap,
    holevo_y,
    qfi_fidelity_oracle,
    qmec_from_geometry,
    quantum_geometry,
    tradeoff_b,
    tradeoff_curve,
    tradeoff_endpoints,
    tradeoff_y,
)
from qmet.fock import FockSpace, OperatorMatrix, PointerState, fock_state, number_operator, quadrature_operators


def closed_form_b(a, s):
    """Independent solution of the trade-off equality: sqrt(1-b) = sqrt(a/s) - sqrt(1-1/s) sqrt(1-a)."""
    t = np.sqrt(a / s) - np.sqrt(1 - 1 / s) * np.sqrt(1 - a)
    return 1 - t**2


def hg_pair(n, sigma0=1.0, dim=None):
    sp = FockSpace(dim or n + 8, sigma0)
    P, X = quadrature_operators(sp)
    return GeneratorPair(P, X, fock_state(sp, n))


@pytest.mark.parametrize("n", range(11))
def test_qmec_law(n):
    g = quantum_geometry(hg_pair(n))
    assert g.qmec == pytest.approx((2 * n + 1) ** 2, rel=1e-12)
    assert g.normalized_curvature == pytest.approx(1 / (2 * n + 1), rel=1e-12)


def test_qmec_examples():
    assert quantum_geometry(hg_pair(0)).qmec == pytest.approx(1)
    assert quantum_geometry(hg_pair(2)).qmec == pytest.approx(25)
    assert quantum_geometry(hg_pair(5)).normalized_curvature == pytest.approx(1 / 11)


@pytest.mark.parametrize("sigma0", [1.0, 0.2, 120e-6])
def test_geometry_invariants(sigma0):
    g = quantum_geometry(hg_pair(3, sigma0))
    assert np.allclose(g.qgt.real, g.qfim / 4, rtol=1e-10, atol=0)
    assert g.qgt[0, 1].imag == pytest.approx(-g.berry / 2)
    assert qmec_from_geometry(g.qfim, g.berry) == pytest.approx(g.qmec, rel=1e-9)
    assert g.normalized_curvature**2 * g.qmec == pytest.approx(1, rel=1e-10)
    assert g.qfim[0, 0] == pytest.approx(7 / sigma0**2)


def test_compatible_generators():
    sp = FockSpace(10)
    N = number_operator(sp)
    P, _ = quadrature_operators(sp)
    g = quantum_geometry(GeneratorPair(N, N * 2.0, fock_state(sp, 3)))
    assert g.compatible and np.isinf(g.qmec)
    # eigenstate of both generators: zero commutator and zero variance
    g = quantum_geometry(GeneratorPair(N, N, fock_state(sp, 2)))
    assert g.compatible


def test_edge_probe_rejected():
    with pytest.raises(TruncationEdgeError):
        quantum_geometry(hg_pair(7, dim=8))


def test_non_hermitian_generator_rejected():
    sp = FockSpace(5)
    with pytest.raises(DomainError):
        GeneratorPair(OperatorMatrix(sp, np.triu(np.ones((5, 5)))), number_operator(sp), fock_state(sp, 0))


def random_state(draw_amps, dim=12, support=8):
    v = np.zeros(dim, complex)
    v[:support] = draw_amps
    return v


amps = st.lists(st.complex_numbers(max_magnitude=1.0, allow_nan=False, allow_infinity=False), min_size=8, max_size=8)


@given(amps, st.floats(0.1, 3.0))
def test_qmec_at_least_one(v, sigma0):
    v = random_state(v)
    if np.linalg.norm(v) < 1e-2:
        return
    sp = FockSpace(12, sigma0)
    P, X = quadrature_operators(sp)
    g = quantum_geometry(GeneratorPair(P, X, PointerState(sp, v).normalize()))
    assert g.qmec >= 1 - 1e-10
    assert np.linalg.eigvalsh(g.qfim).min() >= -1e-10 * np.abs(g.qfim).max()
    assert qmec_from_geometry(g.qfim, g.berry) == pytest.approx(g.qmec, rel=1e-9)


def test_tradeoff_gaussian_circle():
    assert tradeoff_b(0.5, 1.0) == pytest.approx(0.5)
    c = tradeoff_curve(1.0, 50)
    a, b = 1 / c.x**2, 1 / c.y**2
    assert np.allclose(a + b, 1, atol=1e-12)


@pytest.mark.parametrize("s,a,b", [
    (9, 0.95, 0.98698697784375503),
    (9, 0.9, 0.99967291942752378),
    (25, 0.97, 0.99925626373048377),
    (2, 0.6, 0.98989794855663562),
    (1, 0.3, 0.7),
])
def test_tradeoff_reference_points(s, a, b):
    assert tradeoff_b(a, s) == pytest.approx(b, rel=1e-12)


@given(st.floats(1.0, 500.0), st.floats(0.0, 1.0))
@example(2.0, 4.08e-09)  # just inside the left end, where b -> 1
def test_tradeoff_matches_closed_form(s, frac):
    a = (1 - 1 / s) + frac / s
    assert tradeoff_b(a, s) == pytest.approx(closed_form_b(a, s), abs=1e-9)


def test_tradeoff_domain():
    with pytest.raises(DomainError):
        tradeoff_curve(0.5, 10)
    with pytest.raises(DomainError):
        tradeoff_b(0.5, 9.0)  # below 1 - 1/s
    with pytest.raises(DomainError):
        tradeoff_curve(9, 1)


@pytest.mark.parametrize("s", [1.0, 1.5, 9.0, 121.0, 1e4])
def test_tradeoff_curve_invariants(s):
    c = tradeoff_curve(s, 300)
    assert c.kind == "tradeoff"
    assert np.all(c.points >= 1 - 1e-9)
    assert np.all(np.diff(c.x) > 0)
    assert np.all(np.diff(c.y) <= 1e-12)
    assert c.points.max() <= 10 + 1e-9


@pytest.mark.parametrize("n,value", [(1, 1.0606601717798213), (5, 1.0041580220928045)])
def test_endpoints(n, value):
    left, right = tradeoff_endpoints(n)
    assert left.as_tuple() == pytest.approx((1.0, value), abs=1e-12)
    assert right.as_tuple() == pytest.approx((value, 1.0), abs=1e-12)
    first = tradeoff_curve((2 * n + 1) ** 2, 20).points[0]
    assert first == pytest.approx([1.0, value], abs=1e-9)


def test_endpoints_approach_ql_point():
    ys = [tradeoff_endpoints(n)[0].y for n in range(1, 40)]
    assert np.all(np.diff(ys) < 0) and ys[-1] > 1
    assert ys[-1] == pytest.approx(np.sqrt(1 + 1 / (4 * 39 * 40)))
    with pytest.raises(DegenerateError):
        tradeoff_endpoints(0)


def test_infinite_s_collapses_to_qcr_lines():
    c = tradeoff_curve(np.inf, 10)
    assert c.kind == "ccr_lines"
    assert np.all((np.isclose(c.x, 1)) | (np.isclose(c.y, 1)))
    assert tradeoff_b(1.0, np.inf) == 1.0


def test_holevo_values():
    assert holevo_rhs(1 / 3) == pytest.approx(6 / (3 + 2 * np.sqrt(2)), rel=1e-12)
    assert holevo_rhs(1 / 3) == pytest.approx(1.0294372515228594, rel=1e-12)
    assert holevo_rhs(0.0) == 1.0
    with pytest.raises(DomainError):
        holevo_bound(1.2, 10)


@pytest.mark.parametrize("n,tangent", [
    (1, 1.0146118723545765), (2, 1.0050896200520817), (3, 1.0025740751400225),
    (4, 1.0015516062665677), (5, 1.0010368113745418),
])
def test_holevo_tangent(n, tangent):
    c = 1 / (2 * n + 1)
    s = (2 * n + 1) ** 2
    p = holevo_tangent_point(c)
    assert p.x == pytest.approx(tangent, rel=1e-12)
    assert tradeoff_y(p.x, s) == pytest.approx(p.y, abs=1e-12)
    gap, q = holevo_tradeoff_gap(c)
    assert gap < 1e-6
    assert q.x == pytest.approx(q.y, abs=1e-4)


@pytest.mark.parametrize("n", [1, 2, 5])
def test_holevo_below_tradeoff(n):
    c = 1 / (2 * n + 1)
    s = (2 * n + 1) ** 2
    hol = holevo_bound(c, 400)
    assert hol.kind == "holevo"
    assert np.all(hol.points >= 1 - 1e-9)
    x = hol.x[hol.x <= tradeoff_endpoints(n)[1].x]
    gap = np.array([tradeoff_y(xi, s) for xi in x]) - holevo_y(x, c)
    assert gap.min() >= -1e-9
    # equality only near the tangent point
    t = holevo_tangent_point(c).x
    assert np.all(gap[np.abs(x - t) > 1e-3] > 0)


def test_distance_to_tradeoff():
    d, p = distance_to_tradeoff((1.0, 1.0), 1.0)
    # nearest point of the Gaussian-pointer curve to the QL point is (sqrt 2, sqrt 2)
    assert d == pytest.approx(2 - np.sqrt(2), rel=1e-6)
    assert p.x == pytest.approx(np.sqrt(2), rel=1e-4)


def test_curve_kind_checked():
    with pytest.raises(ValueError):
        BoundCurve(np.ones((1, 2)), "other", 1.0)


def p_family(sp, n):
    P, _ = quadrature_operators(sp)
    base = fock_state(sp, n).amplitudes
    return lambda g: PointerState(sp, expm(-1j * g * P.entries) @ base).normalize()


def x_family(sp, n):
    _, X = quadrature_operators(sp)
    base = fock_state(sp, n).amplitudes
    return lambda g: PointerState(sp, expm(-1j * g * X.entries) @ base).normalize()


@pytest.mark.parametrize("sigma0", [1.0, 0.5])
def test_fidelity_oracle_examples(sigma0):
    sp = FockSpace(30, sigma0)
    q = qfi_fidelity_oracle(p_family(sp, 0), 0.0, 1e-4 * sigma0)
    assert q == pytest.approx(1 / sigma0**2, rel=1e-4)
    for n in (1, 3):
        q = qfi_fidelity_oracle(x_family(sp, n), 0.0, 1e-4 / sigma0)
        assert q == pytest.approx(4 * (2 * n + 1) * sigma0**2, rel=1e-4)
    const = lambda g: fock_state(sp, 2)
    assert qfi_fidelity_oracle(const, 0.3, 1e-4) == 0


@pytest.mark.parametrize("n", [0, 2, 4])
def test_fidelity_oracle_agrees_with_geometry(n):
    sp = FockSpace(30)
    g = quantum_geometry(GeneratorPair(*quadrature_operators(sp), fock_state(sp, n)))
    assert qfi_fidelity_oracle(p_family(sp, n), 0.0, 1e-4) == pytest.approx(g.qfim[0, 0], rel=1e-3)
    assert qfi_fidelity_oracle(x_family(sp, n), 0.0, 1e-4) == pytest.approx(g.qfim[1, 1], rel=1e-3)


def test_fidelity_oracle_preconditions():
    sp = FockSpace(4)
    with pytest.raises(DomainError):
        qfi_fidelity_oracle(lambda g: fock_state(sp, 0), 0.0, 0.0)
    with pytest.raises(DomainError):
        qfi_fidelity_oracle(lambda g: PointerState(sp, [2, 0, 0, 0]), 0.0, 1e-3)

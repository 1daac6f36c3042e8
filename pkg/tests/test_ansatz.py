import numpy as np
import pytest
from hypothesis import given, settings
from hypothesis import strategies as st

from monochain import ansatz
from monochain.errors import IncompatibleGridError, InvalidParameterError
from monochain.spectral import build_params

CASES = [(1, 0), (2, 1), (3, 1), (4, 2), (4, 0)]

points = st.lists(st.tuples(st.floats(-4, 4), st.floats(0, 1)), min_size=1, max_size=8)


def _s(params, pts):
    return np.array([x / params.beta + 1j * y * params.period for x, y in pts])


@pytest.mark.parametrize("k,l", CASES)
@settings(max_examples=25, deadline=None)
@given(pts=points, c_abs=st.floats(0.2, 3.0), c_phase=st.floats(-np.pi, np.pi),
       beta=st.floats(0.5, 8.0))
def test_identities_hold(k, l, pts, c_abs, c_phase, beta):
    p = build_params(k, l, c_abs, c_phase, beta)
    res = ansatz.identity_residuals(p, _s(p, pts))
    for name, val in res.items():
        assert val < 1e-10, name


@pytest.mark.parametrize("k,l", CASES)
@settings(max_examples=20, deadline=None)
@given(pts=points)
def test_eigenvalues_lie_on_curve(k, l, pts):
    # zeta^k = c (w + 1/w) with w = exp(beta s)
    p = build_params(k, l, 1.3, 0.4, 2.0)
    for s in _s(p, pts):
        ev = np.linalg.eigvals(ansatz.holomorphic_higgs(p, s))
        rhs = 2 * p.c * np.cosh(p.beta * s)
        assert np.allclose(ev**k, rhs, rtol=1e-8, atol=1e-8 * max(1.0, abs(rhs)))


@pytest.mark.parametrize("k,l", CASES)
def test_product_identity_direct(k, l):
    p = build_params(k, l, beta=2.5)
    s = np.array([0.3 + 0.2j, -1.1 + 2j, 0.7 - 0.4j])
    prod = ansatz.phi_components(p, s).prod(axis=0)
    assert np.allclose(prod, 2 * np.cosh(p.beta * s), rtol=1e-12)


@pytest.mark.parametrize("k,l", CASES)
def test_zero_placement(k, l):
    p = build_params(k, l)
    assert ansatz.zero_placement_errors(p) == 0
    owners = sorted(ansatz.zero_owner(p, q) for q in range(2 * k))
    # only components with j = 0 mod m vanish, each at 2m of the 2k zeros
    expected = sorted(j for j in range(0, k, p.m) for _ in range(2 * p.m))
    assert owners == expected


@pytest.mark.parametrize("k,l", CASES)
def test_slopes(k, l):
    p = build_params(k, l)
    sl = ansatz.slopes(p)
    assert abs(sl.sum()) < 1e-12
    assert np.all(np.abs(sl) <= p.beta * (p.m - 1) / p.k + 1e-12)


@pytest.mark.parametrize("k", [1, 2, 3, 5])
def test_shift_matrix_cycles(k):
    S = ansatz.shift_matrix(k)
    assert np.allclose(np.linalg.matrix_power(S, k), np.eye(k))


@pytest.mark.parametrize("k,l", CASES)
def test_twist_is_pointwise_gauge(k, l):
    p = build_params(k, l)
    U = ansatz.twist_matrix(p)
    for s in (0.1 + 0.3j, -0.7 + 0.05j):
        assert np.allclose(ansatz.gauge_twist_at(p, s), U, atol=1e-12)


def test_grid_geometry():
    p = build_params(2, 1, beta=3.0)
    g = ansatz.make_grid(p, 10, 12, L=2.0)
    assert g.x1[0] == -2.0 and g.x1[-1] == 2.0
    assert g.h_t * g.n_t == pytest.approx(2 * np.pi / 3.0)
    assert g.weights().sum() == pytest.approx(4.0 * 2 * np.pi / 3.0)
    assert g.s().shape == (10, 12)


@pytest.mark.parametrize("args", [(5, 8, 1.0), (2, 8, 1.0), (8, 2, 1.0), (8, 8, -1.0)])
def test_grid_rejects(args):
    p = build_params(2, 1)
    n_r, n_t, L = args
    with pytest.raises((IncompatibleGridError, InvalidParameterError)):
        ansatz.make_grid(p, n_r, n_t, L)


def test_component_index_is_cyclic():
    p = build_params(3, 1)
    s = np.array([0.2 + 0.1j])
    assert np.allclose(ansatz.phi_component(p, 4, s), ansatz.phi_component(p, 1, s))

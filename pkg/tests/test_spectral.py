import math
from fractions import Fraction

import numpy as np
import pytest
import sympy
from hypothesis import given, settings
from hypothesis import strategies as st
from sympy.matrices.normalforms import smith_normal_form as sympy_snf

from monochain import spectral
from monochain.errors import InvalidParameterError


def _sympy_factors(rows):
    m = sympy_snf(sympy.Matrix(rows), domain=sympy.ZZ)
    d = [abs(int(m[i, i])) for i in range(min(m.shape))]
    return sorted(x for x in d if x != 0)


@settings(max_examples=60, deadline=None)
@given(st.integers(1, 4).flatmap(lambda r: st.integers(r, 5).flatmap(
    lambda c: st.lists(st.lists(st.integers(-30, 30), min_size=c, max_size=c),
                       min_size=r, max_size=r))))
def test_snf_matches_sympy(rows):
    ours = sorted(x for x in spectral.smith_normal_form(rows) if x != 0)
    assert ours == _sympy_factors(rows)


@settings(max_examples=40, deadline=None)
@given(st.lists(st.lists(st.integers(-20, 20), min_size=3, max_size=3), min_size=3, max_size=3))
def test_snf_divisibility_and_determinant(rows):
    f = spectral.smith_normal_form(rows)
    nz = [x for x in f if x]
    for a, b in zip(nz, nz[1:]):
        assert b % a == 0
    det = abs(int(sympy.Matrix(rows).det()))
    if det:
        assert math.prod(f) == det


@pytest.mark.parametrize("rows,expected", [
    ([[2, 4, 4], [-6, 6, 12], [10, -4, -16]], [2, 6, 12]),
    ([[1, 0], [0, 0]], [1]),
    ([[6]], [6]),
])
def test_snf_frozen(rows, expected):
    assert [x for x in spectral.smith_normal_form(rows) if x] == expected


def _index_by_determinant(k):
    # |Gamma / (1 - rho) Gamma| = |det_R (1 - rho)| = prod |1 - rho_j|^2
    j = np.arange(1, k)
    return float(np.prod(np.abs(1 + np.exp(-1j * np.pi * j / k)) ** 2))


@pytest.mark.parametrize("k", range(2, 9))
def test_group_order_is_k(k):
    lat = spectral.build_lattice(k)
    assert spectral.group_order(lat) == k
    assert round(_index_by_determinant(k)) == k


@pytest.mark.parametrize("k", range(2, 9))
def test_quotient_factors_match_sympy(k):
    lat = spectral.build_lattice(k)
    order, factors, den = spectral.quotient_order(lat)
    q = spectral.rational_coordinates(lat.pi_basis(), lat.gamma[0])
    n = len(q)
    rows = [[den if i == r else 0 for i in range(n)] + [int(q[r] * den)] for r in range(n)]
    assert order == den**n // math.prod(_sympy_factors(rows))


@pytest.mark.parametrize("k", range(2, 9))
def test_fixed_points(k):
    lat = spectral.build_lattice(k)
    for l in range(k):
        assert spectral.verify_fixed_point(lat, l) < 1e-10
    assert spectral.fixed_points_distinct(lat)


def test_pi_generators_lie_in_gamma():
    lat = spectral.build_lattice(5)
    basis = lat.gamma_basis()
    for v in lat.pi + lat.gamma:
        assert spectral.in_lattice(basis, v)
    assert not spectral.in_lattice(basis, 0.5 * lat.gamma[0])


def test_rational_coordinates_exact():
    lat = spectral.build_lattice(3)
    q = spectral.rational_coordinates(lat.pi_basis(), lat.gamma[0])
    assert all(isinstance(x, Fraction) for x in q)
    recon = sum(float(c) * v for c, v in zip(q, spectral.realify(lat.pi[: 2 * lat.k - 2]).T))
    assert np.allclose(recon, spectral.realify([lat.gamma[0]])[:, 0])


def test_reduce_mod_idempotent():
    lat = spectral.build_lattice(4)
    basis = lat.pi_basis()
    v = lat.fixed_points[1] + 3 * lat.pi[0] - 2 * lat.pi[2]
    r1 = spectral.reduce_mod(basis, v)
    assert np.allclose(r1, spectral.reduce_mod(basis, lat.fixed_points[1]))
    assert np.allclose(spectral.reduce_mod(basis, lat.pi[1]), 0.0)


def test_classify_report():
    rep = spectral.classify(spectral.build_params(4, 2))
    d = rep.to_dict()
    assert len(d["entries"]) == 4
    assert d["group_order"] == 4
    assert rep.charges == [4, 1, 2, 1]
    assert d["group"] == "Z_{8}^{(4)}"
    assert all(not e["invariant"] for e in d["odd_groups"])


def test_k1_is_trivial():
    lat = spectral.build_lattice(1)
    assert spectral.group_order(lat) == 1
    rep = spectral.classify(spectral.build_params(1, 0))
    assert len(rep.entries) == 1


@pytest.mark.parametrize("kw", [dict(k=0), dict(k=2, c_abs=0.0),
                                dict(k=2, beta=-1.0), dict(k=2.5)])
def test_invalid_params(kw):
    with pytest.raises(InvalidParameterError):
        spectral.build_params(**kw)


def test_params_derived():
    p = spectral.build_params(4, 2, beta=3.0)
    assert p.m == 2
    assert p.period == pytest.approx(2 * np.pi / 3.0)
    assert p.twist_shift == 0
    assert spectral.build_params(3, 1).twist_shift == 2
    assert spectral.build_params(2, 3).l == 1

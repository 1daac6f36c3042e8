import numpy as np
import pytest
from hypothesis import given, settings
from hypothesis import strategies as st

from monochain import nahm
from monochain.errors import InvalidParameterError, ScanQualityError
from monochain.spectral import build_params

Y = (0.3, -0.2, 0.7)


def test_operator_hermitian(fields_21_small):
    op = nahm.assemble_operator(fields_21_small, Y)
    assert op.hermiticity_error() == 0.0
    assert op.matrix.shape == (16 * 16 * 4, 16 * 16 * 4)


def test_template_matches_direct(fields_21_small):
    t = nahm.OperatorTemplate(fields_21_small)
    for y in [Y, (1.1, 0.4, 2.0)]:
        a = t.matrix(y)
        b = nahm.assemble_operator(fields_21_small, y).matrix
        assert abs(a - b).max() < 1e-13


@pytest.mark.parametrize("method", ["shift-invert", "lobpcg"])
def test_sparse_matches_dense(fields_21_small, method):
    M = nahm.assemble_operator(fields_21_small, Y).matrix
    ref, _ = nahm.lowest_eigenpairs(M, 3, method="dense")
    vals, vecs = nahm.lowest_eigenpairs(M, 3, method=method)
    scale = np.abs(ref).max()
    tol = 1e-8 if method == "shift-invert" else 1e-5
    assert np.abs(vals - ref).max() < tol * scale
    assert np.linalg.norm(M @ vecs - vecs * vals) < 1e-6 * scale


def test_zero_modes_orthonormal(fields_21_small):
    op = nahm.assemble_operator(fields_21_small, Y)
    pair = nahm.zero_modes(op)
    assert np.allclose(pair.gram, np.eye(2), atol=1e-12)
    assert pair.eigenvalues[0] <= pair.eigenvalues[1] <= pair.eigenvalues[2]


def test_remix_invariance(fields_21_small):
    pair = nahm.zero_modes(nahm.assemble_operator(fields_21_small, Y))
    rng = np.random.default_rng(5)
    for _ in range(5):
        assert nahm.remix_invariance(pair, fields_21_small.grid, rng) < 1e-10


def test_higgs_field_properties(fields_21_small):
    solver = nahm.PointSolver(fields_21_small)
    ph, _ = solver.phihat(Y)
    assert ph.shape == (2, 2)
    # anti-hermitian and (numerically) trace free
    assert np.allclose(ph, -ph.conj().T, atol=1e-12)
    assert abs(np.trace(ph)) < 1e-10 * np.abs(ph).max()
    assert nahm.norm2(ph) >= 0


def test_periodicity(fields_21_small):
    solver = nahm.PointSolver(fields_21_small)
    assert nahm.periodicity_error(solver, [Y, (-0.5, 0.9, 0.1)]) < 1e-10


def test_warm_start_same_answer(fields_21_small):
    solver = nahm.PointSolver(fields_21_small)
    cold = solver.pair(Y)
    y2 = (Y[0], Y[1], Y[2] + 0.05)
    warm = solver.pair(y2, warm=cold)
    assert np.allclose(warm.eigenvalues, solver.pair(y2).eigenvalues, rtol=1e-8, atol=1e-10)


def test_unknown_method(fields_21_small):
    with pytest.raises(InvalidParameterError):
        nahm.lowest_eigenpairs(nahm.assemble_operator(fields_21_small, Y).matrix, 3, method="qr")


def test_scan_small(fields_21_small):
    lat = nahm.make_ylattice(fields_21_small.params, n=3, n3=3)
    g = nahm.scan(fields_21_small, lat)
    assert g.phihat_norm2.shape == (3, 3, 3)
    assert np.all(np.isfinite(g.phihat_norm2))
    assert g.failed_fraction == 0.0
    # energy only on the interior of the (y1, y2) square; y3 wraps
    assert np.all(np.isfinite(g.energy[1, 1])) and np.isnan(g.energy[0, 0, 0])
    assert g.gram_error < 1e-10


def test_scan_reproducible(fields_21_small):
    lat = nahm.make_ylattice(fields_21_small.params, n=3, n3=2)
    a = nahm.scan(fields_21_small, lat, seed=3)
    b = nahm.scan(fields_21_small, lat, seed=3, threads=2)
    assert np.array_equal(a.phihat_norm2, b.phihat_norm2)


def test_scan_quality_error(fields_21_small, monkeypatch):
    def boom(*a, **k):
        raise np.linalg.LinAlgError("forced")
    monkeypatch.setattr(nahm, "lowest_eigenpairs", boom)
    lat = nahm.make_ylattice(fields_21_small.params, n=3, n3=2)
    with pytest.raises(ScanQualityError):
        nahm.scan(fields_21_small, lat)


def test_energy_density_exact_on_quadratics():
    p = build_params(2, 1)
    lat = nahm.make_ylattice(p, extent=2.0, n=9, n3=4)
    Y1, Y2, _ = np.meshgrid(lat.y1, lat.y2, lat.y3, indexing="ij")
    E = nahm.energy_density(Y1**2 + 2 * Y2**2 + Y1 * Y2, lat)
    assert np.allclose(E[1:-1, 1:-1], 6.0)
    assert np.all(np.isnan(E[0])) and np.all(np.isnan(E[:, -1]))


def test_ylattice():
    p = build_params(2, 1, beta=2.0)
    lat = nahm.make_ylattice(p, n=5, n3=4)
    assert lat.shape == (5, 5, 4) and lat.wraps
    assert lat.y1[-1] == pytest.approx(3.0)
    assert lat.spacing[2] == pytest.approx(0.5)
    assert len(list(lat.points())) == 100
    assert not nahm.make_ylattice(p, n=5, n3=4, periods=0.5).wraps
    with pytest.raises(InvalidParameterError):
        nahm.make_ylattice(p, n=2)


@settings(max_examples=40, deadline=None)
@given(n=st.integers(1, 4), size=st.integers(24, 60), phase=st.floats(0, 2 * np.pi))
def test_count_maxima_cosine(n, size, phase):
    t = 2 * np.pi * np.arange(size) / size
    assert len(nahm.count_maxima(np.cos(n * t + phase))) == n


def test_count_maxima_edge_cases():
    assert nahm.count_maxima(np.ones(10)) == []
    assert nahm.count_maxima(np.array([0.0, 1.0])) == []
    # a bump below the prominence threshold is not a maximum
    prof = np.cos(2 * np.pi * np.arange(40) / 40) + 0.001 * np.cos(2 * np.pi * 7 * np.arange(40) / 40)
    assert len(nahm.count_maxima(prof)) == 1
    assert nahm.count_maxima(np.array([0, 1, 0, 0, 0.0]), cyclic=False) == [1]

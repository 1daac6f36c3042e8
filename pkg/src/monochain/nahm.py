"""Numerical Nahm transform: zero modes of the Dirac Laplacian and the monopole fields.

For each point y in R^3 the positive operator ``M(y) = D_y D_y^dagger`` acts on
2k-component spinors on the cylinder grid.  Its two-dimensional near-kernel
gives the transformed Higgs field ``phihat_ab = i int x1 <Z_a, Z_b>``, and the
energy density is the Laplacian of ``|phihat|^2``.

Unknowns are ordered ``(i * n_t + t) * 2k + component``.
"""
from __future__ import annotations

import logging
import math
import time
from concurrent.futures import ThreadPoolExecutor
from dataclasses import dataclass, field

import numpy as np
import scipy.sparse as sp
import scipy.sparse.linalg as spla

from .ansatz import CylinderGrid
from .errors import InvalidParameterError, ScanQualityError
from .spectral import ChainParams
from .toda import HitchinFields, commutator, d1, d2, dagger

log = logging.getLogger(__name__)

GAP_RATIO = 0.01
DEFAULT_SHIFT = -1.0
EIG_TOL = 1e-10
QUALITY_OK, QUALITY_DEGRADED, QUALITY_FAILED = 0, 1, 2


class OperatorTemplate:
    """y-independent part of the operator, with every y-dependent piece on one pattern.

    ``M(y) = M0 + |eta|^2 I - conj(eta) P - eta P^H + e^{i h_t y3} F + e^{-i h_t y3} F^H``
    where ``eta = y1 + i y2``, P is phi on both spinor halves and F holds the
    forward x2 links.  All pieces share one sparsity pattern, so assembly for
    a new y is a handful of vector operations.
    """

    def __init__(self, fields: HitchinFields):
        self.fields = fields
        g = fields.grid
        k = fields.params.k
        self.k = k
        self.n_r, self.n_t = g.n_r, g.n_t
        self.size = 2 * k * g.n_r * g.n_t
        self._build()

    def _build(self) -> None:
        f = self.fields
        g = f.grid
        k, nr, nt = self.k, self.n_r, self.n_t
        hr, ht = g.h_r, g.h_t
        n2 = 2 * k
        phi = f.phi
        phd = dagger(phi)
        eye = np.eye(k)
        comm = commutator(phi, phd)
        anti = 0.5 * (phi @ phd + phd @ phi)
        A1m, A2m = f.A1, f.A2
        D1 = d1(phi, hr) + commutator(A1m, phi)
        D2 = d2(f, phi) + commutator(A2m, phi)
        ds_phi = 0.5 * (D1 - 1j * D2)
        B = np.zeros((nr, nt, n2, n2), dtype=complex)
        B[..., :k, :k] = comm + anti
        B[..., k:, k:] = -comm + anti
        B[..., :k, k:] = -2.0 * ds_phi
        B[..., k:, :k] = dagger(-2.0 * ds_phi)
        B += (2.0 / hr**2 + 2.0 / ht**2) * np.eye(n2)

        nodes = np.arange(nr * nt).reshape(nr, nt)
        ci = np.arange(n2)
        pieces = {"M0": [], "I": [], "P": [], "F": []}

        def block(pr, pc, blocks, key):
            rr = pr[..., None, None] * n2 + ci[:, None]
            cc = pc[..., None, None] * n2 + ci[None, :]
            shape = blocks.shape
            pieces[key].append((np.broadcast_to(rr, shape).ravel(),
                                np.broadcast_to(cc, shape).ravel(), blocks.ravel()))

        def diag_links(pr, pc, vals, key):
            rr = pr[..., None] * n2 + ci
            cc = pc[..., None] * n2 + ci
            pieces[key].append((rr.ravel(), cc.ravel(), vals.ravel()))

        block(nodes, nodes, B, "M0")
        diag_links(nodes, nodes, np.ones((nr, nt, n2)), "I")
        Pblk = np.zeros((nr, nt, n2, n2), dtype=complex)
        Pblk[..., :k, :k] = phi
        Pblk[..., k:, k:] = phi
        # -conj(eta) P - eta P^H comes from the anticommutator with phi - eta
        block(nodes, nodes, Pblk, "P")

        a1 = f.a1_diag()
        a2 = f.a2_diag()
        lk = np.exp(hr * 0.5 * (a1[:-1] + a1[1:]))
        lk2 = np.concatenate([lk, lk], axis=-1)
        diag_links(nodes[:-1], nodes[1:], -lk2 / hr**2, "M0")
        diag_links(nodes[1:], nodes[:-1], -lk2.conj() / hr**2, "M0")

        a2mid = np.empty_like(a2)
        a2mid[:, :-1] = 0.5 * (a2[:, :-1] + a2[:, 1:])
        # A2 one period up equals U^-1 A2 U, a permutation of the diagonal
        a2mid[:, -1] = 0.5 * (a2[:, -1] + np.roll(a2[:, 0], -f.params.twist_shift, axis=-1))
        lk = np.exp(ht * a2mid)
        lk2 = np.concatenate([lk, lk], axis=-1)
        diag_links(nodes[:, :-1], nodes[:, 1:], -lk2[:, :-1] / ht**2, "F")
        Ui = f.twist_U.conj().T
        wrap = -(lk2[:, -1][..., :, None] * np.kron(np.eye(2), Ui)) / ht**2
        block(nodes[:, -1], nodes[:, 0], wrap, "F")

        rows, cols, which, vals = [], [], [], []
        for tag, key in enumerate(("M0", "I", "P", "F")):
            for r, c, v in pieces[key]:
                rows.append(r)
                cols.append(c)
                vals.append(v)
                which.append(np.full(r.size, tag))
        # the adjoint pieces P^H and F^H live on the transposed positions
        for tag, key in ((4, "P"), (5, "F")):
            for r, c, v in pieces[key]:
                rows.append(c)
                cols.append(r)
                vals.append(np.conj(v))
                which.append(np.full(r.size, tag))
        rows = np.concatenate(rows)
        cols = np.concatenate(cols)
        vals = np.concatenate(vals).astype(complex)
        which = np.concatenate(which)
        n = self.size
        lin = rows.astype(np.int64) * n + cols
        keep = vals != 0
        uniq, inv = np.unique(lin[keep], return_inverse=True)
        self._rows = (uniq // n).astype(np.int64)
        self._cols = (uniq % n).astype(np.int64)
        nnz = uniq.size
        data = np.zeros((6, nnz), dtype=complex)
        np.add.at(data, (which[keep], inv), vals[keep])
        self._data = data
        self._indptr = np.concatenate([[0], np.cumsum(np.bincount(self._rows, minlength=n))])
        self._transpose = np.searchsorted(uniq, self._cols * n + self._rows)
        if not np.array_equal(uniq[self._transpose], self._cols * n + self._rows):
            raise RuntimeError("operator pattern is not symmetric")

    def data_at(self, y) -> np.ndarray:
        y1, y2, y3 = (float(v) for v in y)
        eta = complex(y1, y2)
        ph = np.exp(1j * self.fields.grid.h_t * y3)
        d = self._data
        vals = (d[0] + abs(eta) ** 2 * d[1] - np.conj(eta) * d[2] - eta * d[4]
                + ph * d[3] + np.conj(ph) * d[5])
        # exact hermiticity: average with the conjugate transpose
        return 0.5 * (vals + np.conj(vals[self._transpose]))

    def matrix(self, y) -> sp.csr_matrix:
        return sp.csr_matrix((self.data_at(y), self._cols, self._indptr),
                             shape=(self.size, self.size))


@dataclass
class DiracOperator:
    y: tuple
    matrix: sp.csr_matrix
    quadrature: np.ndarray   # weight per unknown
    grid: CylinderGrid
    k: int

    @property
    def size(self) -> int:
        return self.matrix.shape[0]

    def hermiticity_error(self) -> float:
        D = self.matrix - self.matrix.getH()
        return float(abs(D).max()) if D.nnz else 0.0


def _check_y(y) -> tuple:
    y = tuple(float(v) for v in y)
    if len(y) != 3 or not all(math.isfinite(v) for v in y):
        raise InvalidParameterError(f"y must be a finite 3-vector, got {y!r}")
    return y


def spinor_weights(grid: CylinderGrid, k: int) -> np.ndarray:
    return np.repeat(grid.weights().ravel(), 2 * k)


def assemble_operator(fields: HitchinFields, y, template: OperatorTemplate | None = None
                      ) -> DiracOperator:
    y = _check_y(y)
    template = template or OperatorTemplate(fields)
    return DiracOperator(y=y, matrix=template.matrix(y),
                         quadrature=spinor_weights(fields.grid, fields.params.k),
                         grid=fields.grid, k=fields.params.k)


@dataclass
class ZeroModePair:
    y: tuple
    Z: np.ndarray            # (n_r, n_t, 2k, 2), orthonormal in the weighted inner product
    eigenvalues: np.ndarray  # three smallest
    gram: np.ndarray
    quality: int = QUALITY_OK
    third: np.ndarray | None = None  # raw third eigenvector, kept for warm starts

    @property
    def gap_ratio(self) -> float:
        lam = self.eigenvalues
        return float(max(abs(lam[0]), abs(lam[1])) / abs(lam[2]))

    @property
    def gap_ok(self) -> bool:
        return self.gap_ratio < GAP_RATIO

    @property
    def Z1(self) -> np.ndarray:
        return self.Z[..., 0]

    @property
    def Z2(self) -> np.ndarray:
        return self.Z[..., 1]


def weighted_gram(Z: np.ndarray, w: np.ndarray) -> np.ndarray:
    """Discrete L2 Gram matrix of the columns of Z (shape (n_r, n_t, 2k, p))."""
    return np.einsum("it,itca,itcb->ab", w, Z.conj(), Z)


def orthonormalize(Z: np.ndarray, w: np.ndarray) -> np.ndarray:
    """Symmetric (Loewdin) orthonormalization in the weighted inner product."""
    G = weighted_gram(Z, w)
    e, V = np.linalg.eigh(G)
    return Z @ (V @ np.diag(e**-0.5) @ V.conj().T)


def lowest_eigenpairs(M, n: int = 3, method: str = "shift-invert", sigma: float = DEFAULT_SHIFT,
                      v0=None, seed: int = 0, tol: float = EIG_TOL, ncv: int = 16):
    """The ``n`` algebraically smallest eigenpairs, sorted ascending."""
    if method == "dense":
        vals, vecs = np.linalg.eigh(M.toarray() if sp.issparse(M) else M)
        return vals[:n], vecs[:, :n]
    if method == "shift-invert":
        if v0 is None:
            rng = np.random.default_rng(seed)
            v0 = rng.standard_normal(M.shape[0]) + 1j * rng.standard_normal(M.shape[0])
        # minimum-degree ordering on the symmetric pattern keeps the fill low
        lu = spla.splu(sp.csc_matrix(M - sigma * sp.identity(M.shape[0], format="csr")),
                       permc_spec="MMD_AT_PLUS_A")
        opinv = spla.LinearOperator(M.shape, matvec=lu.solve, dtype=complex)
        vals, vecs = spla.eigsh(M, k=n, sigma=sigma, which="LM", v0=v0, tol=tol,
                                OPinv=opinv, ncv=ncv)
    elif method == "lobpcg":
        size = M.shape[0]
        rng = np.random.default_rng(seed)
        X = v0 if v0 is not None and np.ndim(v0) == 2 else \
            rng.standard_normal((size, n)) + 1j * rng.standard_normal((size, n))
        diag = M.diagonal().real - sigma
        Pc = sp.diags(1.0 / diag)
        vals, vecs = spla.lobpcg(M, X, M=Pc, largest=False, tol=1e-9, maxiter=2000)
    else:
        raise InvalidParameterError(f"unknown eigensolver {method!r}")
    o = np.argsort(vals)
    return vals[o], vecs[:, o]


def zero_modes(op: DiracOperator, method: str = "shift-invert", sigma: float = DEFAULT_SHIFT,
               warm: ZeroModePair | None = None, seed: int = 0) -> ZeroModePair:
    """Three lowest eigenpairs; the lowest two orthonormalized as the zero-mode pair."""
    k, g = op.k, op.grid
    v0 = None
    if warm is not None:
        cols = [warm.Z[..., 0].ravel(), warm.Z[..., 1].ravel()]
        if warm.third is not None:
            cols.append(warm.third)
        v0 = np.stack(cols, axis=1) if method == "lobpcg" and len(cols) == 3 else sum(cols)
    vals, vecs = lowest_eigenpairs(op.matrix, 3, method=method, sigma=sigma, v0=v0, seed=seed)
    Z = vecs[:, :2].reshape(g.n_r, g.n_t, 2 * k, 2)
    w = g.weights()
    Z = orthonormalize(Z, w)
    pair = ZeroModePair(y=op.y, Z=Z, eigenvalues=np.asarray(vals, dtype=float),
                        gram=weighted_gram(Z, w), third=vecs[:, 2].copy())
    if not pair.gap_ok:
        pair.quality = QUALITY_DEGRADED
    return pair


def higgs_field(pair: ZeroModePair, grid: CylinderGrid) -> np.ndarray:
    """phihat_ab = i * sum_nodes w x1 Z_a^dagger Z_b (anti-hermitian 2x2)."""
    w = grid.weights() * grid.x1[:, None]
    return 1j * weighted_gram(pair.Z, w)


def norm2(phihat: np.ndarray) -> float:
    """Half the trace of phihat phihat^dagger."""
    return float(0.5 * np.trace(phihat @ phihat.conj().T).real)


class PointSolver:
    """Evaluates phihat at arbitrary y for fixed Hitchin fields."""

    def __init__(self, fields: HitchinFields, method: str = "shift-invert",
                 sigma: float = DEFAULT_SHIFT, seed: int = 0):
        self.fields = fields
        self.template = OperatorTemplate(fields)
        self.method = method
        self.sigma = sigma
        self.seed = seed

    def operator(self, y) -> DiracOperator:
        return assemble_operator(self.fields, y, self.template)

    def pair(self, y, warm: ZeroModePair | None = None) -> ZeroModePair:
        return zero_modes(self.operator(y), self.method, self.sigma, warm, self.seed)

    def phihat(self, y, warm: ZeroModePair | None = None) -> tuple[np.ndarray, ZeroModePair]:
        p = self.pair(y, warm)
        return higgs_field(p, self.fields.grid), p

    def norm2(self, y) -> float:
        return norm2(self.phihat(y)[0])


@dataclass
class YLattice:
    """Rectangular lattice of monopole-space points.

    ``y3`` is uniform with spacing ``periods * beta / n3``; when ``periods`` is
    a whole number the lattice wraps in y3.
    """

    y1: np.ndarray
    y2: np.ndarray
    y3: np.ndarray
    beta: float
    periods: float = 1.0

    @property
    def shape(self) -> tuple[int, int, int]:
        return (self.y1.size, self.y2.size, self.y3.size)

    @property
    def wraps(self) -> bool:
        return abs(self.periods - round(self.periods)) < 1e-12 and self.periods >= 1

    @property
    def spacing(self) -> tuple[float, float, float]:
        return (float(self.y1[1] - self.y1[0]), float(self.y2[1] - self.y2[0]),
                float(self.periods * self.beta / self.y3.size))

    def points(self):
        for i, a in enumerate(self.y1):
            for j, b in enumerate(self.y2):
                for t, c in enumerate(self.y3):
                    yield (i, j, t), (float(a), float(b), float(c))

    def to_dict(self) -> dict:
        return {"y1": [float(self.y1[0]), float(self.y1[-1]), int(self.y1.size)],
                "y2": [float(self.y2[0]), float(self.y2[-1]), int(self.y2.size)],
                "y3": [float(self.y3[0]), int(self.y3.size)], "periods": self.periods}


def make_ylattice(params: ChainParams, extent: float | None = None, n: int = 33, n3: int = 16,
                  periods: float = 1.0, y3_offset: float = 0.0) -> YLattice:
    if extent is None:
        extent = 3.0 * params.k / params.beta
    if n < 3 or n3 < 1 or not extent > 0:
        raise InvalidParameterError("y-lattice needs n >= 3, n3 >= 1 and a positive extent")
    ax = np.linspace(-extent, extent, n)
    y3 = y3_offset + np.arange(n3) * (periods * params.beta / n3)
    return YLattice(y1=ax, y2=ax.copy(), y3=y3, beta=params.beta, periods=periods)


@dataclass
class MonopoleGrid:
    lattice: YLattice
    phihat_norm2: np.ndarray
    energy: np.ndarray
    quality: np.ndarray
    eigenvalues: np.ndarray       # (n1, n2, n3, 3)
    trace: np.ndarray             # |Tr phihat| per point
    gram_error: float = 0.0
    elapsed: float = 0.0
    params: ChainParams | None = None

    @property
    def gap_fraction(self) -> float:
        lam = np.abs(self.eigenvalues)
        ok = np.maximum(lam[..., 0], lam[..., 1]) < GAP_RATIO * lam[..., 2]
        return float(np.mean(ok & (self.quality != QUALITY_FAILED)))

    @property
    def failed_fraction(self) -> float:
        return float(np.mean(self.quality == QUALITY_FAILED))


def _scan_column(solver: PointSolver, lattice: YLattice, i: int, j: int):
    out = []
    warm = None
    for t, y3 in enumerate(lattice.y3):
        y = (float(lattice.y1[i]), float(lattice.y2[j]), float(y3))
        try:
            ph, pair = solver.phihat(y, warm)
            warm = pair
            out.append((t, norm2(ph), pair.quality, pair.eigenvalues,
                        abs(np.trace(ph)), float(np.abs(pair.gram - np.eye(2)).max())))
        except (spla.ArpackNoConvergence, spla.ArpackError, np.linalg.LinAlgError,
                RuntimeError) as exc:
            log.warning("zero modes failed at y=%s: %s", y, exc)
            warm = None
            out.append((t, np.nan, QUALITY_FAILED, np.full(3, np.nan), np.nan, 0.0))
    return i, j, out


def _fill_failed(values: np.ndarray, quality: np.ndarray, wraps: bool) -> np.ndarray:
    """Replace failed points by the mean of their finite lattice neighbours."""
    v = values.copy()
    bad = np.argwhere(quality == QUALITY_FAILED)
    for idx in bad:
        acc = []
        for ax in range(3):
            for d in (-1, 1):
                nb = list(idx)
                nb[ax] += d
                if ax == 2 and wraps:
                    nb[2] %= v.shape[2]
                if 0 <= nb[ax] < v.shape[ax] and np.isfinite(values[tuple(nb)]):
                    acc.append(values[tuple(nb)])
        v[tuple(idx)] = np.mean(acc) if acc else np.nan
    return v


def energy_density(values: np.ndarray, lattice: YLattice) -> np.ndarray:
    """7-point Laplacian on interior points; NaN where the stencil leaves the lattice."""
    h1, h2, h3 = lattice.spacing
    E = np.full(values.shape, np.nan)
    v = values
    core = ((v[2:, 1:-1] + v[:-2, 1:-1] - 2 * v[1:-1, 1:-1]) / h1**2
            + (v[1:-1, 2:] + v[1:-1, :-2] - 2 * v[1:-1, 1:-1]) / h2**2)
    if lattice.wraps and v.shape[2] >= 3:
        c = v[1:-1, 1:-1]
        E[1:-1, 1:-1] = core + (np.roll(c, 1, 2) + np.roll(c, -1, 2) - 2 * c) / h3**2
    elif v.shape[2] >= 3:
        c = v[1:-1, 1:-1]
        E[1:-1, 1:-1, 1:-1] = core[:, :, 1:-1] + (c[:, :, 2:] + c[:, :, :-2] - 2 * c[:, :, 1:-1]) / h3**2
    return E


def scan(fields: HitchinFields, lattice: YLattice, threads: int = 1,
         method: str = "shift-invert", sigma: float = DEFAULT_SHIFT, seed: int = 0,
         max_failed: float = 0.05) -> MonopoleGrid:
    """Evaluate |phihat|^2 on the lattice and its energy density.

    Columns of fixed (y1, y2) are independent tasks; within a column, each
    y3-point warm-starts from its predecessor.  Results are written by index,
    so output does not depend on thread scheduling.
    """
    t0 = time.perf_counter()
    solver = PointSolver(fields, method=method, sigma=sigma, seed=seed)
    n1, n2, n3 = lattice.shape
    vals = np.full((n1, n2, n3), np.nan)
    quality = np.zeros((n1, n2, n3), dtype=np.int8)
    eig = np.full((n1, n2, n3, 3), np.nan)
    trace = np.full((n1, n2, n3), np.nan)
    gram_err = 0.0
    tasks = [(i, j) for i in range(n1) for j in range(n2)]
    if threads > 1:
        with ThreadPoolExecutor(max_workers=threads) as pool:
            results = list(pool.map(lambda ij: _scan_column(solver, lattice, *ij), tasks))
    else:
        results = [_scan_column(solver, lattice, i, j) for i, j in tasks]
    for i, j, col in results:
        for t, v, q, lam, tr, ge in col:
            vals[i, j, t] = v
            quality[i, j, t] = q
            eig[i, j, t] = lam
            trace[i, j, t] = tr
            gram_err = max(gram_err, ge)
    failed = float(np.mean(quality == QUALITY_FAILED))
    if failed > max_failed:
        raise ScanQualityError(f"{failed:.1%} of scan points failed (limit {max_failed:.0%})")
    vals = _fill_failed(vals, quality, lattice.wraps)
    return MonopoleGrid(lattice=lattice, phihat_norm2=vals, energy=energy_density(vals, lattice),
                        quality=quality, eigenvalues=eig, trace=trace, gram_error=gram_err,
                        elapsed=time.perf_counter() - t0, params=fields.params)


# ---------------------------------------------------------------- diagnostics

def remix_invariance(pair: ZeroModePair, grid: CylinderGrid, rng=None) -> float:
    """Change of |phihat|^2 under a random unitary remixing of the pair."""
    rng = np.random.default_rng(0) if rng is None else rng
    X = rng.standard_normal((2, 2)) + 1j * rng.standard_normal((2, 2))
    W, _ = np.linalg.qr(X)
    mixed = ZeroModePair(y=pair.y, Z=pair.Z @ W, eigenvalues=pair.eigenvalues, gram=pair.gram)
    a = norm2(higgs_field(pair, grid))
    b = norm2(higgs_field(mixed, grid))
    return abs(a - b) / max(abs(a), 1e-300)


def periodicity_error(solver: PointSolver, points) -> float:
    """Max relative change of |phihat|^2 under y3 -> y3 + beta."""
    beta = solver.fields.params.beta
    worst = 0.0
    for y in points:
        a = solver.norm2(y)
        b = solver.norm2((y[0], y[1], y[2] + beta))
        worst = max(worst, abs(a - b) / max(abs(a), 1e-300))
    return worst


def log_slope(solver: PointSolver, rhos, n3: int = 4, angle: float = 0.0) -> dict:
    """Fit |phihat| = u ln(rho) + v along a ray; returns u and its ratio to k/beta.

    |phihat| is averaged over ``n3`` values of y3 spanning one period.
    """
    p = solver.fields.params
    rhos = np.asarray(rhos, dtype=float)
    y3s = np.arange(n3) * p.beta / n3
    mags = []
    for r in rhos:
        vals = [math.sqrt(max(solver.norm2((r * math.cos(angle), r * math.sin(angle), y3)), 0.0))
                for y3 in y3s]
        mags.append(float(np.mean(vals)))
    u, v = np.polyfit(np.log(rhos), mags, 1)
    return {"u": float(u), "v": float(v), "ratio": float(u / (p.k / p.beta)),
            "rho": rhos.tolist(), "norm": mags}


def _periodic_interpolators(grid: MonopoleGrid, data: np.ndarray):
    from scipy.interpolate import RegularGridInterpolator

    lat = grid.lattice
    h3 = lat.spacing[2]
    # pad y3 cyclically so interpolation across the seam is available
    pad = 3
    y3 = np.concatenate([lat.y3[0] + h3 * np.arange(-pad, 0), lat.y3,
                         lat.y3[-1] + h3 * np.arange(1, pad + 1)])
    d = np.concatenate([data[:, :, -pad:], data, data[:, :, :pad]], axis=2)
    lin = RegularGridInterpolator((lat.y1, lat.y2, y3), d, method="linear")
    cub = RegularGridInterpolator((lat.y1, lat.y2, y3), d, method="cubic")
    return lin, cub


def symmetry_image_check(grid: MonopoleGrid, sign: int = 1, factor: float = 3.0,
                         floor: float = 1e-8) -> dict:
    """Compare energy at lattice points with cubic interpolation at their symmetry images.

    The image of y is the rotation of (y1, y2) by pi/k together with a y3
    shift of ``sign * l * beta / k``.  The allowed error at each point is
    ``factor`` times the largest |cubic - linear| within half a cell of the
    image, plus ``floor * max|E|``.
    """
    p = grid.params
    lat = grid.lattice
    if not lat.wraps:
        raise InvalidParameterError("symmetry check needs a lattice spanning whole y3 periods")
    if min(lat.shape[:2]) < 6:
        raise InvalidParameterError("symmetry check needs at least 6 lattice points in y1 and y2")
    E = grid.energy
    # interior of the energy grid, which is itself the lattice interior
    sub_y1, sub_y2 = lat.y1[1:-1], lat.y2[1:-1]
    sub = YLattice(y1=sub_y1, y2=sub_y2, y3=lat.y3, beta=lat.beta, periods=lat.periods)
    Ei = E[1:-1, 1:-1]
    lin, cub = _periodic_interpolators(MonopoleGrid(sub, Ei, Ei, grid.quality[1:-1, 1:-1],
                                                    grid.eigenvalues[1:-1, 1:-1], grid.trace),
                                       Ei)
    ang = math.pi / p.k
    ca, sa = math.cos(ang), math.sin(ang)
    shift = sign * p.l * p.beta / p.k
    period = lat.periods * lat.beta
    lo1, hi1, lo2, hi2 = sub_y1[0], sub_y1[-1], sub_y2[0], sub_y2[-1]
    pts, ref = [], []
    for i, a in enumerate(sub_y1):
        for j, b in enumerate(sub_y2):
            ra, rb = ca * a - sa * b, sa * a + ca * b
            if not (lo1 <= ra <= hi1 and lo2 <= rb <= hi2):
                continue
            for t, c in enumerate(lat.y3):
                rc = lat.y3[0] + (c + shift - lat.y3[0]) % period
                pts.append((ra, rb, rc))
                ref.append(Ei[i, j, t])
    pts = np.array(pts)
    ref = np.array(ref)
    ec = cub(pts)
    # |cubic - linear| vanishes at isolated points, so take its sup over a
    # half-cell probe around each image
    h = np.array(lat.spacing)
    lo = np.array([lo1, lo2, -np.inf])
    hi = np.array([hi1, hi2, np.inf])
    est = np.abs(ec - lin(pts))
    for axis in range(3):
        for sgn in (-0.5, 0.5):
            q = pts.copy()
            q[:, axis] += sgn * h[axis]
            q = np.clip(q, lo, hi)
            est = np.maximum(est, np.abs(cub(q) - lin(q)))
    err = np.abs(ref - ec)
    scale = float(np.nanmax(np.abs(Ei)))
    allowed = factor * est + floor * scale
    ok = err <= allowed
    return {"points": int(len(pts)), "max_error": float(err.max()) / scale,
            "max_estimate": float(est.max()) / scale, "pass_fraction": float(ok.mean()),
            "passed": bool(ok.all()), "shift_sign": sign}


def y3_profile(grid: MonopoleGrid) -> np.ndarray:
    """Max of the energy over the interior (y1, y2) slice, per y3 layer."""
    return np.nanmax(grid.energy, axis=(0, 1))


def count_maxima(profile: np.ndarray, cyclic: bool = True, prominence: float = 0.05) -> list[int]:
    """Indices of local maxima of a (cyclic) 1-D profile.

    A maximum must exceed the lowest point between it and each neighbouring
    higher peak by ``prominence`` times the profile range; plateaus count once.
    """
    from scipy.signal import find_peaks

    x = np.asarray(profile, dtype=float)
    n = x.size
    span = float(np.nanmax(x) - np.nanmin(x))
    if n < 3 or span <= 0:
        return []
    if cyclic:
        ext = np.concatenate([x, x, x])
        peaks, _ = find_peaks(ext, prominence=prominence * span, plateau_size=1)
        return sorted({int(p - n) for p in peaks if n <= p < 2 * n})
    peaks, _ = find_peaks(x, prominence=prominence * span, plateau_size=1)
    return [int(p) for p in peaks]


def maxima_summary(grid: MonopoleGrid) -> dict:
    lat = grid.lattice
    prof = y3_profile(grid)
    idx = count_maxima(prof, cyclic=lat.wraps)
    locs = []
    Ei = grid.energy
    for t in idx:
        layer = Ei[:, :, t]
        i, j = np.unravel_index(np.nanargmax(layer), layer.shape)
        locs.append([float(lat.y1[i]), float(lat.y2[j]), float(lat.y3[t])])
    per_period = len(idx) / lat.periods if lat.wraps else float(len(idx))
    return {"count": len(idx), "per_period": per_period, "locations": locs,
            "profile": prof.tolist()}


def trace_diagnostic(grid: MonopoleGrid) -> float:
    """Max |Tr phihat| relative to max sqrt(|phihat|^2) over the scan."""
    n = np.sqrt(np.nanmax(grid.phihat_norm2))
    return float(np.nanmax(grid.trace) / n) if n > 0 else 0.0

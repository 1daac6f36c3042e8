"""Affine Toda system on the truncated cylinder and the unitary-gauge fields.

The unknowns are real fields psi_0..psi_{k-1} with sum zero.  Discretization:

* 5-point Laplacian, x2 periodic up to the component shift j -> j + 2l,
* Neumann ghosts at x1 = -L - h_r and L + h_r carrying the asymptotic slopes.

This scheme is exactly the gradient (in the trapezoid-weighted inner
product) of a discrete Donaldson-Simpson functional, so explicit descent and
damped Newton both decrease the same quantity.
"""
from __future__ import annotations

import logging
import time
from dataclasses import dataclass, field

import numpy as np
import scipy.sparse as sp
import scipy.sparse.linalg as spla

from . import _kernels
from .ansatz import (CylinderGrid, make_grid, phi_components, slopes, twist_matrix)
from .errors import IncompatibleGridError, InvalidParameterError, NumericalBlowupError
from .spectral import ChainParams

log = logging.getLogger(__name__)

DEFAULT_TOL = 1e-8
NEWTON_SWITCH = 1e-4
FLOW_BUDGET = 20_000
CHUNK = 250
DS_ROUNDING = 1e-12


@dataclass
class TodaProblem:
    """Grid-level data shared by the residual, the functional and the solvers."""

    params: ChainParams
    grid: CylinderGrid
    a: np.ndarray        # |c|^(2/k) |phi_j|^2, shape (k, n_r, n_t)
    slope: np.ndarray
    weights: np.ndarray  # node masses, shape (n_r, n_t)
    K: sp.csr_matrix     # stiffness matrix of the gradient term
    b: np.ndarray        # boundary flux vector

    @property
    def shape(self) -> tuple[int, int, int]:
        return (self.params.k,) + self.grid.shape

    @property
    def shift(self) -> int:
        return self.params.twist_shift


def _index(k: int, n_r: int, n_t: int):
    return lambda j, i, t: (j * n_r + i) * n_t + t


def build_problem(params: ChainParams, grid: CylinderGrid) -> TodaProblem:
    k, nr, nt = params.k, grid.n_r, grid.n_t
    hr, ht = grid.h_r, grid.h_t
    ph = phi_components(params, grid.s())
    a = np.abs(ph) ** 2 * params.c_abs ** (2.0 / k)
    sl = slopes(params)
    w = np.ones(nr)
    w[0] = w[-1] = 0.5
    idx = _index(k, nr, nt)
    rows, cols, vals = [], [], []

    def edge(p, q, wt):
        rows.extend([p, q, p, q])
        cols.extend([p, q, q, p])
        vals.extend([wt, wt, -wt, -wt])

    J, I, T = np.meshgrid(np.arange(k), np.arange(nr - 1), np.arange(nt), indexing="ij")
    p = idx(J, I, T).ravel()
    edge(p, idx(J, I + 1, T).ravel(), np.full(p.size, ht / hr))
    J, I, T = np.meshgrid(np.arange(k), np.arange(nr), np.arange(nt), indexing="ij")
    Jn = np.where(T == nt - 1, (J + params.twist_shift) % k, J)
    p = idx(J, I, T).ravel()
    edge(p, idx(Jn, I, (T + 1) % nt).ravel(), (w[I] * hr / ht).ravel())
    n = k * nr * nt
    K = sp.coo_matrix((np.concatenate(vals), (np.concatenate(rows), np.concatenate(cols))),
                      shape=(n, n)).tocsr()
    b = np.zeros((k, nr, nt))
    b[:, 0, :] = ht * sl[:, None]
    b[:, -1, :] = ht * sl[:, None]
    return TodaProblem(params=params, grid=grid, a=a, slope=sl, weights=grid.weights(),
                       K=K, b=b.ravel())


def initial_guess(problem: TodaProblem) -> np.ndarray:
    """slope_j * sqrt(x1^2 + 1), constant in x2; trace-free."""
    x1 = problem.grid.x1
    prof = np.sqrt(x1**2 + 1.0)[None, :, None]
    return np.ascontiguousarray(problem.slope[:, None, None] * prof * np.ones(problem.shape))


def _check_finite(psi: np.ndarray) -> None:
    if not np.all(np.isfinite(psi)):
        raise NumericalBlowupError("non-finite values in psi")


def _as_field(problem: TodaProblem, psi) -> np.ndarray:
    psi = np.ascontiguousarray(psi, dtype=np.float64)
    if psi.shape != problem.shape:
        raise IncompatibleGridError(f"psi has shape {psi.shape}, expected {problem.shape}")
    _check_finite(psi)
    return psi


def residual_field(problem: TodaProblem, psi) -> np.ndarray:
    """Discrete Laplacian minus the scaled Toda source at every node."""
    g = problem.grid
    return _kernels.residual(_as_field(problem, psi), problem.a, problem.slope,
                             g.h_r, g.h_t, problem.shift)


def toda_residual(params: ChainParams, grid: CylinderGrid, psi,
                  include_boundary: bool = False, problem: TodaProblem | None = None) -> float:
    """Sup of ``|c|^(-2/k) lap(psi_j) - (source_j)`` over interior x1 nodes.

    With ``include_boundary`` the ghost-closed end columns are included too;
    that is the quantity the solver drives below tolerance.
    """
    problem = problem or build_problem(params, grid)
    r = residual_field(problem, psi)
    if not include_boundary:
        r = r[:, 1:-1]
    return float(np.abs(r).max()) * params.c_abs ** (-2.0 / params.k)


def _coupling(problem: TodaProblem, psi: np.ndarray) -> np.ndarray:
    return np.roll(problem.a, -1, axis=0) * np.exp(psi - np.roll(psi, -1, axis=0))


def discrete_energy(problem: TodaProblem, psi: np.ndarray) -> float:
    f = psi.ravel()
    q = _coupling(problem, psi)
    return float(0.5 * f @ (problem.K @ f) - problem.b @ f
                 + np.sum(problem.weights * q.sum(axis=0)))


def ds_functional(params: ChainParams, grid: CylinderGrid, psi,
                  problem: TodaProblem | None = None) -> float:
    """Trapezoid value of the Donaldson-Simpson functional.

    Includes the boundary flux term that makes the Neumann data natural
    boundary conditions of the functional.
    """
    problem = problem or build_problem(params, grid)
    psi = _as_field(problem, psi)
    return discrete_energy(problem, psi) * params.c_abs ** (-2.0 / params.k)


def stable_step(problem: TodaProblem, psi: np.ndarray) -> float:
    """Forward-Euler step below the descent bound for the current potential."""
    g = problem.grid
    q = _coupling(problem, psi)
    lam = float((q + np.roll(q, 1, axis=0)).max()) if problem.params.k > 1 else 0.0
    return 0.9 / (2.0 / g.h_r**2 + 2.0 / g.h_t**2 + lam)


def rounding_floor(problem: TodaProblem, psi: np.ndarray) -> float:
    """Residual level below which cancellation in the stencil dominates."""
    g = problem.grid
    q = _coupling(problem, psi)
    stencil = 4.0 * float(np.abs(psi).max()) * (1.0 / g.h_r**2 + 1.0 / g.h_t**2)
    size = 2.0 * float(q.max()) + stencil
    return 8.0 * np.finfo(float).eps * size * problem.params.c_abs ** (-2.0 / problem.params.k)


def _hessian(problem: TodaProblem, psi: np.ndarray) -> sp.csr_matrix:
    k = problem.params.k
    n = problem.grid.n_r * problem.grid.n_t
    Wf = problem.weights.ravel()
    q = _coupling(problem, psi).reshape(k, n)
    ar = np.arange(n)
    rows, cols, vals = [], [], []
    for j in range(k):
        jp = (j + 1) % k
        wq = Wf * q[j]
        for A, B, sgn in ((j, j, 1.0), (jp, jp, 1.0), (j, jp, -1.0), (jp, j, -1.0)):
            rows.append(A * n + ar)
            cols.append(B * n + ar)
            vals.append(sgn * wq)
    # penalize the trace direction, which is otherwise a null direction
    for A in range(k):
        for B in range(k):
            rows.append(A * n + ar)
            cols.append(B * n + ar)
            vals.append(Wf)
    H = sp.coo_matrix((np.concatenate(vals), (np.concatenate(rows), np.concatenate(cols))),
                      shape=(k * n, k * n))
    return (problem.K + H).tocsc()


def newton_step(problem: TodaProblem, psi: np.ndarray) -> tuple[np.ndarray, float]:
    """One damped Newton step with Armijo backtracking on the discrete energy."""
    r = residual_field(problem, psi)
    grad = -(problem.weights[None] * r).ravel()
    d = -spla.spsolve(_hessian(problem, psi), grad).reshape(psi.shape)
    e0 = discrete_energy(problem, psi)
    slope0 = float(grad @ d.ravel())
    # energy differences below this are rounding noise; fall back on the residual
    noise = DS_ROUNDING * max(abs(e0), float(np.sum(problem.weights * np.abs(problem.a).sum(0))))
    r0 = float(np.abs(r).max())
    t = 1.0
    while t > 1e-10:
        trial = psi + t * d
        trial -= trial.mean(axis=0)
        e1 = discrete_energy(problem, trial)
        if np.isfinite(e1):
            if e1 <= e0 + 1e-4 * t * slope0:
                return np.ascontiguousarray(trial), e1
            if -t * slope0 < noise and e1 <= e0 + noise and \
                    float(np.abs(residual_field(problem, trial)).max()) < r0:
                return np.ascontiguousarray(trial), e1
        t *= 0.5
    return psi, e0


@dataclass
class TodaSolution:
    params: ChainParams
    grid: CylinderGrid
    psi: np.ndarray
    residual_sup: float
    flow_steps: int
    newton_steps: int = 0
    converged: bool = False
    ds_history: list = field(default_factory=list)
    residual_history: list = field(default_factory=list)
    backend: str = "python"
    elapsed: float = 0.0
    rounding_floor: float = 0.0

    @property
    def usable(self) -> bool:
        """Converged, or stalled at the rounding floor of the residual."""
        return self.converged or self.residual_sup <= self.rounding_floor

    def ds_monotone(self, rel: float = DS_ROUNDING) -> bool:
        """History non-increasing up to rounding relative to the value scale."""
        h = np.asarray(self.ds_history)
        if h.size < 2:
            return True
        tol = rel * max(1.0, float(np.abs(h).max()))
        return bool(np.all(np.diff(h) <= tol))

    def trace_error(self) -> float:
        return float(np.abs(self.psi.sum(axis=0)).max())


def heat_flow(params: ChainParams, grid: CylinderGrid, tol: float = DEFAULT_TOL,
              max_steps: int = FLOW_BUDGET, method: str = "hybrid",
              newton_switch: float = NEWTON_SWITCH, max_newton: int = 60,
              psi0: np.ndarray | None = None) -> TodaSolution:
    """Descend the Donaldson-Simpson functional until the residual is below ``tol``.

    ``method``:
      * ``"flow"``: explicit gradient flow only,
      * ``"newton"``: damped Newton from the initial guess,
      * ``"hybrid"``: flow until the residual drops below ``newton_switch``
        (or ``max_steps`` flow steps are spent), then Newton polish.

    ``tol`` is applied to the residual in the scaled units of
    :func:`toda_residual` over all nodes, boundary columns included.
    """
    if not tol > 0:
        raise InvalidParameterError(f"tol must be positive, got {tol!r}")
    if method not in ("flow", "newton", "hybrid"):
        raise InvalidParameterError(f"unknown method {method!r}")
    if params.k % 2 == 0 and grid.n_t % 2:
        raise IncompatibleGridError("n_t must be even when k is even")
    t0 = time.perf_counter()
    problem = build_problem(params, grid)
    scale = params.c_abs ** (-2.0 / params.k)
    psi = initial_guess(problem) if psi0 is None else _as_field(problem, psi0).copy()
    psi -= psi.mean(axis=0)

    def measure():
        r = float(np.abs(residual_field(problem, psi)).max()) * scale
        ds_hist.append(discrete_energy(problem, psi) * scale)
        res_hist.append(r)
        return r

    ds_hist: list = []
    res_hist: list = []
    steps = 0
    nsteps = 0
    r = measure()
    if method in ("flow", "hybrid"):
        switch = tol if method == "flow" else max(tol, newton_switch)
        g = grid
        while r >= switch and steps < max_steps:
            dt = stable_step(problem, psi)
            n = min(CHUNK, max_steps - steps)
            _kernels.explicit_steps(psi, problem.a, problem.slope, g.h_r, g.h_t,
                                    problem.shift, dt, n)
            steps += n
            _check_finite(psi)
            r = measure()
    if method in ("newton", "hybrid"):
        while r >= tol and nsteps < max_newton:
            psi_new, _ = newton_step(problem, psi)
            nsteps += 1
            stalled = psi_new is psi
            psi = psi_new
            _check_finite(psi)
            r = measure()
            if stalled:
                log.warning("Newton line search stalled at residual %.3e", r)
                break
    converged = r < tol
    floor = rounding_floor(problem, psi)
    if not converged:
        log.warning("Toda solve stopped at residual %.3e (tol %.1e, rounding floor %.1e)",
                    r, tol, floor)
    return TodaSolution(params=params, grid=grid, psi=psi, residual_sup=r, flow_steps=steps,
                        newton_steps=nsteps, converged=converged, ds_history=ds_hist,
                        residual_history=res_hist, backend=_kernels.BACKEND,
                        elapsed=time.perf_counter() - t0, rounding_floor=floor)


def _component_lookup(psi: np.ndarray, shift: int, t: np.ndarray) -> np.ndarray:
    """psi sampled at x2 node indices ``t`` (any integers), unrolling the twist."""
    k, _, nt = psi.shape
    wraps, tt = np.divmod(t, nt)
    out = np.empty((k, psi.shape[1], t.size))
    for j in range(k):
        src = (j + shift * wraps) % k
        out[j] = psi[src, :, tt].T
    return out


def symmetry_check(params: ChainParams, sol: TodaSolution) -> float:
    """Max of ``|psi_j(x1, x2 + pi/beta) - psi_{j+l}(x1, x2)|``."""
    nt = sol.grid.n_t
    if nt % 2:
        raise IncompatibleGridError("symmetry check needs an even number of x2 points")
    k = params.k
    t = np.arange(nt)
    shifted = _component_lookup(sol.psi, params.twist_shift, t + nt // 2)
    ref = sol.psi[(np.arange(k) + params.l) % k]
    return float(np.abs(shifted - ref).max())


def reflection_error(sol: TodaSolution) -> float:
    """Max of ``|psi_j(x1, x2) - psi_j(-x1, x2)|``; small for l = 0."""
    return float(np.abs(sol.psi - sol.psi[:, ::-1]).max())


@dataclass
class HitchinFields:
    params: ChainParams
    grid: CylinderGrid
    phi: np.ndarray      # (n_r, n_t, k, k)
    A1: np.ndarray       # (n_r, n_t, k, k), diagonal, imaginary
    A2: np.ndarray
    twist_U: np.ndarray

    def a1_diag(self) -> np.ndarray:
        return np.diagonal(self.A1, axis1=-2, axis2=-1)

    def a2_diag(self) -> np.ndarray:
        return np.diagonal(self.A2, axis1=-2, axis2=-1)


def _x2_derivative(psi: np.ndarray, shift: int, ht: float) -> np.ndarray:
    nt = psi.shape[2]
    t = np.arange(nt)
    up = _component_lookup(psi, shift, t + 1)
    dn = _component_lookup(psi, shift, t - 1)
    return (up - dn) / (2 * ht)


def _x1_derivative(psi: np.ndarray, slope: np.ndarray, hr: float) -> np.ndarray:
    d = np.empty_like(psi)
    d[:, 1:-1] = (psi[:, 2:] - psi[:, :-2]) / (2 * hr)
    # central difference across the ghost node reproduces the Neumann data
    d[:, 0] = -slope[:, None]
    d[:, -1] = slope[:, None]
    return d


def _diag_matrices(d: np.ndarray) -> np.ndarray:
    k = d.shape[0]
    return np.moveaxis(d, 0, -1)[..., :, None] * np.eye(k)


def assemble_hitchin(params: ChainParams, sol: TodaSolution) -> HitchinFields:
    """Unitary-gauge (phi, A1, A2) on the grid."""
    k, g = params.k, sol.grid
    psi = sol.psi
    ph = phi_components(params, g.s())
    ck = params.c ** (1.0 / k)
    phi = np.zeros(g.shape + (k, k), dtype=complex)
    for a in range(k):
        b = (a + 1) % k
        phi[..., a, b] = ck * np.exp(0.5 * (psi[a] - psi[b])) * ph[b]
    sl = slopes(params)
    A1 = -0.5j * _diag_matrices(_x2_derivative(psi, params.twist_shift, g.h_t))
    A2 = 0.5j * _diag_matrices(_x1_derivative(psi, sl, g.h_r))
    return HitchinFields(params=params, grid=g, phi=phi, A1=A1, A2=A2,
                         twist_U=twist_matrix(params))


def _wrap_x2(fields: HitchinFields, X: np.ndarray, step: int) -> np.ndarray:
    """X sampled at x2 node t + step (step = +-1) using the constant twist."""
    U = fields.twist_U
    Ui = U.conj().T
    out = np.roll(X, -step, axis=1)
    if step > 0:
        out[:, -1] = Ui @ X[:, 0] @ U
    else:
        out[:, 0] = U @ X[:, -1] @ Ui
    return out


def d1(X: np.ndarray, h: float) -> np.ndarray:
    """Central x1 derivative, second-order one-sided at the ends."""
    D = np.empty_like(X)
    D[1:-1] = (X[2:] - X[:-2]) / (2 * h)
    D[0] = (-3 * X[0] + 4 * X[1] - X[2]) / (2 * h)
    D[-1] = (3 * X[-1] - 4 * X[-2] + X[-3]) / (2 * h)
    return D


def d2(fields: HitchinFields, X: np.ndarray) -> np.ndarray:
    """Central x2 derivative on the twisted-periodic direction."""
    return (_wrap_x2(fields, X, 1) - _wrap_x2(fields, X, -1)) / (2 * fields.grid.h_t)


def commutator(X: np.ndarray, Y: np.ndarray) -> np.ndarray:
    return X @ Y - Y @ X


def dagger(X: np.ndarray) -> np.ndarray:
    return np.conj(np.swapaxes(X, -1, -2))


def hit2_residual(fields: HitchinFields) -> float:
    """Sup of ``d1 phi + i d2 phi + [A1 + i A2, phi]`` relative to sup |phi|, interior x1."""
    g = fields.grid
    phi = fields.phi
    R = d1(phi, g.h_r) + 1j * d2(fields, phi) + commutator(fields.A1 + 1j * fields.A2, phi)
    return float(np.abs(R[1:-1]).max() / np.abs(phi).max())


def curvature_residual(fields: HitchinFields) -> float:
    """Sup of ``F12 - (i/2)[phi, phi^dagger]`` over x1 nodes away from the ends."""
    g = fields.grid
    F = d1(fields.A2, g.h_r) - d2(fields, fields.A1) + commutator(fields.A1, fields.A2)
    C = 0.5j * commutator(fields.phi, dagger(fields.phi))
    return float(np.abs(F - C)[2:-2].max())


def commutator_profile(fields: HitchinFields) -> np.ndarray:
    """sup over x2 of the Frobenius norm of [phi, phi^dagger], per x1 node."""
    C = commutator(fields.phi, dagger(fields.phi))
    return np.linalg.norm(C, axis=(-2, -1)).max(axis=1)


def commutator_decay(fields: HitchinFields, bump: float = 1e-3) -> dict:
    """Edge-to-centre ratio and monotone decay of the commutator beyond |x1| > 2k/beta.

    Increases smaller than ``bump`` times the centre value are tolerated: the
    truncated domain leaves a thin boundary layer at that level.
    """
    prof = commutator_profile(fields)
    x1 = fields.grid.x1
    centre = prof[np.argmin(np.abs(x1))]
    edge = max(prof[0], prof[-1])
    cut = 2.0 * fields.params.k / fields.params.beta
    right = prof[x1 > cut]
    left = prof[x1 < -cut][::-1]
    mono = bool(all(np.all(np.diff(p) <= bump * centre) for p in (right, left)
                    if p.size > 1))
    ratio = float(edge / centre) if centre > 0 else 0.0
    return {"edge_ratio": ratio, "monotone_outside": mono}


CHECKPOINT_MAGIC = "monochain-psi 1"


def write_checkpoint(path, sol: TodaSolution) -> None:
    """Text dump: magic line, one header line, then psi as (k * n_r) rows of n_t values."""
    p, g = sol.params, sol.grid
    header = (f"{CHECKPOINT_MAGIC}\n"
              f"k={p.k} l={p.l} beta={p.beta!r} c_abs={p.c_abs!r} c_phase={p.c_phase!r} "
              f"L={g.L!r} n_r={g.n_r} n_t={g.n_t}")
    np.savetxt(path, sol.psi.reshape(p.k * g.n_r, g.n_t), fmt="%.17g", header=header)


def read_checkpoint(path) -> tuple[dict, np.ndarray]:
    with open(path) as fh:
        magic = fh.readline().lstrip("# ").strip()
        if magic != CHECKPOINT_MAGIC:
            raise IncompatibleGridError(f"{path}: not a psi checkpoint")
        items = dict(tok.split("=") for tok in fh.readline().lstrip("# ").split())
    meta = {"k": int(items["k"]), "l": int(items["l"]), "beta": float(items["beta"]),
            "c_abs": float(items["c_abs"]), "c_phase": float(items["c_phase"]),
            "L": float(items["L"]), "n_r": int(items["n_r"]), "n_t": int(items["n_t"])}
    data = np.loadtxt(path, ndmin=2)
    psi = data.reshape(meta["k"], meta["n_r"], meta["n_t"])
    return meta, psi


def load_warm_start(path, params: ChainParams, grid: CylinderGrid) -> np.ndarray:
    """psi from a checkpoint, validated against the current run's inputs."""
    meta, psi = read_checkpoint(path)
    want = {"k": params.k, "l": params.l, "n_r": grid.n_r, "n_t": grid.n_t}
    for key, val in want.items():
        if meta[key] != val:
            raise IncompatibleGridError(f"checkpoint {key}={meta[key]} does not match {val}")
    for key, val in (("beta", params.beta), ("c_abs", params.c_abs), ("L", grid.L)):
        if not np.isclose(meta[key], val, rtol=1e-12, atol=0.0):
            raise IncompatibleGridError(f"checkpoint {key}={meta[key]} does not match {val}")
    return psi


def solve(params: ChainParams, n_r: int = 64, n_t: int = 64, L: float | None = None,
          **kw) -> TodaSolution:
    """Convenience wrapper: build the grid and run :func:`heat_flow`."""
    return heat_flow(params, make_grid(params, n_r, n_t, L), **kw)


def _sample(sol: TodaSolution, grid: CylinderGrid) -> np.ndarray:
    """Cubic-spline the solution in x1 onto ``grid``; x2 nodes must nest."""
    from scipy.interpolate import CubicSpline

    stride, rem = divmod(sol.grid.n_t, grid.n_t)
    if rem or not np.isclose(sol.grid.L, grid.L):
        raise IncompatibleGridError("refinement grids must share L and nest in x2")
    cols = sol.psi[:, :, ::stride]
    return CubicSpline(sol.grid.x1, cols, axis=1)(grid.x1)


def refinement_study(params: ChainParams, sizes=(16, 32, 64), L: float | None = None,
                     tol: float = 1e-10, margin: float = 0.125) -> dict:
    """Observed order of the scheme's truncation residual under grid refinement.

    Solutions on the two finest grids are combined by Richardson
    extrapolation, spline-sampled onto each grid in ``sizes``, and the
    residual is measured on the fixed subdomain ``|x1| <= (1 - margin) L``
    (the ghost-node closure leaves an O(h) layer at the ends).  The order is
    the least-squares slope of log residual against log h.
    """
    sizes = sorted(int(n) for n in sizes)
    fine = 2 * sizes[-1]
    sols = {n: solve(params, n, n, L, tol=tol) for n in (sizes[-1], fine)}
    for n, s in sols.items():
        if not s.usable:
            raise NumericalBlowupError(f"reference solve on {n}x{n} stopped at {s.residual_sup:.3e}")
    out = {"sizes": sizes, "h": [], "residuals": [], "margin": margin}
    scale = params.c_abs ** (-2.0 / params.k)
    for n in sizes:
        grid = make_grid(params, n, n, L)
        ref = (4.0 * _sample(sols[fine], grid) - _sample(sols[sizes[-1]], grid)) / 3.0
        ref -= ref.mean(axis=0)
        keep = np.abs(grid.x1) <= (1.0 - margin) * grid.L + 1e-12
        r = residual_field(build_problem(params, grid), ref)[:, keep]
        out["h"].append(float(np.hypot(grid.h_r, grid.h_t)))
        out["residuals"].append(float(np.abs(r).max()) * scale)
    if params.k == 1 or max(out["residuals"]) == 0.0:
        out["order"] = float("nan")
    else:
        out["order"] = float(np.polyfit(np.log(out["h"]), np.log(out["residuals"]), 1)[0])
    return out

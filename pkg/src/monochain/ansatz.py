"""Closed-form cyclic Higgs-bundle data on the cylinder.

Coordinates: ``s = x1 + i x2`` with ``x2`` periodic of period ``2 pi / beta``
and ``w = exp(beta s)``.  All component indices are taken mod ``k``.
"""
from __future__ import annotations

from dataclasses import dataclass, field
from typing import Sequence

import numpy as np

from .errors import IncompatibleGridError, InvalidParameterError
from .spectral import ChainParams


@dataclass(frozen=True)
class CylinderGrid:
    """Truncated cylinder ``[-L, L] x [0, 2 pi / beta)``, node-centred.

    ``x1`` includes both ends; ``x2`` is periodic without a duplicated
    endpoint.
    """

    L: float
    n_r: int
    n_t: int
    period: float

    @property
    def h_r(self) -> float:
        return 2.0 * self.L / (self.n_r - 1)

    @property
    def h_t(self) -> float:
        return self.period / self.n_t

    @property
    def x1(self) -> np.ndarray:
        return np.linspace(-self.L, self.L, self.n_r)

    @property
    def x2(self) -> np.ndarray:
        return np.arange(self.n_t) * self.h_t

    @property
    def shape(self) -> tuple[int, int]:
        return (self.n_r, self.n_t)

    def s(self) -> np.ndarray:
        """Complex coordinate at every node, shape (n_r, n_t)."""
        return self.x1[:, None] + 1j * self.x2[None, :]

    def weights(self) -> np.ndarray:
        """Trapezoid (x1) times rectangle (x2) quadrature weights, shape (n_r, n_t)."""
        w = np.full(self.n_r, self.h_r)
        w[0] = w[-1] = 0.5 * self.h_r
        return w[:, None] * np.full(self.n_t, self.h_t)[None, :]

    def to_dict(self) -> dict:
        return {"L": self.L, "n_r": self.n_r, "n_t": self.n_t}


def default_half_length(params: ChainParams) -> float:
    return max(6.0 / params.beta, 3.0 * params.k / params.beta)


def make_grid(params: ChainParams, n_r: int = 64, n_t: int = 64,
              L: float | None = None) -> CylinderGrid:
    if L is None:
        L = default_half_length(params)
    if not (np.isfinite(L) and L > 0):
        raise InvalidParameterError(f"half-length L must be positive, got {L!r}")
    if int(n_r) != n_r or n_r < 4 or n_r % 2:
        raise IncompatibleGridError(f"n_r must be an even integer >= 4, got {n_r!r}")
    if int(n_t) != n_t or n_t < 3:
        raise IncompatibleGridError(f"n_t must be an integer >= 3, got {n_t!r}")
    return CylinderGrid(L=float(L), n_r=int(n_r), n_t=int(n_t), period=params.period)


def _check_index(params: ChainParams, j: int) -> int:
    if not 0 <= j < params.k:
        raise InvalidParameterError(f"component index must lie in [0, {params.k}), got {j}")
    return int(j)


def mu(params: ChainParams, j: int, s):
    """``exp(-beta s / k) - omega^(2j+1) exp(beta s / k)``; vectorized over ``s``."""
    k, b = params.k, params.beta
    s = np.asarray(s, dtype=complex)
    return np.exp(-b * s / k) - params.omega ** (2 * (j % k) + 1) * np.exp(b * s / k)


def component_factors(params: ChainParams, j: int) -> list[int]:
    """Indices ``i`` with ``i l = j (mod k)``; their mu's multiply to phi_j."""
    k = params.k
    return [i for i in range(k) if (i * params.l - j) % k == 0]


def phi_component(params: ChainParams, j: int, s):
    s = np.asarray(s, dtype=complex)
    out = np.ones_like(s)
    for i in component_factors(params, j % params.k):
        out = out * mu(params, i, s)
    return out


def phi_components(params: ChainParams, s) -> np.ndarray:
    """All phi_j stacked on a leading axis of length k."""
    return np.array([phi_component(params, j, s) for j in range(params.k)])


def asymptotic_slope(params: ChainParams, j: int) -> float:
    """Coefficient of |x1| in psi_j far out along the cylinder."""
    _check_index(params, j)
    m = params.m
    return 2.0 * params.beta / params.k * ((m - 1) / 2.0 - (j % m))


def slopes(params: ChainParams) -> np.ndarray:
    return np.array([asymptotic_slope(params, j) for j in range(params.k)])


def shift_matrix(k: int) -> np.ndarray:
    """Cyclic shift with ``Sigma e_j = e_{j+1}``."""
    return np.roll(np.eye(k, dtype=complex), 1, axis=0)


def twist_matrix(params: ChainParams) -> np.ndarray:
    """Constant transition matrix U with phi(s + 2 pi i / beta) = U^-1 phi(s) U."""
    k, l, m, om = params.k, params.l, params.m, params.omega
    d = np.array([om ** (-3 * l - 2 * m * (j // m)) for j in range(k)])
    return np.linalg.matrix_power(shift_matrix(k), 2 * l) @ np.diag(d)


def _symmetry_gauges(params: ChainParams, s: complex) -> np.ndarray:
    """Holomorphic-gauge symmetry data at one point: V(s) and W(s)."""
    k, l, m, om, b = params.k, params.l, params.m, params.omega, params.beta
    v = np.exp(b * l * s / k)
    V = np.linalg.matrix_power(shift_matrix(k), l) @ np.diag([v * om ** (j % m) for j in range(k)])
    w = np.exp(2 * b * l * s / k)
    W = w * np.diag(om ** (2 * np.arange(k)))
    return V, W


def gauge_twist_at(params: ChainParams, s: complex) -> np.ndarray:
    """U(s) = W(s)^-1 V(s) V(s + pi i / beta), evaluated without simplification."""
    half = 1j * np.pi / params.beta
    V0, W0 = _symmetry_gauges(params, s)
    V1, _ = _symmetry_gauges(params, s + half)
    return np.linalg.solve(W0, V0 @ V1)


def twist_constancy(params: ChainParams, samples: Sequence[complex]) -> float:
    """Max deviation of the pointwise gauge twist from :func:`twist_matrix`."""
    U = twist_matrix(params)
    return max(float(np.abs(gauge_twist_at(params, s) - U).max()) for s in samples)


def holomorphic_higgs(params: ChainParams, s) -> np.ndarray:
    """``c^(1/k) Sigma^-1 diag(phi_j(s))``; shape ``s.shape + (k, k)``."""
    k = params.k
    s = np.asarray(s, dtype=complex)
    ck = params.c ** (1.0 / k)
    ph = phi_components(params, s)
    out = np.zeros(s.shape + (k, k), dtype=complex)
    for a in range(k):
        out[..., a, (a + 1) % k] = ck * ph[(a + 1) % k]
    return out


def spectral_curve_check(params: ChainParams, samples: Sequence[complex]) -> float:
    """Max deviation of det(zeta - phi(s)) from ``zeta^k - c w - c / w``.

    Coefficients are compared scaled by the size of the constant term so the
    residual is relative at large |Re s|.
    """
    k = params.k
    c = params.c
    worst = 0.0
    for s in samples:
        coeffs = np.poly(holomorphic_higgs(params, s)) if k > 1 else \
            np.array([1.0, -holomorphic_higgs(params, s)[0, 0]])
        w = np.exp(params.beta * s)
        target = np.zeros(k + 1, dtype=complex)
        target[0] = 1.0
        target[-1] += -c * (w + 1.0 / w)
        scale = max(1.0, abs(target[-1]))
        worst = max(worst, float(np.abs(coeffs - target).max()) / scale)
    return worst


def higgs_periodicity(params: ChainParams, samples: Sequence[complex]) -> float:
    """Relative max of ``phi(s + 2 pi i / beta) - U^-1 phi(s) U``."""
    U = twist_matrix(params)
    Ui = np.linalg.inv(U)
    worst = 0.0
    for s in samples:
        a = holomorphic_higgs(params, s + 2j * np.pi / params.beta)
        b = Ui @ holomorphic_higgs(params, s) @ U
        worst = max(worst, float(np.abs(a - b).max() / max(1.0, np.abs(b).max())))
    return worst


def zero_owner(params: ChainParams, p: int) -> int:
    """Index of the component vanishing at ``s_p = (2p - 1) pi i / (2 beta)``."""
    return (-params.l * p) % params.k


def zero_point(params: ChainParams, p: int) -> complex:
    return (2 * p - 1) * np.pi * 1j / (2 * params.beta)


@dataclass(frozen=True)
class AnsatzFields:
    params: ChainParams
    twist_U: np.ndarray
    slope: np.ndarray
    factors: list = field(default_factory=list)

    def mu(self, j: int, s):
        return mu(self.params, j, s)

    def phi(self, j: int, s):
        return phi_component(self.params, j, s)

    def phi_all(self, s) -> np.ndarray:
        return phi_components(self.params, s)


def build_ansatz(params: ChainParams) -> AnsatzFields:
    return AnsatzFields(params=params, twist_U=twist_matrix(params), slope=slopes(params),
                        factors=[component_factors(params, j) for j in range(params.k)])


def identity_residuals(params: ChainParams, samples: Sequence[complex]) -> dict:
    """Pointwise algebraic identities of the ansatz, evaluated at ``samples``."""
    s = np.asarray(samples, dtype=complex)
    k, l, m, om, b = params.k, params.l, params.m, params.omega, params.beta
    ph = phi_components(params, s)
    prod = ph.prod(axis=0)
    product = float(np.max(np.abs(prod - 2 * np.cosh(b * s)) / np.exp(b * np.abs(s.real))))
    shifted = phi_components(params, s + 1j * np.pi / b)
    shift = 0.0
    for j in range(k):
        f = om ** (-m) if j % m == 0 else 1.0
        ref = f * ph[(j + l) % k]
        shift = max(shift, float(np.max(np.abs(shifted[j] - ref) / np.maximum(np.abs(ref), 1.0))))
    U = twist_matrix(params)
    unitary = float(np.abs(U.conj().T @ U - np.eye(k)).max())
    return {
        "product": product,
        "shift": shift,
        "unitarity": unitary,
        "twist_constancy": twist_constancy(params, samples),
        "spectral_curve": spectral_curve_check(params, samples),
        "periodicity": higgs_periodicity(params, samples),
    }


def zero_placement_errors(params: ChainParams) -> int:
    """Number of (p, j) pairs where a component vanishes or not contrary to expectation."""
    bad = 0
    for p in range(2 * params.k):
        vals = np.abs(phi_components(params, zero_point(params, p)))
        owner = zero_owner(params, p)
        for j in range(params.k):
            vanishes = vals[j] < 1e-12
            bad += int(vanishes != (j == owner))
    return bad

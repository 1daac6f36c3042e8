"""Maximally symmetric spectral data: period lattice, fixed points, classification.

The Jacobian of the symmetric spectral curve is ``C^{k-1}/Pi`` where the
period lattice ``Pi`` is spanned by ``Pi_i = rho^i (1 - rho) Gamma_0`` and
``Gamma_0 = (1, ..., 1)``.  Line bundles solving the twisted invariance
condition correspond to fixed points of ``rho`` in ``C^{k-1}/Gamma`` with
``Gamma = Pi + Z Gamma_0``; there are exactly ``|Gamma/Pi| = k`` of them.

Lattice arithmetic is done on real coordinates (real and imaginary parts
stacked) and all counting is done on exact integers.
"""
from __future__ import annotations

import json
import math
from dataclasses import dataclass, field
from fractions import Fraction
from typing import Sequence

import numpy as np

from .errors import IllConditionedLatticeError, InvalidParameterError

ROUNDING_TOL = 1e-8
MAX_CONDITION = 1e8
MAX_DENOMINATOR = 10_000


@dataclass(frozen=True)
class ChainParams:
    """Inputs of a symmetric monopole chain.

    ``l`` labels the symmetry group Z_{2k}^{(2l)}; ``m = gcd(k, l)`` is the
    charge of the constituent monopoles (``m = k`` when ``l = 0``).
    """

    k: int
    l: int
    c_abs: float
    c_phase: float
    beta: float
    m: int
    omega: complex

    @property
    def c(self) -> complex:
        return self.c_abs * np.exp(1j * self.c_phase)

    @property
    def period(self) -> float:
        """Circumference 2*pi/beta of the cylinder in the x^2 direction."""
        return 2.0 * np.pi / self.beta

    @property
    def twist_shift(self) -> int:
        """Index shift j -> j + 2l picked up by the fields around the cylinder."""
        return (2 * self.l) % self.k

    def to_dict(self) -> dict:
        return {
            "k": self.k,
            "l": self.l,
            "c_abs": self.c_abs,
            "c_phase": self.c_phase,
            "beta": self.beta,
            "m": self.m,
        }


def build_params(k: int, l: int = 0, c_abs: float = 1.0, c_phase: float = 0.0,
                 beta: float = 2.0 * np.pi) -> ChainParams:
    if int(k) != k or k < 1:
        raise InvalidParameterError(f"charge k must be a positive integer, got {k!r}")
    if not (np.isfinite(c_abs) and c_abs > 0):
        raise InvalidParameterError(f"|c| must be positive, got {c_abs!r}")
    if not (np.isfinite(beta) and beta > 0):
        raise InvalidParameterError(f"beta must be positive, got {beta!r}")
    if not np.isfinite(c_phase):
        raise InvalidParameterError(f"c_phase must be finite, got {c_phase!r}")
    k = int(k)
    l = int(l) % k
    m = math.gcd(k, l)  # gcd(k, 0) == k
    return ChainParams(k=k, l=l, c_abs=float(c_abs), c_phase=float(c_phase),
                       beta=float(beta), m=m, omega=complex(np.exp(1j * np.pi / k)))


@dataclass(frozen=True)
class SpectralLattice:
    k: int
    rho: np.ndarray
    gamma: list[np.ndarray]
    pi: list[np.ndarray]
    fixed_points: list[np.ndarray]

    @property
    def genus(self) -> int:
        return self.k - 1

    def pi_basis(self) -> np.ndarray:
        """Real matrix whose columns are Pi_0 .. Pi_{2k-3}."""
        return realify(self.pi[: 2 * self.k - 2])

    def gamma_basis(self) -> np.ndarray:
        """Real matrix whose columns are Gamma_0 .. Gamma_{2k-3}, a basis of Gamma."""
        return realify(self.gamma[: 2 * self.k - 2])


def realify(vectors: Sequence[np.ndarray]) -> np.ndarray:
    """Stack complex vectors as columns of a real matrix (re over im)."""
    if len(vectors) == 0:
        return np.zeros((0, 0))
    return np.array([np.concatenate([v.real, v.imag]) for v in vectors]).T


def _real(v: np.ndarray) -> np.ndarray:
    return np.concatenate([v.real, v.imag])


def build_lattice(k: int) -> SpectralLattice:
    if int(k) != k or k < 1:
        raise InvalidParameterError(f"charge k must be a positive integer, got {k!r}")
    k = int(k)
    if k == 1:
        empty = np.zeros(0, dtype=complex)
        return SpectralLattice(k=1, rho=np.zeros((0, 0), dtype=complex),
                               gamma=[empty.copy(), empty.copy()],
                               pi=[empty.copy(), empty.copy()],
                               fixed_points=[empty.copy()])
    j = np.arange(1, k)
    diag = -np.exp(-1j * np.pi * j / k)
    rho = np.diag(diag)
    ones = np.ones(k - 1, dtype=complex)
    gamma = [diag**i * ones for i in range(2 * k)]
    pi = [diag**i * (1 - diag) * ones for i in range(2 * k)]
    base = ones / (1 - diag)
    fixed = [l * base for l in range(k)]
    return SpectralLattice(k=k, rho=rho, gamma=gamma, pi=pi, fixed_points=fixed)


def _check_conditioning(basis: np.ndarray) -> None:
    cond = np.linalg.cond(basis)
    if not np.isfinite(cond) or cond > MAX_CONDITION:
        raise IllConditionedLatticeError(f"lattice basis condition number {cond:.3e}")


def lattice_coordinates(basis: np.ndarray, v: np.ndarray) -> np.ndarray:
    """Real coordinates of the complex vector ``v`` in the given real basis."""
    coords, *_ = np.linalg.lstsq(basis, _real(v), rcond=None)
    return coords


def rational_coordinates(basis: np.ndarray, v: np.ndarray) -> list[Fraction]:
    """Exact rational coordinates of ``v``; raises if rounding is not clean."""
    _check_conditioning(basis)
    coords = lattice_coordinates(basis, v)
    out = []
    for x in coords:
        f = Fraction(float(x)).limit_denominator(MAX_DENOMINATOR)
        if abs(float(f) - x) > ROUNDING_TOL:
            raise IllConditionedLatticeError(
                f"coordinate {x!r} is not a rational with denominator <= {MAX_DENOMINATOR}")
        out.append(f)
    back = basis @ np.array([float(f) for f in out])
    if np.max(np.abs(back - _real(v)), initial=0.0) > ROUNDING_TOL:
        raise IllConditionedLatticeError("back-substitution residual above tolerance")
    return out


def in_lattice(basis: np.ndarray, v: np.ndarray) -> bool:
    """Whether ``v`` lies in the lattice spanned by the columns of ``basis``."""
    return all(f.denominator == 1 for f in rational_coordinates(basis, v))


def reduce_mod(basis: np.ndarray, v: np.ndarray) -> np.ndarray:
    """Real representative of ``v`` modulo the lattice (integer parts removed)."""
    coords = lattice_coordinates(basis, v)
    return _real(v) - basis @ np.round(coords)


def smith_normal_form(a: Sequence[Sequence[int]]) -> list[int]:
    """Invariant factors of an integer matrix (exact, Python integers).

    Returns the non-zero diagonal entries ``d_1 | d_2 | ...`` of the Smith
    normal form, all positive.  Each pass moves the smallest non-zero entry
    of the trailing block to the pivot, so the pivot strictly decreases
    until its row and column are clear and it divides the rest.
    """
    A = [[int(x) for x in row] for row in a]
    rows = len(A)
    cols = len(A[0]) if rows else 0
    diag = []
    for t in range(min(rows, cols)):
        while True:
            nz = [(abs(A[i][j]), i, j) for i in range(t, rows) for j in range(t, cols) if A[i][j]]
            if not nz:
                return diag
            _, i, j = min(nz)
            A[t], A[i] = A[i], A[t]
            for row in A:
                row[t], row[j] = row[j], row[t]
            p = A[t][t]
            clear = True
            for i in range(t + 1, rows):
                q = A[i][t] // p
                if q:
                    A[i] = [x - q * y for x, y in zip(A[i], A[t])]
                clear = clear and A[i][t] == 0
            for j in range(t + 1, cols):
                q = A[t][j] // p
                if q:
                    for row in A:
                        row[j] -= q * row[t]
                clear = clear and A[t][j] == 0
            if not clear:
                continue
            bad = next((i for i in range(t + 1, rows)
                        if any(A[i][j] % p for j in range(t + 1, cols))), None)
            if bad is None:
                break
            A[t] = [x + y for x, y in zip(A[t], A[bad])]
        diag.append(abs(A[t][t]))
    return diag


def quotient_order(lattice: SpectralLattice) -> tuple[int, list[int], int]:
    """Order of Gamma/Pi together with the Smith data it was computed from.

    Returns ``(order, invariant_factors, denominator)``.  In Pi-coordinates
    scaled by the common denominator D, Pi becomes D*Z^n and Gamma is spanned
    by the integer columns [D*e_i | D*q] where q are the coordinates of
    Gamma_0, so ``|Gamma/Pi| = D^n / prod(d_i)``.
    """
    basis = lattice.pi_basis()
    q = rational_coordinates(basis, lattice.gamma[0])
    n = len(q)
    den = 1
    for f in q:
        den = den * f.denominator // math.gcd(den, f.denominator)
    gens = [[den if i == j else 0 for j in range(n)] + [int(q[i] * den)] for i in range(n)]
    factors = smith_normal_form(gens)
    if len(factors) != n:
        raise IllConditionedLatticeError("Gamma does not have full rank")
    num = den**n
    prod = math.prod(factors)
    if num % prod:
        raise IllConditionedLatticeError("Pi is not a sublattice of Gamma")
    return num // prod, factors, den


def group_order(lattice: SpectralLattice) -> int:
    """Size of Gamma/Pi, i.e. the number of fixed points of rho in C^{k-1}/Gamma."""
    if lattice.k == 1:
        return 1
    return quotient_order(lattice)[0]


def verify_fixed_point(lattice: SpectralLattice, l: int) -> float:
    """Sup-norm of ``rho x - x + l Gamma_0`` reduced modulo Pi, x the l-th fixed point."""
    if int(l) != l or not 0 <= l < lattice.k:
        raise InvalidParameterError(f"l must lie in [0, {lattice.k}), got {l!r}")
    if lattice.k == 1:
        return 0.0
    x = lattice.fixed_points[l]
    v = lattice.rho @ x - x + l * lattice.gamma[0]
    return float(np.max(np.abs(reduce_mod(lattice.pi_basis(), v))))


def fixed_points_distinct(lattice: SpectralLattice) -> bool:
    """True when no two fixed-point representatives are congruent modulo Gamma."""
    if lattice.k == 1:
        return True
    basis = lattice.gamma_basis()
    pts = lattice.fixed_points
    return not any(in_lattice(basis, pts[a] - pts[b])
                   for a in range(len(pts)) for b in range(a))


def group_label(k: int, n: int) -> str:
    return f"Z_{{{2 * k}}}^{{({n})}}"


@dataclass
class ClassificationReport:
    k: int
    l: int
    c_abs: float
    group_order: int
    entries: list[dict] = field(default_factory=list)
    odd_groups: list[dict] = field(default_factory=list)

    @property
    def charges(self) -> list[int]:
        return [e["m"] for e in self.entries]

    def to_dict(self) -> dict:
        selected = self.entries[self.l]
        return {
            "k": self.k,
            "l": self.l,
            "m": selected["m"],
            "group": selected["group"],
            "fixed_point": selected["fixed_point"],
            "group_order": self.group_order,
            "c_abs": self.c_abs,
            "entries": self.entries,
            "odd_groups": self.odd_groups,
        }

    def to_json(self) -> str:
        return json.dumps(self.to_dict(), indent=2)


def classify(params: ChainParams) -> ClassificationReport:
    """List the k admissible groups Z_{2k}^{(2l)} with their fixed points and split charge."""
    k = params.k
    lattice = build_lattice(k)
    order = group_order(lattice)
    entries = []
    for l in range(k):
        fp = lattice.fixed_points[l]
        entries.append({
            "l": l,
            "m": math.gcd(k, l),
            "group": group_label(k, 2 * l),
            "fixed_point": [[float(z.real), float(z.imag)] for z in fp],
            "residual": verify_fixed_point(lattice, l),
            "invariant": True,
        })
    odd = [{"group": group_label(k, 2 * l + 1), "invariant": False} for l in range(k)]
    return ClassificationReport(k=k, l=params.l, c_abs=params.c_abs, group_order=order,
                                entries=entries, odd_groups=odd)

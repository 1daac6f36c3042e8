"""Pure-numpy stencil kernels for the Toda flow (fallback backend)."""
import numpy as np


def coupling_terms(psi, a):
    """q_j = a_{j+1} exp(psi_j - psi_{j+1}), stacked like ``psi``."""
    up = np.roll(psi, -1, axis=0)
    return np.roll(a, -1, axis=0) * np.exp(psi - up)


def laplacian(psi, slope, hr, ht, shift):
    """5-point Laplacian; x2 wraps with the component shift, x1 uses Neumann ghosts."""
    k = psi.shape[0]
    nxt = np.empty_like(psi)
    prv = np.empty_like(psi)
    nxt[:, :, :-1] = psi[:, :, 1:]
    prv[:, :, 1:] = psi[:, :, :-1]
    idx = np.arange(k)
    nxt[:, :, -1] = psi[(idx + shift) % k, :, 0]
    prv[:, :, 0] = psi[(idx - shift) % k, :, -1]
    out = (nxt + prv - 2.0 * psi) / ht**2
    s = np.asarray(slope, dtype=float)[:, None]
    out[:, 1:-1] += (psi[:, 2:] + psi[:, :-2] - 2.0 * psi[:, 1:-1]) / hr**2
    out[:, 0] += 2.0 * (psi[:, 1] - psi[:, 0] + hr * s) / hr**2
    out[:, -1] += 2.0 * (psi[:, -2] - psi[:, -1] + hr * s) / hr**2
    return out


def residual(psi, a, slope, hr, ht, shift):
    """Laplacian minus the Toda source at every node."""
    q = coupling_terms(psi, a)
    return laplacian(psi, slope, hr, ht, shift) - (q - np.roll(q, 1, axis=0))


def explicit_steps(psi, a, slope, hr, ht, shift, dt, nsteps):
    """Run ``nsteps`` forward-Euler steps in place; returns sup of the last residual."""
    rmax = 0.0
    for _ in range(nsteps):
        r = residual(psi, a, slope, hr, ht, shift)
        rmax = float(np.abs(r).max())
        psi += dt * r
        psi -= psi.mean(axis=0)
    return rmax

"""Vectorised numpy implementations of the collision sums.

These are the fallback used when the compiled extension is unavailable.  All
functions return raw sums over the momentum-conserving quadruples
``k0 + k1 = k2 + k3`` (``k3 = add[k0, sub[k1, k2]]``); prefactors such as
``pi * lambda**2 * w**2`` are applied by the callers.
"""

import numpy as np

SQRT_2PI = np.sqrt(2.0 * np.pi)
TINY = 1e-300


def _delta(x, eps, kind=0):
    """Gaussian (kind 0) or Lorentzian (kind 1) approximation of the delta."""
    if kind == 0:
        return np.exp(-0.5 * (x / eps) ** 2) / (eps * SQRT_2PI)
    return eps / (np.pi * (x * x + eps * eps))


def _pv(x, eps):
    return x / (x * x + eps * eps)


def _adj(a):
    """2x2 adjugate, equal to trace(a) * 1 - a."""
    out = np.empty_like(a)
    out[..., 0, 0] = a[..., 1, 1]
    out[..., 1, 1] = a[..., 0, 0]
    out[..., 0, 1] = -a[..., 0, 1]
    out[..., 1, 0] = -a[..., 1, 0]
    return out


def scalar_collision(W, omega, vhat, add, sub, eps, kind=0, threads=1):
    N = W.shape[0]
    Wt = 1.0 - W
    vsub = vhat[sub]
    out = np.empty(N)
    for k0 in range(N):
        k3 = add[k0][sub]
        dw = omega[k0] + omega[:, None] - omega[None, :] - omega[k3]
        kern = (vsub - vhat[sub[:, k0]][None, :]) ** 2
        bracket = (Wt[k0] * Wt[:, None] * W[None, :] * W[k3]
                   - W[k0] * W[:, None] * Wt[None, :] * Wt[k3])
        out[k0] = np.sum(kern * _delta(dw, eps, kind) * bracket)
    return out


def scalar_entropy_production(W, omega, vhat, add, sub, eps, kind=0, threads=1):
    N = W.shape[0]
    Wt = 1.0 - W
    vsub = vhat[sub]
    total = 0.0
    for k0 in range(N):
        k3 = add[k0][sub]
        dw = omega[k0] + omega[:, None] - omega[None, :] - omega[k3]
        kern = (vsub - vhat[sub[:, k0]][None, :]) ** 2
        x = Wt[k0] * Wt[:, None] * W[None, :] * W[k3]
        y = W[k0] * W[:, None] * Wt[None, :] * Wt[k3]
        g = (x - y) * (np.log(np.maximum(x, TINY)) - np.log(np.maximum(y, TINY)))
        total += np.sum(kern * _delta(dw, eps, kind) * g)
    return total


def hubbard_sums(W, omega, add, sub, eps_delta, eps_pv, kind=0, with_pv=True, threads=1):
    """Return per-k0 accumulators (A, B, P), each of shape (N, 2, 2).

    A = sum delta * W2 J[Wt1 W3],  B = sum delta * Wt2 J[W1 Wt3],
    P = sum pv * (Wt2 J[W1 Wt3] + W2 J[Wt1 W3]).
    """
    N = W.shape[0]
    eye = np.eye(2)
    Wt = eye - W
    A = np.zeros((N, 2, 2), dtype=complex)
    B = np.zeros((N, 2, 2), dtype=complex)
    P = np.zeros((N, 2, 2), dtype=complex)
    W1 = W[:, None]
    Wt1 = Wt[:, None]
    W2 = W[None, :]
    Wt2 = Wt[None, :]
    for k0 in range(N):
        k3 = add[k0][sub]
        W3 = W[k3]
        Wt3 = Wt[k3]
        dw = omega[k0] + omega[:, None] - omega[None, :] - omega[k3]
        x = W2 @ _adj(Wt1 @ W3)
        y = Wt2 @ _adj(W1 @ Wt3)
        dl = _delta(dw, eps_delta, kind)[..., None, None]
        A[k0] = np.sum(dl * x, axis=(0, 1))
        B[k0] = np.sum(dl * y, axis=(0, 1))
        if with_pv:
            P[k0] = np.sum(_pv(dw, eps_pv)[..., None, None] * (x + y), axis=(0, 1))
    return A, B, P


def hubbard_entropy_production(evals, evecs, omega, add, sub, eps, kind=0, threads=1):
    """Raw band-resolved entropy-production sum (no prefactor).

    ``evals`` has shape (N, 2); ``evecs[k][:, a]`` is the eigenvector of band a.
    Quadruples are labelled (1, 2, 3, 4) with k4 = k1 + k2 - k3.
    """
    N = evals.shape[0]
    lt = 1.0 - evals
    # overlap[i, j, a, b] = <psi_a(k_i) | psi_b(k_j)>
    overlap = np.einsum("iza,jzb->ijab", evecs.conj(), evecs)
    total = 0.0
    k2 = np.arange(N)[:, None]
    k3 = np.arange(N)[None, :]
    for k1 in range(N):
        k4 = add[k1][sub]  # k1 + k2 - k3 over (k2, k3)
        dw = omega[k1] + omega[:, None] - omega[None, :] - omega[k4]
        dl = _delta(dw, eps, kind)
        for a1 in range(2):
            for a2 in range(2):
                for a3 in range(2):
                    for a4 in range(2):
                        x = lt[k1, a1] * lt[:, a2][:, None] * evals[:, a3][None, :] * evals[k4, a4]
                        y = evals[k1, a1] * evals[:, a2][:, None] * lt[:, a3][None, :] * lt[k4, a4]
                        g = (x - y) * (np.log(np.maximum(x, TINY)) - np.log(np.maximum(y, TINY)))
                        amp = (overlap[k1, k3, a1, a3] * overlap[k2, k4, a2, a4]
                               - overlap[k1, k4, a1, a4] * overlap[k2, k3, a2, a3])
                        total += np.sum(dl * g * np.abs(amp) ** 2)
    return total

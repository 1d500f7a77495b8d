"""Spatially homogeneous fermionic Boltzmann-Nordheim equation.

A scalar Wigner function is a real array of length ``grid.size`` with values
in [0, 1].  The collision operator resolves momentum conservation exactly
through the grid's index tables and smooths the energy delta with a kernel of
width ``eps`` (see :mod:`fermikin.lattice`).
"""

from __future__ import annotations

from typing import NamedTuple

import numpy as np
from scipy.optimize import brentq
from scipy.special import expit, xlogy

from . import kernels
from .errors import AdmissibilityError, BoundaryTargetError, FitError, InfeasibleTargetError
from .lattice import Dispersion, PairPotential, resolve_widths

ADMISSIBILITY_TOL = 1e-9
DEFAULT_KERNEL = "lorentzian"
BETA_BRACKET = 1e6


class ConservedPair(NamedTuple):
    density: float
    energy: float


def check_scalar(W, size: int | None = None, tol: float = ADMISSIBILITY_TOL) -> np.ndarray:
    """Return ``W`` as a float array after checking 0 <= W <= 1 within ``tol``."""
    W = np.ascontiguousarray(W, dtype=float)
    if W.ndim != 1 or (size is not None and W.size != size):
        raise AdmissibilityError(f"expected a field of {size} values, got shape {W.shape}")
    if not np.all(np.isfinite(W)):
        raise AdmissibilityError("Wigner function has non-finite entries")
    lo, hi = W.min(), W.max()
    if lo < -tol or hi > 1.0 + tol:
        raise AdmissibilityError(f"Wigner function leaves [0, 1]: range [{lo:.3e}, {hi:.3e}]")
    return W


def collision_bn(W, disp: Dispersion, vhat: PairPotential, lam: float = 1.0, eps=None,
                 kernel: str = DEFAULT_KERNEL) -> np.ndarray:
    """Boltzmann-Nordheim collision operator C[W](k) at every grid point.

    Args:
        W: occupation per grid point.
        disp: dispersion on the grid.
        vhat: pair potential on the same grid.
        lam: coupling constant.
        eps: width of the energy delta; grid default when None.
        kernel: "gaussian" or "lorentzian".

    Returns:
        Array of shape (grid.size,).
    """
    grid = disp.grid
    W = check_scalar(W, grid.size)
    eps = resolve_widths(disp, eps).delta
    raw = kernels.scalar_collision(W, disp.values, vhat.values, grid.add_table, grid.sub_table, eps, kernel)
    return np.pi * lam**2 * grid.cell_weight**2 * raw


rhs_spinless = collision_bn


def conserved(W, disp: Dispersion) -> ConservedPair:
    w = disp.grid.cell_weight
    W = np.asarray(W, dtype=float)
    return ConservedPair(float(w * np.sum(W)), float(w * np.dot(disp.values, W)))


def entropy(W) -> float:
    """Fermionic entropy -sum_k w [W ln W + (1-W) ln(1-W)], with 0 ln 0 = 0."""
    W = np.asarray(W, dtype=float)
    Wt = 1.0 - W
    return float(-np.sum(xlogy(W, W) + xlogy(Wt, Wt)) / W.size)


def entropy_production(W, disp: Dispersion, vhat: PairPotential, lam: float = 1.0, eps=None,
                       kernel: str = DEFAULT_KERNEL) -> float:
    """Rate of entropy growth along the collision flow.

    Symmetrising dS/dt over the four labels of a collision gives
    (pi lam^2 / 4) w^3 sum K delta G(x, y) with G(x, y) = (x - y) ln(x / y).
    Arguments of the logarithm are clamped at 1e-300.
    """
    grid = disp.grid
    W = check_scalar(W, grid.size)
    eps = resolve_widths(disp, eps).delta
    raw = kernels.scalar_entropy_production(W, disp.values, vhat.values, grid.add_table, grid.sub_table,
                                            eps, kernel)
    return 0.25 * np.pi * lam**2 * grid.cell_weight**3 * raw


# --- Fermi-Dirac equilibria ----------------------------------------------


def fermi_dirac(disp: Dispersion, beta: float, mu: float) -> np.ndarray:
    """W(k) = 1 / (exp(beta (omega(k) - mu)) + 1), overflow safe."""
    return expit(-beta * (disp.values - mu))


def _fd_ba(omega, beta, a):
    return expit(a - beta * omega)


def bathtub_bounds(density: float, disp: Dispersion) -> tuple[float, float]:
    """Smallest and largest energy of an admissible W with the given density.

    The extremes fill the lowest (highest) energy cells first.
    """
    om = np.sort(disp.values)
    N = om.size
    fill = density * N
    full = int(np.floor(fill))
    frac = fill - full
    lo = om[:full].sum() + (frac * om[full] if full < N else 0.0)
    hi = om[N - full:].sum() + (frac * om[N - full - 1] if full < N else 0.0)
    return lo / N, hi / N


def _moments(omega, beta, a):
    W = _fd_ba(omega, beta, a)
    q = W * (1.0 - W)
    N = omega.size
    return W.sum() / N, np.dot(omega, W) / N, q, W


def _newton(omega, target, beta, a, maxiter):
    n_t, e_t = target
    scale = max(1.0, float(np.max(np.abs(omega))))
    for _ in range(maxiter):
        n, e, q, _ = _moments(omega, beta, a)
        r = np.array([n - n_t, (e - e_t) / scale])
        if np.max(np.abs(r)) * max(1.0, scale) < 1e-13:
            return beta, a, True
        N = omega.size
        J = np.array([[-np.dot(omega, q), np.sum(q)],
                      [-np.dot(omega * omega, q) / scale, np.dot(omega, q) / scale]]) / N
        try:
            step = np.linalg.solve(J, -r)
        except np.linalg.LinAlgError:
            return beta, a, False
        if not np.all(np.isfinite(step)):
            return beta, a, False
        t = 1.0
        norm0 = np.linalg.norm(r)
        while t > 1e-6:
            b1, a1 = beta + t * step[0], a + t * step[1]
            n1, e1, _, _ = _moments(omega, b1, a1)
            if np.linalg.norm([n1 - n_t, (e1 - e_t) / scale]) < norm0 or norm0 < 1e-14:
                break
            t *= 0.5
        beta, a = b1, a1
        if abs(beta) > BETA_BRACKET:
            return beta, a, False
    return beta, a, False


def _solve_a(omega, beta, n_t):
    # density is increasing in a; bracket around the range of beta * omega
    span = abs(beta) * float(np.max(np.abs(omega))) + 50.0
    f = lambda a: np.mean(_fd_ba(omega, beta, a)) - n_t
    return brentq(f, -span - 750.0, span + 750.0, xtol=1e-15, rtol=1e-15, maxiter=500)


def _bisection(omega, target):
    n_t, e_t = target

    def g(beta):
        a = _solve_a(omega, beta, n_t)
        return np.dot(omega, _fd_ba(omega, beta, a)) / omega.size - e_t

    lo, hi = -BETA_BRACKET, BETA_BRACKET
    glo, ghi = g(lo), g(hi)
    if np.sign(glo) == np.sign(ghi):
        raise FitError("energy target not bracketed on beta in [-1e6, 1e6]")
    beta = brentq(g, lo, hi, xtol=1e-14, rtol=1e-15, maxiter=500)
    return beta, _solve_a(omega, beta, n_t)


def fit_fermi_dirac(target, disp: Dispersion, maxiter: int = 200, tol: float = 1e-10) -> tuple[float, float]:
    """Fermi-Dirac parameters (beta, mu) reproducing a (density, energy) target.

    Solves in the variables (beta, a = beta mu) by damped Newton, falling back
    to nested bisection on beta in [-1e6, 1e6].

    Raises:
        InfeasibleTargetError: target outside the admissible region.
        BoundaryTargetError: target on its boundary (beta = +inf or -inf).
        FitError: no convergence.
    """
    n_t, e_t = float(target[0]), float(target[1])
    omega = np.asarray(disp.values, dtype=float)
    span = float(np.ptp(omega)) + 1.0
    if not (0.0 <= n_t <= 1.0):
        raise InfeasibleTargetError(f"density {n_t} outside [0, 1]")
    lo, hi = bathtub_bounds(n_t, disp)
    edge = 1e-12 * span
    if e_t < lo - edge or e_t > hi + edge:
        raise InfeasibleTargetError(f"energy {e_t} outside the admissible range [{lo}, {hi}] at density {n_t}")
    if n_t in (0.0, 1.0) or e_t <= lo + edge:
        raise BoundaryTargetError("target on the lower energy boundary (beta = +inf)", "+inf")
    if e_t >= hi - edge:
        raise BoundaryTargetError("target on the upper energy boundary (beta = -inf)", "-inf")

    a0 = np.log(n_t / (1.0 - n_t))
    beta, a, ok = _newton(omega, (n_t, e_t), 0.0, a0, maxiter)
    if not ok:
        try:
            beta, a = _bisection(omega, (n_t, e_t))
        except (ValueError, RuntimeError) as exc:
            raise FitError(f"Fermi-Dirac fit failed: {exc}") from exc
    n, e, _, _ = _moments(omega, beta, a)
    if abs(n - n_t) > tol or abs(e - e_t) > tol:
        raise FitError(f"Fermi-Dirac fit residual too large: ({n - n_t:.2e}, {e - e_t:.2e})")
    if beta == 0.0:
        if abs(a) > 1e-14:
            raise FitError("target is a constant occupation; chemical potential is infinite")
        return 0.0, 0.0
    return float(beta), float(a / beta)

"""Matrix-valued Hubbard-Boltzmann equation.

A matrix Wigner function is a complex array of shape (grid.size, 2, 2) whose
entries are Hermitian with eigenvalues in [0, 1].  The right-hand side is

    dW/dt = C[W] - i [H_eff[W], W],

with the collision operator built from the map J[A] = Tr(A) 1 - A and an
effective Hamiltonian made of the spin-correlation matrix and a
principal-value term.
"""

from __future__ import annotations

from dataclasses import dataclass, field

import numpy as np
from scipy.special import expit, logit, xlogy

from . import kernels
from .errors import AdmissibilityError, FitError, GridError
from .integrator import matrix_eigenvalues
from .lattice import Dispersion, KGrid, resolve_widths
from .spinless import DEFAULT_KERNEL, fit_fermi_dirac

ADMISSIBILITY_TOL = 1e-9
DEGENERACY_GAP = 1e-12
EYE = np.eye(2)


def j_map(A):
    """J[A] = Tr(A) 1 - A, applied to the last two axes.

    For 2x2 matrices this swaps the diagonal and negates the off-diagonal,
    which is exact in floating point (so J[J[A]] == A bit for bit).
    """
    A = np.asarray(A)
    out = -A
    out[..., 0, 0] = A[..., 1, 1]
    out[..., 1, 1] = A[..., 0, 0]
    return out


def dagger(A):
    return np.conj(np.swapaxes(A, -1, -2))


def check_matrix(W, size: int | None = None, tol: float = ADMISSIBILITY_TOL) -> np.ndarray:
    """Validate a matrix Wigner function and return it as complex (N, 2, 2)."""
    W = np.ascontiguousarray(W, dtype=complex)
    if W.ndim != 3 or W.shape[1:] != (2, 2) or (size is not None and W.shape[0] != size):
        raise AdmissibilityError(f"expected shape ({size}, 2, 2), got {W.shape}")
    if not np.all(np.isfinite(W)):
        raise AdmissibilityError("Wigner function has non-finite entries")
    herm = np.max(np.abs(W - dagger(W)))
    if herm > 1e-10:
        raise AdmissibilityError(f"Wigner function is not Hermitian (deviation {herm:.2e})")
    ev = matrix_eigenvalues(W)
    if ev.min() < -tol or ev.max() > 1.0 + tol:
        raise AdmissibilityError(f"eigenvalues leave [0, 1]: range [{ev.min():.3e}, {ev.max():.3e}]")
    return W


def eigh2(W):
    """Closed-form eigen-decomposition of Hermitian 2x2 matrices.

    Returns ``(evals, evecs)`` with ascending eigenvalues of shape (..., 2) and
    eigenvectors as columns of ``evecs``.  When the gap is below 1e-12 the
    standard basis is returned.
    """
    W = np.asarray(W, dtype=complex)
    evals = matrix_eigenvalues(W)
    a = W[..., 0, 0].real
    d = W[..., 1, 1].real
    b = W[..., 0, 1]
    lam = evals[..., 0]
    # two algebraically equivalent eigenvectors; keep the better conditioned one
    u = np.stack([b, lam - a], axis=-1)
    v = np.stack([lam - d, np.conj(b)], axis=-1)
    nu = np.linalg.norm(u, axis=-1)
    nv = np.linalg.norm(v, axis=-1)
    norm = np.maximum(nu, nv)[..., None]
    c0 = np.where((nu >= nv)[..., None], u, v) / np.where(norm > 0, norm, 1.0)
    c1 = np.stack([-np.conj(c0[..., 1]), np.conj(c0[..., 0])], axis=-1)
    vecs = np.stack([c0, c1], axis=-1)
    degenerate = (evals[..., 1] - evals[..., 0]) < DEGENERACY_GAP
    vecs[degenerate] = EYE
    return evals, vecs


def spin_correlation(W) -> np.ndarray:
    """Sigma = sum_k w W(k), the k-average of the Wigner function."""
    W = np.asarray(W)
    return W.sum(axis=0) / W.shape[0]


def energy(W, disp: Dispersion) -> float:
    W = np.asarray(W)
    tr = (W[:, 0, 0] + W[:, 1, 1]).real
    return float(np.dot(disp.values, tr) * disp.grid.cell_weight)


def _sums(W, disp, eps, eps_pv, kernel, with_pv):
    grid = disp.grid
    widths = resolve_widths(disp, eps, eps_pv)
    return kernels.hubbard_sums(W, disp.values, grid.add_table, grid.sub_table,
                                widths.delta, widths.pv, kernel, with_pv)


def _collision_from(W, A, B):
    S = (EYE - W) @ A - W @ B
    return S + dagger(S)


def collision_hubbard(W, disp: Dispersion, lam: float = 1.0, eps=None,
                      kernel: str = DEFAULT_KERNEL) -> np.ndarray:
    """Hubbard collision operator, a Hermitian 2x2 matrix per grid point.

    Args:
        W: matrix Wigner function, shape (N, 2, 2).
        disp: dispersion on the grid.
        lam: onsite coupling.
        eps: width of the energy delta (grid default when None).
        kernel: "gaussian" or "lorentzian".
    """
    W = check_matrix(W, disp.grid.size)
    A, B, _ = _sums(W, disp, eps, None, kernel, False)
    return np.pi * lam**2 * disp.grid.cell_weight**2 * _collision_from(W, A, B)


def effective_hamiltonian(W, disp: Dispersion, lam: float = 1.0, eps=None, eps_pv=None,
                          kernel: str = DEFAULT_KERNEL) -> np.ndarray:
    """lam Sigma + lam^2 w^2 sum pv(dw) (Wt2 J[W1 Wt3] + W2 J[Wt1 W3]) per grid point."""
    W = check_matrix(W, disp.grid.size)
    _, _, P = _sums(W, disp, eps, eps_pv, kernel, True)
    return lam * spin_correlation(W)[None] + lam**2 * disp.grid.cell_weight**2 * P


def rhs_hubbard(W, disp: Dispersion, lam: float = 1.0, eps=None, eps_pv=None,
                kernel: str = DEFAULT_KERNEL, parts: bool = False):
    """C[W] - i [H_eff, W].  With ``parts`` also returns (C, H_eff)."""
    W = check_matrix(W, disp.grid.size)
    A, B, P = _sums(W, disp, eps, eps_pv, kernel, True)
    w2 = disp.grid.cell_weight**2
    C = np.pi * lam**2 * w2 * _collision_from(W, A, B)
    H = lam * spin_correlation(W)[None] + lam**2 * w2 * P
    out = C - 1j * (H @ W - W @ H)
    if parts:
        return out, C, H
    return out


def matrix_entropy(W) -> float:
    """-sum_k w [Tr W ln W + Tr (1-W) ln(1-W)] via eigenvalues, 0 ln 0 = 0."""
    ev = np.clip(matrix_eigenvalues(np.asarray(W)), 0.0, 1.0)
    lt = 1.0 - ev
    return float(-np.sum(xlogy(ev, ev) + xlogy(lt, lt)) / ev.shape[0])


def matrix_entropy_production(W, disp: Dispersion, lam: float = 1.0, eps=None,
                              kernel: str = DEFAULT_KERNEL) -> float:
    """Collision entropy production, summed over bands in the eigenbasis of W(k).

    The integrand is (x - y) ln(x / y) |<1|3><2|4> - <1|4><2|3>|^2 with the
    logarithm's arguments clamped at 1e-300; prefactor (pi/4) lam^2 w^3.
    """
    W = check_matrix(W, disp.grid.size)
    grid = disp.grid
    evals, evecs = eigh2(W)
    eps = resolve_widths(disp, eps).delta
    raw = kernels.hubbard_entropy_production(np.ascontiguousarray(evals), evecs, disp.values,
                                             grid.add_table, grid.sub_table, eps, kernel)
    return 0.25 * np.pi * lam**2 * grid.cell_weight**3 * raw


# --- equilibria and stationary states --------------------------------------


def two_band_fd(disp: Dispersion, beta: float, mu_plus: float, mu_minus: float, basis=None) -> np.ndarray:
    """U diag(FD(mu_plus), FD(mu_minus)) U^* with common inverse temperature."""
    om = disp.values
    W = np.zeros((om.size, 2, 2), dtype=complex)
    W[:, 0, 0] = expit(-beta * (om - mu_plus))
    W[:, 1, 1] = expit(-beta * (om - mu_minus))
    if basis is not None:
        U = np.asarray(basis, dtype=complex)
        W = U @ W @ dagger(U)
    return W


def diagonal_field(f_plus, f_minus) -> np.ndarray:
    f_plus = np.asarray(f_plus, dtype=float)
    W = np.zeros((f_plus.size, 2, 2), dtype=complex)
    W[:, 0, 0] = f_plus
    W[:, 1, 1] = f_minus
    return W


def mirror_index(grid: KGrid) -> np.ndarray:
    """Flat index of 1/2 - k for every grid point (d = 1)."""
    if grid.d != 1:
        raise GridError("the mirror k -> 1/2 - k is only used for d = 1")
    return grid.flat(grid.n // 2 - grid.indices)


def is_antisymmetric(f, grid: KGrid, tol: float = 1e-12) -> bool:
    f = np.asarray(f, dtype=float)
    return bool(np.max(np.abs(f + f[mirror_index(grid)])) <= tol)


def d1_degenerate_family(grid: KGrid, beta: float, mu_plus: float, mu_minus: float, f_profile) -> np.ndarray:
    """diag(FD-like occupations in f) for a profile with f(1/2 - k) = -f(k).

    ``f_profile`` is an array over the grid or a callable of the wavenumbers.
    """
    if grid.d != 1:
        raise GridError("the degenerate family exists for d = 1 only")
    f = f_profile(grid.points[:, 0]) if callable(f_profile) else f_profile
    f = np.asarray(f, dtype=float).reshape(grid.size)
    if not is_antisymmetric(f, grid):
        dev = np.max(np.abs(f + f[mirror_index(grid)]))
        raise ValueError(f"profile violates f(1/2 - k) = -f(k) (max deviation {dev:.2e})")
    return diagonal_field(expit(-beta * (f - mu_plus)), expit(-beta * (f - mu_minus)))


@dataclass
class StationaryClass:
    """Outcome of :func:`classify_stationary`.

    ``tag`` is one of two_band_fd, empty_band, full_band, d1_degenerate,
    not_stationary; ``params`` holds the tag-specific data and ``basis`` the
    unitary that diagonalises Sigma.
    """

    tag: str
    params: dict = field(default_factory=dict)
    basis: np.ndarray | None = None


def _common_basis(W, sigma):
    ev, U = eigh2(sigma)
    if ev[1] - ev[0] >= DEGENERACY_GAP:
        return U
    # isotropic Sigma: fall back to the most anisotropic cell
    evk = matrix_eigenvalues(W)
    k = int(np.argmax(evk[:, 1] - evk[:, 0]))
    return eigh2(W[k])[1]


def _fd_fit(bands, disp):
    w = disp.grid.cell_weight
    fits = []
    for g in bands:
        target = (w * g.sum(), w * np.dot(disp.values, g))
        fits.append(fit_fermi_dirac(target, disp))
    beta = 0.5 * (fits[0][0] + fits[1][0])
    mus = [f[1] for f in fits]
    resid = max(np.max(np.abs(expit(-beta * (disp.values - m)) - g)) for g, m in zip(bands, mus))
    return beta, mus, resid


def _degenerate_fit(bands, grid):
    m = mirror_index(grid)
    clip = 1e-300
    u = [logit(np.clip(g, clip, 1.0 - 1e-16)) for g in bands]
    c = [0.5 * (x + x[m]) for x in u]
    mu_p, mu_m = float(np.mean(c[0])), float(np.mean(c[1]))
    f = mu_p - u[0]
    f = 0.5 * (f - f[m])
    recon = [expit(-(f - mu_p)), expit(-(f - mu_m))]
    resid = max(np.max(np.abs(r - g)) for r, g in zip(recon, bands))
    return f, mu_p, mu_m, resid


def classify_stationary(W, disp: Dispersion, tol: float = 1e-8, collision_tol=None,
                        lam: float = 1.0, eps=None, kernel: str = DEFAULT_KERNEL) -> StationaryClass:
    """Classify a matrix Wigner function among the stationary families.

    Tests, in order: empty band, full band, two-band Fermi-Dirac with a common
    beta, the d = 1 degenerate family, else not stationary.  For the
    degenerate family the structural antisymmetry test is used; when
    ``collision_tol`` is given the collision operator must also be below it.
    """
    grid = disp.grid
    W = check_matrix(W, grid.size)
    sigma = spin_correlation(W)
    U = _common_basis(W, sigma)
    Wd = dagger(U)[None] @ W @ U[None]
    diag = [Wd[:, 0, 0].real, Wd[:, 1, 1].real]
    off = float(np.max(np.abs(Wd[:, 0, 1])))
    for i, g in enumerate(diag):
        if np.max(g) <= tol:
            return StationaryClass("empty_band", {"sigma_index": i, "f": diag[1 - i].copy(),
                                                  "offdiag": off}, U)
    for i, g in enumerate(diag):
        if np.min(g) >= 1.0 - tol:
            return StationaryClass("full_band", {"sigma_index": i, "f": diag[1 - i].copy(),
                                                 "offdiag": off}, U)
    if off > tol:
        return StationaryClass("not_stationary", {"offdiag": off}, U)
    try:
        beta, mus, resid = _fd_fit(diag, disp)
    except FitError:
        resid = np.inf
    if resid <= tol:
        return StationaryClass("two_band_fd", {"beta": beta, "mu_plus": mus[0], "mu_minus": mus[1],
                                               "residual": resid}, U)
    if grid.d == 1:
        f, mu_p, mu_m, dres = _degenerate_fit(diag, grid)
        ok = dres <= tol
        if ok and collision_tol is not None:
            ok = np.max(np.abs(collision_hubbard(W, disp, lam, eps, kernel))) <= collision_tol
        if ok:
            return StationaryClass("d1_degenerate", {"f": f, "beta": 1.0, "mu_plus": mu_p,
                                                     "mu_minus": mu_m, "residual": dres}, U)
    return StationaryClass("not_stationary", {"offdiag": off}, U)


def fit_two_band_fd(sigma, energy_target: float, disp: Dispersion):
    """Two-band Fermi-Dirac state with given Sigma and energy.

    The band densities are the eigenvalues of Sigma and the basis its
    eigenvectors; the common beta is found by bisection on [-1e6, 1e6] with the
    chemical potentials solved per band.

    Returns:
        (beta, mu_plus, mu_minus, basis).

    Raises:
        FitError: a band is empty or full, or the energy is not bracketed.
    """
    from scipy.optimize import brentq

    from .spinless import BETA_BRACKET, _fd_ba, _solve_a

    ev, U = eigh2(np.asarray(sigma, dtype=complex))
    if ev.min() <= 0.0 or ev.max() >= 1.0:
        raise FitError("a band is empty or full; no finite two-band Fermi-Dirac state")
    om = disp.values

    def e_of(beta):
        a = [_solve_a(om, beta, n) for n in ev]
        return a, sum(np.mean(om * _fd_ba(om, beta, ai)) for ai in a)

    g = lambda beta: e_of(beta)[1] - energy_target
    try:
        beta = brentq(g, -BETA_BRACKET, BETA_BRACKET, xtol=1e-14, rtol=1e-15, maxiter=500)
    except ValueError as exc:
        raise FitError(f"energy target not bracketed: {exc}") from exc
    a, _ = e_of(beta)
    if beta == 0.0:
        raise FitError("infinite temperature with unequal bands has no finite chemical potential")
    return float(beta), float(a[0] / beta), float(a[1] / beta), U

"""Exact many-body oracle on small one-dimensional lattices.

Fock space is spanned by occupation bitmasks over the single-particle modes.
Modes are ordered site-major, spin-minor: mode ``m = x`` for spinless
fermions and ``m = 2 x + s`` (s = 0 up, 1 down) with spin.  Basis state ``i``
is the bitmask ``i`` itself, so the basis is enumerated in increasing order.

Annihilation carries the Jordan-Wigner sign (-1)^(number of occupied modes
below m).  The one-particle density matrix of a state is
``rho1[y, x] = <a*(x) a(y)>``.
"""

from __future__ import annotations

from dataclasses import dataclass, field
from functools import cached_property

import numpy as np
import scipy.sparse as sp

from .errors import TranslationInvarianceError
from .lattice import Dispersion, KGrid


@dataclass(frozen=True, eq=False)
class FockBasis:
    """Occupation-number basis for ``L`` sites, spinless or spin-1/2."""

    L: int
    spin: bool = False

    def __post_init__(self):
        if self.L < 1:
            raise ValueError("need at least one site")
        if self.modes > 12:
            raise ValueError(f"{self.modes} modes exceed the dense limit of 12 (dimension 4096)")

    @property
    def nspin(self) -> int:
        return 2 if self.spin else 1

    @property
    def modes(self) -> int:
        return self.L * self.nspin

    @property
    def dim(self) -> int:
        return 1 << self.modes

    def mode(self, x: int, s: int = 0) -> int:
        return (x % self.L) * self.nspin + s

    @cached_property
    def states(self) -> np.ndarray:
        return np.arange(self.dim, dtype=np.int64)

    @cached_property
    def _annihilators(self):
        return [_annihilator(m, self.dim) for m in range(self.modes)]

    def annihilate(self, m: int) -> sp.csr_matrix:
        return self._annihilators[m]

    def create(self, m: int) -> sp.csr_matrix:
        return self._annihilators[m].T.tocsr()

    @cached_property
    def number(self) -> sp.csr_matrix:
        counts = np.array([bin(i).count("1") for i in range(self.dim)], dtype=float)
        return sp.diags(counts).tocsr()


def _annihilator(m: int, dim: int) -> sp.csr_matrix:
    states = np.arange(dim, dtype=np.int64)
    occ = (states >> m) & 1
    src = states[occ == 1]
    below = src & ((1 << m) - 1)
    parity = np.array([bin(int(b)).count("1") & 1 for b in below], dtype=np.int64)
    vals = np.where(parity == 1, -1.0, 1.0)
    dst = src ^ (1 << m)
    return sp.csr_matrix((vals, (dst, src)), shape=(dim, dim))


def car_operator(mode: int, kind: str, basis: FockBasis) -> sp.csr_matrix:
    """Creation (``kind="create"``) or annihilation operator of a mode."""
    if not 0 <= mode < basis.modes:
        raise ValueError(f"mode {mode} out of range for {basis.modes} modes")
    if kind == "create":
        return basis.create(mode)
    if kind == "annihilate":
        return basis.annihilate(mode)
    raise ValueError("kind must be 'create' or 'annihilate'")


# --- Hamiltonians ---------------------------------------------------------


def hopping_from_dispersion(disp: Dispersion) -> np.ndarray:
    """alpha(x) = (1/L) sum_k omega(k) e^{2 pi i k x}, x = 0..L-1 (real for symmetric omega)."""
    grid = disp.grid
    if grid.d != 1:
        raise ValueError("the oracle lattice is one-dimensional")
    k = grid.points[:, 0]
    x = np.arange(grid.n)
    alpha = np.exp(2j * np.pi * np.outer(x, k)) @ disp.values / grid.n
    return alpha.real


def potential_from_fourier(vhat_values, grid: KGrid) -> np.ndarray:
    """V(x) = (1/L) sum_k vhat(k) e^{2 pi i k x} for a pair potential sampled on the grid."""
    k = grid.points[:, 0]
    x = np.arange(grid.n)
    return (np.exp(2j * np.pi * np.outer(x, k)) @ np.asarray(vhat_values) / grid.n).real


def free_hamiltonian(alpha, basis: FockBasis) -> sp.csr_matrix:
    L = basis.L
    H = sp.csr_matrix((basis.dim, basis.dim))
    for x in range(L):
        for y in range(L):
            a = alpha[(x - y) % L]
            if a == 0.0:
                continue
            for s in range(basis.nspin):
                H = H + a * (basis.create(basis.mode(x, s)) @ basis.annihilate(basis.mode(y, s)))
    return H.tocsr()


def pair_interaction(V, basis: FockBasis) -> sp.csr_matrix:
    """(1/2) sum_{x,y} V(x-y) a*(x) a*(y) a(y) a(x) for spinless fermions."""
    L = basis.L
    out = sp.csr_matrix((basis.dim, basis.dim))
    n = [basis.create(x) @ basis.annihilate(x) for x in range(L)]
    for x in range(L):
        for y in range(L):
            if x == y or V[(x - y) % L] == 0.0:
                continue
            # a*x a*y ay ax = n_x n_y for x != y
            out = out + 0.5 * V[(x - y) % L] * (n[x] @ n[y])
    return out.tocsr()


def hubbard_interaction(basis: FockBasis) -> sp.csr_matrix:
    """sum_x n(x, up) n(x, down)."""
    if not basis.spin:
        raise ValueError("the Hubbard interaction needs a spin basis")
    out = sp.csr_matrix((basis.dim, basis.dim))
    for x in range(basis.L):
        up = basis.create(basis.mode(x, 0)) @ basis.annihilate(basis.mode(x, 0))
        dn = basis.create(basis.mode(x, 1)) @ basis.annihilate(basis.mode(x, 1))
        out = out + up @ dn
    return out.tocsr()


def build_hamiltonian(alpha, lam: float, basis: FockBasis, V=None) -> sp.csr_matrix:
    """H0 + lam V.  Spin bases get the onsite Hubbard term, spinless ones need ``V``."""
    H0 = free_hamiltonian(alpha, basis)
    if basis.spin:
        return (H0 + lam * hubbard_interaction(basis)).tocsr()
    if V is None:
        raise ValueError("spinless model needs a pair potential profile V(x)")
    return (H0 + lam * pair_interaction(V, basis)).tocsr()


def one_particle_block(H, basis: FockBasis) -> np.ndarray:
    """Restriction of H to the one-particle sector (states with a single set bit)."""
    idx = np.array([1 << m for m in range(basis.modes)])
    H = H.tocsr() if sp.issparse(H) else H
    return np.asarray(H[idx][:, idx].todense() if sp.issparse(H) else H[np.ix_(idx, idx)])


# --- states ---------------------------------------------------------------


def quadratic_form(h, basis: FockBasis) -> sp.csr_matrix:
    """sum_{xy} h[x, y] a*(x) a(y) as a sparse matrix."""
    h = np.asarray(h)
    out = sp.csr_matrix((basis.dim, basis.dim), dtype=complex)
    for x in range(basis.modes):
        for y in range(basis.modes):
            if h[x, y] != 0:
                out = out + h[x, y] * (basis.create(x) @ basis.annihilate(y))
    return out.tocsr()


@dataclass
class GaussianState:
    """Quasifree state exp(-sum h a* a) / Z with its target one-particle density matrix."""

    target: np.ndarray
    h: np.ndarray
    rho: np.ndarray
    basis: FockBasis = field(repr=False)


def prepare_quasifree(target, basis: FockBasis, margin: float = 1e-6, check: bool = True) -> GaussianState:
    """Gauge-invariant quasifree state with one-particle density matrix ``target``.

    ``target[y, x] = <a*(x) a(y)>`` must be Hermitian with eigenvalues in
    (margin, 1 - margin).

    Raises:
        ValueError: non-Hermitian or non-interior target, or failed round trip.
    """
    T = np.asarray(target, dtype=complex)
    if T.shape != (basis.modes, basis.modes):
        raise ValueError(f"target must be {basis.modes}x{basis.modes}")
    if np.max(np.abs(T - T.conj().T)) > 1e-12:
        raise ValueError("target is not Hermitian")
    occ, V = np.linalg.eigh(T)
    if occ.min() <= margin or occ.max() >= 1.0 - margin:
        raise ValueError("target occupations must lie strictly inside (0, 1); use slater_state for 0/1")
    # <a*(x) a(y)> = f(h)[y, x] for the form sum h[x, y] a*(x) a(y)
    h = (V * np.log((1.0 - occ) / occ)) @ V.conj().T
    Q = quadratic_form(h, basis).toarray()
    E, U = np.linalg.eigh(0.5 * (Q + Q.conj().T))
    p = np.exp(-(E - E.min()))
    rho = (U * (p / p.sum())) @ U.conj().T
    state = GaussianState(T, h, rho, basis)
    if check:
        err = np.max(np.abs(one_particle_dm(rho, basis) - T))
        if err > 1e-10:
            raise ValueError(f"quasifree round trip failed ({err:.2e})")
    return state


def slater_state(orbitals, basis: FockBasis) -> np.ndarray:
    """Density matrix of the Slater determinant filling the given orbital columns."""
    orbitals = np.atleast_2d(np.asarray(orbitals, dtype=complex))
    psi = np.zeros(basis.dim, dtype=complex)
    psi[0] = 1.0
    for j in range(orbitals.shape[1]):
        b = sum(orbitals[m, j] * basis.create(m) for m in range(basis.modes))
        psi = b @ psi
    norm = np.linalg.norm(psi)
    if norm < 1e-12:
        raise ValueError("orbitals are linearly dependent")
    psi /= norm
    return np.outer(psi, psi.conj())


def product_state(mask: int, basis: FockBasis) -> np.ndarray:
    rho = np.zeros((basis.dim, basis.dim), dtype=complex)
    rho[mask, mask] = 1.0
    return rho


def vacuum(basis: FockBasis) -> np.ndarray:
    return product_state(0, basis)


def filled(basis: FockBasis) -> np.ndarray:
    return product_state(basis.dim - 1, basis)


# --- dynamics and measurements -------------------------------------------


class Propagator:
    """Exact evolution rho -> U_t rho U_t^* through one Hermitian eigendecomposition."""

    def __init__(self, H):
        H = H.toarray() if sp.issparse(H) else np.asarray(H)
        self.E, self.V = np.linalg.eigh(0.5 * (H + H.conj().T))

    def unitary(self, t: float) -> np.ndarray:
        return (self.V * np.exp(-1j * self.E * t)) @ self.V.conj().T

    def evolve(self, rho, t: float) -> np.ndarray:
        if t == 0:
            return np.array(rho, copy=True)
        r = self.V.conj().T @ rho @ self.V
        ph = np.exp(-1j * self.E * t)
        r = ph[:, None] * r * ph.conj()[None, :]
        return self.V @ r @ self.V.conj().T


def evolve(rho, H, t: float) -> np.ndarray:
    return Propagator(H).evolve(rho, t)


def expectation(rho, op) -> complex:
    """Tr(rho op) for a dense rho and a sparse or dense operator."""
    if sp.issparse(op):
        op = op.tocoo()
        return complex(np.sum(op.data * rho[op.col, op.row]))
    return complex(np.trace(rho @ op))


def one_particle_dm(rho, basis: FockBasis) -> np.ndarray:
    """rho1[y, x] = <a*(x) a(y)>."""
    M = basis.modes
    out = np.zeros((M, M), dtype=complex)
    for x in range(M):
        cx = basis.create(x)
        for y in range(M):
            out[y, x] = expectation(rho, cx @ basis.annihilate(y))
    return out


def two_point_function(rho, basis: FockBasis, tol: float = 1e-10) -> np.ndarray:
    """F(z)[s1, s2] = <a*(x + z, s1) a(x, s2)>, checked to be independent of x.

    Raises:
        TranslationInvarianceError: if the dependence on x exceeds ``tol``.
    """
    rho1 = one_particle_dm(rho, basis)
    L, ns = basis.L, basis.nspin
    F = np.zeros((L, ns, ns), dtype=complex)
    worst = 0.0
    for z in range(L):
        for s1 in range(ns):
            for s2 in range(ns):
                vals = np.array([rho1[basis.mode(x, s2), basis.mode(x + z, s1)] for x in range(L)])
                F[z, s1, s2] = vals.mean()
                worst = max(worst, float(np.max(np.abs(vals - vals[0]))))
    if worst > tol:
        raise TranslationInvarianceError(f"state is not translation invariant (violation {worst:.2e})", worst)
    return F


def measure_wigner(rho, basis: FockBasis, tol: float = 1e-10) -> np.ndarray:
    """W(k) = sum_z e^{2 pi i k z} F(z) on the L-point grid.

    Returns shape (L,) for spinless bases and (L, 2, 2) with spin.
    """
    F = two_point_function(rho, basis, tol)
    # grid point j has k = j / L modulo 1, which is all the phase needs
    k = np.arange(basis.L) / basis.L
    phase = np.exp(2j * np.pi * np.outer(k, np.arange(basis.L)))
    W = np.einsum("kz,zab->kab", phase, F)
    return W[:, 0, 0].real.copy() if not basis.spin else W


def position_dm_from_wigner(W, basis: FockBasis) -> np.ndarray:
    """One-particle density matrix rho1[y, x] = <a*(x) a(y)> of a translation-invariant W."""
    L = basis.L
    W = np.asarray(W)
    Wm = W.reshape(L, 1, 1) if not basis.spin else W
    k = np.arange(L) / L
    F = np.einsum("zk,kab->zab", np.exp(-2j * np.pi * np.outer(np.arange(L), k)), Wm) / L
    out = np.zeros((basis.modes, basis.modes), dtype=complex)
    for x in range(L):
        for y in range(L):
            for s1 in range(basis.nspin):
                for s2 in range(basis.nspin):
                    out[basis.mode(y, s2), basis.mode(x, s1)] = F[(x - y) % L, s1, s2]
    return out


def truncated_four_point(rho, ops, basis: FockBasis) -> complex:
    """Fourth-order fermionic cumulant of an even state.

    ``ops`` lists four (mode, kind) pairs, kind "create" or "annihilate".
    Returns rho[1234] - rho[12] rho[34] + rho[13] rho[24] - rho[14] rho[23].
    """
    A = [car_operator(m, kind, basis) for m, kind in ops]

    def ev(*idx):
        op = A[idx[0]]
        for i in idx[1:]:
            op = op @ A[i]
        return expectation(rho, op)

    return (ev(0, 1, 2, 3) - ev(0, 1) * ev(2, 3) + ev(0, 2) * ev(1, 3) - ev(0, 3) * ev(1, 2))


# --- kinetic consistency ----------------------------------------------------


def _loglog_slope(x, y) -> float:
    return float(np.polyfit(np.log(x), np.log(y), 1)[0])


def kinetic_consistency_check(W0, disp: Dispersion, lambdas=(0.05, 0.1, 0.2), t_probe: float = 1.0,
                              vhat=None, rel_step: float = 1e-4) -> dict:
    """Compare the exact short-time dynamics with the kinetic lambda structure.

    Prepares the quasifree state of ``W0``, evolves it exactly under H0 + lam V
    and differentiates the measured W(t) at ``t_probe`` by a symmetric
    difference with step ``rel_step / lam``.  The derivative at t = 0 itself is
    unsuitable: for a quasifree start it equals the first-order term exactly,
    so the second-order part only appears at t > 0.

    Spinless (``W0`` of shape (L,), ``vhat`` required): reports the slope of
    log ||dW/dt|| against log lam.  Hubbard (``W0`` of shape (L, 2, 2)):
    reports the slope of ||dW/dt + i lam [Sigma, W0]|| and of ||dW/dt||.
    """
    W0 = np.asarray(W0)
    grid = disp.grid
    spin = W0.ndim == 3
    basis = FockBasis(grid.n, spin)
    state = prepare_quasifree(position_dm_from_wigner(W0, basis), basis)
    alpha = hopping_from_dispersion(disp)
    V = None
    if not spin:
        if vhat is None:
            raise ValueError("spinless check needs a pair potential")
        V = potential_from_fourier(vhat.values, grid)
    sigma = W0.mean(axis=0) if spin else None
    rows = []
    for lam in lambdas:
        prop = Propagator(build_hamiltonian(alpha, lam, basis, V))
        h = rel_step / lam
        Wp = measure_wigner(prop.evolve(state.rho, t_probe + h), basis)
        Wm = measure_wigner(prop.evolve(state.rho, t_probe - h), basis)
        dW = (Wp - Wm) / (2 * h)
        row = {"lambda": lam, "dWdt_norm": float(np.max(np.abs(dW)))}
        if spin:
            comm = -1j * lam * (sigma[None] @ W0 - W0 @ sigma[None])
            row["first_order_norm"] = float(np.max(np.abs(comm)))
            row["residual_norm"] = float(np.max(np.abs(dW - comm)))
        rows.append(row)
    lams = np.array(lambdas, dtype=float)
    report = {"model": "hubbard" if spin else "spinless", "L": grid.n, "t_probe": t_probe, "rows": rows,
              "slope_dWdt": _loglog_slope(lams, [r["dWdt_norm"] for r in rows])}
    if spin:
        report["slope_residual"] = _loglog_slope(lams, [r["residual_norm"] for r in rows])
    return report

"""Discrete momentum torus, dispersion relations, pair potentials and mollifiers.

Grid points are stored as integer index vectors ``j`` with ``0 <= j_nu < n``;
the wavenumber of a point is ``m / n`` with ``m = j`` for ``j <= n/2`` and
``m = j - n`` otherwise, which puts every point in ``(-1/2, 1/2]^d``.
Wavenumber addition is integer addition modulo ``n`` per axis, so it is exact.
Points are flattened in C order (last axis fastest).
"""

from __future__ import annotations

from dataclasses import dataclass, field
from functools import cached_property
from typing import Callable

import numpy as np

from .errors import GridError, PotentialError

SQRT_2PI = np.sqrt(2.0 * np.pi)


def wrap(k):
    """Map real wavenumbers into (-1/2, 1/2] modulo 1."""
    k = np.asarray(k, dtype=float)
    return k - np.ceil(k - 0.5)


@dataclass(frozen=True, eq=False)
class KGrid:
    """Uniform grid on the d-torus with ``n`` points per axis."""

    d: int
    n: int

    def __post_init__(self):
        if self.d not in (1, 2, 3):
            raise GridError(f"dimension must be 1, 2 or 3, got {self.d}")
        if self.n < 4 or self.n % 2:
            raise GridError(f"points per axis must be even and >= 4, got {self.n}")

    @property
    def size(self) -> int:
        return self.n**self.d

    @property
    def cell_weight(self) -> float:
        return 1.0 / self.size

    @cached_property
    def indices(self) -> np.ndarray:
        """Integer coordinates ``j`` of every point, shape (size, d)."""
        axes = np.meshgrid(*([np.arange(self.n)] * self.d), indexing="ij")
        return np.stack([a.ravel() for a in axes], axis=1)

    @cached_property
    def signed_indices(self) -> np.ndarray:
        j = self.indices
        return np.where(j <= self.n // 2, j, j - self.n)

    @cached_property
    def points(self) -> np.ndarray:
        """Wavenumbers in (-1/2, 1/2]^d, shape (size, d)."""
        return self.signed_indices / self.n

    @cached_property
    def _radix(self) -> np.ndarray:
        return self.n ** np.arange(self.d - 1, -1, -1)

    def flat(self, j) -> np.ndarray:
        """Flat index of integer coordinates (taken modulo n)."""
        j = np.asarray(j) % self.n
        return j @ self._radix

    def locate(self, k) -> np.ndarray:
        """Flat index of the grid point at wavenumber ``k`` (must lie on the grid)."""
        k = np.atleast_2d(np.asarray(k, dtype=float))
        m = np.rint(k * self.n)
        if np.max(np.abs(m - k * self.n), initial=0.0) > 1e-9:
            raise GridError("wavenumber is not a grid point")
        return self.flat(m.astype(np.int64))

    @cached_property
    def neg(self) -> np.ndarray:
        """Flat index of -k for every k."""
        return self.flat(-self.indices)

    @cached_property
    def add_table(self) -> np.ndarray:
        """``add_table[a, b]`` is the flat index of k_a + k_b."""
        j = self.indices
        return self.flat(j[:, None, :] + j[None, :, :]).astype(np.int64)

    @cached_property
    def sub_table(self) -> np.ndarray:
        """``sub_table[a, b]`` is the flat index of k_a - k_b."""
        j = self.indices
        return self.flat(j[:, None, :] - j[None, :, :]).astype(np.int64)

    def wrap_add(self, a: int, b: int) -> int:
        return int(self.add_table[a, b])

    def sum_weights(self) -> float:
        return float(np.sum(np.full(self.size, self.cell_weight)))


def build_grid(d: int, n: int) -> KGrid:
    return KGrid(d, n)


# --- dispersion relations -------------------------------------------------


def _nn_values(k, c):
    k = np.atleast_2d(k)
    return c - np.sum(np.cos(2.0 * np.pi * k), axis=-1)


def _nnn_values(k, c, eta):
    k = np.atleast_2d(k)
    return c - np.sum(np.cos(2.0 * np.pi * k), axis=-1) - eta * np.sum(np.cos(4.0 * np.pi * k), axis=-1)


@dataclass(frozen=True, eq=False)
class Dispersion:
    """Single-particle energy on the torus, cached on a grid.

    ``kind`` is ``"nearest_neighbour"`` (parameters c) or
    ``"nearest_plus_nnn"`` (parameters c, eta).
    """

    grid: KGrid
    kind: str = "nearest_neighbour"
    c: float = 0.0
    eta: float = 0.0

    def __post_init__(self):
        if self.kind not in ("nearest_neighbour", "nearest_plus_nnn"):
            raise ValueError(f"unknown dispersion kind {self.kind!r}")

    def __call__(self, k) -> np.ndarray:
        k = wrap(np.asarray(k, dtype=float).reshape(-1, self.grid.d))
        if self.kind == "nearest_neighbour":
            return _nn_values(k, self.c)
        return _nnn_values(k, self.c, self.eta)

    @cached_property
    def values(self) -> np.ndarray:
        v = self(self.grid.points)
        v.setflags(write=False)
        return v

    def describe(self) -> dict:
        out = {"kind": self.kind, "c": self.c}
        if self.kind == "nearest_plus_nnn":
            out["eta"] = self.eta
        return out


def nearest_neighbour(grid: KGrid, c: float = 0.0) -> Dispersion:
    return Dispersion(grid, "nearest_neighbour", float(c))


def nearest_plus_nnn(grid: KGrid, c: float = 0.0, eta: float = 0.3) -> Dispersion:
    return Dispersion(grid, "nearest_plus_nnn", float(c), float(eta))


def eval_dispersion(disp: Dispersion, k) -> float | np.ndarray:
    """Evaluate ``disp`` at a single wavenumber (scalar result) or an array of them."""
    k = np.asarray(k, dtype=float)
    out = disp(k)
    if k.ndim <= 1 and out.size == 1:
        return float(out[0])
    return out


# --- pair potentials ------------------------------------------------------


@dataclass(frozen=True, eq=False)
class PairPotential:
    """Real, symmetric Fourier transform of the pair interaction, cached on a grid."""

    grid: KGrid
    func: Callable[[np.ndarray], np.ndarray]
    name: str = "custom"

    @cached_property
    def values(self) -> np.ndarray:
        v = np.asarray(self.func(self.grid.points), dtype=float).reshape(self.grid.size)
        v.setflags(write=False)
        return v

    def __post_init__(self):
        v = self.values
        if not np.all(np.isfinite(v)):
            raise PotentialError("pair potential has non-finite values")
        if np.max(np.abs(v - v[self.grid.neg])) > 1e-12:
            raise PotentialError("pair potential must satisfy vhat(-k) = vhat(k)")
        if np.ptp(v) <= 1e-14:
            raise PotentialError("pair potential cannot be constant (collisions would vanish)")


def cosine_potential(grid: KGrid) -> PairPotential:
    """vhat(k) = sum_nu cos(2 pi k_nu), the default non-constant potential."""
    return PairPotential(grid, lambda k: np.sum(np.cos(2.0 * np.pi * k), axis=-1), "cosine")


# --- mollified distributions ---------------------------------------------


def mollified_delta(x, eps: float):
    """Gaussian approximation of the Dirac delta with standard deviation ``eps``."""
    if eps <= 0:
        raise ValueError("eps must be positive")
    x = np.asarray(x, dtype=float)
    out = np.exp(-0.5 * (x / eps) ** 2) / (eps * SQRT_2PI)
    return out if out.ndim else float(out)


def mollified_delta_lorentzian(x, eps: float):
    """Lorentzian approximation eps / (pi (x^2 + eps^2)) of the Dirac delta.

    It is the companion of :func:`mollified_pv`: both come from the same
    complex kernel 1 / (x - i eps), so a smooth function f has
    sum f * delta_eps - f(0) of order eps (not eps^2 as for the Gaussian).
    """
    if eps <= 0:
        raise ValueError("eps must be positive")
    x = np.asarray(x, dtype=float)
    out = eps / (np.pi * (x * x + eps * eps))
    return out if out.ndim else float(out)


def mollified_pv(x, eps: float):
    """Poisson-kernel regularisation x / (x^2 + eps^2) of the principal value 1/x."""
    if eps <= 0:
        raise ValueError("eps must be positive")
    x = np.asarray(x, dtype=float)
    out = x / (x * x + eps * eps)
    return out if out.ndim else float(out)


def dispersion_spacing(disp: Dispersion) -> float:
    """Median gap between consecutive distinct dispersion values on the grid."""
    vals = np.unique(np.round(disp.values, 12))
    if vals.size < 2:
        return 0.0
    return float(np.median(np.diff(vals)))


def default_eps(disp: Dispersion) -> float:
    """Continuum resolution max(2 h, 0.05), h the median dispersion spacing."""
    return max(2.0 * dispersion_spacing(disp), 0.05)


def resonance_gap(disp: Dispersion, tol: float = 1e-12) -> float:
    """Smallest nonzero |omega0 + omega1 - omega2 - omega3| over momentum-conserving quadruples."""
    grid = disp.grid
    om = disp.values
    add, sub = grid.add_table, grid.sub_table
    best = np.inf
    for k0 in range(grid.size):
        k3 = add[k0][sub]
        dw = np.abs(om[k0] + om[:, None] - om[None, :] - om[k3])
        off = dw[dw > tol]
        if off.size:
            best = min(best, float(off.min()))
    return best


def resonant_eps(disp: Dispersion, fraction: float = 0.125) -> float:
    """Width that resolves the exact resonances of the finite lattice.

    With a Gaussian kernel at ``fraction`` of :func:`resonance_gap`, the
    off-shell weight is below exp(-1 / (2 fraction^2)) relative to the on-shell
    weight, so the collision sum conserves energy to rounding error.
    """
    return fraction * resonance_gap(disp)


@dataclass(frozen=True)
class Widths:
    """Regularisation widths for the energy delta and the principal value."""

    delta: float
    pv: float = field(default=None)

    def __post_init__(self):
        if self.pv is None:
            object.__setattr__(self, "pv", self.delta)
        if self.delta <= 0 or self.pv <= 0:
            raise ValueError("widths must be positive")


def resolve_widths(disp: Dispersion, eps=None, eps_pv=None) -> Widths:
    if eps is None:
        eps = default_eps(disp)
    return Widths(float(eps), None if eps_pv is None else float(eps_pv))


REGIMES = ("continuum", "lattice")


@dataclass(frozen=True)
class Regularization:
    """Energy-delta kernel and widths used by the collision sums.

    ``continuum`` pairs the Lorentzian kernel with :func:`default_eps`; it
    approximates the infinite-lattice operator, and its error at a
    Fermi-Dirac state is first order in eps.  ``lattice`` pairs the Gaussian
    kernel with :func:`resonant_eps`; it keeps only the exact resonances of the
    finite grid, so energy is conserved to rounding error.
    """

    regime: str
    kernel: str
    eps: float
    eps_pv: float

    def describe(self) -> dict:
        return {"regime": self.regime, "kernel": self.kernel, "eps": self.eps, "eps_pv": self.eps_pv}


def regularization(disp: Dispersion, regime: str = "continuum", eps=None, eps_pv=None,
                   kernel: str | None = None) -> Regularization:
    """Resolve a regime name plus optional overrides into a :class:`Regularization`."""
    if regime not in REGIMES:
        raise ValueError(f"unknown regime {regime!r}; expected one of {REGIMES}")
    if kernel is None:
        kernel = "lorentzian" if regime == "continuum" else "gaussian"
    if eps is None:
        eps = default_eps(disp) if regime == "continuum" else resonant_eps(disp)
    w = Widths(float(eps), None if eps_pv is None else float(eps_pv))
    return Regularization(regime, kernel, w.delta, w.pv)


def _kernel_values(x, reg: Regularization):
    if reg.kernel == "gaussian":
        return mollified_delta(x, reg.eps)
    return mollified_delta_lorentzian(x, reg.eps)


def collision_rate_bound(disp: Dispersion, reg: Regularization, lam: float = 1.0,
                         vhat: PairPotential | None = None) -> float:
    """Upper bound on the loss rate of a single cell under the collision flow.

    max_k0 pi lam^2 w^2 sum K delta over non-trivial quadruples (k2 not in
    {k0, k1}, whose bracket vanishes identically).  K is the squared potential
    difference when ``vhat`` is given and 1 for the onsite interaction.
    """
    grid = disp.grid
    om = disp.values
    idx = np.arange(grid.size)
    best = 0.0
    for k0 in range(grid.size):
        k3 = grid.add_table[k0][grid.sub_table]
        dl = _kernel_values(om[k0] + om[:, None] - om[None, :] - om[k3], reg)
        dl[:, k0] = 0.0
        dl[idx, idx] = 0.0
        if vhat is not None:
            v = vhat.values
            dl = dl * (v[grid.sub_table] - v[grid.sub_table[:, k0]][None, :]) ** 2
        best = max(best, float(dl.sum()))
    return np.pi * lam**2 * grid.cell_weight**2 * best


def default_dt(disp: Dispersion, reg: Regularization, lam: float = 1.0,
               vhat: PairPotential | None = None) -> float:
    """min(0.1 / lam^2, 2 / rate bound): kinetic time scale, capped for stability."""
    if lam == 0:
        return 0.1
    nu = collision_rate_bound(disp, reg, lam, vhat)
    base = 0.1 / lam**2
    return base if nu <= 0 else min(base, 2.0 / nu)

"""Explicit Runge-Kutta time stepping with admissibility control.

The state is any numpy array (scalar field or stack of 2x2 matrices).  A step
whose result leaves the admissible set is rejected and retried at half the
step size, at most ``MAX_HALVINGS`` times.  Steps are never clamped or
projected, since that would break the conservation laws silently.
"""

from __future__ import annotations

from dataclasses import dataclass, field
from typing import Callable

import numpy as np

from .errors import AdmissibilityError, StepFailure

MAX_HALVINGS = 20
ADMISSIBILITY_TOL = 1e-9


def scalar_violation(W) -> float:
    """Amount by which a scalar field leaves [0, 1] (0 when admissible)."""
    return float(max(0.0, -np.min(W), np.max(W) - 1.0))


def matrix_eigenvalues(W) -> np.ndarray:
    """Closed-form eigenvalues of a stack of Hermitian 2x2 matrices, shape (N, 2) ascending."""
    a = W[..., 0, 0].real
    d = W[..., 1, 1].real
    b = W[..., 0, 1]
    half_tr = 0.5 * (a + d)
    rad = np.sqrt(0.25 * (a - d) ** 2 + np.abs(b) ** 2)
    return np.stack([half_tr - rad, half_tr + rad], axis=-1)


def matrix_violation(W) -> float:
    ev = matrix_eigenvalues(W)
    return float(max(0.0, -np.min(ev), np.max(ev) - 1.0))


def rk4(W, rhs: Callable, dt: float):
    k1 = rhs(W)
    k2 = rhs(W + 0.5 * dt * k1)
    k3 = rhs(W + 0.5 * dt * k2)
    k4 = rhs(W + dt * k3)
    return W + (dt / 6.0) * (k1 + 2.0 * k2 + 2.0 * k3 + k4)


def _stage_guard(rhs):
    # intermediate RK stages may leave the admissible set slightly; evaluators
    # reject that, which we treat like a rejected step
    def guarded(W):
        try:
            return rhs(W)
        except AdmissibilityError:
            raise _Reject() from None

    return guarded


class _Reject(Exception):
    pass


def step(W, rhs: Callable, dt: float, violation: Callable = scalar_violation,
         tol: float = ADMISSIBILITY_TOL, t: float | None = None):
    """One admissible RK4 step.

    Args:
        W: current state.
        rhs: callable returning dW/dt.
        dt: requested step.
        violation: measure of how far a state is outside the admissible set.
        tol: accepted violation.
        t: current time, reported on failure.

    Returns:
        (new_state, dt_taken).

    Raises:
        StepFailure: still inadmissible after ``MAX_HALVINGS`` halvings.
    """
    if dt <= 0:
        raise ValueError("dt must be positive")
    guarded = _stage_guard(rhs)
    h = dt
    for _ in range(MAX_HALVINGS + 1):
        try:
            new = rk4(W, guarded, h)
        except _Reject:
            new = None
        if new is not None and np.all(np.isfinite(new)) and violation(new) <= tol:
            return new, h
        h *= 0.5
    raise StepFailure(f"step rejected after {MAX_HALVINGS} halvings (dt={dt:g})", t)


@dataclass
class Trajectory:
    """Record of an integration run."""

    times: list = field(default_factory=list)
    states: list = field(default_factory=list)
    diagnostics: list = field(default_factory=list)
    status: str = "running"
    steps: int = 0
    rejections: int = 0

    def column(self, name: str) -> np.ndarray:
        return np.array([d[name] for d in self.diagnostics])


def run(W0, rhs: Callable, t_end: float, dt: float, record_every: float | None = None,
        diagnostics: Callable | None = None, stationary_tol: float = 0.0,
        violation: Callable = scalar_violation, tol: float = ADMISSIBILITY_TOL,
        keep_states: bool = True, on_record: Callable | None = None) -> Trajectory:
    """Integrate from t = 0 to ``t_end`` with nominal step ``dt``.

    Records the state and ``diagnostics(W, dWdt)`` at multiples of
    ``record_every`` (default: every step) and at the end.  The run stops early
    with status "converged" once the sup norm of the right-hand side at a
    record point is at most ``stationary_tol``.
    """
    if violation(W0) > tol:
        raise StepFailure("initial state is not admissible", 0.0)
    record_every = dt if record_every is None else record_every
    traj = Trajectory()
    W = np.array(W0, copy=True)
    t = 0.0
    next_rec = 0.0
    n_rec = 0
    eps_t = 1e-12 * max(1.0, t_end)

    def record(W, t):
        F = rhs(W)
        traj.times.append(t)
        if keep_states:
            traj.states.append(np.array(W, copy=True))
        diag = {"time": t, "rhs_sup": float(np.max(np.abs(F)))}
        if diagnostics is not None:
            diag.update(diagnostics(W, F))
        traj.diagnostics.append(diag)
        if on_record is not None:
            on_record(diag)
        return diag["rhs_sup"]

    while True:
        at_end = t >= t_end - eps_t
        if at_end or t >= next_rec - eps_t:
            sup = record(W, t)
            # multiples of record_every, not a running sum, to avoid drift
            while next_rec <= t + eps_t:
                n_rec += 1
                next_rec = n_rec * record_every
            if sup <= stationary_tol:
                traj.status = "converged"
                return traj
            if at_end:
                break
        h = min(dt, next_rec - t, t_end - t)
        try:
            W, taken = step(W, rhs, h, violation, tol, t)
        except StepFailure as exc:
            traj.status = "failed"
            exc.trajectory = traj
            raise
        traj.steps += 1
        if taken < h:
            traj.rejections += 1
        t += taken
        if abs(t - t_end) <= eps_t:
            t = t_end
        elif abs(t - next_rec) <= eps_t:
            t = next_rec
    traj.status = "completed"
    return traj

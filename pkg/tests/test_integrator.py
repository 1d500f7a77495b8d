import numpy as np
import pytest

from fermikin import integrator, lattice, spinless
from fermikin.errors import StepFailure


def test_step_zero_rhs_unchanged():
    W = np.array([0.1, 0.5, 0.9])
    new, h = integrator.step(W, lambda x: np.zeros_like(x), 0.1)
    assert np.array_equal(new, W) and h == 0.1


def test_step_linear_decay_accuracy():
    W = np.array([0.8])
    new, _ = integrator.step(W, lambda x: -x, 0.1)
    assert abs(new[0] / 0.8 - np.exp(-0.1)) / np.exp(-0.1) <= 1e-7


def test_rk4_fourth_order():
    errs = []
    for dt in (0.2, 0.1):
        W = np.array([0.7])
        for _ in range(int(round(1.0 / dt))):
            W = integrator.rk4(W, lambda x: -x, dt)
        errs.append(abs(W[0] - 0.7 * np.exp(-1.0)))
    assert errs[0] / errs[1] == pytest.approx(16, rel=0.1)


def test_step_halves_near_the_upper_edge():
    W = np.array([0.5, 1.0 - 1e-12])
    push = lambda x: np.array([0.0, 1.0])
    new, h = integrator.step(W, push, 1e-3)
    assert h < 1e-3 and integrator.scalar_violation(new) <= 1e-9
    assert h == 1e-3 / 2**20


def test_step_fails_after_max_halvings():
    W = np.array([0.5, 1.0 - 1e-12])
    with pytest.raises(StepFailure) as info:
        integrator.step(W, lambda x: np.array([0.0, 1.0]), 0.1, t=3.5)
    assert info.value.time == 3.5


def test_step_rejects_nonpositive_dt():
    with pytest.raises(ValueError):
        integrator.step(np.zeros(2), lambda x: x, 0.0)


def test_matrix_violation():
    W = np.array([[[0.5, 0.6], [0.6, 0.5]]])
    assert integrator.matrix_violation(W) == pytest.approx(0.1)
    assert np.allclose(integrator.matrix_eigenvalues(W), [[-0.1, 1.1]])


def test_run_stops_when_stationary():
    W0 = np.full(4, 0.3)
    traj = integrator.run(W0, lambda x: np.zeros_like(x), 5.0, 0.1, 1.0)
    assert traj.status == "converged" and traj.times == [0.0] and traj.steps == 0


def test_run_negative_tolerance_runs_to_end():
    W0 = np.full(4, 0.3)
    traj = integrator.run(W0, lambda x: np.zeros_like(x), 1.0, 0.1, 0.25, stationary_tol=-1.0)
    assert traj.status == "completed"
    assert traj.times == [0.0, 0.25, 0.5, 0.75, 1.0]
    assert all(np.array_equal(s, W0) for s in traj.states)


def test_run_record_times_not_dividing():
    traj = integrator.run(np.array([0.9]), lambda x: -x, 1.0, 0.1, 0.3, stationary_tol=-1)
    assert traj.times == pytest.approx([0.0, 0.3, 0.6, 0.9, 1.0], abs=1e-12)
    assert np.all(np.diff(traj.times) > 0)
    assert traj.states[-1][0] == pytest.approx(0.9 * np.exp(-1.0), rel=1e-6)


def test_run_diagnostics_and_failure_time():
    calls = []
    traj = integrator.run(np.array([0.5]), lambda x: -x, 0.5, 0.1, diagnostics=lambda W, F: {"w": float(W[0])},
                          on_record=calls.append, stationary_tol=-1)
    assert len(calls) == len(traj.times) == 6
    assert traj.column("w")[0] == 0.5
    with pytest.raises(StepFailure) as info:
        integrator.run(np.array([0.5]), lambda x: np.ones_like(x) * 1e3, 10.0, 0.1, stationary_tol=-1)
    assert info.value.time is not None and info.value.trajectory.status == "failed"


def test_run_rejects_inadmissible_start():
    with pytest.raises(StepFailure):
        integrator.run(np.array([1.5]), lambda x: x, 1.0, 0.1)


def test_zero_coupling_is_exactly_static():
    g = lattice.build_grid(1, 16)
    disp, v = lattice.nearest_neighbour(g), lattice.cosine_potential(g)
    W0 = np.random.default_rng(0).uniform(0.1, 0.9, g.size)
    traj = integrator.run(W0, lambda W: spinless.collision_bn(W, disp, v, 0.0), 1.0, 0.1, stationary_tol=-1)
    assert np.array_equal(traj.states[-1], W0)


def test_run_deterministic():
    g = lattice.build_grid(1, 16)
    disp, v = lattice.nearest_neighbour(g), lattice.cosine_potential(g)
    W0 = np.random.default_rng(1).uniform(0.1, 0.9, g.size)
    rhs = lambda W: spinless.collision_bn(W, disp, v, 1.0, 0.2)
    a = integrator.run(W0, rhs, 1.0, 0.05, 0.25, stationary_tol=-1)
    b = integrator.run(W0, rhs, 1.0, 0.05, 0.25, stationary_tol=-1)
    assert all(np.array_equal(x, y) for x, y in zip(a.states, b.states))


def test_scalar_h_theorem_short_run():
    g = lattice.build_grid(1, 16)
    disp, v = lattice.nearest_neighbour(g), lattice.cosine_potential(g)
    reg = lattice.regularization(disp, "lattice")
    W0 = np.random.default_rng(2).uniform(0.05, 0.95, g.size)
    rhs = lambda W: spinless.collision_bn(W, disp, v, 1.0, reg.eps, reg.kernel)
    dt = lattice.default_dt(disp, reg, 1.0, v)
    traj = integrator.run(W0, rhs, 3.0, dt, diagnostics=lambda W, F: {"S": spinless.entropy(W)}, stationary_tol=-1)
    assert np.min(np.diff(traj.column("S"))) >= -1e-9

import numpy as np
import pytest

from fermikin import _kernels_py, kernels, lattice

import reference as ref

try:
    from fermikin import _kernels
except ImportError:
    _kernels = None

needs_compiled = pytest.mark.skipif(_kernels is None, reason="compiled extension not built")


def _inputs(seed, d=2, n=6):
    g = lattice.build_grid(d, n)
    disp = lattice.nearest_neighbour(g, 0.2)
    v = lattice.cosine_potential(g)
    rng = np.random.default_rng(seed)
    W = rng.uniform(0.02, 0.98, g.size)
    M = ref.random_matrix_field(rng, g.size, 0.02, 0.98)
    return g, disp, v, W, M


@needs_compiled
@pytest.mark.parametrize("kind", [0, 1])
@pytest.mark.parametrize("threads", [1, 2])
def test_compiled_matches_python(kind, threads):
    g, disp, v, W, M = _inputs(kind + 10 * threads)
    args = (disp.values, v.values, g.add_table, g.sub_table, 0.15, kind, threads)
    a = _kernels.scalar_collision(W, *args)
    b = _kernels_py.scalar_collision(W, *args)
    assert np.max(np.abs(a - b)) <= 1e-13 * max(1.0, np.max(np.abs(b)))
    a = _kernels.scalar_entropy_production(W, *args)
    b = _kernels_py.scalar_entropy_production(W, *args)
    assert abs(a - b) <= 1e-12 * abs(b)
    hargs = (disp.values, g.add_table, g.sub_table, 0.15, 0.2, kind, True, threads)
    for x, y in zip(_kernels.hubbard_sums(M, *hargs), _kernels_py.hubbard_sums(M, *hargs)):
        assert np.max(np.abs(x - y)) <= 1e-12 * max(1.0, np.max(np.abs(y)))
    ev, U = np.linalg.eigh(M)
    eargs = (np.ascontiguousarray(ev), np.ascontiguousarray(U), disp.values, g.add_table, g.sub_table, 0.15, kind,
             threads)
    a = _kernels.hubbard_entropy_production(*eargs)
    b = _kernels_py.hubbard_entropy_production(*eargs)
    assert abs(a - b) <= 1e-12 * abs(b)


@needs_compiled
def test_runtime_switch_gives_same_operator():
    from fermikin import hubbard, spinless

    g, disp, v, W, M = _inputs(3)
    prev = kernels.use("python")
    try:
        c_py = spinless.collision_bn(W, disp, v, 1.0, 0.2)
        h_py = hubbard.rhs_hubbard(M, disp, 1.0, 0.2)
    finally:
        kernels.use(prev)
    kernels.use("compiled")
    try:
        c_c = spinless.collision_bn(W, disp, v, 1.0, 0.2)
        h_c = hubbard.rhs_hubbard(M, disp, 1.0, 0.2)
    finally:
        kernels.use(prev)
    assert np.max(np.abs(c_py - c_c)) <= 1e-13
    assert np.max(np.abs(h_py - h_c)) <= 1e-13


def test_thread_count_env(monkeypatch):
    monkeypatch.setenv("FERMIKIN_THREADS", "1")
    assert kernels.thread_count() == 1
    monkeypatch.setenv("FERMIKIN_THREADS", "100000")
    assert 1 <= kernels.thread_count() <= 100000
    monkeypatch.setenv("FERMIKIN_THREADS", "0")
    assert kernels.thread_count() == 1
    monkeypatch.delenv("FERMIKIN_THREADS")
    assert kernels.thread_count() >= 1


def test_unknown_kernel_and_backend():
    with pytest.raises(ValueError):
        kernels.kind_code("box")
    with pytest.raises(ValueError):
        kernels.use("fortran")


def test_backend_name():
    assert kernels.BACKEND in ("compiled", "python")


@needs_compiled
@pytest.mark.parametrize("kind", [0, 1])
def test_compiled_results_independent_of_thread_count(kind):
    g, disp, v, W, M = _inputs(21 + kind)
    ev, U = np.linalg.eigh(M)
    ev, U = np.ascontiguousarray(ev), np.ascontiguousarray(U)

    def evaluate(threads):
        args = (disp.values, v.values, g.add_table, g.sub_table, 0.15, kind, threads)
        out = [_kernels.scalar_collision(W, *args), np.array(_kernels.scalar_entropy_production(W, *args))]
        out += list(_kernels.hubbard_sums(M, disp.values, g.add_table, g.sub_table, 0.15, 0.2, kind, True, threads))
        out.append(np.array(_kernels.hubbard_entropy_production(ev, U, disp.values, g.add_table, g.sub_table,
                                                                0.15, kind, threads)))
        return out

    base = evaluate(1)
    for threads in (2, 4, 4, 4, 3):
        assert all(np.array_equal(a, b) for a, b in zip(base, evaluate(threads)))

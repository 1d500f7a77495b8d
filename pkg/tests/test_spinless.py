import numpy as np
import pytest

from fermikin import lattice, spinless
from fermikin.errors import AdmissibilityError, BoundaryTargetError, InfeasibleTargetError

import reference as ref


@pytest.fixture
def d1_32():
    g = lattice.build_grid(1, 32)
    return g, lattice.nearest_neighbour(g), lattice.cosine_potential(g)


@pytest.mark.parametrize("a", [0.0, 0.3, 0.5, 1.0])
@pytest.mark.parametrize("kernel", ["gaussian", "lorentzian"])
def test_collision_vanishes_for_constant(a, kernel, d1_32):
    g, disp, v = d1_32
    C = spinless.collision_bn(np.full(g.size, a), disp, v, 1.0, 0.1, kernel)
    assert np.max(np.abs(C)) <= 1e-15


def test_collision_fd_halves_with_eps(d1_32):
    # first-order vanishing at a Fermi-Dirac state (Lorentzian kernel)
    g, disp, v = d1_32
    W = spinless.fermi_dirac(disp, 1.0, 0.0)
    eps = lattice.default_eps(disp)
    a = np.max(np.abs(spinless.collision_bn(W, disp, v, 1.0, eps)))
    b = np.max(np.abs(spinless.collision_bn(W, disp, v, 1.0, eps / 2)))
    assert 0.35 <= b / a <= 0.65


def test_collision_matches_reference_n4():
    g = lattice.build_grid(1, 4)
    disp = lattice.nearest_neighbour(g)
    v = lattice.cosine_potential(g)
    W = np.array([0.1, 0.2, 0.3, 0.4])
    for kernel in ("gaussian", "lorentzian"):
        got = spinless.collision_bn(W, disp, v, 1.0, 0.4, kernel)
        want = ref.scalar_collision(W, ref.omega_nn(4), ref.vhat_cos(4), 1.0, 0.4, kernel)
        assert np.max(np.abs(got - want)) <= 1e-12


def test_collision_rejects_inadmissible(d1_32):
    g, disp, v = d1_32
    W = np.full(g.size, 0.5)
    W[3] = 1.0 + 1e-6
    with pytest.raises(AdmissibilityError):
        spinless.collision_bn(W, disp, v)
    W[3] = 1.0 + 1e-10
    spinless.collision_bn(W, disp, v)
    with pytest.raises(AdmissibilityError):
        spinless.collision_bn(np.full(g.size - 1, 0.5), disp, v)


def test_rhs_is_collision():
    assert spinless.rhs_spinless is spinless.collision_bn


def test_conserved_examples():
    for d in (1, 2):
        g = lattice.build_grid(d, 8)
        disp = lattice.nearest_neighbour(g, float(d))
        n, e = spinless.conserved(np.ones(g.size), disp)
        assert n == pytest.approx(1.0, abs=1e-14) and e == pytest.approx(d, abs=1e-14)
        assert spinless.conserved(np.zeros(g.size), disp) == (0.0, 0.0)
    disp0 = lattice.nearest_neighbour(lattice.build_grid(1, 8), 0.0)
    n, e = spinless.conserved(np.full(8, 0.5), disp0)
    assert n == 0.5 and abs(e) < 1e-15


def test_entropy_examples():
    assert spinless.entropy(np.full(8, 0.5)) == pytest.approx(np.log(2), abs=1e-15)
    assert spinless.entropy(np.zeros(8)) == 0.0
    assert spinless.entropy(np.ones(8)) == 0.0
    assert spinless.entropy([0.0, 1.0, 0.5, 0.5]) == pytest.approx(0.5 * np.log(2), abs=1e-15)


def test_entropy_production_examples(d1_32):
    g, disp, v = d1_32
    assert abs(spinless.entropy_production(np.full(g.size, 0.3), disp, v)) <= 1e-15
    W = spinless.fermi_dirac(disp, 1.0, 0.0)
    eps = lattice.default_eps(disp)
    s1 = spinless.entropy_production(W, disp, v, 1.0, eps)
    s2 = spinless.entropy_production(W, disp, v, 1.0, eps / 2)
    assert 0 <= s2 < s1
    g8 = lattice.build_grid(1, 8)
    W = np.random.default_rng(3).uniform(0.01, 0.99, 8)
    assert spinless.entropy_production(W, lattice.nearest_neighbour(g8), lattice.cosine_potential(g8)) >= -1e-12


def test_entropy_production_matches_reference_n4():
    g = lattice.build_grid(1, 4)
    disp = lattice.nearest_neighbour(g, 0.2)
    v = lattice.cosine_potential(g)
    W = np.array([0.1, 0.2, 0.3, 0.4])
    for kernel in ("gaussian", "lorentzian"):
        got = spinless.entropy_production(W, disp, v, 0.8, 0.3, kernel)
        want = ref.scalar_entropy_production(W, disp.values, v.values, 0.8, 0.3, kernel)
        assert abs(got - want) <= 1e-12


@pytest.mark.parametrize("kernel", ["gaussian", "lorentzian"])
def test_entropy_production_equals_entropy_rate(kernel):
    # dS/dt along the flow; the forward difference error is first order in tau
    g = lattice.build_grid(1, 16)
    disp = lattice.nearest_neighbour(g)
    v = lattice.cosine_potential(g)
    W = np.random.default_rng(7).uniform(0.1, 0.9, g.size)
    C = spinless.collision_bn(W, disp, v, 1.0, 0.2, kernel)
    sigma = spinless.entropy_production(W, disp, v, 1.0, 0.2, kernel)
    errs = [abs((spinless.entropy(W + tau * C) - spinless.entropy(W)) / tau - sigma) for tau in (1e-4, 1e-5)]
    assert sigma > 0
    assert errs[1] < errs[0] and errs[1] / errs[0] == pytest.approx(0.1, abs=0.03)


def test_fermi_dirac_examples():
    g = lattice.build_grid(1, 16)
    disp = lattice.nearest_neighbour(g)
    assert np.all(spinless.fermi_dirac(disp, 0.0, 0.3) == 0.5)
    step = spinless.fermi_dirac(disp, 1e6, 0.0)
    om = disp.values
    assert np.all(step[om < -1e-9] == 1.0) and np.all(step[om > 1e-9] == 0.0)
    assert np.allclose(step[np.abs(om) < 1e-12], 0.5, atol=1e-9)
    assert np.all(np.isfinite(spinless.fermi_dirac(disp, -1e8, 0.1)))


def test_fit_round_trip():
    g = lattice.build_grid(1, 32)
    disp = lattice.nearest_neighbour(g)
    W = spinless.fermi_dirac(disp, 2.0, 0.3)
    beta, mu = spinless.fit_fermi_dirac(spinless.conserved(W, disp), disp)
    assert beta == pytest.approx(2.0, abs=1e-8) and mu == pytest.approx(0.3, abs=1e-8)


def test_fit_half_filling_zero_energy():
    g = lattice.build_grid(1, 32)
    disp = lattice.nearest_neighbour(g)
    beta, mu = spinless.fit_fermi_dirac((0.5, 0.0), disp)
    n, e = spinless.conserved(spinless.fermi_dirac(disp, beta, mu), disp)
    assert abs(n - 0.5) <= 1e-10 and abs(e) <= 1e-10


def test_fit_negative_temperature():
    g = lattice.build_grid(2, 8)
    disp = lattice.nearest_neighbour(g, 0.5)
    W = spinless.fermi_dirac(disp, -1.5, 0.2)
    beta, mu = spinless.fit_fermi_dirac(spinless.conserved(W, disp), disp)
    assert beta == pytest.approx(-1.5, abs=1e-8) and mu == pytest.approx(0.2, abs=1e-8)


def test_fit_errors():
    g = lattice.build_grid(1, 16)
    disp = lattice.nearest_neighbour(g)
    lo, hi = spinless.bathtub_bounds(0.3, disp)
    with pytest.raises(InfeasibleTargetError):
        spinless.fit_fermi_dirac((0.3, lo - 0.01), disp)
    with pytest.raises(InfeasibleTargetError):
        spinless.fit_fermi_dirac((1.2, 0.0), disp)
    with pytest.raises(BoundaryTargetError) as info:
        spinless.fit_fermi_dirac((0.3, lo), disp)
    assert info.value.side == "+inf"
    with pytest.raises(BoundaryTargetError) as info:
        spinless.fit_fermi_dirac((0.3, hi), disp)
    assert info.value.side == "-inf"


def test_bathtub_bounds_bracket_admissible_energies():
    g = lattice.build_grid(1, 16)
    disp = lattice.nearest_neighbour(g)
    rng = np.random.default_rng(2)
    for _ in range(20):
        W = rng.uniform(0, 1, g.size)
        n, e = spinless.conserved(W, disp)
        lo, hi = spinless.bathtub_bounds(n, disp)
        assert lo - 1e-14 <= e <= hi + 1e-14

import cmath
import math

import numpy as np
import pytest

from deltabose import bethe
from deltabose.bethe import BetheState
from deltabose.combinatorics import ClusterComposition
from deltabose.errors import InvalidArgument, NumericalFailure


def test_psi_repulsive_single_particle():
    assert bethe.psi_repulsive([0.7], [1.3], -0.4) == pytest.approx(cmath.exp(1.3j * 0.7))


def test_psi_repulsive_free_is_symmetrized_plane_wave():
    x, q = [-0.2, 0.1, 0.5], [0.3, -1.1, 0.8]
    expect = sum(
        cmath.exp(1j * (q[p[0]] * x[0] + q[p[1]] * x[1] + q[p[2]] * x[2]))
        for p in [(0, 1, 2), (0, 2, 1), (1, 0, 2), (1, 2, 0), (2, 0, 1), (2, 1, 0)]
    ) / 6
    assert bethe.psi_repulsive(x, q, 0.0) == pytest.approx(expect, rel=1e-14)


def test_psi_repulsive_two_particles_by_hand():
    # sigma = id: e^{i(q1 x1 + q2 x2)}; sigma = (21): factor (q1-q2+ik)/(q1-q2-ik), e^{i(q1 x2 + q2 x1)}
    x, q, k = (0.0, 1.0), (1.0, -1.0), -1.0
    ratio = (q[0] - q[1] + 1j * k) / (q[0] - q[1] - 1j * k)
    expect = 0.5 * (cmath.exp(1j * (q[0] * x[0] + q[1] * x[1])) + ratio * cmath.exp(1j * (q[0] * x[1] + q[1] * x[0])))
    assert bethe.psi_repulsive(x, q, k) == pytest.approx(expect, rel=1e-14)


def test_psi_repulsive_rejects_bad_input():
    with pytest.raises(InvalidArgument):
        bethe.psi_repulsive([0.0, 1.0], [1.0], -1.0)
    with pytest.raises(InvalidArgument):
        bethe.psi_repulsive([1.0, 0.0], [1.0, 2.0], -1.0)


def test_coinciding_repulsive_momenta_warn_and_stay_finite():
    with pytest.warns(UserWarning):
        v = bethe.psi_repulsive([0.0, 0.4], [0.5, 0.5], -1.0)
    near = bethe.psi_repulsive([0.0, 0.4], [0.5 + 1e-6, 0.5 - 1e-6], -1.0)
    assert abs(v - near) < 1e-5


def test_energies():
    assert bethe.energy_repulsive([0.0, 0.0]) == 0.0
    assert bethe.energy_repulsive([1.0, 2.0]) == 5.0
    k = 1.3
    assert BetheState(ClusterComposition((2,)), (0.0,), k).energy == pytest.approx(-k * k / 2)
    for n in range(1, 6):
        s = BetheState(ClusterComposition((n,)), (0.0,), k)
        assert s.energy == pytest.approx(-k * k * (n**3 - n) / 12)
    q = (0.3, -0.2, 1.1)
    assert BetheState(ClusterComposition((1, 1, 1)), q, k).energy == pytest.approx(bethe.energy_repulsive(q))


def test_bethe_state_validation():
    with pytest.raises(InvalidArgument):
        BetheState(ClusterComposition((2, 1)), (0.1,), 1.0)


def test_phi_single_cluster_formula():
    n, k, q = 3, 0.8, 0.4 - 0.2j
    x = np.array([-0.5, 0.1, 0.3])
    c = ClusterComposition((n,))
    expect = k ** ((n - 1) / 2) * math.sqrt(math.factorial(n - 1))
    expect *= np.prod([cmath.exp(1j * (q + 1j * k * a) * x[a]) for a in range(n)])
    assert bethe.phi_cluster(x, c, [q], k) == pytest.approx(expect, rel=1e-13)


def test_bound_state_decay():
    c, k = ClusterComposition((2,)), 1.0
    vals = [abs(bethe.psi_attractive([-u / 2, u / 2], BetheState(c, (0.0,), k))) for u in (0.5, 1.0, 2.0)]
    assert vals[1] / vals[0] == pytest.approx(math.exp(-k * 0.25), rel=1e-13)
    assert vals[2] / vals[1] == pytest.approx(math.exp(-k * 0.5), rel=1e-13)


def test_singletons_attractive_vs_repulsive():
    x, q, k = [-0.4, 0.2, 0.9], (0.3, -0.7, 1.2), 0.9
    a = bethe.psi_attractive(x, BetheState(ClusterComposition((1, 1, 1)), q, k))
    r = bethe.psi_repulsive(x, q, k)
    # the attractive eigenfunctions carry sqrt(n!) where the repulsive ones carry 1/n!
    assert a == pytest.approx(math.sqrt(6) * r, rel=1e-14)


def test_phi_singletons_matches_psi_repulsive():
    x, q, k = [-0.4, 0.9], (0.3, -0.7), -0.6
    phi = bethe.phi_cluster(x, ClusterComposition((1, 1)), q, k)
    assert phi == pytest.approx(math.sqrt(2) * bethe.psi_repulsive(x, q, k), rel=1e-14)


@pytest.mark.parametrize("parts", [(2, 1), (1, 2), (1, 1, 1), (3,), (2, 2)])
def test_phi_tilde_conjugation(parts):
    rng = np.random.default_rng(sum(parts) * 7 + len(parts))
    c = ClusterComposition(parts)
    for _ in range(5):
        y = np.sort(rng.uniform(-1, 1, c.n))
        q = rng.normal(size=c.M)
        k = rng.uniform(0.2, 2.0)
        lhs = bethe.phi_tilde(y, c, q, k)
        rhs = np.conj(bethe.phi_cluster(y, c, q - 1j * k * np.array(parts) + 1j * k, k))
        assert abs(lhs - rhs) <= 1e-12 * abs(rhs)


def test_phi_tilde_single_cluster_is_reversal_term():
    c, k, q = ClusterComposition((2,)), 0.7, 0.3
    y = np.array([-0.1, 0.6])
    # S'' has the single element (2, 1); exponent -i w_a y_{sigma^-1(a)}
    w = np.array([q, q + 1j * k])
    expect = k**0.5 * math.sqrt(2 * 1) / math.sqrt(2) * cmath.exp(-1j * (w[0] * y[1] + w[1] * y[0]))
    assert bethe.phi_tilde(y, c, [q], k) == pytest.approx(expect, rel=1e-14)


def test_phi_at_genuine_pole_raises():
    # (1,1): the ratio (xi_1 - xi_2 + ik)/(xi_1 - xi_2 - ik) blows up at q1 - q2 = ik
    with pytest.raises(NumericalFailure):
        bethe.phi_cluster([0.0, 0.5], ClusterComposition((1, 1)), [1j, 0.0], 1.0)


def _laplacian(f, x, h):
    # fourth-order central stencil in each coordinate
    out = 0.0
    for i in range(len(x)):
        e = np.zeros(len(x))
        e[i] = h
        out += (-f(x + 2 * e) + 16 * f(x + e) - 30 * f(x) + 16 * f(x - e) - f(x - 2 * e)) / (12 * h * h)
    return out


@pytest.mark.parametrize("parts,seed", [((2, 1), 0), ((1, 2), 1), ((1, 1, 1), 2), ((3,), 3), ((1, 1), 4), ((2,), 5)])
def test_eigenfunction_property(parts, seed):
    rng = np.random.default_rng(seed)
    c = ClusterComposition(parts)
    k = 1.0
    state = BetheState(c, tuple(rng.uniform(-1, 1, c.M)), k)
    x = np.array([-0.9, -0.1, 0.7][: c.n])
    f = lambda z: bethe.psi_attractive(z, state)
    hpsi = -_laplacian(f, x, 1e-4)
    assert abs(hpsi / f(x) - state.energy) <= 1e-5 * max(1.0, abs(state.energy))


def test_eigenvalue_21_tight():
    # error measured against the energy scale max(|E|, kappa^2): at step 1e-4 the
    # stencil's rounding floor is ~1e-7 kappa^2, whatever E itself is
    rng = np.random.default_rng(0)
    for _ in range(5):
        state = BetheState(ClusterComposition((2, 1)), tuple(rng.uniform(-1, 1, 2)), 1.0)
        x = np.sort(rng.uniform(-1, 1, 3))
        f = lambda z: bethe.psi_attractive(z, state)
        assert abs(-_laplacian(f, x, 1e-4) / f(x) - state.energy) <= 1e-6 * max(abs(state.energy), 1.0)


def test_boundary_condition():
    # (d/dx_{j+1} - d/dx_j) psi = -kappa psi at x_j = x_{j+1}, by one-sided differences
    rng = np.random.default_rng(11)
    c, k = ClusterComposition((2, 1)), 0.8
    state = BetheState(c, tuple(rng.uniform(-1, 1, 2)), k)
    x = np.array([-0.3, 0.2, 0.2])
    h = 1e-5
    f = lambda z: bethe.psi_attractive(z, state)
    e2, e3 = np.array([0, 1.0, 0]), np.array([0, 0, 1.0])
    d3 = (-3 * f(x) + 4 * f(x + h * e3) - f(x + 2 * h * e3)) / (2 * h)
    d2 = (3 * f(x) - 4 * f(x - h * e2) + f(x - 2 * h * e2)) / (2 * h)
    assert abs((d3 - d2) + k * f(x)) <= 1e-4 * abs(f(x))

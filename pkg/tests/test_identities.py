import numpy as np
import pytest

from deltabose import identities
from deltabose.combinatorics import ClusterComposition
from deltabose.errors import InvalidArgument
from deltabose.identities import FINITE, POLE, ZERO


def test_vandermonde_zero_offsets():
    xi = np.array([0.3 + 1j, -1.2, 0.7 - 0.4j])
    assert identities.check_vandermonde_lemma(xi, np.zeros((3, 3))) < 1e-15


def test_vandermonde_two_by_hand():
    xi, f = np.array([1.5 + 0.5j, -0.25j]), np.array([[0, 2.0 - 1j], [0, 0]])
    lhs = (xi[0] - xi[1] + f[0, 1]) - (xi[1] - xi[0] + f[0, 1])
    assert lhs == pytest.approx(2 * (xi[0] - xi[1]))
    assert identities.check_vandermonde_lemma(xi, f) < 1e-15


def test_vandermonde_random():
    rng = np.random.default_rng(4)
    for _ in range(100):
        n = 4
        xi = rng.normal(size=n) + 1j * rng.normal(size=n)
        f = rng.normal(size=(n, n)) + 1j * rng.normal(size=(n, n))
        assert identities.check_vandermonde_lemma(xi, f) <= 1e-10


def test_vandermonde_cap():
    with pytest.raises(InvalidArgument):
        identities.check_vandermonde_lemma(np.arange(7.0), np.zeros((7, 7)))


def test_telescoping_singletons_by_hand():
    z, k = 0.7 - 0.2j, 0.9
    lhs, rhs = identities.telescoping_sides(z, 1, 1, k)
    # r = s = 1: (z - ik)/z * (z + ik)/z
    assert lhs == pytest.approx((z - 1j * k) * (z + 1j * k) / z**2, rel=1e-15)
    assert rhs == pytest.approx(lhs, rel=1e-15)


def test_telescoping_random():
    rng = np.random.default_rng(5)
    for _ in range(100):
        nj, nk = rng.integers(1, 5, 2)
        z = complex(rng.normal(), rng.normal())
        assert identities.check_telescoping_identity(z, 0, nj, nk, rng.uniform(0.1, 2)) < 1e-12
    assert identities.check_telescoping_identity(0.3 + 0.1j, -0.2, 2, 1, 1.0) < 1e-13


def test_telescoping_rejects_pole():
    with pytest.raises(InvalidArgument):
        identities.check_telescoping_identity(0.0, 0.0, 1, 1, 1.0)


def test_cauchy_small_cases():
    t, p, d = identities.cauchy_sides([0.4], (3,), 1.0)
    assert t == p == 1.0 and d == pytest.approx(1.0)
    # M=2, n=(1,1), q=(1,-1), kappa=1: det = 1 - (i)(i)/((2+i)(-2+i)) = 1 - 1/5
    t, p, d = identities.cauchy_sides([1.0, -1.0], (1, 1), 1.0)
    assert d == pytest.approx(0.8) and t == pytest.approx(0.8) and p == pytest.approx(0.8)


def test_cauchy_random():
    rng = np.random.default_rng(6)
    for _ in range(100):
        assert identities.check_cauchy_determinant(rng.normal(size=3), (2, 1, 1), rng.uniform(0.1, 2)) < 1e-10


def test_cauchy_validation():
    with pytest.raises(InvalidArgument):
        identities.check_cauchy_determinant([0.0, 1.0], (1,), 1.0)
    with pytest.raises(InvalidArgument):
        identities.check_cauchy_determinant([0.0, 1.0], (1, 1), 0.0)
    with pytest.raises(InvalidArgument):
        identities.check_cauchy_determinant(np.arange(6.0), (1,) * 6, 1.0)
    with pytest.raises(InvalidArgument):
        identities.check_cauchy_determinant([0.5, 0.5], (2, 2), 1.0)


def test_expected_list():
    c = ClusterComposition((2, 1))
    assert [identities.expected_behaviour(c, 0, 1, m) for m in identities.candidate_offsets(c, 0, 1)] == [
        POLE, ZERO, ZERO, POLE,
    ]
    c = ClusterComposition((2, 2))
    assert [identities.expected_behaviour(c, 0, 1, m) for m in identities.candidate_offsets(c, 0, 1)] == [
        POLE, FINITE, ZERO, FINITE, POLE,
    ]


def test_probe_examples():
    r = identities.probe_removable_singularity((1, 1), (0, 1), 0, mu=[0.0, 0.0])
    assert r.verdict == ZERO and abs(r.values[-1]) < abs(r.values[0])
    r = identities.probe_removable_singularity((2, 1), (0, 1), 1)
    assert r.verdict == POLE
    scaled = [h * v for h, v in zip(r.steps, r.values)]
    # h * value settles to the residue with O(h) corrections
    assert abs(scaled[-1] - scaled[-2]) < 1e-2 * abs(scaled[-1]) and abs(scaled[-1]) > 1e-3
    r = identities.probe_removable_singularity((2, 2), (0, 1), 1)
    assert r.verdict == FINITE and np.isfinite(r.limit)


def test_pole_suite_matches_expectations():
    results = identities.pole_probe_suite(max_n=3)
    # 20 candidate offsets over the compositions of n = 2, 3, plus 5 for (2, 2)
    assert len(results) == 25
    bad = [(r.composition, r.pair, r.offset, r.verdict, r.expected) for r in results if not r.ok]
    assert not bad


def test_probe_validation():
    with pytest.raises(InvalidArgument):
        identities.probe_removable_singularity((1, 1), (1, 0), 0)

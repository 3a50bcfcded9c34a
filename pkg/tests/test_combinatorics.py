import math

import pytest
from hypothesis import given, settings
from hypothesis import strategies as st

from deltabose.combinatorics import (
    S_DBLPRIME,
    S_PRIME,
    ClusterComposition,
    ClusterPartition,
    compose,
    enumerate_compositions,
    enumerate_partitions,
    enumerate_restricted_permutations,
    in_class,
    inverse,
    partition_count,
    partition_to_tau,
    sign,
    tau_to_partition,
)
from deltabose.errors import InvalidArgument, ResourceLimit

compositions = st.lists(st.integers(1, 3), min_size=1, max_size=4).filter(lambda p: sum(p) <= 6)


def test_compositions_of_three():
    got = [c.parts for c in enumerate_compositions(3)]
    assert got == [(3,), (1, 2), (2, 1), (1, 1, 1)]


@pytest.mark.parametrize("n", range(1, 9))
def test_composition_count(n):
    comps = enumerate_compositions(n)
    assert len(comps) == 2 ** (n - 1)
    assert all(c.n == n for c in comps)
    assert len({c.parts for c in comps}) == len(comps)


def test_cluster_structure_21():
    c = ClusterComposition((2, 1))
    assert c.clusters == ((1, 2), (3,))
    assert c.ranks == (1, 2, 1)
    assert c.cluster_of == (0, 0, 1)
    assert c.reversal == (2, 1, 3)


def test_restricted_classes_21():
    c = ClusterComposition((2, 1))
    assert enumerate_restricted_permutations(c, S_PRIME) == [(1, 2, 3), (1, 3, 2), (3, 1, 2)]
    assert enumerate_restricted_permutations(c, S_DBLPRIME) == [(2, 1, 3), (2, 3, 1), (3, 2, 1)]


def test_single_cluster_classes():
    c = ClusterComposition((4,))
    assert enumerate_restricted_permutations(c, S_PRIME) == [(1, 2, 3, 4)]
    assert enumerate_restricted_permutations(c, S_DBLPRIME) == [(4, 3, 2, 1)]


def test_singletons_give_all_permutations():
    c = ClusterComposition((1, 1, 1))
    assert len(enumerate_restricted_permutations(c, S_PRIME)) == 6


@given(compositions)
@settings(max_examples=40, deadline=None)
def test_class_sizes_and_membership(parts):
    c = ClusterComposition(tuple(parts))
    for kind in (S_PRIME, S_DBLPRIME):
        perms = enumerate_restricted_permutations(c, kind)
        assert len(perms) == c.multinomial()
        assert all(in_class(p, c, kind) for p in perms)
        assert perms == sorted(perms)


@given(compositions)
@settings(max_examples=40, deadline=None)
def test_reversal_maps_prime_to_dblprime(parts):
    c = ClusterComposition(tuple(parts))
    R = c.reversal
    assert compose(R, R) == tuple(range(1, c.n + 1))
    # r(a) + r(R(a)) = n_j + 1 inside each cluster
    for a in range(1, c.n + 1):
        j = c.cluster_of[a - 1]
        assert c.ranks[a - 1] + c.ranks[R[a - 1] - 1] == c.parts[j] + 1
    prime = set(enumerate_restricted_permutations(c, S_PRIME))
    dbl = set(enumerate_restricted_permutations(c, S_DBLPRIME))
    assert {compose(R, p) for p in prime} == dbl


def test_partition_counts():
    assert partition_count(ClusterComposition((2, 1))) == 3
    assert len(enumerate_partitions(ClusterComposition((2, 1)))) == 3
    assert len(enumerate_partitions(ClusterComposition((2, 2)))) == 3
    assert len(enumerate_partitions(ClusterComposition((1, 1, 1)))) == 1


@pytest.mark.parametrize("n", [2, 3, 4, 5])
def test_canonical_partitions_are_stirling_numbers(n):
    # every set partition into M blocks is visited exactly once over D_{n,M}
    def stirling2(n, k):
        return sum((-1) ** i * math.comb(k, i) * (k - i) ** n for i in range(k + 1)) // math.factorial(k)

    for M in range(1, n + 1):
        seen = []
        for c in enumerate_compositions(n):
            if c.M == M:
                seen += [tuple(sorted(p.blocks)) for p in enumerate_partitions(c, canonical=True)]
        assert len(seen) == len(set(seen)) == stirling2(n, M)


def test_partition_rank():
    p = ClusterPartition(ClusterComposition((2, 1)), ((1, 3), (2,)))
    assert p.rank == (1, 0, 0)
    assert p.block_of == (0, 1, 0)


@given(compositions)
@settings(max_examples=40, deadline=None)
def test_partition_tau_bijection(parts):
    c = ClusterComposition(tuple(parts))
    dbl = set(enumerate_restricted_permutations(c, S_DBLPRIME))
    for p in enumerate_partitions(c):
        tau = partition_to_tau(p)
        assert tau in dbl
        assert tau_to_partition(tau, c).blocks == p.blocks
        # 1 + d(a) = r(tau(a))
        for a in range(1, c.n + 1):
            assert 1 + p.rank[a - 1] == c.ranks[tau[a - 1] - 1]


def test_permutation_helpers():
    p = (3, 1, 2)
    assert inverse(p) == (2, 3, 1)
    assert compose(p, inverse(p)) == (1, 2, 3)
    assert sign(p) == 1
    assert sign((2, 1, 3)) == -1


def test_invalid_inputs():
    with pytest.raises(InvalidArgument):
        ClusterComposition((2, 0))
    with pytest.raises(InvalidArgument):
        enumerate_compositions(0)
    with pytest.raises(InvalidArgument):
        ClusterPartition(ClusterComposition((2, 1)), ((1,), (2, 3)))
    with pytest.raises(InvalidArgument):
        enumerate_restricted_permutations(ClusterComposition((1,)), "bogus")
    with pytest.raises(ResourceLimit):
        enumerate_restricted_permutations(ClusterComposition((1,) * 9), S_PRIME)

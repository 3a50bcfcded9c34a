"""Index sets of the cluster sums: compositions, clusters, rank maps,
restricted permutation classes and set partitions.

Everything here is 1-based to match the usual cluster tables: particles are
labelled ``1..n``, a permutation is stored in one-line notation
``p = (sigma(1), ..., sigma(n))``, and ``inverse(p)[a - 1] = sigma^{-1}(a)``.
"""

from __future__ import annotations

import itertools
import math
from collections import Counter
from dataclasses import dataclass
from functools import cached_property

from .errors import InvalidArgument, ResourceLimit

MAX_COMPOSITION_N = 16
MAX_PERMUTATION_N = 8

S_PRIME = "S_prime"
S_DBLPRIME = "S_dblprime"


@dataclass(frozen=True)
class ClusterComposition:
    """An ordered tuple of cluster sizes ``(n_1, ..., n_M)`` summing to ``n``."""

    parts: tuple[int, ...]

    def __post_init__(self):
        parts = tuple(int(p) for p in self.parts)
        if not parts:
            raise InvalidArgument("composition needs at least one part")
        if any(p < 1 for p in parts):
            raise InvalidArgument(f"composition parts must be positive, got {parts}")
        object.__setattr__(self, "parts", parts)

    @property
    def n(self) -> int:
        return sum(self.parts)

    @property
    def M(self) -> int:
        return len(self.parts)

    @cached_property
    def starts(self) -> tuple[int, ...]:
        """First particle label of each cluster."""
        out, s = [], 1
        for p in self.parts:
            out.append(s)
            s += p
        return tuple(out)

    @cached_property
    def clusters(self) -> tuple[tuple[int, ...], ...]:
        return tuple(tuple(range(s, s + p)) for s, p in zip(self.starts, self.parts))

    @cached_property
    def ranks(self) -> tuple[int, ...]:
        """r(a) for a = 1..n: position of a inside its cluster, from 1."""
        return tuple(s for p in self.parts for s in range(1, p + 1))

    @cached_property
    def cluster_of(self) -> tuple[int, ...]:
        """0-based cluster index j of each particle a = 1..n."""
        return tuple(j for j, p in enumerate(self.parts) for _ in range(p))

    @cached_property
    def reversal(self) -> tuple[int, ...]:
        """Within-cluster reversal R: r(R(a)) = n_j + 1 - r(a)."""
        out = []
        for s, p in zip(self.starts, self.parts):
            out.extend(s + p - 1 - i for i in range(p))
        return tuple(out)

    def multinomial(self) -> int:
        return math.factorial(self.n) // math.prod(math.factorial(p) for p in self.parts)

    def __str__(self):
        return "(" + ",".join(map(str, self.parts)) + ")"


@dataclass(frozen=True)
class ClusterPartition:
    """A set partition of ``1..n`` whose j-th block has size ``base.parts[j]``."""

    base: ClusterComposition
    blocks: tuple[tuple[int, ...], ...]

    def __post_init__(self):
        blocks = tuple(tuple(sorted(int(a) for a in b)) for b in self.blocks)
        object.__setattr__(self, "blocks", blocks)
        if tuple(len(b) for b in blocks) != self.base.parts:
            raise InvalidArgument(
                f"block sizes {[len(b) for b in blocks]} do not match parts {self.base.parts}"
            )
        flat = sorted(a for b in blocks for a in b)
        if flat != list(range(1, self.base.n + 1)):
            raise InvalidArgument(f"blocks {blocks} do not partition 1..{self.base.n}")

    @cached_property
    def block_of(self) -> tuple[int, ...]:
        out = [0] * self.base.n
        for j, b in enumerate(self.blocks):
            for a in b:
                out[a - 1] = j
        return tuple(out)

    @cached_property
    def rank(self) -> tuple[int, ...]:
        """d(a): 0 for the largest element of its block, |block|-1 for the smallest."""
        out = [0] * self.base.n
        for b in self.blocks:
            for i, a in enumerate(b):
                out[a - 1] = len(b) - 1 - i
        return tuple(out)


def inverse(perm) -> tuple[int, ...]:
    out = [0] * len(perm)
    for i, p in enumerate(perm, start=1):
        out[p - 1] = i
    return tuple(out)


def compose(p, q) -> tuple[int, ...]:
    """(p o q)(i) = p(q(i))."""
    return tuple(p[i - 1] for i in q)


def sign(perm) -> int:
    s, seen = 1, [False] * len(perm)
    for i in range(len(perm)):
        if seen[i]:
            continue
        j, length = i, 0
        while not seen[j]:
            seen[j] = True
            j = perm[j] - 1
            length += 1
        if length % 2 == 0:
            s = -s
    return s


def inversions(perm):
    """Pairs (j, k), j < k, with perm(j) > perm(k)."""
    n = len(perm)
    return [(j, k) for j in range(1, n) for k in range(j + 1, n + 1) if perm[j - 1] > perm[k - 1]]


def enumerate_compositions(n: int) -> list[ClusterComposition]:
    """All compositions of n, ordered by number of parts and then lexicographically."""
    n = int(n)
    if n < 1:
        raise InvalidArgument(f"n must be positive, got {n}")
    if n > MAX_COMPOSITION_N:
        raise InvalidArgument(f"n={n} exceeds the composition cap {MAX_COMPOSITION_N}")
    out = []
    for M in range(1, n + 1):
        # choose M-1 cut points among n-1 gaps
        for cuts in itertools.combinations(range(1, n), M - 1):
            edges = (0,) + cuts + (n,)
            out.append(tuple(b - a for a, b in zip(edges, edges[1:])))
    out.sort(key=lambda p: (len(p), p))
    return [ClusterComposition(p) for p in out]


def cluster_ranks(c: ClusterComposition):
    """Clusters Omega_j as sets and the rank array r (1-based values)."""
    return [set(b) for b in c.clusters], list(c.ranks)


def _check_perm_cap(n):
    if n > MAX_PERMUTATION_N:
        raise ResourceLimit(f"n={n} exceeds the permutation enumeration cap {MAX_PERMUTATION_N}")


def _label_words(parts):
    """Distinct arrangements of the multiset {j^parts[j]} in lexicographic order."""
    counts = list(parts)
    n = sum(parts)
    word = []

    def rec():
        if len(word) == n:
            yield tuple(word)
            return
        for j, c in enumerate(counts):
            if c:
                counts[j] -= 1
                word.append(j)
                yield from rec()
                word.pop()
                counts[j] += 1

    yield from rec()


def enumerate_restricted_permutations(c: ClusterComposition, kind: str = S_PRIME) -> list[tuple[int, ...]]:
    """S'_n(parts) (within-cluster increasing one-line order) or S''_n(parts) (decreasing)."""
    if kind not in (S_PRIME, S_DBLPRIME):
        raise InvalidArgument(f"unknown permutation class {kind!r}")
    _check_perm_cap(c.n)
    out = []
    for word in _label_words(c.parts):
        # word[i] = cluster that occupies position i+1 of the one-line notation
        fill = [list(b) if kind == S_PRIME else list(reversed(b)) for b in c.clusters]
        nxt = [0] * c.M
        perm = []
        for j in word:
            perm.append(fill[j][nxt[j]])
            nxt[j] += 1
        out.append(tuple(perm))
    out.sort()
    return out


def in_class(perm, c: ClusterComposition, kind: str) -> bool:
    inv = inverse(perm)
    for b in c.clusters:
        for a, bb in zip(b, b[1:]):
            if kind == S_PRIME and not inv[a - 1] < inv[bb - 1]:
                return False
            if kind == S_DBLPRIME and not inv[a - 1] > inv[bb - 1]:
                return False
    return True


def partition_count(c: ClusterComposition) -> int:
    mult = Counter(c.parts)
    return c.multinomial() // math.prod(math.factorial(m) for m in mult.values())


def enumerate_partitions(c: ClusterComposition, canonical: bool = False) -> list[ClusterPartition]:
    """Unordered set partitions of 1..n with block-size multiset equal to ``c.parts``.

    Block j always has size ``c.parts[j]``; among blocks of equal size the one
    with the smaller minimum comes first.  With ``canonical=True`` only the
    partitions whose blocks, sorted by minimum, already have sizes
    ``c.parts`` are kept, so that summing over all compositions with M parts
    visits each partition into M blocks exactly once.
    """
    _check_perm_cap(c.n)
    parts = c.parts
    seen = set()
    out = []
    for word in _label_words(parts):
        blocks = [[] for _ in parts]
        for a, j in enumerate(word, start=1):
            blocks[j].append(a)
        # canonical labelling inside groups of equal size: by minimum element
        key = tuple(sorted(tuple(b) for b in blocks))
        if key in seen:
            continue
        seen.add(key)
        order = sorted(range(len(parts)), key=lambda j: (parts[j], blocks[j][0]))
        by_size = {}
        for j in order:
            by_size.setdefault(parts[j], []).append(blocks[j])
        labelled, used = [], {s: 0 for s in by_size}
        for p in parts:
            labelled.append(tuple(by_size[p][used[p]]))
            used[p] += 1
        if canonical and tuple(len(b) for b in sorted(labelled)) != parts:
            continue
        out.append(ClusterPartition(c, tuple(labelled)))
    out.sort(key=lambda p: p.blocks)
    assert canonical or len(out) == partition_count(c)
    return out


def partition_to_tau(p: ClusterPartition) -> tuple[int, ...]:
    """The tau in S''_n with A_j = tau^{-1}(Omega_j) and 1 + d(a) = r(tau(a))."""
    c = p.base
    tau = [0] * c.n
    for j, block in enumerate(p.blocks):
        for a in block:
            tau[a - 1] = c.starts[j] + p.rank[a - 1]
    return tuple(tau)


def tau_to_partition(tau, c: ClusterComposition) -> ClusterPartition:
    inv = inverse(tau)
    return ClusterPartition(c, tuple(tuple(inv[a - 1] for a in b) for b in c.clusters))

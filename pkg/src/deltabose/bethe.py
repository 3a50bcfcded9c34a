"""Bethe eigenfunctions and energies of the delta-Bose gas, both signs of kappa.

Coupling convention: H = -sum d^2/dx_j^2 - 2 kappa sum_{j<k} delta(x_j - x_k),
so kappa > 0 is attractive.  Positions live in the ordered sector
x_1 <= ... <= x_n.

The ``*_values`` functions are the vectorised cores: they take a block of
momentum points ``Q`` of shape ``(m, M)`` and return ``m`` values.  The
scalar functions validate their arguments and evaluate a single point.
"""

from __future__ import annotations

import math
import warnings
from dataclasses import dataclass
from functools import lru_cache

import numpy as np

from .combinatorics import (
    S_DBLPRIME,
    S_PRIME,
    ClusterComposition,
    enumerate_restricted_permutations,
    inverse,
)
from .errors import InvalidArgument, NumericalFailure

# relative distance below which a denominator counts as hitting its zero
SINGULAR_REL = 1e-7
# central offset used to evaluate through a removable singularity
PATCH_REL = 1e-5


@dataclass(frozen=True)
class BetheState:
    """Label (M, parts, q) of an eigenfunction; all-singleton parts is the repulsive case."""

    composition: ClusterComposition
    momenta: tuple[float, ...]
    coupling: float

    def __post_init__(self):
        q = tuple(float(v) for v in self.momenta)
        if len(q) != self.composition.M:
            raise InvalidArgument(
                f"need one momentum per cluster ({self.composition.M}), got {len(q)}"
            )
        object.__setattr__(self, "momenta", q)

    @property
    def energy(self) -> float:
        return energy_attractive(self)


def check_ordered(x, name="x"):
    x = np.asarray(x, dtype=float)
    if x.ndim != 1 or x.size == 0:
        raise InvalidArgument(f"{name} must be a non-empty vector")
    if np.any(np.diff(x) < 0):
        raise InvalidArgument(
            f"{name}={x.tolist()} is not in the ordered sector: need {name}_1 <= ... <= {name}_n"
        )
    if not np.all(np.isfinite(x)):
        raise InvalidArgument(f"{name} must be finite")
    return x


@lru_cache(maxsize=None)
def class_structure(parts: tuple[int, ...], kind: str):
    """For each permutation of the class: (0-based inverse, cross-cluster pairs).

    A pair (a, b) (0-based, a in cluster j < k owning b) is listed when
    perm^{-1}(a) > perm^{-1}(b).
    """
    c = ClusterComposition(parts)
    cl = c.cluster_of
    out = []
    for p in enumerate_restricted_permutations(c, kind):
        inv = np.array(inverse(p)) - 1
        pairs = tuple(
            (a, b)
            for a in range(c.n)
            for b in range(c.n)
            if cl[a] < cl[b] and inv[a] > inv[b]
        )
        out.append((inv, pairs))
    return tuple(out)


def norm_prefactor(c: ClusterComposition, kappa: float) -> complex:
    kap = complex(kappa) ** ((c.n - c.M) / 2)
    return kap * math.sqrt(math.prod(math.factorial(p) * math.factorial(p - 1) for p in c.parts)) / math.sqrt(
        math.factorial(c.n)
    )


def _shifted(c: ClusterComposition, Q, kappa):
    """Per-particle exponents w_a = q_j + i kappa (r(a) - 1) and xi_a = w_a + i kappa."""
    idx = np.array(c.cluster_of)
    r = np.array(c.ranks, dtype=float)
    W = Q[:, idx] + 1j * kappa * (r - 1.0)
    return W, W + 1j * kappa


def phi_values(x, c: ClusterComposition, Q, kappa, tilde=False):
    """phi_kappa(x; parts, q) (or phi-tilde with ``tilde=True``) at each row of Q.

    Returns ``(values, min_denominator, abs_sum)``; the last is the sum of
    term magnitudes, a rounding-noise scale for callers.
    """
    x = np.asarray(x, dtype=float)
    Q = np.atleast_2d(np.asarray(Q, dtype=complex))
    W, Xi = _shifted(c, Q, kappa)
    kind = S_DBLPRIME if tilde else S_PRIME
    sgn = -1.0 if tilde else 1.0
    m = Q.shape[0]
    total = np.zeros(m, dtype=complex)
    abs_sum = np.zeros(m)
    min_den = np.full(m, np.inf)
    cache = {}
    with np.errstate(divide="ignore", invalid="ignore", over="ignore"):
        for inv, pairs in class_structure(c.parts, kind):
            term = np.exp(sgn * 1j * (W @ x[inv]))
            for a, b in pairs:
                if (a, b) not in cache:
                    d = Xi[:, a] - Xi[:, b]
                    den = d - sgn * 1j * kappa
                    cache[(a, b)] = ((d + sgn * 1j * kappa) / den, np.abs(den))
                ratio, aden = cache[(a, b)]
                term = term * ratio
                min_den = np.minimum(min_den, aden)
            total += term
            abs_sum += np.abs(term)
    pref = norm_prefactor(c, kappa)
    return pref * total, min_den, abs(pref) * abs_sum


def _direction(M):
    # distinct entries so every pairwise difference moves
    e = np.sqrt(np.arange(1, M + 1, dtype=float))
    return e / e.max()


def patch_removable(kernel, Q, scale, detect_poles=False):
    """Evaluate ``kernel`` (returning values, min_den, abs_sum) through removable singularities.

    Rows whose smallest denominator is below ``SINGULAR_REL * scale`` (or whose
    value is not finite) are replaced by the average over q +/- delta*e.  With
    ``detect_poles`` a genuine pole at such a row raises NumericalFailure.
    """
    vals, min_den, abs_sum = kernel(Q)
    bad = (min_den < SINGULAR_REL * scale) | ~np.isfinite(vals)
    if not bad.any():
        return vals
    vals = vals.copy()
    Qb = Q[bad]
    e = _direction(Q.shape[1])
    delta = PATCH_REL * scale
    vp, _, sp = kernel(Qb + delta * e)
    vm, _, sm = kernel(Qb - delta * e)
    if detect_poles:
        vp2, _, _ = kernel(Qb + 2 * delta * e)
        vm2, _, _ = kernel(Qb - 2 * delta * e)
        d1, d2 = np.abs(vp - vm), np.abs(vp2 - vm2)
        noise = 1e-12 * np.maximum(sp, sm) / PATCH_REL
        pole = (d1 > noise) & (d2 < 0.75 * d1) | ~np.isfinite(d1)
        if pole.any():
            k = int(np.flatnonzero(pole)[0])
            raise NumericalFailure(
                f"non-removable pole at q = {Qb[k].tolist()}", where=Qb[k].tolist()
            )
    vals[bad] = 0.5 * (vp + vm)
    return vals


def _as_points(q, M):
    q = np.asarray(q, dtype=complex).reshape(-1)
    if q.size != M:
        raise InvalidArgument(f"expected {M} momenta, got {q.size}")
    return q.reshape(1, M)


def _scale(kappa):
    return abs(kappa) if kappa != 0 else 1.0


def psi_repulsive_values(x, Q, kappa):
    """Repulsive-style eigenfunction with the 1/n! prefactor at each row of real Q."""
    n = Q.shape[1]
    c = ClusterComposition((1,) * n)
    vals, md, s = phi_values(x, c, Q, kappa)
    f = 1.0 / math.sqrt(math.factorial(n))
    return f * vals, md, f * s


def psi_repulsive(x, q, kappa) -> complex:
    """psi(x; q) = (1/n!) sum_sigma prod (q_j-q_k+i kappa)/(q_j-q_k-i kappa) prod e^{i q_j x_{sigma^-1(j)}}."""
    x = check_ordered(x)
    q = np.asarray(q, dtype=float).reshape(-1)
    if q.size != x.size:
        raise InvalidArgument(f"x has {x.size} entries but q has {q.size}")
    if kappa != 0 and q.size > 1:
        gap = np.min(np.abs(np.subtract.outer(q, q))[np.triu_indices(q.size, 1)])
        if gap < 1e-12 * max(1.0, np.abs(q).max()):
            warnings.warn("coinciding momenta; the repulsive eigenfunction is regular there", stacklevel=2)
    Q = q.reshape(1, -1).astype(complex)
    return complex(patch_removable(lambda P: psi_repulsive_values(x, P, kappa), Q, _scale(kappa))[0])


def energy_repulsive(q) -> float:
    q = np.asarray(q, dtype=float)
    return float(np.sum(q * q))


def phi_cluster(x, composition: ClusterComposition, q_complex, kappa) -> complex:
    x = check_ordered(x)
    if x.size != composition.n:
        raise InvalidArgument(f"x has {x.size} entries, composition needs {composition.n}")
    Q = _as_points(q_complex, composition.M)
    kern = lambda P: phi_values(x, composition, P, kappa)
    return complex(patch_removable(kern, Q, _scale(kappa), detect_poles=True)[0])


def phi_tilde(y, composition: ClusterComposition, q_complex, kappa) -> complex:
    y = check_ordered(y, "y")
    if y.size != composition.n:
        raise InvalidArgument(f"y has {y.size} entries, composition needs {composition.n}")
    Q = _as_points(q_complex, composition.M)
    kern = lambda P: phi_values(y, composition, P, kappa, tilde=True)
    return complex(patch_removable(kern, Q, _scale(kappa), detect_poles=True)[0])


def string_shift(c: ClusterComposition, kappa):
    """Offsets -i kappa (n_j - 1)/2 taking real q to the string centres."""
    return -0.5j * kappa * (np.array(c.parts, dtype=float) - 1.0)


def psi_attractive_values(x, c: ClusterComposition, Q, kappa):
    return phi_values(x, c, Q + string_shift(c, kappa), kappa)


def psi_attractive(x, state: BetheState) -> complex:
    c = state.composition
    x = check_ordered(x)
    if x.size != c.n:
        raise InvalidArgument(f"x has {x.size} entries, composition needs {c.n}")
    if state.coupling <= 0:
        raise InvalidArgument("attractive eigenfunctions need kappa > 0")
    Q = np.array([state.momenta], dtype=complex)
    kern = lambda P: psi_attractive_values(x, c, P, state.coupling)
    return complex(patch_removable(kern, Q, state.coupling)[0])


def energy_attractive(state: BetheState) -> float:
    k2 = state.coupling**2
    return float(
        sum(p * q * q - k2 / 12.0 * (p**3 - p) for p, q in zip(state.composition.parts, state.momenta))
    )


def energy_attractive_values(c: ClusterComposition, Q, kappa):
    parts = np.array(c.parts, dtype=float)
    return (Q * Q) @ parts - kappa**2 / 12.0 * float(np.sum(parts**3 - parts))

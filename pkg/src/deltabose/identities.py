"""Numerical checks of the algebraic identities behind the cluster formulas.

Each ``check_*`` function returns a residual (absolute or relative, as
documented) so callers can compare against their own contract.  The pole probe
walks toward a candidate singular point of the Theorem-1 integrand and
classifies the behaviour as a zero, a finite (removable) value or a simple
pole.
"""

from __future__ import annotations

import itertools
import math
from dataclasses import dataclass

import mpmath
import numpy as np

from .combinatorics import ClusterComposition, sign
from .errors import InvalidArgument

MAX_VANDERMONDE_N = 6
MAX_CAUCHY_M = 5


def vandermonde(xi) -> complex:
    xi = np.asarray(xi, dtype=complex)
    n = xi.size
    return complex(np.prod([xi[a] - xi[b] for a in range(n) for b in range(a + 1, n)]))


def check_vandermonde_lemma(xi, f, relative=True) -> float:
    """Residual of sum_sigma sign(sigma) prod_{a<b} (xi_s(a) - xi_s(b) + f(a,b)) = n! prod (xi_a - xi_b).

    With ``relative`` the residual is divided by the largest single term.
    """
    xi = np.asarray(xi, dtype=complex).reshape(-1)
    n = xi.size
    if n > MAX_VANDERMONDE_N:
        raise InvalidArgument(f"n={n} exceeds {MAX_VANDERMONDE_N} for the Vandermonde check")
    f = np.asarray(f, dtype=complex)
    if f.shape != (n, n):
        raise InvalidArgument(f"f must be an {n}x{n} matrix, got shape {f.shape}")
    iu = np.triu_indices(n, 1)
    terms = []
    for perm in itertools.permutations(range(n)):
        p = np.array(perm)
        terms.append(sign(tuple(p + 1)) * np.prod(xi[p][iu[0]] - xi[p][iu[1]] + f[iu]))
    lhs = complex(math.fsum(t.real for t in terms), math.fsum(t.imag for t in terms))
    rhs = math.factorial(n) * vandermonde(xi)
    res = abs(lhs - rhs)
    if relative:
        scale = max(max(abs(t) for t in terms), abs(rhs), 1e-300)
        res /= scale
    return float(res)


def telescoping_sides(z: complex, nj: int, nk: int, kappa: float):
    """Both sides of the double-product identity in the difference z = q_j - q_k."""
    ik = 1j * kappa
    lhs = 1.0 + 0j
    for r in range(1, nj + 1):
        for s in range(1, nk + 1):
            lhs *= (z + ik * (r - s - 1)) / (z + ik * (r - s))
            lhs *= (z + ik * (nj - nk - r + s + 1)) / (z + ik * (nj - nk - r + s))
    rhs = (z - ik * nk) * (z + ik * nj) / (z * (z + ik * (nj - nk)))
    return complex(lhs), complex(rhs)


def check_telescoping_identity(q_j, q_k, n_j: int, n_k: int, kappa: float) -> float:
    """Relative residual of the telescoping double product; exact pole input is rejected."""
    n_j, n_k = int(n_j), int(n_k)
    if n_j < 1 or n_k < 1:
        raise InvalidArgument("cluster sizes must be positive")
    z = complex(q_j) - complex(q_k)
    ik = 1j * kappa
    dens = [z + ik * (r - s) for r in range(1, n_j + 1) for s in range(1, n_k + 1)]
    dens += [z + ik * (n_j - n_k - r + s) for r in range(1, n_j + 1) for s in range(1, n_k + 1)]
    dens += [z, z + ik * (n_j - n_k)]
    scale = max(abs(z), abs(kappa), 1e-300)
    if min(abs(d) for d in dens) <= 1e-14 * scale:
        raise InvalidArgument(f"q_j - q_k = {z} sits on a pole of the telescoping product")
    lhs, rhs = telescoping_sides(z, n_j, n_k, kappa)
    return float(abs(lhs - rhs) / max(abs(rhs), 1e-300))


def cauchy_sides(q, parts, kappa):
    """(triple product, pair product, determinant) of the Cauchy-type identity."""
    q = np.asarray(q, dtype=float)
    n = np.asarray(parts, dtype=float)
    M = q.size
    ik = 1j * kappa
    triple = 1.0
    pair = 1.0
    for j in range(M):
        for k in range(j + 1, M):
            z = q[j] - q[k]
            for r in range(1, int(n[j]) + 1):
                for s in range(1, int(n[k]) + 1):
                    base = -n[j] / 2 + n[k] / 2 + r - s
                    triple *= abs((z + ik * base) / (z + ik * (base - 1))) ** 2
            pair *= abs((z - 0.5 * ik * (n[j] - n[k])) / (z - 0.5 * ik * (n[j] + n[k]))) ** 2
    # the matrix is Cauchy-like and can be badly conditioned: take the
    # determinant in extended precision so the check tests the identity, not LU
    with mpmath.workdps(40):
        mat = mpmath.matrix(M, M)
        for j in range(M):
            for k in range(M):
                mat[j, k] = mpmath.mpc(0, kappa * n[j]) / (
                    mpmath.mpf(q[j]) - mpmath.mpf(q[k]) + mpmath.mpc(0, 0.5 * kappa * (n[j] + n[k]))
                )
        det = complex(mpmath.det(mat))
    return float(triple), float(pair), det


def check_cauchy_determinant(q, parts, kappa) -> float:
    """Largest relative residual among the three equal expressions."""
    q = np.asarray(q, dtype=float).reshape(-1)
    parts = tuple(int(p) for p in parts)
    if len(parts) != q.size:
        raise InvalidArgument(f"need one part per momentum ({q.size}), got {parts}")
    if q.size > MAX_CAUCHY_M:
        raise InvalidArgument(f"M={q.size} exceeds {MAX_CAUCHY_M} for the Cauchy check")
    if kappa == 0:
        raise InvalidArgument("kappa must be nonzero")
    if any(p < 1 for p in parts):
        raise InvalidArgument("parts must be positive")
    # only the triple product can be singular: q_j = q_k with base - 1 = 0
    for j in range(q.size):
        for k in range(j + 1, q.size):
            if abs(q[j] - q[k]) < 1e-14 * max(1.0, abs(q).max()) and any(
                abs(-parts[j] / 2 + parts[k] / 2 + r - s - 1) < 1e-12
                for r in range(1, parts[j] + 1)
                for s in range(1, parts[k] + 1)
            ):
                raise InvalidArgument(f"singular denominator at q_{j + 1} = q_{k + 1}")
    triple, pair, det = cauchy_sides(q, parts, kappa)
    scale = max(abs(triple), 1e-300)
    return float(max(abs(triple - pair), abs(triple - det), abs(pair - det)) / scale)


# ---------------------------------------------------------------------------
# pole probes

ZERO, FINITE, POLE = "zero", "finite", "pole"


def expected_behaviour(c: ClusterComposition, j: int, k: int, m: int) -> str:
    """Expected behaviour at q_j + i kappa mu_j = q_k + i kappa (mu_k + m), j < k."""
    nj, nk = c.parts[j], c.parts[k]
    if m in (nk, -nj):
        return POLE
    if m in (0, nk - nj):
        return ZERO
    return FINITE


def candidate_offsets(c: ClusterComposition, j: int, k: int) -> list[int]:
    """Integer offsets m where some factor of the integrand can vanish or blow up."""
    return list(range(-c.parts[j], c.parts[k] + 1))


@dataclass
class ProbeResult:
    composition: tuple[int, ...]
    pair: tuple[int, int]
    offset: int
    steps: list[float]
    values: list[complex]
    slope: float
    limit: complex
    verdict: str
    expected: str

    @property
    def ok(self) -> bool:
        return self.verdict == self.expected


def probe_removable_singularity(
    composition,
    pair,
    offset,
    kappa=1.0,
    mu=None,
    x=None,
    y=None,
    t=0.5,
    base=None,
    h0=1e-2,
    levels=6,
    seed=0,
):
    """Approach q_j + i kappa mu_j -> q_k + i kappa (mu_k + offset) along shrinking steps.

    Evaluates the Theorem-1 integrand (both permutation sums, Gaussian and
    phases) at ``h0 / 2^l`` for ``l < levels`` and classifies the power law
    ``|f(h)| ~ h^p``: p ~ 1 is a zero, p ~ 0 a finite limit, p ~ -1 a simple
    pole.  ``limit`` is the Richardson-extrapolated value for finite limits and
    the extrapolated residue ``h f(h)`` for poles.
    """
    from .propagator import symmetric_mu, thm1_kernel

    c = composition if isinstance(composition, ClusterComposition) else ClusterComposition(composition)
    j, k = (int(v) for v in pair)
    if not 0 <= j < k < c.M:
        raise InvalidArgument(f"pair must satisfy 0 <= j < k < M={c.M}, got {pair}")
    rng = np.random.default_rng(seed)
    mu = symmetric_mu(c) if mu is None else np.asarray(mu, dtype=float)
    x = np.sort(rng.uniform(-1, 1, c.n)) if x is None else np.asarray(x, dtype=float)
    y = np.sort(rng.uniform(-1, 1, c.n)) if y is None else np.asarray(y, dtype=float)
    q0 = rng.uniform(-1, 1, c.M) if base is None else np.asarray(base, dtype=float)
    q0 = q0.astype(complex)
    # place q_j so that q_j - q_k + i kappa (mu_j - mu_k) = i kappa m exactly
    q0[j] = q0[k] + 1j * kappa * (mu[k] - mu[j] + offset)
    kern = thm1_kernel(x, y, t, kappa, c, mu)
    direction = np.exp(0.3j)  # complex approach direction, off every symmetry line
    steps = [h0 / 2**l for l in range(levels)]
    vals = []
    for h in steps:
        Q = q0.copy()
        Q[j] += h * kappa * direction
        with np.errstate(all="ignore"):
            vals.append(complex(kern(Q[None, :])[0][0]))
    a = np.abs(np.array(vals))
    if not np.all(np.isfinite(a)):
        slope = -np.inf
    elif np.all(a == 0):
        slope = np.inf
    else:
        lh, la = np.log(steps[-3:]), np.log(np.maximum(a[-3:], 1e-300))
        slope = float(np.polyfit(lh, la, 1)[0])
    if slope > 0.5:
        verdict, limit = ZERO, 0j
    elif slope < -0.5:
        verdict = POLE
        r = [h * v for h, v in zip(steps, vals)]
        limit = 2 * r[-1] - r[-2]
    else:
        verdict = FINITE
        limit = 2 * vals[-1] - vals[-2]
    return ProbeResult(
        c.parts, (j, k), int(offset), steps, vals, slope, complex(limit), verdict,
        expected_behaviour(c, j, k, int(offset)),
    )


def pole_probe_suite(max_n=3, kappa=1.0, seed=1, extra=((2, 2),)):
    """Probe every candidate offset for every cluster pair of every composition with n <= max_n."""
    from .combinatorics import enumerate_compositions

    comps = [c for n in range(2, max_n + 1) for c in enumerate_compositions(n) if c.M >= 2]
    comps += [ClusterComposition(p) for p in extra]
    out = []
    for i, c in enumerate(comps):
        for j in range(c.M):
            for k in range(j + 1, c.M):
                for m in candidate_offsets(c, j, k):
                    out.append(probe_removable_singularity(c, (j, k), m, kappa=kappa, seed=seed + i))
    return out

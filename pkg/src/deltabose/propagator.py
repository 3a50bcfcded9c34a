"""Exact evaluators of the imaginary-time propagator <x| exp(-t H_kappa) |y>.

Every evaluator writes the propagator as a sum over cluster compositions of
momentum integrals whose integrand is ``exp(-t sum_j n_j q_j^2 + linear) *
(function of the differences q_j - q_k)``.  The centre-of-mass direction
``q -> q + P(1, ..., 1)`` is therefore a pure Gaussian and is integrated in
closed form; the remaining ``M - 1`` relative momenta go to the trapezoid
rule.  ``reduce=False`` keeps the full M-dimensional quadrature (slower; used
to cross-check the reduction).

Grid spacing follows the analyticity strip of the integrand: the trapezoid
error decays like ``exp(-2 pi d / h)`` for poles at distance ``d`` from the
contour, so ``h`` is chosen from the nearest genuine pole, the Gaussian width
and the largest oscillation frequency.
"""

from __future__ import annotations

import enum
import logging
import math
from dataclasses import dataclass, field
from functools import lru_cache

import numpy as np

from . import bethe
from .combinatorics import (
    S_DBLPRIME,
    S_PRIME,
    ClusterComposition,
    enumerate_compositions,
    enumerate_partitions,
    enumerate_restricted_permutations,
    inverse,
)
from .errors import InvalidArgument, NumericalFailure, ResourceLimit
from .quadrature import GridSpec, integrate, truncation_radius

log = logging.getLogger(__name__)

DEFAULT_TOL = 1e-12
MAX_GENERAL_N = 4
MAX_PARTITION_N = 3
MAX_ZERO_POINT_N = 8
NODE_BUDGET = 60_000_000


class Method(str, enum.Enum):
    TW_REPULSIVE = "tw"
    EIGEN_REPULSIVE = "eigen"
    THM1 = "thm1"
    THM2 = "thm2"
    PARTITION_FORM = "partition"
    ZERO_POINT = "zero"

    @classmethod
    def parse(cls, value):
        if isinstance(value, cls):
            return value
        v = str(value).strip().lower()
        for m in cls:
            if v in (m.value, m.name.lower()):
                return m
        raise InvalidArgument(f"unknown method {value!r}; choose from {[m.value for m in cls]}")


REPULSIVE_METHODS = (Method.TW_REPULSIVE, Method.EIGEN_REPULSIVE)
ATTRACTIVE_METHODS = (Method.THM1, Method.THM2, Method.PARTITION_FORM, Method.ZERO_POINT)


def allowed_methods(kappa: float) -> list[Method]:
    if kappa < 0:
        return list(REPULSIVE_METHODS)
    if kappa == 0:
        return list(REPULSIVE_METHODS)
    return list(ATTRACTIVE_METHODS)


@dataclass(frozen=True)
class PropagatorQuery:
    x: tuple[float, ...]
    y: tuple[float, ...]
    t: float
    kappa: float
    method: Method = Method.THM2
    tol: float = DEFAULT_TOL

    def __post_init__(self):
        x = tuple(float(v) for v in bethe.check_ordered(self.x, "x"))
        y = tuple(float(v) for v in bethe.check_ordered(self.y, "y"))
        if len(x) != len(y):
            raise InvalidArgument(f"x and y must have the same length ({len(x)} != {len(y)})")
        if not self.t > 0:
            raise InvalidArgument(f"t must be positive, got {self.t}")
        if not 0 < self.tol < 1:
            raise InvalidArgument(f"tol must lie in (0, 1), got {self.tol}")
        method = Method.parse(self.method)
        kappa = float(self.kappa)
        if method in REPULSIVE_METHODS and kappa > 0:
            raise InvalidArgument(
                f"method {method.value} needs kappa <= 0; for kappa > 0 use one of "
                f"{[m.value for m in ATTRACTIVE_METHODS]}"
            )
        if method in ATTRACTIVE_METHODS and kappa <= 0:
            raise InvalidArgument(
                f"method {method.value} needs kappa > 0; for kappa <= 0 use one of "
                f"{[m.value for m in REPULSIVE_METHODS]}"
            )
        if method is Method.ZERO_POINT and (any(x) or any(y)):
            raise InvalidArgument("the zero-point formula needs x = y = 0")
        object.__setattr__(self, "x", x)
        object.__setattr__(self, "y", y)
        object.__setattr__(self, "t", float(self.t))
        object.__setattr__(self, "kappa", kappa)
        object.__setattr__(self, "method", method)

    @property
    def n(self) -> int:
        return len(self.x)


@dataclass(frozen=True)
class Thm1Config:
    """Contour offsets mu_j, fixed per composition, with -n_j < mu_j <= 0.

    ``mu`` is ``"symmetric"`` (mu_j = -(n_j-1)/2), ``"zero"``, or a mapping
    from a parts tuple to its mu vector.
    """

    mu: object = "symmetric"

    def for_composition(self, c: ClusterComposition) -> np.ndarray:
        if isinstance(self.mu, str):
            if self.mu == "symmetric":
                return symmetric_mu(c)
            if self.mu == "zero":
                return zero_mu(c)
            raise InvalidArgument(f"unknown mu scheme {self.mu!r}; use 'symmetric', 'zero' or a mapping")
        try:
            m = self.mu[tuple(c.parts)]
        except KeyError:
            raise InvalidArgument(f"no mu given for composition {c}") from None
        return check_mu(c, m)


def check_mu(c: ClusterComposition, mu) -> np.ndarray:
    mu = np.asarray(mu, dtype=float)
    if mu.shape != (c.M,):
        raise InvalidArgument(f"need {c.M} mu values for composition {c}, got {mu.tolist()}")
    parts = np.array(c.parts)
    if np.any(mu > 0) or np.any(mu <= -parts):
        raise InvalidArgument(f"mu={mu.tolist()} violates -n_j < mu_j <= 0 for parts {c.parts}")
    return mu


def symmetric_mu(c: ClusterComposition) -> np.ndarray:
    return -0.5 * (np.array(c.parts, dtype=float) - 1.0)


def zero_mu(c: ClusterComposition) -> np.ndarray:
    return np.zeros(c.M)


@dataclass(frozen=True)
class PartitionFormConfig:
    """Contours R - i kappa eps_j; ``eps=None`` means eps_j = j/(M+1).

    Otherwise ``eps`` maps the number of clusters M to an eps vector.
    """

    eps: object = None

    def for_clusters(self, M: int) -> np.ndarray:
        if self.eps is None:
            return default_eps(M)
        try:
            e = self.eps[M]
        except KeyError:
            raise InvalidArgument(f"no eps given for M={M}") from None
        return check_eps(e, M)


def check_eps(eps, M) -> np.ndarray:
    eps = np.asarray(eps, dtype=float)
    if eps.shape != (M,):
        raise InvalidArgument(f"need {M} eps values, got {eps.tolist()}")
    if np.any(eps < 0) or np.any(eps >= 1):
        raise InvalidArgument(f"eps={eps.tolist()} must lie in [0, 1)")
    if len(set(eps.tolist())) != M:
        raise InvalidArgument(f"eps={eps.tolist()} must be pairwise distinct")
    return eps


def default_eps(M) -> np.ndarray:
    return np.arange(1, M + 1) / (M + 1.0)


@dataclass
class TermRecord:
    composition: tuple[int, ...]
    value: complex
    error_estimate: float
    evaluations: int
    grid: dict


@dataclass
class PropagatorResult:
    value: complex
    error_estimate: float
    method: str
    evaluations: int = 0
    terms: list[TermRecord] = field(default_factory=list)

    @property
    def imag_residue(self) -> float:
        return abs(self.value.imag)

    @property
    def real(self) -> float:
        return self.value.real

    def grid_summary(self) -> list[dict]:
        return [dict(composition=list(r.composition), **r.grid) for r in self.terms]


# ---------------------------------------------------------------------------
# reduced integration


def _node_budget_check(spec: GridSpec):
    total = math.prod(spec.nodes) if spec.dim else 1
    if total > NODE_BUDGET:
        raise ResourceLimit(
            f"quadrature grid of {total} nodes ({spec.nodes}) exceeds the budget {NODE_BUDGET}"
        )


def reduced_integral(kernel, weights, t, B0, offsets, pole_distance, freq, tol, scale, reduce=True):
    """Integrate ``kernel`` over R^M (shifted by imaginary ``offsets``).

    ``kernel(Q)`` returns ``(values, min_den, abs_sum)`` on ``(m, M)`` points
    and must satisfy ``kernel(q + P*1) = kernel(q) * exp(-t N P^2 + P g(q))``
    with ``g(q) = B0 - 2 t sum_j w_j q_j``.
    """
    w = np.asarray(weights, dtype=float)
    M = len(w)
    N = float(w.sum())
    offsets = np.asarray(offsets, dtype=complex)
    lt = math.log(1.0 / tol)
    if reduce:
        dim = M - 1
        if dim:
            A = t * (np.diag(w[:-1]) - np.outer(w[:-1], w[:-1]) / N)
            cov = np.linalg.inv(A)
            lam = float(np.linalg.eigvalsh(A).max())
            halfw = [truncation_radius(1.0 / cov[i, i], 0.0, 0, tol) for i in range(dim)]
        else:
            lam, halfw = 0.0, []
    else:
        dim = M
        lam = t * float(w.max())
        halfw = [truncation_radius(t * wi, 0.0, 0, tol) for wi in w]
    omega = freq + max(2.0 * math.sqrt(lam * lt), lt / pole_distance if pole_distance < np.inf else 0.0)
    step = 2.0 * math.pi / omega if omega > 0 else 1.0
    if dim:
        spec = GridSpec.from_step(halfw, step, offsets.imag[:dim])
        _node_budget_check(spec)
    else:
        spec = GridSpec((), (), ())
    pref = math.sqrt(math.pi / (t * N))

    def f(U):
        m = U.shape[0]
        Q = np.empty((m, M), dtype=complex)
        if reduce:
            Q[:, :dim] = U + offsets.real[:dim]
            Q[:, dim] = offsets[dim]
        else:
            Q[:] = U + offsets.real
        vals = bethe.patch_removable(kernel, Q, scale)
        if not reduce:
            return vals
        g = B0 - 2.0 * t * (Q @ w)
        return vals * pref * np.exp(g * g / (4.0 * t * N))

    res = integrate(f, spec)
    grid = dict(dim=dim, nodes=list(spec.nodes), step=step if dim else 0.0, half_width=list(spec.half_width))
    return res, grid


def _freq(weights, shifts_abs, x, y, kappa, t, B0):
    x, y = np.asarray(x), np.asarray(y)
    D = max(abs(x.max() - y.min()), abs(y.max() - x.min()), abs(x).max(), abs(y).max())
    w = np.asarray(weights, dtype=float)
    return float(np.max(w * D + 2.0 * abs(kappa) * t * np.asarray(shifts_abs)) + abs(B0) * w.max() / w.sum())


# ---------------------------------------------------------------------------
# kernels (integrands without their constant prefactor)


@lru_cache(maxsize=None)
def _tw_structure(n):
    import itertools

    out = []
    for perm in itertools.permutations(range(1, n + 1)):
        inv = np.array(inverse(perm)) - 1
        # j<k with sigma(j)>sigma(k): a = sigma(j) > b = sigma(k)
        pairs = tuple(
            (perm[j] - 1, perm[k] - 1) for j in range(n) for k in range(j + 1, n) if perm[j] > perm[k]
        )
        out.append((inv, pairs))
    return tuple(out)


def tw_kernel(x, y, t, kappa):
    x, y = np.asarray(x, float), np.asarray(y, float)

    def kernel(Q):
        m, n = Q.shape
        gauss = np.exp(-t * np.sum(Q * Q, axis=1))
        total = np.zeros(m, dtype=complex)
        abs_sum = np.zeros(m)
        min_den = np.full(m, np.inf)
        cache = {}
        with np.errstate(divide="ignore", invalid="ignore"):
            for inv, pairs in _tw_structure(n):
                term = np.exp(1j * (Q @ (x[inv] - y))) * gauss
                for a, b in pairs:
                    if (a, b) not in cache:
                        d = Q[:, a] - Q[:, b]
                        den = d + 1j * kappa
                        cache[(a, b)] = ((d - 1j * kappa) / den, np.abs(den))
                    r, ad = cache[(a, b)]
                    term = term * r
                    min_den = np.minimum(min_den, ad)
                total += term
                abs_sum += np.abs(term)
        return total, min_den, abs_sum

    return kernel


def eigen_repulsive_kernel(x, y, t, kappa):
    def kernel(Q):
        px, mx, sx = bethe.psi_repulsive_values(x, Q, kappa)
        py, my, sy = bethe.psi_repulsive_values(y, Q, kappa)
        gauss = np.exp(-t * np.sum(Q * Q, axis=1))
        return px * np.conj(py) * gauss, np.minimum(mx, my), sx * sy * np.abs(gauss)

    return kernel


@lru_cache(maxsize=None)
def _double_structure(parts):
    """(sigma index, tau index, cross pairs) for the Theorem-1 double sum."""
    c = ClusterComposition(parts)
    cl = c.cluster_of
    sig = [np.array(inverse(p)) - 1 for p in enumerate_restricted_permutations(c, S_PRIME)]
    tau = [np.array(inverse(p)) - 1 for p in enumerate_restricted_permutations(c, S_DBLPRIME)]
    combos = []
    for i, si in enumerate(sig):
        for k, tk in enumerate(tau):
            pairs = tuple(
                (a, b)
                for a in range(c.n)
                for b in range(c.n)
                if cl[a] != cl[b] and si[a] > si[b] and tk[a] < tk[b]
            )
            combos.append((i, k, pairs))
    return tuple(sig), tuple(tau), tuple(combos)


def thm1_kernel(x, y, t, kappa, c: ClusterComposition, mu):
    """Double sum over S' x S'' of the Theorem-1 integrand at complex momenta."""
    x, y = np.asarray(x, float), np.asarray(y, float)
    mu = np.asarray(mu, float)
    idx = np.array(c.cluster_of)
    shift = mu[idx] + np.array(c.ranks, dtype=float) - 1.0

    def kernel(Q):
        Q = np.atleast_2d(np.asarray(Q, dtype=complex))
        W = Q[:, idx] + 1j * kappa * shift
        Xi = W + 1j * kappa
        gauss = np.exp(-t * np.sum(W * W, axis=1))
        sig, tau, combos = _double_structure(c.parts)
        ex = [np.exp(1j * (W @ x[s])) for s in sig]
        ey = [np.exp(-1j * (W @ y[s])) for s in tau]
        m = Q.shape[0]
        total = np.zeros(m, dtype=complex)
        abs_sum = np.zeros(m)
        min_den = np.full(m, np.inf)
        cache = {}
        with np.errstate(divide="ignore", invalid="ignore"):
            for i, k, pairs in combos:
                term = ex[i] * ey[k]
                for a, b in pairs:
                    if (a, b) not in cache:
                        d = Xi[:, a] - Xi[:, b]
                        den = d - 1j * kappa
                        cache[(a, b)] = ((d + 1j * kappa) / den, np.abs(den))
                    r, ad = cache[(a, b)]
                    term = term * r
                    min_den = np.minimum(min_den, ad)
                total += term
                abs_sum += np.abs(term)
        return total * gauss, min_den, abs_sum * np.abs(gauss)

    return kernel


def thm2_kernel(x, y, t, kappa, c: ClusterComposition):
    def kernel(Q):
        px, mx, sx = bethe.psi_attractive_values(x, c, Q, kappa)
        py, my, sy = bethe.psi_attractive_values(y, c, Q, kappa)
        ew = np.exp(-t * bethe.energy_attractive_values(c, Q, kappa))
        return px * np.conj(py) * ew, np.minimum(mx, my), sx * sy * np.abs(ew)

    return kernel


@lru_cache(maxsize=None)
def _partition_structure(parts):
    import itertools

    c = ClusterComposition(parts)
    out = []
    perms = [np.array(p) for p in itertools.permutations(range(1, c.n + 1))]
    for A in enumerate_partitions(c, canonical=True):
        blk, d = np.array(A.block_of), np.array(A.rank, dtype=float)
        terms = []
        for perm in perms:
            inv = np.array(inverse(tuple(perm))) - 1
            ok = all(inv[a - 1] > inv[b - 1] for blkA in A.blocks for i, a in enumerate(blkA) for b in blkA[i + 1 :])
            if not ok:
                continue
            pairs = tuple(
                (a, b)
                for a in range(c.n)
                for b in range(a + 1, c.n)
                if blk[a] != blk[b] and inv[a] > inv[b]
            )
            terms.append((inv, pairs))
        out.append((blk, d, tuple(terms)))
    return tuple(out)


def partition_kernel(x, y, t, kappa, c: ClusterComposition):
    x, y = np.asarray(x, float), np.asarray(y, float)

    def kernel(Q):
        Q = np.atleast_2d(np.asarray(Q, dtype=complex))
        m = Q.shape[0]
        total = np.zeros(m, dtype=complex)
        abs_sum = np.zeros(m)
        min_den = np.full(m, np.inf)
        with np.errstate(divide="ignore", invalid="ignore"):
            for blk, d, terms in _partition_structure(c.parts):
                W = Q[:, blk] + 1j * kappa * d
                gauss = np.exp(-t * np.sum(W * W, axis=1))
                cache = {}
                for inv, pairs in terms:
                    term = np.exp(1j * (W @ (x[inv] - y))) * gauss
                    for a, b in pairs:
                        if (a, b) not in cache:
                            dd = W[:, a] - W[:, b]
                            den = dd - 1j * kappa
                            cache[(a, b)] = ((dd + 1j * kappa) / den, np.abs(den))
                        r, ad = cache[(a, b)]
                        term = term * r
                        min_den = np.minimum(min_den, ad)
                    total += term
                    abs_sum += np.abs(term)
        return total, min_den, abs_sum

    return kernel


def zero_point_kernel(t, kappa, c: ClusterComposition):
    parts = np.array(c.parts, dtype=float)
    growth = t * kappa**2 / 12.0 * (parts**3 - parts)
    half = 0.5 * kappa * (parts[:, None] + parts[None, :])

    def kernel(Q):
        Q = np.atleast_2d(np.asarray(Q, dtype=complex))
        rows = np.exp(-t * parts * Q * Q + growth)
        den = -1j * (Q[:, :, None] - Q[:, None, :]) + half
        mat = rows[:, :, None] / den
        vals = np.linalg.det(mat) if c.M > 1 else mat[:, 0, 0]
        return vals, np.abs(den).min(axis=(1, 2)), np.prod(np.abs(rows), axis=1) / half.min() ** c.M

    return kernel


# ---------------------------------------------------------------------------
# evaluators


def _sum_terms(records, method):
    val = complex(math.fsum(r.value.real for r in records), math.fsum(r.value.imag for r in records))
    err = math.fsum(r.error_estimate for r in records)
    evals = sum(r.evaluations for r in records)
    for r in records:
        log.debug("%s term %s: %r (err %.3g)", method, r.composition, r.value, r.error_estimate)
    res = PropagatorResult(val, err, method, evals, records)
    if not np.isfinite(val):
        raise NumericalFailure(f"{method}: non-finite propagator value", where=[r.composition for r in records])
    return res


def _check_n(q: PropagatorQuery, cap):
    if q.n > cap:
        raise ResourceLimit(f"method {q.method.value} supports n <= {cap}, got n = {q.n}")


def _record(c_parts, pref, res, grid):
    return TermRecord(tuple(c_parts), pref * res.value, abs(pref) * res.error_estimate, res.evaluations, grid)


def propagator_tw_repulsive(q: PropagatorQuery, reduce=True) -> PropagatorResult:
    """Contour-integral (Tracy-Widom) formula, kappa <= 0."""
    _check_n(q, MAX_GENERAL_N)
    if q.kappa > 0:
        raise InvalidArgument("the TW formula is only valid for kappa <= 0")
    n = q.n
    B0 = 1j * (sum(q.x) - sum(q.y))
    d = abs(q.kappa) if q.kappa != 0 else np.inf
    fr = _freq(np.ones(n), np.zeros(n), q.x, q.y, q.kappa, q.t, B0)
    res, grid = reduced_integral(
        tw_kernel(q.x, q.y, q.t, q.kappa), np.ones(n), q.t, B0, np.zeros(n), d, fr, q.tol, bethe._scale(q.kappa), reduce
    )
    pref = 1.0 / (math.factorial(n) * (2 * math.pi) ** n)
    return _sum_terms([_record((1,) * n, pref, res, grid)], Method.TW_REPULSIVE.value)


def propagator_eigen_repulsive(q: PropagatorQuery, reduce=True) -> PropagatorResult:
    """Expansion in repulsive Bethe eigenstates, kappa <= 0."""
    _check_n(q, MAX_GENERAL_N)
    if q.kappa > 0:
        raise InvalidArgument("the repulsive eigen-expansion needs kappa <= 0")
    n = q.n
    B0 = 1j * (sum(q.x) - sum(q.y))
    d = abs(q.kappa) if q.kappa != 0 else np.inf
    fr = _freq(np.ones(n), np.zeros(n), q.x, q.y, q.kappa, q.t, B0)
    res, grid = reduced_integral(
        eigen_repulsive_kernel(q.x, q.y, q.t, q.kappa),
        np.ones(n), q.t, B0, np.zeros(n), d, fr, q.tol, bethe._scale(q.kappa), reduce,
    )
    pref = 1.0 / (2 * math.pi) ** n
    return _sum_terms([_record((1,) * n, pref, res, grid)], Method.EIGEN_REPULSIVE.value)


def _cluster_norm(c: ClusterComposition) -> float:
    return float(math.prod(math.factorial(p) * math.factorial(p - 1) for p in c.parts))


def thm1_pole_distance(c: ClusterComposition, mu, kappa) -> float:
    d = np.inf
    for j in range(c.M):
        for k in range(j + 1, c.M):
            d = min(d, abs(mu[k] + c.parts[k] - mu[j]), abs(mu[k] - mu[j] - c.parts[j]))
    return kappa * d


def propagator_thm1(q: PropagatorQuery, cfg: Thm1Config | None = None, reduce=True) -> PropagatorResult:
    """Cluster double-permutation formula for kappa > 0."""
    _check_n(q, MAX_GENERAL_N)
    if q.kappa <= 0:
        raise InvalidArgument("Theorem-1 evaluator needs kappa > 0")
    cfg = cfg or Thm1Config()
    n, k = q.n, q.kappa
    records = []
    for c in enumerate_compositions(n):
        m = cfg.for_composition(c)
        shift = m[list(c.cluster_of)] + np.array(c.ranks) - 1.0
        B0 = 1j * (sum(q.x) - sum(q.y)) - 2j * k * q.t * float(shift.sum())
        shifts_abs = [float(np.abs(shift[[a for a in range(n) if c.cluster_of[a] == j]]).sum()) for j in range(c.M)]
        fr = _freq(c.parts, shifts_abs, q.x, q.y, k, q.t, B0)
        d = thm1_pole_distance(c, m, k)
        res, grid = reduced_integral(
            thm1_kernel(q.x, q.y, q.t, k, c, m), c.parts, q.t, B0, np.zeros(c.M), d, fr, q.tol, k, reduce
        )
        pref = k ** (n - c.M) * _cluster_norm(c) / (math.factorial(n) * math.factorial(c.M) * (2 * math.pi) ** c.M)
        records.append(_record(c.parts, pref, res, grid))
    return _sum_terms(records, Method.THM1.value)


def propagator_thm2(q: PropagatorQuery, reduce=True) -> PropagatorResult:
    """Expansion in attractive Bethe eigenfunctions (string states), kappa > 0."""
    _check_n(q, MAX_GENERAL_N)
    if q.kappa <= 0:
        raise InvalidArgument("Theorem-2 evaluator needs kappa > 0")
    n, k = q.n, q.kappa
    records = []
    for c in enumerate_compositions(n):
        B0 = 1j * (sum(q.x) - sum(q.y))
        fr = _freq(c.parts, np.zeros(c.M), q.x, q.y, k, q.t, B0)
        d = k * min((c.parts[a] + c.parts[b]) / 2 for a in range(c.M) for b in range(a + 1, c.M)) if c.M > 1 else np.inf
        res, grid = reduced_integral(
            thm2_kernel(q.x, q.y, q.t, k, c), c.parts, q.t, B0, np.zeros(c.M), d, fr, q.tol, k, reduce
        )
        pref = 1.0 / (math.factorial(c.M) * (2 * math.pi) ** c.M)
        records.append(_record(c.parts, pref, res, grid))
    return _sum_terms(records, Method.THM2.value)


def propagator_partition_form(q: PropagatorQuery, cfg: PartitionFormConfig | None = None, reduce=True) -> PropagatorResult:
    """Set-partition form on contours R - i kappa eps_j, kappa > 0."""
    _check_n(q, MAX_PARTITION_N)
    if q.kappa <= 0:
        raise InvalidArgument("the partition form needs kappa > 0")
    cfg = cfg or PartitionFormConfig()
    n, k = q.n, q.kappa
    records = []
    for c in enumerate_compositions(n):
        e = cfg.for_clusters(c.M)
        dsum = sum(p * (p - 1) / 2 for p in c.parts)
        B0 = 1j * (sum(q.x) - sum(q.y)) - 2j * k * q.t * dsum
        shifts_abs = [p * (p - 1) / 2 + p * e[j] for j, p in enumerate(c.parts)]
        fr = _freq(c.parts, shifts_abs, q.x, q.y, k, q.t, B0)
        d = np.inf
        for a in range(c.M):
            for b in range(a + 1, c.M):
                f = abs(e[a] - e[b]) % 1.0
                d = min(d, k * min(f, 1.0 - f))
        res, grid = reduced_integral(
            partition_kernel(q.x, q.y, q.t, k, c), c.parts, q.t, B0, -1j * k * e, d, fr, q.tol, k, reduce
        )
        pref = k ** (n - c.M) * _cluster_norm(c) / (math.factorial(n) * (2 * math.pi) ** c.M)
        records.append(_record(c.parts, pref, res, grid))
    return _sum_terms(records, Method.PARTITION_FORM.value)


def propagator_zero_point(n: int, t: float, kappa: float, tol: float = DEFAULT_TOL, reduce=True) -> PropagatorResult:
    """Determinant formula for x = y = 0."""
    if kappa <= 0:
        raise InvalidArgument("the zero-point formula needs kappa > 0")
    if not t > 0:
        raise InvalidArgument(f"t must be positive, got {t}")
    n = int(n)
    if n < 1 or n > MAX_ZERO_POINT_N:
        raise InvalidArgument(f"zero-point formula supports 1 <= n <= {MAX_ZERO_POINT_N}, got {n}")
    records = []
    zeros = np.zeros(n)
    for c in enumerate_compositions(n):
        fr = _freq(c.parts, np.zeros(c.M), zeros, zeros, kappa, t, 0.0)
        d = kappa * min((c.parts[a] + c.parts[b]) / 2 for a in range(c.M) for b in range(c.M) if a != b) if c.M > 1 else np.inf
        res, grid = reduced_integral(zero_point_kernel(t, kappa, c), c.parts, t, 0.0, np.zeros(c.M), d, fr, tol, kappa, reduce)
        pref = math.factorial(n) * kappa**n / (math.factorial(c.M) * (2 * math.pi) ** c.M)
        records.append(_record(c.parts, pref, res, grid))
    return _sum_terms(records, Method.ZERO_POINT.value)


def evaluate(q: PropagatorQuery, thm1: Thm1Config | None = None, partition: PartitionFormConfig | None = None,
             reduce=True) -> PropagatorResult:
    m = q.method
    if m is Method.TW_REPULSIVE:
        return propagator_tw_repulsive(q, reduce)
    if m is Method.EIGEN_REPULSIVE:
        return propagator_eigen_repulsive(q, reduce)
    if m is Method.THM1:
        return propagator_thm1(q, thm1, reduce)
    if m is Method.THM2:
        return propagator_thm2(q, reduce)
    if m is Method.PARTITION_FORM:
        return propagator_partition_form(q, partition, reduce)
    return propagator_zero_point(q.n, q.t, q.kappa, q.tol, reduce)


def propagator(x, y, t, kappa, method=None, tol=DEFAULT_TOL, **kw) -> PropagatorResult:
    """Convenience wrapper; picks TW for kappa <= 0 and Theorem 2 for kappa > 0."""
    if method is None:
        method = Method.TW_REPULSIVE if kappa <= 0 else Method.THM2
    return evaluate(PropagatorQuery(tuple(x), tuple(y), t, kappa, method, tol), **kw)


def decay_rate(n, kappa, method=Method.ZERO_POINT, t_grid=(4.0, 5.0, 6.0, 7.0, 8.0), tol=DEFAULT_TOL,
               log_t_power=0.0):
    """Least-squares slope of -log P(0, 0; t) over ``t_grid``.

    With ``log_t_power = p`` the fit is applied to ``-log(t^p P)`` instead,
    which removes a known algebraic prefactor ``t^-p``.
    """
    if kappa <= 0:
        raise InvalidArgument("decay rates are defined here for kappa > 0")
    t_grid = np.asarray(t_grid, dtype=float)
    if t_grid.size < 4 or np.any(np.diff(t_grid) <= 0):
        raise InvalidArgument("t_grid must be increasing with at least 4 points")
    if t_grid[0] < 2.0 / kappa**2:
        raise InvalidArgument(f"t_grid must start at t >= 2/kappa^2 = {2.0 / kappa**2:g}")
    method = Method.parse(method)
    vals = []
    zeros = (0.0,) * int(n)
    for t in t_grid:
        r = evaluate(PropagatorQuery(zeros, zeros, float(t), kappa, method, tol))
        if not r.value.real > 0:
            raise NumericalFailure(f"non-positive propagator {r.value} at t={t}", where=float(t))
        vals.append(r.value.real)
    y = -np.log(np.array(vals)) - log_t_power * np.log(t_grid)
    slope = float(np.polyfit(t_grid, y, 1)[0])
    return slope

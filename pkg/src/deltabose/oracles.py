"""Independent reference values: free kernel, an n=2 PDE solver and Feynman-Kac Monte Carlo.

Conventions: the one-particle heat kernel of -d^2/dx^2 is
p_t(u) = exp(-u^2/4t)/sqrt(4 pi t), i.e. Brownian motion with variance 2t.
Bosonic kernels on the ordered sector carry the 1/n! symmetrisation.
"""

from __future__ import annotations

import itertools
import math
from concurrent.futures import ThreadPoolExecutor
from dataclasses import dataclass

import numpy as np
from scipy.linalg import solve_banded

from .bethe import check_ordered
from .errors import InvalidArgument, NumericalFailure, ResourceLimit
from .quadrature import thread_count

BRIDGE = "bridge"
KERNEL = "kernel"
MC_CHUNK = 4096
MAX_MC_N = 4


def heat_kernel(u, t):
    u = np.asarray(u, dtype=float)
    return np.exp(-u * u / (4.0 * t)) / math.sqrt(4.0 * math.pi * t)


def _check_xy(x, y):
    x, y = check_ordered(x, "x"), check_ordered(y, "y")
    if x.size != y.size:
        raise InvalidArgument(f"x and y must have the same length ({x.size} != {y.size})")
    return x, y


def free_propagator(x, y, t) -> float:
    """(1/n!) sum_sigma prod_j p_t(x_j - y_sigma(j))."""
    if not t > 0:
        raise InvalidArgument(f"t must be positive, got {t}")
    x, y = _check_xy(x, y)
    n = x.size
    terms = [float(np.prod(heat_kernel(x - y[list(p)], t))) for p in itertools.permutations(range(n))]
    return math.fsum(terms) / math.factorial(n)


# ---------------------------------------------------------------------------
# PDE oracle, n = 2


@dataclass(frozen=True)
class PdeConfig:
    """Grid for the relative-coordinate solver; ``U=None`` picks |u0| + |u1| + 12 sqrt(t)."""

    du: float = 1e-3
    dtau: float | None = None
    U: float | None = None
    startup_steps: int = 4
    tol: float = 1e-4

    def __post_init__(self):
        if not self.du > 0:
            raise InvalidArgument(f"du must be positive, got {self.du}")
        if self.dtau is not None and not self.dtau > 0:
            raise InvalidArgument(f"dtau must be positive, got {self.dtau}")
        if self.U is not None and not self.U > 0:
            raise InvalidArgument(f"U must be positive, got {self.U}")


@dataclass
class PdeResult:
    value: float
    error_estimate: float
    fine: float
    coarse: float
    nodes: int
    steps: int


def _robin_heat(u0, u1, t, kappa, du, dtau, U, startup):
    """Half-line kernel G_t(u1, u0) of d/dtau = 2 d^2/du^2 with (d/du + kappa/2) g = 0 at u = 0."""
    N = int(math.ceil(U / du))
    m = N  # unknowns at nodes 0..N-1, node N is Dirichlet zero
    w = np.full(m, du)
    w[0] = 0.5 * du
    # tridiagonal operator L (ghost-node Robin condition at node 0)
    c = 2.0 / du**2
    diag = np.full(m, -2.0 * c)
    diag[0] = c * (-2.0 + kappa * du)
    upper = np.full(m - 1, c)
    upper[0] = 2.0 * c
    lower = np.full(m - 1, c)

    def apply(g):
        out = diag * g
        out[:-1] += upper * g[1:]
        out[1:] += lower * g[:-1]
        return out

    def banded(alpha):
        ab = np.zeros((3, m))
        ab[0, 1:] = -alpha * upper
        ab[1] = 1.0 - alpha * diag
        ab[2, :-1] = -alpha * lower
        return ab

    # discrete delta at u0, split linearly between neighbours
    g = np.zeros(m)
    s = u0 / du
    i = int(math.floor(s))
    f = s - i
    if i + 1 >= m:
        raise InvalidArgument("u0 lies outside the PDE domain")
    g[i] += (1.0 - f) / w[i]
    g[i + 1] += f / w[i + 1]

    nsteps = max(1, int(math.ceil(t / dtau)))
    dt = t / nsteps
    k0 = min(startup, nsteps)
    # Rannacher start: 2*k0 implicit Euler half steps damp the delta's high modes
    ab_ie = banded(0.5 * dt)
    for _ in range(2 * k0):
        g = solve_banded((1, 1), ab_ie, g)
    ab_cn = banded(0.5 * dt)
    for _ in range(nsteps - k0):
        g = solve_banded((1, 1), ab_cn, g + 0.5 * dt * apply(g))
    s = u1 / du
    i = int(math.floor(s))
    f = s - i
    val = (1.0 - f) * g[i] + f * g[i + 1]
    return float(val), m, nsteps


def pde_propagator_n2(x, y, t, kappa, cfg: PdeConfig | None = None) -> PdeResult:
    """Two-particle propagator from a finite-difference solve in the relative coordinate.

    The centre of mass R = (x1+x2)/2 diffuses freely with variance t; the
    relative coordinate u = x2 - x1 >= 0 solves d/dtau g = 2 g'' with the Robin
    condition (d/du + kappa/2) g = 0 at u = 0.  P = 1/2 K_R * G_u.  Two grids
    (du, dtau) and (2du, 2dtau) are Richardson-combined.
    """
    cfg = cfg or PdeConfig()
    if not t > 0:
        raise InvalidArgument(f"t must be positive, got {t}")
    x, y = _check_xy(x, y)
    if x.size != 2:
        raise InvalidArgument(f"the PDE oracle handles n = 2 only, got n = {x.size}")
    R, Rp = 0.5 * (x[0] + x[1]), 0.5 * (y[0] + y[1])
    u1, u0 = x[1] - x[0], y[1] - y[0]
    U = cfg.U if cfg.U is not None else u0 + u1 + 12.0 * math.sqrt(t)
    if U < 6.0 * math.sqrt(t) + u0 + u1:
        raise InvalidArgument(f"domain half-width U={U} below 6 sqrt(t) + |u0| + |u1|")
    if U / cfg.du > 5e6:
        raise ResourceLimit(f"PDE grid of {U / cfg.du:.3g} nodes is too large")
    dtau = cfg.dtau if cfg.dtau is not None else cfg.du
    KR = math.exp(-((R - Rp) ** 2) / (2.0 * t)) / math.sqrt(2.0 * math.pi * t)
    fine, m, steps = _robin_heat(u0, u1, t, kappa, cfg.du, dtau, U, cfg.startup_steps)
    coarse, _, _ = _robin_heat(u0, u1, t, kappa, 2 * cfg.du, 2 * dtau, U, cfg.startup_steps)
    fine, coarse = 0.5 * KR * fine, 0.5 * KR * coarse
    value = fine + (fine - coarse) / 3.0
    err = abs(fine - coarse) / 3.0
    if not np.isfinite(value):
        raise NumericalFailure("PDE solve produced a non-finite value", where=dict(du=cfg.du, dtau=dtau))
    if err > cfg.tol * max(abs(value), 1e-300):
        raise NumericalFailure(
            f"PDE grid too coarse: error estimate {err:.3g} above tolerance", where=dict(du=cfg.du, dtau=dtau)
        )
    return PdeResult(value, err, fine, coarse, m, steps)


# ---------------------------------------------------------------------------
# Feynman-Kac Monte Carlo


@dataclass(frozen=True)
class McConfig:
    """Monte Carlo settings.

    ``estimator="bridge"`` samples each pair local time exactly per time step
    given the path skeleton (exact for n = 2); ``"kernel"`` uses the mollified
    occupation estimator (1/2h) 1{|b_j - b_k| <= h} at bandwidths h, h/2, h/4
    and extrapolates linearly to h = 0.  ``h=None`` means 0.05 sqrt(t).
    ``steps=None`` means 64 for the bridge estimator and 2048 for the kernel
    estimator, whose bandwidth must exceed the per-step spread of the paths.
    """

    paths: int = 100_000
    steps: int | None = None
    h: float | None = None
    seed: int = 0
    antithetic: bool = True
    estimator: str = BRIDGE
    symmetrize: bool = True

    def __post_init__(self):
        if self.steps is None:
            object.__setattr__(self, "steps", 2048 if self.estimator == KERNEL else 64)
        if self.paths < 1 or self.steps < 1:
            raise InvalidArgument("paths and steps must be positive")
        if self.h is not None and not self.h > 0:
            raise InvalidArgument(f"bandwidth h must be positive, got {self.h}")
        if self.estimator not in (BRIDGE, KERNEL):
            raise InvalidArgument(f"unknown local-time estimator {self.estimator!r}")
        if not 0 <= int(self.seed) < 2**64:
            raise InvalidArgument("seed must be a 64-bit unsigned integer")


@dataclass
class McResult:
    estimate: float
    std_error: float
    paths: int
    per_bandwidth: list | None = None


def _pairs(n):
    return [(j, k) for j in range(n) for k in range(j + 1, n)]


def _chunk_sums(args):
    """Per-chunk sums of the path weights (and their squares) for every output column."""
    x, targets, t, kappa, cfg, hs, chunk, size = args
    n = x.size
    K = cfg.steps
    rng = np.random.default_rng(np.random.SeedSequence([int(cfg.seed), int(chunk)]))
    ds = t / K
    s = np.linspace(0.0, t, K + 1)
    pairs = _pairs(n)
    half = (size + 1) // 2 if cfg.antithetic else size
    Z = rng.standard_normal((half, K, n))
    V = rng.random((half, K, len(pairs))) if cfg.estimator == BRIDGE else None
    if cfg.antithetic:
        Z = np.concatenate([Z, -Z])
        if V is not None:
            V = np.concatenate([V, 1.0 - V])
    # Brownian bridge 0 -> 0 with variance rate 2
    W = np.concatenate([np.zeros((Z.shape[0], 1, n)), np.cumsum(math.sqrt(2.0 * ds) * Z, axis=1)], axis=1)
    B0 = W - (s / t)[None, :, None] * W[:, -1:, :]
    ncols = len(hs) if cfg.estimator == KERNEL else 1
    vals = np.zeros((Z.shape[0], ncols))
    for yt, wfree in targets:
        paths = B0 + x[None, None, :] + (s / t)[None, :, None] * (yt - x)[None, None, :]
        X = np.zeros((Z.shape[0], ncols))
        for p, (j, k) in enumerate(pairs):
            D = paths[:, :, k] - paths[:, :, j]
            if cfg.estimator == BRIDGE:
                a, b = 0.5 * D[:, :-1], 0.5 * D[:, 1:]
                # standard-bridge local time at 0; D = 2 W so L_D = L_W / 2
                ell = np.sqrt((b - a) ** 2 - 2.0 * ds * np.log(V[:, :, p])) - np.abs(a) - np.abs(b)
                X[:, 0] += 0.5 * np.sum(np.maximum(ell, 0.0), axis=1)
            else:
                absd = np.abs(D)
                for c, h in enumerate(hs):
                    occ = (absd <= h) / (2.0 * h)
                    X[:, c] += ds * (occ.sum(axis=1) - 0.5 * (occ[:, 0] + occ[:, -1]))
        vals += wfree * np.exp(2.0 * kappa * X)
    vals /= len(targets)
    if cfg.antithetic:
        h2 = vals.shape[0] // 2
        pair_vals = 0.5 * (vals[:h2] + vals[h2:])
        used = pair_vals[: (size + 1) // 2]
        return used.sum(axis=0), (used**2).sum(axis=0), used.shape[0]
    return vals.sum(axis=0), (vals**2).sum(axis=0), vals.shape[0]


def feynman_kac_mc(x, y, t, kappa, cfg: McConfig | None = None) -> McResult:
    """Monte Carlo estimate of the propagator from the Feynman-Kac representation.

    Returns the bosonic kernel (1/n!) sum_sigma FK(x, sigma y) when
    ``cfg.symmetrize`` (the default), else the distinguishable-particle
    kernel FK(x, y) = E[exp(2 kappa X)] prod_j p_t(x_j - y_j).  All
    permutations reuse the same noise.  Chunks of paths draw from
    independent streams keyed by (seed, chunk index), so the result does not
    depend on the thread count.
    """
    cfg = cfg or McConfig()
    if not t > 0:
        raise InvalidArgument(f"t must be positive, got {t}")
    x, y = _check_xy(x, y)
    n = x.size
    if n > MAX_MC_N:
        raise ResourceLimit(f"Monte Carlo supports n <= {MAX_MC_N}")
    perms = list(itertools.permutations(range(n))) if cfg.symmetrize else [tuple(range(n))]
    targets = [(y[list(p)], float(np.prod(heat_kernel(x - y[list(p)], t)))) for p in perms]
    if kappa == 0 or n == 1:
        exact = math.fsum(w for _, w in targets) / len(targets)
        return McResult(exact, 0.0, cfg.paths)
    h = cfg.h if cfg.h is not None else 0.05 * math.sqrt(t)
    hs = [h, h / 2, h / 4]
    nchunks = -(-cfg.paths // MC_CHUNK)
    jobs = [
        (x, targets, t, kappa, cfg, hs, c, min(MC_CHUNK, cfg.paths - c * MC_CHUNK)) for c in range(nchunks)
    ]
    threads = thread_count()
    if threads > 1 and nchunks > 1:
        with ThreadPoolExecutor(threads) as ex:
            parts = list(ex.map(_chunk_sums, jobs))
    else:
        parts = [_chunk_sums(j) for j in jobs]
    S = np.sum([p[0] for p in parts], axis=0)
    S2 = np.sum([p[1] for p in parts], axis=0)
    cnt = sum(p[2] for p in parts)
    mean = S / cnt
    var = np.maximum(S2 / cnt - mean**2, 0.0) * cnt / max(cnt - 1, 1)
    se = np.sqrt(var / cnt)
    if cfg.estimator == BRIDGE:
        return McResult(float(mean[0]), float(se[0]), cfg.paths)
    # linear fit in h through the three bandwidths, evaluated at h = 0
    H = np.array(hs)
    A = np.vstack([np.ones(3), H]).T
    coef = np.linalg.lstsq(A, mean, rcond=None)[0]
    # intercept weights of the least-squares fit (applied to per-bandwidth errors, conservatively)
    wts = np.linalg.pinv(A)[0]
    se0 = float(np.sqrt(np.sum((wts * se) ** 2)) + 0.0)
    return McResult(float(coef[0]), se0, cfg.paths, [(float(a), float(b), float(c)) for a, b, c in zip(H, mean, se)])

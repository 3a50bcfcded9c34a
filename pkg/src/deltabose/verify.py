"""Verification suites: identities, pole probes, small-t completeness, decay rates.

Each suite returns a JSON-serialisable report ``{"suite", "passed", "checks"}``
where every check carries its measured quantity, its contract and a verdict.
"""

from __future__ import annotations

import math

import numpy as np

from . import bethe, identities
from .combinatorics import ClusterComposition
from .errors import InvalidArgument
from .propagator import Method, PropagatorQuery, decay_rate, evaluate

SUITES = ("identities", "poles", "completeness", "decay")


def _check(name, value, contract, passed, **extra):
    return dict(name=name, value=float(value), contract=contract, passed=bool(passed), **extra)


def identities_suite(seed=1, draws=100):
    rng = np.random.default_rng(seed)
    checks = []
    worst = 0.0
    for _ in range(draws):
        n = int(rng.integers(2, 6))
        xi = rng.normal(size=n) + 1j * rng.normal(size=n)
        f = rng.normal(size=(n, n)) + 1j * rng.normal(size=(n, n))
        worst = max(worst, identities.check_vandermonde_lemma(xi, f))
    checks.append(_check("vandermonde_lemma", worst, "<= 1e-10 relative to max term", worst <= 1e-10))
    worst = 0.0
    for _ in range(draws):
        z = complex(rng.normal(), rng.normal())
        nj, nk = (int(v) for v in rng.integers(1, 5, 2))
        worst = max(worst, identities.check_telescoping_identity(z, 0.0, nj, nk, rng.uniform(0.1, 2.0)))
    checks.append(_check("telescoping_identity", worst, "<= 1e-12 relative", worst <= 1e-12))
    worst = 0.0
    for _ in range(draws):
        M = int(rng.integers(1, 6))
        parts = tuple(int(v) for v in rng.integers(1, 4, M))
        worst = max(worst, identities.check_cauchy_determinant(rng.normal(size=M), parts, rng.uniform(0.1, 2.0)))
    checks.append(_check("cauchy_determinant", worst, "<= 1e-10 relative", worst <= 1e-10))
    # conjugation relation phi-tilde(y; q) = conj(phi(y; q - i kappa n + i kappa)) for real q
    worst = 0.0
    for _ in range(draws):
        parts = ((2, 1), (1, 2), (1, 1, 1), (3,), (2, 2))[int(rng.integers(0, 5))]
        c = ClusterComposition(parts)
        y = np.sort(rng.uniform(-1, 1, c.n))
        kappa = rng.uniform(0.1, 2.0)
        q = rng.normal(size=c.M)
        lhs = bethe.phi_tilde(y, c, q, kappa)
        rhs = np.conj(bethe.phi_cluster(y, c, q - 1j * kappa * np.array(parts) + 1j * kappa, kappa))
        worst = max(worst, abs(lhs - rhs) / max(abs(rhs), 1e-300))
    checks.append(_check("phi_tilde_conjugation", worst, "<= 1e-12 relative", worst <= 1e-12))
    return dict(suite="identities", seed=seed, passed=all(c["passed"] for c in checks), checks=checks)


def poles_suite(max_n=3, kappa=1.0, seed=1):
    checks = []
    for r in identities.pole_probe_suite(max_n=max_n, kappa=kappa, seed=seed):
        checks.append(
            _check(
                f"{r.composition} pair {r.pair} offset {r.offset}",
                r.slope,
                r.expected,
                r.ok,
                verdict=r.verdict,
                limit=[r.limit.real, r.limit.imag],
            )
        )
    return dict(suite="poles", passed=all(c["passed"] for c in checks), checks=checks)


def normalization(kappa, t=0.02, y=(-0.5, 0.5), nodes=(32, 64)):
    """n! * integral over the ordered sector of P_t(x, y) dx for n = 2.

    Integrated in (R, u) = ((x1+x2)/2, x2-x1) over R within 6 sqrt(t) of the
    centre of y and 0 <= u <= u' + 12 sqrt(t), by tensor Gauss-Legendre.
    """
    y = tuple(float(v) for v in y)
    if len(y) != 2:
        raise InvalidArgument("the completeness check is implemented for n = 2")
    method = Method.THM2 if kappa > 0 else Method.TW_REPULSIVE
    Rp, up = 0.5 * (y[0] + y[1]), y[1] - y[0]
    s = math.sqrt(t)
    gR, wR = np.polynomial.legendre.leggauss(nodes[0])
    gu, wu = np.polynomial.legendre.leggauss(nodes[1])
    R = Rp + 6 * s * gR
    wR = 6 * s * wR
    umax = up + 12 * s
    u = 0.5 * umax * (gu + 1)
    wu = 0.5 * umax * wu
    total = []
    for Ri, wi in zip(R, wR):
        for uj, wj in zip(u, wu):
            x = (Ri - 0.5 * uj, Ri + 0.5 * uj)
            v = evaluate(PropagatorQuery(x, y, t, kappa, method, 1e-10)).value.real
            total.append(wi * wj * v)
    return 2.0 * math.fsum(total)


def completeness_suite(t=0.02, kappas=(-1.0, 1.0)):
    checks = []
    for k in kappas:
        v = normalization(k, t)
        checks.append(_check(f"n=2 kappa={k:g} t={t:g}", v, "within 0.02 of 1", abs(v - 1) <= 0.02))
    return dict(suite="completeness", passed=all(c["passed"] for c in checks), checks=checks)


def decay_suite(kappa=1.0, ns=(2, 3), t_grid=(4.0, 5.0, 6.0, 7.0, 8.0), method=Method.ZERO_POINT, rel=0.05):
    """Raw least-squares slope of -log P against the string ground energy.

    The prefactor-corrected slope (fit of -log(sqrt(t) P)) is reported alongside
    for information; it does not enter the verdict.
    """
    checks = []
    for n in ns:
        target = -(kappa**2) * (n**3 - n) / 12.0
        raw = decay_rate(n, kappa, method, t_grid)
        corrected = decay_rate(n, kappa, method, t_grid, log_t_power=0.5)
        ok = abs(raw - target) <= rel * abs(target) if target else abs(raw) <= rel
        checks.append(
            _check(f"n={n} kappa={kappa:g}", raw, f"{target:g} within {rel:.0%}", ok, target=target,
                   corrected_slope=corrected)
        )
    return dict(suite="decay", passed=all(c["passed"] for c in checks), checks=checks)


def run_suite(name, seed=1):
    if name == "identities":
        return identities_suite(seed=seed)
    if name == "poles":
        return poles_suite(seed=seed)
    if name == "completeness":
        return completeness_suite()
    if name == "decay":
        return decay_suite()
    raise InvalidArgument(f"unknown suite {name!r}; choose from {list(SUITES)}")

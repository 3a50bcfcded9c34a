"""Tensor-product quadrature for smooth, Gaussian-damped complex integrands.

The default rule is the uniform trapezoid rule on a truncated box, which is
spectrally accurate for analytic integrands with Gaussian decay.  Each axis may
carry a constant imaginary offset, so that ``R - i*c`` contours are integrated
as real grids.  The error estimate compares the full grid with its
every-other-node subgrid.
"""

from __future__ import annotations

import math
import os
from concurrent.futures import ThreadPoolExecutor
from dataclasses import dataclass, field

import numpy as np

from .errors import InvalidArgument, NumericalFailure

TRAPEZOID = "trapezoid"
GAUSS_LEGENDRE = "gauss-legendre"

CHUNK = 1 << 15
THREADS_ENV = "DELTABOSE_THREADS"


def thread_count() -> int:
    try:
        return max(1, int(os.environ.get(THREADS_ENV, "1")))
    except ValueError:
        return 1


@dataclass(frozen=True)
class GridSpec:
    """Per-axis half-width, odd node count and imaginary offset.

    ``shift[i]`` is the absolute imaginary part added to every node of axis i
    (a contour ``R - i*kappa*eps`` has ``shift = -kappa*eps``).
    """

    half_width: tuple[float, ...]
    nodes: tuple[int, ...]
    shift: tuple[float, ...] = ()
    rule: str = TRAPEZOID

    def __post_init__(self):
        hw = tuple(float(v) for v in self.half_width)
        nodes = tuple(int(v) for v in self.nodes)
        shift = tuple(float(v) for v in self.shift) or (0.0,) * len(hw)
        if len(nodes) != len(hw) or len(shift) != len(hw):
            raise InvalidArgument("half_width, nodes and shift must have one entry per axis")
        if any(v <= 0 for v in hw):
            raise InvalidArgument(f"half widths must be positive, got {hw}")
        if any(m < 3 or m % 2 == 0 for m in nodes):
            raise InvalidArgument(f"node counts must be odd and >= 3, got {nodes}")
        if self.rule not in (TRAPEZOID, GAUSS_LEGENDRE):
            raise InvalidArgument(f"unknown rule {self.rule!r}")
        object.__setattr__(self, "half_width", hw)
        object.__setattr__(self, "nodes", nodes)
        object.__setattr__(self, "shift", shift)

    @property
    def dim(self) -> int:
        return len(self.nodes)

    @classmethod
    def uniform(cls, dim, half_width, nodes, shift=0.0, rule=TRAPEZOID):
        return cls((half_width,) * dim, (nodes,) * dim, (shift,) * dim, rule)

    @classmethod
    def from_step(cls, half_widths, step, shifts=None):
        """Trapezoid grid with exact spacing ``step`` covering each half-width.

        Node counts are 1 mod 4 so the half-resolution subgrid also contains 0,
        and every axis shares the lattice ``step * Z``.
        """
        nodes, hws = [], []
        for L in half_widths:
            m = max(2, math.ceil(L / step))
            m += m % 2
            nodes.append(2 * m + 1)
            hws.append(m * step)
        shifts = tuple(shifts) if shifts is not None else (0.0,) * len(nodes)
        return cls(tuple(hws), tuple(nodes), shifts, TRAPEZOID)


@dataclass
class IntegralResult:
    value: complex
    error_estimate: float
    evaluations: int
    spec: GridSpec | None = field(default=None, repr=False)


def truncation_radius(t: float, kappa: float, n: int, tol: float) -> float:
    """Half-width L with exp(-t L^2) <= tol, padded by n|kappa| + 1 for shifted contours."""
    if t <= 0:
        raise InvalidArgument(f"t must be positive, got {t}")
    if not 0 < tol < 1:
        raise InvalidArgument(f"tol must lie in (0, 1), got {tol}")
    return math.sqrt(math.log(1.0 / tol) / t) + n * abs(kappa) + 1.0


def _axis_rule(L, m, rule):
    if rule == TRAPEZOID:
        x = np.linspace(-L, L, m)
        w = np.full(m, x[1] - x[0])
        w[0] = w[-1] = 0.5 * (x[1] - x[0])
        return x, w
    x, w = np.polynomial.legendre.leggauss(m)
    return L * x, L * w


def _tensor_sum(f, axes, shift, chunk, sub_mask=None):
    """Sum f * w over a tensor grid, chunk by chunk in a fixed order.

    With ``sub_mask`` (one boolean array per axis) a second sum is accumulated
    over the subgrid of masked nodes, using ``sub_scale`` times the weights.
    """
    dim = len(axes)
    shape = tuple(len(x) for x, _ in axes)
    total = math.prod(shape)
    starts = list(range(0, total, chunk))
    shift = np.asarray(shift, dtype=float)

    def work(start):
        idx = np.unravel_index(np.arange(start, min(start + chunk, total)), shape)
        pts = np.empty((len(idx[0]), dim), dtype=complex)
        w = np.ones(len(idx[0]))
        sub = np.ones(len(idx[0]), dtype=bool)
        for i, (x, wx) in enumerate(axes):
            pts[:, i] = x[idx[i]] + 1j * shift[i]
            w *= wx[idx[i]]
            if sub_mask is not None:
                sub &= sub_mask[i][idx[i]]
        vals = np.asarray(f(pts), dtype=complex)
        bad = ~np.isfinite(vals)
        if bad.any():
            k = int(np.flatnonzero(bad)[0])
            raise NumericalFailure(
                f"integrand not finite at node {pts[k].tolist()}", where=pts[k].tolist()
            )
        full = vals * w
        return full.sum(), (full[sub].sum() if sub_mask is not None else 0.0)

    threads = thread_count()
    if threads > 1 and len(starts) > 1:
        with ThreadPoolExecutor(threads) as ex:
            parts = list(ex.map(work, starts))
    else:
        parts = [work(s) for s in starts]
    # chunk sums combined in chunk order with compensated summation
    s_full = complex(math.fsum(p[0].real for p in parts), math.fsum(p[0].imag for p in parts))
    s_sub = complex(math.fsum(complex(p[1]).real for p in parts), math.fsum(complex(p[1]).imag for p in parts))
    return s_full, s_sub, total


def integrate(f, spec: GridSpec, chunk: int = CHUNK) -> IntegralResult:
    """Integrate ``f`` over the shifted box described by ``spec``.

    ``f`` maps an ``(m, dim)`` complex array of nodes to ``m`` complex values
    and must be pure.  A zero-dimensional spec evaluates ``f`` once at the
    empty point.
    """
    if spec.dim == 0:
        v = complex(np.asarray(f(np.zeros((1, 0), dtype=complex)))[0])
        if not np.isfinite(v):
            raise NumericalFailure("integrand not finite", where=[])
        return IntegralResult(v, 0.0, 1, spec)
    if spec.rule == TRAPEZOID:
        axes = [_axis_rule(L, m, TRAPEZOID) for L, m in zip(spec.half_width, spec.nodes)]
        masks = [np.arange(m) % 2 == 0 for m in spec.nodes]
        full, sub, count = _tensor_sum(f, axes, spec.shift, chunk, masks)
        coarse = sub * 2**spec.dim
        return IntegralResult(full, abs(full - coarse), count, spec)
    axes = [_axis_rule(L, m, GAUSS_LEGENDRE) for L, m in zip(spec.half_width, spec.nodes)]
    full, _, count = _tensor_sum(f, axes, spec.shift, chunk)
    half = [_axis_rule(L, (m + 1) // 2, GAUSS_LEGENDRE) for L, m in zip(spec.half_width, spec.nodes)]
    coarse, _, count2 = _tensor_sum(f, half, spec.shift, chunk)
    return IntegralResult(full, abs(full - coarse), count + count2, spec)

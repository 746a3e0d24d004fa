"""Herglotz functions given by their representation triple ``(alpha, beta, mu)``.

    h(z) = alpha z + beta + int (1/(l - z) - l/(l^2 + 1)) dmu(l)

with ``mu`` a :class:`~sssf.measure.RealMeasure`. Atoms contribute partial
fractions, slabs contribute closed-form logarithms.
"""
from __future__ import annotations

import math
from dataclasses import dataclass
from functools import cached_property

import numpy as np

from ._bisect import bisect_increasing
from .measure import RealMeasure, make_measure, support_partition, total_mass
from .rankone import SpectralSample

# Roots are refined until the bracket cannot be split further, which is
# stricter than |dx| <= 1e-13, |h - r| <= 1e-12 max(1, |r|). Stieltjes
# inversion at eps ~ 1e-12 needs positions good to ~1 ulp.
XTOL = 0.0
FTOL = 0.0
MAX_EXPANSIONS = 1100


class HerglotzError(ValueError):
    pass


@dataclass(frozen=True)
class HerglotzTriple:
    alpha: float
    beta: float
    mu: RealMeasure = RealMeasure()

    def __post_init__(self):
        if not (math.isfinite(self.alpha) and math.isfinite(self.beta)):
            raise HerglotzError("alpha and beta must be finite")
        if self.alpha < 0:
            raise HerglotzError("alpha must be >= 0")
        if self.alpha == 0 and self.mu.is_zero:
            raise HerglotzError("constant function: need alpha > 0 or a nonzero measure")

    def __call__(self, z):
        return evaluate(self, z)

    @cached_property
    def _offset(self) -> float:
        # beta minus the regularizing terms, i.e. the value of h at infinity
        # when alpha = 0
        p, m = self.mu.positions, self.mu.masses
        s = self.mu.slab_array
        parts = [self.beta, -float(np.sum(m * p / (p * p + 1)))]
        if s.size:
            a, b, c = s.T
            parts.append(-float(np.sum(0.5 * c * (np.log1p(b * b) - np.log1p(a * a)))))
        return math.fsum(parts)

    def real_values(self, x) -> np.ndarray:
        """Vectorized real values at points off the closed support (unchecked)."""
        x = np.asarray(x, dtype=float)
        out = self.alpha * x + self._offset
        p, m = self.mu.positions, self.mu.masses
        if p.size:
            out = out + np.sum(m / (p - x[..., None]), axis=-1)
        s = self.mu.slab_array
        if s.size:
            a, b, c = s.T
            xe = x[..., None]
            out = out + np.sum(c * np.log((b - xe) / (a - xe)), axis=-1)
        return out

    def real_derivative(self, x) -> np.ndarray:
        x = np.asarray(x, dtype=float)
        out = np.full(x.shape, float(self.alpha))
        p, m = self.mu.positions, self.mu.masses
        if p.size:
            out = out + np.sum(m / (p - x[..., None]) ** 2, axis=-1)
        s = self.mu.slab_array
        if s.size:
            a, b, c = s.T
            xe = x[..., None]
            out = out + np.sum(c * (b - a) / ((a - xe) * (b - xe)), axis=-1)
        return out


@dataclass(frozen=True)
class TransformedFunction:
    """``g_r(z) = (r - h(z))^{-1}``, kept lazily as ``(base, r)``."""

    base: HerglotzTriple
    r: float

    def __call__(self, z):
        return 1.0 / (self.r - evaluate(self.base, z))


def evaluate(h: HerglotzTriple, z):
    """Value of ``h`` at ``z`` (scalar or array) in the open upper half-plane."""
    zz = np.asarray(z, dtype=complex)
    if np.any(zz.imag <= 0):
        raise HerglotzError("evaluation requires Im z > 0")
    out = h.alpha * zz + h._offset
    p, m = h.mu.positions, h.mu.masses
    if p.size:
        out = out + np.sum(m / (p - zz[..., None]), axis=-1)
    s = h.mu.slab_array
    if s.size:
        a, b, c = s.T
        ze = zz[..., None]
        # (b - z)/(a - z) lies in the upper half-plane for Im z > 0, away from the cut
        out = out + np.sum(c * np.log((b - ze) / (a - ze)), axis=-1)
    return complex(out) if np.ndim(out) == 0 else out


def _check_off_support(h: HerglotzTriple, x: float) -> float:
    x = float(x)
    if not math.isfinite(x):
        raise HerglotzError("x must be finite")
    if h.mu.in_closed_support(x):
        raise HerglotzError(f"x = {x} lies in the closed support of mu")
    return x


def boundary_value(h: HerglotzTriple, x: float) -> float:
    return float(h.real_values(_check_off_support(h, x)))


def derivative(h: HerglotzTriple, x: float) -> float:
    return float(h.real_derivative(_check_off_support(h, x)))


def real_limits(h: HerglotzTriple) -> tuple[float, float]:
    """Limits of ``h(x)`` as ``x -> -inf`` and ``x -> +inf``."""
    if h.alpha > 0:
        return -math.inf, math.inf
    return h._offset, h._offset


def transform(h: HerglotzTriple, r: float) -> TransformedFunction:
    return TransformedFunction(h, float(r))


def analytic_intervals(h: HerglotzTriple) -> list[tuple[float, float]]:
    """Maximal open intervals where ``h`` is real-valued and increasing.

    Gaps lying inside a slab are dropped; ``h`` is not real there.
    """
    pts = [-math.inf, *support_partition(h.mu), math.inf]
    out = []
    for lo, hi in zip(pts, pts[1:]):
        if math.isfinite(lo) and math.isfinite(hi) and h.mu.in_open_slab(0.5 * (lo + hi)):
            continue
        out.append((lo, hi))
    return out


def _expand(h, start, rs, direction):
    """Walk away from ``start`` until ``h - r`` changes sign; returns
    (last point on the near side, first point on the far side)."""
    near = np.full(rs.shape, start)
    far = np.empty(rs.shape)
    todo = np.arange(rs.size)
    step = 1.0
    for _ in range(MAX_EXPANSIONS):
        x = start + direction * step
        val = h.real_values(np.full(todo.size, x)) - rs[todo]
        crossed = val > 0 if direction > 0 else val < 0
        far[todo[crossed]] = x
        near[todo[~crossed]] = x
        todo = todo[~crossed]
        if todo.size == 0:
            return near, far
        step *= 2.0
    raise HerglotzError("bracket expansion failed")


def solve_many(h: HerglotzTriple, rs) -> tuple[np.ndarray, np.ndarray, np.ndarray]:
    """Real solutions of ``h(x) = r`` for each ``r`` in ``rs``.

    Returns ``(positions, masses, found)``, each of shape
    ``(len(rs), n_intervals)``; column ``j`` refers to the ``j``-th interval
    of :func:`analytic_intervals` and is meaningful only where ``found``.
    """
    rs = np.atleast_1d(np.asarray(rs, dtype=float))
    ivs = analytic_intervals(h)
    nr, ni = rs.size, len(ivs)
    pos = np.full((nr, ni), np.nan)
    found = np.zeros((nr, ni), dtype=bool)
    lim = h._offset

    lo_parts, hi_parts, lo_open, hi_open, rows, cols = [], [], [], [], [], []

    def add(sel, lo, hi, lopen, hopen, j):
        k = np.flatnonzero(sel)
        lo_parts.append(np.broadcast_to(lo, k.shape).astype(float))
        hi_parts.append(np.broadcast_to(hi, k.shape).astype(float))
        lo_open.append(np.broadcast_to(lopen, k.shape))
        hi_open.append(np.broadcast_to(hopen, k.shape))
        rows.append(k)
        cols.append(np.full(k.size, j))
        found[k, j] = True

    for j, (a, b) in enumerate(ivs):
        if math.isinf(a) and math.isinf(b):
            # mu = 0, h is affine
            pos[:, j] = (rs - h.beta) / h.alpha
            found[:, j] = True
        elif math.isinf(b):
            sel = rs < lim if h.alpha == 0 else np.ones(nr, dtype=bool)
            if sel.any():
                near, far = _expand(h, a, rs[sel], +1)
                add(sel, near, far, near == a, False, j)
        elif math.isinf(a):
            sel = rs > lim if h.alpha == 0 else np.ones(nr, dtype=bool)
            if sel.any():
                near, far = _expand(h, b, rs[sel], -1)
                add(sel, far, near, False, near == b, j)
        else:
            add(np.ones(nr, dtype=bool), a, b, True, True, j)

    if rows:
        rows_a, cols_a = np.concatenate(rows), np.concatenate(cols)
        target = rs[rows_a]
        pos[rows_a, cols_a] = bisect_increasing(
            lambda x, idx: h.real_values(x) - target[idx],
            np.concatenate(lo_parts),
            np.concatenate(hi_parts),
            np.concatenate(lo_open),
            np.concatenate(hi_open),
            xtol=XTOL,
            ftol=FTOL * np.maximum(1.0, np.abs(target)),
        )
    mass = np.full((nr, ni), np.nan)
    mass[found] = 1.0 / h.real_derivative(pos[found])
    return pos, mass, found


def solve_h_equals_r(h: HerglotzTriple, r: float) -> SpectralSample:
    """Atoms of the measure of ``(r - h)^{-1}``: roots of ``h = r`` with mass ``1/h'``."""
    pos, mass, found = solve_many(h, [r])
    f = found[0]
    return SpectralSample(float(r), tuple(zip(pos[0, f].tolist(), mass[0, f].tolist())))


def nu_to_h(nu: RealMeasure) -> HerglotzTriple:
    """Triple of ``h = -1/F`` where ``F(z) = int dnu(l)/(l - z)``, ``nu`` atomic."""
    if not nu.is_atomic or not nu.atoms:
        raise HerglotzError("nu must be purely atomic with at least one atom")
    d, w = nu.positions, nu.masses
    n = d.size
    atoms = []
    if n > 1:
        gaps = np.arange(n - 1)
        rel = d[None, :] - d[gaps][:, None]

        def F(delta, idx):
            return np.sum(w / (rel[idx] - delta[:, None]), axis=1)

        delta = bisect_increasing(
            F,
            np.zeros(n - 1),
            np.diff(d),
            np.ones(n - 1, dtype=bool),
            np.ones(n - 1, dtype=bool),
            xtol=XTOL,
            ftol=np.full(n - 1, FTOL),
        )
        zeros = d[gaps] + delta
        fprime = np.sum(w / (rel - delta[:, None]) ** 2, axis=1)
        atoms = list(zip(zeros.tolist(), (1.0 / fprime).tolist()))
    Fi = complex(np.sum(w / (d - 1j)))
    beta = (-1.0 / Fi).real
    return HerglotzTriple(1.0 / total_mass(nu), beta, make_measure(atoms))


def h_to_nu(h: HerglotzTriple) -> RealMeasure:
    """Measure of ``-1/h``; requires ``alpha > 0`` and atomic ``mu``."""
    if h.alpha <= 0:
        raise HerglotzError("alpha must be > 0 for a finite operator model")
    if not h.mu.is_atomic:
        raise HerglotzError("mu must be purely atomic for a finite operator model")
    return make_measure(solve_h_equals_r(h, 0.0).atoms)

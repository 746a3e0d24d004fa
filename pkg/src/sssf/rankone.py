"""Finite rank-one operator model ``H_r = H_0 + r v v*`` with ``H_0`` diagonal.

The quadratic form ``F_r(z) = <(H_r - z)^{-1} v, v>`` is computed by a
dense solve; eigenvalues and spectral weights of ``H_r`` come from the
secular equation ``1 + r sum v_j^2 / (d_j - x) = 0``.
"""
from __future__ import annotations

import math
from dataclasses import dataclass
from functools import cached_property

import numpy as np

from ._bisect import bisect_increasing
from .measure import RealMeasure, make_measure

#: distance to the spectrum below which the resolvent is considered singular
POLE_TOL = 1e-14


class PoleError(ZeroDivisionError):
    """The point is (numerically) an eigenvalue / pole."""


@dataclass(frozen=True)
class SpectralSample:
    """Atoms of the singular measure of ``(r - h)^{-1}`` at a fixed coupling ``r``."""

    r: float
    atoms: tuple[tuple[float, float], ...]

    def __post_init__(self):
        prev = -math.inf
        for p, m in self.atoms:
            if not p > prev:
                raise ValueError("sample positions must be strictly increasing")
            if not m > 0:
                raise ValueError(f"non-positive mass {m} at {p}")
            prev = p

    @property
    def positions(self) -> np.ndarray:
        return np.array([p for p, _ in self.atoms], dtype=float)

    @property
    def masses(self) -> np.ndarray:
        return np.array([m for _, m in self.atoms], dtype=float)

    def total_mass(self) -> float:
        return math.fsum(m for _, m in self.atoms)

    def to_measure(self) -> RealMeasure:
        return make_measure(self.atoms)


@dataclass(frozen=True)
class RankOneModel:
    """Diagonal ``H_0 = diag(d)`` and cyclic vector ``v`` (``V = v v*``)."""

    d: tuple[float, ...]
    v: tuple[float, ...]

    def __post_init__(self):
        if len(self.d) != len(self.v) or not self.d:
            raise ValueError("d and v must be non-empty and of equal length")
        if any(not b > a for a, b in zip(self.d, self.d[1:])):
            raise ValueError("d must be strictly increasing (simple spectrum)")
        if any(not (x > 0 and math.isfinite(x)) for x in self.v):
            raise ValueError("v entries must be positive and finite")
        if any(not math.isfinite(x) for x in self.d):
            raise ValueError("d entries must be finite")

    @property
    def n(self) -> int:
        return len(self.d)

    @cached_property
    def d_array(self) -> np.ndarray:
        return np.array(self.d, dtype=float)

    @cached_property
    def w(self) -> np.ndarray:
        """Squared weights ``v_j^2``, the masses of the measure of ``V``."""
        return np.array(self.v, dtype=float) ** 2

    @property
    def trace_v(self) -> float:
        return math.fsum(self.w)

    def matrix(self, r: float) -> np.ndarray:
        v = np.array(self.v, dtype=float)
        return np.diag(self.d_array) + r * np.outer(v, v)

    def to_measure(self) -> RealMeasure:
        return make_measure(zip(self.d, self.w))


def build_model(nu: RealMeasure) -> RankOneModel:
    if not nu.is_atomic:
        raise ValueError("operator model needs a purely atomic measure")
    if not nu.atoms:
        raise ValueError("operator model needs at least one atom")
    return RankOneModel(
        d=tuple(p for p, _ in nu.atoms),
        v=tuple(math.sqrt(m) for _, m in nu.atoms),
    )


def resolvent_form(m: RankOneModel, r: float, z: complex) -> complex:
    """``Tr(R_z(H_r) V) = <(H_r - z)^{-1} v, v>`` by a direct linear solve."""
    z = complex(z)
    if abs(z.imag) < POLE_TOL:
        if r >= 0:
            eig = secular_eigen(m, r).positions
        else:
            eig = np.linalg.eigvalsh(m.matrix(r))
        if np.min(np.abs(eig - z.real)) < POLE_TOL:
            raise PoleError(f"z = {z} is an eigenvalue of H_r")
    v = np.array(m.v, dtype=float)
    a = m.matrix(r).astype(complex)
    a[np.diag_indices(m.n)] -= z
    try:
        x = np.linalg.solve(a, v.astype(complex))
    except np.linalg.LinAlgError:
        raise PoleError(f"H_r - z is singular at z = {z}") from None
    return complex(np.dot(v, x))


def krein_transform(Fz: complex, r: float) -> complex:
    """Rank-one update of the quadratic form: ``F / (1 + r F)``."""
    den = 1 + r * Fz
    if abs(den) < 1e-300:
        raise PoleError("1 + r F(z) vanishes")
    return Fz / den


def _secular_roots(m: RankOneModel, rs: np.ndarray) -> tuple[np.ndarray, np.ndarray]:
    """Eigenvalues and weights of ``H_r`` for every ``r > 0`` in ``rs``.

    Returns arrays of shape ``(len(rs), n)``. Each root is located as an
    offset from the pole at the left end of its interval, which keeps full
    relative accuracy for roots hugging an unperturbed eigenvalue.
    """
    d, w = m.d_array, m.w
    n = m.n
    rs = np.asarray(rs, dtype=float)
    nr = rs.size
    # problem k = (i, j): coupling rs[i], root in interval j
    left = np.tile(np.arange(n), nr)
    rr = np.repeat(rs, n)
    width = np.empty(n)
    width[:-1] = np.diff(d)
    # 1 + r*sum w/(d - x) >= 0 once x - d_n >= r Tr V
    top = rr * m.trace_v
    hi = np.where(left == n - 1, top, width[left])
    hi_open = left < n - 1
    # d_i - d_j per problem row, minus the offset gives d_i - x
    rel = d[None, :] - d[left][:, None]

    def residual(delta, idx):
        return 1.0 + rr[idx] * np.sum(w / (rel[idx] - delta[:, None]), axis=1)

    delta = bisect_increasing(
        residual,
        np.zeros(left.size),
        hi,
        lo_open=np.ones(left.size, dtype=bool),
        hi_open=hi_open,
        # to floating-point resolution: eigenvalues double as pole locations
        xtol=0.0,
        ftol=np.zeros(left.size),
    )
    lam = d[left] + delta
    dprime = np.sum(w / (rel - delta[:, None]) ** 2, axis=1)
    mass = 1.0 / (rr**2 * dprime)
    return lam.reshape(nr, n), mass.reshape(nr, n)


def secular_eigen_many(m: RankOneModel, rs) -> tuple[np.ndarray, np.ndarray]:
    """Batch form of :func:`secular_eigen`: position and mass arrays ``(len(rs), n)``."""
    rs = np.asarray(rs, dtype=float)
    if np.any(rs < 0):
        raise ValueError("secular solver requires r >= 0")
    lam = np.empty((rs.size, m.n))
    mass = np.empty((rs.size, m.n))
    zero = rs == 0
    lam[zero] = m.d_array
    mass[zero] = m.w
    if (~zero).any():
        lam[~zero], mass[~zero] = _secular_roots(m, rs[~zero])
    return lam, mass


def secular_eigen(m: RankOneModel, r: float) -> SpectralSample:
    lam, mass = secular_eigen_many(m, [r])
    return SpectralSample(float(r), tuple(zip(lam[0].tolist(), mass[0].tolist())))


def spectral_measure_on_set(
    s: SpectralSample, lo: float = -math.inf, hi: float = math.inf
) -> float:
    """Mass of the sample in the half-open interval ``[lo, hi)``."""
    return math.fsum(m for p, m in s.atoms if lo <= p < hi)

"""Stieltjes inversion: measure data of a Herglotz function from its values
on horizontal lines ``Im z = eps``, extrapolated to ``eps -> 0``.

Any callable ``g(z)`` defined on the upper half-plane is accepted, e.g. a
:class:`~sssf.herglotz.HerglotzTriple` or a transformed function.
"""
from __future__ import annotations

import math
from dataclasses import dataclass

import numpy as np

ALPHA_NEG_TOL = 1e-9


class RecoveryError(ValueError):
    pass


@dataclass(frozen=True)
class EpsSchedule:
    """``eps_k = 2**-k`` for ``k_min <= k <= k_max``; the last ``fit_points``
    values are fitted by ``a + c eps**2``."""

    k_min: int = 10
    k_max: int = 40
    fit_points: int = 5

    def __post_init__(self):
        if not self.k_min < self.k_max:
            raise ValueError("k_min must be smaller than k_max")
        if self.fit_points < 2:
            raise ValueError("need at least two points to extrapolate")

    @property
    def eps(self) -> np.ndarray:
        return 2.0 ** -np.arange(self.k_min, self.k_max + 1, dtype=float)


DEFAULT_SCHEDULE = EpsSchedule()


def _extrapolate(eps: np.ndarray, values: np.ndarray, npts: int) -> float:
    if not np.all(np.isfinite(values)):
        raise RecoveryError("non-finite boundary value")
    e2, y = eps[-npts:] ** 2, values[-npts:]
    A = np.column_stack([np.ones_like(e2), e2])
    coef, *_ = np.linalg.lstsq(A, y, rcond=None)
    return float(coef[0])


def _values(g, z) -> np.ndarray:
    out = np.array([complex(g(complex(zk))) for zk in z])
    if not np.all(np.isfinite(out)):
        raise RecoveryError("non-finite value of g")
    return out


def ac_density_estimate(g, lam: float, s: EpsSchedule = DEFAULT_SCHEDULE) -> float:
    """Density of the absolutely continuous part at ``lam``: ``lim Im g(lam + i eps) / pi``."""
    eps = s.eps
    vals = _values(g, lam + 1j * eps).imag / math.pi
    return _extrapolate(eps, vals, s.fit_points)


def atom_mass_estimate(g, lam: float, s: EpsSchedule = DEFAULT_SCHEDULE) -> float:
    """Mass of the atom at ``lam``: ``lim eps Im g(lam + i eps)`` (0 if no atom)."""
    eps = s.eps
    vals = eps * _values(g, lam + 1j * eps).imag
    return _extrapolate(eps, vals, s.fit_points)


def recover_alpha(g, s: EpsSchedule = DEFAULT_SCHEDULE) -> float:
    """``lim Im g(iy) / y`` as ``y -> inf``, sampled at ``y = 1/eps``."""
    eps = s.eps
    y = 1.0 / eps
    vals = _values(g, 1j * y).imag / y
    alpha = _extrapolate(eps, vals, s.fit_points)
    if alpha < -ALPHA_NEG_TOL:
        raise RecoveryError(f"negative linear coefficient {alpha}: not a Herglotz function")
    return max(alpha, 0.0)


def recover_beta(g) -> float:
    """``Re g(i)``; the regularized kernel is purely imaginary at ``z = i``."""
    return complex(g(1j)).real

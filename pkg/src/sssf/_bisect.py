"""Vectorized bisection for batches of increasing scalar functions."""
from __future__ import annotations

from typing import Callable

import numpy as np

MAX_ITER = 200


class BisectionError(RuntimeError):
    """Raised when bisection does not terminate; indicates a bracketing bug."""


def bisect_increasing(
    func: Callable[[np.ndarray, np.ndarray], np.ndarray],
    lo: np.ndarray,
    hi: np.ndarray,
    lo_open: np.ndarray,
    hi_open: np.ndarray,
    xtol: float,
    ftol: np.ndarray,
) -> np.ndarray:
    """Find ``x`` in ``(lo, hi)`` with ``func(x, idx) == 0`` for every element.

    ``func(x, idx)`` evaluates the residual of problems ``idx`` at points ``x``;
    it must be increasing, negative near ``lo`` and positive near ``hi``.
    ``lo_open``/``hi_open`` flag endpoints that are poles or otherwise not
    admissible as answers (they are never evaluated).

    Each element stops once the bracket is narrower than ``xtol`` and the
    residual is below its ``ftol``, or when the bracket can no longer be
    split in floating point.
    """
    lo = np.array(lo, dtype=float)
    hi = np.array(hi, dtype=float)
    lo_moved = ~np.asarray(lo_open, dtype=bool)
    hi_moved = ~np.asarray(hi_open, dtype=bool)
    ftol = np.broadcast_to(np.asarray(ftol, dtype=float), lo.shape)
    out = np.empty_like(lo)
    active = np.arange(lo.size)
    stalled_idx = []

    for _ in range(MAX_ITER):
        if active.size == 0:
            break
        a, b = lo[active], hi[active]
        mid = a + 0.5 * (b - a)
        stalled = (mid <= a) | (mid >= b)
        res = np.zeros_like(mid)
        ok = ~stalled
        res[ok] = func(mid[ok], active[ok])
        finished = ok & (((b - a) <= xtol) & (np.abs(res) <= ftol[active]) | (res == 0))
        out[active[finished]] = mid[finished]
        stalled_idx.append(active[stalled])

        step = ok & ~finished
        neg = step & (res < 0)
        pos = step & (res > 0)
        lo[active[neg]] = mid[neg]
        lo_moved[active[neg]] = True
        hi[active[pos]] = mid[pos]
        hi_moved[active[pos]] = True
        active = active[step]
    else:
        if active.size:
            raise BisectionError(
                f"bisection did not converge in {MAX_ITER} iterations "
                f"for {active.size} problem(s)"
            )

    stalled = np.concatenate(stalled_idx) if stalled_idx else np.empty(0, int)
    if stalled.size:
        s_lo, s_hi = lo[stalled], hi[stalled]
        pick_hi = ~lo_moved[stalled]
        pick_lo = ~hi_moved[stalled] & ~pick_hi
        both = ~pick_hi & ~pick_lo
        choice = np.where(pick_hi, s_hi, s_lo)
        if both.any():
            idx = stalled[both]
            r_lo = np.abs(func(s_lo[both], idx))
            r_hi = np.abs(func(s_hi[both], idx))
            choice[both] = np.where(r_hi < r_lo, s_hi[both], s_lo[both])
        out[stalled] = choice
    return out

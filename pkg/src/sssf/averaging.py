"""Averaging the singular measures of ``(r - h)^{-1}`` over ``r`` in ``[0, 1]``.

The averaged measure is discretized with the midpoint rule in ``r`` and
histogrammed in ``lambda``. Its density should be the indicator of
``{lambda : 0 < h(lambda) < 1}`` off the support of ``mu_h``; by the change of
variables ``r = h(lambda)`` each branch of roots deposits density exactly 1
while ``r`` sweeps ``(0, 1)``.
"""
from __future__ import annotations

import logging
import math
import os
from concurrent.futures import ThreadPoolExecutor
from dataclasses import asdict, dataclass, field
from typing import Optional, Union

import numpy as np

from .herglotz import HerglotzTriple, HerglotzError, h_to_nu, nu_to_h, solve_h_equals_r, solve_many
from .measure import support_partition
from .rankone import RankOneModel, build_model, secular_eigen, secular_eigen_many

log = logging.getLogger(__name__)

Model = Union[HerglotzTriple, RankOneModel]

#: r-samples per work unit; fixed so that results never depend on worker count
CHUNK = 512
BACKENDS = ("root", "secular")


@dataclass(frozen=True)
class SweepConfig:
    n_r: int = 10_000
    lam_lo: float = -1.0
    lam_hi: float = 2.0
    n_bins: int = 400
    backend: Optional[str] = None  # None: secular for operator models, root otherwise

    def __post_init__(self):
        if self.n_r < 1:
            raise ValueError("n_r must be >= 1")
        if self.n_bins < 1:
            raise ValueError("n_bins must be >= 1")
        if not (math.isfinite(self.lam_lo) and math.isfinite(self.lam_hi)):
            raise ValueError("window must be finite")
        if not self.lam_lo < self.lam_hi:
            raise ValueError(f"empty window [{self.lam_lo}, {self.lam_hi})")
        if self.backend is not None and self.backend not in BACKENDS:
            raise ValueError(f"unknown backend {self.backend!r}")

    @property
    def bin_width(self) -> float:
        return (self.lam_hi - self.lam_lo) / self.n_bins

    def r_samples(self) -> np.ndarray:
        k = np.arange(1, self.n_r + 1, dtype=float)
        return (2 * k - 1) / (2 * self.n_r)


@dataclass(frozen=True, eq=False)
class DensityGrid:
    """Histogram density on bins ``[lambda_min + i w, lambda_min + (i+1) w)``.

    ``total_mass`` is the averaged mass of all atoms, including the ones
    that fell outside the window.
    """

    lambda_min: float
    bin_width: float
    values: np.ndarray
    total_mass: float = math.nan

    @property
    def n_bins(self) -> int:
        return self.values.size

    @property
    def edges(self) -> np.ndarray:
        return self.lambda_min + self.bin_width * np.arange(self.n_bins + 1)

    @property
    def centers(self) -> np.ndarray:
        return self.lambda_min + self.bin_width * (np.arange(self.n_bins) + 0.5)

    def integral(self) -> float:
        return math.fsum(self.values * self.bin_width)


def worker_count() -> int:
    env = os.environ.get("HERGLOTZ_THREADS")
    if env:
        try:
            n = int(env)
        except ValueError:
            raise ValueError(f"HERGLOTZ_THREADS must be an integer, got {env!r}") from None
        return max(1, n)
    return os.cpu_count() or 1


def as_triple(model: Model) -> HerglotzTriple:
    if isinstance(model, RankOneModel):
        return nu_to_h(model.to_measure())
    return model


def as_operator(model: Model) -> RankOneModel:
    if isinstance(model, RankOneModel):
        return model
    try:
        return build_model(h_to_nu(model))
    except HerglotzError as exc:
        raise ValueError(f"secular backend needs a finite operator model: {exc}") from None


def _sampler(model: Model, backend: Optional[str]):
    """Return ``f(rs) -> (positions, masses)`` flattened over all atoms."""
    if backend is None:
        backend = "secular" if isinstance(model, RankOneModel) else "root"
    if backend == "secular":
        op = as_operator(model)

        def sample(rs):
            lam, mass = secular_eigen_many(op, rs)
            return lam.ravel(), mass.ravel()

    else:
        h = as_triple(model)

        def sample(rs):
            pos, mass, found = solve_many(h, rs)
            return pos[found], mass[found]

    return sample


def sweep(model: Model, cfg: SweepConfig, workers: Optional[int] = None) -> DensityGrid:
    """Histogram of ``(1/n_r) sum_k mu_{r_k}^(s)`` with midpoint samples ``r_k``."""
    sample = _sampler(model, cfg.backend)
    rs = cfg.r_samples()
    lo, bw, nb = cfg.lam_lo, cfg.bin_width, cfg.n_bins
    chunks = [rs[i : i + CHUNK] for i in range(0, rs.size, CHUNK)]

    def work(chunk):
        pos, mass = sample(chunk)
        idx = np.floor((pos - lo) / bw)
        inside = (idx >= 0) & (idx < nb)
        hist = np.bincount(idx[inside].astype(np.int64), weights=mass[inside], minlength=nb)
        return hist, float(np.sum(mass))

    workers = workers or worker_count()
    if workers > 1 and len(chunks) > 1:
        with ThreadPoolExecutor(max_workers=workers) as ex:
            parts = list(ex.map(work, chunks))
    else:
        parts = [work(c) for c in chunks]

    # merged in ascending-r order regardless of scheduling
    hist = np.zeros(nb)
    total = 0.0
    for h_part, t_part in parts:
        hist += h_part
        total += t_part
    scale = 1.0 / (cfg.n_r * bw)
    return DensityGrid(lo, bw, hist * scale, total / cfg.n_r)


def oracle_density(h: HerglotzTriple, lam: float) -> int:
    """Limit density of the averaged measure at ``lam``: 1 iff ``0 < h(lam) < 1``."""
    if h.mu.in_closed_support(lam):
        raise HerglotzError(f"oracle undefined on the support of mu (lambda = {lam})")
    val = float(h.real_values(float(lam)))
    return int(0.0 < val < 1.0)


def jump_points(h: HerglotzTriple) -> list[float]:
    """Points where the limit density may change: roots of ``h = 0``,
    roots of ``h = 1`` and the support breakpoints of ``mu_h``."""
    pts = [p for p, _ in solve_h_equals_r(h, 0.0).atoms]
    pts += [p for p, _ in solve_h_equals_r(h, 1.0).atoms]
    pts += support_partition(h.mu)
    return sorted(set(pts))


def indicator_measure(h: HerglotzTriple, lo: float, hi: float) -> float:
    """Lebesgue measure of ``{lam in [lo, hi) : oracle = 1}``, exact up to root accuracy."""
    cuts = [lo] + [p for p in jump_points(h) if lo < p < hi] + [hi]
    total = []
    for a, b in zip(cuts, cuts[1:]):
        mid = 0.5 * (a + b)
        if b > a and not h.mu.in_closed_support(mid) and oracle_density(h, mid):
            total.append(b - a)
    return math.fsum(total)


@dataclass(frozen=True)
class CompareReport:
    l1_error: float
    sup_error_off_jumps: float
    mass_check: float


def compare(grid: DensityGrid, h: HerglotzTriple) -> CompareReport:
    centers = grid.centers
    w = grid.bin_width
    jumps = np.array(jump_points(h))
    on_support = np.array([h.mu.in_closed_support(c) for c in centers], dtype=bool)
    oracle = np.zeros(grid.n_bins)
    off = ~on_support
    vals = h.real_values(centers[off])
    oracle[off] = ((vals > 0) & (vals < 1)).astype(float)
    err = np.abs(grid.values - oracle)

    l1 = math.fsum(err[off] * w)
    if jumps.size:
        dist = np.min(np.abs(centers[:, None] - jumps[None, :]), axis=1)
        far = off & (dist > 2 * w)
    else:
        far = off
    sup = float(np.max(err[far])) if far.any() else 0.0
    expected = indicator_measure(h, grid.lambda_min, grid.lambda_min + w * grid.n_bins)
    return CompareReport(l1, sup, abs(grid.integral() - expected))


def backend_discrepancy(model: Model, rs) -> tuple[float, float]:
    """Max position and mass differences between the two spectral backends."""
    op = as_operator(model)
    h = as_triple(model)
    lam, mass = secular_eigen_many(op, rs)
    dpos = dmass = 0.0
    for i, r in enumerate(np.asarray(rs, dtype=float)):
        s = solve_h_equals_r(h, r)
        if len(s.atoms) != op.n:
            return math.inf, math.inf
        dpos = max(dpos, float(np.max(np.abs(s.positions - lam[i]))))
        dmass = max(dmass, float(np.max(np.abs(s.masses - mass[i]))))
    return dpos, dmass


def default_window(model: Model) -> tuple[float, float]:
    """Window holding every atom for ``r`` in ``[0, 1]`` (operator models), or
    all jump points with unit margins otherwise."""
    try:
        op = as_operator(model)
    except ValueError:
        pts = jump_points(model)
        return min(pts) - 1.0, max(pts) + 1.0
    return op.d[0] - 1.0, op.d[-1] + op.trace_v + 1.0


def default_config(model: Model, n_r: int = 10_000, n_bins: int = 400, backend=None) -> SweepConfig:
    lo, hi = default_window(model)
    return SweepConfig(n_r=n_r, lam_lo=lo, lam_hi=hi, n_bins=n_bins, backend=backend)


@dataclass(frozen=True)
class Verdict:
    passed: bool
    l1_error: float
    sup_error_off_jumps: float
    mass_check: float
    tol_sup: float
    tol_l1: float
    tol_mass: float
    n_r: int
    n_bins: int
    lam_lo: float
    lam_hi: float
    total_mass: float
    integrated_mass: float
    backend_position_diff: Optional[float] = None
    backend_mass_diff: Optional[float] = None
    failures: tuple[str, ...] = field(default=())

    def to_dict(self) -> dict:
        d = asdict(self)
        d["failures"] = list(self.failures)
        return d


def theorem_check(
    model: Model,
    cfg: Optional[SweepConfig] = None,
    tol_sup: float = 0.05,
    tol_l1: float = 0.02,
    tol_mass: float = 0.01,
    workers: Optional[int] = None,
) -> Verdict:
    """Sweep, compare against the 0/1 oracle and cross-check the backends.

    The verdict passes iff all three comparison metrics are within tolerance;
    a failing verdict is returned, not raised.
    """
    cfg = cfg or default_config(model)
    h = as_triple(model)
    grid = sweep(model, cfg, workers=workers)
    rep = compare(grid, h)

    dpos = dmass = None
    try:
        dpos, dmass = backend_discrepancy(model, cfg.r_samples()[:: max(1, cfg.n_r // 8)])
    except ValueError:
        log.debug("no operator model; backend cross-check skipped")

    failures = []
    if not rep.sup_error_off_jumps <= tol_sup:
        failures.append("sup")
    if not rep.l1_error <= tol_l1:
        failures.append("l1")
    if not rep.mass_check <= tol_mass:
        failures.append("mass")
    return Verdict(
        passed=not failures,
        l1_error=rep.l1_error,
        sup_error_off_jumps=rep.sup_error_off_jumps,
        mass_check=rep.mass_check,
        tol_sup=tol_sup,
        tol_l1=tol_l1,
        tol_mass=tol_mass,
        n_r=cfg.n_r,
        n_bins=cfg.n_bins,
        lam_lo=cfg.lam_lo,
        lam_hi=cfg.lam_hi,
        total_mass=grid.total_mass,
        integrated_mass=grid.integral(),
        backend_position_diff=dpos,
        backend_mass_diff=dmass,
        failures=tuple(failures),
    )

import math

import numpy as np
import pytest

from sssf.averaging import (
    DensityGrid,
    SweepConfig,
    compare,
    default_config,
    indicator_measure,
    jump_points,
    oracle_density,
    sweep,
    theorem_check,
)
from sssf.herglotz import HerglotzError, HerglotzTriple
from sssf.measure import make_measure
from sssf.rankone import build_model

from conftest import random_atomic_triple, random_model

PHI = (1 + math.sqrt(5)) / 2
PSI = (1 - math.sqrt(5)) / 2


@pytest.fixture
def two_band(two_atom_nu):
    return build_model(two_atom_nu)


def test_sweep_config_validation():
    with pytest.raises(ValueError):
        SweepConfig(10, 2.0, 1.0, 4)
    with pytest.raises(ValueError):
        SweepConfig(0, 0.0, 1.0, 4)
    with pytest.raises(ValueError):
        SweepConfig(10, 0.0, 1.0, 4, backend="dense")
    assert SweepConfig(4, 0, 1, 4).r_samples() == pytest.approx([1 / 8, 3 / 8, 5 / 8, 7 / 8])


def test_sweep_identity(h_z):
    grid = sweep(h_z, SweepConfig(4, 0.0, 1.0, 4))
    assert grid.values == pytest.approx([1, 1, 1, 1], abs=1e-12)
    far = sweep(h_z, SweepConfig(4, 2.0, 3.0, 7))
    assert np.all(far.values == 0)
    assert far.total_mass == pytest.approx(1.0)


def test_sweep_two_band(two_band):
    cfg = SweepConfig(20_000, -1.2, 1.8, 300)
    grid = sweep(two_band, cfg)
    c, w = grid.centers, grid.bin_width
    # branches of x^2 - r x - 1 = 0 sweep (-1, psi) and (1, phi) as r runs over (0, 1)
    inside = ((c > -1 + 2 * w) & (c < PSI - 2 * w)) | ((c > 1 + 2 * w) & (c < PHI - 2 * w))
    outside = ((c < -1 - 2 * w) | (c > PHI + 2 * w)) | ((c > PSI + 2 * w) & (c < 1 - 2 * w))
    assert np.allclose(grid.values[inside], 1.0, atol=0.02)
    assert np.all(grid.values[outside] == 0)
    assert np.all(grid.values >= 0)


def test_sweep_backend_mismatch():
    slab = HerglotzTriple(1.0, 0.0, make_measure([], [(0, 1, 1)]))
    with pytest.raises(ValueError):
        sweep(slab, SweepConfig(10, 0, 1, 4, backend="secular"))
    with pytest.raises(ValueError):
        sweep(HerglotzTriple(0, 0, make_measure([(0, 1)])), SweepConfig(10, 0, 1, 4, backend="secular"))


@pytest.mark.parametrize("lam, expected", [(0.5, 1), (2.0, 0)])
def test_oracle_identity(h_z, lam, expected):
    assert oracle_density(h_z, lam) == expected


def test_oracle_examples(h_z_minus_inv):
    assert oracle_density(h_z_minus_inv, 1.3) == 1
    assert oracle_density(h_z_minus_inv, 0.5) == 0
    with pytest.raises(HerglotzError):
        oracle_density(h_z_minus_inv, 0.0)


def test_oracle_matches_change_of_variables(rng):
    """Density 1 exactly where a branch lambda(r), r in (0, 1), passes."""
    for _ in range(10):
        h = random_atomic_triple(rng)
        grid = sweep(h, SweepConfig(20_000, -6, 6, 120))
        rep = compare(grid, h)
        assert rep.sup_error_off_jumps <= 0.05


def test_jump_points(h_z, h_z_minus_inv, h_minus_inv):
    assert jump_points(h_z) == [0.0, 1.0]
    expected = [-1, PSI, 0, 1, PHI]
    got = jump_points(h_z_minus_inv)
    assert len(got) == 5
    assert np.allclose(got, expected, atol=1e-12)
    assert np.allclose(jump_points(h_minus_inv), [-1, 0], atol=1e-12)


def test_compare_exact_grid(h_z):
    lo, n = -0.5, 100
    w = 2.0 / n
    centers = lo + w * (np.arange(n) + 0.5)
    values = np.array([oracle_density(h_z, c) for c in centers], dtype=float)
    rep = compare(DensityGrid(lo, w, values), h_z)
    assert rep.l1_error == 0
    assert rep.sup_error_off_jumps == 0
    assert rep.mass_check == pytest.approx(0, abs=1e-12)


def test_compare_identity_sweep(h_z):
    rep = compare(sweep(h_z, SweepConfig(10_000, -0.5, 1.5, 100)), h_z)
    assert rep.l1_error < 1e-3


def test_compare_two_band_mass(two_band, h_z_minus_inv):
    grid = sweep(two_band, SweepConfig(10_000, -2.0, 3.0, 400))
    assert grid.integral() == pytest.approx(1.0, rel=0.01)
    assert compare(grid, h_z_minus_inv).mass_check <= 0.01


def test_theorem_check_verdicts(h_z, two_band):
    v = theorem_check(h_z)
    assert v.passed, v
    v = theorem_check(two_band)
    assert v.passed, v
    assert v.backend_position_diff <= 1e-9 and v.backend_mass_diff <= 1e-8
    bad = theorem_check(two_band, default_config(two_band, n_r=10), tol_sup=0.01, tol_l1=0.001, tol_mass=1e-6)
    assert not bad.passed
    assert bad.failures


def test_refinement_reduces_l1(h_z, h_z_minus_inv, two_band):
    # windows deliberately not aligned with the r-grid, else both errors vanish
    for model, h, window in [(h_z, h_z, (-0.37, 1.41)), (two_band, h_z_minus_inv, (-1.53, 2.07))]:
        coarse = compare(sweep(model, SweepConfig(100, *window, 100)), h).l1_error
        fine = compare(sweep(model, SweepConfig(10_000, *window, 100)), h).l1_error
        assert fine < coarse


def test_backend_agreement(rng):
    for _ in range(5):
        m = random_model(rng, max_n=10)
        cfg = default_config(m, n_r=2_000, n_bins=200)
        a = sweep(m, SweepConfig(cfg.n_r, cfg.lam_lo, cfg.lam_hi, cfg.n_bins, "secular"))
        b = sweep(m, SweepConfig(cfg.n_r, cfg.lam_lo, cfg.lam_hi, cfg.n_bins, "root"))
        assert np.max(np.abs(a.values - b.values)) <= 1e-8


def test_integrated_density_is_lebesgue_measure(rng):
    for _ in range(5):
        h = random_atomic_triple(rng, alpha_zero_prob=0.0)
        pts = jump_points(h)
        lo, hi = pts[0] - 1, pts[-1] + 1
        # brute force measure of {0 < h < 1} by fine sampling
        x = np.linspace(lo, hi, 2_000_001)
        with np.errstate(divide="ignore", invalid="ignore"):
            v = h.real_values(x)
        brute = np.mean((v > 0) & (v < 1)) * (hi - lo)
        assert indicator_measure(h, lo, hi) == pytest.approx(brute, abs=1e-4)
        grid = sweep(h, SweepConfig(10_000, lo, hi, 300))
        assert grid.integral() == pytest.approx(brute, abs=1e-3 * max(1, brute))


def test_slab_model(rng):
    h = HerglotzTriple(1.0, -0.5, make_measure([(2.0, 0.5)], [(-1.0, 0.0, 0.8)]))
    grid = sweep(h, SweepConfig(20_000, -3, 4, 140))
    c = grid.centers
    # no singular mass inside the slab
    assert np.all(grid.values[(c > -1) & (c < 0)] == 0)
    rep = compare(grid, h)
    assert rep.sup_error_off_jumps <= 0.05
    assert rep.mass_check <= 0.01


@pytest.mark.parametrize("workers", [2, 3, 8])
def test_deterministic_across_workers(rng, workers):
    m = random_model(rng, n=12)
    cfg = default_config(m, n_r=5_000, n_bins=300)
    a = sweep(m, cfg, workers=1)
    b = sweep(m, cfg, workers=workers)
    assert a.values.tobytes() == b.values.tobytes()
    assert a.total_mass == b.total_mass

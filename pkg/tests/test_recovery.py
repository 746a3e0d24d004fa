import math

import numpy as np
import pytest

from sssf.herglotz import HerglotzTriple, solve_h_equals_r, transform
from sssf.measure import make_measure
from sssf.recovery import (
    EpsSchedule,
    RecoveryError,
    ac_density_estimate,
    atom_mass_estimate,
    recover_alpha,
    recover_beta,
)

from conftest import random_atomic_triple

PHI = (1 + math.sqrt(5)) / 2


def test_schedule():
    s = EpsSchedule()
    assert s.eps[0] == 2.0**-10 and s.eps[-1] == 2.0**-40
    assert np.all(np.diff(s.eps) < 0)
    with pytest.raises(ValueError):
        EpsSchedule(5, 5)


def test_ac_density_examples(h_z_minus_inv):
    slab = HerglotzTriple(0, 0, make_measure([], [(0, 1, 1)]))
    assert ac_density_estimate(slab, 0.5) == pytest.approx(1.0, abs=1e-6)
    assert ac_density_estimate(h_z_minus_inv, 3.0) == pytest.approx(0.0, abs=1e-8)
    assert ac_density_estimate(transform(HerglotzTriple(1, 0), 0.5), 2.0) == pytest.approx(0.0, abs=1e-8)


def test_ac_density_slab_heights():
    h = HerglotzTriple(0.5, 1, make_measure([(0.2, 1)], [(-2, -1, 0.3), (0, 1, 2.5)]))
    assert ac_density_estimate(h, -1.5) == pytest.approx(0.3, abs=1e-6)
    assert ac_density_estimate(h, 0.7) == pytest.approx(2.5, abs=1e-6)
    assert ac_density_estimate(h, 3.0) == pytest.approx(0.0, abs=1e-8)


def test_ac_density_nonnegative(rng):
    for _ in range(10):
        h = random_atomic_triple(rng)
        g = transform(h, rng.uniform(-1, 1))
        for lam in rng.uniform(-6, 6, 10):
            assert ac_density_estimate(h, lam) >= -1e-9
            assert ac_density_estimate(g, lam) >= -1e-9


def test_atom_mass_examples(h_z_minus_inv):
    assert atom_mass_estimate(transform(HerglotzTriple(1, 0), 0.3), 0.3) == pytest.approx(1.0, abs=1e-12)
    # residue 1/h'(phi) for h = z - 1/z at r = 1
    expected = 1 / (1 + 1 / PHI**2)
    assert atom_mass_estimate(transform(h_z_minus_inv, 1.0), PHI) == pytest.approx(expected, abs=1e-6)
    assert expected == pytest.approx(0.7236068, abs=1e-7)
    assert atom_mass_estimate(transform(h_z_minus_inv, 1.0), 0.3) == pytest.approx(0.0, abs=1e-8)


@pytest.mark.parametrize(
    "h, alpha, beta",
    [
        (HerglotzTriple(2, 3), 2.0, 3.0),
        (HerglotzTriple(1, 0, make_measure([(0, 1)])), 1.0, 0.0),
        (HerglotzTriple(0, 0, make_measure([(0, 1)])), 0.0, 0.0),
    ],
)
def test_recover_alpha_beta(h, alpha, beta):
    assert recover_alpha(h) == pytest.approx(alpha, abs=1e-9)
    assert recover_beta(h) == pytest.approx(beta, abs=1e-15)


def test_recover_alpha_rejects_non_herglotz():
    with pytest.raises(RecoveryError):
        recover_alpha(lambda z: -z)


def test_non_finite_rejected():
    with pytest.raises(RecoveryError):
        atom_mass_estimate(lambda z: complex(math.nan, 0), 0.0)


def test_round_trip(rng):
    for _ in range(20):
        h = random_atomic_triple(rng)
        assert recover_alpha(h) == pytest.approx(h.alpha, abs=1e-6)
        assert recover_beta(h) == pytest.approx(h.beta, abs=1e-6)
        for p, m in h.mu.atoms:
            assert atom_mass_estimate(h, p) == pytest.approx(m, abs=1e-6)


def test_residues_confirm_root_finder(rng):
    for _ in range(10):
        h = random_atomic_triple(rng)
        for r in rng.uniform(-2, 2, 3):
            g = transform(h, r)
            s = solve_h_equals_r(h, r)
            for p, m in s.atoms:
                assert atom_mass_estimate(g, p) == pytest.approx(m, abs=1e-6)
            # halfway between consecutive atoms there is no mass
            for a, b in zip(s.positions, s.positions[1:]):
                mid = 0.5 * (a + b)
                if not h.mu.in_closed_support(mid):
                    assert abs(atom_mass_estimate(g, mid)) < 1e-8

import math

import numpy as np
import pytest
from hypothesis import given, settings, strategies as st

from fqaudit.generators import (CANONICAL_WINDOW, GOLDEN, decay, dirac_comb, from_config,
                                model_set, model_set_density, perturb, perturbation_decomposition,
                                remark3_measure)
from fqaudit.measures import cluster_stats, min_separation, total_variation
from fqaudit.probes import gaussian, pair_measure
from fqaudit.spectral import spectral_evaluate


def test_comb_and_its_transform():
    mu, spec = dirac_comb(1, radius=50)
    assert len(mu) == 99
    assert np.all(spec.masses == 1)
    _, spec2 = dirac_comb(1, spacing=2.0, radius=20)
    assert set(spec2.points[:, 0].tolist()) >= {-0.5, 0.0, 0.5, 1.0}
    assert np.all(spec2.masses == 0.5)


def test_modulated_comb_duality():
    mu, spec = dirac_comb(1, modulation=[1 / 3], radius=20.5)
    frac = np.mod(spec.points[:, 0] - 1 / 3, 1.0)
    assert np.all(np.minimum(frac, 1 - frac) < 1e-12)
    g = gaussian(1)
    ts = np.linspace(-0.4, 0.8, 5)
    np.testing.assert_allclose(pair_measure(mu, g, ts), spectral_evaluate(spec, g, ts).value, atol=1e-8)


def test_two_dimensional_comb_count():
    mu, _ = dirac_comb(2, radius=3)
    brute = sum(1 for a in range(-3, 4) for b in range(-3, 4) if a * a + b * b < 9)
    assert len(mu) == brute


def test_model_set_gaps_are_one_and_tau():
    pts = model_set(radius=50).points[:, 0]
    gaps = np.diff(pts)
    assert np.all(np.minimum(np.abs(gaps - 1), np.abs(gaps - GOLDEN)) < 1e-9)
    assert min_separation(pts) >= 1 - 1e-9


def test_model_set_degenerate_window():
    assert len(model_set((0.2, 0.2), radius=30)) == 0
    with pytest.raises(ValueError):
        model_set((0.0, 3.0))


def test_model_set_density_is_stable():
    dens = []
    for r in (100, 200):
        pts = model_set(radius=r).points[:, 0]
        dens.append(np.count_nonzero((pts >= 0) & (pts < r)) / r)
    assert abs(dens[0] - dens[1]) / dens[1] < 0.02
    assert dens[1] == pytest.approx(model_set_density(CANONICAL_WINDOW), rel=0.02)


def test_remark3_atoms():
    mu = remark3_measure(1)
    assert sorted(zip(mu.points[:, 0].tolist(), mu.masses.real.tolist())) == [(0.5, -1.0), (1.5, 1.0)]
    assert len(remark3_measure(7)) == 14
    assert math.fsum(total_variation(remark3_measure(10)).masses.real) == 2 ** 11 - 2
    with pytest.raises(ValueError):
        remark3_measure(41)
    with pytest.raises(ValueError):
        remark3_measure(0)


def test_remark3_pairing_terms_are_bounded():
    g = gaussian(1)
    for t in (0.0, 3.3, 7.0):
        for n in range(1, 25):
            w = 2.0 ** (n - 1)
            term = w * (g(np.array([[n + 2.0 ** -n - t]]))[0] - g(np.array([[n - 2.0 ** -n - t]]))[0])
            xs = np.linspace(n - 1 - t, n + 1 - t, 2001)
            slope = np.max(np.abs(-2 * math.pi * xs * np.exp(-math.pi * xs ** 2)))
            assert abs(term) <= slope * 1.0001


def test_perturb_examples():
    comb, _ = dirac_comb(1, radius=20)
    assert perturb(comb) == comb
    nu = perturb(comb, decay(1.0, 1.0))
    stats = cluster_stats(perturbation_decomposition(comb, nu, decay(1.0, 1.0)), comb, nu)
    n = np.sort(np.abs(comb.points[:, 0]))
    np.testing.assert_allclose(np.sort(stats.diameters), np.sort(1 / (1 + n)), rtol=1e-12)
    gap = perturb(comb, None, lambda p: 1.0)
    np.testing.assert_array_equal(gap.masses - comb.masses, np.ones(len(comb)))


def test_perturb_collision_rejected():
    mu, _ = dirac_comb(1, radius=5)
    with pytest.raises(ValueError):
        perturb(mu, lambda p: 1.0 if p[0] == 0 else 0.0)


@settings(max_examples=30, deadline=None)
@given(st.floats(0.0, 0.45), st.floats(0.1, 3.0))
def test_perturb_preserves_count_and_inverts(c, power):
    mu, _ = dirac_comb(1, radius=15)
    fwd = perturb(mu, decay(c, power))
    assert len(fwd) == len(mu)
    back = perturb(fwd, lambda p: -float(np.interp(p[0], fwd.points[:, 0], fwd.points[:, 0] - mu.points[:, 0])))
    np.testing.assert_allclose(back.points, mu.points, atol=1e-12)


def test_from_config():
    mu, spec = from_config({"type": "comb", "radius": 10})
    assert len(mu) == 19 and spec is not None
    assert len(from_config({"type": "remark3", "n_max": 3})[0]) == 6
    nu, _ = from_config({"type": "perturb", "base": {"type": "comb", "radius": 10},
                         "eps": {"coef": 1.0, "power": 1.0}})
    assert nu.mass_at(0.0) == 2.0

import math

import numpy as np
import pytest
from hypothesis import given, settings, strategies as st

from fqaudit.generators import decay, dirac_comb, model_set, perturb, perturbation_decomposition, \
    remark3_measure
from fqaudit.measures import (AtomicMeasure, BallUnion, JetDistribution, cluster_decompose,
                              cluster_stats, growth_profile, min_separation, restrict,
                              singleton_decomposition, sparsity_bound, total_variation)


def comb(radius, spacing=1.0, dim=1):
    return dirac_comb(dim, spacing, radius=radius)[0]


def brute_max_count(points, step=0.01, pad=1.5):
    pts = np.sort(np.asarray(points, dtype=float))
    xs = np.arange(pts.min() - pad, pts.max() + pad, step)
    return max(int(np.count_nonzero(np.abs(pts - x) < 1)) for x in xs)


# -- construction ----------------------------------------------------------

def test_zero_masses_are_dropped():
    mu = AtomicMeasure([0.0, 1.0, 2.0], [1.0, 0.0, 2j])
    assert len(mu) == 2
    assert mu.mass_at(1.0) == 0


def test_duplicate_points_rejected():
    with pytest.raises(ValueError):
        AtomicMeasure([0.0, 0.0], [1.0, 1.0])


def test_atoms_must_sit_in_truncation_ball():
    AtomicMeasure([2.0], [1.0], truncation_radius=2.0)
    with pytest.raises(ValueError):
        AtomicMeasure([2.5], [1.0], truncation_radius=2.0)


def test_nonfinite_mass_rejected():
    with pytest.raises(ValueError):
        AtomicMeasure([0.0], [np.inf])


def test_jets_reject_order_overflow_and_drop_empty_atoms():
    with pytest.raises(ValueError):
        JetDistribution([0.0], [{(3,): 1.0}], order=2)
    f = JetDistribution([0.0, 1.0], [{(0,): 1.0}, {(1,): 0.0}], order=1)
    assert len(f) == 1


def test_measure_embeds_as_order_zero_jets():
    mu = AtomicMeasure([0.0, 2.0], [1.5, -1j])
    f = JetDistribution.from_measure(mu)
    assert f.order == 0
    assert f.coefficient([2.0], (0,)) == -1j


# -- total variation -------------------------------------------------------

def test_total_variation_examples():
    assert len(total_variation(AtomicMeasure.empty(1))) == 0
    assert total_variation(AtomicMeasure([0.0], [3 - 4j])).mass_at(0.0) == 5
    tv = total_variation(remark3_measure(5))
    assert math.fsum(tv.masses.real) == 62.0  # 2^6 - 2


@given(st.complex_numbers(min_magnitude=1e-3, max_magnitude=1e3, allow_nan=False,
                          allow_infinity=False))
def test_total_variation_homogeneous_and_idempotent(c):
    mu = AtomicMeasure([0.0, 1.0, 2.5], [1.0, -2j, 0.5 + 0.5j])
    tv = total_variation(mu)
    assert total_variation(tv) == tv
    np.testing.assert_allclose(total_variation(mu.scaled(c)).masses.real,
                               abs(c) * tv.masses.real, rtol=1e-12)


# -- growth ----------------------------------------------------------------

def test_growth_of_integer_comb_counts_open_balls():
    prof = growth_profile(comb(41), [10, 20, 40])
    assert prof.masses.tolist() == [19.0, 39.0, 79.0]
    assert abs(prof.fitted_exponent - 1.0) < 0.05
    assert not prof.superpolynomial


def test_growth_of_empty_measure():
    prof = growth_profile(AtomicMeasure.empty(1, 10.0), [1, 2, 4])
    assert prof.masses.tolist() == [0, 0, 0]
    assert prof.fitted_exponent == 0.0


def test_growth_flags_dipole_measure():
    assert growth_profile(remark3_measure(16), [4, 8, 12, 16]).superpolynomial


def test_growth_needs_three_radii_within_truncation():
    with pytest.raises(ValueError):
        growth_profile(comb(20), [1, 2])
    with pytest.raises(ValueError):
        growth_profile(comb(20), [5, 10, 30])


@pytest.mark.parametrize("dim,radii", [(1, [5, 10, 20, 50]), (2, [5, 10, 20, 50])])
def test_comb_growth_exponent_matches_dimension(dim, radii):
    mu = comb(51, dim=dim)
    assert abs(growth_profile(mu, radii).fitted_exponent - dim) < 0.1


# -- separation and sparsity -----------------------------------------------

def test_min_separation_examples():
    assert min_separation(np.arange(-10, 11, dtype=float)) == 1.0
    assert min_separation([0.0, 0.3, 1.0]) == pytest.approx(0.3)
    assert min_separation([1.0]) == math.inf
    pts = model_set(radius=40).points[:50, 0]
    gaps = np.diff(pts)
    assert min_separation(pts) == pytest.approx(gaps.min())
    assert min_separation(pts) == pytest.approx(1.0)


def test_sparsity_examples_match_exhaustive_scan():
    z = np.arange(-10, 11, dtype=float)
    half = np.arange(-20, 21, dtype=float) / 2
    assert sparsity_bound(z)[0] == brute_max_count(z) == 2
    assert sparsity_bound(half)[0] == brute_max_count(half) == 4
    assert sparsity_bound(np.zeros((0, 1)), dim=1)[0] == 0


@settings(max_examples=60, deadline=None)
@given(st.lists(st.floats(-5, 5, allow_nan=False), min_size=1, max_size=12, unique=True),
       st.floats(-5, 5, allow_nan=False))
def test_sparsity_is_monotone_and_exact_in_1d(pts, extra):
    base, exact = sparsity_bound(pts)
    assert exact
    more = sorted(set(pts) | {extra})
    assert sparsity_bound(more)[0] >= base
    assert base >= brute_max_count(pts, step=0.05)


# -- restriction -----------------------------------------------------------

def test_restrict_examples():
    mu = comb(30)
    got = restrict(mu, BallUnion([[0.0]], [2.5])).points[:, 0].tolist()
    assert got == [-2, -1, 0, 1, 2]
    assert len(restrict(mu, BallUnion(np.zeros((0, 1)), [], dim=1))) == 0
    two = BallUnion([[10.0], [20.0]], [1.5, 1.5])
    assert restrict(mu, two).points[:, 0].tolist() == [9, 10, 11, 19, 20, 21]


def test_open_ball_boundary_excludes_atoms():
    mu = comb(30)
    assert restrict(mu, BallUnion([[0.0]], [2.0])).points[:, 0].tolist() == [-1, 0, 1]


@given(st.floats(-20, 20), st.floats(0.5, 4), st.floats(-20, 20), st.floats(0.5, 4))
def test_restrict_to_disjoint_union_is_union(c1, r1, c2, r2):
    if abs(c1 - c2) < r1 + r2:
        c2 = c1 + r1 + r2 + 1
    mu = comb(40)
    a = set(restrict(mu, BallUnion([[c1]], [r1])).points[:, 0].tolist())
    b = set(restrict(mu, BallUnion([[c2]], [r2])).points[:, 0].tolist())
    ab = set(restrict(mu, BallUnion([[c1], [c2]], [r1, r2])).points[:, 0].tolist())
    assert ab == a | b


# -- ball unions -----------------------------------------------------------

def test_ball_union_schedule():
    good = BallUnion([[10.0], [100.0], [1000.0]], [5.0, 20.0, 50.0])
    assert good.schedule_violations() == []
    bad = BallUnion([[10.0], [20.0]], [5.0, 4.0])
    kinds = {v["kind"] for v in bad.schedule_violations()}
    assert kinds == {"radius-decreased"}
    assert good.contains_ball([100.0], 20.0)
    assert not good.contains_ball([100.0], 20.5)


# -- clusters --------------------------------------------------------------

def test_cluster_decompose_examples():
    dom = BallUnion([[0.0]], [50.0])
    d1 = cluster_decompose(AtomicMeasure([0.0], [1.0]), AtomicMeasure([0.01], [1.0]), dom, 0.1)
    assert len(d1) == 1 and d1.clusters[0].lambda_part == (0,) and d1.clusters[0].gamma_part == (0,)
    mu = AtomicMeasure([0.0, 5.0], [1.0, 1.0])
    nu = AtomicMeasure([0.01, 5.02], [1.0, 1.0])
    assert len(cluster_decompose(mu, nu, dom, 0.1)) == 2
    d3 = cluster_decompose(AtomicMeasure([0.0], [1.0]), AtomicMeasure.empty(1), dom, 0.1)
    assert len(d3) == 1 and d3.clusters[0].gamma_part == ()


@settings(max_examples=40, deadline=None)
@given(st.lists(st.floats(-30, 30, allow_nan=False), min_size=1, max_size=15, unique=True),
       st.lists(st.floats(-30, 30, allow_nan=False), min_size=0, max_size=15, unique=True),
       st.floats(0.05, 2.0))
def test_cluster_decompose_separates_and_conserves_mass(lp, gp, gap):
    mu = AtomicMeasure(lp, np.linspace(1, 2, len(lp)))
    nu = AtomicMeasure(gp, np.linspace(-1, 3, len(gp)) + 0.5j) if gp else AtomicMeasure.empty(1)
    dom = BallUnion([[0.0]], [25.0])
    dec = cluster_decompose(mu, nu, dom, gap)
    assert dec.violations(mu, nu) == [] or all(v["kind"] == "(b1)" for v in dec.violations(mu, nu))
    for i, a in enumerate(dec.clusters):
        for b in dec.clusters[i + 1:]:
            d = np.min(np.abs(a.points[:, 0][:, None] - b.points[:, 0][None, :]))
            assert d > gap
    inside = restrict(mu, dom)
    total = math.fsum(mu.masses[list(c.lambda_part)].real.sum() for c in dec.clusters)
    assert total == pytest.approx(math.fsum(inside.masses.real), abs=1e-9)


def test_cluster_stats_examples():
    mu = AtomicMeasure([0.0], [1.0])
    nu = AtomicMeasure([0.01], [1.005])
    st_ = cluster_stats(cluster_decompose(mu, nu, None, 0.1), mu, nu)
    (d, g), = st_.rows()
    assert d == pytest.approx(0.01) and g == pytest.approx(-0.005)
    c = comb(10)
    same = cluster_stats(singleton_decomposition(c, c), c, c)
    assert all(r == (0.0, 0j) for r in same.rows())


def test_cluster_stats_of_perturbation():
    base = AtomicMeasure(np.arange(0, 10, dtype=float), np.ones(10))
    nu = perturb(base, decay(1.0, 1.0), decay(1.0, 2.0))
    dec = perturbation_decomposition(base, nu, decay(1.0, 1.0))
    stats = cluster_stats(dec, base, nu)
    n = np.round(stats.representatives[:, 0] - stats.diameters / 2).astype(int)
    np.testing.assert_allclose(stats.diameters, 1 / (1 + n), rtol=1e-12)
    np.testing.assert_allclose(stats.mass_gaps.real, -1 / (1 + n) ** 2, rtol=1e-12)


def test_count_violation_reported():
    mu = AtomicMeasure(np.arange(0, 5) * 0.1, np.ones(5))
    dec = singleton_decomposition(mu, AtomicMeasure.empty(1))
    bad = type(dec)(dec.clusters, None, 1)
    kinds = [v["kind"] for v in bad.violations(mu, AtomicMeasure.empty(1))]
    assert "(b1)" in kinds

import numpy as np
import pytest
from hypothesis import given, settings, strategies as st

from fqaudit import io
from fqaudit.generators import decay, dirac_comb, perturb
from fqaudit.harness import (AuditConfig, AuditReport, DegenerateAccumulation, HypothesisViolation,
                             build_discrepancy_family, choose_rho, dual_audit, jet_audit,
                             jet_witness, run_audit, shell_is_empty, shell_of, shell_selector,
                             uniqueness_audit, witness_point)
from fqaudit.measures import (AtomicMeasure, BallUnion, Cluster, JetDistribution,
                              singleton_decomposition)


def comb(radius=60):
    return dirac_comb(1, radius=radius)[0]


def positive_pair():
    mu = comb()
    nu = mu.scaled(2)
    return mu, nu, singleton_decomposition(mu, nu, BallUnion([[0.0]], [50.0]))


def jet_pair(radius=40, p1=lambda n: 1, p0=lambda n: 1):
    ns = np.arange(-radius + 1, radius).astype(float)
    f = JetDistribution(ns, [{(0,): p0(n), (1,): p1(n)} for n in ns], order=1,
                        truncation_radius=radius)
    g = JetDistribution(ns, [{(0,): p0(n), (1,): (0 if n == 0 else p1(n))} for n in ns], order=1,
                        truncation_radius=radius)
    return f, g


# -- witness and radius ----------------------------------------------------

def test_witness_examples():
    mu = comb(20)
    assert witness_point(mu, mu.scaled(2)).tolist() == [0.0]
    assert witness_point(mu, mu) is None
    a = witness_point(AtomicMeasure([0.0], [1.0]), AtomicMeasure([0.5], [1.0]))
    assert a.tolist() == [0.0]


def test_witness_respects_tolerance():
    mu = AtomicMeasure([0.0, 3.0], [1.0, 1.0])
    nu = AtomicMeasure([0.0, 3.0], [1.0 + 1e-12, 2.0])
    assert witness_point(mu, nu).tolist() == [3.0]
    assert witness_point(mu, nu, tol=5.0) is None


def test_choose_rho_examples():
    mu = comb(20)
    nu = mu.scaled(2)
    assert choose_rho(mu, nu, [0.0], 1 / 3) == 0.5
    extra = mu + AtomicMeasure([0.4], [1.0])
    assert choose_rho(extra, nu, [0.0], 1 / 3) == 0.25
    pile = AtomicMeasure([0.0] + [2.0 ** -k for k in range(1, 60)], np.ones(60))
    with pytest.raises(DegenerateAccumulation):
        choose_rho(pile, AtomicMeasure.empty(1), [0.0], 1 / 3)
    with pytest.raises(ValueError):
        choose_rho(mu, nu, [0.0], 0.0)


# -- discrepancy family ----------------------------------------------------

def test_family_examples():
    mu = comb(20)
    fam = build_discrepancy_family(mu, mu.scaled(2), [0.0], 0.5, 3)
    assert len(fam) == 3
    ints = np.arange(-5, 6, dtype=float).reshape(-1, 1)
    for F in fam:
        np.testing.assert_array_equal(F.func(ints), -np.ones(len(ints)))
    assert fam[0].func(np.array([[3.5]]))[0] == 0
    same = build_discrepancy_family(mu, mu, [0.0], 0.5, 3)
    ts = np.linspace(-4, 4, 161).reshape(-1, 1)
    assert all(np.all(F.func(ts) == 0) for F in same)


def test_grid_evaluator_matches_direct_pairing():
    mu = comb(20)
    nu = perturb(mu, decay(0.1, 1.0), decay(0.3, 1.0))
    for F in build_discrepancy_family(mu, nu, [0.0], 0.5, 3, t_window=(-3.0, 3.0)):
        ts = -3.0 + F.pitch * np.arange(200)
        np.testing.assert_allclose(F.grid_eval(-3.0, F.pitch, 200), F.func(ts.reshape(-1, 1)),
                                   atol=1e-12)


@settings(max_examples=25, deadline=None)
@given(st.complex_numbers(min_magnitude=0.1, max_magnitude=10, allow_nan=False,
                          allow_infinity=False),
       st.integers(-10, 10))
def test_step_inequality_at_witness(c, where):
    mu = comb(20)
    nu = perturb(mu, None, lambda p: c if p[0] == where else 0)
    a = witness_point(mu, nu)
    eps = abs(mu.mass_at(a) - nu.mass_at(a)) / 3
    rho = choose_rho(mu, nu, a, eps)
    for F in build_discrepancy_family(mu, nu, a, rho, 5):
        assert abs(F.func(a.reshape(1, -1))[0]) > 2 * eps


# -- shells ----------------------------------------------------------------

def test_shell_membership():
    assert shell_of(0.6, 1.0, 3) == 1
    assert shell_of(0.5, 1.0, 3) == 1
    assert shell_of(0.3, 1.0, 3) == 2
    assert shell_of(1.5, 1.0, 3) is None
    assert shell_of(0.01, 1.0, 3) is None


def test_shell_selector_examples():
    rho = 0.5
    assert shell_selector([], [0.0], rho, 1) == 1
    one = [Cluster.from_points([0.6 * rho])]
    assert shell_selector(one, [0.0], rho, 1) == 2
    two = [Cluster.from_points([1.5 * rho]), Cluster.from_points([0.6 * rho])]
    assert shell_selector(two, [0.0], rho, 1) == 2
    inner = two + [Cluster.from_points([0.3 * rho])]
    with pytest.raises(HypothesisViolation) as exc:
        shell_selector(inner, [0.0], rho, 1)
    assert exc.value.tag == "(b1)"


def test_shell_selector_violations():
    rho = 0.5
    with pytest.raises(HypothesisViolation) as exc:
        shell_selector([Cluster.from_points([0.3, 0.3 + rho / 4])], [0.0], rho, 1)
    assert exc.value.tag == "(b2)"
    assert exc.value.evidence["diameter"] >= exc.value.evidence["threshold"]


def test_straddling_clusters_defeat_the_pigeonhole():
    rho, d = 0.5, 0.01
    clusters = [Cluster.from_points([rho / 2 - d, rho / 2 + d]),
                Cluster.from_points([rho / 4 - d, rho / 4 + d])]
    with pytest.raises(HypothesisViolation) as exc:
        shell_selector(clusters, [0.0], rho, 1)
    assert exc.value.tag == "(b1)"
    assert exc.value.evidence["occupied"] == [1, 2, 3]


@settings(max_examples=200, deadline=None)
@given(st.integers(1, 3), st.data())
def test_pigeonhole_with_at_most_n_clusters(n_bound, data):
    rho = 0.5
    limit = 2.0 ** (-2 * n_bound - 1) * rho
    k = data.draw(st.integers(0, n_bound))
    clusters = []
    for _ in range(k):
        c = data.draw(st.floats(-2 * rho, 2 * rho))
        d = data.draw(st.floats(0.0, limit * 0.999))
        clusters.append(Cluster.from_points(sorted({c, c + d})))
    m = shell_selector(clusters, [0.0], rho, n_bound)
    assert 1 <= m <= 2 * n_bound + 1
    assert shell_is_empty(clusters, [0.0], rho, m)


# -- audits ----------------------------------------------------------------

def test_identical_sentinel():
    mu = comb(20)
    rep = uniqueness_audit(mu, mu, None, AuditConfig(ap_window=(0, 5), t_halfwidth=2))
    assert rep.identical and rep.verdict == "inconclusive"
    assert not rep.contradiction
    f, _ = jet_pair(10)
    assert jet_audit(f, f, None, AuditConfig(mode="jet")).identical


def test_positive_audit():
    mu, nu, dec = positive_pair()
    rep = uniqueness_audit(mu, nu, dec, AuditConfig())
    assert rep.verdict == "difference-persists"
    assert rep.witness == [0.0] and rep.epsilon == pytest.approx(1 / 3) and rep.rho == 0.5
    assert rep.checks["H_at_witness_exceeds_2eps"]
    assert all(row["abs"] == 1.0 for row in rep.tested)
    assert all(abs(p - round(p)) < 1e-12 for (p,) in rep.periods)


def test_negative_audit_tags_almost_periods():
    mu = comb(150)
    nu = perturb(mu, None, decay(1.0, 1.0))
    dec = singleton_decomposition(mu, nu, BallUnion([[0.0]], [140.0]))
    rep = uniqueness_audit(mu, nu, dec, AuditConfig(ap_window=(10.0, 100.0)))
    assert rep.verdict == "hypotheses-falsified"
    assert rep.tag_names[0] == "atomic-spectrum/AP"
    assert rep.ap_status == "not certified in window"


def test_domain_schedule_tag():
    mu, nu, _ = positive_pair()
    bad = BallUnion([[0.0], [5.0]], [50.0, 10.0])
    rep = uniqueness_audit(mu, nu, singleton_decomposition(mu, nu, bad), AuditConfig())
    assert rep.verdict == "hypotheses-falsified" and "(E)" in rep.tag_names


def test_no_translate_fits_domain():
    mu, nu, _ = positive_pair()
    tiny = BallUnion([[-30.0]], [1.0])
    rep = uniqueness_audit(mu, nu, singleton_decomposition(mu, nu, tiny), AuditConfig())
    assert rep.verdict == "hypotheses-falsified" and rep.tag_names[0] == "(E)"


@pytest.mark.parametrize("c", [2.0, -1.5, 0.5j, 1 - 1j])
def test_scaling_equivariance(c):
    mu, nu, dec = positive_pair()
    base = uniqueness_audit(mu, nu, dec, AuditConfig())
    sm, sn = mu.scaled(c), nu.scaled(c)
    rep = uniqueness_audit(sm, sn, singleton_decomposition(sm, sn, dec.domain), AuditConfig())
    assert rep.verdict == base.verdict
    assert rep.epsilon == pytest.approx(abs(c) * base.epsilon)


def test_audit_is_deterministic():
    mu, nu, dec = positive_pair()
    a = uniqueness_audit(mu, nu, dec, AuditConfig())
    b = uniqueness_audit(mu, nu, dec, AuditConfig())
    assert io.dumps(a.to_json()) == io.dumps(b.to_json())
    assert a.traces_csv(1) == b.traces_csv(1)
    assert a.traces_csv(1).splitlines()[0] == "tau,re,im,abs"


def test_report_json_omits_traces_and_is_valid():
    mu, nu, dec = positive_pair()
    doc = uniqueness_audit(mu, nu, dec, AuditConfig()).to_json()
    assert "traces" not in doc and doc["verdict"] in ("difference-persists",)
    io.dumps(doc)


def test_config_round_trip_and_validation():
    cfg = AuditConfig(ap_window=(1, 9), scales=5)
    assert AuditConfig.from_json(cfg.to_json()) == cfg
    with pytest.raises(ValueError):
        AuditConfig.from_json({"bogus": 1})
    with pytest.raises(ValueError):
        AuditConfig(rho_cap=0.75)
    with pytest.raises(ValueError):
        AuditConfig(scales=2)
    with pytest.raises(ValueError):
        AuditConfig(mode="fourier")


def test_truncation_reach_checked():
    mu, nu, dec = positive_pair()
    with pytest.raises(ValueError):
        uniqueness_audit(mu, nu, dec, AuditConfig(ap_window=(0.0, 80.0)))


# -- jets ------------------------------------------------------------------

def test_jet_witness_and_first_steps():
    f, g = jet_pair()
    a, j0 = jet_witness(f, g)
    assert a.tolist() == [0.0] and j0 == (1,)
    rep = jet_audit(f, g, None, AuditConfig(mode="jet"))
    assert rep.multi_index == [1]
    assert complex(*rep.witness_values[0]) == pytest.approx(1.0, abs=1e-6)
    assert rep.epsilon == pytest.approx(0.5, abs=1e-6)
    assert rep.checks["H_at_witness_matches_jet_gap"]


def test_jet_growth_violation_tagged():
    f, g = jet_pair(p0=lambda n: 1 + abs(n))
    dec = singleton_decomposition(f, g, BallUnion([[0.0]], [30.0]))
    rep = jet_audit(f, g, dec, AuditConfig(mode="jet"))
    assert "(f4)" in rep.tag_names


def test_run_audit_dispatch():
    mu = comb(20)
    rep = run_audit(mu, mu, None, AuditConfig(mode="jet", ap_window=(0, 5), t_halfwidth=2))
    assert rep.mode == "jet" and rep.identical


# -- dual ------------------------------------------------------------------

def test_dual_audit_on_comb_spectra():
    _, s1 = dirac_comb(1, radius=60)
    _, s2 = dirac_comb(1, spacing=2.0, radius=60)
    rep = dual_audit(s1, s2, None, AuditConfig(mode="dual"))
    assert rep.mode == "dual"
    assert rep.witness == [0.0]
    assert rep.epsilon == pytest.approx(1 / 6)
    assert rep.verdict == "difference-persists"
    assert dual_audit(s1, s1, None, AuditConfig(mode="dual", ap_window=(0, 5), t_halfwidth=2)).identical


def test_report_contradiction_flag():
    r = AuditReport("difference-persists", "measure", {})
    assert r.contradiction
    r.tags.append({"tag": "(b2)", "evidence": {}})
    assert not r.contradiction


def test_periodic_jet_difference_persists():
    # dropping every first-order jet keeps H periodic, so the difference persists
    f, g = jet_pair()
    g = JetDistribution(g.points, [{(0,): 1} for _ in range(len(g))], order=1,
                        truncation_radius=g.truncation_radius)
    rep = jet_audit(f, g, singleton_decomposition(f, g, BallUnion([[0.0]], [30.0])),
                    AuditConfig(mode="jet"))
    assert rep.verdict == "difference-persists"
    assert all(row["abs"] > rep.epsilon for row in rep.tested)

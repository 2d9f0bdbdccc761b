"""Uniqueness audit: run the dyadic-shell argument on a concrete pair of inputs.

For two measures (or jet distributions) that differ at a point ``a`` the
audit builds the scaled bump pairings ``H_j``, searches their common
epsilon-almost periods in a window, and checks whether ``|H|`` stays above
epsilon along the translates that fit the domain.  The outcome is one of

* ``difference-persists``  every tested translate keeps ``|H| > eps``;
* ``hypotheses-falsified`` some hypothesis check failed, with evidence;
* ``inconclusive``         neither (including the identical-input sentinel).

All window claims are scoped: an uncertified almost-period search means
"not certified in the window", never "disproved".
"""

from __future__ import annotations

import csv
import io
import math
from dataclasses import asdict, dataclass, field, fields

import numpy as np

from .almost_periods import AlmostPeriodSet, SampledFunction, find_almost_periods, sampled
from .measures import (AtomicMeasure, BallUnion, ClusterDecomposition, JetDistribution, as_points,
                       cluster_stats, distances)
from .probes import bump_profile, bump_slope_bound, derivative_eval, derivative_sup, \
    monomial_bump, pair_jets, pair_measure, standard_bump
from .spectral import Spectrum

VERDICTS = ("difference-persists", "hypotheses-falsified", "inconclusive")
AP_TAG = "atomic-spectrum/AP"
RHO_FLOOR = 2.0 ** -40


class DegenerateAccumulation(ValueError):
    """No admissible radius: atoms accumulate at the witness point."""


class HypothesisViolation(Exception):
    def __init__(self, tag: str, evidence: dict):
        super().__init__(f"{tag}: {evidence}")
        self.tag = tag
        self.evidence = evidence


@dataclass
class AuditConfig:
    epsilon: float | None = None
    rho_cap: float = 0.5
    scales: int | None = None
    ap_window: tuple[float, float] = (0.0, 20.0)
    t_halfwidth: float = 5.0
    step: float | None = None
    tol: float = 1e-9
    trend_ratio: float = 0.5
    growth_factor: float = 1.5
    max_tested: int = 64
    mode: str = "measure"
    schedule_start: int = 0
    sample_step: float = 0.25
    max_grid: int = 5_000_000

    def __post_init__(self):
        self.ap_window = (float(self.ap_window[0]), float(self.ap_window[1]))
        if not 0 < self.rho_cap <= 0.5:
            raise ValueError("rho_cap must lie in (0, 1/2]")
        if self.scales is not None and self.scales < 3:
            raise ValueError("at least 3 scales are required")
        if self.mode not in ("measure", "jet", "dual"):
            raise ValueError(f"unknown mode {self.mode!r}")
        if self.ap_window[1] <= self.ap_window[0]:
            raise ValueError("empty almost-period window")

    def to_json(self) -> dict:
        doc = asdict(self)
        doc["ap_window"] = list(self.ap_window)
        return doc

    @classmethod
    def from_json(cls, doc: dict) -> "AuditConfig":
        known = {f.name for f in fields(cls)}
        unknown = set(doc) - known
        if unknown:
            raise ValueError(f"unknown config keys {sorted(unknown)}")
        return cls(**doc)


@dataclass
class AuditReport:
    verdict: str
    mode: str
    config: dict
    identical: bool = False
    witness: list | None = None
    multi_index: list | None = None
    epsilon: float | None = None
    rho: float | None = None
    scales: int | None = None
    count_bound: int | None = None
    step: float | None = None
    pitch: float | None = None
    witness_values: list = field(default_factory=list)
    periods: list = field(default_factory=list)
    relative_dense_radius: float | None = None
    ap_status: str | None = None
    tested: list = field(default_factory=list)
    traces: dict = field(default_factory=dict)
    tags: list = field(default_factory=list)
    checks: dict = field(default_factory=dict)
    notes: list = field(default_factory=list)

    @property
    def contradiction(self) -> bool:
        """Persistent difference with no falsified hypothesis: an inconsistent pair."""
        return self.verdict == "difference-persists" and not self.tags

    @property
    def tag_names(self) -> list[str]:
        return [t["tag"] for t in self.tags]

    def to_json(self) -> dict:
        doc = {k: v for k, v in asdict(self).items() if k != "traces"}
        doc["contradiction"] = self.contradiction
        return _clean(doc)

    def traces_csv(self, scale: int | str) -> str:
        buf = io.StringIO()
        w = csv.writer(buf, lineterminator="\n")
        w.writerow(["tau", "re", "im", "abs"])
        for tau, re, im in self.traces.get(str(scale), []):
            w.writerow([repr(tau), repr(re), repr(im), repr(math.hypot(re, im))])
        return buf.getvalue()


def _clean(obj):
    """JSON-safe copy: numpy scalars to Python, non-finite floats to None."""
    if isinstance(obj, dict):
        return {str(k): _clean(v) for k, v in obj.items()}
    if isinstance(obj, (list, tuple)):
        return [_clean(v) for v in obj]
    if isinstance(obj, np.ndarray):
        return _clean(obj.tolist())
    if isinstance(obj, (np.floating, float)):
        v = float(obj)
        return v if math.isfinite(v) else None
    if isinstance(obj, np.integer):
        return int(obj)
    if isinstance(obj, np.bool_):
        return bool(obj)
    return obj


# -- witness and radius ----------------------------------------------------

def _point_key(p) -> tuple:
    p = np.asarray(p, dtype=float).reshape(-1)
    return (float(np.linalg.norm(p)) if len(p) > 1 else abs(float(p[0])), tuple(p.tolist()))


def _common_radius(*objs) -> float:
    return min(o.truncation_radius for o in objs)


def witness_point(mu, nu, tol: float = 1e-9):
    """Smallest-norm point where the masses differ by more than ``tol``; None if none."""
    radius = _common_radius(mu, nu)
    keys = {tuple(p) for p in mu.points.tolist()} | {tuple(p) for p in nu.points.tolist()}
    best = None
    for k in sorted(keys, key=_point_key):
        p = np.array(k)
        if math.isfinite(radius) and _point_key(p)[0] > radius:
            continue
        if abs(mu.mass_at(p) - nu.mass_at(p)) > tol:
            best = p
            break
    return best


def punctured_mass(obj, center, radius: float) -> float:
    d = distances(obj.points, center)
    sel = (d > 0) & (d < radius)
    if isinstance(obj, JetDistribution):
        return math.fsum(obj.coefficient_mass()[sel])
    return math.fsum(np.abs(obj.masses[sel]))


def choose_rho(mu, nu, a, epsilon: float, cap: float = 0.5) -> float:
    """Largest ``cap / 2^k`` whose punctured ball around ``a`` carries less than ``epsilon``."""
    if epsilon <= 0:
        raise ValueError("epsilon must be positive")
    rho = cap
    while rho >= RHO_FLOOR * cap:
        if punctured_mass(mu, a, rho) + punctured_mass(nu, a, rho) < epsilon:
            return rho
        rho /= 2
    raise DegenerateAccumulation(f"no radius down to {RHO_FLOOR * cap:.3g} isolates the witness")


def isolating_rho(points_list, a, cap: float = 0.5) -> float:
    """Largest ``cap / 2^k`` with no atom other than ``a`` in ``B(a, 2 rho)``."""
    d_min = math.inf
    for pts in points_list:
        if len(pts):
            d = distances(pts, a)
            d = d[d > 0]
            if len(d):
                d_min = min(d_min, float(d.min()))
    rho = cap
    while rho >= RHO_FLOOR * cap:
        if 2 * rho <= d_min:
            return rho
        rho /= 2
    raise DegenerateAccumulation("atoms accumulate at the witness point")


def dyadic_at_most(x: float) -> float:
    if x <= 0 or not math.isfinite(x):
        raise ValueError("need a positive finite bound")
    return 2.0 ** math.floor(math.log2(x))


# -- discrepancy family ----------------------------------------------------

def _local_mass_bound(diff: AtomicMeasure, radius: float) -> float:
    """``max_x |diff|(B(x, radius / 2))`` bounded by balls of ``radius`` around atoms."""
    if not len(diff):
        return 0.0
    w = np.abs(diff.masses)
    if diff.dim == 1:
        x = diff.points[:, 0]
        lo = np.searchsorted(x, x - radius, side="right")
        hi = np.searchsorted(x, x + radius, side="left")
        csum = np.concatenate([[0.0], np.cumsum(w)])
        return float(np.max(csum[hi] - csum[lo]))
    return max(math.fsum(w[distances(diff.points, p) < radius]) for p in diff.points)


def _bump_grid_eval(diff: AtomicMeasure, scale: float):
    """1-D evaluator of ``sum m phi((x - t)/scale)`` on uniform grids by scattering atoms."""
    xs = diff.points[:, 0]
    ms = diff.masses
    reach = 2 * scale

    def grid_eval(start, step, n):
        out = np.zeros(n, dtype=complex)
        lo_x = np.searchsorted(xs, start - reach, side="right")
        hi_x = np.searchsorted(xs, start + step * (n - 1) + reach, side="left")
        for x, m in zip(xs[lo_x:hi_x], ms[lo_x:hi_x]):
            k0 = max(0, int(math.floor((x - reach - start) / step)))
            k1 = min(n, int(math.ceil((x + reach - start) / step)) + 1)
            if k1 <= k0:
                continue
            t = start + step * np.arange(k0, k1)
            out[k0:k1] += m * bump_profile(np.abs(x - t) / scale)
        return out
    return grid_eval


def scale_radius(rho: float, j: int) -> float:
    return rho * 2.0 ** -j


def build_discrepancy_family(mu, nu, a, rho: float, scales: int, t_window=None,
                             pitch: float | None = None) -> list[SampledFunction]:
    """``H_j(t) = <mu - nu, phi((. - t) / (2^-j rho))>`` for ``j = 1..scales``.

    Each member carries the Lipschitz bound ``slope(phi) / s_j`` times the
    largest difference mass in a ball of radius ``4 s_j``.  Without a window
    only the callables are meaningful (window defaults to ``a +- 1``).
    """
    a = np.asarray(a, dtype=float).reshape(-1)
    dim = len(a)
    diff = mu - nu
    phi = standard_bump(dim)
    if t_window is None:
        t_window = (a - 1.0, a + 1.0)
    out = []
    for j in range(1, scales + 1):
        s = scale_radius(rho, j)

        def func(t, s=s):
            return np.atleast_1d(pair_measure(mu, phi, as_points(t, dim), s)
                                 - pair_measure(nu, phi, as_points(t, dim), s))
        lip = bump_slope_bound() / s * _local_mass_bound(diff, 4 * s)
        ge = _bump_grid_eval(diff, s) if dim == 1 else None
        p = pitch if pitch is not None else s / 64
        out.append(sampled(func, t_window, p, lipschitz=lip, grid_eval=ge, label=f"H_{j}"))
    return out


# -- shells ----------------------------------------------------------------

def shell_of(radius: float, rho: float, scales: int) -> int | None:
    """Shell ``m`` with ``2^-m rho <= radius < 2^(-m+1) rho`` (None outside all shells)."""
    for m in range(1, scales + 1):
        if scale_radius(rho, m) <= radius < scale_radius(rho, m - 1):
            return m
    return None


def _clusters_near(clusters, center, radius: float):
    out = []
    for c in clusters:
        d = distances(c.points, center)
        if np.any(d < radius):
            out.append((c, d))
    return out


def shell_selector(decomp: ClusterDecomposition | list, center, rho: float, n_bound: int) -> int:
    """Smallest ``m`` in ``1..2N+1`` whose shell around ``center`` meets no cluster.

    Preconditions, checked for clusters meeting ``B(center, 2 rho)``: at most
    ``2N`` of them, each of diameter below ``2^(-2N-1) rho``.  Breaking the
    first raises (b1), the second (b2).  Clusters straddling a shell boundary
    meet two shells, so with more than ``N`` clusters the pigeonhole can
    fail; that case is reported as (b1) with the straddling evidence.
    """
    clusters = decomp.clusters if isinstance(decomp, ClusterDecomposition) else list(decomp)
    center = np.asarray(center, dtype=float).reshape(-1)
    scales = 2 * n_bound + 1
    near = _clusters_near(clusters, center, 2 * rho)
    limit = scale_radius(rho, scales)
    for c, _ in near:
        if c.diameter >= limit:
            raise HypothesisViolation("(b2)", {"center": center.tolist(), "diameter": c.diameter,
                                               "threshold": limit})
    if len(near) > 2 * n_bound:
        raise HypothesisViolation("(b1)", {"center": center.tolist(), "clusters": len(near),
                                           "bound": 2 * n_bound})
    occupied = set()
    for _, d in near:
        for r in d.tolist():
            m = shell_of(r, rho, scales)
            if m is not None:
                occupied.add(m)
    for m in range(1, scales + 1):
        if m not in occupied:
            return m
    raise HypothesisViolation("(b1)", {"center": center.tolist(), "clusters": len(near),
                                       "bound": n_bound, "occupied": sorted(occupied),
                                       "reason": "clusters straddle shell boundaries; "
                                                 "the unit-ball count exceeds N"})


def shell_is_empty(clusters, center, rho: float, m: int) -> bool:
    inner, outer = scale_radius(rho, m), scale_radius(rho, m - 1)
    for c in clusters:
        d = distances(c.points, np.asarray(center, dtype=float).reshape(-1))
        if np.any((d >= inner) & (d < outer)):
            return False
    return True


# -- shared pipeline pieces ------------------------------------------------

def _check_truncation(objs, a, cfg: AuditConfig, rho: float):
    reach = float(np.linalg.norm(a)) + cfg.t_halfwidth + max(abs(cfg.ap_window[0]),
                                                             abs(cfg.ap_window[1])) + 4 * rho
    for o in objs:
        if reach > o.truncation_radius:
            raise ValueError(f"windows reach radius {reach:.6g} beyond the truncation radius "
                             f"{o.truncation_radius:.6g}; enlarge the truncation or shrink windows")


def _pick_step(family, epsilon: float, cfg: AuditConfig) -> float:
    lmax = max(F.lipschitz for F in family)
    bound = epsilon / (4 * lmax) if lmax > 0 else 1.0
    if cfg.step is not None:
        if cfg.step > bound * (1 + 1e-12):
            raise ValueError(f"configured step {cfg.step} exceeds epsilon/(4L) = {bound:.6g}")
        return cfg.step
    return min(dyadic_at_most(bound), 1.0)


def _grid_size(cfg: AuditConfig, dim: int, pitch: float) -> int:
    return int((2 * cfg.t_halfwidth / pitch + 1) ** dim)


def _resample(family, window, pitch):
    return [sampled(F.func, window, pitch, lipschitz=F.lipschitz, grid_eval=F.grid_eval,
                    label=F.label) for F in family]


def _search(family, epsilon: float, cfg: AuditConfig, a) -> tuple[AlmostPeriodSet, float]:
    step = _pick_step(family, epsilon, cfg)
    dim = len(a)
    if _grid_size(cfg, dim, step) > cfg.max_grid:
        raise ValueError("evaluation grid too large; reduce t_halfwidth or raise max_grid")
    window = (a - cfg.t_halfwidth, a + cfg.t_halfwidth)
    fam = _resample(family, window, step)
    lmax = max(F.lipschitz for F in fam)
    if lmax > 0 and step > epsilon / (4 * lmax):
        step = dyadic_at_most(epsilon / (4 * lmax))
        fam = _resample(family, window, step)
    aps = find_almost_periods(fam, epsilon, cfg.ap_window, step)
    return aps, step


def _period_vectors(aps: AlmostPeriodSet, dim: int) -> np.ndarray:
    return np.asarray(aps.periods, dtype=float).reshape(-1, dim)


def _ap_tag(aps: AlmostPeriodSet) -> dict:
    return {"tag": AP_TAG, "evidence": {
        "periods_found": len(aps), "relative_dense_radius": aps.relative_dense_radius,
        "window": list(aps.window), "status": "not certified in window",
        "min_discrepancy": float(np.min(aps.trace_value)) if len(aps.trace_value) else None,
        "epsilon": aps.epsilon}}


def _fitting_translates(aps, a, rho, domain: BallUnion | None, cfg: AuditConfig):
    taus = _period_vectors(aps, len(a))
    fits = []
    for tau in taus:
        if domain is None or domain.contains_ball(a + tau, rho):
            fits.append(tau)
        if len(fits) >= cfg.max_tested:
            break
    return fits


def _schedule_tag(domain: BallUnion | None, cfg: AuditConfig):
    if domain is None:
        return None
    bad = domain.schedule_violations(cfg.schedule_start)
    if bad:
        return {"tag": "(E)", "evidence": {"schedule_violations": bad}}
    return None


def _trend(values: np.ndarray, norms: np.ndarray, ratio: float, tol: float) -> dict | None:
    """Outer-half maximum compared with the overall maximum of ``|values|``."""
    if len(values) < 4:
        return None
    cut = float(np.median(norms))
    outer = norms > cut
    if not outer.any():
        return None
    top = float(np.max(np.abs(values)))
    out_max = float(np.max(np.abs(values[outer])))
    if top > tol and out_max > ratio * top:
        return {"radius": cut, "outer_max": out_max, "overall_max": top, "ratio": ratio}
    return None


def _coerce_decomp(decomp, domain):
    if decomp is None:
        return ClusterDecomposition((), domain, 1)
    return decomp


# -- measure mode ----------------------------------------------------------

def uniqueness_audit(mu: AtomicMeasure, nu: AtomicMeasure, decomp: ClusterDecomposition | None,
                     config: AuditConfig | None = None, domain: BallUnion | None = None
                     ) -> AuditReport:
    """Measure-mode audit of a pair of atomic measures."""
    cfg = config or AuditConfig()
    mode = cfg.mode if cfg.mode in ("measure", "dual") else "measure"
    rep = AuditReport("inconclusive", mode, cfg.to_json())
    decomp = _coerce_decomp(decomp, domain)
    domain = decomp.domain if decomp.domain is not None else domain
    a = witness_point(mu, nu, cfg.tol)
    if a is None:
        rep.identical = True
        rep.notes.append(f"identical at tol {cfg.tol}")
        return rep
    rep.witness = a.tolist()
    gap = mu.mass_at(a) - nu.mass_at(a)
    eps = cfg.epsilon if cfg.epsilon is not None else abs(gap) / 3
    rep.epsilon = eps
    rho = choose_rho(mu, nu, a, eps, cfg.rho_cap)
    rep.rho = rho
    n_bound = max(1, decomp.count_bound)
    scales = cfg.scales or 2 * n_bound + 1
    n_bound = max(n_bound, (scales - 1) // 2)
    rep.scales, rep.count_bound = scales, n_bound
    _check_truncation((mu, nu), a, cfg, rho)

    family = build_discrepancy_family(mu, nu, a, rho, scales)
    h_at_a = [complex(F.func(a.reshape(1, -1))[0]) for F in family]
    rep.witness_values = [[v.real, v.imag] for v in h_at_a]
    rep.checks["H_at_witness_exceeds_2eps"] = all(abs(v) > 2 * eps for v in h_at_a)

    aps, step = _search(family, eps, cfg, a)
    rep.step = rep.pitch = step
    rep.periods = _period_vectors(aps, len(a)).tolist()
    rep.relative_dense_radius = aps.relative_dense_radius
    rep.ap_status = "certified in window" if aps.certified else "not certified in window"

    _trend_tags(rep, decomp, mu, nu, cfg)
    sched = _schedule_tag(domain, cfg)
    if not aps.certified:
        rep.tags.insert(0, _ap_tag(aps))
        rep.verdict = "hypotheses-falsified"
        return rep
    fits = _fitting_translates(aps, a, rho, domain, cfg)
    if sched is not None or not fits:
        rep.tags.insert(0, sched or {"tag": "(E)", "evidence": {
            "reason": "no almost period translate ball fits the domain",
            "periods": len(aps), "rho": rho}})
        rep.verdict = "hypotheses-falsified"
        return rep

    persists = True
    failures = []
    for tau in fits:
        c = a + tau
        row = {"tau": tau.tolist()}
        try:
            m = shell_selector(decomp, c, rho, n_bound)
        except HypothesisViolation as exc:
            failures.append({"tag": exc.tag, "evidence": exc.evidence})
            row["shell"] = None
            rep.tested.append(row)
            continue
        vals = [complex(F.func(c.reshape(1, -1))[0]) for F in family]
        for j, v in enumerate(vals, start=1):
            rep.traces.setdefault(str(j), []).append((float(tau[0]) if len(tau) == 1 else
                                                      float(np.linalg.norm(tau)), v.real, v.imag))
        hm = vals[m - 1]
        row.update(shell=m, re=hm.real, im=hm.imag, abs=abs(hm))
        rep.tested.append(row)
        persists &= abs(hm) > eps
    if failures:
        rep.tags[:0] = _dedupe(failures)
        rep.verdict = "hypotheses-falsified"
    elif persists:
        rep.verdict = "difference-persists"
    else:
        rep.notes.append("|H_m| dropped below epsilon at a tested almost period")
    if not rep.checks["H_at_witness_exceeds_2eps"]:
        rep.notes.append("|H_j(a)| <= 2 eps for some scale (epsilon override?)")
    return rep


def _dedupe(tags: list[dict]) -> list[dict]:
    seen, out = set(), []
    for t in tags:
        if t["tag"] not in seen:
            seen.add(t["tag"])
            out.append({"tag": t["tag"], "evidence": t["evidence"],
                        "occurrences": sum(1 for u in tags if u["tag"] == t["tag"])})
    return out


def _trend_tags(rep: AuditReport, decomp, mu, nu, cfg: AuditConfig):
    if not decomp.clusters:
        return
    stats = cluster_stats(decomp, mu, nu)
    norms = distances(stats.representatives, np.zeros(stats.representatives.shape[1]))
    rep.checks["clusters"] = len(stats)
    d = _trend(stats.diameters, norms, cfg.trend_ratio, cfg.tol)
    g = _trend(stats.mass_gaps, norms, cfg.trend_ratio, cfg.tol)
    rep.checks["diameter_trend_ok"] = d is None
    rep.checks["mass_gap_trend_ok"] = g is None
    if d is not None:
        rep.tags.append({"tag": "(b2)", "evidence": dict(d, quantity="diameter")})
    if g is not None:
        rep.tags.append({"tag": "(b2)", "evidence": dict(g, quantity="mass gap")})


# -- jet mode --------------------------------------------------------------

def jet_difference(f: JetDistribution, g: JetDistribution) -> JetDistribution:
    keys = sorted({tuple(p) for p in f.points.tolist()} | {tuple(p) for p in g.points.tolist()})
    tables = []
    for k in keys:
        tf, tg = f.table_at(k), g.table_at(k)
        tables.append({j: tf.get(j, 0j) - tg.get(j, 0j) for j in set(tf) | set(tg)})
    return JetDistribution(np.array(keys, dtype=float).reshape(-1, f.dim), tables,
                           order=max(f.order, g.order), dim=f.dim,
                           truncation_radius=min(f.truncation_radius, g.truncation_radius))


def _jet_key(j) -> tuple:
    return (sum(j), tuple(j))


def jet_witness(f: JetDistribution, g: JetDistribution, tol: float = 1e-9):
    """``(a, j0)`` with ``|p_{a,j0} - q_{a,j0}| > tol``, ordered by ``|a|`` then ``(|j|, j)``."""
    radius = _common_radius(f, g)
    keys = {tuple(p) for p in f.points.tolist()} | {tuple(p) for p in g.points.tolist()}
    for k in sorted(keys, key=_point_key):
        if math.isfinite(radius) and _point_key(k)[0] > radius:
            continue
        tf, tg = f.table_at(k), g.table_at(k)
        for j in sorted(set(tf) | set(tg), key=_jet_key):
            if abs(tf.get(j, 0j) - tg.get(j, 0j)) > tol:
                return np.array(k), j
    return None, None


def _jet_lipschitz(diff: JetDistribution, psi) -> float:
    if not len(diff):
        return 0.0
    dim = diff.dim
    sups = {}
    per_atom = np.zeros(len(diff))
    for i, row in enumerate(diff.jets):
        acc = 0.0
        for j, c in row.items():
            for axis in range(dim):
                jj = tuple(v + (1 if k == axis else 0) for k, v in enumerate(j))
                if jj not in sups:
                    sups[jj] = derivative_sup(psi, jj)
                acc += abs(c) * sups[jj]
        per_atom[i] = acc
    reach = 2 * psi.support_radius
    return max(math.fsum(per_atom[distances(diff.points, p) < reach]) for p in diff.points)


def _jet_grid_eval(diff: JetDistribution, psi):
    xs = diff.points[:, 0]
    reach = psi.support_radius

    def grid_eval(start, step, n):
        out = np.zeros(n, dtype=complex)
        lo_x = np.searchsorted(xs, start - reach, side="right")
        hi_x = np.searchsorted(xs, start + step * (n - 1) + reach, side="left")
        for i in range(lo_x, hi_x):
            x = xs[i]
            k0 = max(0, int(math.floor((x - reach - start) / step)))
            k1 = min(n, int(math.ceil((x + reach - start) / step)) + 1)
            if k1 <= k0:
                continue
            u = (x - (start + step * np.arange(k0, k1))).reshape(-1, 1)
            inside = np.abs(u[:, 0]) < reach
            for j, c in diff.jets[i].items():
                vals = np.zeros(k1 - k0)
                vals[inside] = derivative_eval(psi, j, u[inside])
                out[k0:k1] += c * vals
        return out
    return grid_eval


def _cluster_jet_sums(decomp, f, g, j, absolute: bool = False):
    out = []
    for c in decomp.clusters:
        sf = [f.jets[i].get(j, 0j) for i in c.lambda_part]
        sg = [g.jets[i].get(j, 0j) for i in c.gamma_part]
        if absolute:
            out.append(math.fsum(abs(v) for v in sf))
        else:
            out.append(complex(math.fsum(v.real for v in sf) - math.fsum(v.real for v in sg),
                               math.fsum(v.imag for v in sf) - math.fsum(v.imag for v in sg)))
    return np.array(out)


def _jet_trend_tags(rep: AuditReport, decomp, f, g, cfg: AuditConfig):
    if not decomp.clusters:
        return
    reps = decomp.representatives()
    norms = distances(reps, np.zeros(reps.shape[1]))
    all_j = sorted({j for t in f.jets + g.jets for j in t}, key=_jet_key)
    f3, f4 = [], []
    for j in all_j:
        t = _trend(_cluster_jet_sums(decomp, f, g, j), norms, cfg.trend_ratio, cfg.tol)
        if t is not None:
            f3.append(dict(t, j=list(j)))
        sums = _cluster_jet_sums(decomp, f, g, j, absolute=True)
        if len(sums) >= 4:
            cut = float(np.median(norms))
            inner = sums[norms <= cut]
            outer = sums[norms > cut]
            if len(inner) and len(outer) and inner.max() > 0 and \
                    outer.max() > cfg.growth_factor * inner.max():
                f4.append({"j": list(j), "inner_max": float(inner.max()),
                           "outer_max": float(outer.max()), "radius": cut,
                           "growth_factor": cfg.growth_factor})
    rep.checks["f3_ok"] = not f3
    rep.checks["f4_ok"] = not f4
    if f3:
        rep.tags.append({"tag": "(f3)", "evidence": f3})
    if f4:
        rep.tags.append({"tag": "(f4)", "evidence": f4})


def jet_audit(f: JetDistribution, g: JetDistribution, decomp: ClusterDecomposition | None,
              config: AuditConfig | None = None, domain: BallUnion | None = None) -> AuditReport:
    """Jet-mode audit: one probe ``psi = monomial_bump(j0, rho)`` isolating ``(a, j0)``."""
    cfg = config or AuditConfig(mode="jet")
    rep = AuditReport("inconclusive", "jet", cfg.to_json())
    decomp = _coerce_decomp(decomp, domain)
    domain = decomp.domain if decomp.domain is not None else domain
    a, j0 = jet_witness(f, g, cfg.tol)
    if a is None:
        rep.identical = True
        rep.notes.append(f"identical at tol {cfg.tol}")
        return rep
    rep.witness, rep.multi_index = a.tolist(), list(j0)
    rho = isolating_rho([f.points, g.points], a, cfg.rho_cap)
    rep.rho = rho
    _check_truncation((f, g), a, cfg, rho)
    order = max(f.order, g.order)
    psi = monomial_bump(j0, rho, budget=max(order + 1, max(j0) + 2, 4))
    diff = jet_difference(f, g)

    def func(t):
        pts = as_points(t, f.dim)
        return np.atleast_1d(pair_jets(f, psi, pts) - pair_jets(g, psi, pts))
    h_a = complex(func(a.reshape(1, -1))[0])
    rep.witness_values = [[h_a.real, h_a.imag]]
    eps = cfg.epsilon if cfg.epsilon is not None else abs(h_a) / 2
    rep.epsilon = eps
    rep.checks["H_at_witness_matches_jet_gap"] = abs(h_a - (f.coefficient(a, j0) - g.coefficient(a, j0))) < 1e-6
    lip = _jet_lipschitz(diff, psi)
    ge = _jet_grid_eval(diff, psi) if f.dim == 1 else None
    base = sampled(func, (a - 1.0, a + 1.0), rho / 64, lipschitz=lip, grid_eval=ge, label="H")
    aps, step = _search([base], eps, cfg, a)
    rep.step = rep.pitch = step
    rep.scales, rep.count_bound = 1, decomp.count_bound
    rep.periods = _period_vectors(aps, len(a)).tolist()
    rep.relative_dense_radius = aps.relative_dense_radius
    rep.ap_status = "certified in window" if aps.certified else "not certified in window"
    _jet_trend_tags(rep, decomp, f, g, cfg)
    if not aps.certified:
        rep.tags.insert(0, _ap_tag(aps))
        rep.verdict = "hypotheses-falsified"
        return rep
    sched = _schedule_tag(domain, cfg)
    fits = _fitting_translates(aps, a, rho, domain, cfg)
    if sched is not None or not fits:
        rep.tags.insert(0, sched or {"tag": "(E)", "evidence": {
            "reason": "no almost period translate ball fits the domain", "rho": rho}})
        rep.verdict = "hypotheses-falsified"
        return rep
    persists = True
    for tau in fits:
        c = a + tau
        v = complex(func(c.reshape(1, -1))[0])
        near = _clusters_near(decomp.clusters, c, 2 * rho)
        rep.tested.append({"tau": tau.tolist(), "re": v.real, "im": v.imag, "abs": abs(v),
                           "clusters_near": len(near)})
        rep.traces.setdefault("1", []).append((float(tau[0]) if len(tau) == 1 else
                                               float(np.linalg.norm(tau)), v.real, v.imag))
        persists &= abs(v) > eps
    if persists:
        rep.verdict = "difference-persists"
    else:
        rep.notes.append("|H| dropped below epsilon at a tested almost period")
    return rep


# -- dual mode -------------------------------------------------------------

def dual_audit(mu_spec: Spectrum, nu_spec: Spectrum, decomp: ClusterDecomposition | None,
               config: AuditConfig | None = None, domain: BallUnion | None = None) -> AuditReport:
    """Measure-mode machinery run on the frequency side."""
    cfg = config or AuditConfig(mode="dual")
    if cfg.mode != "dual":
        cfg = AuditConfig(**dict(cfg.to_json(), mode="dual"))
    m = mu_spec.as_measure() if isinstance(mu_spec, Spectrum) else mu_spec
    n = nu_spec.as_measure() if isinstance(nu_spec, Spectrum) else nu_spec
    return uniqueness_audit(m, n, decomp, cfg, domain)


def run_audit(mu, nu, decomp, config: AuditConfig, domain: BallUnion | None = None) -> AuditReport:
    if config.mode == "jet":
        if not isinstance(mu, JetDistribution):
            mu = JetDistribution.from_measure(mu)
        if not isinstance(nu, JetDistribution):
            nu = JetDistribution.from_measure(nu)
        return jet_audit(mu, nu, decomp, config, domain)
    if config.mode == "dual":
        return dual_audit(mu, nu, decomp, config, domain)
    return uniqueness_audit(mu, nu, decomp, config, domain)

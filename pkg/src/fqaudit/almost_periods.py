"""Certified epsilon-almost-period search over finite windows.

The supremum over all of R^d is replaced by a grid supremum over a window
plus the correction ``pitch * L`` (``L`` a Lipschitz bound), so a reported
period is an epsilon-almost period *within the window*.  Failing to find
periods means "not certified", never "disproved".
"""

from __future__ import annotations

import csv
import io
import math
from dataclasses import dataclass, field
from typing import Callable, Sequence

import numpy as np

COARSE_SAMPLES = 64
CHUNK_ELEMENTS = 4_000_000


@dataclass(frozen=True)
class SampledFunction:
    """A function ``t -> complex`` on R^d with a sampling window and pitch.

    ``func`` maps an array of shape ``(n, dim)`` to ``n`` complex values.
    ``grid_eval(start, step, n)`` optionally evaluates a one-dimensional
    uniform grid faster than ``func``.
    """

    func: Callable[[np.ndarray], np.ndarray]
    lo: np.ndarray
    hi: np.ndarray
    pitch: float
    lipschitz: float
    grid_eval: Callable[[float, float, int], np.ndarray] | None = field(default=None, repr=False)
    label: str = ""

    @property
    def dim(self) -> int:
        return len(self.lo)

    @property
    def correction(self) -> float:
        return self.pitch * self.lipschitz

    def axis_counts(self) -> list[int]:
        return [int(math.floor((h - l) / self.pitch + 1e-9)) + 1 for l, h in zip(self.lo, self.hi)]

    def grid(self) -> np.ndarray:
        axes = [l + self.pitch * np.arange(n) for l, n in zip(self.lo, self.axis_counts())]
        return np.stack(np.meshgrid(*axes, indexing="ij"), axis=-1).reshape(-1, self.dim)

    def values_on_line(self, start: float, step: float, n: int) -> np.ndarray:
        if self.grid_eval is not None:
            return np.asarray(self.grid_eval(start, step, n), dtype=complex)
        t = (start + step * np.arange(n)).reshape(-1, 1)
        return np.asarray(self.func(t), dtype=complex)

    def values(self, shift=None) -> np.ndarray:
        if self.dim == 1:
            s = 0.0 if shift is None else float(np.asarray(shift).reshape(-1)[0])
            return self.values_on_line(self.lo[0] + s, self.pitch, self.axis_counts()[0])
        g = self.grid()
        if shift is not None:
            g = g + np.asarray(shift, dtype=float).reshape(1, -1)
        return np.asarray(self.func(g), dtype=complex)


def observed_lipschitz(values: np.ndarray, counts: Sequence[int], pitch: float) -> float:
    v = values.reshape(counts)
    best = 0.0
    for axis in range(v.ndim):
        if v.shape[axis] > 1:
            best = max(best, float(np.max(np.abs(np.diff(v, axis=axis)))) / pitch)
    return best


def sampled(func, window, pitch: float, lipschitz: float | None = None,
            grid_eval=None, label: str = "") -> SampledFunction:
    """Build a :class:`SampledFunction`; the Lipschitz bound is raised to the grid observation."""
    lo = np.atleast_1d(np.asarray(window[0], dtype=float))
    hi = np.atleast_1d(np.asarray(window[1], dtype=float))
    if pitch <= 0 or np.any(hi < lo):
        raise ValueError("need pitch > 0 and a nonempty window")
    probe = SampledFunction(func, lo, hi, float(pitch), 0.0, grid_eval, label)
    obs = observed_lipschitz(probe.values(), probe.axis_counts(), pitch)
    lip = obs if lipschitz is None else max(float(lipschitz), obs)
    return SampledFunction(func, lo, hi, float(pitch), lip, grid_eval, label)


def exponential_sum(frequencies, amplitudes=None, dim: int = 1) -> Callable:
    """``t -> sum_k a_k exp(2 pi i <s_k, t>)`` (vectorised over rows of ``t``)."""
    s = np.asarray(frequencies, dtype=float).reshape(-1, dim)
    a = np.ones(len(s), dtype=complex) if amplitudes is None else np.asarray(amplitudes, dtype=complex)

    def func(t):
        t = np.asarray(t, dtype=float).reshape(-1, dim)
        return np.exp(2j * math.pi * (t @ s.T)) @ a
    func.lipschitz = float(2 * math.pi * np.sum(np.abs(a) * np.linalg.norm(s, axis=1)))
    func.amplitude_sum = float(np.sum(np.abs(a)))
    return func


@dataclass(frozen=True)
class Discrepancy:
    value: float
    correction: float

    @property
    def certified(self) -> float:
        return self.value + self.correction


def discrepancy(F: SampledFunction, tau) -> Discrepancy:
    """Grid ``sup_t |F(t + tau) - F(t)|`` over the window, plus ``pitch * L``."""
    tau = np.atleast_1d(np.asarray(tau, dtype=float))
    if np.all(tau == 0):
        return Discrepancy(0.0, F.correction)
    base = F.values()
    moved = F.values(tau)
    return Discrepancy(float(np.max(np.abs(moved - base))), F.correction)


@dataclass
class AlmostPeriodSet:
    epsilon: float
    window: tuple[float, float]
    step: float
    periods: np.ndarray
    discrepancies: np.ndarray
    relative_dense_radius: float
    directions: np.ndarray
    trace_tau: np.ndarray = field(repr=False)
    trace_value: np.ndarray = field(repr=False)
    candidates: int = 0
    evaluated: int = 0

    def __len__(self) -> int:
        return len(self.periods)

    @property
    def certified(self) -> bool:
        """At least two periods with a gap radius finite and below half the window."""
        span = self.window[1] - self.window[0]
        return len(self) >= 2 and self.relative_dense_radius <= span / 2

    def to_json(self) -> dict:
        per = self.periods.tolist()
        return {
            "epsilon": self.epsilon,
            "window": list(self.window),
            "step": self.step,
            "directions": self.directions.tolist(),
            "periods": per,
            "discrepancies": self.discrepancies.tolist(),
            "relative_dense_radius": (self.relative_dense_radius
                                      if math.isfinite(self.relative_dense_radius) else None),
            "certified": self.certified,
            "status": "certified in window" if self.certified else "not certified in window",
            "candidates": self.candidates,
            "evaluated": self.evaluated,
        }

    def trace_csv(self) -> str:
        buf = io.StringIO()
        w = csv.writer(buf, lineterminator="\n")
        w.writerow(["tau", "discrepancy"])
        for t, v in zip(self.trace_tau.tolist(), self.trace_value.tolist()):
            w.writerow([repr(float(t)), repr(float(v))])
        return buf.getvalue()


def relative_dense_radius(aps_or_periods) -> float:
    """Largest gap between consecutive periods (``inf`` with fewer than two)."""
    periods = aps_or_periods.periods if isinstance(aps_or_periods, AlmostPeriodSet) else aps_or_periods
    p = np.asarray(periods, dtype=float)
    if p.ndim == 2 and p.shape[1] > 1:
        return _gap_radius_vectors(p)
    p = np.sort(p.reshape(-1))
    if len(p) < 2:
        return math.inf
    return float(np.max(np.diff(p)))


def _gap_radius_vectors(p: np.ndarray) -> float:
    if len(p) < 2:
        return math.inf
    best = 0.0
    for axis in range(p.shape[1]):
        on_axis = np.all(np.delete(p, axis, axis=1) == 0, axis=1)
        vals = np.sort(p[on_axis, axis])
        if len(vals) >= 2:
            best = max(best, float(np.max(np.diff(vals))))
    return best if best > 0 else math.inf


def _merge(indices: np.ndarray, values: np.ndarray, radius: int) -> np.ndarray:
    """Collapse runs whose consecutive index gaps are <= radius to their minimiser."""
    if len(indices) == 0:
        return indices
    keep = []
    start = 0
    for k in range(1, len(indices) + 1):
        if k == len(indices) or indices[k] - indices[k - 1] > radius:
            run = slice(start, k)
            keep.append(start + int(np.argmin(values[run])))
            start = k
    return indices[keep]


class _LineMember:
    """Precomputed samples of one family member for the 1-D sliding scan."""

    def __init__(self, F: SampledFunction, tau_lo: float, step: float, n_tau: int):
        self.F = F
        self.r = int(round(F.pitch / step))
        self.q = F.axis_counts()[0]
        self.base = F.values()
        self.ext = F.values_on_line(F.lo[0] + tau_lo, step, (self.q - 1) * self.r + n_tau)
        self.thr = None
        order = np.argsort(-np.abs(self.base), kind="stable")
        spread = np.linspace(0, self.q - 1, min(COARSE_SAMPLES, self.q)).astype(int)
        self.samples = np.unique(np.concatenate([spread, order[:COARSE_SAMPLES]]))
        self.nz_base = np.flatnonzero(self.base != 0)
        self.nz_ext = np.flatnonzero(self.ext != 0)
        self.sparse = (len(self.nz_base) < self.q / 4
                       and len(self.nz_ext) < len(self.ext) / (4 * max(self.r, 1)))

    def lower_bound(self, cand: np.ndarray) -> np.ndarray:
        qs = self.samples
        out = np.empty(len(cand))
        chunk = max(1, CHUNK_ELEMENTS // max(len(qs), 1))
        for s in range(0, len(cand), chunk):
            c = cand[s:s + chunk]
            diff = self.ext[qs[None, :] * self.r + c[:, None]] - self.base[qs][None, :]
            out[s:s + chunk] = np.max(np.abs(diff), axis=1)
        return out

    def exact(self, cand: np.ndarray) -> np.ndarray:
        out = np.empty(len(cand))
        if self.sparse:
            span = (self.q - 1) * self.r
            for k, i in enumerate(cand):
                qa = self.nz_base
                lo = np.searchsorted(self.nz_ext, i)
                hi = np.searchsorted(self.nz_ext, i + span, side="right")
                m = self.nz_ext[lo:hi] - i
                qb = m[m % self.r == 0] // self.r
                best = 0.0
                if len(qa):
                    best = float(np.max(np.abs(self.ext[qa * self.r + i] - self.base[qa])))
                if len(qb):
                    best = max(best, float(np.max(np.abs(self.ext[qb * self.r + i] - self.base[qb]))))
                out[k] = best
            return out
        qs = np.arange(self.q)
        chunk = max(1, CHUNK_ELEMENTS // self.q)
        for s in range(0, len(cand), chunk):
            c = cand[s:s + chunk]
            diff = self.ext[qs[None, :] * self.r + c[:, None]] - self.base[None, :]
            out[s:s + chunk] = np.max(np.abs(diff), axis=1)
        return out


def _scan_line(family, eps, tau_lo, step, n_tau):
    members = [_LineMember(F, tau_lo, step, n_tau) for F in family]
    members.sort(key=lambda m: -m.F.lipschitz)
    for m in members:
        m.thr = eps - m.F.correction
        if m.thr <= 0:
            raise ValueError(f"grid correction {m.F.correction:.3g} of {m.F.label or 'member'} "
                             f"is not below epsilon; refine its pitch")
    cand = np.arange(n_tau)
    trace = np.zeros(n_tau)
    for m in members:
        lb = m.lower_bound(cand) + m.F.correction
        trace[cand] = np.maximum(trace[cand], lb)
        cand = cand[lb < eps]
    evaluated = len(cand)
    for m in members:
        if not len(cand):
            break
        ex = m.exact(cand) + m.F.correction
        trace[cand] = np.maximum(trace[cand], ex)
        cand = cand[ex < eps]
    return cand, trace, evaluated


def _scan_generic(family, eps, lo, step, n_tau, direction):
    grids = [F.grid() for F in family]
    bases = [F.values() for F in family]
    trace = np.zeros(n_tau)
    taus = lo + step * np.arange(n_tau)
    ok = np.ones(n_tau, dtype=bool)
    evaluated = 0
    for i, s in enumerate(taus):
        shift = s * direction
        worst = 0.0
        for F, g, b in zip(family, grids, bases):
            if s == 0:
                val = F.correction
            else:
                moved = np.asarray(F.func(g + shift), dtype=complex)
                val = float(np.max(np.abs(moved - b))) + F.correction
            worst = max(worst, val)
            if worst >= eps:
                break
        evaluated += 1
        trace[i] = worst
        ok[i] = worst < eps
    return np.flatnonzero(ok), trace, evaluated


def find_almost_periods(family: Sequence[SampledFunction], epsilon: float, window,
                        step: float, directions=None, check_step: bool = True) -> AlmostPeriodSet:
    """All scanned ``tau`` that are certified common epsilon-almost periods.

    ``window = (lo, hi)`` bounds the scalar shift along each direction
    (default: coordinate axes).  Runs of qualifying shifts closer than
    ``2 * step`` are merged to the local discrepancy minimiser.
    """
    family = list(family)
    if not family:
        raise ValueError("empty family")
    if epsilon <= 0 or step <= 0:
        raise ValueError("epsilon and step must be positive")
    lmax = max(F.lipschitz for F in family)
    if check_step and lmax > 0 and step > epsilon / (4 * lmax) * (1 + 1e-12):
        raise ValueError(f"step {step} exceeds epsilon/(4 L) = {epsilon / (4 * lmax):.6g}")
    dim = family[0].dim
    lo, hi = float(window[0]), float(window[1])
    n_tau = int(math.floor((hi - lo) / step + 1e-9)) + 1
    if directions is None:
        directions = np.eye(dim)
    directions = np.asarray(directions, dtype=float).reshape(-1, dim)
    directions = directions / np.linalg.norm(directions, axis=1, keepdims=True)
    aligned = dim == 1 and all(
        abs(round(F.pitch / step) * step - F.pitch) <= 1e-9 * F.pitch and round(F.pitch / step) >= 1
        for F in family)
    periods, values, tr_tau, tr_val = [], [], [], []
    evaluated_total = 0
    for u in directions:
        if aligned:
            sign = float(u[0])
            if sign > 0:
                idx, trace, ev = _scan_line(family, epsilon, lo, step, n_tau)
            else:
                flipped = [_reflect(F) for F in family]
                idx, trace, ev = _scan_line(flipped, epsilon, lo, step, n_tau)
        else:
            idx, trace, ev = _scan_generic(family, epsilon, lo, step, n_tau, u)
        evaluated_total += ev
        idx = _merge(idx, trace[idx], 2)
        svals = lo + step * np.arange(n_tau)
        for i in idx:
            periods.append(svals[i] * u)
            values.append(trace[i])
        tr_tau.append(svals)
        tr_val.append(trace)
    if dim == 1:
        per = np.array([p[0] for p in periods], dtype=float)
        order = np.argsort(per, kind="stable")
        per = per[order]
    else:
        per = np.array(periods, dtype=float).reshape(-1, dim)
        order = np.arange(len(per))
    vals = np.array(values, dtype=float)[order] if values else np.zeros(0)
    aps = AlmostPeriodSet(epsilon, (lo, hi), step, per, vals, math.inf, directions,
                          np.concatenate(tr_tau), np.concatenate(tr_val),
                          candidates=n_tau * len(directions), evaluated=evaluated_total)
    aps.relative_dense_radius = relative_dense_radius(aps)
    return aps


def _reflect(F: SampledFunction) -> SampledFunction:
    """``t -> F(-t)`` on the mirrored window, so negative directions reuse the scan."""
    def flipped(start, step, n, _g=F.grid_eval):
        return _g(-start - step * (n - 1), step, n)[::-1]
    ge = flipped if F.grid_eval is not None else None
    return SampledFunction(lambda t: F.func(-np.asarray(t)), -F.hi, -F.lo, F.pitch,
                           F.lipschitz, ge, F.label)

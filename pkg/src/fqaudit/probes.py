"""Smooth probe functions and pairings of measures/jet distributions with them.

The standard bump is radial, ``phi(x) = p(|x|)`` with

    p(t) = 1                          t <= 1
    p(t) = g(2-t) / (g(2-t) + g(t-1)) 1 < t < 2,   g(s) = exp(-1/s)
    p(t) = 0                          t >= 2

Derivatives of bump kinds come from central stencils (pitch ``1e-3`` in
units of the probe radius) combined with one Richardson step; gaussians use
the closed Hermite form.
"""

from __future__ import annotations

import math
from dataclasses import dataclass, field
from fractions import Fraction
from functools import lru_cache
from itertools import product

import numpy as np
from scipy.spatial import cKDTree

from .measures import AtomicMeasure, JetDistribution, as_points

KINDS = ("gaussian", "bump", "monomial_bump", "scaled_translate")
STENCIL_PITCH = 1e-3


def bump_profile(t) -> np.ndarray:
    t = np.asarray(t, dtype=float)
    out = np.where(t <= 1.0, 1.0, 0.0)
    mid = (t > 1.0) & (t < 2.0)
    if np.any(mid):
        tm = t[mid]
        a = np.exp(-1.0 / (2.0 - tm))
        b = np.exp(-1.0 / (tm - 1.0))
        out = out.astype(float)
        out[mid] = a / (a + b)
    return out


def _profile_slope(t: np.ndarray) -> np.ndarray:
    a = np.exp(-1.0 / (2.0 - t))
    b = np.exp(-1.0 / (t - 1.0))
    da = -a / (2.0 - t) ** 2
    db = b / (t - 1.0) ** 2
    return (da * b - a * db) / (a + b) ** 2


@lru_cache(maxsize=1)
def bump_slope_bound() -> float:
    """Upper bound on ``|p'|`` (dense grid maximum with a 0.1% margin)."""
    t = np.linspace(1.0, 2.0, 200_001)[1:-1]
    return float(np.max(np.abs(_profile_slope(t)))) * 1.001


@dataclass(frozen=True)
class ProbeFunction:
    """Descriptor of a probe; call it on points of shape ``(n, dim)``."""

    dim: int
    kind: str
    rho: float = 1.0
    j0: tuple[int, ...] = ()
    budget: int = 4
    base: "ProbeFunction | None" = field(default=None, repr=False)
    scale: float = 1.0
    shift: tuple[float, ...] = ()

    def __post_init__(self):
        if self.kind not in KINDS:
            raise ValueError(f"unknown probe kind {self.kind!r}")
        if self.dim < 1:
            raise ValueError("dim must be >= 1")
        if self.rho <= 0 or self.scale <= 0:
            raise ValueError("rho and scale must be positive")
        if self.kind == "monomial_bump" and len(self.j0) != self.dim:
            raise ValueError("j0 must have one entry per dimension")
        if self.kind == "scaled_translate" and self.base is None:
            raise ValueError("scaled_translate needs a base probe")

    @property
    def support_radius(self) -> float:
        if self.kind == "gaussian":
            return math.inf
        if self.kind == "scaled_translate":
            return self.scale * self.base.support_radius
        return 2.0 * self.rho

    @property
    def support_center(self) -> np.ndarray:
        if self.kind == "scaled_translate":
            return np.asarray(self.shift, dtype=float) + self.scale * self.base.support_center
        return np.zeros(self.dim)

    @property
    def length_scale(self) -> float:
        if self.kind == "scaled_translate":
            return self.scale * self.base.length_scale
        return self.rho if self.kind != "gaussian" else 1.0

    def __call__(self, x) -> np.ndarray:
        x = as_points(x, self.dim)
        if self.kind == "gaussian":
            return np.exp(-math.pi * np.sum(x * x, axis=1))
        if self.kind == "scaled_translate":
            return self.base((x - np.asarray(self.shift)) / self.scale)
        r = np.sqrt(np.sum(x * x, axis=1)) if self.dim > 1 else np.abs(x[:, 0])
        val = bump_profile(r / self.rho)
        if self.kind == "monomial_bump":
            mono = np.ones(len(x))
            for i, k in enumerate(self.j0):
                if k:
                    mono = mono * x[:, i] ** k / math.factorial(k)
            val = val * mono
        return val

    def to_json(self) -> dict:
        doc = {"dim": self.dim, "kind": self.kind}
        if self.kind in ("bump", "monomial_bump"):
            doc["rho"] = self.rho
        if self.kind == "monomial_bump":
            doc["j0"] = list(self.j0)
        if self.kind == "scaled_translate":
            doc.update(base=self.base.to_json(), scale=self.scale, shift=list(self.shift))
        doc["budget"] = self.budget
        return doc

    @classmethod
    def from_json(cls, doc: dict) -> "ProbeFunction":
        kind = doc["kind"]
        dim = int(doc.get("dim", 1))
        if kind == "gaussian":
            return gaussian(dim)
        if kind == "bump":
            return bump(dim, float(doc.get("rho", 1.0)), int(doc.get("budget", 4)))
        if kind == "monomial_bump":
            j0 = tuple(int(v) for v in doc["j0"])
            return monomial_bump(j0, float(doc["rho"]), budget=doc.get("budget"))
        if kind == "scaled_translate":
            return scaled_translate(cls.from_json(doc["base"]), float(doc["scale"]),
                                    doc.get("shift"))
        raise ValueError(f"unknown probe kind {kind!r}")


def gaussian(dim: int = 1) -> ProbeFunction:
    """``exp(-pi |x|^2)``, self-dual under the transform used here."""
    return ProbeFunction(dim, "gaussian", budget=16)


def bump(dim: int = 1, rho: float = 1.0, budget: int = 4) -> ProbeFunction:
    """``phi(x / rho)``: equal to 1 on ``B(0, rho)``, supported in ``B(0, 2 rho)``."""
    return ProbeFunction(dim, "bump", rho=float(rho), budget=budget)


def standard_bump(dim: int = 1) -> ProbeFunction:
    if dim < 1:
        raise ValueError("dim must be >= 1")
    return bump(dim, 1.0)


def monomial_bump(j0, rho: float, budget: int | None = None) -> ProbeFunction:
    """``phi(x / rho) x^j0 / j0!``; its ``j0``-th derivative at 0 is 1, all others 0."""
    j0 = tuple(int(v) for v in np.atleast_1d(j0))
    if rho <= 0:
        raise ValueError("rho must be positive")
    if budget is None:
        budget = max(4, max(j0) + 2)
    return ProbeFunction(len(j0), "monomial_bump", rho=float(rho), j0=j0, budget=int(budget))


def scaled_translate(base: ProbeFunction, scale: float, shift=None) -> ProbeFunction:
    """``x -> base((x - shift) / scale)``."""
    shift = tuple(float(v) for v in (np.zeros(base.dim) if shift is None else np.atleast_1d(shift)))
    return ProbeFunction(base.dim, "scaled_translate", budget=base.budget, base=base,
                         scale=float(scale), shift=shift)


def is_single_point(x, dim: int) -> bool:
    """Scalar in 1D, or a flat vector of length ``dim`` for ``dim > 1``."""
    nd = np.ndim(x)
    return nd == 0 or (nd == 1 and dim > 1 and np.size(x) == dim)


# -- derivatives -----------------------------------------------------------

def _hermite(k: int, u: np.ndarray) -> np.ndarray:
    h_prev, h = np.ones_like(u), 2.0 * u
    if k == 0:
        return h_prev
    for n in range(1, k):
        h_prev, h = h, 2.0 * u * h - 2.0 * n * h_prev
    return h


def _gaussian_derivative(j, x: np.ndarray) -> np.ndarray:
    out = np.ones(len(x))
    sq = math.sqrt(math.pi)
    for i, k in enumerate(j):
        xi = x[:, i]
        out = out * (-sq) ** k * _hermite(k, sq * xi) * np.exp(-math.pi * xi * xi)
    return out


@lru_cache(maxsize=None)
def central_stencil(order: int) -> tuple[tuple[int, ...], tuple[float, ...], int]:
    """Offsets, weights and accuracy order of a central difference stencil."""
    # 5 points for orders 1-2, 7 for orders 3-4: fourth-order accurate before Richardson
    r = (order + 1) // 2 + 1
    offsets = list(range(-r, r + 1))
    n = len(offsets)
    # Solve sum_i w_i i^m = order! delta_{m,order} exactly.
    a = [[Fraction(o) ** m for o in offsets] for m in range(n)]
    b = [Fraction(math.factorial(order)) if m == order else Fraction(0) for m in range(n)]
    for col in range(n):
        piv = next(r_ for r_ in range(col, n) if a[r_][col] != 0)
        a[col], a[piv] = a[piv], a[col]
        b[col], b[piv] = b[piv], b[col]
        for r_ in range(n):
            if r_ != col and a[r_][col] != 0:
                f = a[r_][col] / a[col][col]
                a[r_] = [x - f * y for x, y in zip(a[r_], a[col])]
                b[r_] -= f * b[col]
    w = [b[i] / a[i][i] for i in range(n)]
    accuracy = n - order
    accuracy += accuracy % 2
    return tuple(offsets), tuple(float(v) for v in w), accuracy


def _stencil_derivative(f, j, x: np.ndarray, h: float) -> np.ndarray:
    axes = [(i, k) for i, k in enumerate(j) if k > 0]
    if not axes:
        return f(x)
    plans = [central_stencil(k) for _, k in axes]
    # weights sum to zero, so differencing against the center keeps constants exact
    center = f(x)
    total = np.zeros(len(x))
    for combo in product(*[range(len(p[0])) for p in plans]):
        shift = np.zeros(x.shape[1])
        weight = 1.0
        for (axis, k), plan, c in zip(axes, plans, combo):
            shift[axis] = plan[0][c] * h
            weight *= plan[1][c]
        if weight and np.any(shift):
            total = total + weight * (f(x + shift) - center)
    return total / h ** sum(k for _, k in axes)


def derivative_eval(probe: ProbeFunction, j, x) -> np.ndarray:
    """``D^j probe`` at the points ``x`` (shape ``(n, dim)`` or a single point)."""
    j = tuple(int(v) for v in np.atleast_1d(j))
    if len(j) != probe.dim or min(j) < 0:
        raise ValueError(f"bad multi-index {j} for dimension {probe.dim}")
    if max(j) > probe.budget:
        raise ValueError(f"derivative order {max(j)} above probe budget {probe.budget}")
    single = is_single_point(x, probe.dim)
    pts = as_points(x, probe.dim)
    if probe.kind == "gaussian":
        out = _gaussian_derivative(j, pts)
    elif probe.kind == "scaled_translate":
        s = probe.scale
        out = derivative_eval(probe.base, j, (pts - np.asarray(probe.shift)) / s) / s ** sum(j)
    elif sum(j) == 0:
        out = probe(pts)
    else:
        h = STENCIL_PITCH * probe.rho
        p = min(central_stencil(k)[2] for k in j if k > 0)
        coarse = _stencil_derivative(probe, j, pts, 2 * h)
        fine = _stencil_derivative(probe, j, pts, h)
        out = (2 ** p * fine - coarse) / (2 ** p - 1)
    return out[0] if single else out


def derivative_sup(probe: ProbeFunction, j, samples_per_unit: int = 2000) -> float:
    """Grid supremum of ``|D^j probe|`` over its support box (5% margin)."""
    if probe.kind == "gaussian" or not math.isfinite(probe.support_radius):
        r = 6.0
        c = np.zeros(probe.dim)
    else:
        r = probe.support_radius
        c = probe.support_center
    n = int(min(samples_per_unit * 2 * r / probe.length_scale, 40_000 if probe.dim == 1 else 400))
    axes = [np.linspace(ci - r, ci + r, n + 1) for ci in c]
    grid = np.stack(np.meshgrid(*axes, indexing="ij"), axis=-1).reshape(-1, probe.dim)
    return float(np.max(np.abs(derivative_eval(probe, j, grid)))) * 1.05


# -- norms -----------------------------------------------------------------

@dataclass(frozen=True)
class SchwartzNorm:
    value: float
    pitch: float
    m: int


def multi_indices(dim: int, m: int):
    return list(product(range(m + 1), repeat=dim))


def schwartz_norm(probe: ProbeFunction, m: int, grid=None, pitch: float = 1e-3) -> SchwartzNorm:
    """Grid lower bound of ``sup (max(1,|x|))^m max_{|k|<=m} |D^k probe(x)|``.

    ``grid`` is either an explicit ``(n, dim)`` array or ``None``, in which
    case a cube of pitch ``pitch`` covering the support (or ``[-6, 6]^d``
    for gaussians) is used.
    """
    if m > probe.budget:
        raise ValueError("m above probe budget")
    if grid is None:
        r = probe.support_radius if math.isfinite(probe.support_radius) else 6.0
        c = probe.support_center
        axes = [np.arange(ci - r, ci + r + pitch / 2, pitch) for ci in c]
        grid = np.stack(np.meshgrid(*axes, indexing="ij"), axis=-1).reshape(-1, probe.dim)
    else:
        grid = as_points(grid, probe.dim)
        if len(grid) > 1 and probe.dim == 1:
            pitch = float(np.min(np.diff(np.sort(grid[:, 0]))))
    weight = np.maximum(1.0, np.sqrt(np.sum(grid * grid, axis=1))) ** m
    best = np.zeros(len(grid))
    for k in multi_indices(probe.dim, m):
        best = np.maximum(best, np.abs(derivative_eval(probe, k, grid)))
    return SchwartzNorm(float(np.max(weight * best)), float(pitch), int(m))


# -- pairings --------------------------------------------------------------

def _fsum_complex(values) -> complex:
    values = np.asarray(values, dtype=complex)
    return complex(math.fsum(values.real), math.fsum(values.imag))


def _local_atoms(points: np.ndarray, t: np.ndarray, radius: float):
    if not math.isfinite(radius):
        return np.arange(len(points))
    if points.shape[1] == 1:
        lo = np.searchsorted(points[:, 0], t[0] - radius, side="left")
        hi = np.searchsorted(points[:, 0], t[0] + radius, side="right")
        return np.arange(lo, hi)
    return np.asarray(sorted(cKDTree(points).query_ball_point(t, radius)), dtype=int)


def pair_measure(mu: AtomicMeasure, probe: ProbeFunction, t, scale: float = 1.0,
                 guard: bool = False) -> complex | np.ndarray:
    """``sum mass * probe((point - t) / scale)`` with compensated summation.

    ``t`` may be a single point or an array of points; an array returns an
    array.  With ``guard=True`` the convergence guard must pass first.
    """
    if scale <= 0:
        raise ValueError("scale must be positive")
    if guard:
        from .spectral import convergence_guard
        res = convergence_guard(mu, probe)
        if not res.passed:
            raise ValueError(f"convergence guard failed: {res.reason}")
    ts = as_points(t, mu.dim)
    single = is_single_point(t, mu.dim)
    out = np.zeros(len(ts), dtype=complex)
    reach = scale * (probe.support_radius + float(np.linalg.norm(probe.support_center)))
    for i, ti in enumerate(ts):
        idx = _local_atoms(mu.points, ti, reach)
        if len(idx) == 0:
            continue
        vals = probe((mu.points[idx] - ti) / scale)
        out[i] = _fsum_complex(mu.masses[idx] * vals)
    return complex(out[0]) if single else out


def pair_jets(f: JetDistribution, probe: ProbeFunction, t) -> complex | np.ndarray:
    """``f(psi_t) = sum_lambda sum_j p_{lambda,j} (D^j psi)(lambda - t)``."""
    if probe.budget < f.order:
        raise ValueError(f"probe budget {probe.budget} below jet order {f.order}")
    ts = as_points(t, f.dim)
    single = is_single_point(t, f.dim)
    out = np.zeros(len(ts), dtype=complex)
    reach = probe.support_radius + float(np.linalg.norm(probe.support_center))
    for i, ti in enumerate(ts):
        idx = _local_atoms(f.points, ti, reach)
        terms = []
        for a in idx:
            x = (f.points[a] - ti).reshape(1, f.dim)
            for j, c in f.jets[a].items():
                terms.append(c * derivative_eval(probe, j, x)[0])
        out[i] = _fsum_complex(terms) if terms else 0j
    return complex(out[0]) if single else out

"""Constructors for combs, Fibonacci model sets and the dipole counterexample."""

from __future__ import annotations

import math
from itertools import product
from typing import Callable

import numpy as np

from .measures import AtomicMeasure, BallUnion, distances, paired_decomposition
from .spectral import Spectrum

GOLDEN = (1 + math.sqrt(5)) / 2
GOLDEN_CONJ = (1 - math.sqrt(5)) / 2
CANONICAL_WINDOW = (-1.0, GOLDEN - 1.0)
MAX_DIPOLE_ORDER = 40


def _lattice_in_ball(dim: int, spacing: float, shift: np.ndarray, radius: float) -> np.ndarray:
    n = int(math.ceil((radius + np.max(np.abs(shift), initial=0.0)) / spacing)) + 1
    axis = np.arange(-n, n + 1)
    grid = np.array(list(product(axis, repeat=dim)), dtype=float) * spacing + shift
    return grid[distances(grid, np.zeros(dim)) < radius]


def dirac_comb(dim: int = 1, spacing: float = 1.0, mass: complex = 1.0, modulation=None,
               radius: float = 20.0, dual_radius: float | None = None
               ) -> tuple[AtomicMeasure, Spectrum]:
    """``sum mass e^{2 pi i <theta, x>} delta_x`` over ``a Z^d`` and its transform.

    The transform is ``mass a^{-d}`` times the comb on ``a^{-1} Z^d + theta``.
    Both are truncated to open balls (``dual_radius`` defaults to ``radius``).
    """
    if spacing <= 0:
        raise ValueError("spacing must be positive")
    theta = np.zeros(dim) if modulation is None else np.asarray(modulation, dtype=float).reshape(dim)
    dual_radius = radius if dual_radius is None else dual_radius
    pts = _lattice_in_ball(dim, spacing, np.zeros(dim), radius)
    masses = complex(mass) * np.exp(2j * math.pi * (pts @ theta))
    if not np.any(theta):
        masses = np.full(len(pts), complex(mass))
    mu = AtomicMeasure(pts, masses, dim=dim, truncation_radius=radius)
    freqs = _lattice_in_ball(dim, 1.0 / spacing, theta, dual_radius)
    amp = complex(mass) / spacing ** dim
    spec = Spectrum(freqs, np.full(len(freqs), amp), dim=dim, truncation_radius=dual_radius)
    return mu, spec


def model_set(window=CANONICAL_WINDOW, radius: float = 50.0) -> AtomicMeasure:
    """Fibonacci cut-and-project set in ``(-radius, radius)`` with unit masses.

    Lattice Z^2, physical coordinate ``n1 + n2 tau``, internal coordinate
    ``n1 + n2 tau'``; points are kept when the internal coordinate lies in
    the half-open window ``[w0, w1)``.
    """
    w0, w1 = float(window[0]), float(window[1])
    if w0 > w1:
        raise ValueError("window must satisfy w0 <= w1")
    if w1 - w0 > 1 + GOLDEN:
        raise ValueError("window longer than 1 + tau")
    if w0 == w1:
        return AtomicMeasure.empty(1, radius)
    # n2 = (x - y) / sqrt5 is bounded by the physical and internal ranges
    n2_max = int(math.ceil((radius + max(abs(w0), abs(w1))) / math.sqrt(5))) + 1
    pts = []
    for n2 in range(-n2_max, n2_max + 1):
        lo = math.ceil(w0 - n2 * GOLDEN_CONJ) - 1
        hi = math.floor(w1 - n2 * GOLDEN_CONJ) + 1
        for n1 in range(lo, hi + 1):
            y = n1 + n2 * GOLDEN_CONJ
            x = n1 + n2 * GOLDEN
            if w0 <= y < w1 and abs(x) < radius:
                pts.append(x)
    pts = np.array(sorted(pts), dtype=float).reshape(-1, 1)
    return AtomicMeasure(pts, np.ones(len(pts)), dim=1, truncation_radius=radius)


def model_set_density(window=CANONICAL_WINDOW) -> float:
    """Asymptotic point density: window length over the lattice covolume sqrt(5)."""
    return (window[1] - window[0]) / math.sqrt(5)


def remark3_measure(n_max: int) -> AtomicMeasure:
    """``sum_{n <= n_max} 2^{n-1} (delta_{n + 2^-n} - delta_{n - 2^-n})``.

    The atom list is complete on the closed ball of radius ``n_max + 1/2``.
    """
    if n_max < 1:
        raise ValueError("n_max must be >= 1")
    if n_max > MAX_DIPOLE_ORDER:
        raise ValueError(f"n_max above {MAX_DIPOLE_ORDER} rejected (mass overflow policy)")
    pts, ms = [], []
    for n in range(1, n_max + 1):
        off = 2.0 ** -n
        w = 2.0 ** (n - 1)
        pts += [n + off, n - off]
        ms += [w, -w]
    return AtomicMeasure(np.array(pts).reshape(-1, 1), ms, dim=1,
                         truncation_radius=n_max + 0.5)


def _perturbed_points(mu: AtomicMeasure, delta_fn):
    if delta_fn is None:
        return mu.points.copy()
    offs = np.array([np.asarray(delta_fn(p), dtype=float).reshape(mu.dim) for p in mu.points])
    return mu.points + offs.reshape(mu.points.shape)


def perturb(mu: AtomicMeasure, delta_fn: Callable | None = None,
            eps_fn: Callable | None = None) -> AtomicMeasure:
    """``nu`` with atoms ``x + delta(x)`` of mass ``mu(x) + eps(x)``.

    Atoms whose new mass is exactly zero disappear.  Raises ``ValueError``
    when two moved points collide.  The truncation radius survives only
    mass-only perturbations.
    """
    pts = _perturbed_points(mu, delta_fn)
    shifts = np.zeros(len(mu), dtype=complex) if eps_fn is None else \
        np.array([complex(eps_fn(p)) for p in mu.points])
    keys = {tuple(p) for p in pts.tolist()}
    if len(keys) != len(pts):
        raise ValueError("perturbation makes two points collide")
    trunc = mu.truncation_radius if delta_fn is None else math.inf
    return AtomicMeasure(pts, mu.masses + shifts, dim=mu.dim, truncation_radius=trunc)


def perturbation_decomposition(mu: AtomicMeasure, nu: AtomicMeasure, delta_fn=None,
                               domain: BallUnion | None = None, sample_step: float = 0.25):
    """Clusters ``({x}, {x + delta(x)})`` pairing each atom with its image."""
    moved = _perturbed_points(mu, delta_fn)
    gam = {tuple(p) for p in nu.points.tolist()}
    pairs = [(p, q if tuple(q) in gam else None) for p, q in zip(mu.points.tolist(), moved.tolist())]
    return paired_decomposition(mu, nu, pairs, domain, sample_step)


def decay(coef: float = 1.0, power: float = 1.0) -> Callable:
    """``x -> coef / (1 + |x|)^power`` (scalar output)."""
    def fn(p):
        return coef / (1.0 + float(np.linalg.norm(p))) ** power
    return fn


def from_config(cfg: dict):
    """Build objects from a generator config; returns ``(measure, spectrum | None)``."""
    kind = cfg.get("type")
    if kind == "comb":
        return dirac_comb(int(cfg.get("dim", 1)), float(cfg.get("spacing", 1.0)),
                          complex(cfg.get("mass", 1.0)), cfg.get("modulation"),
                          float(cfg.get("radius", 20.0)), cfg.get("dual_radius"))
    if kind == "model_set":
        return model_set(tuple(cfg.get("window", CANONICAL_WINDOW)), float(cfg.get("radius", 50.0))), None
    if kind == "remark3":
        return remark3_measure(int(cfg.get("n_max", 10))), None
    if kind == "perturb":
        base, _ = from_config(cfg["base"])
        delta = cfg.get("delta")
        eps = cfg.get("eps")
        return perturb(base, decay(**delta) if delta else None,
                       decay(**eps) if eps else None), None
    if kind == "scale":
        base, spec = from_config(cfg["base"])
        c = complex(cfg.get("factor", 1.0))
        return base.scaled(c), (spec.scaled(c) if spec is not None else None)
    raise ValueError(f"unknown generator type {kind!r}")

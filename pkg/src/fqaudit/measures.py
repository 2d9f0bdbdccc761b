"""Atomic measures, jet distributions and their geometric predicates.

Countable supports are stored as finite truncations.  ``truncation_radius``
records the radius up to which the atom list is complete (``inf`` when the
caller makes no claim).  All balls are open: membership is ``|x - c| < r``
with an exact float comparison.
"""

from __future__ import annotations

import math
from dataclasses import dataclass, field
from typing import Iterable, Sequence

import numpy as np
from scipy.sparse import coo_matrix
from scipy.sparse.csgraph import connected_components
from scipy.spatial import cKDTree


def as_points(points, dim: int | None = None) -> np.ndarray:
    """Coerce to a float array of shape ``(n, dim)``."""
    arr = np.asarray(points, dtype=float)
    if arr.ndim == 0:
        arr = arr.reshape(1, 1)
    elif arr.ndim == 1:
        if dim is None or dim == 1:
            arr = arr.reshape(-1, 1)
        else:
            arr = arr.reshape(-1, dim)
    if dim is not None and arr.shape[1] != dim and arr.size:
        raise ValueError(f"expected points of dimension {dim}, got {arr.shape[1]}")
    if dim is not None and arr.size == 0:
        arr = arr.reshape(0, dim)
    return arr


def distances(points: np.ndarray, center) -> np.ndarray:
    """Euclidean distances from ``center``; exact ``abs`` in one dimension."""
    points = np.asarray(points, dtype=float)
    center = np.asarray(center, dtype=float).reshape(-1)
    diff = points - center
    if points.shape[-1] == 1:
        return np.abs(diff[..., 0])
    return np.sqrt(np.sum(diff * diff, axis=-1))


def _canonical_order(points: np.ndarray) -> np.ndarray:
    if len(points) == 0:
        return np.arange(0)
    return np.lexsort(points.T[::-1])


def _check_distinct(points: np.ndarray) -> None:
    if len(points) < 2:
        return
    keys = {tuple(p) for p in points.tolist()}
    if len(keys) != len(points):
        raise ValueError("atom points must be distinct")


class _AtomList:
    """Shared storage for point/complex-weight lists (measures and spectra)."""

    __slots__ = ("dim", "points", "masses", "truncation_radius", "_index")

    def __init__(self, points, masses, dim: int | None = None,
                 truncation_radius: float = math.inf):
        masses = np.asarray(masses, dtype=complex).reshape(-1)
        if dim is None:
            arr = np.asarray(points, dtype=float)
            dim = 1 if arr.ndim <= 1 else arr.shape[1]
        if dim < 1:
            raise ValueError("dim must be a positive integer")
        pts = as_points(points, dim) if len(masses) else np.zeros((0, dim))
        if len(pts) != len(masses):
            raise ValueError("points and masses differ in length")
        if not np.all(np.isfinite(masses)) or not np.all(np.isfinite(pts)):
            raise ValueError("points and masses must be finite")
        keep = masses != 0
        pts, masses = pts[keep], masses[keep]
        order = _canonical_order(pts)
        pts, masses = pts[order], masses[order]
        _check_distinct(pts)
        truncation_radius = float(truncation_radius)
        if truncation_radius < 0:
            raise ValueError("truncation_radius must be nonnegative")
        if math.isfinite(truncation_radius) and len(pts):
            if np.max(distances(pts, np.zeros(dim))) > truncation_radius:
                raise ValueError("atom outside the closed truncation ball")
        pts.setflags(write=False)
        masses.setflags(write=False)
        self.dim = int(dim)
        self.points = pts
        self.masses = masses
        self.truncation_radius = truncation_radius
        self._index = None

    @classmethod
    def empty(cls, dim: int, truncation_radius: float = math.inf):
        return cls(np.zeros((0, dim)), np.zeros(0), dim=dim,
                   truncation_radius=truncation_radius)

    def __len__(self) -> int:
        return len(self.masses)

    def __iter__(self):
        return iter(zip(self.points, self.masses))

    def __repr__(self) -> str:
        return (f"{type(self).__name__}(dim={self.dim}, atoms={len(self)}, "
                f"truncation_radius={self.truncation_radius})")

    def __eq__(self, other) -> bool:
        return (type(self) is type(other) and self.dim == other.dim
                and np.array_equal(self.points, other.points)
                and np.array_equal(self.masses, other.masses))

    def __hash__(self):
        return hash((type(self), self.dim, self.points.tobytes(), self.masses.tobytes()))

    def mass_at(self, point) -> complex:
        """Mass of the atom at exactly ``point`` (0 when absent)."""
        if self._index is None:
            self._index = {tuple(p): i for i, p in enumerate(self.points.tolist())}
        i = self._index.get(tuple(np.asarray(point, dtype=float).reshape(-1).tolist()))
        return complex(self.masses[i]) if i is not None else 0j

    def ball_mask(self, center, radius: float) -> np.ndarray:
        return distances(self.points, center) < radius

    def total_mass(self) -> complex:
        return complex(math.fsum(self.masses.real), math.fsum(self.masses.imag))

    def _replace(self, points=None, masses=None, truncation_radius=None):
        return type(self)(self.points if points is None else points,
                          self.masses if masses is None else masses,
                          dim=self.dim,
                          truncation_radius=(self.truncation_radius
                                             if truncation_radius is None
                                             else truncation_radius))

    def scaled(self, c: complex):
        """Multiply every mass by ``c``."""
        return self._replace(masses=self.masses * complex(c))

    def shifted(self, s):
        """Translate support by ``s``; the truncation claim is dropped."""
        s = np.asarray(s, dtype=float).reshape(-1)
        return self._replace(points=self.points + s, truncation_radius=math.inf)


class AtomicMeasure(_AtomList):
    """Finite truncation of ``sum a_lambda delta_lambda`` on R^d."""

    __slots__ = ()

    @classmethod
    def from_atoms(cls, atoms: Iterable[tuple[Sequence[float], complex]],
                   dim: int, truncation_radius: float = math.inf) -> "AtomicMeasure":
        atoms = list(atoms)
        pts = [a[0] for a in atoms]
        ms = [a[1] for a in atoms]
        return cls(np.asarray(pts, dtype=float).reshape(len(atoms), dim)
                   if atoms else np.zeros((0, dim)), ms, dim=dim,
                   truncation_radius=truncation_radius)

    def __add__(self, other: "AtomicMeasure") -> "AtomicMeasure":
        if self.dim != other.dim:
            raise ValueError("dimension mismatch")
        acc: dict[tuple, complex] = {}
        for src in (self, other):
            for p, m in zip(src.points.tolist(), src.masses.tolist()):
                acc[tuple(p)] = acc.get(tuple(p), 0j) + m
        keys = list(acc)
        return AtomicMeasure(np.array(keys, dtype=float).reshape(len(keys), self.dim),
                             [acc[k] for k in keys], dim=self.dim,
                             truncation_radius=min(self.truncation_radius,
                                                   other.truncation_radius))

    def __sub__(self, other: "AtomicMeasure") -> "AtomicMeasure":
        return self + other.scaled(-1)


class JetDistribution:
    """``sum_lambda sum_{|j| <= m} p_{lambda,j} D^j delta_lambda``.

    Coefficients follow the pairing convention
    ``f(psi_t) = sum p_{lambda,j} (D^j psi)(lambda - t)`` with no
    ``(-1)^{|j|}`` factor; classical distributional jets must be sign-adjusted
    by the caller.
    """

    __slots__ = ("dim", "order", "points", "jets", "truncation_radius", "_index")

    def __init__(self, points, jets: Sequence[dict], order: int,
                 dim: int | None = None, truncation_radius: float = math.inf):
        if order < 0:
            raise ValueError("order must be nonnegative")
        if dim is None:
            arr = np.asarray(points, dtype=float)
            dim = 1 if arr.ndim <= 1 else arr.shape[1]
        pts = as_points(points, dim) if len(jets) else np.zeros((0, dim))
        if len(pts) != len(jets):
            raise ValueError("points and jets differ in length")
        clean = []
        for table in jets:
            row = {}
            for j, c in table.items():
                j = tuple(int(v) for v in (j if isinstance(j, (tuple, list)) else (j,)))
                if len(j) != dim or min(j) < 0:
                    raise ValueError(f"bad multi-index {j}")
                if max(j) > order:
                    raise ValueError(f"multi-index {j} exceeds order {order}")
                c = complex(c)
                if not np.isfinite(c):
                    raise ValueError("coefficients must be finite")
                if c != 0:
                    row[j] = row.get(j, 0j) + c
            clean.append({k: v for k, v in sorted(row.items()) if v != 0})
        keep = [i for i, row in enumerate(clean) if row]
        pts = pts[keep]
        clean = [clean[i] for i in keep]
        order_idx = _canonical_order(pts)
        pts = pts[order_idx]
        clean = [clean[i] for i in order_idx]
        _check_distinct(pts)
        truncation_radius = float(truncation_radius)
        if math.isfinite(truncation_radius) and len(pts):
            if np.max(distances(pts, np.zeros(dim))) > truncation_radius:
                raise ValueError("atom outside the closed truncation ball")
        pts.setflags(write=False)
        self.dim = int(dim)
        self.order = int(order)
        self.points = pts
        self.jets = tuple(clean)
        self.truncation_radius = truncation_radius
        self._index = None

    @classmethod
    def from_measure(cls, mu: AtomicMeasure) -> "JetDistribution":
        zero = (0,) * mu.dim
        return cls(mu.points, [{zero: m} for m in mu.masses.tolist()], order=0,
                   dim=mu.dim, truncation_radius=mu.truncation_radius)

    def __len__(self) -> int:
        return len(self.jets)

    def __repr__(self) -> str:
        return f"JetDistribution(dim={self.dim}, order={self.order}, atoms={len(self)})"

    def __eq__(self, other) -> bool:
        return (isinstance(other, JetDistribution) and self.dim == other.dim
                and np.array_equal(self.points, other.points)
                and self.jets == other.jets)

    def __hash__(self):
        return hash((self.dim, self.points.tobytes(), tuple(tuple(sorted(r.items())) for r in self.jets)))

    def table_at(self, point) -> dict:
        if self._index is None:
            self._index = {tuple(p): i for i, p in enumerate(self.points.tolist())}
        i = self._index.get(tuple(np.asarray(point, dtype=float).reshape(-1).tolist()))
        return dict(self.jets[i]) if i is not None else {}

    def coefficient(self, point, j) -> complex:
        return self.table_at(point).get(tuple(j), 0j)

    def coefficient_mass(self) -> np.ndarray:
        """Per-atom sum of coefficient moduli."""
        return np.array([math.fsum(abs(c) for c in row.values()) for row in self.jets])


@dataclass(frozen=True)
class BallUnion:
    """Union of open balls ``B(x_k, r_k)``; stands in for the set E."""

    centers: np.ndarray
    radii: np.ndarray

    def __init__(self, centers, radii, dim: int | None = None):
        radii = np.asarray(radii, dtype=float).reshape(-1)
        if dim is None:
            arr = np.asarray(centers, dtype=float)
            dim = 1 if arr.ndim <= 1 else arr.shape[1]
        centers = as_points(centers, dim) if len(radii) else np.zeros((0, dim))
        if len(centers) != len(radii):
            raise ValueError("centers and radii differ in length")
        if np.any(radii <= 0):
            raise ValueError("ball radii must be positive")
        object.__setattr__(self, "centers", centers)
        object.__setattr__(self, "radii", radii)

    @classmethod
    def from_balls(cls, balls: Iterable[tuple[Sequence[float], float]], dim: int) -> "BallUnion":
        balls = list(balls)
        return cls(np.asarray([b[0] for b in balls], dtype=float).reshape(len(balls), dim),
                   [b[1] for b in balls], dim=dim)

    @property
    def dim(self) -> int:
        return self.centers.shape[1]

    def __len__(self) -> int:
        return len(self.radii)

    def __eq__(self, other) -> bool:
        return (isinstance(other, BallUnion) and np.array_equal(self.centers, other.centers)
                and np.array_equal(self.radii, other.radii))

    def __hash__(self):
        return hash((self.centers.tobytes(), self.radii.tobytes()))

    def contains(self, points) -> np.ndarray:
        pts = as_points(points, self.dim)
        mask = np.zeros(len(pts), dtype=bool)
        for c, r in zip(self.centers, self.radii):
            mask |= distances(pts, c) < r
        return mask

    def contains_ball(self, center, radius: float) -> bool:
        """True if ``B(center, radius)`` lies inside one of the balls."""
        if not len(self):
            return False
        d = distances(self.centers, center)
        return bool(np.any(d + radius <= self.radii))

    def ratios(self) -> np.ndarray:
        norms = distances(self.centers, np.zeros(self.dim))
        with np.errstate(divide="ignore"):
            return np.where(norms > 0, self.radii / np.where(norms > 0, norms, 1), np.inf)

    def schedule_violations(self, start: int = 0) -> list[dict]:
        """Indices breaking ``r_k`` nondecreasing / ``r_k/|x_k|`` nonincreasing."""
        out = []
        ratios = self.ratios()
        for k in range(1, len(self)):
            if self.radii[k] < self.radii[k - 1]:
                out.append({"index": k, "kind": "radius-decreased",
                            "value": float(self.radii[k]), "previous": float(self.radii[k - 1])})
            if k > start and ratios[k] > ratios[k - 1]:
                out.append({"index": k, "kind": "ratio-increased",
                            "value": float(ratios[k]), "previous": float(ratios[k - 1])})
        return out


@dataclass(frozen=True)
class Cluster:
    """One pair ``(Lambda_n, Gamma_n)``; ``points`` is the merged point set."""

    lambda_part: tuple[int, ...]
    gamma_part: tuple[int, ...]
    points: np.ndarray = field(compare=False, repr=False)

    @classmethod
    def from_points(cls, points, dim: int = 1) -> "Cluster":
        pts = as_points(points, dim)
        return cls(tuple(range(len(pts))), (), pts)

    @property
    def representative(self) -> np.ndarray:
        return self.points.mean(axis=0)

    @property
    def diameter(self) -> float:
        if len(self.points) < 2:
            return 0.0
        return float(max(np.max(distances(self.points, p)) for p in self.points))


@dataclass(frozen=True)
class ClusterDecomposition:
    clusters: tuple[Cluster, ...]
    domain: BallUnion | None
    count_bound: int

    def __post_init__(self):
        if self.count_bound < 1:
            raise ValueError("count_bound must be a positive integer")

    def __len__(self) -> int:
        return len(self.clusters)

    def representatives(self) -> np.ndarray:
        dim = self.clusters[0].points.shape[1] if self.clusters else (
            self.domain.dim if self.domain is not None else 1)
        if not self.clusters:
            return np.zeros((0, dim))
        return np.array([c.representative for c in self.clusters])

    def violations(self, mu, nu, sample_step: float = 0.25) -> list[dict]:
        """Return broken invariants (disjointness, domain membership, (b1) count)."""
        out = []
        seen_l: set[int] = set()
        seen_g: set[int] = set()
        for n, c in enumerate(self.clusters):
            if seen_l & set(c.lambda_part) or seen_g & set(c.gamma_part):
                out.append({"kind": "overlap", "cluster": n})
            seen_l |= set(c.lambda_part)
            seen_g |= set(c.gamma_part)
        if self.domain is not None:
            for src, key in ((mu, "lambda_part"), (nu, "gamma_part")):
                idx = sorted({i for c in self.clusters for i in getattr(c, key)})
                if idx and not np.all(self.domain.contains(src.points[idx])):
                    out.append({"kind": "outside-domain", "part": key})
        count = local_cluster_count(self.clusters, self.domain, sample_step)
        if count > self.count_bound:
            out.append({"kind": "(b1)", "observed": count, "bound": self.count_bound})
        return out


@dataclass(frozen=True)
class GrowthProfile:
    radii: np.ndarray
    masses: np.ndarray
    fitted_exponent: float
    superpolynomial: bool
    slope_first: float
    slope_last: float


def total_variation(mu: _AtomList):
    """Same atoms with masses replaced by their moduli."""
    return mu._replace(masses=np.abs(mu.masses).astype(complex))


def _loglog_slope(radii: np.ndarray, masses: np.ndarray) -> float:
    keep = masses > 0
    if np.count_nonzero(keep) < 2:
        return 0.0
    x = np.log(radii[keep])
    y = np.log(masses[keep])
    return float(np.polyfit(x, y, 1)[0])


def growth_profile(mu: _AtomList, radii, superpoly_factor: float = 1.5) -> GrowthProfile:
    """``M(R) = |mu|(B(0,R))`` on the given radii with a log-log power fit.

    The superpolynomial flag compares the slope over the last half of the
    radii with the slope over the first half.
    """
    radii = np.asarray(radii, dtype=float).reshape(-1)
    if len(radii) < 3:
        raise ValueError("growth_profile needs at least 3 radii")
    if np.any(np.diff(radii) <= 0) or radii[0] <= 0:
        raise ValueError("radii must be positive and increasing")
    if radii[-1] > mu.truncation_radius:
        raise ValueError("radii exceed the truncation radius")
    norms = distances(mu.points, np.zeros(mu.dim))
    weights = np.abs(mu.masses)
    masses = np.array([math.fsum(weights[norms < r]) for r in radii])
    exponent = _loglog_slope(radii, masses)
    half = (len(radii) + 1) // 2
    first = _loglog_slope(radii[:half], masses[:half])
    last = _loglog_slope(radii[-half:], masses[-half:])
    flagged = last > 0 and last > superpoly_factor * first
    return GrowthProfile(radii, masses, exponent, bool(flagged), first, last)


def min_separation(points) -> float:
    """Minimum pairwise distance (``inf`` for fewer than two points)."""
    pts = as_points(points)
    if len(pts) < 2:
        return math.inf
    if pts.shape[1] == 1:
        return float(np.min(np.diff(np.sort(pts[:, 0]))))
    d, _ = cKDTree(pts).query(pts, k=2)
    return float(np.min(d[:, 1]))


def _count_within(tree_pts: np.ndarray, tree: cKDTree, centers: np.ndarray,
                  radius: float = 1.0) -> np.ndarray:
    counts = np.zeros(len(centers), dtype=int)
    for i, idx in enumerate(tree.query_ball_point(centers, radius)):
        if idx:
            counts[i] = int(np.count_nonzero(distances(tree_pts[idx], centers[i]) < radius))
    return counts


def _lattice_samples(domain: BallUnion | None, pts: np.ndarray, step: float) -> np.ndarray:
    dim = pts.shape[1]
    boxes = []
    if domain is not None:
        boxes = [(c - r, c + r) for c, r in zip(domain.centers, domain.radii)]
    elif len(pts):
        boxes = [(pts.min(axis=0) - 1, pts.max(axis=0) + 1)]
    out = []
    for lo, hi in boxes:
        axes = [np.arange(np.floor(l / step) * step, h + step, step) for l, h in zip(lo, hi)]
        grid = np.stack(np.meshgrid(*axes, indexing="ij"), axis=-1).reshape(-1, dim)
        out.append(grid)
    return np.concatenate(out) if out else np.zeros((0, dim))


def sparsity_bound(points, domain: BallUnion | None = None, sample_step: float = 0.25,
                   dim: int | None = None) -> tuple[int, bool]:
    """Max over sampled ``x`` in the domain of ``#{p : |p - x| < 1}``.

    Candidate centers: every point, every midpoint of a pair closer than 2,
    and a lattice of pitch ``sample_step`` over the domain.  Returns
    ``(N, exact)``; ``exact`` is True in dimension one with no domain
    restriction, where the midpoint candidates attain the maximum.
    """
    if sample_step <= 0:
        raise ValueError("sample_step must be positive")
    pts = as_points(points, dim)
    d = pts.shape[1] if pts.ndim == 2 else 1
    if len(pts) == 0:
        return 0, d == 1
    tree = cKDTree(pts)
    cands = [pts]
    pairs = tree.query_pairs(2.0, output_type="ndarray")
    if len(pairs):
        gaps = distances(pts[pairs[:, 0]] - pts[pairs[:, 1]], np.zeros(d))
        pairs = pairs[gaps < 2.0]
        cands.append(0.5 * (pts[pairs[:, 0]] + pts[pairs[:, 1]]))
    cands.append(_lattice_samples(domain, pts, sample_step))
    centers = np.concatenate(cands)
    if domain is not None:
        centers = centers[domain.contains(centers)]
    if len(centers) == 0:
        return 0, False
    counts = _count_within(pts, tree, centers)
    return int(counts.max()), bool(d == 1 and domain is None)


def local_cluster_count(clusters: Sequence[Cluster], domain: BallUnion | None,
                        sample_step: float = 0.25) -> int:
    """Max over sampled x of ``#{n : cluster_n meets B(x, 1)}``."""
    if not clusters:
        return 0
    owner = np.concatenate([np.full(len(c.points), n) for n, c in enumerate(clusters)])
    pts = np.concatenate([c.points for c in clusters])
    tree = cKDTree(pts)
    cands = [pts]
    pairs = tree.query_pairs(2.0, output_type="ndarray")
    if len(pairs):
        cands.append(0.5 * (pts[pairs[:, 0]] + pts[pairs[:, 1]]))
    cands.append(_lattice_samples(domain, pts, sample_step))
    centers = np.concatenate(cands)
    if domain is not None:
        centers = centers[domain.contains(centers)]
    best = 0
    for i, idx in enumerate(tree.query_ball_point(centers, 1.0)):
        if idx:
            near = np.asarray(idx)[distances(pts[idx], centers[i]) < 1.0]
            best = max(best, len(set(owner[near].tolist())))
    return best


def restrict(mu, domain: BallUnion | None):
    """Keep exactly the atoms inside the union of open balls."""
    if domain is None:
        return mu
    mask = domain.contains(mu.points) if len(mu) else np.zeros(0, dtype=bool)
    if isinstance(mu, JetDistribution):
        return JetDistribution(mu.points[mask], [mu.jets[i] for i in np.flatnonzero(mask)],
                               order=mu.order, dim=mu.dim,
                               truncation_radius=mu.truncation_radius)
    return mu._replace(points=mu.points[mask], masses=mu.masses[mask])


def _cluster_sort_key(c: Cluster):
    rep = c.representative
    return (float(np.linalg.norm(rep)), tuple(rep.tolist()))


def _finish(clusters: list[Cluster], domain, sample_step: float) -> ClusterDecomposition:
    clusters.sort(key=_cluster_sort_key)
    reps = np.array([c.representative for c in clusters]) if clusters else np.zeros((0, 1))
    n, _ = sparsity_bound(reps, domain, sample_step) if clusters else (0, True)
    return ClusterDecomposition(tuple(clusters), domain, max(1, n))


def cluster_decompose(mu, nu, domain: BallUnion | None, gap: float,
                      sample_step: float = 0.25) -> ClusterDecomposition:
    """Single-linkage grouping of the atoms of mu and nu inside the domain.

    Atoms closer than or equal to ``gap`` are linked, so distinct clusters
    end up more than ``gap`` apart.  Clusters are ordered by the norm of
    their centroid, ties lexicographic.
    """
    if gap <= 0:
        raise ValueError("gap must be positive")
    dim = mu.dim
    lam_idx = np.flatnonzero(domain.contains(mu.points)) if domain is not None else np.arange(len(mu))
    gam_idx = np.flatnonzero(domain.contains(nu.points)) if domain is not None else np.arange(len(nu))
    pts = np.concatenate([mu.points[lam_idx], nu.points[gam_idx]]).reshape(-1, dim)
    if len(pts) == 0:
        return ClusterDecomposition((), domain, 1)
    tree = cKDTree(pts)
    pairs = tree.query_pairs(gap, output_type="ndarray")
    if len(pairs):
        gaps = distances(pts[pairs[:, 0]] - pts[pairs[:, 1]], np.zeros(dim))
        pairs = pairs[gaps <= gap]
    graph = coo_matrix((np.ones(len(pairs)), (pairs[:, 0], pairs[:, 1])) if len(pairs) else
                       (np.zeros(0), (np.zeros(0, int), np.zeros(0, int))),
                       shape=(len(pts), len(pts)))
    _, labels = connected_components(graph, directed=False)
    n_lam = len(lam_idx)
    clusters = []
    for lab in np.unique(labels):
        members = np.flatnonzero(labels == lab)
        lam = tuple(int(lam_idx[i]) for i in members if i < n_lam)
        gam = tuple(int(gam_idx[i - n_lam]) for i in members if i >= n_lam)
        clusters.append(Cluster(lam, gam, pts[members]))
    return _finish(clusters, domain, sample_step)


def paired_decomposition(mu, nu, pairs: Iterable[tuple], domain: BallUnion | None = None,
                         sample_step: float = 0.25) -> ClusterDecomposition:
    """Clusters from explicit ``(lambda_point | None, gamma_point | None)`` pairs.

    Points are looked up exactly; atoms outside the domain are dropped and
    any atom in the domain not mentioned becomes a one-sided singleton.
    """
    dim = mu.dim
    lam_lookup = {tuple(p): i for i, p in enumerate(mu.points.tolist())}
    gam_lookup = {tuple(p): i for i, p in enumerate(nu.points.tolist())}
    used_l: set[int] = set()
    used_g: set[int] = set()
    clusters = []

    def inside(p):
        return domain is None or bool(domain.contains(np.asarray(p).reshape(1, dim))[0])

    for lp, gp in pairs:
        lam, gam = (), ()
        if lp is not None:
            key = tuple(np.asarray(lp, dtype=float).reshape(-1).tolist())
            if key not in lam_lookup:
                raise KeyError(f"no atom of mu at {key}")
            if inside(key):
                lam = (lam_lookup[key],)
        if gp is not None:
            key = tuple(np.asarray(gp, dtype=float).reshape(-1).tolist())
            if key not in gam_lookup:
                raise KeyError(f"no atom of nu at {key}")
            if inside(key):
                gam = (gam_lookup[key],)
        if not lam and not gam:
            continue
        if set(lam) & used_l or set(gam) & used_g:
            raise ValueError("atom used by two clusters")
        used_l |= set(lam)
        used_g |= set(gam)
        pts = np.concatenate([mu.points[list(lam)], nu.points[list(gam)]]).reshape(-1, dim)
        clusters.append(Cluster(lam, gam, pts))
    for i, p in enumerate(mu.points):
        if i not in used_l and inside(p):
            clusters.append(Cluster((i,), (), p.reshape(1, dim)))
    for i, p in enumerate(nu.points):
        if i not in used_g and inside(p):
            clusters.append(Cluster((), (i,), p.reshape(1, dim)))
    return _finish(clusters, domain, sample_step)


def singleton_decomposition(mu, nu, domain: BallUnion | None = None,
                            sample_step: float = 0.25) -> ClusterDecomposition:
    """Pair atoms sitting at identical points; the rest become one-sided."""
    gam = {tuple(p) for p in nu.points.tolist()}
    pairs = [(p, p if tuple(p) in gam else None) for p in mu.points.tolist()]
    return paired_decomposition(mu, nu, pairs, domain, sample_step)


@dataclass(frozen=True)
class ClusterStats:
    representatives: np.ndarray
    diameters: np.ndarray
    mass_gaps: np.ndarray

    def __len__(self) -> int:
        return len(self.diameters)

    def rows(self) -> list[tuple[float, complex]]:
        return list(zip(self.diameters.tolist(), self.mass_gaps.tolist()))

    def trend(self, thresholds) -> list[dict]:
        """Max diameter and max |mass gap| over clusters beyond each radius."""
        norms = distances(self.representatives, np.zeros(self.representatives.shape[1])) \
            if len(self) else np.zeros(0)
        out = []
        for r in np.asarray(thresholds, dtype=float).reshape(-1):
            sel = norms > r
            out.append({
                "radius": float(r),
                "clusters": int(np.count_nonzero(sel)),
                "max_diameter": float(self.diameters[sel].max()) if sel.any() else 0.0,
                "max_mass_gap": float(np.abs(self.mass_gaps[sel]).max()) if sel.any() else 0.0,
            })
        return out


def cluster_stats(decomp: ClusterDecomposition, mu, nu) -> ClusterStats:
    """Per cluster: diameter of the merged points and ``mu(L_n) - nu(G_n)``."""
    diam, gaps, reps = [], [], []
    for c in decomp.clusters:
        lm = mu.masses[list(c.lambda_part)] if c.lambda_part else np.zeros(0, complex)
        gm = nu.masses[list(c.gamma_part)] if c.gamma_part else np.zeros(0, complex)
        gaps.append(complex(math.fsum(lm.real) - math.fsum(gm.real),
                            math.fsum(lm.imag) - math.fsum(gm.imag)))
        diam.append(c.diameter)
        reps.append(c.representative)
    dim = mu.dim
    return ClusterStats(np.array(reps).reshape(-1, dim), np.array(diam, dtype=float),
                        np.array(gaps, dtype=complex))

"""JSON documents for measures, jets, spectra, ball unions and decompositions."""

from __future__ import annotations

import json
import math
from pathlib import Path

import numpy as np

from .measures import (AtomicMeasure, BallUnion, Cluster, ClusterDecomposition, JetDistribution,
                       cluster_decompose, paired_decomposition, singleton_decomposition)
from .spectral import Spectrum


def dumps(doc) -> str:
    """Canonical text: sorted keys, fixed indentation, trailing newline."""
    return json.dumps(doc, sort_keys=True, indent=2, allow_nan=False) + "\n"


def write_json(path, doc) -> Path:
    path = Path(path)
    path.parent.mkdir(parents=True, exist_ok=True)
    path.write_text(dumps(doc))
    return path


def read_json(path) -> dict:
    with open(path) as fh:
        return json.load(fh)


def _radius_out(r: float):
    return r if math.isfinite(r) else None


def _radius_in(r) -> float:
    return math.inf if r is None else float(r)


def _atoms_out(points: np.ndarray, masses: np.ndarray) -> list[dict]:
    return [{"x": p, "re": m.real, "im": m.imag}
            for p, m in zip(points.tolist(), masses.tolist())]


def _atoms_in(rows: list[dict], dim: int):
    pts = np.array([r["x"] for r in rows], dtype=float).reshape(len(rows), dim)
    ms = np.array([complex(r.get("re", 0.0), r.get("im", 0.0)) for r in rows])
    return pts, ms


def measure_to_json(mu: AtomicMeasure) -> dict:
    return {"dim": mu.dim, "truncation_radius": _radius_out(mu.truncation_radius),
            "atoms": _atoms_out(mu.points, mu.masses)}


def measure_from_json(doc: dict) -> AtomicMeasure:
    if "frequencies" in doc:
        return spectrum_from_json(doc).as_measure()
    dim = int(doc["dim"])
    pts, ms = _atoms_in(doc.get("atoms", []), dim)
    return AtomicMeasure(pts, ms, dim=dim, truncation_radius=_radius_in(doc.get("truncation_radius")))


def spectrum_to_json(spec: Spectrum) -> dict:
    return {"dim": spec.dim, "truncation_radius": _radius_out(spec.truncation_radius),
            "frequencies": _atoms_out(spec.points, spec.masses)}


def spectrum_from_json(doc: dict) -> Spectrum:
    dim = int(doc["dim"])
    rows = doc.get("frequencies", doc.get("atoms", []))
    pts, ms = _atoms_in(rows, dim)
    return Spectrum(pts, ms, dim=dim, truncation_radius=_radius_in(doc.get("truncation_radius")))


def jets_to_json(f: JetDistribution) -> dict:
    atoms = []
    for p, row in zip(f.points.tolist(), f.jets):
        atoms.append({"x": p, "jets": [{"j": list(j), "re": c.real, "im": c.imag}
                                       for j, c in row.items()]})
    return {"dim": f.dim, "order": f.order, "truncation_radius": _radius_out(f.truncation_radius),
            "atoms": atoms}


def jets_from_json(doc: dict) -> JetDistribution:
    dim = int(doc["dim"])
    rows = doc.get("atoms", [])
    pts = np.array([r["x"] for r in rows], dtype=float).reshape(len(rows), dim)
    tables = [{tuple(e["j"]): complex(e.get("re", 0.0), e.get("im", 0.0)) for e in r["jets"]}
              for r in rows]
    return JetDistribution(pts, tables, order=int(doc["order"]), dim=dim,
                           truncation_radius=_radius_in(doc.get("truncation_radius")))


def load_object(path):
    """Measure, jet distribution or spectrum, detected from the document keys."""
    doc = read_json(path)
    if "order" in doc:
        return jets_from_json(doc)
    if "frequencies" in doc:
        return spectrum_from_json(doc)
    return measure_from_json(doc)


def balls_to_json(b: BallUnion) -> dict:
    return {"balls": [{"x": c, "r": r} for c, r in zip(b.centers.tolist(), b.radii.tolist())]}


def balls_from_json(doc: dict, dim: int | None = None) -> BallUnion:
    balls = doc["balls"]
    if not balls:
        return BallUnion(np.zeros((0, dim or 1)), [], dim=dim or 1)
    d = dim or len(np.atleast_1d(balls[0]["x"]))
    return BallUnion.from_balls([(b["x"], b["r"]) for b in balls], d)


def decomposition_to_json(dec: ClusterDecomposition) -> dict:
    return {"count_bound": dec.count_bound,
            "domain": balls_to_json(dec.domain) if dec.domain is not None else None,
            "clusters": [{"lambda": list(c.lambda_part), "gamma": list(c.gamma_part),
                          "points": c.points.tolist()} for c in dec.clusters]}


def decomposition_from_json(doc: dict, mu, nu, sample_step: float = 0.25) -> ClusterDecomposition:
    """Explicit clusters, or a recipe ``{"method": "singleton"|"linkage"|"pairs", ...}``."""
    domain = balls_from_json(doc["domain"], mu.dim) if doc.get("domain") else None
    method = doc.get("method")
    if method == "singleton":
        return singleton_decomposition(mu, nu, domain, sample_step)
    if method == "linkage":
        return cluster_decompose(mu, nu, domain, float(doc["gap"]), sample_step)
    if method == "pairs":
        return paired_decomposition(mu, nu, doc["pairs"], domain, sample_step)
    clusters = []
    for c in doc.get("clusters", []):
        lam = tuple(int(i) for i in c.get("lambda", []))
        gam = tuple(int(i) for i in c.get("gamma", []))
        pts = np.concatenate([mu.points[list(lam)], nu.points[list(gam)]]).reshape(-1, mu.dim)
        clusters.append(Cluster(lam, gam, pts))
    return ClusterDecomposition(tuple(clusters), domain, int(doc.get("count_bound", 1)))

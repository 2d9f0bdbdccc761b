"""Command-line front end.

Examples::

    fqaudit generate --type comb --spacing 1 --radius 50 --out runs/
    fqaudit duality --measure runs/measure.json --spectrum runs/spectrum.json --probe gaussian
    fqaudit audit --mu comb.json --nu comb2x.json --config audit.json --out runs/
    fqaudit selfcheck --out runs/a

Exit codes: 0 success, 1 error, 2 hypotheses-falsified verdict, 64 usage.
"""

from __future__ import annotations

import argparse
import json
import math
import os
import sys
from pathlib import Path

import numpy as np

from . import io
from .almost_periods import exponential_sum, find_almost_periods, sampled
from .generators import from_config
from .harness import AuditConfig, run_audit
from .measures import JetDistribution, growth_profile, singleton_decomposition
from .probes import ProbeFunction, gaussian, monomial_bump, pair_jets, pair_measure, standard_bump
from .spectral import Spectrum, convergence_guard, spectral_evaluate

EXIT_OK, EXIT_ERROR, EXIT_FALSIFIED, EXIT_USAGE = 0, 1, 2, 64
OUT_ENV = "FQAUDIT_OUT"


class UsageError(Exception):
    pass


class _Parser(argparse.ArgumentParser):
    def error(self, message):
        self.print_usage(sys.stderr)
        self.exit(EXIT_USAGE, f"{self.prog}: error: {message}\n")


def _out_dir(args) -> Path | None:
    d = args.out or os.environ.get(OUT_ENV)
    if d:
        Path(d).mkdir(parents=True, exist_ok=True)
        return Path(d)
    return None


def _emit(args, name: str, text: str):
    """Write ``text`` to ``--out/name`` or print it."""
    out = _out_dir(args)
    if out is None:
        sys.stdout.write(text)
    else:
        (out / name).write_text(text)


def _load(path):
    try:
        return io.load_object(path)
    except (json.JSONDecodeError, KeyError, TypeError) as exc:
        raise UsageError(f"malformed document {path}: {exc}") from exc


def _read(path) -> dict:
    try:
        return io.read_json(path)
    except json.JSONDecodeError as exc:
        raise UsageError(f"malformed JSON in {path}: {exc}") from exc


def _probe(args, dim: int) -> ProbeFunction:
    spec = args.probe
    if spec.endswith(".json"):
        return ProbeFunction.from_json(_read(spec))
    if spec == "gaussian":
        return gaussian(dim)
    if spec == "bump":
        return standard_bump(dim) if args.rho is None else ProbeFunction.from_json(
            {"dim": dim, "kind": "bump", "rho": args.rho})
    if spec == "monomial_bump":
        if args.j0 is None or args.rho is None:
            raise UsageError("monomial_bump needs --j0 and --rho")
        return monomial_bump(args.j0, args.rho)
    raise UsageError(f"unknown probe {spec!r}")


def _t_grid(args, dim: int) -> np.ndarray:
    lo, hi, n = args.t_grid
    ts = np.linspace(float(lo), float(hi), int(n))
    pts = np.zeros((len(ts), dim))
    pts[:, 0] = ts
    return pts


def _csv(header: str, rows) -> str:
    return header + "\n" + "".join(",".join(repr(float(v)) for v in r) + "\n" for r in rows)


# -- subcommands -----------------------------------------------------------

def cmd_generate(args) -> int:
    if args.config:
        cfg = _read(args.config)
    else:
        if not args.type:
            raise UsageError("generate needs --type or --config")
        cfg = {"type": args.type, "dim": args.dim, "spacing": args.spacing, "radius": args.radius,
               "n_max": args.n_max}
        if args.window is not None and args.type == "model_set":
            cfg["window"] = args.window
        if args.mass is not None:
            cfg["mass"] = args.mass
    mu, spec = from_config(cfg)
    out = _out_dir(args)
    doc = io.measure_to_json(mu)
    if out is None:
        sys.stdout.write(io.dumps(doc))
    else:
        io.write_json(out / f"{args.name}.json", doc)
        if spec is not None:
            io.write_json(out / f"{args.name}_spectrum.json", io.spectrum_to_json(spec))
    return EXIT_OK


def cmd_pair(args) -> int:
    obj = _load(args.measure)
    probe = _probe(args, obj.dim)
    ts = _t_grid(args, obj.dim)
    if isinstance(obj, JetDistribution):
        vals = pair_jets(obj, probe, ts)
    else:
        if isinstance(obj, Spectrum):
            obj = obj.as_measure()
        vals = pair_measure(obj, probe, ts, args.scale, guard=args.guard)
    rows = [(t[0], v.real, v.imag) for t, v in zip(ts, np.atleast_1d(vals))]
    _emit(args, "pair.csv", _csv("t,re,im", rows))
    return EXIT_OK


def cmd_spectral(args) -> int:
    spec = _load(args.spectrum)
    if not isinstance(spec, Spectrum):
        spec = Spectrum(spec.points, spec.masses, dim=spec.dim,
                        truncation_radius=spec.truncation_radius)
    probe = _probe(args, spec.dim)
    ts = _t_grid(args, spec.dim)
    res = spectral_evaluate(spec, probe, ts)
    rows = [(t[0], v.real, v.imag, res.tail_bound) for t, v in zip(ts, res.value)]
    _emit(args, "spectral.csv", _csv("t,re,im,tail_bound", rows))
    return EXIT_OK


def cmd_duality(args) -> int:
    mu = _load(args.measure)
    spec = _load(args.spectrum)
    if not isinstance(spec, Spectrum):
        spec = Spectrum(spec.points, spec.masses, dim=spec.dim,
                        truncation_radius=spec.truncation_radius)
    probe = _probe(args, mu.dim)
    ts = _t_grid(args, mu.dim)
    direct = pair_measure(mu, probe, ts)
    series = spectral_evaluate(spec, probe, ts)
    err = np.abs(direct - series.value)
    k = int(np.argmax(err))
    doc = {"max_error": float(err[k]), "argmax_t": float(ts[k, 0]),
           "tail_bound": series.tail_bound, "terms": series.terms, "points": len(ts),
           "probe": probe.to_json(), "within_tol": bool(err[k] < args.tol)}
    _emit(args, "duality.json", io.dumps(doc))
    return EXIT_OK


def cmd_growth(args) -> int:
    mu = _load(args.measure)
    radii = args.radii
    prof = growth_profile(mu, radii)
    doc = {"radii": prof.radii.tolist(), "masses": prof.masses.tolist(),
           "fitted_exponent": prof.fitted_exponent, "superpolynomial": prof.superpolynomial,
           "slope_first": prof.slope_first, "slope_last": prof.slope_last}
    _emit(args, "growth.json", io.dumps(doc))
    return EXIT_OK


def cmd_almost_periods(args) -> int:
    if args.frequencies:
        family = [exponential_sum([s]) for s in args.frequencies]
        lips = [f.lipschitz for f in family]
    elif args.measure:
        mu = _load(args.measure)
        if isinstance(mu, Spectrum):
            mu = mu.as_measure()
        probe = _probe(args, mu.dim)

        def f(t, mu=mu, probe=probe):
            return np.atleast_1d(pair_measure(mu, probe, t, args.scale))
        family = [f]
        lips = [None]
    else:
        raise UsageError("almost-periods needs --frequencies or --measure")
    window = args.window or (0.0, 20.0)
    tw = args.t_window or (0.0, 20.0)
    pitch = args.step or 2.0 ** -8
    members = [sampled(func, tw, pitch, lipschitz=lip) for func, lip in zip(family, lips)]
    lmax = max(F.lipschitz for F in members)
    if args.step:
        step = args.step
    elif lmax > 0:
        step = 2.0 ** math.floor(math.log2(args.epsilon / (4 * lmax)))
    else:
        step = pitch
    members = [sampled(F.func, tw, step, lipschitz=F.lipschitz) for F in members]
    aps = find_almost_periods(members, args.epsilon, window, step)
    _emit(args, "almost_periods.json", io.dumps(aps.to_json()))
    if _out_dir(args) is not None:
        (_out_dir(args) / "almost_periods_trace.csv").write_text(aps.trace_csv())
    return EXIT_OK


def cmd_audit(args) -> int:
    mu = _load(args.mu)
    nu = _load(args.nu)
    cfg_doc = _read(args.config) if args.config else {}
    if args.tol is not None:
        cfg_doc["tol"] = args.tol
    if args.window is not None:
        cfg_doc["ap_window"] = args.window
    if args.step is not None:
        cfg_doc["step"] = args.step
    if args.mode:
        cfg_doc["mode"] = args.mode
    try:
        cfg = AuditConfig.from_json(cfg_doc)
    except (TypeError, ValueError) as exc:
        raise UsageError(f"bad audit config: {exc}") from exc
    if cfg.mode == "dual":
        mu = mu.as_measure() if isinstance(mu, Spectrum) else mu
        nu = nu.as_measure() if isinstance(nu, Spectrum) else nu
    domain = None
    if args.domain:
        domain = io.balls_from_json(_read(args.domain), mu.dim)
    if args.decomposition:
        decomp = io.decomposition_from_json(_read(args.decomposition), mu, nu,
                                            cfg.sample_step)
    else:
        decomp = singleton_decomposition(mu, nu, domain, cfg.sample_step)
    rep = run_audit(mu, nu, decomp, cfg, domain)
    out = _out_dir(args)
    doc = rep.to_json()
    if out is None:
        sys.stdout.write(io.dumps(doc))
    else:
        io.write_json(out / "audit_report.json", doc)
        for k in sorted(rep.traces, key=int):
            (out / f"audit_H{k}.csv").write_text(rep.traces_csv(k))
    return EXIT_FALSIFIED if rep.verdict == "hypotheses-falsified" else EXIT_OK


def cmd_demo_remark3(args) -> int:
    from .generators import remark3_measure
    from .measures import total_variation
    g = gaussian(1)
    ts = np.linspace(args.t_grid[0], args.t_grid[1], int(args.t_grid[2]))
    sums = {}
    variation = {}
    for n in args.n_max:
        mu = remark3_measure(n)
        sums[str(n)] = [[v.real, v.imag] for v in pair_measure(mu, g, ts)]
        variation[str(n)] = float(np.sum(np.abs(mu.masses)))
    top = remark3_measure(max(args.n_max))
    radii = np.linspace(max(args.n_max) / 4, max(args.n_max), 4)
    prof = growth_profile(top, radii)
    guard = convergence_guard(total_variation(top), g)
    keys = [str(n) for n in args.n_max]
    changes = [float(np.max(np.abs(np.array(sums[b]) - np.array(sums[a]))))
               for a, b in zip(keys, keys[1:])]
    doc = {"t": ts.tolist(), "partial_sums": sums, "variation": variation,
           "max_change_between_truncations": changes,
           "growth": {"radii": prof.radii.tolist(), "masses": prof.masses.tolist(),
                      "superpolynomial": prof.superpolynomial},
           "guard": {"passed": guard.passed, "reason": guard.reason}}
    _emit(args, "remark3.json", io.dumps(doc))
    return EXIT_OK


def cmd_selfcheck(args) -> int:
    from .selfcheck import run_all
    out = _out_dir(args)
    if out is None:
        raise UsageError("selfcheck needs --out or $" + OUT_ENV)
    summary = run_all(out, seed=args.seed)
    for name, ok in summary.items():
        print(f"{'PASS' if ok else 'FAIL'} {name}")
    return EXIT_ERROR if args.strict and not all(summary.values()) else EXIT_OK


# -- parser ----------------------------------------------------------------

def _common(p):
    p.add_argument("--out", help=f"output directory (default ${OUT_ENV}, else stdout)")
    p.add_argument("--seed", type=int, default=0)
    p.add_argument("--tol", type=float, default=None)
    p.add_argument("--window", type=float, nargs=2, default=None, metavar=("LO", "HI"))
    p.add_argument("--step", type=float, default=None)


def _probe_args(p, default="gaussian"):
    p.add_argument("--probe", default=default,
                   help="gaussian | bump | monomial_bump | path to probe JSON")
    p.add_argument("--rho", type=float, default=None)
    p.add_argument("--j0", type=int, nargs="+", default=None)
    p.add_argument("--t-grid", type=float, nargs=3, default=(0.0, 1.0, 101),
                   metavar=("LO", "HI", "N"))


def build_parser() -> argparse.ArgumentParser:
    parser = _Parser(prog="fqaudit", description="Fourier quasicrystal uniqueness audits.")
    sub = parser.add_subparsers(dest="command", required=True, parser_class=_Parser)

    p = sub.add_parser("generate", help="write measure/spectrum JSON")
    _common(p)
    p.add_argument("--type", choices=["comb", "model_set", "remark3"])
    p.add_argument("--config", help="generator config JSON")
    p.add_argument("--dim", type=int, default=1)
    p.add_argument("--spacing", type=float, default=1.0)
    p.add_argument("--radius", type=float, default=20.0)
    p.add_argument("--mass", type=float, default=None)
    p.add_argument("--n-max", type=int, default=10)
    p.add_argument("--name", default="measure")
    p.set_defaults(func=cmd_generate)

    p = sub.add_parser("pair", help="pairing over a t-grid (CSV)")
    _common(p)
    _probe_args(p)
    p.add_argument("--measure", required=True)
    p.add_argument("--scale", type=float, default=1.0)
    p.add_argument("--guard", action="store_true")
    p.set_defaults(func=cmd_pair)

    p = sub.add_parser("spectral", help="spectral series over a t-grid (CSV)")
    _common(p)
    _probe_args(p)
    p.add_argument("--spectrum", required=True)
    p.set_defaults(func=cmd_spectral)

    p = sub.add_parser("duality", help="direct vs spectral max error (JSON)")
    _common(p)
    _probe_args(p)
    p.add_argument("--measure", required=True)
    p.add_argument("--spectrum", required=True)
    p.set_defaults(func=cmd_duality)

    p = sub.add_parser("growth", help="growth profile (JSON)")
    _common(p)
    p.add_argument("--measure", required=True)
    p.add_argument("--radii", type=float, nargs="+", required=True)
    p.set_defaults(func=cmd_growth)

    p = sub.add_parser("almost-periods", help="epsilon-almost-period search (JSON + CSV)")
    _common(p)
    _probe_args(p)
    p.add_argument("--epsilon", type=float, required=True)
    p.add_argument("--frequencies", type=float, nargs="+", default=None)
    p.add_argument("--measure", default=None)
    p.add_argument("--scale", type=float, default=1.0)
    p.add_argument("--t-window", type=float, nargs=2, default=None, metavar=("LO", "HI"))
    p.set_defaults(func=cmd_almost_periods)

    p = sub.add_parser("audit", help="uniqueness audit (JSON report)")
    _common(p)
    p.add_argument("--mu", required=True)
    p.add_argument("--nu", required=True)
    p.add_argument("--config", default=None)
    p.add_argument("--domain", default=None, help="BallUnion JSON")
    p.add_argument("--decomposition", default=None)
    p.add_argument("--mode", choices=["measure", "jet", "dual"], default=None)
    p.set_defaults(func=cmd_audit)

    p = sub.add_parser("demo-remark3", help="bounded pairings with superpolynomial variation")
    _common(p)
    p.add_argument("--n-max", type=int, nargs="+", default=[20, 30])
    p.add_argument("--t-grid", type=float, nargs=3, default=(0.0, 10.0, 41),
                   metavar=("LO", "HI", "N"))
    p.set_defaults(func=cmd_demo_remark3)

    p = sub.add_parser("selfcheck", help="run the reference scenarios and write artifacts")
    _common(p)
    p.add_argument("--strict", action="store_true", help="exit 1 if any scenario fails")
    p.set_defaults(func=cmd_selfcheck)
    return parser


def main(argv=None) -> int:
    parser = build_parser()
    args = parser.parse_args(argv)
    if getattr(args, "tol", None) is None and args.command in ("duality",):
        args.tol = 1e-8
    try:
        return args.func(args)
    except UsageError as exc:
        print(f"fqaudit: usage error: {exc}", file=sys.stderr)
        return EXIT_USAGE
    except (ValueError, RuntimeError, OSError, KeyError) as exc:
        print(f"fqaudit: error: {exc}", file=sys.stderr)
        return EXIT_ERROR


if __name__ == "__main__":
    sys.exit(main())

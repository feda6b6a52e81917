"""``qgeo verify|evolve|report``.

Configuration is a flat JSON file; command-line flags override its keys.
Exit status: 0 on success, 1 when a check fails or a run is unstable, 2 for
an invalid configuration.
"""

from __future__ import annotations

import argparse
import json
import sys
import time
from pathlib import Path

import numpy as np

from . import evolution as ev
from . import weyl as wg
from .grid import DensityGrid, Grid
from .potential import fisher_q_identity
from .suites import DEFAULT_TOLERANCES, SUITES, ConfigError, _jsonable, environment_stamp, run_suite

VERIFY_KEYS = {"suite", "dim", "trials", "seed", "tolerances", "out"}
EVOLVE_KEYS = {"grid", "packet", "potential", "hbar", "mass", "dt", "steps", "scheme",
               "snapshot_every", "accuracy", "compare_scheme", "out"}
REPORT_KEYS = {"density", "hbar", "mass", "accuracy", "support", "chain", "out"}


def _load_config(path, allowed: set) -> dict:
    if path is None:
        return {}
    try:
        cfg = json.loads(Path(path).read_text())
    except (OSError, json.JSONDecodeError) as exc:
        raise ConfigError(f"cannot read config {path}: {exc}") from exc
    if not isinstance(cfg, dict):
        raise ConfigError("config must be a JSON object")
    unknown = sorted(set(cfg) - allowed)
    if unknown:
        raise ConfigError(f"unknown config keys: {', '.join(unknown)}")
    return cfg


def _parse_tol(items) -> dict:
    out = {}
    for item in items or []:
        name, sep, val = item.partition("=")
        if not sep:
            raise ConfigError(f"--tol expects NAME=VAL, got {item!r}")
        if name not in DEFAULT_TOLERANCES:
            raise ConfigError(f"unknown tolerance {name!r}")
        try:
            out[name] = float(val)
        except ValueError as exc:
            raise ConfigError(f"tolerance {name!r} is not a number") from exc
    return out


def _write_json(obj, path) -> None:
    path = Path(path)
    path.parent.mkdir(parents=True, exist_ok=True)
    path.write_text(json.dumps(obj, indent=2, sort_keys=True, ensure_ascii=False) + "\n",
                    encoding="utf-8")


# ---------------------------------------------------------------------------
# verify

def cmd_verify(args) -> int:
    cfg = _load_config(args.config, VERIFY_KEYS)
    suite = args.suite or cfg.get("suite", "all")
    if suite != "all" and suite not in SUITES:
        raise ConfigError(f"unknown suite {suite!r}")
    dim = args.dim if args.dim is not None else cfg.get("dim")
    trials = args.trials if args.trials is not None else cfg.get("trials", 1000)
    seed = args.seed if args.seed is not None else cfg.get("seed", 0)
    tol = dict(cfg.get("tolerances", {}))
    unknown = sorted(set(tol) - set(DEFAULT_TOLERANCES))
    if unknown:
        raise ConfigError(f"unknown tolerance {unknown[0]!r}")
    tol.update(_parse_tol(args.tol))
    out = args.out or cfg.get("out", "qgeo_report.json")
    for name, val in (("trials", trials), ("seed", seed)) + ((("dim", dim),) if dim is not None else ()):
        if not isinstance(val, int) or isinstance(val, bool):
            raise ConfigError(f"{name} must be an integer")
    report = run_suite(suite, dim, trials, seed, tol)
    _write_json(report.as_dict(), out)
    print(report.summary())
    print(f"report written to {out}")
    return 0 if report.passed else 1


# ---------------------------------------------------------------------------
# evolve

def _grid_from(spec: dict) -> Grid:
    try:
        return Grid.uniform(spec.get("n", 512), spec.get("lo", -20.0), spec.get("hi", 20.0),
                            spec.get("boundary", "periodic"), spec.get("ndim"))
    except (TypeError, ValueError) as exc:
        raise ConfigError(f"invalid grid: {exc}") from exc


def cmd_evolve(args) -> int:
    cfg = _load_config(args.config, EVOLVE_KEYS)
    grid = _grid_from(cfg.get("grid", {}))
    hbar, mass = float(cfg.get("hbar", 1.0)), float(cfg.get("mass", 1.0))
    pot = cfg.get("potential", {"kind": "none"})
    kind = pot.get("kind", "none")
    if kind == "none":
        V = None
    elif kind == "harmonic":
        V = ev.harmonic_potential(grid, float(pot.get("omega", 1.0)), mass)
    else:
        raise ConfigError(f"unknown potential kind {kind!r}")
    pk = cfg.get("packet", {})
    sigma = float(pk.get("sigma", 1.0))
    try:
        w = ev.gaussian_packet(grid, sigma, pk.get("x0", 0.0), pk.get("k0", 0.0), hbar, mass, V)
    except ValueError as exc:
        raise ConfigError(f"invalid wavefield: {exc}") from exc
    scheme = cfg.get("scheme", "spectral")
    if scheme not in ev.SCHEMES:
        raise ConfigError(f"unknown scheme {scheme!r}")
    steps = cfg.get("steps", 0)
    if not isinstance(steps, int) or steps < 0:
        raise ConfigError("steps must be a nonnegative integer")
    dt = cfg.get("dt")
    every = cfg.get("snapshot_every")
    acc = cfg.get("accuracy", 4)
    out = Path(args.out or cfg.get("out", "qgeo_evolve"))
    try:
        res = ev.evolve_se(w, dt, steps, scheme, every, acc)
    except ev.UnstableEvolution as exc:
        print(f"unstable evolution: {exc}", file=sys.stderr)
        return 1
    extra = {"environment": environment_stamp()}
    if V is None:
        # closed-form width of the free packet next to each snapshot
        extra["sigma_closed_form"] = [float(ev.free_gaussian_sigma(s.t, sigma, hbar, mass))
                                      for s in res.snapshots]
    if cfg.get("compare_scheme"):
        other = "implicit" if scheme == "spectral" else "spectral"
        try:
            alt = ev.evolve_se(w, res.dt, steps, other, None, acc)
        except ev.UnstableEvolution as exc:
            print(f"unstable evolution ({other}): {exc}", file=sys.stderr)
            return 1
        diff = np.sqrt(grid.integrate(np.abs(alt.final.psi - res.final.psi) ** 2))
        extra["scheme_l2_difference"] = {"other": other, "value": float(diff)}
    manifest = ev.write_stream(res, out, extra)
    for warn in res.warnings:
        print(f"warning: {warn}", file=sys.stderr)
    print(f"{len(res.snapshots)} snapshots, norm drift {res.norm_drift:.3e}, "
          f"energy drift {res.energy_drift:.3e}; manifest {manifest}")
    return 0


# ---------------------------------------------------------------------------
# report

def _density_from(spec: dict, base: Path) -> DensityGrid:
    if "csv" in spec or "header" in spec:
        path = base / spec.get("header", spec.get("csv"))
        try:
            return DensityGrid.load(path).normalize()
        except (OSError, KeyError, ValueError) as exc:
            raise ConfigError(f"density rejected: {exc}") from exc
    family = spec.get("family", "gaussian")
    ndim = int(spec.get("ndim", 3))
    if family == "gaussian":
        s = float(spec.get("sigma", 1.0))
        half = float(spec.get("half_width", 7.5 * s))
        grid = Grid.uniform(spec.get("n", 121), -half, half, "decay", ndim)
        return DensityGrid.from_function(lambda *xs: np.exp(-sum(x * x for x in xs) / (2 * s * s)), grid)
    if family == "uniform":
        grid = Grid.uniform(spec.get("n", 32), 0.0, float(spec.get("length", 1.0)), "periodic", ndim)
        return DensityGrid(np.ones(grid.shape), grid).normalize()
    raise ConfigError(f"unknown density family {family!r}")


def _section(fn):
    try:
        return fn()
    except (ValueError, FloatingPointError, ZeroDivisionError) as exc:
        return {"rejected": str(exc)}


# the tensor-chain cross-check builds the full Riemann tensor; keep it to small grids
CHAIN_MAX_NODES = 64**3


def build_report(rho: DensityGrid, hbar: float = 1.0, mass: float = 1.0, accuracy: int = 8,
                 support: float = 1e-3, chain: bool | None = None) -> dict:
    """All identity reports for one density; sections that cannot be
    evaluated carry a ``rejected`` reason instead of numbers.

    A section is ``zero_consistent`` when every integral it compares is at
    rounding level, measured against ``hbar^2 ndim / (8 m h_min^2)``, the
    size of the Fisher term for a density that varies over one cell.
    """
    grid = rho.grid
    nodes = int(np.prod(grid.shape))
    if chain is None:
        chain = rho.ndim == 3 and nodes <= CHAIN_MAX_NODES
    chain_note = None
    if rho.ndim != 3:
        chain_note = "tensor chain needs a 3-D grid"
    elif not chain:
        chain_note = f"tensor chain skipped: {nodes} nodes exceeds {CHAIN_MAX_NODES}"
        chain = False
    floor = 1e-9 * hbar**2 * grid.ndim / (8 * mass * min(grid.spacing) ** 2)

    def small(*vals):
        return bool(all(abs(v) <= floor for v in vals))

    def fq():
        d = fisher_q_identity(rho, hbar, mass, accuracy).as_dict()
        d["zero_consistent"] = small(d["lhs"], d["rhs"])
        return d

    def qc():
        q = wg.q_curvature_identity(rho, hbar, mass, n=3, accuracy=accuracy, support=support,
                                    with_chain=chain)
        keep = np.isfinite(q.lhs) & np.isfinite(q.rhs)
        d = {"gamma": q.gamma, "max_relative_gap": q.max_relative_gap, "kept": q.kept,
             "chain_ratio": q.chain_ratio,
             "zero_consistent": small(np.abs(q.lhs[keep]).max(initial=0.0),
                                      np.abs(q.rhs[keep]).max(initial=0.0))}
        if chain_note:
            d["chain_skipped"] = chain_note
        return d

    def fc():
        d = wg.fisher_curvature_report(rho, hbar, mass, n=3, accuracy=accuracy, with_chain=chain)
        d["zero_consistent"] = small(d["int_rho_Q"], hbar**2 / (8 * mass) * d["fisher_unhalved"],
                                     hbar**2 / mass * d["int_rho_R"])
        if chain_note:
            d["chain_skipped"] = chain_note
        return d

    rep = {"grid": grid.header(), "hbar": hbar, "mass": mass, "accuracy": accuracy,
           "fisher_q_identity": _section(fq), "q_curvature_identity": _section(qc),
           "fisher_curvature": _section(fc)}
    secs = [rep[k] for k in ("fisher_q_identity", "q_curvature_identity", "fisher_curvature")]
    rep["zero_consistent"] = all(s.get("zero_consistent", False) for s in secs)
    return _jsonable(rep)


def cmd_report(args) -> int:
    cfg = _load_config(args.config, REPORT_KEYS)
    base = Path(args.config).parent if args.config else Path(".")
    try:
        rho = _density_from(cfg.get("density", {}), base)
    except ValueError as exc:
        raise ConfigError(f"density rejected: {exc}") from exc
    t0 = time.perf_counter()
    rep = build_report(rho, float(cfg.get("hbar", 1.0)), float(cfg.get("mass", 1.0)),
                       int(cfg.get("accuracy", 8)), float(cfg.get("support", 1e-3)),
                       cfg.get("chain"))
    rep["timing"] = time.perf_counter() - t0
    rep["environment"] = environment_stamp()
    out = args.out or cfg.get("out", "qgeo_identity_report.json")
    _write_json(rep, out)
    for key in ("fisher_q_identity", "q_curvature_identity", "fisher_curvature"):
        sec = rep[key]
        if "rejected" in sec:
            print(f"{key}: rejected ({sec['rejected']})")
        elif sec.get("zero_consistent"):
            print(f"{key}: all integrals zero-consistent")
        else:
            gap = sec.get("relative_gap", sec.get("max_relative_gap", sec.get("relative_gap_corrected")))
            print(f"{key}: gap {gap}")
    print(f"report written to {out}")
    return 0


# ---------------------------------------------------------------------------

def build_parser() -> argparse.ArgumentParser:
    p = argparse.ArgumentParser(prog="qgeo", description=__doc__.splitlines()[0])
    sub = p.add_subparsers(dest="command", required=True)
    for name in ("verify", "evolve", "report"):
        s = sub.add_parser(name)
        s.add_argument("--config", help="flat JSON configuration file")
        s.add_argument("--out", help="output path (file for verify/report, directory for evolve)")
        if name == "verify":
            s.add_argument("--suite", help="kahler, brackets, fisher, madelung, weyl or all")
            s.add_argument("--dim", type=int, help="Hilbert-space dimension")
            s.add_argument("--trials", type=int)
            s.add_argument("--seed", type=int)
            s.add_argument("--tol", action="append", metavar="NAME=VAL",
                           help="override a check tolerance (repeatable)")
    return p


def main(argv=None) -> int:
    parser = build_parser()
    try:
        args = parser.parse_args(argv)
    except SystemExit as exc:
        return 2 if exc.code else 0
    handler = {"verify": cmd_verify, "evolve": cmd_evolve, "report": cmd_report}[args.command]
    try:
        return handler(args)
    except ConfigError as exc:
        print(f"invalid configuration: {exc}", file=sys.stderr)
        return 2


if __name__ == "__main__":
    sys.exit(main())

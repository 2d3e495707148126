"""Command line runner: ``carnot-monotone <subcommand> [--config FILE] [--seed N] [--workers N] [--out DIR]``.

Exit status is 0 when the experiment passes, 1 when its verdict is FAIL and
2 for configuration errors or violated structural invariants.
"""

from __future__ import annotations

import argparse
import sys
from pathlib import Path

import numpy as np

from . import config as cfgmod
from .condh import find_min_submersion_p, gamma_rank, sphere_sweep
from .density import ball_volume_law, box_gauge, boundary_scan, density_profile
from .errors import CarnotError
from .lie_core import jacobi_error
from .lines import LineMeasureSampler, Window
from .monotone import VERDICTS, constant_normal_test, monotonicity_fraction
from .perimeter import estimate_perimeter, homogeneity_test, minimality_test, random_interior_balls
from .sets import metric_ball, set_from_mapping

PASS, FAIL, ERROR = 0, 1, 2


def _window(cfg):
    w = cfg["window"]
    return Window(np.asarray(w["lo"], float), np.asarray(w["hi"], float))


def _emit(args, name, cfg, summary, rows=None, verdict=True):
    res = cfgmod.write_outputs(args.out, name, cfg, summary, rows)
    print(cfgmod.dumps({"config_hash": res["doc"]["config_hash"], "seed": cfg.get("seed"), "result": summary}))
    return PASS if verdict else FAIL


def cmd_group_info(args, cfg, g):
    err = float(np.max(np.abs(jacobi_error(g.constants)))) if g.n else 0.0
    line = f"{g.name}: step {g.s}, dim {g.n}, layers {list(g.strat.layer_dims)}, Q {g.Q}, checks PASS"
    summary = {
        "name": g.name,
        "step": g.s,
        "dim": g.n,
        "layers": list(g.strat.layer_dims),
        "Q": g.Q,
        "jacobi_max_error": err,
        "grading": "PASS",
        "checks": "PASS",
        "nonzero_constants": [list(t) for t in g.nonzero_constants()],
    }
    print(line)
    cfgmod.write_outputs(args.out, "group-info", cfg, summary)
    return PASS


def cmd_monotone(args, cfg, g):
    E = set_from_mapping(g, cfg["set"])
    s, m = cfg["sampler"], cfg["monotone"]
    sampler = LineMeasureSampler(g, cfg["seed"])
    W = _window(cfg)
    rep = monotonicity_fraction(E, sampler, W, s["count"], s["T"], s["h"], s["min_run"], s["chunk"], args.workers)
    cn = constant_normal_test(E, sampler, s["count"], W, s["h"], s["min_run"], m["noise"], chunk=s["chunk"],
                              workers=args.workers)
    monotone_ok = rep.fraction.value <= m["max_fraction"]
    checks = []
    if E.has("monotone"):
        checks.append(monotone_ok)
    if E.has("constant_normal"):
        checks.append(cn.passed)
    summary = {
        "set": E.description,
        "labels": sorted(E.labels),
        "monotonicity": rep.summary(),
        "monotone_at_resolution": bool(monotone_ok),
        "constant_normal": cn.summary(),
        "verdict": "PASS" if all(checks) else "FAIL",
    }
    n = g.n
    header = [f"X{i + 1}" for i in range(n)] + [f"n{i + 1}" for i in range(n)] + ["verdict", "transitions"]
    rows = ([*map(repr, map(float, X)), *map(repr, map(float, b)), VERDICTS[v], int(c)]
            for X, b, v, c in zip(rep.directions, rep.bases, rep.verdicts, rep.transitions))
    return _emit(args, "monotone-check", cfg, summary, (header, rows), all(checks))


def _perturbations(cfg, g, W):
    p = cfg["perimeter"]
    d = box_gauge(g)
    balls = []
    for b in p["perturbations"]:
        dist = d if b.get("distance", "box_gauge") == "box_gauge" else b["distance"]
        balls.append(metric_ball(g, dist, b["center"], b["radius"]))
    if p["random_perturbations"]:
        balls += random_interior_balls(g, W, p["random_perturbations"], cfg["seed"], tuple(p["perturbation_radii"]), d,
                                       margin=2 * cfg["sampler"]["h"])
    return balls


def cmd_perimeter(args, cfg, g):
    E = set_from_mapping(g, cfg["set"])
    s, p = cfg["sampler"], cfg["perimeter"]
    W = _window(cfg)
    mode = p["mode"]
    sampler = LineMeasureSampler(g, cfg["seed"])
    if mode == "estimate":
        est = estimate_perimeter(E, W, sampler, s["count"], s["h"], s["min_run"], s["chunk"], args.workers)
        return _emit(args, "perimeter", cfg, {"mode": mode, **est.to_dict()})
    if mode == "minimality":
        rep = minimality_test(E, W, _perturbations(cfg, g, W), sampler, s["count"], s["h"], s["min_run"],
                              p["n_sigma"], s["chunk"], args.workers)
        rows = ([*b["center"], b["radius"], b["delta"], b["stderr"], b["verdict"]] for b in rep.deltas)
        header = [f"c{i + 1}" for i in range(g.n)] + ["radius", "delta", "stderr", "verdict"]
        return _emit(args, "perimeter", cfg, {"mode": mode, **rep.to_dict()}, (header, rows), rep.passed)
    if mode == "homogeneity":
        rep = homogeneity_test(E, W, p["lam"], s["count"], cfg["seed"], s["h"], s["min_run"], p["n_sigma"],
                               s["chunk"], args.workers)
        return _emit(args, "perimeter", cfg, {"mode": mode, **rep.to_dict()}, verdict=rep.passed)
    raise CarnotError(f"unknown perimeter mode {mode!r}")


def cmd_density(args, cfg, g):
    dcfg = cfg["density"]
    mode = dcfg["mode"]
    d = box_gauge(g)
    radii = np.asarray(dcfg["radii"], float)
    if mode == "volume":
        rep = ball_volume_law(g, d, radii, dcfg["samples"], cfg["seed"])
        ok = abs(rep.slope - g.Q) <= dcfg["expected_slope_tolerance"]
        summary = {"mode": mode, **rep.to_dict(), "verdict": "PASS" if ok else "FAIL"}
        return _emit(args, "density", cfg, summary, verdict=ok)
    E = set_from_mapping(g, cfg["set"])
    if mode == "profile":
        prof = density_profile(E, dcfg["point"], radii, dcfg["samples"], d, cfg["seed"], g)
        summary = {"mode": mode, "point": prof.point.tolist(), "radii": radii.tolist(),
                   "ratios": [e.to_dict() for e in prof.ratios], "distance": d.to_dict()}
        rows = ([r, e.value, e.stderr, hv] for r, e, hv in zip(radii, prof.ratios, prof.h_values))
        return _emit(args, "density", cfg, summary, (["radius", "ratio", "stderr", "h"], rows))
    if mode == "scan":
        box = dcfg["box"]
        scan = boundary_scan(E, (box["lo"], box["hi"]), dcfg["grid_step"], dcfg["eps"], radii, d,
                             dcfg["samples"], dcfg["r_min"], cfg["seed"], g)
        header = [f"x{i + 1}" for i in range(g.n)]
        for r in radii:
            header += [f"ratio_r{r:g}", f"stderr_r{r:g}"]
        rows = ([*map(float, pt), *[v for e in prof.ratios for v in (e.value, e.stderr)], c]
                for pt, prof, c in zip(scan.points, scan.profiles, scan.classes))
        return _emit(args, "density", cfg, {"mode": mode, **scan.summary()}, (header + ["class"], rows))
    raise CarnotError(f"unknown density mode {mode!r}")


def cmd_gamma(args, cfg, g):
    gc = cfg["gamma"]
    mode = gc["mode"]
    X = np.asarray(gc["direction"], float)
    if mode == "rank":
        rep = gamma_rank(g, X, gc["p"], gc["step"], gc["rtol"])
        return _emit(args, "gamma", cfg, {"mode": mode, "group": g.name, **rep.to_dict()})
    if mode == "sweep":
        rep = sphere_sweep(g, gc["p"], gc["directions"], cfg["seed"] or 0, gc["step"], gc["rtol"])
        rows = ([*d["direction"], d["rank"], d["verdict"]] for d in rep["per_direction"])
        header = [f"X{i + 1}" for i in range(g.r)] + ["rank", "verdict"]
        return _emit(args, "gamma", cfg, {"mode": mode, **rep}, (header, rows))
    if mode == "min-p":
        p = find_min_submersion_p(g, X, gc["p_max"], gc["step"], gc["rtol"])
        summary = {"mode": mode, "group": g.name, "direction": X.tolist(), "p_max": gc["p_max"], "p": p,
                   "openness": "open" if p is not None else "inconclusive"}
        return _emit(args, "gamma", cfg, summary, verdict=p is not None)
    raise CarnotError(f"unknown gamma mode {mode!r}")


COMMANDS = {
    "group-info": (cmd_group_info, None),
    "monotone-check": (cmd_monotone, None),
    "perimeter": (cmd_perimeter, ("estimate", "minimality", "homogeneity")),
    "density": (cmd_density, ("volume", "profile", "scan")),
    "gamma": (cmd_gamma, ("rank", "sweep", "min-p")),
}


def build_parser() -> argparse.ArgumentParser:
    parser = argparse.ArgumentParser(prog="carnot-monotone", description=__doc__.splitlines()[0])
    sub = parser.add_subparsers(dest="command", required=True)
    for name, (_, modes) in COMMANDS.items():
        sp = sub.add_parser(name)
        sp.add_argument("--config", help="TOML experiment file")
        sp.add_argument("--seed", type=int, help="overrides the config seed")
        sp.add_argument("--workers", type=int, default=1, help="threads for line batches (results do not depend on it)")
        sp.add_argument("--out", help="directory for JSON/CSV outputs")
        sp.add_argument("--group", help="preset name or group file, overrides the config")
        if modes:
            sp.add_argument("--mode", choices=modes)
    return parser


def main(argv=None) -> int:
    args = build_parser().parse_args(argv)
    fn, modes = COMMANDS[args.command]
    try:
        overrides = {"seed": args.seed, "group": args.group}
        if modes and args.mode:
            key = "gamma" if args.command == "gamma" else args.command
            overrides[key] = {"mode": args.mode}
        cfg = cfgmod.load_config(args.config, overrides)
        cfgmod.require_seed(cfg, args.command)
        base = Path(args.config).parent if args.config else None
        g = cfgmod.resolve_group(cfg, base)
        cfg = cfgmod.complete_for_group(cfg, g)
        return fn(args, cfg, g)
    except (CarnotError, KeyError, TypeError) as exc:
        print(f"error: {exc}", file=sys.stderr)
        return ERROR


if __name__ == "__main__":
    sys.exit(main())

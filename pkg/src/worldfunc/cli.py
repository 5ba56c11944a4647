"""Command-line frontend: desk experiments on world-function geometries.

Every command resolves its full configuration, honors --seed, writes CSV/JSON
outputs with round-trip decimal precision and emits a run manifest with
sha256 digests, so a run can be reproduced bit for bit from the manifest.

Exit codes: 0 success, 1 usage or configuration error, 2 numerical failure.
"""

from __future__ import annotations

import argparse
import datetime
import hashlib
import json
import os
import sys
from pathlib import Path

import numpy as np

from . import __version__
from .chains import ChainParams, simulate_ensemble
from .equivalence import (
    SolverConfig,
    TubeSamplerConfig,
    find_intransitivity_witness,
    is_equivalent,
    sample_segment_tube,
    solve_equivalent,
)
from .errors import WorldFunctionError
from .geometry import (
    DeformationFunction,
    Geometry,
    GeomVector,
    UnitConstants,
    relative_density,
    sigma,
)
from .objects import Envelope, Skeleton, evaluate_envelope, object_membership


class UsageError(Exception):
    pass


class _Parser(argparse.ArgumentParser):
    def error(self, message):  # argparse would exit(2); usage errors are exit 1
        raise UsageError(message)


# ---------------------------------------------------------------------------
# parsing helpers
# ---------------------------------------------------------------------------

def _fmt(x) -> str:
    if isinstance(x, (int, np.integer)):
        return str(int(x))
    return repr(float(x))


def parse_geometry(spec: str) -> Geometry:
    """Geometry mini-language: 'euclidean:dim=3', 'minkowski',
    'discrete:lambda0_sq=0.01', 'grainy:lambda0_sq=0.01,sigma0=0.03',
    'deformed:file=F.json'; or '@path.json' for a full serialized spec."""
    if spec.startswith("@"):
        return Geometry.from_dict(_load_json(spec[1:]))
    kind, _, rest = spec.partition(":")
    opts = {}
    if rest:
        for item in rest.split(","):
            key, _, val = item.partition("=")
            if not val:
                raise UsageError(f"malformed geometry option {item!r}")
            opts[key.strip()] = val.strip()
    try:
        if kind == "euclidean":
            return Geometry.euclidean(int(opts.get("dim", 3)))
        if kind == "minkowski":
            return Geometry.minkowski()
        if kind == "discrete":
            return Geometry.discrete(float(opts["lambda0_sq"]))
        if kind == "grainy":
            return Geometry.grainy(float(opts["lambda0_sq"]), float(opts["sigma0"]))
        if kind == "deformed":
            d = _load_json(opts["file"])
            return Geometry.deformed(DeformationFunction.from_dict(d),
                                     units=UnitConstants.from_dict(d.get("units", {})))
    except KeyError as exc:
        raise UsageError(f"geometry {kind!r} is missing option {exc.args[0]!r}") from exc
    except (ValueError, WorldFunctionError) as exc:
        raise UsageError(f"bad geometry spec {spec!r}: {exc}") from exc
    raise UsageError(f"unknown geometry kind {kind!r}")


def parse_point(text: str) -> list[float]:
    try:
        return [float(tok) for tok in text.split(",")]
    except ValueError as exc:
        raise UsageError(f"bad point {text!r}: {exc}") from exc


def _load_json(path: str):
    try:
        with open(path, "r", encoding="utf-8") as fh:
            return json.load(fh)
    except OSError as exc:
        raise UsageError(f"cannot read {path}: {exc}") from exc
    except json.JSONDecodeError as exc:
        raise UsageError(f"{path} is not valid JSON: {exc}") from exc


def _to_jsonable(obj):
    if isinstance(obj, np.ndarray):
        return [_to_jsonable(v) for v in obj.tolist()]
    if isinstance(obj, (bool, np.bool_)):
        return bool(obj)
    if isinstance(obj, (np.floating, float)):
        return float(obj)
    if isinstance(obj, (np.integer, int)):
        return int(obj)
    if isinstance(obj, dict):
        return {k: _to_jsonable(v) for k, v in obj.items()}
    if isinstance(obj, (list, tuple)):
        return [_to_jsonable(v) for v in obj]
    return obj


# ---------------------------------------------------------------------------
# output plumbing
# ---------------------------------------------------------------------------

def _write_text(path: Path, text: str):
    path.parent.mkdir(parents=True, exist_ok=True)
    with open(path, "w", encoding="utf-8", newline="\n") as fh:
        fh.write(text)


def _write_csv(path: Path, header: str, rows) -> None:
    lines = [header]
    lines.extend(",".join(_fmt(v) for v in row) for row in rows)
    _write_text(path, "\n".join(lines) + "\n")


def _write_json(path: Path, payload: dict) -> str:
    payload = {"schema_version": 1, **_to_jsonable(payload)}
    text = json.dumps(payload, indent=2, sort_keys=True) + "\n"
    _write_text(path, text)
    return text


def _sha256(path: Path) -> str:
    h = hashlib.sha256()
    with open(path, "rb") as fh:
        for block in iter(lambda: fh.read(65536), b""):
            h.update(block)
    return h.hexdigest()


def _write_manifest(out_dir: Path, command: str, config: dict, seed, outputs,
                    started: str, extras: dict | None = None) -> Path:
    manifest = {
        "schema_version": 1,
        "tool": "worldfunc",
        "version": __version__,
        "command": command,
        "seed": seed,
        "config": _to_jsonable(config),
        "threads": os.environ.get("WORLDFUNC_THREADS"),
        "started_utc": started,
        "finished_utc": _utcnow(),
        "outputs": {p.name: {"path": str(p), "sha256": _sha256(p)} for p in outputs},
    }
    if extras:
        manifest.update(_to_jsonable(extras))
    path = out_dir / f"{command}_manifest.json"
    _write_text(path, json.dumps(manifest, indent=2, sort_keys=True) + "\n")
    return path


def _utcnow() -> str:
    return datetime.datetime.now(datetime.timezone.utc).isoformat()


# ---------------------------------------------------------------------------
# commands
# ---------------------------------------------------------------------------

def cmd_sigma(args) -> int:
    started = _utcnow()
    g = parse_geometry(args.geometry)
    pts = [np.asarray(p, dtype=float) for p in _load_json(args.points)]
    rows = []
    for i in range(len(pts)):
        for j in range(i, len(pts)):
            rows.append((i, j, sigma(g, pts[i], pts[j])))
    out = Path(args.out_dir) / args.out
    _write_csv(out, "i,j,sigma", rows)
    config = {"geometry": g.to_dict(), "points": args.points, "out": str(out)}
    _write_manifest(Path(args.out_dir), "sigma", config, args.seed, [out], started)
    print(f"wrote {len(rows)} sigma values to {out}")
    return 0


def cmd_eqv(args) -> int:
    started = _utcnow()
    g = parse_geometry(args.geometry)
    out_dir = Path(args.out_dir)
    if args.mode == "check":
        a = GeomVector(parse_point(args.a_origin), parse_point(args.a_end))
        b = GeomVector(parse_point(args.b_origin), parse_point(args.b_end))
        rep = is_equivalent(g, a, b, args.tol)
        payload = {"equivalent": rep.equivalent,
                   "residual_parallel": rep.residual_parallel,
                   "residual_length": rep.residual_length,
                   "scale": rep.scale, "tol": rep.tol}
        out = out_dir / "eqv_check.json"
        text = _write_json(out, payload)
    elif args.mode == "solve":
        cfg = SolverConfig(starts=args.starts, max_iter=args.max_iter, tol=args.tol,
                           dedupe_radius=args.dedupe_radius,
                           box_half_width=args.box_half_width, seed=args.seed)
        sol = solve_equivalent(g, parse_point(args.p0), parse_point(args.p1),
                               parse_point(args.q0), cfg)
        out = out_dir / "eqv_solve.json"
        text = _write_json(out, sol.to_dict())
    else:
        witness = find_intransitivity_witness(g, seed=args.seed, budget=args.budget)
        if witness is None:
            payload = {"found": False, "budget": args.budget}
        else:
            a, b, c = witness
            payload = {"found": True,
                       "a": {"origin": a.origin, "end": a.end},
                       "b": {"origin": b.origin, "end": b.end},
                       "c": {"origin": c.origin, "end": c.end}}
        out = out_dir / "eqv_witness.json"
        text = _write_json(out, payload)
    config = {"geometry": g.to_dict(), "mode": args.mode,
              "args": {k: v for k, v in vars(args).items()
                       if k not in ("func", "command") and v is not None}}
    _write_manifest(out_dir, f"eqv_{args.mode}", config, args.seed, [out], started)
    sys.stdout.write(text)
    return 0


def cmd_tube(args) -> int:
    started = _utcnow()
    g = parse_geometry(args.geometry)
    cfg = TubeSamplerConfig(stations=args.stations, directions=args.directions,
                            tol=args.tol, seed=args.seed, max_radius=args.max_radius,
                            scan_points=args.scan_points)
    tube = sample_segment_tube(g, parse_point(args.p0), parse_point(args.p1), cfg)
    out_dir = Path(args.out_dir)
    cloud = out_dir / args.out_cloud
    coords = ",".join(f"x{i}" for i in range(g.dim))
    _write_csv(cloud, f"t,r,{coords}", tube.points)
    profile = out_dir / args.out_profile
    _write_csv(profile, "t,radius",
               zip(tube.arc_positions, tube.profile))
    config = {"geometry": g.to_dict(), "p0": args.p0, "p1": args.p1, **cfg.to_dict()}
    _write_manifest(out_dir, "tube", config, args.seed, [cloud, profile], started)
    print(f"wrote {tube.points.shape[0]} member points to {cloud}, profile to {profile}")
    return 0


def cmd_object(args) -> int:
    started = _utcnow()
    g = parse_geometry(args.geometry)
    sk = Skeleton(tuple(np.asarray(p, dtype=float) for p in _load_json(args.skeleton)))
    env = Envelope.cylinder() if args.envelope == "cylinder" \
        else Envelope.from_dict(_load_json(args.envelope))
    if args.probes:
        probes = [np.asarray(p, dtype=float) for p in _load_json(args.probes)]
    else:
        rng = np.random.default_rng(args.seed)
        center = np.mean(np.stack(sk.points), axis=0)
        probes = [center + rng.uniform(-args.box_half_width, args.box_half_width, g.dim)
                  for _ in range(args.random)]
    rows = []
    for p in probes:
        val = evaluate_envelope(g, sk, env, p)
        member = object_membership(g, sk, env, p, args.tol)
        rows.append((*p, val, 1.0 if member else 0.0))
    out = Path(args.out_dir) / args.out
    coords = ",".join(f"x{i}" for i in range(g.dim))
    _write_csv(out, f"{coords},envelope_value,member", rows)
    config = {"geometry": g.to_dict(), "skeleton": args.skeleton,
              "envelope": args.envelope, "probes": len(probes), "tol": args.tol}
    _write_manifest(Path(args.out_dir), "object", config, args.seed, [out], started)
    print(f"wrote {len(rows)} probes to {out}")
    return 0


def cmd_chain(args) -> int:
    started = _utcnow()
    g = parse_geometry(args.geometry)
    params = ChainParams(geometry=g, link_sigma_m=args.link_sigma_m,
                         steps=args.steps, ensemble=args.ensemble, seed=args.seed)
    out_dir = Path(args.out_dir)
    outputs = []
    if args.raw:
        stats, points = simulate_ensemble(params, keep_chains=True)
        raw = out_dir / args.out_raw
        rows = ((i, k, *points[i, k])
                for i in range(points.shape[0]) for k in range(points.shape[1]))
        _write_csv(raw, "chain_id,step,x0,x1,x2,x3", rows)
        outputs.append(raw)
    else:
        stats = simulate_ensemble(params)
    out = out_dir / args.out_stats
    _write_csv(out, "step,mean_t,var_transverse,mean_angle",
               zip(stats.step, stats.mean_t, stats.var_transverse, stats.mean_angle))
    outputs.insert(0, out)
    extras = {"deflection_angle": params.deflection,
              "max_link_length_drift": float(stats.link_length_drift.max())}
    _write_manifest(out_dir, "chain", params.to_dict(), args.seed, outputs, started,
                    extras=extras)
    print(f"wrote chain statistics for {params.ensemble} chains x {params.steps} steps to {out}")
    return 0


def cmd_density(args) -> int:
    started = _utcnow()
    try:
        lo, hi, count = args.grid.split(":")
        grid = np.linspace(float(lo), float(hi), int(count))
    except ValueError as exc:
        raise UsageError(f"bad grid {args.grid!r}, expected MIN:MAX:COUNT") from exc
    rho = relative_density(args.lambda0_sq, args.sigma0, grid)
    out = Path(args.out_dir) / args.out
    _write_csv(out, "sigma_g,rho", zip(grid, np.atleast_1d(rho)))
    config = {"lambda0_sq": args.lambda0_sq, "sigma0": args.sigma0, "grid": args.grid}
    _write_manifest(Path(args.out_dir), "density", config, args.seed, [out], started)
    print(f"wrote {grid.size} density values to {out}")
    return 0


# ---------------------------------------------------------------------------
# argument wiring
# ---------------------------------------------------------------------------

def _build_parser() -> _Parser:
    parser = _Parser(prog="worldfunc",
                     description="Desk experiments on world-function geometries")
    parser.add_argument("--version", action="version", version=f"worldfunc {__version__}")
    sub = parser.add_subparsers(dest="command", required=True)

    def common(p):
        p.add_argument("--geometry", required=True,
                       help="euclidean:dim=N | minkowski | discrete:lambda0_sq=X | "
                            "grainy:lambda0_sq=X,sigma0=Y | deformed:file=F.json | @spec.json")
        p.add_argument("--seed", type=int, default=0)
        p.add_argument("--out-dir", default=".")
        p.add_argument("--tol", type=float, default=1e-9)

    p = sub.add_parser("sigma", help="table of world-function values for a point file")
    common(p)
    p.add_argument("--points", required=True, help="JSON file with an array of points")
    p.add_argument("--out", default="sigma.csv")
    p.set_defaults(func=cmd_sigma)

    p = sub.add_parser("eqv", help="equivalence check / solve / intransitivity witness")
    p.add_argument("mode", choices=["check", "solve", "witness"])
    common(p)
    p.add_argument("--a-origin")
    p.add_argument("--a-end")
    p.add_argument("--b-origin")
    p.add_argument("--b-end")
    p.add_argument("--p0")
    p.add_argument("--p1")
    p.add_argument("--q0")
    p.add_argument("--starts", type=int, default=256)
    p.add_argument("--max-iter", type=int, default=100)
    p.add_argument("--dedupe-radius", type=float, default=1e-4)
    p.add_argument("--box-half-width", type=float, default=5.0)
    p.add_argument("--budget", type=int, default=10000)
    p.set_defaults(func=cmd_eqv)

    p = sub.add_parser("tube", help="sample a segment as a tube")
    common(p)
    p.add_argument("--p0", required=True)
    p.add_argument("--p1", required=True)
    p.add_argument("--stations", type=int, default=64)
    p.add_argument("--directions", type=int, default=16)
    p.add_argument("--max-radius", type=float, default=None)
    p.add_argument("--scan-points", type=int, default=64)
    p.add_argument("--out-cloud", default="tube_cloud.csv")
    p.add_argument("--out-profile", default="tube_profile.csv")
    p.set_defaults(func=cmd_tube)

    p = sub.add_parser("object", help="probe membership of a skeleton/envelope object")
    common(p)
    p.add_argument("--skeleton", required=True, help="JSON file with skeleton points")
    p.add_argument("--envelope", default="cylinder",
                   help="'cylinder' or a JSON expression file")
    p.add_argument("--probes", help="JSON file with probe points")
    p.add_argument("--random", type=int, default=1000,
                   help="number of random probes when --probes is absent")
    p.add_argument("--box-half-width", type=float, default=2.0)
    p.add_argument("--out", default="object_probes.csv")
    p.set_defaults(func=cmd_object)

    p = sub.add_parser("chain", help="simulate a world-chain ensemble")
    common(p)
    p.add_argument("--link-sigma-m", type=float, required=True,
                   help="Minkowski world function per link (2 sigma_M = squared length)")
    p.add_argument("--steps", type=int, required=True)
    p.add_argument("--ensemble", type=int, default=1)
    p.add_argument("--raw", action="store_true", help="also write raw chain points")
    p.add_argument("--out-stats", default="chain_stats.csv")
    p.add_argument("--out-raw", default="chains.csv")
    p.set_defaults(func=cmd_chain)

    p = sub.add_parser("density", help="relative point density over a sigma_g grid")
    p.add_argument("--lambda0-sq", type=float, required=True)
    p.add_argument("--sigma0", type=float, required=True)
    p.add_argument("--grid", required=True, help="MIN:MAX:COUNT")
    p.add_argument("--seed", type=int, default=0)
    p.add_argument("--out-dir", default=".")
    p.add_argument("--out", default="density.csv")
    p.set_defaults(func=cmd_density)

    return parser


def main(argv=None) -> int:
    parser = _build_parser()
    try:
        args = parser.parse_args(argv)
        if args.command == "eqv":
            needed = {"check": ["a_origin", "a_end", "b_origin", "b_end"],
                      "solve": ["p0", "p1", "q0"], "witness": []}[args.mode]
            for name in needed:
                if getattr(args, name) is None:
                    raise UsageError(f"eqv {args.mode} requires --{name.replace('_', '-')}")
        return args.func(args)
    except UsageError as exc:
        print(f"error: {exc}", file=sys.stderr)
        return 1
    except WorldFunctionError as exc:
        print(f"numerical failure: {exc}", file=sys.stderr)
        return 2


def entry() -> None:
    sys.exit(main())

"""Command-line entry point: every workflow without the service or UI.

Exit codes: 0 success, 1 usage/IO/validation error, 2 audit found a
privacy violation (so CI can tell a broken run from a failed guarantee).
"""
from __future__ import annotations

import argparse
import json
import os
import sys
from pathlib import Path

import numpy as np

from .audit import audit_geo_ind, audit_infinity, audit_location_set, audit_policy
from .grid import GridWorld
from .ingest import BBox, discretize, parse_geolife, parse_gowalla
from .mechanism import MechanismConfig, graph_exponential_matrix, identity_matrix, perturb_trajectory
from .policy import PolicyGraph
from .sim import build_policy, metrics_json, parse_scenario, run_scenario
from .trajectory import StreamRecord, read_stream_csv, stream_to_trajectories, write_stream_csv

DEFAULT_ADDR = "127.0.0.1:8000"


def _parse_grid(spec: str) -> tuple[int, int]:
    try:
        w, _, h = spec.lower().partition("x")
        return int(w), int(h)
    except ValueError:
        raise SystemExit(f"--grid must look like 8x8, got {spec!r}")


def _load_policy(value: str, grid: GridWorld, seed: int) -> PolicyGraph:
    """Treat the value as a JSON file when it exists, else as a kind string."""
    path = Path(value)
    if path.exists():
        return PolicyGraph.from_json(path.read_text())
    return build_policy(grid, value, seed)


def _grid_from_args(args) -> GridWorld:
    width, height = _parse_grid(args.grid)
    return GridWorld(width, height, args.cell_size)


def _write(out: str | None, text: str) -> None:
    if out is None or out == "-":
        sys.stdout.write(text)
    else:
        Path(out).write_text(text)


def cmd_ingest(args) -> int:
    grid = _grid_from_args(args)
    try:
        min_lat, min_lon, max_lat, max_lon = (float(x) for x in args.bbox.split(","))
    except ValueError:
        print(f"--bbox must be minlat,minlon,maxlat,maxlon, got {args.bbox!r}", file=sys.stderr)
        return 1
    bbox = BBox(min_lat, min_lon, max_lat, max_lon)
    records: list[StreamRecord] = []
    if args.format == "geolife":
        # One PLT file per user; user ids follow input order.
        epoch = None
        parsed = []
        for path in args.files:
            points = parse_geolife(open(path, encoding="utf-8"))
            parsed.append(points)
            for p in points:
                epoch = p.timestamp if epoch is None or p.timestamp < epoch else epoch
        for user, points in enumerate(parsed):
            traj = discretize(points, grid, bbox, args.tick_seconds, epoch=epoch, user=user)
            records.extend(StreamRecord(user, t, c) for t, c in traj.entries)
    else:
        by_user: dict[int, list] = {}
        epoch = None
        for path in args.files:
            for user, point in parse_gowalla(open(path, encoding="utf-8")):
                by_user.setdefault(user, []).append(point)
                epoch = point.timestamp if epoch is None or point.timestamp < epoch else epoch
        for user in sorted(by_user):
            points = sorted(by_user[user], key=lambda p: p.timestamp)
            traj = discretize(points, grid, bbox, args.tick_seconds, epoch=epoch, user=user)
            records.extend(StreamRecord(user, t, c) for t, c in traj.entries)
    _write(args.out, write_stream_csv(records))
    return 0


def cmd_perturb(args) -> int:
    grid = _grid_from_args(args)
    policy = _load_policy(args.policy, grid, args.seed)
    config = MechanismConfig(args.epsilon, policy)
    input_records = read_stream_csv(Path(args.traj).read_text())
    trajectories = stream_to_trajectories(input_records)
    released_at: dict[tuple[int, int], int] = {}
    for user in sorted(trajectories):
        user_seed = int(
            np.random.SeedSequence(entropy=args.seed, spawn_key=(5, user)).generate_state(1)[0]
        )
        released = perturb_trajectory(config, trajectories[user], user_seed)
        released_at.update({(user, t): c for t, c in released.entries})
    # Preserve the input row order; gap rows stay gaps.
    out = [
        StreamRecord(r.user, r.tick, released_at.get((r.user, r.tick)))
        for r in input_records
    ]
    _write(args.out, write_stream_csv(out))
    return 0


def cmd_audit(args) -> int:
    grid = _grid_from_args(args)
    policy = _load_policy(args.policy, grid, args.seed)
    if args.mechanism == "identity":
        matrix = identity_matrix(policy.nodes)
    else:
        matrix = graph_exponential_matrix(MechanismConfig(args.epsilon, policy))
    if args.matrix_out:
        Path(args.matrix_out).write_text(matrix.to_csv())
    if args.check == "policy":
        report = audit_policy(matrix, policy, args.epsilon)
    elif args.check == "infinity":
        report = audit_infinity(matrix, policy, args.epsilon)
    elif args.check == "geo":
        report = audit_geo_ind(matrix, grid, args.epsilon)
    else:
        cells = [int(c) for c in args.cells.split(",")] if args.cells else sorted(policy.nodes)
        report = audit_location_set(matrix, cells, args.epsilon)
    _write(args.out, report.to_json() + "\n")
    return 0 if report.passed else 2


def cmd_simulate(args) -> int:
    config = parse_scenario(Path(args.scenario).read_text())
    world, metrics = run_scenario(config)
    out_dir = Path(args.out)
    out_dir.mkdir(parents=True, exist_ok=True)
    (out_dir / "metrics.json").write_text(metrics_json(metrics))
    (out_dir / "observed.csv").write_text(write_stream_csv(world.observed))
    (out_dir / "true.csv").write_text(write_stream_csv(world.true_records))
    print(f"simulated {metrics['ticks']} ticks for {metrics['users']} users -> {out_dir}")
    return 0


def cmd_trace(args) -> int:
    config = parse_scenario(Path(args.scenario).read_text())
    world, _metrics = run_scenario(config)
    result = world.trace(args.patient)
    doc = {
        "patient": result.patient,
        "contacts": list(result.contacts),
        "at_risk": list(result.at_risk),
        "infected_cells": sorted(result.infected_cells),
        "disclosures": [{"user": r.user, "tick": r.tick, "cell": r.cell} for r in result.disclosures],
        "log": list(result.log),
    }
    _write(args.out, json.dumps(doc, indent=2, sort_keys=True) + "\n")
    return 0


def cmd_serve(args) -> int:
    import uvicorn

    from .service import create_app

    addr = args.addr or os.environ.get("PANDA_ADDR", DEFAULT_ADDR)
    host, _, port = addr.partition(":")
    uvicorn.run(create_app(), host=host or "127.0.0.1", port=int(port or 8000), log_level="info")
    return 0


def build_parser() -> argparse.ArgumentParser:
    parser = argparse.ArgumentParser(prog="panda", description=__doc__)
    sub = parser.add_subparsers(dest="command", required=True)

    def add_grid_flags(p):
        p.add_argument("--grid", required=True, help="grid size WxH, e.g. 8x8")
        p.add_argument("--cell-size", type=float, default=100.0, help="meters per cell edge")

    p = sub.add_parser("ingest", help="parse raw trajectory files into user_id,tick,cell CSV")
    add_grid_flags(p)
    p.add_argument("--format", choices=["geolife", "gowalla"], required=True)
    p.add_argument("--bbox", required=True, help="minlat,minlon,maxlat,maxlon")
    p.add_argument("--tick-seconds", type=float, default=3600.0)
    p.add_argument("--out", default="-")
    p.add_argument("files", nargs="+")
    p.set_defaults(func=cmd_ingest)

    p = sub.add_parser("perturb", help="release a perturbed copy of a trajectory CSV")
    add_grid_flags(p)
    p.add_argument("--traj", required=True, help="input stream CSV")
    p.add_argument("--policy", required=True, help="policy JSON file or kind string")
    p.add_argument("--epsilon", type=float, required=True)
    p.add_argument("--seed", type=int, default=0)
    p.add_argument("--out", default="-")
    p.set_defaults(func=cmd_perturb)

    p = sub.add_parser("audit", help="exhaustively audit a mechanism (exit 2 on violation)")
    add_grid_flags(p)
    p.add_argument("--policy", required=True, help="policy JSON file or kind string")
    p.add_argument("--epsilon", type=float, required=True)
    p.add_argument("--check", choices=["policy", "infinity", "geo", "set"], default="policy")
    p.add_argument("--cells", help="comma-separated cells for --check set")
    p.add_argument("--mechanism", choices=["exponential", "identity"], default="exponential")
    p.add_argument("--seed", type=int, default=0)
    p.add_argument("--out", default="-")
    p.add_argument("--matrix-out", help="also dump the release table as CSV")
    p.set_defaults(func=cmd_audit)

    p = sub.add_parser("simulate", help="run a scenario file; write metrics and streams")
    p.add_argument("--scenario", required=True)
    p.add_argument("--out", required=True, help="output directory")
    p.set_defaults(func=cmd_simulate)

    p = sub.add_parser("trace", help="run a scenario then trace a patient's contacts")
    p.add_argument("--scenario", required=True)
    p.add_argument("--patient", type=int, required=True)
    p.add_argument("--out", default="-")
    p.set_defaults(func=cmd_trace)

    p = sub.add_parser("serve", help="start the HTTP service (PANDA_ADDR or --addr)")
    p.add_argument("--addr", help="host:port, default " + DEFAULT_ADDR)
    p.set_defaults(func=cmd_serve)

    return parser


def main(argv=None) -> int:
    args = build_parser().parse_args(argv)
    try:
        return args.func(args)
    except BrokenPipeError:
        return 1
    except (OSError, ValueError) as exc:
        print(f"panda: {exc}", file=sys.stderr)
        return 1


if __name__ == "__main__":
    sys.exit(main())

"""Command-line entry point.

Subcommands: simulate (scripted run to a trace file), validate-sphere (the
analytic-sphere protocol), bench (loop timing), serve (live WebSocket
bridge), resample-info (lattice occupancy stats).

Exit codes: 0 success, 1 parse/config error, 2 runtime error, 3 validation
tolerance failure. Log level comes from the ENGINE_LOG environment variable.
"""

from __future__ import annotations

import argparse
import json
import logging
import os
import sys
from pathlib import Path

import numpy as np

from .cloud import apply_transform, load_cloud, resample_to_lattice
from .config import EngineConfig
from .errors import CloudParseError, ConfigError, EmptyCloudError, EmptyLatticeError, EngineError
from .session import (
    HipSource,
    SessionConfig,
    World,
    read_trajectory,
    run_loop,
    write_trace,
)
from .validation import run_sphere_validation

log = logging.getLogger("proxycloud")

_PARSE_ERRORS = (ConfigError, CloudParseError, EmptyCloudError, EmptyLatticeError,
                 FileNotFoundError, IsADirectoryError)


def _load_config(path: str | None) -> EngineConfig:
    if path is None:
        return EngineConfig()
    return EngineConfig.from_file(path)


def _load_cloud_file(path: str):
    fmt = "ply" if Path(path).suffix.lower() == ".ply" else "xyz"
    with open(path, "rb") as fh:
        return load_cloud(fh, fmt=fmt)


def _trace_format(path: str) -> str:
    return "jsonl" if Path(path).suffix.lower() in (".jsonl", ".json") else "csv"


def _build_world(cfg: EngineConfig, cloud_path: str, hip_source: HipSource) -> World:
    cloud = _load_cloud_file(cloud_path)
    transform = cfg.transform
    transformed = apply_transform(cloud, transform)
    lattice = resample_to_lattice(transformed, cfg.lattice)
    log.info("lattice: %d active voxels, %d points discarded",
             lattice.active_count, lattice.discarded)
    return World(lattice, hip_source, proxy_params=cfg.proxy, density=cfg.density,
                 force_params=cfg.force, friction=cfg.friction,
                 base_cloud=cloud, transform=transform)


def cmd_simulate(args) -> int:
    cfg = _load_config(args.config)
    with open(args.trajectory) as fh:
        source = read_trajectory(fh)
    world = _build_world(cfg, args.cloud, source)
    session = cfg.session
    if args.ticks is not None:
        session = SessionConfig(rate_hz=session.rate_hz, max_ticks=args.ticks,
                                mode=session.mode,
                                snapshot_decimation=session.snapshot_decimation)
    trace, stats = run_loop(session, world)
    write_trace(trace, _trace_format(args.out), args.out)
    log.info("wrote %d snapshots to %s (mean %.1f us/tick)",
             len(trace), args.out, stats.mean_us)
    return 0


def cmd_validate_sphere(args) -> int:
    cfg = _load_config(args.config)
    report, trace = run_sphere_validation(cfg.validation, proxy_params=cfg.proxy,
                                          force_params=cfg.force, scale=args.scale)
    Path(args.out).write_text(report.to_json() + "\n")
    if args.trace_out:
        write_trace(trace, _trace_format(args.trace_out), args.trace_out)
    print(report.to_json())
    return 0 if report.passed else 3


def cmd_bench(args) -> int:
    cfg = _load_config(args.config)
    cloud = _load_cloud_file(args.cloud)
    if args.trajectory:
        with open(args.trajectory) as fh:
            source = read_trajectory(fh)
    else:
        # default load: press from outside the bounds into the cloud centroid
        centroid = cloud.points.mean(axis=0)
        half = (cloud.bounds_max - cloud.bounds_min) / 2
        start = tuple(centroid + 1.2 * half + 0.05 * np.linalg.norm(half))
        ticks = cfg.session.max_ticks
        source = HipSource.scripted([(0, start), (max(1, ticks // 3), tuple(centroid)),
                                     (max(2, ticks), tuple(centroid))])
    world = _build_world(cfg, args.cloud, source)
    _, stats = run_loop(cfg.session, world)
    print(json.dumps(stats.as_dict(), indent=2, sort_keys=True))
    return 0


def cmd_serve(args) -> int:
    from .bridge import serve_bridge  # deferred: pulls in fastapi/uvicorn

    cfg = _load_config(args.config)
    host, _, port = args.bind.rpartition(":")
    try:
        serve_bridge(cfg, args.cloud, host or "127.0.0.1", int(port))
    except OSError as e:
        print(f"bind failed on {args.bind}: {e}", file=sys.stderr)
        return 1
    return 0


def cmd_resample_info(args) -> int:
    cfg = _load_config(args.config)
    cloud = _load_cloud_file(args.cloud)
    transformed = apply_transform(cloud, cfg.transform)
    lattice = resample_to_lattice(transformed, cfg.lattice)
    info = {
        "points": len(cloud),
        "active_voxels": lattice.active_count,
        "discarded": lattice.discarded,
        "dims": list(cfg.lattice.dims),
        "spacing_m": cfg.lattice.spacing,
        "bounds_min_m": transformed.bounds_min.tolist(),
        "bounds_max_m": transformed.bounds_max.tolist(),
    }
    print(json.dumps(info, indent=2, sort_keys=True))
    return 0


def build_parser() -> argparse.ArgumentParser:
    p = argparse.ArgumentParser(prog="proxycloud",
                                description="Proxy-based haptic rendering for point clouds")
    sub = p.add_subparsers(dest="command", required=True)

    sim = sub.add_parser("simulate", help="run a scripted session and write a trace")
    sim.add_argument("--cloud", required=True)
    sim.add_argument("--trajectory", required=True)
    sim.add_argument("--config")
    sim.add_argument("--out", required=True)
    sim.add_argument("--ticks", type=int)
    sim.set_defaults(func=cmd_simulate)

    val = sub.add_parser("validate-sphere", help="score rendered force against the analytic sphere")
    val.add_argument("--config")
    val.add_argument("--out", required=True)
    val.add_argument("--scale", type=float, default=1.0)
    val.add_argument("--trace-out")
    val.set_defaults(func=cmd_validate_sphere)

    ben = sub.add_parser("bench", help="measure per-tick loop latency")
    ben.add_argument("--cloud", required=True)
    ben.add_argument("--config")
    ben.add_argument("--trajectory")
    ben.set_defaults(func=cmd_bench)

    srv = sub.add_parser("serve", help="live session behind the WebSocket bridge")
    srv.add_argument("--cloud", required=True)
    srv.add_argument("--config")
    srv.add_argument("--bind", default="127.0.0.1:8765")
    srv.set_defaults(func=cmd_serve)

    info = sub.add_parser("resample-info", help="print lattice occupancy stats")
    info.add_argument("--cloud", required=True)
    info.add_argument("--config")
    info.set_defaults(func=cmd_resample_info)
    return p


def main(argv=None) -> int:
    logging.basicConfig(level=os.environ.get("ENGINE_LOG", "WARNING").upper(),
                        format="%(levelname)s %(name)s: %(message)s")
    args = build_parser().parse_args(argv)
    try:
        return args.func(args)
    except _PARSE_ERRORS as e:
        print(f"error: {e}", file=sys.stderr)
        return 1
    except KeyboardInterrupt:
        return 0
    except EngineError as e:
        print(f"runtime error: {e}", file=sys.stderr)
        return 2
    except Exception as e:  # noqa: BLE001 - CLI boundary
        log.exception("unhandled failure")
        print(f"runtime error: {e}", file=sys.stderr)
        return 2


if __name__ == "__main__":
    sys.exit(main())

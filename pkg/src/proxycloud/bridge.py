"""WebSocket bridge: stream live session state out, accept commands in.

One session, many viewers. The haptic loop never blocks on a client: it
publishes each snapshot into a latest-value slot and per-client sender tasks
sample that slot at up to 60 Hz, dropping anything they missed. Commands
funnel into the session's control queue (or the HIP mailbox) and take effect
between ticks, so clients never observe torn state.

Messages are JSON text frames with a "type" discriminator; see protocol.md
for the exact field names.
"""

from __future__ import annotations

import asyncio
import json
import logging
import math
import socket
import threading

import numpy as np
from fastapi import FastAPI, WebSocket, WebSocketDisconnect

from .cloud import apply_transform, load_cloud, resample_to_lattice
from .config import EngineConfig, compose_transforms
from .errors import ConfigError, EngineError
from .force import FrictionParams
from .session import (
    HipMailbox,
    HipSource,
    Reset,
    SessionConfig,
    SessionMode,
    SetFriction,
    World,
    rebuild_lattice,
    run_loop,
)

log = logging.getLogger("proxycloud.bridge")

SNAPSHOT_HZ = 60.0
PREVIEW_LIMIT = 50_000
PROTOCOL_VERSION = 1


class BridgeState:
    """Shared state between the session loop thread and client handlers."""

    def __init__(self, config: EngineConfig, world: World, mailbox: HipMailbox):
        self.config = config
        self.world = world
        self.mailbox = mailbox
        self.latest = None          # newest Snapshot, written by the loop thread
        self.stop = threading.Event()
        self.thread: threading.Thread | None = None
        self.rebuild_lock = threading.Lock()

    def start_loop(self, realtime: bool = True) -> None:
        mode = SessionMode.REALTIME if realtime else SessionMode.AS_FAST_AS_POSSIBLE
        session = SessionConfig(rate_hz=self.config.session.rate_hz,
                                max_ticks=2**62, mode=mode,
                                snapshot_decimation=1)

        def _run():
            run_loop(session, self.world,
                     on_snapshot=lambda s: setattr(self, "latest", s),
                     stop=self.stop)

        self.thread = threading.Thread(target=_run, name="haptic-loop", daemon=True)
        self.thread.start()

    def shutdown(self) -> None:
        self.stop.set()
        if self.thread is not None:
            self.thread.join(timeout=5)


def make_world(config: EngineConfig, cloud_source, mailbox: HipMailbox) -> World:
    """Load, transform, resample, and wrap a cloud for a live session."""
    fmt = "ply" if str(cloud_source).lower().endswith(".ply") else "xyz"
    if hasattr(cloud_source, "read"):
        cloud = load_cloud(cloud_source)
    else:
        with open(cloud_source, "rb") as fh:
            cloud = load_cloud(fh, fmt=fmt)
    transform = config.transform
    lattice = resample_to_lattice(apply_transform(cloud, transform), config.lattice)
    return World(lattice, HipSource.live(mailbox), proxy_params=config.proxy,
                 density=config.density, force_params=config.force,
                 friction=config.friction, base_cloud=cloud, transform=transform)


def hello_frame(state: BridgeState) -> dict:
    cfg = state.config
    return {
        "type": "hello",
        "version": PROTOCOL_VERSION,
        "lattice_dims": list(cfg.lattice.dims),
        "spacing_m": cfg.lattice.spacing,
        "origin_m": cfg.lattice.origin.tolist(),
        "active_voxels": state.world.lattice.active_count,
        "rebuild_id": state.world.rebuild_count,
        "rate_hz": cfg.session.rate_hz,
        "snapshot_hz": SNAPSHOT_HZ,
        "config": {
            "stiffness_n_per_m": state.world.force_params.stiffness,
            "mu_s": state.world.friction.mu_s,
            "mu_d": state.world.friction.mu_d,
            "friction_enabled": state.world.friction.enabled,
            "tangent_mode": state.world.proxy_params.tangent_mode.value,
        },
    }


def cloud_frame(state: BridgeState) -> dict:
    means = state.world.lattice.means
    stride = max(1, math.ceil(means.shape[0] / PREVIEW_LIMIT))
    preview = means[::stride]
    return {
        "type": "cloud",
        "rebuild_id": state.world.rebuild_count,
        "count": int(preview.shape[0]),
        "points": np.round(preview, 6).ravel().tolist(),
    }


def snapshot_frame(s) -> dict:
    return {
        "type": "snapshot",
        "tick": s.tick,
        "hip": list(s.hip),
        "proxy": list(s.proxy_center),
        "radius": s.proxy_radius,
        "contact": s.contact,
        "force": list(s.force),
        "depth": s.depth_mag,
        "friction_scale": s.friction_scale,
        "sigma_hat": s.sigma_hat,
    }


def error_frame(message: str) -> dict:
    return {"type": "error", "message": message}


def apply_client_command(state: BridgeState, msg: dict) -> None:
    """Validate and apply one inbound command.

    Raises:
        ConfigError: malformed or invariant-violating payload (reported to
            the offending client; the connection survives).
    """
    kind = msg.get("type")
    if kind == "set_hip":
        pos = msg.get("position")
        if (not isinstance(pos, (list, tuple)) or len(pos) != 3
                or not all(isinstance(v, (int, float)) and math.isfinite(v) for v in pos)):
            raise ConfigError("set_hip needs a finite [x, y, z] position")
        state.mailbox.write(pos)
    elif kind == "set_friction":
        try:
            params = FrictionParams(mu_s=float(msg.get("mu_s", state.world.friction.mu_s)),
                                    mu_d=float(msg.get("mu_d", state.world.friction.mu_d)),
                                    enabled=bool(msg.get("enabled", state.world.friction.enabled)))
        except (ValueError, TypeError) as e:
            raise ConfigError(f"set_friction: {e}")
        state.world.control_queue.put(SetFriction(params))
    elif kind == "reset":
        state.world.control_queue.put(Reset())
    elif kind == "set_transform":
        ops = msg.get("ops")
        if not isinstance(ops, list):
            raise ConfigError("set_transform needs an ops list")
        transform = compose_transforms(ops)  # raises ConfigError on bad ops
        with state.rebuild_lock:
            state.world.control_queue.put(rebuild_lattice(state.world, transform))
    else:
        raise ConfigError(f"unknown command type {kind!r}")


def build_app(state: BridgeState) -> FastAPI:
    app = FastAPI(title="proxycloud bridge")

    @app.websocket("/ws")
    async def ws_endpoint(ws: WebSocket):
        await ws.accept()
        await ws.send_text(json.dumps(hello_frame(state)))
        await ws.send_text(json.dumps(cloud_frame(state)))
        sender = asyncio.create_task(_snapshot_sender(ws, state))
        try:
            while True:
                text = await ws.receive_text()
                try:
                    msg = json.loads(text)
                    if not isinstance(msg, dict):
                        raise ConfigError("command must be a JSON object")
                except json.JSONDecodeError as e:
                    await ws.send_text(json.dumps(error_frame(f"bad JSON: {e}")))
                    continue
                try:
                    if msg.get("type") == "set_transform":
                        # resample off the event loop; can take a while
                        await asyncio.to_thread(apply_client_command, state, msg)
                    else:
                        apply_client_command(state, msg)
                except (ConfigError, EngineError) as e:
                    await ws.send_text(json.dumps(error_frame(str(e))))
        except WebSocketDisconnect:
            pass
        finally:
            sender.cancel()

    return app


async def _snapshot_sender(ws: WebSocket, state: BridgeState) -> None:
    """Stream the freshest snapshot at up to 60 Hz; re-announce on rebuilds."""
    last_tick = -1
    last_rebuild = state.world.rebuild_count
    while True:
        await asyncio.sleep(1.0 / SNAPSHOT_HZ)
        if state.world.rebuild_count != last_rebuild:
            last_rebuild = state.world.rebuild_count
            await ws.send_text(json.dumps(hello_frame(state)))
            await ws.send_text(json.dumps(cloud_frame(state)))
        snap = state.latest
        if snap is not None and snap.tick != last_tick:
            last_tick = snap.tick
            await ws.send_text(json.dumps(snapshot_frame(snap)))


def serve_bridge(config: EngineConfig, cloud_path: str, host: str, port: int) -> None:
    """Run the live session and block serving the bridge until interrupted.

    Raises:
        OSError: the bind address is unavailable (checked before startup).
    """
    import uvicorn

    probe = socket.socket(socket.AF_INET, socket.SOCK_STREAM)
    try:
        probe.setsockopt(socket.SOL_SOCKET, socket.SO_REUSEADDR, 1)
        probe.bind((host, port))
    finally:
        probe.close()

    mailbox = HipMailbox(config.lattice.center)
    world = make_world(config, cloud_path, mailbox)
    state = BridgeState(config, world, mailbox)
    state.start_loop(realtime=True)
    log.info("bridge listening on ws://%s:%d/ws", host, port)
    try:
        uvicorn.run(build_app(state), host=host, port=port, log_level="warning")
    finally:
        state.shutdown()

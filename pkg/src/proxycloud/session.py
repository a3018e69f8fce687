"""The haptic session: fixed-rate loop wiring proxy, density, and force.

The loop thread exclusively owns the proxy state and all world mutables.
Outside writers reach it only through the HIP mailbox (latest value wins)
and the control queue (drained between ticks), so every tick sees a
consistent world and identical inputs always replay to identical traces.
"""

from __future__ import annotations

import enum
import json
import queue
import time
from dataclasses import dataclass, replace

import numpy as np

from .cloud import (
    AffineTransform,
    LatticeConfig,
    PointCloud,
    VoxelLattice,
    apply_transform,
    resample_to_lattice,
)
from .density import DensityConfig, adaptive_radius, bandwidth, k_nearest_means, scatter_sigma
from .errors import CloudParseError
from .force import (
    ForceParams,
    ForceSample,
    FrictionParams,
    compute_friction_scale,
    penetration_depth,
    reaction_force,
)
from .proxy import Contact, ProxyParams, ProxyState, advance_proxy, probe_contact


class SessionMode(enum.Enum):
    REALTIME = "realtime"
    AS_FAST_AS_POSSIBLE = "as_fast_as_possible"


@dataclass(frozen=True)
class SessionConfig:
    rate_hz: int = 1000
    max_ticks: int = 5000
    mode: SessionMode = SessionMode.AS_FAST_AS_POSSIBLE
    snapshot_decimation: int = 1

    def __post_init__(self):
        if self.rate_hz < 1:
            raise ValueError("rate_hz must be >= 1")
        if self.snapshot_decimation < 1:
            raise ValueError("snapshot_decimation must be >= 1")
        if isinstance(self.mode, str):
            object.__setattr__(self, "mode", SessionMode(self.mode))


class HipMailbox:
    """Single-writer/single-reader latest-value cell for live HIP input."""

    def __init__(self, position):
        self._value = np.asarray(position, dtype=np.float64).copy()

    def write(self, position) -> None:
        self._value = np.asarray(position, dtype=np.float64).copy()

    def read(self) -> np.ndarray:
        return self._value


class HipSource:
    """HIP position per tick: scripted keyframes or a live mailbox."""

    def __init__(self, keyframes=None, mailbox: HipMailbox | None = None):
        if (keyframes is None) == (mailbox is None):
            raise ValueError("provide exactly one of keyframes or mailbox")
        self.mailbox = mailbox
        if keyframes is not None:
            ticks = np.asarray([k[0] for k in keyframes], dtype=np.float64)
            if ticks.size == 0:
                raise ValueError("scripted source needs at least one keyframe")
            if (np.diff(ticks) <= 0).any():
                raise ValueError("keyframe ticks must be strictly increasing")
            self.ticks = ticks
            self.positions = np.asarray([k[1] for k in keyframes], dtype=np.float64)
        else:
            self.ticks = None

    @classmethod
    def scripted(cls, keyframes) -> "HipSource":
        return cls(keyframes=keyframes)

    @classmethod
    def live(cls, mailbox: HipMailbox) -> "HipSource":
        return cls(mailbox=mailbox)

    def position_at(self, tick: int) -> np.ndarray:
        if self.mailbox is not None:
            return self.mailbox.read()
        # linear interpolation, clamped before the first and after the last key
        return np.array([np.interp(tick, self.ticks, self.positions[:, a]) for a in range(3)])


def read_trajectory(source) -> HipSource:
    """Scripted trajectory from CSV rows of tick,x,y,z ('#' comments and an
    optional header line are skipped)."""
    if isinstance(source, (str, bytes)):
        text = source.decode() if isinstance(source, bytes) else source
    else:
        text = source.read()
        if isinstance(text, bytes):
            text = text.decode()
    keyframes = []
    for lineno, raw in enumerate(text.splitlines(), start=1):
        line = raw.strip()
        if not line or line.startswith("#"):
            continue
        parts = [p.strip() for p in line.split(",")]
        if lineno == 1 and parts and not _is_number(parts[0]):
            continue  # header
        try:
            keyframes.append((int(float(parts[0])), (float(parts[1]), float(parts[2]), float(parts[3]))))
        except (ValueError, IndexError):
            raise CloudParseError(f"bad trajectory row {line!r}", lineno)
    if not keyframes:
        raise CloudParseError("no keyframes in trajectory", 1)
    return HipSource.scripted(keyframes)


def _is_number(token: str) -> bool:
    try:
        float(token)
        return True
    except ValueError:
        return False


@dataclass(frozen=True)
class Snapshot:
    """Per-tick serializable state, plain Python scalars only."""

    tick: int
    hip: tuple
    proxy_center: tuple
    proxy_radius: float
    contact: str
    force: tuple
    depth_mag: float
    friction_scale: float
    sigma_hat: float


@dataclass(frozen=True)
class TimingStats:
    ticks: int
    mean_us: float
    p99_us: float
    max_us: float
    overruns: int
    normal_mean_us: float

    @classmethod
    def from_ns(cls, compute_ns, normal_ns, period_ns: float) -> "TimingStats":
        if len(compute_ns) == 0:
            return cls(0, 0.0, 0.0, 0.0, 0, 0.0)
        us = np.asarray(compute_ns, dtype=np.float64) / 1000.0
        overruns = int((np.asarray(compute_ns) > period_ns).sum())
        return cls(ticks=len(compute_ns), mean_us=float(us.mean()),
                   p99_us=float(np.percentile(us, 99)), max_us=float(us.max()),
                   overruns=overruns,
                   normal_mean_us=float(np.mean(normal_ns) / 1000.0))

    def as_dict(self) -> dict:
        return {"ticks": self.ticks, "mean_us": self.mean_us, "p99_us": self.p99_us,
                "max_us": self.max_us, "overruns": self.overruns,
                "normal_mean_us": self.normal_mean_us}


class SetFriction:
    def __init__(self, params: FrictionParams):
        self.params = params


class SwapLattice:
    def __init__(self, lattice: VoxelLattice, transform: AffineTransform):
        self.lattice = lattice
        self.transform = transform


class Reset:
    pass


class World:
    """Everything one session owns: geometry, proxy, parameters, HIP input."""

    def __init__(self, lattice: VoxelLattice, hip_source: HipSource,
                 proxy_params: ProxyParams | None = None,
                 density: DensityConfig | None = None,
                 force_params: ForceParams | None = None,
                 friction: FrictionParams | None = None,
                 base_cloud: PointCloud | None = None,
                 transform: AffineTransform | None = None):
        self.lattice = lattice
        self.hip_source = hip_source
        self.proxy_params = proxy_params or ProxyParams()
        self.density = density or DensityConfig.for_spacing(lattice.config.spacing)
        self.force_params = force_params or ForceParams()
        self.friction = friction or FrictionParams()
        self.base_cloud = base_cloud
        self.transform = transform or AffineTransform.identity()
        self.control_queue: queue.SimpleQueue = queue.SimpleQueue()
        self.rebuild_count = 0

        start = hip_source.position_at(0)
        self.proxy = ProxyState(center=start,
                                radius=0.5 * (self.density.r1 + self.density.r2))
        self.sigma_hat = 0.0
        self._last_estimate_pos: np.ndarray | None = None
        self._last_nn_dist: float | None = None
        self._lattice_dirty = True
        self._update_radius(force=True)

    def _update_radius(self, force: bool = False) -> None:
        """Re-estimate the proxy radius from local density when due.

        Skips both when the proxy has not traveled far enough since the last
        estimate and when the nearest mean is provably still beyond twice the
        radius ceiling (far free space, where the radius cannot matter).
        """
        center = self.proxy.center
        if not force and not self._lattice_dirty:
            travel = float(np.linalg.norm(center - self._last_estimate_pos))
            if travel <= self.density.recompute_threshold:
                return
            if self._last_nn_dist is not None and self._last_nn_dist - travel > 2 * self.density.r2:
                return
        means, dists = k_nearest_means(self.lattice, center, self.density.neighborhood_k)
        self._last_estimate_pos = center.copy()
        self._lattice_dirty = False
        if means.shape[0] >= 2:
            self._last_nn_dist = float(dists[0])
            self.sigma_hat = scatter_sigma(means)
            radius = adaptive_radius(bandwidth(self.sigma_hat, means.shape[0]), self.density)
            self.proxy = self.proxy.with_radius(radius)
        # fewer than two neighbors: keep the previous radius

    def apply_command(self, cmd) -> None:
        if isinstance(cmd, SetFriction):
            self.friction = cmd.params
        elif isinstance(cmd, SwapLattice):
            self.lattice = cmd.lattice
            self.transform = cmd.transform
            self.rebuild_count += 1
            self._lattice_dirty = True
        elif isinstance(cmd, Reset):
            self.proxy = replace(self.proxy, center=self.hip_source.position_at(0),
                                 contact=Contact.FREE, v_n=np.zeros(3),
                                 v_h=np.zeros(3), v_t=np.zeros(3), n_hat=None)
            self._lattice_dirty = True
        else:
            raise TypeError(f"unknown command {cmd!r}")

    def drain_commands(self) -> None:
        while True:
            try:
                cmd = self.control_queue.get_nowait()
            except queue.Empty:
                return
            self.apply_command(cmd)


def rebuild_lattice(world: World, transform: AffineTransform) -> SwapLattice:
    """Transform the base cloud and resample onto a fresh lattice.

    Runs on a control thread; the result is swapped in atomically between
    ticks via the control queue.
    """
    if world.base_cloud is None:
        raise ValueError("world has no base cloud to rebuild from")
    cloud = apply_transform(world.base_cloud, transform)
    return SwapLattice(resample_to_lattice(cloud, world.lattice.config), transform)


def step_once(world: World, tick: int,
              _timer: list | None = None) -> tuple[ProxyState, ForceSample, Snapshot]:
    """One haptic tick: HIP in, radius update, friction gate, proxy move, force out."""
    hip = world.hip_source.position_at(tick)
    world._update_radius()

    t0 = time.perf_counter_ns() if _timer is not None else 0
    probe = probe_contact(world.proxy, hip, world.lattice)
    if _timer is not None:
        _timer.append(time.perf_counter_ns() - t0)

    if (world.friction.enabled and probe.n_hat is not None
            and float(np.dot(probe.v_n, probe.v_h)) < 0.0):
        scale, stuck = compute_friction_scale(probe.v_h, probe.n_hat, world.friction,
                                              world.force_params.stiffness)
    else:
        scale, stuck = 1.0, False

    world.proxy = advance_proxy(world.proxy, probe, world.proxy_params,
                                friction_scale=scale, stuck=stuck)

    v_h_post = hip - world.proxy.center
    depth = penetration_depth(v_h_post, world.proxy.radius)
    force = reaction_force(depth, world.force_params)
    sample = ForceSample(force=force, depth=depth, friction_scale=scale, stuck=stuck)
    snap = Snapshot(tick=tick, hip=tuple(hip.tolist()),
                    proxy_center=tuple(world.proxy.center.tolist()),
                    proxy_radius=world.proxy.radius,
                    contact=world.proxy.contact.value,
                    force=tuple(force.tolist()),
                    depth_mag=sample.depth_mag,
                    friction_scale=scale,
                    sigma_hat=world.sigma_hat)
    return world.proxy, sample, snap


def run_loop(config: SessionConfig, world: World,
             on_snapshot=None, stop=None) -> tuple[list[Snapshot], TimingStats]:
    """Run max_ticks steps, pacing to rate_hz in REALTIME mode.

    Compute time is measured per tick excluding pacing sleep; ticks that
    exceed the nominal period are counted as overruns, never fatal. The
    final tick always lands in the trace regardless of decimation.
    """
    period_ns = 1e9 / config.rate_hz
    trace: list[Snapshot] = []
    compute_ns: list[int] = []
    normal_ns: list[int] = []
    realtime = config.mode == SessionMode.REALTIME
    start = time.perf_counter_ns()

    for tick in range(config.max_ticks):
        if stop is not None and stop.is_set():
            break
        world.drain_commands()

        t0 = time.perf_counter_ns()
        _, _, snap = step_once(world, tick, _timer=normal_ns)
        compute_ns.append(time.perf_counter_ns() - t0)

        if tick % config.snapshot_decimation == 0 or tick == config.max_ticks - 1:
            trace.append(snap)
            if on_snapshot is not None:
                on_snapshot(snap)

        if realtime:
            deadline = start + (tick + 1) * period_ns
            remaining = deadline - time.perf_counter_ns()
            if remaining > 300_000:
                time.sleep((remaining - 200_000) / 1e9)
            while time.perf_counter_ns() < deadline:
                pass

    return trace, TimingStats.from_ns(compute_ns, normal_ns, period_ns)


TRACE_COLUMNS = ["tick", "hip_x", "hip_y", "hip_z", "proxy_x", "proxy_y", "proxy_z",
                 "radius", "contact", "force_x", "force_y", "force_z", "depth",
                 "friction_scale", "sigma_hat"]


def _snapshot_row(s: Snapshot) -> list:
    return [s.tick, *s.hip, *s.proxy_center, s.proxy_radius, s.contact,
            *s.force, s.depth_mag, s.friction_scale, s.sigma_hat]


def write_trace(trace, fmt: str, sink) -> None:
    """Serialize snapshots as CSV (fixed column order) or JSONL.

    Floats are written in shortest round-trip form so identical runs produce
    byte-identical files.
    """
    fmt = fmt.lower()
    own = isinstance(sink, (str, bytes))
    fh = open(sink, "w", newline="") if own else sink
    try:
        if fmt == "csv":
            fh.write(",".join(TRACE_COLUMNS) + "\n")
            for s in trace:
                fh.write(",".join(v if isinstance(v, str) else repr(v)
                                  for v in _snapshot_row(s)) + "\n")
        elif fmt == "jsonl":
            for s in trace:
                fh.write(json.dumps(s.__dict__, sort_keys=False) + "\n")
        else:
            raise ValueError(f"unknown trace format {fmt!r}")
    finally:
        if own:
            fh.close()


def read_trace_jsonl(source) -> list[Snapshot]:
    """Inverse of write_trace(..., 'jsonl', ...)."""
    if isinstance(source, (str, bytes)):
        with open(source) as fh:
            lines = fh.readlines()
    else:
        lines = source.readlines()
    out = []
    for line in lines:
        if not line.strip():
            continue
        d = json.loads(line)
        d["hip"] = tuple(d["hip"])
        d["proxy_center"] = tuple(d["proxy_center"])
        d["force"] = tuple(d["force"])
        out.append(Snapshot(**d))
    return out

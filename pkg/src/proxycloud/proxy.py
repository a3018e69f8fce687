"""Spherical proxy tracking: sinking normal, tangent, and the tick update.

The proxy is the constrained surrogate that rides the point-cloud surface
while the HIP penetrates freely. Every tick it senses the active-voxel means
inside its sphere, sums their radial overshoots into a sinking normal, and
takes one small corrective move: latch toward the HIP in free space, push out
along the normal on contact, or slide tangentially (plus push out) while the
HIP is buried.
"""

from __future__ import annotations

import enum
import math
from dataclasses import dataclass, field, replace

import numpy as np

from .cloud import VoxelLattice, query_points_in_sphere
from .errors import DegeneratePointError, UndefinedTangentError

_DEGENERATE_DIST = 1e-12


class Contact(enum.Enum):
    FREE = "free"
    SURFACE = "surface"
    PENETRATING = "penetrating"


class TangentMode(enum.Enum):
    # the published tangent formula subtracts (v_n . v_h) n_hat, which is not
    # an orthogonal projection unless |v_n| == 1; both behaviors are kept
    PAPER_LITERAL = "paper_literal"
    ORTHOGONALIZED = "orthogonalized"


@dataclass(frozen=True)
class ProxyParams:
    """Gains for the three proxy moves plus contact thresholds.

    k_n scales the push-out along the sinking normal, k_h the free-space
    latch toward the HIP, delta the tangential slide step. zeta_factor sets
    the contact threshold as a fraction of the proxy radius. max_step_factor
    clamps any single move (fraction of radius) so misconfigured gains cannot
    tunnel the proxy through thin clouds.
    """

    k_n: float = 0.064
    k_h: float = 0.002
    delta: float = 0.000008
    zeta_factor: float = 0.05
    tangent_mode: TangentMode = TangentMode.PAPER_LITERAL
    free_latch_factor: float = 4.0
    max_step_factor: float = 0.5

    def __post_init__(self):
        for name in ("k_n", "k_h", "delta"):
            v = getattr(self, name)
            if not 0 < v < 1:
                raise ValueError(f"{name} must be in (0, 1)")
        if not self.zeta_factor > 0:
            raise ValueError("zeta_factor must be positive")
        if isinstance(self.tangent_mode, str):
            object.__setattr__(self, "tangent_mode", TangentMode(self.tangent_mode))


@dataclass(frozen=True)
class ProxyState:
    """Proxy sphere plus the contact vectors cached from the last tick."""

    center: np.ndarray
    radius: float
    contact: Contact = Contact.FREE
    v_n: np.ndarray = field(default_factory=lambda: np.zeros(3))
    v_h: np.ndarray = field(default_factory=lambda: np.zeros(3))
    v_t: np.ndarray = field(default_factory=lambda: np.zeros(3))
    n_hat: np.ndarray | None = None

    def __post_init__(self):
        if not self.radius > 0:
            raise ValueError("proxy radius must be positive")
        object.__setattr__(self, "center", np.asarray(self.center, dtype=np.float64))

    def with_radius(self, radius: float) -> "ProxyState":
        return replace(self, radius=radius)


def compute_overshoot(center, radius: float, p) -> np.ndarray:
    """Radial overshoot of one point strictly inside the proxy sphere.

    d = (r_p - |C_p - p|) * (C_p - p) / |C_p - p|: points from p toward the
    proxy center, with magnitude equal to how far p sits inside the surface.

    Raises:
        DegeneratePointError: p coincides with the center (direction undefined).
    """
    center = np.asarray(center, dtype=np.float64)
    p = np.asarray(p, dtype=np.float64)
    diff = center - p
    dist = float(np.linalg.norm(diff))
    if dist < _DEGENERATE_DIST:
        raise DegeneratePointError("point coincides with proxy center")
    return (radius - dist) * (diff / dist)


def compute_sinking_normal(center, radius: float, enclosed: np.ndarray) -> np.ndarray:
    """Sum of radial overshoots over the enclosed points.

    Zero when nothing is enclosed (free space). Points within 1e-12 of the
    center are skipped; their direction is undefined and the event has
    measure zero.
    """
    pts = np.asarray(enclosed, dtype=np.float64)
    if pts.size == 0:
        return np.zeros(3)
    center = np.asarray(center, dtype=np.float64)
    diff = center - pts
    dist = np.linalg.norm(diff, axis=1)
    ok = dist >= _DEGENERATE_DIST
    if not ok.all():
        diff, dist = diff[ok], dist[ok]
        if dist.size == 0:
            return np.zeros(3)
    return ((radius - dist) / dist) @ diff


def compute_tangent(v_n, v_h, mode: TangentMode = TangentMode.PAPER_LITERAL) -> np.ndarray:
    """Slide direction in the plane spanned by v_h and the normal.

    PAPER_LITERAL keeps the published form v_h - (v_n . v_h) n_hat;
    ORTHOGONALIZED replaces it with the true tangent-plane projection
    v_h - (n_hat . v_h) n_hat.

    Raises:
        UndefinedTangentError: zero sinking normal.
    """
    v_n = np.asarray(v_n, dtype=np.float64)
    v_h = np.asarray(v_h, dtype=np.float64)
    mag = float(np.linalg.norm(v_n))
    if mag == 0.0:
        raise UndefinedTangentError("tangent undefined for zero sinking normal")
    n_hat = v_n / mag
    if mode == TangentMode.PAPER_LITERAL:
        return v_h - float(np.dot(v_n, v_h)) * n_hat
    return v_h - float(np.dot(n_hat, v_h)) * n_hat


@dataclass(frozen=True)
class ContactProbe:
    """Per-tick sensing: HIP offset, enclosed means, sinking normal."""

    v_h: np.ndarray
    enclosed: np.ndarray
    v_n: np.ndarray
    v_n_mag: float
    n_hat: np.ndarray | None


def probe_contact(state: ProxyState, hip, lattice: VoxelLattice) -> ContactProbe:
    """Sense the lattice around the current proxy position."""
    hip = np.asarray(hip, dtype=np.float64)
    v_h = hip - state.center
    enclosed = query_points_in_sphere(lattice, state.center, state.radius)
    v_n = compute_sinking_normal(state.center, state.radius, enclosed)
    mag = float(np.linalg.norm(v_n))
    n_hat = v_n / mag if mag > 0.0 else None
    return ContactProbe(v_h=v_h, enclosed=enclosed, v_n=v_n, v_n_mag=mag, n_hat=n_hat)


def advance_proxy(state: ProxyState, probe: ContactProbe, params: ProxyParams,
                  friction_scale: float = 1.0, stuck: bool = False) -> ProxyState:
    """One tick of the proxy state machine, from pre-computed sensing.

    Rules, evaluated in fixed order on the sensed values:
      free        (|v_n| <= zeta):                 move k_h * v_h
      surface     (|v_n| >  zeta, v_n . v_h >= 0): move k_n * v_n
      penetrating (|v_n| >  zeta, v_n . v_h <  0): move friction_scale * delta * v_t + k_n * v_n

    When static friction holds the proxy (stuck), any move is projected onto
    the normal direction: sinking regulation stays alive but tangential
    motion is pinned, matching the stick phase of the friction model.
    The final displacement is clamped to max_step_factor * radius.
    """
    zeta = params.zeta_factor * state.radius
    v_h, v_n = probe.v_h, probe.v_n
    v_t = np.zeros(3)

    if probe.v_n_mag <= zeta:
        contact = Contact.FREE
        move = params.k_h * v_h
    elif float(np.dot(v_n, v_h)) >= 0.0:
        contact = Contact.SURFACE
        move = params.k_n * v_n
    else:
        contact = Contact.PENETRATING
        v_t = compute_tangent(v_n, v_h, params.tangent_mode)
        move = (friction_scale * params.delta) * v_t + params.k_n * v_n

    if stuck:
        n = probe.n_hat if probe.n_hat is not None else state.n_hat
        if n is not None:
            move = float(np.dot(move, n)) * n

    max_step = params.max_step_factor * state.radius
    step = float(np.linalg.norm(move))
    if step > max_step:
        move = move * (max_step / step)

    return ProxyState(center=state.center + move, radius=state.radius,
                      contact=contact, v_n=v_n, v_h=v_h, v_t=v_t, n_hat=probe.n_hat)


def proxy_step(state: ProxyState, hip, lattice: VoxelLattice, params: ProxyParams,
               friction_scale: float = 1.0, stuck: bool = False) -> ProxyState:
    """Sense and advance in one call. The machine is total: any input maps to
    exactly one of the three moves."""
    return advance_proxy(state, probe_contact(state, hip, lattice), params,
                         friction_scale=friction_scale, stuck=stuck)

"""Reaction force and simulated surface friction.

Force is plain Hooke law on the HIP's penetration beyond the proxy surface.
Friction never renders an extra force vector; it slows (or pins) the proxy's
tangential step, which is what a stylus dragging on a rough surface feels
like through the spring coupling.
"""

from __future__ import annotations

import math
from dataclasses import dataclass

import numpy as np


@dataclass(frozen=True)
class ForceParams:
    stiffness: float = 300.0  # N/m

    def __post_init__(self):
        if not self.stiffness > 0:
            raise ValueError("stiffness must be positive")


@dataclass(frozen=True)
class FrictionParams:
    mu_s: float = 0.3
    mu_d: float = 0.2
    enabled: bool = False

    def __post_init__(self):
        if not (0 <= self.mu_d <= self.mu_s):
            raise ValueError("need 0 <= mu_d <= mu_s")


@dataclass(frozen=True)
class ForceSample:
    """Per-tick force output: rendered force, penetration depth vector,
    tangential step multiplier, and whether static friction holds the proxy."""

    force: np.ndarray
    depth: np.ndarray
    friction_scale: float
    stuck: bool

    @property
    def depth_mag(self) -> float:
        return float(np.linalg.norm(self.depth))


def penetration_depth(v_h: np.ndarray, r_p: float) -> np.ndarray:
    """Penetration of the HIP beyond the proxy surface, along proxy->HIP.

    (|v_h| - r_p) * v_h / |v_h| when |v_h| >= r_p, else the zero vector.
    """
    if not r_p > 0:
        raise ValueError("proxy radius must be positive")
    v_h = np.asarray(v_h, dtype=np.float64)
    mag = float(np.linalg.norm(v_h))
    if mag < r_p or mag == 0.0:
        return np.zeros(3)
    return (mag - r_p) * (v_h / mag)


def reaction_force(depth: np.ndarray, params: ForceParams) -> np.ndarray:
    """Hooke-law reaction: -stiffness * depth."""
    return -params.stiffness * np.asarray(depth, dtype=np.float64)


def compute_friction_scale(v_h: np.ndarray, n_hat: np.ndarray,
                           params: FrictionParams, stiffness: float) -> tuple[float, bool]:
    """Tangential step multiplier from the Coulomb stick/slide model.

    The spring force toward the HIP, f_h = stiffness * v_h, decomposes
    against the inward surface direction (-n_hat) into a normal part
    |f_h| cos(a) and a tangential part |f_h| sin(a). Below the static
    threshold (|f_t| < mu_s |f_n|) the proxy is held: (0, True). Sliding
    scales the tangential step by 1 - mu_d * cot(a), clamped to [0, 1]:
    friction slows the proxy, never reverses it.
    """
    if not params.enabled:
        return 1.0, False
    v_h = np.asarray(v_h, dtype=np.float64)
    n_hat = np.asarray(n_hat, dtype=np.float64)
    f_mag = stiffness * float(np.linalg.norm(v_h))
    if f_mag <= 0.0:
        return 0.0, True
    cos_a = float(np.dot(v_h, -n_hat)) / float(np.linalg.norm(v_h))
    cos_a = min(max(cos_a, -1.0), 1.0)
    sin_a = math.sqrt(max(0.0, 1.0 - cos_a * cos_a))
    if sin_a < 1e-12:
        return 0.0, True  # pure normal press cannot slide
    f_n = f_mag * cos_a
    f_t = f_mag * sin_a
    if f_t < params.mu_s * f_n:
        return 0.0, True
    scale = 1.0 - params.mu_d * (cos_a / sin_a)
    return min(max(scale, 0.0), 1.0), False

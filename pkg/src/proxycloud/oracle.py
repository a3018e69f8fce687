"""Analytic sphere validation: synthetic geometry, closed-form forces, scoring.

The sphere is the one surface where the correct reaction force is known in
closed form, which makes it the reference object for end-to-end validation
of the rendering pipeline.
"""

from __future__ import annotations

from dataclasses import dataclass

import numpy as np

from .cloud import PointCloud, vec3
from .errors import DegeneratePointError, NoContactError


@dataclass(frozen=True)
class SphereSpec:
    """Seeded synthetic sphere-surface cloud description."""

    center: tuple
    radius: float
    sample_count: int = 50_000
    seed: int = 7

    def __post_init__(self):
        if not self.radius > 0:
            raise ValueError("radius must be positive")
        if self.sample_count < 100:
            raise ValueError("sample_count must be at least 100")
        object.__setattr__(self, "center", tuple(float(c) for c in self.center))


def synth_sphere_cloud(spec: SphereSpec) -> PointCloud:
    """Quasi-uniform seeded samples on the sphere surface.

    Uses a Fibonacci spiral (even coverage, nearest-neighbor spacing close to
    sqrt(area / N)) rotated by a seeded random orthonormal matrix so the seed
    changes the sampling without disturbing uniformity. Every sample is
    renormalized to lie on the surface to within floating-point accuracy.
    """
    n = spec.sample_count
    i = np.arange(n, dtype=np.float64)
    z = 1.0 - 2.0 * (i + 0.5) / n
    golden = np.pi * (3.0 - np.sqrt(5.0))
    phi = golden * i
    r_xy = np.sqrt(np.maximum(0.0, 1.0 - z * z))
    dirs = np.column_stack([r_xy * np.cos(phi), r_xy * np.sin(phi), z])

    rng = np.random.default_rng(spec.seed)
    q, r = np.linalg.qr(rng.standard_normal((3, 3)))
    q *= np.sign(np.diag(r))  # fix QR sign ambiguity deterministically
    dirs = dirs @ q.T
    dirs /= np.linalg.norm(dirs, axis=1)[:, None]

    return PointCloud.from_points(vec3(spec.center) + spec.radius * dirs)


def ideal_sphere_force(hip, spec: SphereSpec, stiffness: float) -> np.ndarray:
    """Closed-form reaction force on a HIP inside the analytic sphere.

    Hooke-law magnitude stiffness * (R - |hip - center|), directed radially
    outward; zero outside the surface.
    """
    hip = np.asarray(hip, dtype=np.float64)
    offset = hip - vec3(spec.center)
    d = float(np.linalg.norm(offset))
    if d >= spec.radius:
        return np.zeros(3)
    if d < 1e-12:
        raise DegeneratePointError("HIP at sphere center: force direction undefined")
    return stiffness * (spec.radius - d) * (offset / d)


def compare_traces(rendered, spec: SphereSpec, stiffness: float,
                   threshold_frac: float = 0.01) -> tuple[float, float, int]:
    """Score rendered forces against the analytic sphere force.

    Args:
        rendered: iterable of snapshots carrying `hip` and `force` fields.
        spec: the analytic sphere to compare against.
        stiffness: Hooke constant used by the render run.
        threshold_frac: ticks whose ideal force magnitude falls below this
            fraction of the trace maximum are excluded (grazing contact would
            blow up the relative error).

    Returns:
        (rms_rel_err, max_rel_err, ticks_compared)

    Raises:
        NoContactError: no tick shows penetration of the analytic sphere.
    """
    hips = np.array([s.hip for s in rendered], dtype=np.float64)
    forces = np.array([s.force for s in rendered], dtype=np.float64)
    if hips.size == 0:
        raise NoContactError("empty trace")

    center = vec3(spec.center)
    offsets = hips - center
    dists = np.linalg.norm(offsets, axis=1)
    depth = spec.radius - dists
    inside = depth > 0
    if not inside.any():
        raise NoContactError("trace never penetrates the analytic sphere")

    ideal = np.zeros_like(forces)
    ideal[inside] = stiffness * depth[inside, None] * (offsets[inside] / dists[inside, None])
    ideal_mag = np.linalg.norm(ideal, axis=1)
    mask = ideal_mag > threshold_frac * ideal_mag.max()
    if not mask.any():
        raise NoContactError("no tick above the comparison threshold")

    rel = np.linalg.norm(forces[mask] - ideal[mask], axis=1) / ideal_mag[mask]
    return float(np.sqrt(np.mean(rel * rel))), float(rel.max()), int(mask.sum())

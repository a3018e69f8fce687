"""Local density estimation and the adaptive proxy radius.

The proxy radius tracks local sampling density: the scatter of the nearest
active-voxel means feeds a Gaussian-kernel bandwidth rule, and the radius is
a clamped multiple of that bandwidth. Sparse regions get a fat proxy that
cannot fall through the gaps; dense regions get a small one that resolves
fine detail.
"""

from __future__ import annotations

import math
from dataclasses import dataclass
from functools import lru_cache

import numpy as np

from .cloud import VoxelLattice
from .errors import InsufficientNeighborsError


@dataclass(frozen=True)
class DensityConfig:
    """Radius-adaptation parameters.

    beta scales bandwidth into a radius; r1/r2 are the hard radius limits;
    neighborhood_k is the sample size for the local scatter estimate;
    recompute_threshold is how far the proxy travels before re-estimating.
    """

    beta: float
    r1: float
    r2: float
    neighborhood_k: int = 32
    recompute_threshold: float = 0.0

    def __post_init__(self):
        if not (0 < self.r1 < self.r2):
            raise ValueError("need 0 < r1 < r2")
        if not self.beta > 0:
            raise ValueError("beta must be positive")
        if self.neighborhood_k < 2:
            raise ValueError("neighborhood_k must be at least 2")

    @classmethod
    def for_spacing(cls, spacing: float, beta: float = 2.5, neighborhood_k: int = 32) -> "DensityConfig":
        """Defaults tied to the lattice resolution: r1 just above one voxel
        (prevents fall-through), r2 an order of magnitude up, re-estimation
        every half voxel of travel."""
        return cls(beta=beta, r1=1.5 * spacing, r2=10.0 * spacing,
                   neighborhood_k=neighborhood_k, recompute_threshold=0.5 * spacing)


def scatter_sigma(points: np.ndarray) -> float:
    """Scalar scatter of a 3D sample: sqrt of the mean per-axis variance
    about the centroid. Covariant under uniform scaling."""
    pts = np.asarray(points, dtype=np.float64)
    centered = pts - pts.mean(axis=0)
    return float(np.sqrt(np.mean(centered * centered)))


@lru_cache(maxsize=256)
def _shell_offsets(s: int) -> np.ndarray:
    """Integer offsets at Chebyshev distance exactly s, in deterministic order."""
    if s == 0:
        return np.zeros((1, 3), dtype=np.int64)
    rng = range(-s, s + 1)
    offs = [(i, j, k) for i in rng for j in rng for k in rng
            if max(abs(i), abs(j), abs(k)) == s]
    return np.array(offs, dtype=np.int64)


_SHELL_CUTOFF = 6


def k_nearest_means(lattice: VoxelLattice, center, k: int) -> tuple[np.ndarray, np.ndarray]:
    """The k active-voxel means nearest to a world point.

    Expands voxel shells outward from the center's voxel until the k-th best
    distance is provably final: a voxel at Chebyshev shell s is at least
    (s - 1) * spacing away, so once that bound exceeds the current k-th
    distance no farther shell can contribute. Past a few shells (far free
    space) a vectorized scan over all means is cheaper than cell hopping and
    is used instead.

    Returns (means, distances) sorted ascending by distance; may hold fewer
    than k rows when the lattice has fewer active voxels.
    """
    center = np.asarray(center, dtype=np.float64)
    cfg = lattice.config
    dims = np.asarray(cfg.dims, dtype=np.int64)
    ci = np.floor((center - cfg.origin) / cfg.spacing).astype(np.int64)
    ny, nz = int(dims[1]), int(dims[2])
    index = lattice.index
    total = lattice.active_count
    k = min(k, total)

    rows: list[int] = []
    dists: list[float] = []
    for s in range(_SHELL_CUTOFF + 1):
        cells = ci + _shell_offsets(s)
        ok = ((cells >= 0) & (cells < dims)).all(axis=1)
        for i, j, kk in cells[ok]:
            row = index.get((int(i) * ny + int(j)) * nz + int(kk))
            if row is not None:
                rows.append(row)
                dists.append(float(np.linalg.norm(lattice.means[row] - center)))
        if len(rows) >= k:
            kth = np.partition(np.asarray(dists), k - 1)[k - 1]
            if s * cfg.spacing > kth:
                order = np.argsort(np.asarray(dists), kind="stable")[:k]
                sel = np.asarray(rows)[order]
                return lattice.means[sel], np.asarray(dists)[order]
        if len(rows) == total:
            break

    all_d = np.linalg.norm(lattice.means - center, axis=1)
    order = np.argsort(all_d, kind="stable")[:k]
    return lattice.means[order], all_d[order]


def local_std_dev(lattice: VoxelLattice, center, k: int) -> tuple[float, int]:
    """Scatter of the k nearest active-voxel means around a world point.

    Returns (sigma_hat, n) where n <= k is the neighbor count actually found.

    Raises:
        InsufficientNeighborsError: fewer than two neighbors exist; the
            caller should keep its previous radius.
    """
    if k < 2:
        raise ValueError("k must be at least 2")
    means, _ = k_nearest_means(lattice, center, k)
    n = means.shape[0]
    if n < 2:
        raise InsufficientNeighborsError(f"found {n} neighbors, need at least 2")
    return scatter_sigma(means), n


def bandwidth(sigma_hat: float, n: int) -> float:
    """Gaussian-kernel rule-of-thumb bandwidth: 1.06 * sigma * n^(-1/5)."""
    if sigma_hat < 0 or n < 1:
        raise ValueError("need sigma_hat >= 0 and n >= 1")
    return 1.06 * sigma_hat * n ** (-0.2)


def adaptive_radius(b: float, config: DensityConfig) -> float:
    """Proxy radius beta * b clamped into [r1, r2]."""
    if b < 0:
        raise ValueError("bandwidth must be non-negative")
    return min(max(config.beta * b, config.r1), config.r2)


def kernel_density(x: float, samples, b: float) -> float:
    """Univariate Gaussian KDE at x. Diagnostic primitive, not on the hot path."""
    if not b > 0:
        raise ValueError("bandwidth must be positive")
    xs = np.asarray(samples, dtype=np.float64)
    if xs.size == 0:
        raise ValueError("samples must be non-empty")
    u = (x - xs) / b
    return float(np.sum(np.exp(-0.5 * u * u)) / (xs.size * b * math.sqrt(2.0 * math.pi)))

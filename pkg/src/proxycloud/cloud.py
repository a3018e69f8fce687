"""Point-cloud ingestion, affine transforms, and voxel-lattice resampling.

The lattice is the geometry actually rendered: each active voxel stores the
mean of the raw points that fell into it, and neighborhood queries for the
haptic loop run against those means only.
"""

from __future__ import annotations

import io
import math
from dataclasses import dataclass, field

import numpy as np

from .errors import CloudParseError, EmptyCloudError, EmptyLatticeError

Vec3 = np.ndarray  # shape (3,), float64


def vec3(x, y=None, z=None) -> Vec3:
    """Build a float64 3-vector from components or any length-3 sequence."""
    if y is None:
        return np.asarray(x, dtype=np.float64).reshape(3)
    return np.array([x, y, z], dtype=np.float64)


@dataclass(frozen=True)
class PointCloud:
    """Immutable set of 3D points with axis-aligned bounds, in meters."""

    points: np.ndarray  # (N, 3) float64
    bounds_min: Vec3
    bounds_max: Vec3

    @classmethod
    def from_points(cls, points: np.ndarray) -> "PointCloud":
        pts = np.ascontiguousarray(points, dtype=np.float64)
        if pts.ndim != 2 or pts.shape[1] != 3 or pts.shape[0] == 0:
            raise EmptyCloudError("point cloud must be a non-empty (N, 3) array")
        if not np.isfinite(pts).all():
            raise EmptyCloudError("point cloud contains non-finite coordinates")
        pts.setflags(write=False)
        return cls(pts, pts.min(axis=0), pts.max(axis=0))

    def __len__(self) -> int:
        return self.points.shape[0]


@dataclass(frozen=True)
class AffineTransform:
    """x -> linear @ x + translation. Linear part may scale or rotate."""

    linear: np.ndarray  # (3, 3) float64
    translation: Vec3

    def __post_init__(self):
        lin = np.asarray(self.linear, dtype=np.float64).reshape(3, 3)
        tr = np.asarray(self.translation, dtype=np.float64).reshape(3)
        if not (np.isfinite(lin).all() and np.isfinite(tr).all()):
            raise ValueError("transform must be finite")
        object.__setattr__(self, "linear", lin)
        object.__setattr__(self, "translation", tr)

    @classmethod
    def identity(cls) -> "AffineTransform":
        return cls(np.eye(3), np.zeros(3))

    @classmethod
    def scaling(cls, sx: float, sy: float | None = None, sz: float | None = None) -> "AffineTransform":
        if sy is None:
            sy = sz = sx
        if min(sx, sy, sz) <= 0:
            raise ValueError("scale factors must be positive")
        return cls(np.diag([sx, sy, sz]), np.zeros(3))

    @classmethod
    def rotation_axis_angle(cls, axis, angle_rad: float) -> "AffineTransform":
        """Rodrigues rotation about a (not necessarily unit) axis."""
        a = np.asarray(axis, dtype=np.float64).reshape(3)
        n = np.linalg.norm(a)
        if n == 0:
            raise ValueError("rotation axis must be non-zero")
        a = a / n
        k = np.array([[0, -a[2], a[1]], [a[2], 0, -a[0]], [-a[1], a[0], 0]])
        rot = np.eye(3) + math.sin(angle_rad) * k + (1 - math.cos(angle_rad)) * (k @ k)
        return cls(rot, np.zeros(3))

    @classmethod
    def translation_of(cls, offset) -> "AffineTransform":
        return cls(np.eye(3), vec3(offset))

    def then(self, other: "AffineTransform") -> "AffineTransform":
        """Composite transform equal to applying self first, then other."""
        return AffineTransform(other.linear @ self.linear,
                               other.linear @ self.translation + other.translation)

    def inverse(self) -> "AffineTransform":
        inv = np.linalg.inv(self.linear)
        return AffineTransform(inv, -inv @ self.translation)

    def is_orthonormal(self, tol: float = 1e-9) -> bool:
        return bool(np.abs(self.linear.T @ self.linear - np.eye(3)).max() <= tol)


@dataclass(frozen=True)
class LatticeConfig:
    """Regular 3D voxel grid: per-axis voxel counts, edge length, world origin."""

    dims: tuple[int, int, int] = (300, 300, 300)
    spacing: float = 1.0 / 300.0
    origin: Vec3 = field(default_factory=lambda: np.zeros(3))

    def __post_init__(self):
        dims = tuple(int(d) for d in self.dims)
        if len(dims) != 3 or min(dims) < 1:
            raise ValueError("dims must be three integers >= 1")
        if not self.spacing > 0:
            raise ValueError("spacing must be positive")
        object.__setattr__(self, "dims", dims)
        object.__setattr__(self, "origin", vec3(self.origin))

    @property
    def world_max(self) -> Vec3:
        return self.origin + self.spacing * np.asarray(self.dims, dtype=np.float64)

    @property
    def center(self) -> Vec3:
        return self.origin + 0.5 * self.spacing * np.asarray(self.dims, dtype=np.float64)


@dataclass(frozen=True)
class VoxelLattice:
    """Sparse resampled geometry: active voxels hold the mean of their points.

    Voxels are addressed by a linearized index key; `means` rows follow the
    sorted key order so rebuilds from identical input are bit-identical.
    """

    config: LatticeConfig
    means: np.ndarray    # (M, 3) float64, mean position per active voxel
    counts: np.ndarray   # (M,) int64, resampled point count per active voxel
    keys: np.ndarray     # (M,) int64 sorted linear voxel ids
    index: dict          # linear voxel id -> row in means
    discarded: int       # input points outside the lattice box

    @property
    def active_count(self) -> int:
        return self.means.shape[0]

    def voxel_of(self, p: Vec3) -> np.ndarray:
        """Integer voxel index triple containing a world point (unclamped)."""
        return np.floor((np.asarray(p) - self.config.origin) / self.config.spacing).astype(np.int64)

    def key_of(self, ijk) -> int:
        nx, ny, nz = self.config.dims
        i, j, k = (int(v) for v in ijk)
        return (i * ny + j) * nz + k

    def voxel_box(self, ijk) -> tuple[Vec3, Vec3]:
        lo = self.config.origin + self.config.spacing * np.asarray(ijk, dtype=np.float64)
        return lo, lo + self.config.spacing


def load_cloud(source, fmt: str = "xyz") -> PointCloud:
    """Parse an XYZ or ASCII-PLY byte/text stream into a PointCloud.

    Args:
        source: bytes, str, or a readable binary/text stream.
        fmt: "xyz" (one whitespace-separated triple per line, '#' comments)
             or "ply" (ASCII PLY with a vertex element carrying x/y/z).

    Raises:
        CloudParseError: malformed content, with the offending line number.
        EmptyCloudError: zero points after parsing.
    """
    text = _as_text(source)
    fmt = fmt.lower()
    if fmt == "xyz":
        return _parse_xyz(text)
    if fmt == "ply":
        return _parse_ply(text)
    raise ValueError(f"unknown cloud format: {fmt!r}")


def _as_text(source) -> str:
    if isinstance(source, bytes):
        return source.decode("utf-8")
    if isinstance(source, str):
        return source
    data = source.read()
    if isinstance(data, bytes):
        return data.decode("utf-8")
    return data


def _parse_triple(tokens, lineno: int) -> tuple[float, float, float]:
    try:
        x, y, z = float(tokens[0]), float(tokens[1]), float(tokens[2])
    except (ValueError, IndexError):
        raise CloudParseError(f"expected three numbers, got {' '.join(tokens)!r}", lineno)
    if not (math.isfinite(x) and math.isfinite(y) and math.isfinite(z)):
        raise CloudParseError("non-finite coordinate", lineno)
    return x, y, z


def _parse_xyz(text: str) -> PointCloud:
    pts = []
    for lineno, raw in enumerate(text.splitlines(), start=1):
        line = raw.strip()
        if not line or line.startswith("#"):
            continue
        pts.append(_parse_triple(line.split(), lineno))
    if not pts:
        raise EmptyCloudError("no points in XYZ input")
    return PointCloud.from_points(np.array(pts, dtype=np.float64))


def _parse_ply(text: str) -> PointCloud:
    lines = text.splitlines()
    if not lines or lines[0].strip() != "ply":
        raise CloudParseError("missing 'ply' magic", 1)

    vertex_count = None
    xyz_cols: dict[str, int] = {}
    prop_cursor = 0
    in_vertex_element = False
    body_start = None

    for lineno, raw in enumerate(lines[1:], start=2):
        parts = raw.strip().split()
        if not parts:
            continue
        kw = parts[0]
        if kw == "comment":
            continue
        if kw == "format":
            if len(parts) < 2 or parts[1] != "ascii":
                raise CloudParseError("only ASCII PLY is supported", lineno)
        elif kw == "element":
            in_vertex_element = len(parts) >= 2 and parts[1] == "vertex"
            if in_vertex_element:
                try:
                    vertex_count = int(parts[2])
                except (ValueError, IndexError):
                    raise CloudParseError("bad vertex element count", lineno)
                prop_cursor = 0
        elif kw == "property":
            if in_vertex_element:
                name = parts[-1]
                if name in ("x", "y", "z"):
                    xyz_cols[name] = prop_cursor
                prop_cursor += 1
        elif kw == "end_header":
            body_start = lineno
            break

    if body_start is None:
        raise CloudParseError("missing end_header", len(lines))
    if vertex_count is None:
        raise CloudParseError("no vertex element declared", body_start)
    if vertex_count == 0:
        raise EmptyCloudError("PLY declares zero vertices")
    if len(xyz_cols) != 3:
        raise CloudParseError("vertex element lacks x/y/z properties", body_start)

    pts = np.empty((vertex_count, 3), dtype=np.float64)
    row = 0
    for lineno, raw in enumerate(lines[body_start:], start=body_start + 1):
        line = raw.strip()
        if not line:
            continue
        if row >= vertex_count:
            break  # trailing elements (faces etc.) are ignored
        tokens = line.split()
        try:
            triple = tuple(float(tokens[xyz_cols[a]]) for a in ("x", "y", "z"))
        except (ValueError, IndexError):
            raise CloudParseError(f"bad vertex row {line!r}", lineno)
        if not all(math.isfinite(v) for v in triple):
            raise CloudParseError("non-finite coordinate", lineno)
        pts[row] = triple
        row += 1
    if row != vertex_count:
        raise CloudParseError(f"expected {vertex_count} vertices, found {row}", len(lines))
    return PointCloud.from_points(pts)


def apply_transform(cloud: PointCloud, t: AffineTransform) -> PointCloud:
    """Return a new cloud with every point mapped through linear @ x + translation."""
    return PointCloud.from_points(cloud.points @ t.linear.T + t.translation)


def resample_to_lattice(cloud: PointCloud, config: LatticeConfig) -> VoxelLattice:
    """Bin points into voxels and keep per-voxel means (the rendered geometry).

    Points outside the lattice box are discarded and counted. Points exactly
    on the lattice's outer max face are clamped into the last voxel; interior
    voxel boundaries follow plain floor binning.
    """
    dims = np.asarray(config.dims, dtype=np.int64)
    rel = (cloud.points - config.origin) / config.spacing
    idx = np.floor(rel).astype(np.int64)
    # outer max face: rel == dims exactly still belongs to the last voxel
    on_max = (idx == dims) & (rel == dims)
    idx[on_max] -= 1

    inside = ((idx >= 0) & (idx < dims)).all(axis=1)
    kept = idx[inside]
    discarded = int(len(cloud) - kept.shape[0])
    if kept.shape[0] == 0:
        raise EmptyLatticeError("all points fall outside the lattice")

    ny, nz = int(dims[1]), int(dims[2])
    linear = (kept[:, 0] * ny + kept[:, 1]) * nz + kept[:, 2]
    keys, inverse, counts = np.unique(linear, return_inverse=True, return_counts=True)
    sums = np.zeros((keys.shape[0], 3), dtype=np.float64)
    np.add.at(sums, inverse, cloud.points[inside])
    means = sums / counts[:, None]

    for arr in (means, counts, keys):
        arr.setflags(write=False)
    index = {int(k): i for i, k in enumerate(keys)}
    return VoxelLattice(config=config, means=means, counts=counts.astype(np.int64),
                        keys=keys, index=index, discarded=discarded)


def query_points_in_sphere(lattice: VoxelLattice, center, radius: float) -> np.ndarray:
    """Active-voxel means strictly inside the sphere, as an (K, 3) array.

    Visits only voxels overlapping the sphere's bounding box. Each (i, j)
    column of that box is a contiguous run of linear voxel ids, so candidate
    rows come from two vectorized binary searches over the sorted key array
    instead of per-voxel hash lookups; the empty result is a valid answer
    (free space).
    """
    if not radius > 0:
        raise ValueError("radius must be positive")
    center = np.asarray(center, dtype=np.float64)
    cfg = lattice.config
    dims = cfg.dims
    lo = np.floor((center - radius - cfg.origin) / cfg.spacing).astype(np.int64)
    hi = np.floor((center + radius - cfg.origin) / cfg.spacing).astype(np.int64)
    lo = np.maximum(lo, 0)
    hi = np.minimum(hi, np.asarray(dims) - 1)
    if (lo > hi).any():
        return np.empty((0, 3), dtype=np.float64)

    ny, nz = dims[1], dims[2]
    ii = np.arange(lo[0], hi[0] + 1, dtype=np.int64)
    jj = np.arange(lo[1], hi[1] + 1, dtype=np.int64)
    base = ((ii[:, None] * ny + jj[None, :]) * nz).ravel()
    keys = lattice.keys
    starts = np.searchsorted(keys, base + int(lo[2]), side="left")
    ends = np.searchsorted(keys, base + int(hi[2]), side="right")
    lens = ends - starts
    total = int(lens.sum())
    if total == 0:
        return np.empty((0, 3), dtype=np.float64)
    # expand the [start, end) runs into one flat row-index array
    rows = np.repeat(starts - np.concatenate(([0], np.cumsum(lens)[:-1])), lens) \
        + np.arange(total, dtype=np.int64)
    cand = lattice.means[rows]
    d2 = np.einsum("ij,ij->i", cand - center, cand - center)
    return cand[d2 < radius * radius]


def active_voxel_count(lattice: VoxelLattice) -> int:
    """Number of active (occupied) voxels."""
    return lattice.active_count

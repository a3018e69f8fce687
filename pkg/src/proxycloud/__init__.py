"""Proxy-based haptic rendering for raw, variable-density 3D point clouds.

The pipeline: load a cloud, transform it, resample onto a sparse voxel
lattice of per-voxel means, then run a 1 kHz loop in which a spherical proxy
rides the sampled surface while the haptic interaction point penetrates
freely; the proxy/HIP offset drives a Hooke-law reaction force, local
density drives the proxy radius, and a Coulomb model scales tangential
motion for surface friction.
"""

from .cloud import (
    AffineTransform,
    LatticeConfig,
    PointCloud,
    VoxelLattice,
    active_voxel_count,
    apply_transform,
    load_cloud,
    query_points_in_sphere,
    resample_to_lattice,
)
from .config import EngineConfig, compose_transforms
from .density import (
    DensityConfig,
    adaptive_radius,
    bandwidth,
    kernel_density,
    local_std_dev,
)
from .errors import (
    CloudParseError,
    ConfigError,
    DegeneratePointError,
    EmptyCloudError,
    EmptyLatticeError,
    EngineError,
    InsufficientNeighborsError,
    NoContactError,
    UndefinedTangentError,
)
from .force import (
    ForceParams,
    ForceSample,
    FrictionParams,
    compute_friction_scale,
    penetration_depth,
    reaction_force,
)
from .oracle import SphereSpec, compare_traces, ideal_sphere_force, synth_sphere_cloud
from .proxy import (
    Contact,
    ProxyParams,
    ProxyState,
    TangentMode,
    compute_overshoot,
    compute_sinking_normal,
    compute_tangent,
    proxy_step,
)
from .session import (
    HipMailbox,
    HipSource,
    SessionConfig,
    SessionMode,
    Snapshot,
    TimingStats,
    World,
    read_trace_jsonl,
    read_trajectory,
    run_loop,
    step_once,
    write_trace,
)
from .validation import ValidationConfig, ValidationReport, run_sphere_validation

__version__ = "0.1.0"

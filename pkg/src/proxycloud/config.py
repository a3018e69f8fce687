"""Engine configuration: one YAML tree covering every tunable parameter.

Keys carry explicit units in their names (spacing_m, stiffness_n_per_m) and
unknown keys are hard errors so a typo in an experiment sweep fails loudly
instead of silently running defaults.
"""

from __future__ import annotations

import math
from dataclasses import dataclass, field

import numpy as np
import yaml

from .cloud import AffineTransform, LatticeConfig
from .density import DensityConfig
from .errors import ConfigError
from .force import ForceParams, FrictionParams
from .proxy import ProxyParams, TangentMode
from .session import SessionConfig, SessionMode
from .validation import ValidationConfig


def _take(d: dict, section: str, allowed: set) -> dict:
    unknown = set(d) - allowed
    if unknown:
        raise ConfigError(f"unknown key(s) in {section}: {sorted(unknown)}")
    return d


def _lattice_from(d: dict) -> LatticeConfig:
    _take(d, "lattice", {"dims", "spacing_m", "origin_m"})
    kw = {}
    if "dims" in d:
        kw["dims"] = tuple(d["dims"])
    if "spacing_m" in d:
        kw["spacing"] = d["spacing_m"]
    if "origin_m" in d:
        kw["origin"] = d["origin_m"]
    try:
        return LatticeConfig(**kw)
    except ValueError as e:
        raise ConfigError(f"lattice: {e}")


def _proxy_from(d: dict) -> ProxyParams:
    _take(d, "proxy", {"k_n", "k_h", "delta", "zeta_factor", "tangent_mode",
                       "free_latch_factor", "max_step_factor"})
    try:
        return ProxyParams(**d)
    except ValueError as e:
        raise ConfigError(f"proxy: {e}")


def _density_from(d: dict, spacing: float) -> DensityConfig:
    _take(d, "density", {"beta", "r1_m", "r2_m", "neighborhood_k", "recompute_threshold_m"})
    base = DensityConfig.for_spacing(spacing)
    try:
        return DensityConfig(
            beta=d.get("beta", base.beta),
            r1=d.get("r1_m", base.r1),
            r2=d.get("r2_m", base.r2),
            neighborhood_k=d.get("neighborhood_k", base.neighborhood_k),
            recompute_threshold=d.get("recompute_threshold_m", base.recompute_threshold),
        )
    except ValueError as e:
        raise ConfigError(f"density: {e}")


def _force_from(d: dict) -> ForceParams:
    _take(d, "force", {"stiffness_n_per_m"})
    try:
        return ForceParams(stiffness=d.get("stiffness_n_per_m", 300.0))
    except ValueError as e:
        raise ConfigError(f"force: {e}")


def _friction_from(d: dict) -> FrictionParams:
    _take(d, "friction", {"mu_s", "mu_d", "enabled"})
    try:
        return FrictionParams(**d)
    except ValueError as e:
        raise ConfigError(f"friction: {e}")


def _session_from(d: dict) -> SessionConfig:
    _take(d, "session", {"rate_hz", "max_ticks", "mode", "snapshot_decimation"})
    try:
        return SessionConfig(**d)
    except ValueError as e:
        raise ConfigError(f"session: {e}")


def _validation_from(d: dict) -> ValidationConfig:
    _take(d, "validation", {"sphere_radius_m", "sphere_samples", "sphere_seed",
                            "press_direction", "clearance_m", "settle_ticks",
                            "approach_speed_m_per_tick", "dwell_depth_fracs",
                            "dwell_ticks", "ramp_ticks", "measure_ticks",
                            "calibration_dwell", "rms_bound", "max_bound"})
    rename = {"sphere_radius_m": "sphere_radius", "clearance_m": "clearance",
              "approach_speed_m_per_tick": "approach_speed",
              "dwell_depth_fracs": "dwell_depths"}
    kw = {rename.get(k, k): v for k, v in d.items()}
    for key in ("press_direction", "dwell_depths"):
        if key in kw:
            kw[key] = tuple(kw[key])
    try:
        return ValidationConfig(**kw)
    except ValueError as e:
        raise ConfigError(f"validation: {e}")


def compose_transforms(ops: list) -> AffineTransform:
    """Ordered transform list (applied left to right) into one affine map.

    Each entry is one of:
      - {"scale": s} or {"scale": [sx, sy, sz]}
      - {"rotate": {"axis": [x, y, z], "angle_deg": a}}
      - {"translate_m": [dx, dy, dz]}
    """
    t = AffineTransform.identity()
    for i, op in enumerate(ops):
        if not isinstance(op, dict) or len(op) != 1:
            raise ConfigError(f"transforms[{i}]: each entry is a single-key mapping")
        kind, spec = next(iter(op.items()))
        try:
            if kind == "scale":
                step = (AffineTransform.scaling(float(spec)) if np.isscalar(spec)
                        else AffineTransform.scaling(*[float(v) for v in spec]))
            elif kind == "rotate":
                _take(spec, f"transforms[{i}].rotate", {"axis", "angle_deg"})
                step = AffineTransform.rotation_axis_angle(
                    spec["axis"], math.radians(float(spec["angle_deg"])))
            elif kind == "translate_m":
                step = AffineTransform.translation_of([float(v) for v in spec])
            else:
                raise ConfigError(f"transforms[{i}]: unknown op {kind!r}")
        except (ValueError, KeyError, TypeError) as e:
            raise ConfigError(f"transforms[{i}]: {e}")
        t = t.then(step)
    return t


@dataclass(frozen=True)
class EngineConfig:
    """Aggregate of every module's parameters plus the load-time transforms."""

    lattice: LatticeConfig = field(default_factory=LatticeConfig)
    proxy: ProxyParams = field(default_factory=ProxyParams)
    density: DensityConfig | None = None
    force: ForceParams = field(default_factory=ForceParams)
    friction: FrictionParams = field(default_factory=FrictionParams)
    session: SessionConfig = field(default_factory=SessionConfig)
    validation: ValidationConfig = field(default_factory=ValidationConfig)
    transform_ops: tuple = ()

    def __post_init__(self):
        if self.density is None:
            object.__setattr__(self, "density",
                               DensityConfig.for_spacing(self.lattice.spacing))

    @property
    def transform(self) -> AffineTransform:
        return compose_transforms(list(self.transform_ops))

    @classmethod
    def from_dict(cls, d: dict) -> "EngineConfig":
        if d is None:
            d = {}
        _take(d, "config root", {"lattice", "proxy", "density", "force",
                                 "friction", "session", "validation", "transforms"})
        lattice = _lattice_from(dict(d.get("lattice", {})))
        cfg = cls(
            lattice=lattice,
            proxy=_proxy_from(dict(d.get("proxy", {}))),
            density=_density_from(dict(d.get("density", {})), lattice.spacing),
            force=_force_from(dict(d.get("force", {}))),
            friction=_friction_from(dict(d.get("friction", {}))),
            session=_session_from(dict(d.get("session", {}))),
            validation=_validation_from(dict(d.get("validation", {}))),
            transform_ops=tuple(d.get("transforms", ())),
        )
        cfg.transform  # validate op syntax eagerly
        return cfg

    @classmethod
    def from_yaml(cls, text: str) -> "EngineConfig":
        try:
            data = yaml.safe_load(text)
        except yaml.YAMLError as e:
            raise ConfigError(f"bad YAML: {e}")
        if data is not None and not isinstance(data, dict):
            raise ConfigError("config root must be a mapping")
        return cls.from_dict(data or {})

    @classmethod
    def from_file(cls, path) -> "EngineConfig":
        with open(path) as fh:
            return cls.from_yaml(fh.read())

    def to_dict(self) -> dict:
        """Effective configuration with every default materialized."""
        return {
            "lattice": {"dims": list(self.lattice.dims),
                        "spacing_m": self.lattice.spacing,
                        "origin_m": self.lattice.origin.tolist()},
            "proxy": {"k_n": self.proxy.k_n, "k_h": self.proxy.k_h,
                      "delta": self.proxy.delta, "zeta_factor": self.proxy.zeta_factor,
                      "tangent_mode": self.proxy.tangent_mode.value,
                      "free_latch_factor": self.proxy.free_latch_factor,
                      "max_step_factor": self.proxy.max_step_factor},
            "density": {"beta": self.density.beta, "r1_m": self.density.r1,
                        "r2_m": self.density.r2,
                        "neighborhood_k": self.density.neighborhood_k,
                        "recompute_threshold_m": self.density.recompute_threshold},
            "force": {"stiffness_n_per_m": self.force.stiffness},
            "friction": {"mu_s": self.friction.mu_s, "mu_d": self.friction.mu_d,
                         "enabled": self.friction.enabled},
            "session": {"rate_hz": self.session.rate_hz,
                        "max_ticks": self.session.max_ticks,
                        "mode": self.session.mode.value,
                        "snapshot_decimation": self.session.snapshot_decimation},
            "validation": {"sphere_radius_m": self.validation.sphere_radius,
                           "sphere_samples": self.validation.sphere_samples,
                           "sphere_seed": self.validation.sphere_seed,
                           "press_direction": list(self.validation.press_direction),
                           "clearance_m": self.validation.clearance,
                           "settle_ticks": self.validation.settle_ticks,
                           "approach_speed_m_per_tick": self.validation.approach_speed,
                           "dwell_depth_fracs": list(self.validation.dwell_depths),
                           "dwell_ticks": self.validation.dwell_ticks,
                           "ramp_ticks": self.validation.ramp_ticks,
                           "measure_ticks": self.validation.measure_ticks,
                           "calibration_dwell": self.validation.calibration_dwell,
                           "rms_bound": self.validation.rms_bound,
                           "max_bound": self.validation.max_bound},
            "transforms": [dict(op) for op in self.transform_ops],
        }

    def to_yaml(self) -> str:
        return yaml.safe_dump(self.to_dict(), sort_keys=False)

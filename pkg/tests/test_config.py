import math

import numpy as np
import pytest

from proxycloud.config import EngineConfig, compose_transforms
from proxycloud.errors import ConfigError
from proxycloud.proxy import TangentMode

FULL_YAML = """
lattice:
  dims: [200, 200, 200]
  spacing_m: 0.002
  origin_m: [0.1, 0.1, 0.1]
proxy:
  k_n: 0.05
  k_h: 0.003
  delta: 1.0e-05
  zeta_factor: 0.04
  tangent_mode: orthogonalized
force:
  stiffness_n_per_m: 250.0
friction:
  mu_s: 0.4
  mu_d: 0.1
  enabled: true
session:
  rate_hz: 2000
  max_ticks: 100
  mode: realtime
density:
  beta: 3.0
  neighborhood_k: 16
validation:
  rms_bound: 0.01
transforms:
  - scale: 2.0
  - rotate: {axis: [0, 0, 1], angle_deg: 90}
  - translate_m: [0.05, 0.0, 0.0]
"""


class TestParsing:
    def test_empty_config_gives_defaults(self):
        cfg = EngineConfig.from_yaml("")
        assert cfg.lattice.dims == (300, 300, 300)
        assert cfg.lattice.spacing == pytest.approx(1 / 300)
        assert cfg.proxy.k_n == 0.064
        assert cfg.proxy.k_h == 0.002
        assert cfg.proxy.delta == 8e-6
        assert cfg.force.stiffness == 300.0
        assert cfg.density.r1 == pytest.approx(1.5 / 300)
        assert cfg.density.r2 == pytest.approx(10 / 300)

    def test_full_config(self):
        cfg = EngineConfig.from_yaml(FULL_YAML)
        assert cfg.lattice.spacing == 0.002
        assert cfg.proxy.tangent_mode == TangentMode.ORTHOGONALIZED
        assert cfg.friction.enabled
        assert cfg.session.rate_hz == 2000
        assert cfg.density.beta == 3.0
        # unset density bounds derive from the configured spacing
        assert cfg.density.r1 == pytest.approx(0.003)
        assert cfg.validation.rms_bound == 0.01

    def test_unknown_root_key(self):
        with pytest.raises(ConfigError, match="unknown key"):
            EngineConfig.from_yaml("latice: {}\n")

    def test_unknown_section_key(self):
        with pytest.raises(ConfigError, match="proxy"):
            EngineConfig.from_yaml("proxy: {kn: 0.1}\n")

    def test_invariant_violation_reported(self):
        with pytest.raises(ConfigError, match="friction"):
            EngineConfig.from_yaml("friction: {mu_s: 0.1, mu_d: 0.5}\n")

    def test_bad_yaml(self):
        with pytest.raises(ConfigError):
            EngineConfig.from_yaml("lattice: [unclosed\n")

    def test_every_named_parameter_settable(self):
        text = """
lattice: {dims: [64, 64, 64], spacing_m: 0.01}
proxy: {k_n: 0.1, k_h: 0.01, delta: 0.0001, zeta_factor: 0.02}
density: {beta: 1.5, r1_m: 0.012, r2_m: 0.2}
force: {stiffness_n_per_m: 123.0}
friction: {mu_s: 0.6, mu_d: 0.5}
session: {rate_hz: 500}
"""
        cfg = EngineConfig.from_yaml(text)
        assert (cfg.proxy.k_n, cfg.proxy.k_h, cfg.proxy.delta, cfg.proxy.zeta_factor) == (0.1, 0.01, 0.0001, 0.02)
        assert (cfg.density.beta, cfg.density.r1, cfg.density.r2) == (1.5, 0.012, 0.2)
        assert cfg.force.stiffness == 123.0
        assert (cfg.friction.mu_s, cfg.friction.mu_d) == (0.6, 0.5)
        assert cfg.lattice.dims == (64, 64, 64)
        assert cfg.lattice.spacing == 0.01
        assert cfg.session.rate_hz == 500


class TestRoundTrip:
    def test_yaml_round_trip_identity(self):
        cfg = EngineConfig.from_yaml(FULL_YAML)
        again = EngineConfig.from_yaml(cfg.to_yaml())
        assert again.to_dict() == cfg.to_dict()

    def test_defaults_round_trip(self):
        cfg = EngineConfig.from_yaml("")
        again = EngineConfig.from_yaml(cfg.to_yaml())
        assert again.to_dict() == cfg.to_dict()


class TestTransforms:
    def test_ops_compose_left_to_right(self):
        t = compose_transforms([{"scale": 2.0}, {"translate_m": [1.0, 0, 0]}])
        out = t.linear @ np.array([1.0, 1.0, 1.0]) + t.translation
        np.testing.assert_allclose(out, [3, 2, 2])

    def test_rotation_is_orthonormal(self):
        t = compose_transforms([{"rotate": {"axis": [0, 1, 0], "angle_deg": 180}}])
        assert t.is_orthonormal()

    def test_anisotropic_scale(self):
        t = compose_transforms([{"scale": [1.0, 2.0, 3.0]}])
        np.testing.assert_allclose(np.diag(t.linear), [1, 2, 3])

    def test_unknown_op(self):
        with pytest.raises(ConfigError, match="unknown op"):
            compose_transforms([{"shear": 0.5}])

    def test_bad_rotate_keys(self):
        with pytest.raises(ConfigError):
            compose_transforms([{"rotate": {"axis": [0, 0, 1], "deg": 90}}])

    def test_engine_config_transform_property(self):
        cfg = EngineConfig.from_yaml(FULL_YAML)
        p = cfg.transform.linear @ np.array([1.0, 0.0, 0.0]) + cfg.transform.translation
        # scale 2 then rotate 90 about z then translate +x
        np.testing.assert_allclose(p, [0.05, 2.0, 0.0], atol=1e-12)

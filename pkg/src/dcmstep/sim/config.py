"""Scenario configuration: a flat YAML mapping whose keys are the fields below."""
import dataclasses
from dataclasses import dataclass, field
from pathlib import Path

import numpy as np
import yaml

from ..errors import ConfigError

UNITS = {
    "step_length": "m",
    "step_width": "m",
    "step_period": "s",
    "com_height": "m",
    "gravity": "m/s^2",
    "k_xi": "1/s",
    "foot_back": "m",
    "foot_front": "m",
    "foot_half_width": "m",
    "push_fraction": "of body weight",
    "push_start": "s",
    "push_duration": "s",
    "dcm_kick_time": "s",
    "dcm_kick": "m",
    "control_rate": "Hz",
    "abort_radius": "m",
    "apex_height": "m",
    "mod_clamp": "m",
    "initial_com": "m",
    "initial_com_vel": "m/s",
    "torque_limit": "N m",
    "f_min": "N",
}


@dataclass
class ScenarioConfig:
    """Everything a closed-loop run depends on.

    ``footsteps`` overrides the generated gait; otherwise ``gait`` is
    ``walk`` (forward steps of ``step_length``) or ``in_place``, with feet
    ``step_width`` apart laterally. The step period actually used is
    ``step_period * timing_scale``.
    """

    name: str = "scenario"
    plant: str = "lipm"
    profile: str = "active"
    gait: str = "walk"
    footsteps: list = None
    step_length: float = 0.2
    step_width: float = 0.2
    step_period: float = 0.5
    timing_scale: float = 1.0
    preview: int = 3
    total_steps: int = 10
    com_height: float = 0.9
    gravity: float = 9.81
    k_xi: float = 3.0
    foot_back: float = 0.08
    foot_front: float = 0.12
    foot_half_width: float = 0.05
    push_fraction: float = 0.0
    push_start: float = 0.0
    push_duration: float = 0.0
    push_direction: list = field(default_factory=lambda: [0.0, 1.0])
    dcm_kick_time: float = None
    dcm_kick: list = None
    step_adjustment: bool = True
    control_rate: float = 1000.0
    abort_radius: float = 5.0
    apex_height: float = 0.05
    mod_freeze_fraction: float = 0.05
    mod_smoothing: bool = False
    mod_clamp: list = None
    initial_com: list = None
    initial_com_vel: list = None
    torque_limit: float = 200.0
    f_min: float = 1.0

    def __post_init__(self):
        self.validate()

    def validate(self):
        if self.plant not in ("lipm", "multibody"):
            raise ConfigError(f"plant must be 'lipm' or 'multibody', got {self.plant!r}")
        if self.profile not in ("active", "passive"):
            raise ConfigError(f"profile must be 'active' or 'passive', got {self.profile!r}")
        if self.gait not in ("walk", "in_place"):
            raise ConfigError(f"gait must be 'walk' or 'in_place', got {self.gait!r}")
        if self.control_rate < 100:
            raise ConfigError("control rate must be at least 100 Hz")
        if self.total_steps < 1:
            raise ConfigError("total_steps must be at least 1")
        if self.push_fraction < 0:
            raise ConfigError("push fraction must be non-negative")
        if self.preview < 2:
            raise ConfigError("preview must be at least 2 (landing adjustment needs two boundaries ahead)")
        if not (self.step_period > 0 and self.timing_scale > 0):
            raise ConfigError("step period and timing scale must be positive")
        if not (self.com_height > 0 and self.gravity > 0 and self.k_xi > 0):
            raise ConfigError("com_height, gravity and k_xi must be positive")
        if not 0 <= self.mod_freeze_fraction < 1:
            raise ConfigError("mod_freeze_fraction must lie in [0, 1)")
        if (self.dcm_kick is None) != (self.dcm_kick_time is None):
            raise ConfigError("dcm_kick and dcm_kick_time go together")
        if self.footsteps is not None:
            fp = np.asarray(self.footsteps, dtype=float)
            if fp.ndim != 2 or fp.shape[1] != 2 or fp.shape[0] < 2:
                raise ConfigError("footsteps must be a list of at least two [x, y] pairs")

    @property
    def period(self):
        return self.step_period * self.timing_scale

    def replace(self, **changes):
        return dataclasses.replace(self, **changes)

    @classmethod
    def from_dict(cls, data):
        known = {f.name for f in dataclasses.fields(cls)}
        unknown = sorted(set(data) - known)
        if unknown:
            raise ConfigError(f"unknown config keys: {', '.join(unknown)}")
        try:
            return cls(**data)
        except TypeError as exc:
            raise ConfigError(str(exc)) from None

    def to_dict(self):
        return dataclasses.asdict(self)


def load_config(path):
    try:
        data = yaml.safe_load(Path(path).read_text())
    except (OSError, yaml.YAMLError) as exc:
        raise ConfigError(f"cannot read config {path}: {exc}") from None
    if not isinstance(data, dict):
        raise ConfigError(f"config {path} must be a mapping")
    return ScenarioConfig.from_dict(data)


def footstep_sequence(cfg, count):
    """Planned footprints F[0..count-1] and the initial position of the swing foot."""
    if cfg.footsteps is not None:
        fp = np.asarray(cfg.footsteps, dtype=float)
        if fp.shape[0] < count:
            fp = np.vstack([fp, np.repeat(fp[-1:], count - fp.shape[0], axis=0)])
        return fp[:count], np.array([fp[0, 0], fp[1, 1]])
    k = np.arange(count)
    lateral = 0.5 * cfg.step_width * np.where(k % 2 == 0, 1.0, -1.0)
    forward = cfg.step_length * k if cfg.gait == "walk" else np.zeros(count)
    fp = np.column_stack([forward, lateral])
    return fp, np.array([0.0, -lateral[0]])

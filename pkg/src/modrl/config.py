"""Typed run configuration: flat INI-style files with one section per module.

Every key is declared in a schema with its type; unknown sections or keys are
rejected so a typo cannot silently fall back to a default. Values omitted
from the file keep the package defaults.
"""

from __future__ import annotations

import configparser
from dataclasses import dataclass, field, replace
from pathlib import Path

from .coord.mission import MissionConfig
from .envs import ManipEnvConfig, RewardWeights, SteerEnvConfig, WheelEnvConfig
from .rl.ppo import PpoConfig
from .rl.sac import SacConfig
from .rl.training import TrainBudget
from .worldsim import SensorSpec, WheelPhysics


class ConfigError(ValueError):
    pass


def _optional_float(text: str):
    if text.strip().lower() in ("none", ""):
        return None
    return float(text)


SCHEMA: dict[str, dict[str, type | object]] = {
    "run": {
        "name": str, "seed": int, "outdir": str, "agent": str, "mission": str,
        "episodes": int, "steps": int, "eval_episodes": int,
    },
    "reward": {
        "position_weight": float, "torque_weight": float,
        "instability_penalty": float, "goal_bonus": float,
        "curvature_weight": float, "out_of_plane_weight": float,
        "joint_limit_weight": float, "accuracy_weight": float,
        "smoothness_weight": float, "success_bonus": float,
    },
    "physics": {
        "mass": float, "yaw_inertia": float, "torque_max": float,
        "force_gain": float, "moment_gain": float, "damping": float,
        "tilt_rate_limit": float,
    },
    "sensors": {
        "position_noise_std": float, "velocity_noise_std": float,
        "heading_noise_std": float, "max_delay_steps": int,
    },
    "wheel_env": {
        "goal_radius": float, "goal_distance_min": float,
        "goal_distance_max": float, "bounds_limit": float,
    },
    "steer_env": {
        "action_scale": float, "lag_time_constant": float,
    },
    "manip_env": {
        "action_scale": float, "success_radius": float,
        "success_hold_steps": int, "target_distance": _optional_float,
        "target_distance_min": float, "target_distance_max": float,
    },
    "ppo": {
        "steps_per_env": int, "num_minibatches": int, "learning_rate": float,
        "gamma": float, "gae_lambda": float, "clip_ratio": float,
        "entropy_coef": float, "value_coef": float, "target_kl": float,
        "epochs": int, "n_envs": int, "log_std_init": float,
    },
    "sac": {
        "learning_rate": float, "gamma": float, "polyak_tau": float, "reward_scale": float, "min_temperature": float, "n_step": int,
        "batch_size": int, "replay_capacity": int, "warmup_steps": int,
        "update_every": int, "updates_per_step": int, "log_std_init": float,
        "init_temperature": float,
    },
    "mission": {
        "latch_distance": float, "alignment_radius": float, "timeout": float,
        "target_distance_min": float, "target_distance_max": float,
        "wheelbase": float, "halt_speed": float,
    },
}


@dataclass
class RunConfig:
    """Parsed, validated run settings; builders assemble the per-module configs."""

    values: dict[str, dict[str, object]] = field(default_factory=dict)

    def get(self, section: str, key: str, default=None):
        return self.values.get(section, {}).get(key, default)

    def section(self, name: str) -> dict:
        return dict(self.values.get(name, {}))

    # -- assembled sub-configurations ------------------------------------

    def reward_weights(self) -> RewardWeights:
        return replace(RewardWeights(), **self.section("reward"))

    def physics(self) -> WheelPhysics:
        return replace(WheelPhysics(), **self.section("physics"))

    def sensors(self) -> SensorSpec:
        return replace(SensorSpec(), **self.section("sensors"))

    def wheel_env(self) -> WheelEnvConfig:
        base = WheelEnvConfig(physics=self.physics(), sensors=self.sensors(),
                              weights=self.reward_weights())
        sec = self.section("wheel_env")
        lo = sec.pop("goal_distance_min", base.goal_distance_range[0])
        hi = sec.pop("goal_distance_max", base.goal_distance_range[1])
        return replace(base, goal_distance_range=(lo, hi), **sec)

    def steer_env(self) -> SteerEnvConfig:
        return replace(SteerEnvConfig(weights=self.reward_weights()),
                       **self.section("steer_env"))

    def manip_env(self) -> ManipEnvConfig:
        base = ManipEnvConfig(weights=self.reward_weights())
        sec = self.section("manip_env")
        lo = sec.pop("target_distance_min", base.target_distance_range[0])
        hi = sec.pop("target_distance_max", base.target_distance_range[1])
        return replace(base, target_distance_range=(lo, hi), **sec)

    def ppo(self) -> PpoConfig:
        return replace(PpoConfig(), **self.section("ppo"))

    def sac(self) -> SacConfig:
        return replace(SacConfig(), **self.section("sac"))

    def mission(self) -> MissionConfig:
        base = MissionConfig(wheel_env=self.wheel_env(), steer_env=self.steer_env(),
                             manip_env=self.manip_env())
        sec = self.section("mission")
        lo = sec.pop("target_distance_min", base.target_distance_range[0])
        hi = sec.pop("target_distance_max", base.target_distance_range[1])
        return replace(base, target_distance_range=(lo, hi), **sec)

    def budget(self) -> TrainBudget:
        budget = TrainBudget()
        episodes = self.get("run", "episodes")
        steps = self.get("run", "steps")
        if episodes is not None:
            budget = replace(budget, wheel_episodes=episodes)
        if steps is not None:
            budget = replace(budget, steer_total_steps=steps, manip_total_steps=steps)
        return budget


def parse_run_config(path: str | Path | None = None,
                     overrides: dict[str, dict[str, object]] | None = None) -> RunConfig:
    """Load and type-check a config file; ``overrides`` wins over the file."""
    values: dict[str, dict[str, object]] = {}
    if path is not None:
        parser = configparser.ConfigParser()
        read = parser.read(path)
        if not read:
            raise ConfigError(f"config file not found: {path}")
        for section in parser.sections():
            if section not in SCHEMA:
                raise ConfigError(
                    f"unknown config section [{section}]; known: {sorted(SCHEMA)}")
            values[section] = {}
            for key, raw in parser.items(section):
                if key not in SCHEMA[section]:
                    raise ConfigError(
                        f"unknown key {key!r} in [{section}]; known: "
                        f"{sorted(SCHEMA[section])}")
                caster = SCHEMA[section][key]
                try:
                    values[section][key] = caster(raw)
                except ValueError as exc:
                    raise ConfigError(
                        f"bad value for [{section}] {key} = {raw!r}: {exc}") from exc
    for section, entries in (overrides or {}).items():
        if section not in SCHEMA:
            raise ConfigError(f"unknown config section [{section}]")
        for key, value in entries.items():
            if key not in SCHEMA[section]:
                raise ConfigError(f"unknown key {key!r} in [{section}]")
            if value is not None:
                values.setdefault(section, {})[key] = value
    return RunConfig(values=values)

"""Deterministic planar rigid-body world for wheel modules.

A wheel body is a differential-drive abstraction: left/right motor torques
map to a forward force and a yaw moment, both scaled by terrain friction.
Integration is semi-implicit Euler at a fixed 0.01 s step. Terrain friction,
sensor noise and observation delay are drawn procedurally per episode seed.
"""

from __future__ import annotations

from collections import deque
from dataclasses import dataclass, replace

import numpy as np

FRICTION_RANGE = (0.3, 1.0)


def wrap_angle(theta: float) -> float:
    """Wrap to (-pi, pi]."""
    wrapped = float(np.arctan2(np.sin(theta), np.cos(theta)))
    if wrapped == -np.pi:
        wrapped = np.pi
    return wrapped


@dataclass(frozen=True)
class WheelPhysics:
    """Differential-drive constants. All overridable through the run config."""

    mass: float = 10.0  # kg
    yaw_inertia: float = 0.5  # kg m^2
    torque_max: float = 2.0  # Nm per motor
    force_gain: float = 25.0  # N per Nm of summed torque, before friction scaling
    moment_gain: float = 3.0  # Nm yaw per Nm of differential torque, before friction
    damping: float = 1.5  # 1/s, applied to rolling and yaw motion
    lateral_damping: float = 12.0  # 1/s at full friction; wheels resist side slip
    tilt_rate_limit: float = 12.0  # rad/s; beyond this the body is flagged unstable


@dataclass(frozen=True)
class SensorSpec:
    """Upper bounds for the per-episode noise/delay randomization."""

    position_noise_std: float = 0.005  # m
    velocity_noise_std: float = 0.01  # m/s
    heading_noise_std: float = np.deg2rad(0.5)  # rad
    max_delay_steps: int = 2


@dataclass(frozen=True)
class TerrainParams:
    friction: float
    position_noise_std: float
    velocity_noise_std: float
    heading_noise_std: float
    observation_delay: int

    def __post_init__(self):
        if not (FRICTION_RANGE[0] <= self.friction <= FRICTION_RANGE[1]):
            raise ValueError(f"friction {self.friction} outside {FRICTION_RANGE}")
        if min(self.position_noise_std, self.velocity_noise_std, self.heading_noise_std) < 0:
            raise ValueError("noise stds must be >= 0")
        if self.observation_delay < 0:
            raise ValueError("observation delay must be >= 0")

    @staticmethod
    def noiseless(friction: float = 1.0) -> "TerrainParams":
        return TerrainParams(friction, 0.0, 0.0, 0.0, 0)


@dataclass(frozen=True)
class SimClock:
    dt: float = 0.01
    horizon: float = 5.0
    step_index: int = 0

    def __post_init__(self):
        if self.step_index < 0:
            raise ValueError("step index must be >= 0")
        if self.dt * self.step_index > self.horizon + 1e-12:
            raise ValueError("clock advanced past horizon")

    @property
    def max_steps(self) -> int:
        return int(round(self.horizon / self.dt))

    def tick(self) -> "SimClock":
        return replace(self, step_index=self.step_index + 1)


@dataclass(frozen=True)
class WheelBodyState:
    position: np.ndarray  # (2,) m
    heading: float  # rad, wrapped to (-pi, pi]
    velocity: np.ndarray  # (2,) m/s
    yaw_rate: float  # rad/s
    tilted: bool = False

    def __post_init__(self):
        object.__setattr__(self, "position", np.asarray(self.position, dtype=float))
        object.__setattr__(self, "velocity", np.asarray(self.velocity, dtype=float))

    @staticmethod
    def at_rest(position=(0.0, 0.0), heading: float = 0.0) -> "WheelBodyState":
        return WheelBodyState(np.asarray(position, float), wrap_angle(heading), np.zeros(2), 0.0)

    def as_vector(self) -> np.ndarray:
        """Flat [px, py, vx, vy, heading] layout used by sensors and logs."""
        return np.array([
            self.position[0], self.position[1],
            self.velocity[0], self.velocity[1],
            self.heading,
        ])


def step_wheel(
    state: WheelBodyState,
    torque_command: np.ndarray,
    terrain: TerrainParams,
    physics: WheelPhysics = WheelPhysics(),
    dt: float = 0.01,
) -> tuple[WheelBodyState, np.ndarray]:
    """Advance one control step; returns the new state and the applied (clamped) torques."""
    cmd = np.nan_to_num(np.asarray(torque_command, dtype=float), nan=0.0)
    tau = np.clip(cmd, -physics.torque_max, physics.torque_max)

    mu = terrain.friction
    force = physics.force_gain * mu * (tau[0] + tau[1])
    moment = physics.moment_gain * mu * (tau[1] - tau[0])

    heading_dir = np.array([np.cos(state.heading), np.sin(state.heading)])
    v_long = (state.velocity @ heading_dir) * heading_dir
    v_lat = state.velocity - v_long
    accel = ((force / physics.mass) * heading_dir
             - physics.damping * v_long
             - physics.lateral_damping * mu * v_lat)
    velocity = state.velocity + dt * accel
    position = state.position + dt * velocity

    yaw_accel = moment / physics.yaw_inertia - physics.damping * state.yaw_rate
    yaw_rate = state.yaw_rate + dt * yaw_accel
    heading = wrap_angle(state.heading + dt * yaw_rate)

    tilted = abs(yaw_rate) > physics.tilt_rate_limit
    return WheelBodyState(position, heading, velocity, yaw_rate, tilted), tau


def sample_terrain(rng: np.random.Generator, sensors: SensorSpec = SensorSpec()) -> TerrainParams:
    """Draw one episode's terrain: friction, per-channel noise stds, delay."""
    friction = rng.uniform(*FRICTION_RANGE)
    return TerrainParams(
        friction=friction,
        position_noise_std=rng.uniform(0.0, sensors.position_noise_std),
        velocity_noise_std=rng.uniform(0.0, sensors.velocity_noise_std),
        heading_noise_std=rng.uniform(0.0, sensors.heading_noise_std),
        observation_delay=int(rng.integers(0, sensors.max_delay_steps + 1)),
    )


class StateHistory:
    """Ring of recent body states, deep enough for the configured delay."""

    def __init__(self, depth: int = 8):
        self._ring: deque[WheelBodyState] = deque(maxlen=max(depth, 1))

    def push(self, state: WheelBodyState) -> None:
        self._ring.append(state)

    def __len__(self) -> int:
        return len(self._ring)

    def delayed(self, delay: int) -> WheelBodyState:
        if delay >= len(self._ring):
            raise InsufficientHistoryError(
                f"need {delay + 1} stored states, have {len(self._ring)}"
            )
        return self._ring[-1 - delay]


class InsufficientHistoryError(RuntimeError):
    pass


def observe(
    history: StateHistory,
    terrain: TerrainParams,
    rng: np.random.Generator,
) -> np.ndarray:
    """Delayed, noise-corrupted [px, py, vx, vy, heading] sensor vector."""
    state = history.delayed(terrain.observation_delay)
    raw = state.as_vector()
    stds = np.array([
        terrain.position_noise_std, terrain.position_noise_std,
        terrain.velocity_noise_std, terrain.velocity_noise_std,
        terrain.heading_noise_std,
    ])
    return raw + stds * rng.standard_normal(5)

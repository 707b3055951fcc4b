"""Per-module training tasks: wheel goal-reaching, steering-curvature tracking, limb reach.

Each environment is a small self-contained MDP with a fixed 0.01 s control
step and a 5 s horizon. Episodes end on task success, on a safety violation,
or by truncation at the horizon; the three cases are reported separately so
trainers can bootstrap values correctly.
"""

from __future__ import annotations

from dataclasses import dataclass, field
from typing import Any

import numpy as np

from . import kinematics, morphgraph, worldsim
from .kinematics import BodyFrame, DegenerateProjectionError, LimbModel
from .worldsim import SensorSpec, SimClock, StateHistory, WheelPhysics

DEADBAND_ENGAGE = 0.15
DEADBAND_RELEASE = 0.05

STEER_TARGET_LIMIT = np.deg2rad(50.0)
MANIP_SWEEP_DISTANCES = tuple(np.round(np.arange(1.0, 1.601, 0.05), 3))


@dataclass(frozen=True)
class RewardWeights:
    """Non-negative coefficients of the three reward functions.

    Wheel: position error, torque magnitude, instability flag, goal bonus.
    Steering: curvature error, out-of-plane deformation, joint-limit overrun.
    Manipulation: target error, actuation smoothness, success bonus.
    """

    position_weight: float = 1.0
    torque_weight: float = 0.1
    instability_penalty: float = 10.0
    goal_bonus: float = 100.0
    curvature_weight: float = 10.0
    out_of_plane_weight: float = 5.0
    joint_limit_weight: float = 5.0
    accuracy_weight: float = 4.0
    smoothness_weight: float = 0.1
    success_bonus: float = 50.0

    def __post_init__(self):
        for name, value in self.__dict__.items():
            if value < 0:
                raise ValueError(f"reward weight {name} must be >= 0, got {value}")


def wheel_reward(position, goal, torque, unstable: bool, at_goal: bool,
                 w: RewardWeights) -> float:
    """Quadratic goal/torque shaping plus instability and goal indicators."""
    err = np.asarray(position, float) - np.asarray(goal, float)
    tau = np.asarray(torque, float)
    return float(
        -w.position_weight * err @ err
        - w.torque_weight * tau @ tau
        - w.instability_penalty * float(unstable)
        + w.goal_bonus * float(at_goal)
    )


def steer_reward(induced: float, desired: float, q: np.ndarray,
                 model: LimbModel, w: RewardWeights) -> float:
    err = induced - desired
    return float(
        -w.curvature_weight * err * err
        - w.out_of_plane_weight * kinematics.out_of_plane(model, q)
        - w.joint_limit_weight * kinematics.joint_limit_penalty(model, q)
    )


def manip_reward(x_ee, x_goal, dq, success: bool, w: RewardWeights) -> float:
    err = np.asarray(x_ee, float) - np.asarray(x_goal, float)
    dq = np.asarray(dq, float)
    return float(
        -w.accuracy_weight * err @ err
        - w.smoothness_weight * dq @ dq
        + w.success_bonus * float(success)
    )


def deadband_map(u_move: float, previous: int,
                 engage: float = DEADBAND_ENGAGE,
                 release: float = DEADBAND_RELEASE) -> int:
    """Hysteretic quantization of a drive command to {-1, 0, 1}.

    Engages at |u| >= engage, releases at |u| <= release, and holds the
    previous output inside the band so sensor noise cannot chatter the
    drive motors.
    """
    if abs(u_move) >= engage:
        return 1 if u_move > 0 else -1
    if abs(u_move) <= release:
        return 0
    return previous


def body_frame_observation(pos: np.ndarray, vel: np.ndarray, heading: float,
                           goal: np.ndarray) -> np.ndarray:
    """Rotate sensed position/velocity/goal-offset into the robot frame.

    Uses the (possibly noisy, delayed) sensed heading, matching what onboard
    odometry would report; element order [p, v, goal - p].
    """
    c, s = np.cos(heading), np.sin(heading)
    rot = np.array([[c, s], [-s, c]])
    offset = np.asarray(goal, float) - pos
    return np.concatenate([rot @ pos, rot @ vel, rot @ offset])


@dataclass
class StepResult:
    observation: np.ndarray
    reward: float
    terminal: bool
    truncated: bool
    info: dict[str, Any] = field(default_factory=dict)

    def __post_init__(self):
        if self.terminal and self.truncated:
            raise ValueError("terminal and truncated are mutually exclusive")

    @property
    def done(self) -> bool:
        return self.terminal or self.truncated


class EpisodeOverError(RuntimeError):
    """step() was called after the episode already ended."""


def _require_reset(obs):
    if obs is None:
        raise RuntimeError("call reset() before step()")


@dataclass(frozen=True)
class WheelEnvConfig:
    physics: WheelPhysics = field(default_factory=WheelPhysics)
    sensors: SensorSpec = field(default_factory=SensorSpec)
    weights: RewardWeights = field(default_factory=RewardWeights)
    goal_radius: float = 0.15
    goal_distance_range: tuple[float, float] = (1.5, 3.5)
    bounds_limit: float = 20.0
    clock: SimClock = field(default_factory=SimClock)


class WheelEnv:
    """Drive a differential-drive body to a sampled goal under friction/sensor randomization.

    Observation: [px, py, vx, vy, goal_dx, goal_dy], all expressed in the
    robot's own frame the way wheel odometry reports them, built from the
    delayed noisy sensor (including its noisy heading, so no orientation
    information leaks). The goal offset uses the same noisy position, so the
    pair stays consistent. Action: (turn in [-1,1], drive in [-1,1]); drive
    passes the hysteretic deadband before reaching the motors.
    """

    OBS_DIM = 6
    ACT_DIM = 2

    def __init__(self, config: WheelEnvConfig | None = None, seed: int = 0):
        self.config = config or WheelEnvConfig()
        self._rng = np.random.default_rng(seed)
        self._obs: np.ndarray | None = None
        self._done = True

    def reset(self, seed: int | None = None) -> np.ndarray:
        if seed is not None:
            self._rng = np.random.default_rng(seed)
        cfg = self.config
        self.terrain = worldsim.sample_terrain(self._rng, cfg.sensors)
        self.state = worldsim.WheelBodyState.at_rest()
        lo, hi = cfg.goal_distance_range
        radius = self._rng.uniform(lo, hi)
        angle = self._rng.uniform(-np.pi, np.pi)
        self.goal = radius * np.array([np.cos(angle), np.sin(angle)])
        self.clock = cfg.clock
        self.history = StateHistory(depth=cfg.sensors.max_delay_steps + 2)
        for _ in range(self.terrain.observation_delay + 1):
            self.history.push(self.state)
        self.prev_move = 0
        self._done = False
        self._obs = self._observe()
        return self._obs

    def _observe(self) -> np.ndarray:
        sensed = worldsim.observe(self.history, self.terrain, self._rng)
        pos = sensed[0:2]
        vel = sensed[2:4]
        return body_frame_observation(pos, vel, sensed[4], self.goal)

    def torques_for(self, action: np.ndarray, prev_move: int) -> tuple[np.ndarray, int]:
        """Map (turn, drive) to left/right motor torques; returns the new drive state."""
        turn = float(np.clip(action[0], -1.0, 1.0))
        move = deadband_map(float(np.clip(action[1], -1.0, 1.0)), prev_move)
        tmax = self.config.physics.torque_max
        left = tmax * np.clip(move - turn, -1.0, 1.0)
        right = tmax * np.clip(move + turn, -1.0, 1.0)
        return np.array([left, right]), move

    def step(self, action: np.ndarray) -> StepResult:
        _require_reset(self._obs)
        if self._done:
            raise EpisodeOverError("wheel episode already ended")
        action = np.asarray(action, dtype=float)
        if action.shape != (self.ACT_DIM,):
            raise ValueError(f"wheel action must have shape (2,), got {action.shape}")
        cfg = self.config

        command, self.prev_move = self.torques_for(action, self.prev_move)
        self.state, applied = worldsim.step_wheel(
            self.state, command, self.terrain, cfg.physics, cfg.clock.dt)
        self.clock = self.clock.tick()
        self.history.push(self.state)

        distance = float(np.linalg.norm(self.state.position - self.goal))
        at_goal = distance <= cfg.goal_radius
        out_of_bounds = float(np.linalg.norm(self.state.position)) > cfg.bounds_limit
        unstable = self.state.tilted
        violation = unstable or out_of_bounds
        terminal = at_goal or violation
        truncated = (not terminal) and self.clock.step_index >= self.clock.max_steps

        reward = wheel_reward(self.state.position, self.goal, applied,
                              unstable, at_goal, cfg.weights)
        self._obs = self._observe()
        self._done = terminal or truncated
        return StepResult(
            observation=self._obs,
            reward=reward,
            terminal=terminal,
            truncated=truncated,
            info={
                "success": at_goal,
                "violation": violation,
                "distance": distance,
                "applied_torque": applied,
                "friction": self.terrain.friction,
            },
        )


@dataclass(frozen=True)
class SteerEnvConfig:
    limb: LimbModel = field(default_factory=kinematics.default_limb)
    profile: morphgraph.JointConstraintProfile = field(
        default_factory=lambda: morphgraph.constraint_profile(
            morphgraph.build_config("dragon"), "steering"))
    weights: RewardWeights = field(default_factory=RewardWeights)
    action_scale: float = 0.05  # rad per step per joint
    lag_time_constant: float = 0.1  # s; first-order response of wheel headings
    target_limit: float = STEER_TARGET_LIMIT
    clock: SimClock = field(default_factory=SimClock)


class SteerEnv:
    """Track a commanded steering angle by deforming the bridge limb.

    The limb's vertical-axis joints bend the wheel-to-wheel chain in the
    ground plane; the rear wheel module's heading follows the chain-implied
    angle with a first-order lag. The reported induced angle comes from the
    two wheel body frames via the quaternion/atan2 observable. The home pose
    (fixed offsets applied) is the mechanical zero: the wheel modules are
    mounted aligned when the limb rests there.
    """

    OBS_DIM = 15
    ACT_DIM = 7

    def __init__(self, config: SteerEnvConfig | None = None, seed: int = 0):
        self.config = config or SteerEnvConfig()
        self._rng = np.random.default_rng(seed)
        offsets = np.asarray(self.config.profile.fixed_offsets, float)
        self._offsets = offsets
        self._home_heading = self._chain_heading(offsets)
        self._obs: np.ndarray | None = None
        self._done = True

    def _chain_heading(self, q_physical: np.ndarray) -> float:
        frame, _ = kinematics.forward_kinematics(self.config.limb, q_physical)
        fwd = kinematics.planar_forward_axis(frame)
        return float(np.arctan2(fwd[1], fwd[0]))

    def reset(self, seed: int | None = None) -> np.ndarray:
        if seed is not None:
            self._rng = np.random.default_rng(seed)
        cfg = self.config
        self.q = np.zeros(7)
        self.qdot = np.zeros(7)
        self.rear_heading = 0.0
        self.target = float(self._rng.uniform(-cfg.target_limit, cfg.target_limit))
        self.clock = cfg.clock
        self.induced = 0.0
        self._done = False
        self._obs = np.concatenate([self.q, self.qdot, [self.target]])
        return self._obs

    def set_target(self, target: float) -> None:
        self.target = float(target)
        if self._obs is not None:
            self._obs = np.concatenate([self.q, self.qdot, [self.target]])

    def step(self, action: np.ndarray) -> StepResult:
        _require_reset(self._obs)
        if self._done:
            raise EpisodeOverError("steering episode already ended")
        action = np.asarray(action, dtype=float)
        if action.shape != (self.ACT_DIM,):
            raise ValueError(f"steer action must have shape (7,), got {action.shape}")
        cfg = self.config
        dt = cfg.clock.dt

        dq = morphgraph.apply_constraints(
            cfg.profile, cfg.action_scale * np.clip(action, -1.0, 1.0))
        self.q = self.q + dq
        self.qdot = dq / dt
        self.clock = self.clock.tick()

        violation = False
        try:
            chain_angle = worldsim.wrap_angle(
                self._chain_heading(self.q + self._offsets) - self._home_heading)
            self.rear_heading += (dt / cfg.lag_time_constant) * (
                worldsim.wrap_angle(chain_angle - self.rear_heading))
            self.induced = kinematics.induced_curvature(
                BodyFrame.identity(), BodyFrame.from_yaw(self.rear_heading))
        except DegenerateProjectionError:
            violation = True

        reward = steer_reward(self.induced, self.target, self.q, cfg.limb, cfg.weights)
        if violation:
            reward -= cfg.weights.instability_penalty
        terminal = violation
        truncated = (not terminal) and self.clock.step_index >= self.clock.max_steps
        self._obs = np.concatenate([self.q, self.qdot, [self.target]])
        self._done = terminal or truncated
        return StepResult(
            observation=self._obs,
            reward=reward,
            terminal=terminal,
            truncated=truncated,
            info={
                "induced": self.induced,
                "target": self.target,
                "error": self.induced - self.target,
                "violation": violation,
            },
        )


@dataclass(frozen=True)
class ManipEnvConfig:
    limb: LimbModel = field(default_factory=kinematics.default_limb)
    weights: RewardWeights = field(default_factory=RewardWeights)
    action_scale: float = 0.05  # rad per step per joint
    success_radius: float = 0.10  # m
    success_hold_steps: int = 10
    # None samples from target_distance_range each episode; a number pins it.
    target_distance: float | None = None
    target_distance_range: tuple[float, float] = (0.3, 1.6)
    clock: SimClock = field(default_factory=SimClock)


class ManipEnv:
    """Reach a point target with the 7-DoF limb end effector.

    Success requires staying inside the accuracy radius for a run of
    consecutive steps, so flying through the target does not count.
    """

    OBS_DIM = 20
    ACT_DIM = 7

    def __init__(self, config: ManipEnvConfig | None = None, seed: int = 0):
        self.config = config or ManipEnvConfig()
        self._rng = np.random.default_rng(seed)
        self._obs: np.ndarray | None = None
        self._done = True

    def reset(self, seed: int | None = None) -> np.ndarray:
        if seed is not None:
            self._rng = np.random.default_rng(seed)
        cfg = self.config
        self.q = np.zeros(7)
        self.qdot = np.zeros(7)
        if cfg.target_distance is not None:
            distance = float(cfg.target_distance)
        else:
            distance = float(self._rng.uniform(*cfg.target_distance_range))
        angle = self._rng.uniform(-np.pi, np.pi)
        self.goal = distance * np.array([np.cos(angle), np.sin(angle), 0.0])
        self.clock = cfg.clock
        self.hold = 0
        self._done = False
        frame, _ = kinematics.forward_kinematics(cfg.limb, self.q)
        self.x_ee = frame.position
        self._obs = np.concatenate([self.q, self.qdot, self.x_ee, self.goal])
        return self._obs

    def step(self, action: np.ndarray) -> StepResult:
        _require_reset(self._obs)
        if self._done:
            raise EpisodeOverError("manipulation episode already ended")
        action = np.asarray(action, dtype=float)
        if action.shape != (self.ACT_DIM,):
            raise ValueError(f"manip action must have shape (7,), got {action.shape}")
        cfg = self.config
        dt = cfg.clock.dt

        dq = cfg.action_scale * np.clip(action, -1.0, 1.0)
        self.q = self.q + dq
        self.qdot = dq / dt
        self.clock = self.clock.tick()
        frame, _ = kinematics.forward_kinematics(cfg.limb, self.q)
        self.x_ee = frame.position

        distance = float(np.linalg.norm(self.x_ee - self.goal))
        self.hold = self.hold + 1 if distance <= cfg.success_radius else 0
        success = self.hold >= cfg.success_hold_steps
        terminal = success
        truncated = (not terminal) and self.clock.step_index >= self.clock.max_steps

        reward = manip_reward(self.x_ee, self.goal, dq, success, cfg.weights)
        self._obs = np.concatenate([self.q, self.qdot, self.x_ee, self.goal])
        self._done = terminal or truncated
        return StepResult(
            observation=self._obs,
            reward=reward,
            terminal=terminal,
            truncated=truncated,
            info={"success": success, "distance": distance},
        )


ENV_KINDS = {
    "wheel": WheelEnv,
    "steer": SteerEnv,
    "manip": ManipEnv,
}


def make_env(kind: str, config=None, seed: int = 0):
    if kind not in ENV_KINDS:
        raise ValueError(f"unknown env kind {kind!r}; expected one of {sorted(ENV_KINDS)}")
    if config is None:
        return ENV_KINDS[kind](seed=seed)
    return ENV_KINDS[kind](config, seed=seed)

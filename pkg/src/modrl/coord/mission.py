"""Three-phase reconfiguration mission on the dragon morphology.

Phase 1: both wheel modules run the shared locomotion policy synchronously
while the bridge limb steers in parallel toward the target fixture. Phase 2:
crossing the proximity threshold latches the gate, locomotion/steering go
idle, the body coasts to a halt, and the manipulation policy generates a
joint-state sequence from the halted pose which is then executed open loop.
Phase 3: alignment inside the accuracy radius counts as success and the
physical attach is recorded as a zero-duration handoff event.
"""

from __future__ import annotations

from dataclasses import dataclass, field

import numpy as np

from .. import kinematics, morphgraph, worldsim
from ..envs import (ManipEnvConfig, SteerEnvConfig, WheelEnvConfig,
                    body_frame_observation, deadband_map)
from .composition import (ExecutionMode, GateController, TaskGraph, classify_mode,
                          compose)
from .timeline import STEER_EVENT_GATE, TimelineLog, TimelineRecord

WHEEL_MODULES = ("wheel_front", "wheel_rear")
STEER_MODULE = "limb_steer"
MANIP_MODULE = "limb_manip"


@dataclass(frozen=True)
class MissionConfig:
    latch_distance: float = 0.3  # m; proximity handoff threshold
    alignment_radius: float = 0.10  # m; phase-3 success criterion
    timeout: float = 600.0  # simulated seconds
    target_distance_range: tuple[float, float] = (10.0, 15.0)
    wheelbase: float = 1.5  # m between wheel modules; sets steering authority
    steer_limit: float = np.deg2rad(50.0)
    # The limb wakes on large course errors while rolling forward and goes
    # home once both the error and the articulation are small; hysteresis
    # stops chatter.
    steer_engage_threshold: float = np.deg2rad(20.0)
    steer_release_threshold: float = np.deg2rad(6.0)
    steer_command_gain: float = 0.5  # fraction of the course error commanded
    steer_min_speed: float = 0.15  # m/s of forward motion needed to steer
    halt_speed: float = 0.1  # m/s; body considered stopped below this
    halt_wait_max: float = 10.0  # s to wait for the coast-down
    plan_max_steps: int = 500
    plan_margin: float = 0.8  # plan to this fraction of the alignment radius
    wheel_env: WheelEnvConfig = field(default_factory=WheelEnvConfig)
    steer_env: SteerEnvConfig = field(default_factory=SteerEnvConfig)
    manip_env: ManipEnvConfig = field(default_factory=ManipEnvConfig)


def dragon_task_graph() -> TaskGraph:
    return TaskGraph(
        tasks=("approach", "align", "attach_handoff"),
        precedence=(("approach", "align"), ("align", "attach_handoff")),
        assignment={
            "approach": (*WHEEL_MODULES, STEER_MODULE),
            "align": (MANIP_MODULE,),
            "attach_handoff": (),
        },
    )


def _rotz(theta: float) -> np.ndarray:
    c, s = np.cos(theta), np.sin(theta)
    return np.array([[c, -s, 0.0], [s, c, 0.0], [0.0, 0.0, 1.0]])


class _DragonWorld:
    """Chassis + two limb states, fixture, and the wheel sensor pipeline."""

    def __init__(self, config: MissionConfig, rng: np.random.Generator):
        self.config = config
        self.rng = rng
        self.physics = config.wheel_env.physics
        self.dt = config.wheel_env.clock.dt
        self.terrain = worldsim.sample_terrain(rng, config.wheel_env.sensors)
        self.body = worldsim.WheelBodyState.at_rest()
        self.history = worldsim.StateHistory(depth=config.wheel_env.sensors.max_delay_steps + 2)
        for _ in range(self.terrain.observation_delay + 1):
            self.history.push(self.body)
        dist = rng.uniform(*config.target_distance_range)
        angle = rng.uniform(-np.pi, np.pi)
        self.fixture = dist * np.array([np.cos(angle), np.sin(angle)])
        # Bridge limb: policy-facing joint state plus the lagged articulation heading.
        self.steer_profile = config.steer_env.profile
        self.steer_offsets = np.asarray(self.steer_profile.fixed_offsets, float)
        self.q_steer = np.zeros(7)
        self.qdot_steer = np.zeros(7)
        self.articulation = 0.0  # lagged chain-implied heading offset
        frame, _ = kinematics.forward_kinematics(config.steer_env.limb, self.steer_offsets)
        fwd = kinematics.planar_forward_axis(frame)
        self._steer_home = float(np.arctan2(fwd[1], fwd[0]))
        # Front limb: manipulation joints.
        self.q_manip = np.zeros(7)
        self.qdot_manip = np.zeros(7)
        self.prev_move = {m: 0 for m in WHEEL_MODULES}
        self.path_length = 0.0
        self.t = 0.0

    def distance_to_fixture(self) -> float:
        return float(np.linalg.norm(self.fixture - self.body.position))

    def wheel_observation(self) -> np.ndarray:
        sensed = worldsim.observe(self.history, self.terrain, self.rng)
        return body_frame_observation(sensed[0:2], sensed[2:4], sensed[4],
                                      self.fixture)

    def forward_speed(self) -> float:
        heading_dir = np.array([np.cos(self.body.heading), np.sin(self.body.heading)])
        return float(self.body.velocity @ heading_dir)

    def course_error(self) -> float:
        """Angle from the current motion direction to the target bearing."""
        offset = self.fixture - self.body.position
        bearing = float(np.arctan2(offset[1], offset[0]))
        return worldsim.wrap_angle(bearing - self.body.heading)

    def desired_steer_angle(self) -> float:
        cfg = self.config
        return float(np.clip(cfg.steer_command_gain * self.course_error(),
                             -cfg.steer_limit, cfg.steer_limit))

    def steer_observation(self, target: float) -> np.ndarray:
        return np.concatenate([self.q_steer, self.qdot_steer, [target]])

    def apply_steer(self, action: np.ndarray) -> None:
        cfg = self.config.steer_env
        dq = morphgraph.apply_constraints(
            self.steer_profile, cfg.action_scale * np.clip(action, -1.0, 1.0))
        self.q_steer = self.q_steer + dq
        self.qdot_steer = dq / self.dt
        frame, _ = kinematics.forward_kinematics(
            cfg.limb, self.q_steer + self.steer_offsets)
        fwd = kinematics.planar_forward_axis(frame)
        chain = worldsim.wrap_angle(float(np.arctan2(fwd[1], fwd[0])) - self._steer_home)
        self.articulation += (self.dt / cfg.lag_time_constant) * worldsim.wrap_angle(
            chain - self.articulation)

    def step_body(self, wheel_action: np.ndarray | None) -> None:
        """Advance the chassis one step; None means idle (zero torque)."""
        if wheel_action is None:
            torque = np.zeros(2)
        else:
            turn = float(np.clip(wheel_action[0], -1.0, 1.0))
            moves = {}
            for m in WHEEL_MODULES:
                moves[m] = deadband_map(float(np.clip(wheel_action[1], -1.0, 1.0)),
                                        self.prev_move[m])
                self.prev_move[m] = moves[m]
            move = moves[WHEEL_MODULES[0]]
            tmax = self.physics.torque_max
            torque = np.array([
                tmax * np.clip(move - turn, -1.0, 1.0),
                tmax * np.clip(move + turn, -1.0, 1.0),
            ])
        before = self.body.position.copy()
        self.body, _ = worldsim.step_wheel(self.body, torque, self.terrain,
                                           self.physics, self.dt)
        # The bent bridge limb turns the chassis in proportion to forward speed.
        heading_dir = np.array([np.cos(self.body.heading), np.sin(self.body.heading)])
        v_forward = float(self.body.velocity @ heading_dir)
        steer_rate = v_forward * np.sin(self.articulation) / self.config.wheelbase
        self.body = worldsim.WheelBodyState(
            self.body.position,
            worldsim.wrap_angle(self.body.heading + self.dt * steer_rate),
            self.body.velocity,
            self.body.yaw_rate,
            self.body.tilted,
        )
        self.history.push(self.body)
        self.path_length += float(np.linalg.norm(self.body.position - before))
        self.t += self.dt

    def fixture_local(self) -> np.ndarray:
        """Fixture coordinates in the manipulation limb's base frame."""
        world = np.array([self.fixture[0], self.fixture[1], 0.0])
        base = np.array([self.body.position[0], self.body.position[1], 0.0])
        return _rotz(-self.body.heading) @ (world - base)

    def ee_world(self) -> np.ndarray:
        frame, _ = kinematics.forward_kinematics(self.config.manip_env.limb, self.q_manip)
        base = np.array([self.body.position[0], self.body.position[1], 0.0])
        return base + _rotz(self.body.heading) @ frame.position

    def speed(self) -> float:
        return float(np.linalg.norm(self.body.velocity))


def _plan_joint_sequence(policy, world: _DragonWorld, target_local: np.ndarray,
                         config: MissionConfig) -> list[np.ndarray]:
    """Roll the manipulation policy forward internally to produce joint states."""
    manip_cfg = config.manip_env
    limb = manip_cfg.limb
    q = world.q_manip.copy()
    qdot = np.zeros(7)
    seq: list[np.ndarray] = []
    hold = 0
    radius = config.alignment_radius * config.plan_margin
    for _ in range(config.plan_max_steps):
        frame, _ = kinematics.forward_kinematics(limb, q)
        obs = np.concatenate([q, qdot, frame.position, target_local])
        action = np.clip(np.asarray(policy.act(obs), float), -1.0, 1.0)
        dq = manip_cfg.action_scale * action
        q = q + dq
        qdot = dq / world.dt
        seq.append(q.copy())
        frame, _ = kinematics.forward_kinematics(limb, q)
        hold = hold + 1 if np.linalg.norm(frame.position - target_local) <= radius else 0
        if hold >= manip_cfg.success_hold_steps:
            break
    return seq


def run_mission(policies: dict, config: MissionConfig | None = None, seed: int = 0,
                ) -> tuple[TimelineLog, dict]:
    """Run one seeded reconfiguration mission.

    ``policies`` maps "wheel", "steer" and "manip" to objects exposing
    ``act(obs) -> action``. Returns the per-step timeline log and a summary
    dict (success flag, path statistics, phase timings, handoff event).
    """
    config = config or MissionConfig()
    for name in ("wheel", "steer", "manip"):
        if name not in policies:
            raise KeyError(f"missing policy {name!r}")
    rng = np.random.default_rng(seed)
    world = _DragonWorld(config, rng)
    task_graph = dragon_task_graph()
    gate = GateController(
        locomotion_modules=(*WHEEL_MODULES, STEER_MODULE),
        manipulation_modules=(MANIP_MODULE,),
        threshold=config.latch_distance,
    )
    module_policies = {
        WHEEL_MODULES[0]: policies["wheel"],
        WHEEL_MODULES[1]: policies["wheel"],
        STEER_MODULE: policies["steer"],
        MANIP_MODULE: policies["manip"],
    }
    idle = {
        WHEEL_MODULES[0]: np.zeros(2),
        WHEEL_MODULES[1]: np.zeros(2),
        STEER_MODULE: np.zeros(7),
        MANIP_MODULE: np.zeros(7),
    }
    log = TimelineLog(dt=world.dt)
    start_pos = world.body.position.copy()
    timed_out = False
    latch_time = None
    prev_engaged_sign = 0
    steer_engaged = False

    def record(mode: ExecutionMode, alpha: dict[str, int], steer_cmd: float) -> None:
        nonlocal prev_engaged_sign
        sign = 0 if abs(steer_cmd) <= STEER_EVENT_GATE else (
            1 if steer_cmd > 0 else -1)
        event = sign != 0 and sign != prev_engaged_sign
        prev_engaged_sign = sign
        log.append(TimelineRecord(
            t=round(world.t, 6),
            mode=mode.value,
            active_modules=tuple(m for m, a in alpha.items() if a),
            alpha=dict(alpha),
            steer_command=steer_cmd,
            steering_event=bool(event),
            distance_to_target=world.distance_to_fixture(),
        ))

    # Phase 1: approach under the shared wheel policy with parallel steering.
    while True:
        if world.t >= config.timeout:
            timed_out = True
            break
        distance = world.distance_to_fixture()
        alpha = gate.update(distance)
        if gate.latched:
            latch_time = world.t
            latch_distance = distance
            break
        err = abs(world.course_error())
        rolling = world.forward_speed() > config.steer_min_speed
        if not steer_engaged and err > config.steer_engage_threshold and rolling:
            steer_engaged = True
        elif steer_engaged and (
            not rolling
            or (err < config.steer_release_threshold
                and abs(world.articulation) < config.steer_release_threshold)
        ):
            steer_engaged = False
        engaged = steer_engaged
        steer_cmd = world.desired_steer_angle() if engaged else 0.0
        alpha[STEER_MODULE] = 1 if engaged else 0
        shared_obs = world.wheel_observation()
        observations = {
            WHEEL_MODULES[0]: shared_obs,
            WHEEL_MODULES[1]: shared_obs,
            STEER_MODULE: world.steer_observation(steer_cmd),
        }
        actions = compose(module_policies, observations, alpha, idle)
        if engaged:
            world.apply_steer(actions[STEER_MODULE])
        world.step_body(actions[WHEEL_MODULES[0]])
        mode = classify_mode(alpha, WHEEL_MODULES, STEER_MODULE, MANIP_MODULE)
        record(mode, alpha, steer_cmd)

    approach_path = world.path_length
    phase2_start = world.t
    plan = []
    final_ee_distance = None

    if not timed_out:
        # Phase 2: coast to a halt, then plan and execute the joint sequence.
        alpha = gate.update(world.distance_to_fixture())
        halt_deadline = world.t + config.halt_wait_max
        while world.speed() > config.halt_speed and world.t < halt_deadline:
            if world.t >= config.timeout:
                timed_out = True
                break
            world.step_body(None)
            record(ExecutionMode.SEQUENTIAL_GATED, alpha, 0.0)

    if not timed_out:
        target_local = world.fixture_local()
        plan = _plan_joint_sequence(policies["manip"], world, target_local, config)
        for q in plan:
            if world.t >= config.timeout:
                timed_out = True
                break
            world.q_manip = q
            world.step_body(None)
            record(ExecutionMode.SEQUENTIAL_GATED, alpha, 0.0)
        fixture3 = np.array([world.fixture[0], world.fixture[1], 0.0])
        final_ee_distance = float(np.linalg.norm(world.ee_world() - fixture3))

    success = (not timed_out and final_ee_distance is not None
               and final_ee_distance <= config.alignment_radius)
    straight = float(np.linalg.norm(world.body.position - start_pos))
    summary = {
        "success": bool(success),
        "timed_out": bool(timed_out),
        "duration_s": round(world.t, 6),
        "final_ee_distance": final_ee_distance,
        "latch_time_s": latch_time,
        "latch_distance": None if latch_time is None else latch_distance,
        "latch_count": gate.latch_count,
        "initial_target_distance": float(np.linalg.norm(world.fixture - start_pos)),
        "approach_path_length": approach_path,
        "total_path_length": world.path_length,
        "straight_line_distance": straight,
        "path_efficiency": (straight / world.path_length) if world.path_length > 0 else None,
        "phase2_start_s": None if timed_out and latch_time is None else phase2_start,
        "plan_steps": len(plan),
        "task_order": task_graph.topological_order(),
        "handoff_event": {
            "type": "attach_handoff",
            "t": round(world.t, 6),
            "duration_s": 0.0,
            "executed": bool(success),
        },
    }
    if timed_out:
        summary["handoff_event"]["executed"] = False
    return log, summary

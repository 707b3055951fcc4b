"""Hand-written reference policies: baselines for evaluation and mission smoke runs.

Each policy exposes ``act(obs) -> action`` on the same observation layout the
trained agents use, so they are drop-in substitutes anywhere a policy is
expected.
"""

from __future__ import annotations

import numpy as np

from . import kinematics
from .kinematics import LimbModel


class RandomPolicy:
    """Uniform actions in [-1, 1]; the untrained baseline."""

    def __init__(self, act_dim: int, seed: int = 0):
        self.act_dim = act_dim
        self._rng = np.random.default_rng(seed)

    def act(self, obs: np.ndarray) -> np.ndarray:
        return self._rng.uniform(-1.0, 1.0, self.act_dim)


class ScriptedWheelPolicy:
    """PD goal seeker on the body-frame wheel observation.

    The goal offset arrives in the robot frame, so the bearing error is just
    its polar angle. Turn it to zero, drive while roughly aligned, and let
    the speed cap shrink near the goal so the turn curvature can keep up.
    Stateful (derivative estimate): use one instance per rollout stream.
    """

    def __init__(self, stop_radius: float = 0.1, cruise_speed: float = 2.0,
                 turn_gain: float = 2.0, turn_damping: float = 0.15,
                 turn_cap: float = 0.6, dt: float = 0.01):
        self.stop_radius = stop_radius
        self.cruise_speed = cruise_speed
        self.turn_gain = turn_gain
        self.turn_damping = turn_damping
        # Full differential at high friction spins past the tilt limit; the
        # cap keeps the worst-case yaw rate under it.
        self.turn_cap = turn_cap
        self.dt = dt
        self._last_bearing: float | None = None

    def act(self, obs: np.ndarray) -> np.ndarray:
        to_goal = np.asarray(obs[4:6], float)
        forward_speed = float(obs[2])
        dist = float(np.linalg.norm(to_goal))
        if dist <= self.stop_radius:
            self._last_bearing = None
            return np.array([0.0, 0.0])
        bearing = float(np.arctan2(to_goal[1], to_goal[0]))
        rate = 0.0
        if self._last_bearing is not None:
            rate = float(np.clip((bearing - self._last_bearing) / self.dt, -20.0, 20.0))
        self._last_bearing = bearing
        turn = float(np.clip(self.turn_gain * bearing + self.turn_damping * rate,
                             -self.turn_cap, self.turn_cap))
        want_speed = min(self.cruise_speed, 0.8 * dist + 0.15)
        drive = 1.0 if forward_speed < want_speed and abs(bearing) < 0.7 else 0.0
        return np.array([turn, drive])


class ScriptedSteerPolicy:
    """Splits the commanded angle evenly over the vertical-axis joints."""

    def __init__(self, model: LimbModel | None = None, action_scale: float = 0.05,
                 gain: float = 1.0):
        model = model or kinematics.default_limb()
        self.planar_joints = [i for i in range(7) if abs(model.joint_axes[i][2]) > 0.5]
        self.action_scale = action_scale
        self.gain = gain

    def act(self, obs: np.ndarray) -> np.ndarray:
        q = np.asarray(obs[0:7], float)
        target = float(obs[14])
        desired = np.zeros(7)
        share = target / len(self.planar_joints)
        for j in self.planar_joints:
            desired[j] = share
        return np.clip(self.gain * (desired - q) / self.action_scale, -1.0, 1.0)


class ScriptedManipPolicy:
    """Resolved-rate reacher: finite-difference Jacobian descent on the target error."""

    def __init__(self, model: LimbModel | None = None, action_scale: float = 0.05,
                 gain: float = 4.0, fd_step: float = 1e-6):
        self.model = model or kinematics.default_limb()
        self.action_scale = action_scale
        self.gain = gain
        self.fd_step = fd_step

    def _jacobian(self, q: np.ndarray) -> np.ndarray:
        frame, _ = kinematics.forward_kinematics(self.model, q)
        base = frame.position
        jac = np.zeros((3, 7))
        for j in range(7):
            dq = q.copy()
            dq[j] += self.fd_step
            frame_j, _ = kinematics.forward_kinematics(self.model, dq)
            jac[:, j] = (frame_j.position - base) / self.fd_step
        return jac

    def act(self, obs: np.ndarray) -> np.ndarray:
        q = np.asarray(obs[0:7], float)
        x_ee = np.asarray(obs[14:17], float)
        goal = np.asarray(obs[17:20], float)
        err = goal - x_ee
        jac = self._jacobian(q)
        # Damped least squares keeps the step sane near singular stretches.
        jjt = jac @ jac.T + 1e-3 * np.eye(3)
        dq = jac.T @ np.linalg.solve(jjt, err)
        step = self.gain * dq / self.action_scale
        norm = np.max(np.abs(step))
        if norm < 1e-4 and np.linalg.norm(err) > 0.05:
            # Fully stretched singular start: curl the elbow to break symmetry.
            nudge = np.zeros(7)
            nudge[3] = 1.0
            return nudge
        return np.clip(step, -1.0, 1.0)


class PolicyAdapter:
    """Wraps a trained agent's deterministic action method as .act(obs)."""

    def __init__(self, fn):
        self._fn = fn

    def act(self, obs: np.ndarray) -> np.ndarray:
        return np.asarray(self._fn(obs), dtype=float).reshape(-1)

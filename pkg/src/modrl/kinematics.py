"""Serial 7-DoF limb forward kinematics and the planar steering observable.

The limb is a chain of revolute joints; each joint rotates about a fixed
local axis and is followed by a straight link along its local +x. The
steering observable is the signed planar angle between two body frames'
forward axes, computed from their quaternions via atan2.
"""

from __future__ import annotations

from dataclasses import dataclass

import numpy as np

from .morphgraph import NUM_JOINTS

PLANAR_NORM_TOL = 1e-9


class DegenerateProjectionError(ValueError):
    """A forward axis is vertical within tolerance; no planar heading exists."""


def quat_from_axis_angle(axis: np.ndarray, angle: float) -> np.ndarray:
    axis = np.asarray(axis, dtype=float)
    half = 0.5 * angle
    q = np.empty(4)
    q[0] = np.cos(half)
    q[1:] = np.sin(half) * axis
    return q


def quat_multiply(q1: np.ndarray, q2: np.ndarray) -> np.ndarray:
    w1, x1, y1, z1 = q1
    w2, x2, y2, z2 = q2
    return np.array([
        w1 * w2 - x1 * x2 - y1 * y2 - z1 * z2,
        w1 * x2 + x1 * w2 + y1 * z2 - z1 * y2,
        w1 * y2 - x1 * z2 + y1 * w2 + z1 * x2,
        w1 * z2 + x1 * y2 - y1 * x2 + z1 * w2,
    ])


def quat_rotate(q: np.ndarray, v: np.ndarray) -> np.ndarray:
    """Rotate vector v by unit quaternion q (w, x, y, z)."""
    w = q[0]
    u = q[1:]
    return v + 2.0 * np.cross(u, np.cross(u, v) + w * v)


def rotation_matrix(axis: np.ndarray, angle: float) -> np.ndarray:
    """Rodrigues rotation about a unit axis."""
    axis = np.asarray(axis, dtype=float)
    k = np.array([
        [0.0, -axis[2], axis[1]],
        [axis[2], 0.0, -axis[0]],
        [-axis[1], axis[0], 0.0],
    ])
    return np.eye(3) + np.sin(angle) * k + (1.0 - np.cos(angle)) * (k @ k)


@dataclass(frozen=True)
class BodyFrame:
    """Rigid-body pose: position (m) and orientation as a unit quaternion (w, x, y, z)."""

    position: np.ndarray
    quaternion: np.ndarray

    def __post_init__(self):
        object.__setattr__(self, "position", np.asarray(self.position, dtype=float))
        object.__setattr__(self, "quaternion", np.asarray(self.quaternion, dtype=float))
        norm = np.linalg.norm(self.quaternion)
        if abs(norm - 1.0) > 1e-9:
            raise ValueError(f"quaternion norm {norm} not unit")

    @staticmethod
    def identity() -> "BodyFrame":
        return BodyFrame(np.zeros(3), np.array([1.0, 0.0, 0.0, 0.0]))

    @staticmethod
    def from_yaw(yaw: float, position: np.ndarray | None = None) -> "BodyFrame":
        pos = np.zeros(3) if position is None else np.asarray(position, dtype=float)
        return BodyFrame(pos, quat_from_axis_angle(np.array([0.0, 0.0, 1.0]), yaw))


_Y = np.array([0.0, 1.0, 0.0])
_Z = np.array([0.0, 0.0, 1.0])


@dataclass(frozen=True)
class LimbModel:
    link_lengths: np.ndarray
    joint_axes: np.ndarray  # (7, 3) unit vectors
    joint_limits: np.ndarray  # (7, 2) lo < hi, rad

    def __post_init__(self):
        object.__setattr__(self, "link_lengths", np.asarray(self.link_lengths, dtype=float))
        object.__setattr__(self, "joint_axes", np.asarray(self.joint_axes, dtype=float))
        object.__setattr__(self, "joint_limits", np.asarray(self.joint_limits, dtype=float))
        if self.link_lengths.shape != (NUM_JOINTS,) or np.any(self.link_lengths <= 0):
            raise ValueError("need 7 positive link lengths")
        if self.joint_axes.shape != (NUM_JOINTS, 3):
            raise ValueError("need 7 joint axes")
        norms = np.linalg.norm(self.joint_axes, axis=1)
        if np.any(np.abs(norms - 1.0) > 1e-12):
            raise ValueError("joint axes must be unit vectors")
        if self.joint_limits.shape != (NUM_JOINTS, 2) or np.any(
            self.joint_limits[:, 0] >= self.joint_limits[:, 1]
        ):
            raise ValueError("joint limits must satisfy lo < hi")

    @property
    def reach(self) -> float:
        return float(np.sum(self.link_lengths))


def default_limb() -> LimbModel:
    """Seven 0.2 m links, axes alternating y/z (vertical-axis joints at 2, 4, 6), +/-2.96 rad limits.

    Vertical-axis joints steer in the ground plane; the y-axis joints lift
    out of it. The central joint (4) is vertical so a bent home pose stays
    planar.
    """
    axes = np.array([_Y, _Z, _Y, _Z, _Y, _Z, _Y])
    limits = np.tile(np.array([-2.96, 2.96]), (NUM_JOINTS, 1))
    return LimbModel(
        link_lengths=np.full(NUM_JOINTS, 0.2),
        joint_axes=axes,
        joint_limits=limits,
    )


def forward_kinematics(model: LimbModel, q: np.ndarray) -> tuple[BodyFrame, np.ndarray]:
    """Pose of the end effector and the 8 chain positions (base first).

    Each joint i rotates the remaining chain about its axis by q[i]; the
    link then extends along the rotated local +x. The base sits at the
    origin with identity orientation.
    """
    q = np.asarray(q, dtype=float)
    if q.shape != (NUM_JOINTS,):
        raise ValueError(f"expected 7 joint angles, got shape {q.shape}")
    if not np.all(np.isfinite(q)):
        raise ValueError("joint angles must be finite")

    positions = np.zeros((NUM_JOINTS + 1, 3))
    rot = np.eye(3)
    pos = np.zeros(3)
    for i in range(NUM_JOINTS):
        rot = rot @ rotation_matrix(model.joint_axes[i], q[i])
        pos = pos + rot @ np.array([model.link_lengths[i], 0.0, 0.0])
        positions[i + 1] = pos

    quat = np.array([1.0, 0.0, 0.0, 0.0])
    for i in range(NUM_JOINTS):
        quat = quat_multiply(quat, quat_from_axis_angle(model.joint_axes[i], q[i]))
    quat = quat / np.linalg.norm(quat)
    return BodyFrame(pos, quat), positions


def planar_forward_axis(frame: BodyFrame, local_forward: np.ndarray | None = None) -> np.ndarray:
    """Body forward axis rotated to world, projected to the ground plane, normalized."""
    fwd = np.array([1.0, 0.0, 0.0]) if local_forward is None else local_forward
    world = quat_rotate(frame.quaternion, fwd)
    planar = world[:2]
    norm = np.linalg.norm(planar)
    if norm <= PLANAR_NORM_TOL:
        raise DegenerateProjectionError("forward axis is vertical; planar projection degenerate")
    return planar / norm


def induced_curvature(front: BodyFrame, rear: BodyFrame) -> float:
    """Signed planar angle from the front module's forward axis to the rear's.

    atan2 of the z-component of the cross product against the dot product
    of the two projected forward axes; range (-pi, pi].
    """
    f_front = planar_forward_axis(front)
    f_rear = planar_forward_axis(rear)
    cross_z = f_front[0] * f_rear[1] - f_front[1] * f_rear[0]
    dot = f_front[0] * f_rear[0] + f_front[1] * f_rear[1]
    return float(np.arctan2(cross_z, dot))


def out_of_plane(model: LimbModel, q: np.ndarray) -> float:
    """Sum of squared vertical deviations of the intermediate joints (m^2).

    Base and end effector are excluded: the endpoints are carried by wheel
    modules, so only deformation of the span between them is penalized.
    """
    _, positions = forward_kinematics(model, q)
    z = positions[1:NUM_JOINTS, 2]
    return float(np.sum(z * z))


def joint_limit_penalty(model: LimbModel, q: np.ndarray) -> float:
    """Quadratic hinge on limit violations; exactly zero inside (and on) the limits."""
    q = np.asarray(q, dtype=float)
    lo = model.joint_limits[:, 0]
    hi = model.joint_limits[:, 1]
    over = np.maximum(0.0, q - hi)
    under = np.maximum(0.0, lo - q)
    return float(np.sum(over * over) + np.sum(under * under))

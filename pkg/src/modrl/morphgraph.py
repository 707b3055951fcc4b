"""Robot morphologies as graphs of wheel/limb modules, plus per-morphology joint constraints.

A configuration is a small undirected graph: nodes are module instances
(wheel bases or 7-DoF limbs), edges are mechanical attachments or control
links. Three named configurations exist: ``vehicle`` (wheel-limb-wheel),
``dragon`` (two serially connected wheel-limb pairs) and ``minimal``
(a single wheel module).
"""

from __future__ import annotations

import enum
from dataclasses import dataclass, field

import numpy as np

NUM_JOINTS = 7

CONFIG_NAMES = ("vehicle", "dragon", "minimal")


class ModuleKind(enum.Enum):
    WHEEL_BASE = "wheel_base"
    LIMB_7DOF = "limb_7dof"


class UnknownConfigError(ValueError):
    """Raised for a configuration name outside the three known ones."""


class RoleUnsupportedError(ValueError):
    """Raised when a limb role does not exist on the given configuration."""


@dataclass(frozen=True)
class Edge:
    a: str
    b: str
    link: str  # "mechanical" or "control"

    def touches(self, module_id: str) -> bool:
        return module_id in (self.a, self.b)


@dataclass(frozen=True)
class MorphologyGraph:
    config_name: str
    modules: tuple[tuple[str, ModuleKind], ...]
    edges: tuple[Edge, ...]

    def __post_init__(self):
        ids = [mid for mid, _ in self.modules]
        if len(set(ids)) != len(ids):
            raise ValueError("duplicate module ids")
        known = set(ids)
        for e in self.edges:
            if e.a not in known or e.b not in known:
                raise ValueError(f"edge ({e.a}, {e.b}) references unknown module")

    def module_ids(self, kind: ModuleKind | None = None) -> list[str]:
        return [mid for mid, k in self.modules if kind is None or k == kind]

    def kind_of(self, module_id: str) -> ModuleKind:
        for mid, k in self.modules:
            if mid == module_id:
                return k
        raise KeyError(module_id)

    def count(self, kind: ModuleKind) -> int:
        return sum(1 for _, k in self.modules if k == kind)

    def is_connected(self) -> bool:
        if not self.modules:
            return False
        ids = [mid for mid, _ in self.modules]
        seen = {ids[0]}
        frontier = [ids[0]]
        while frontier:
            node = frontier.pop()
            for e in self.edges:
                if e.touches(node):
                    other = e.b if e.a == node else e.a
                    if other not in seen:
                        seen.add(other)
                        frontier.append(other)
        return len(seen) == len(ids)


@dataclass(frozen=True)
class JointConstraintProfile:
    """Projection of a 7-vector joint command onto a morphology's legal motions.

    ``active_mask`` zeroes increments of locked joints. ``coupled_pairs``
    holds (leader, follower, sign) triples in 0-based indices: the follower's
    increment is overwritten with sign * leader's. ``fixed_offsets`` are
    resting joint angles of the mounted pose (rad); they describe the home
    configuration rather than entering increment projection.
    """

    active_mask: tuple[bool, ...]
    coupled_pairs: tuple[tuple[int, int, float], ...] = ()
    fixed_offsets: tuple[float, ...] = field(default=(0.0,) * NUM_JOINTS)

    def __post_init__(self):
        if len(self.active_mask) != NUM_JOINTS or len(self.fixed_offsets) != NUM_JOINTS:
            raise ValueError("profile vectors must have 7 entries")
        for lead, follow, sign in self.coupled_pairs:
            if not (0 <= lead < NUM_JOINTS and 0 <= follow < NUM_JOINTS):
                raise ValueError("coupled pair index out of range")
            if sign not in (-1.0, 1.0):
                raise ValueError("coupling sign must be +/-1")


# The hardware convention numbers joints 1..7. Everything below this line is
# 0-based; the subtraction here is the single translation point.
def _joint(index_1based: int) -> int:
    return index_1based - 1

_VEHICLE_STEER_ACTIVE = tuple(i in (_joint(2), _joint(6)) for i in range(NUM_JOINTS))
_CENTRAL_JOINT = _joint(4)


def build_config(name: str) -> MorphologyGraph:
    """Return the canonical module graph for ``vehicle``, ``dragon`` or ``minimal``."""
    if name == "vehicle":
        modules = (
            ("wheel_front", ModuleKind.WHEEL_BASE),
            ("limb_steer", ModuleKind.LIMB_7DOF),
            ("wheel_rear", ModuleKind.WHEEL_BASE),
        )
        edges = (
            Edge("wheel_front", "limb_steer", "mechanical"),
            Edge("limb_steer", "wheel_rear", "mechanical"),
            Edge("wheel_front", "wheel_rear", "control"),
        )
    elif name == "dragon":
        # Serial chain: manipulation limb at the front, bridge (steering) limb
        # between the wheel bases. The wheel pair shares a control link for
        # synchronized locomotion.
        modules = (
            ("limb_manip", ModuleKind.LIMB_7DOF),
            ("wheel_front", ModuleKind.WHEEL_BASE),
            ("limb_steer", ModuleKind.LIMB_7DOF),
            ("wheel_rear", ModuleKind.WHEEL_BASE),
        )
        edges = (
            Edge("limb_manip", "wheel_front", "mechanical"),
            Edge("wheel_front", "limb_steer", "mechanical"),
            Edge("limb_steer", "wheel_rear", "mechanical"),
            Edge("wheel_front", "wheel_rear", "control"),
        )
    elif name == "minimal":
        modules = (("wheel_solo", ModuleKind.WHEEL_BASE),)
        edges = ()
    else:
        raise UnknownConfigError(f"unknown configuration name: {name!r}")
    return MorphologyGraph(config_name=name, modules=modules, edges=edges)


def constraint_profile(config: MorphologyGraph, limb_role: str) -> JointConstraintProfile:
    """Joint constraints for a limb role ("steering" or "manipulation") on a config.

    Vehicle steering locks everything except joints 2 and 6, which move in
    opposite directions as one commanded degree of freedom. Dragon keeps all
    seven joints live; its steering home pose carries the 90 degree bend of
    the central joint. Vehicle has no manipulation limb.
    """
    if limb_role not in ("steering", "manipulation"):
        raise ValueError(f"unknown limb role: {limb_role!r}")
    name = config.config_name
    if name == "vehicle":
        if limb_role != "steering":
            raise RoleUnsupportedError("vehicle configuration has no manipulation limb")
        return JointConstraintProfile(
            active_mask=_VEHICLE_STEER_ACTIVE,
            coupled_pairs=((_joint(2), _joint(6), -1.0),),
        )
    if name == "dragon":
        offsets = [0.0] * NUM_JOINTS
        if limb_role == "steering":
            offsets[_CENTRAL_JOINT] = np.pi / 2.0
        return JointConstraintProfile(
            active_mask=(True,) * NUM_JOINTS,
            fixed_offsets=tuple(offsets),
        )
    raise RoleUnsupportedError(f"configuration {name!r} has no limbs")


def apply_constraints(profile: JointConstraintProfile, raw_action: np.ndarray) -> np.ndarray:
    """Project a raw 7-vector of joint increments onto the profile's constraint set."""
    raw = np.asarray(raw_action, dtype=float)
    if raw.shape != (NUM_JOINTS,):
        raise ValueError(f"expected a 7-vector, got shape {raw.shape}")
    out = np.where(profile.active_mask, raw, 0.0)
    for lead, follow, sign in profile.coupled_pairs:
        out[follow] = sign * out[lead]
    return out

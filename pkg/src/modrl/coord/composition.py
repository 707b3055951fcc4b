"""Joint-action assembly from per-module policies, binary gating, task graph."""

from __future__ import annotations

import enum
from dataclasses import dataclass, field

import numpy as np


class ExecutionMode(enum.Enum):
    SYNCHRONOUS_SHARED = "synchronous"
    HETEROGENEOUS_PARALLEL = "parallel"
    SEQUENTIAL_GATED = "sequential"


class MissingPolicyError(KeyError):
    pass


class MissingObservationError(KeyError):
    pass


@dataclass(frozen=True)
class TaskGraph:
    """Mission tasks with precedence edges and per-task module assignments."""

    tasks: tuple[str, ...]
    precedence: tuple[tuple[str, str], ...]  # (before, after)
    assignment: dict[str, tuple[str, ...]] = field(default_factory=dict)

    def __post_init__(self):
        known = set(self.tasks)
        for a, b in self.precedence:
            if a not in known or b not in known:
                raise ValueError(f"precedence edge ({a}, {b}) names unknown task")
        for task in self.assignment:
            if task not in known:
                raise ValueError(f"assignment for unknown task {task!r}")
        self.topological_order()  # raises on cycles

    def topological_order(self) -> list[str]:
        incoming = {t: 0 for t in self.tasks}
        for _, b in self.precedence:
            incoming[b] += 1
        ready = [t for t in self.tasks if incoming[t] == 0]
        order = []
        while ready:
            t = ready.pop(0)
            order.append(t)
            for a, b in self.precedence:
                if a == t:
                    incoming[b] -= 1
                    if incoming[b] == 0:
                        ready.append(b)
        if len(order) != len(self.tasks):
            raise ValueError("task graph has a cycle")
        return order

    def modules_for(self, task: str) -> tuple[str, ...]:
        return self.assignment.get(task, ())


class GateController:
    """Latched proximity switch between the locomotion and manipulation groups.

    While the target is farther than the threshold, locomotion and steering
    modules are live and manipulation is idle. The first crossing latches the
    handoff: from then on only manipulation is live, and later distance
    fluctuation around the threshold cannot chatter the gate back.
    """

    def __init__(self, locomotion_modules: tuple[str, ...],
                 manipulation_modules: tuple[str, ...],
                 threshold: float = 0.3):
        self.locomotion_modules = tuple(locomotion_modules)
        self.manipulation_modules = tuple(manipulation_modules)
        self.threshold = threshold
        self.latched = False
        self.latch_count = 0

    def update(self, distance_to_target: float) -> dict[str, int]:
        if not self.latched and distance_to_target <= self.threshold:
            self.latched = True
            self.latch_count += 1
        alpha: dict[str, int] = {}
        for m in self.locomotion_modules:
            alpha[m] = 0 if self.latched else 1
        for m in self.manipulation_modules:
            alpha[m] = 1 if self.latched else 0
        return alpha


def compose(policies: dict, observations: dict, alpha: dict[str, int],
            idle_actions: dict[str, np.ndarray]) -> dict[str, np.ndarray]:
    """Run every gated-on module's policy on its local observation.

    Gated-off modules receive exactly their idle action. A live module with
    no policy or no fresh observation is a hard error: every module must
    have exactly one action source.
    """
    actions: dict[str, np.ndarray] = {}
    for module, gate in alpha.items():
        if gate:
            if module not in policies:
                raise MissingPolicyError(f"no policy for active module {module!r}")
            if module not in observations:
                raise MissingObservationError(f"no observation for active module {module!r}")
            actions[module] = np.asarray(policies[module].act(observations[module]), float)
        else:
            actions[module] = idle_actions[module]
    return actions


def classify_mode(alpha: dict[str, int], wheel_modules: tuple[str, ...],
                  steer_module: str, manip_module: str) -> ExecutionMode:
    """Label a timestep by which module groups are live."""
    if alpha.get(manip_module, 0):
        return ExecutionMode.SEQUENTIAL_GATED
    if any(alpha.get(w, 0) for w in wheel_modules) and alpha.get(steer_module, 0):
        return ExecutionMode.HETEROGENEOUS_PARALLEL
    return ExecutionMode.SYNCHRONOUS_SHARED

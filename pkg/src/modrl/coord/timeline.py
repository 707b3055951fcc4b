"""Per-step mission timeline: records, invariant checks, Gantt-style summary."""

from __future__ import annotations

import json
from dataclasses import dataclass
from pathlib import Path

import numpy as np

from .composition import ExecutionMode

STEER_EVENT_GATE = np.deg2rad(2.0)


@dataclass
class TimelineRecord:
    t: float
    mode: str
    active_modules: tuple[str, ...]
    alpha: dict[str, int]
    steer_command: float
    steering_event: bool
    distance_to_target: float

    def to_json(self) -> dict:
        return {
            "t": self.t,
            "mode": self.mode,
            "active_modules": list(self.active_modules),
            "alpha": self.alpha,
            "steer_command": self.steer_command,
            "steering_event": self.steering_event,
            "distance_to_target": self.distance_to_target,
        }

    @staticmethod
    def from_json(data: dict) -> "TimelineRecord":
        return TimelineRecord(
            t=float(data["t"]),
            mode=str(data["mode"]),
            active_modules=tuple(data["active_modules"]),
            alpha={k: int(v) for k, v in data["alpha"].items()},
            steer_command=float(data["steer_command"]),
            steering_event=bool(data["steering_event"]),
            distance_to_target=float(data["distance_to_target"]),
        )


class EmptyLogError(ValueError):
    pass


class TimelineLog:
    """Append-only per-step record list at a fixed control period."""

    def __init__(self, dt: float = 0.01):
        self.dt = dt
        self.records: list[TimelineRecord] = []

    def __len__(self) -> int:
        return len(self.records)

    @property
    def duration(self) -> float:
        return len(self.records) * self.dt

    def append(self, record: TimelineRecord) -> None:
        self.records.append(record)

    def mode_shares(self) -> dict[str, float]:
        """Fraction of total time per execution mode; sums to exactly 1."""
        if not self.records:
            raise EmptyLogError("timeline is empty")
        counts = {mode.value: 0 for mode in ExecutionMode}
        for rec in self.records:
            counts[rec.mode] += 1
        total = len(self.records)
        return {mode: counts[mode] / total for mode in counts}

    def activity_ratio(self) -> float:
        if not self.records:
            raise EmptyLogError("timeline is empty")
        active = sum(1 for rec in self.records if rec.active_modules)
        return active / len(self.records)

    def transition_count(self) -> int:
        return sum(
            1 for a, b in zip(self.records, self.records[1:]) if a.mode != b.mode)

    def segments(self) -> list[dict]:
        """Maximal constant-mode runs; durations partition [0, duration]."""
        if not self.records:
            return []
        segs = []
        start = 0
        for i in range(1, len(self.records) + 1):
            if i == len(self.records) or self.records[i].mode != self.records[start].mode:
                segs.append({
                    "mode": self.records[start].mode,
                    "t_start": start * self.dt,
                    "t_end": i * self.dt,
                    "duration": (i - start) * self.dt,
                })
                start = i
        return segs

    def steering_events(self, gate: float = STEER_EVENT_GATE) -> dict[str, int]:
        """Maximal same-sign runs of steering commands above the magnitude gate."""
        left = right = 0
        prev_sign = 0
        for rec in self.records:
            cmd = rec.steer_command
            sign = 0 if abs(cmd) <= gate else (1 if cmd > 0 else -1)
            if sign != 0 and sign != prev_sign:
                if sign > 0:
                    left += 1
                else:
                    right += 1
            prev_sign = sign
        return {"total": left + right, "left": left, "right": right}

    def validate(self) -> None:
        """Check the structural invariants every mission log must satisfy."""
        if not self.records:
            raise EmptyLogError("timeline is empty")
        valid_modes = {mode.value for mode in ExecutionMode}
        for rec in self.records:
            if rec.mode not in valid_modes:
                raise ValueError(f"unknown mode label {rec.mode!r}")
            live = tuple(m for m, a in rec.alpha.items() if a)
            if set(live) != set(rec.active_modules):
                raise ValueError("active module set inconsistent with gate vector")
            if not rec.active_modules:
                raise ValueError(f"idle timestep at t={rec.t}")
        total = sum(seg["duration"] for seg in self.segments())
        if abs(total - self.duration) > 1e-9:
            raise ValueError("segments do not partition the timeline")

    def write_jsonl(self, path: str | Path) -> None:
        with open(path, "w") as fh:
            for rec in self.records:
                fh.write(json.dumps(rec.to_json(), sort_keys=True))
                fh.write("\n")

    @staticmethod
    def read_jsonl(path: str | Path, dt: float = 0.01) -> "TimelineLog":
        log = TimelineLog(dt=dt)
        with open(path) as fh:
            for line in fh:
                line = line.strip()
                if line:
                    log.append(TimelineRecord.from_json(json.loads(line)))
        return log


def timeline_report(log: TimelineLog) -> dict:
    """Mode shares (percent), transition statistics and steering-event counts."""
    if len(log) == 0:
        raise EmptyLogError("cannot report on an empty timeline")
    shares = log.mode_shares()
    transitions = log.transition_count()
    events = log.steering_events()
    return {
        "duration_s": log.duration,
        "mode_shares_pct": {mode: 100.0 * share for mode, share in shares.items()},
        "transition_count": transitions,
        "mean_transition_gap_s": (log.duration / transitions) if transitions else log.duration,
        "steering_events": events,
        "activity_ratio": log.activity_ratio(),
        "segment_count": len(log.segments()),
    }

"""Runtime policy composition: gating, execution modes, mission sequencing, timelines."""

from .composition import (ExecutionMode, GateController, MissingObservationError,
                          MissingPolicyError, TaskGraph, classify_mode, compose)
from .timeline import TimelineLog, TimelineRecord, timeline_report
from .mission import MissionConfig, run_mission

__all__ = [
    "ExecutionMode",
    "GateController",
    "TaskGraph",
    "classify_mode",
    "compose",
    "MissingPolicyError",
    "MissingObservationError",
    "TimelineLog",
    "TimelineRecord",
    "timeline_report",
    "MissionConfig",
    "run_mission",
]

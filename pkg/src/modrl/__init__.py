"""Decentralized per-module RL for reconfigurable wheel/limb robots.

Per-module policies (SAC for wheel bases, PPO for 7-DoF limbs) train in
lightweight planar environments and compose at runtime through a gated
coordination layer with synchronous, parallel and sequential execution
modes.
"""

__version__ = "0.1.0"

"""Trainers and evaluation loops: PPO for limbs, SAC for wheels."""

from .gae import compute_gae
from .buffers import ReplayBuffer, RolloutBuffer
from .ppo import PpoAgent, PpoConfig
from .sac import SacAgent, SacConfig
from .training import TrainBudget, evaluate, train

__all__ = [
    "compute_gae",
    "ReplayBuffer",
    "RolloutBuffer",
    "PpoAgent",
    "PpoConfig",
    "SacAgent",
    "SacConfig",
    "TrainBudget",
    "train",
    "evaluate",
]

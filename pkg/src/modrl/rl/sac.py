"""Soft actor-critic: twin critics, tanh-squashed Gaussian actor, learned temperature.

Gradients flow by hand through the critic input (for the reparameterized
actor objective) and through the tanh squash correction. Target critics
track the online ones with a Polyak average.
"""

from __future__ import annotations

from dataclasses import dataclass

import numpy as np

from ..neuralnet import Adam, Mlp, clamp_log_std
from .buffers import ReplayBuffer

LOG_2PI = float(np.log(2.0 * np.pi))
SQUASH_EPS = 1e-6


@dataclass(frozen=True)
class SacConfig:
    learning_rate: float = 3e-4
    gamma: float = 0.99
    polyak_tau: float = 0.005
    batch_size: int = 256
    replay_capacity: int = 1_000_000
    # Critic targets see reward_scale * r; keeps |Q| in a range the tanh
    # critics fit quickly regardless of the environment's reward units.
    reward_scale: float = 1.0
    n_step: int = 3  # multi-step TD targets
    target_entropy: float | None = None  # default: -action_dim
    min_temperature: float = 0.0  # floor on the learned temperature
    warmup_steps: int = 1000
    update_every: int = 2  # env steps between gradient updates
    updates_per_step: int = 1
    actor_hidden: tuple[int, ...] = (64, 64)
    critic_hidden: tuple[int, ...] = (64, 64)
    log_std_init: float = -0.5
    init_temperature: float = 0.2

    def __post_init__(self):
        if not (0.0 < self.polyak_tau <= 1.0):
            raise ValueError("polyak tau must lie in (0, 1]")
        if self.replay_capacity < self.batch_size:
            raise ValueError("replay capacity must be >= batch size")


def polyak_update(target_params: list[np.ndarray], online_params: list[np.ndarray],
                  tau: float) -> None:
    """target <- (1 - tau) * target + tau * online, in place."""
    for t, o in zip(target_params, online_params):
        t *= 1.0 - tau
        t += tau * o


class SacAgent:
    def __init__(self, obs_dim: int, act_dim: int, config: SacConfig | None = None,
                 seed: int = 0, obs_scale: np.ndarray | None = None):
        self.config = config or SacConfig()
        self.obs_dim = obs_dim
        self.act_dim = act_dim
        # Fixed per-channel input scaling keeps tanh layers out of saturation
        # for observations in physical units.
        self.obs_scale = (np.ones(obs_dim) if obs_scale is None
                          else np.asarray(obs_scale, dtype=float))
        cfg = self.config
        rng = np.random.default_rng(seed)
        self.actor = Mlp([obs_dim, *cfg.actor_hidden, act_dim], rng, final_scale=0.01)
        self.log_std = np.full(act_dim, cfg.log_std_init)
        self.q1 = Mlp([obs_dim + act_dim, *cfg.critic_hidden, 1], rng)
        self.q2 = Mlp([obs_dim + act_dim, *cfg.critic_hidden, 1], rng)
        self.q1_target = self.q1.copy()
        self.q2_target = self.q2.copy()
        self.log_alpha = np.array([np.log(cfg.init_temperature)])
        self.target_entropy = (
            cfg.target_entropy if cfg.target_entropy is not None else -float(act_dim))
        lr = cfg.learning_rate
        self._actor_opt = Adam(self.actor.parameters() + [self.log_std], lr)
        self._q1_opt = Adam(self.q1.parameters(), lr)
        self._q2_opt = Adam(self.q2.parameters(), lr)
        self._alpha_opt = Adam([self.log_alpha], lr)
        self._rng = rng

    @property
    def alpha(self) -> float:
        return float(np.exp(self.log_alpha[0]))

    def _sample(self, mean: np.ndarray) -> tuple[np.ndarray, np.ndarray, np.ndarray]:
        """Reparameterized tanh-Gaussian sample: (action, log_prob, noise)."""
        std = np.exp(self.log_std)
        noise = self._rng.standard_normal(mean.shape)
        z = mean + std * noise
        action = np.tanh(z)
        log_prob = (
            np.sum(-0.5 * noise * noise - self.log_std, axis=-1)
            - 0.5 * mean.shape[-1] * LOG_2PI
            - np.sum(np.log(1.0 - action * action + SQUASH_EPS), axis=-1)
        )
        return action, log_prob, noise

    def sample_action(self, obs: np.ndarray) -> tuple[np.ndarray, float]:
        obs = np.asarray(obs, dtype=float).reshape(1, -1) / self.obs_scale
        mean = self.actor.forward(obs)
        action, log_prob, _ = self._sample(mean)
        return action[0], float(log_prob[0])

    def mean_action(self, obs: np.ndarray) -> np.ndarray:
        return np.tanh(self.actor.forward(np.asarray(obs, dtype=float) / self.obs_scale))

    def update(self, replay: ReplayBuffer) -> dict[str, float]:
        cfg = self.config
        batch = replay.sample(cfg.batch_size, self._rng)
        obs = batch["obs"] / self.obs_scale
        actions = batch["actions"]
        rewards = cfg.reward_scale * batch["rewards"]
        next_obs = batch["next_obs"] / self.obs_scale
        dones = batch["dones"].astype(float)
        n = len(obs)
        alpha = self.alpha

        # TD targets from the target critics and a fresh next action.
        next_mean = self.actor.forward(next_obs)
        next_action, next_logp, _ = self._sample(next_mean)
        next_in = np.concatenate([next_obs, next_action], axis=1)
        q_next = np.minimum(
            self.q1_target.forward(next_in)[:, 0],
            self.q2_target.forward(next_in)[:, 0],
        ) - alpha * next_logp
        discounts = np.where(np.isnan(batch["discounts"]), cfg.gamma,
                             batch["discounts"])
        targets = rewards + discounts * (1.0 - dones) * q_next

        critic_in = np.concatenate([obs, actions], axis=1)
        losses = []
        for q, opt in ((self.q1, self._q1_opt), (self.q2, self._q2_opt)):
            pred = q.forward(critic_in, cache=True)[:, 0]
            err = pred - targets
            losses.append(float(np.mean(err * err)))
            grads, _ = q.backward((2.0 * err / n)[:, None])
            opt.step(grads)

        # Actor: minimize alpha*logp - min_q with reparameterized actions.
        mean = self.actor.forward(obs, cache=True)
        std = np.exp(self.log_std)
        new_action, new_logp, noise = self._sample(mean)
        actor_in = np.concatenate([obs, new_action], axis=1)
        q1_val = self.q1.forward(actor_in, cache=True)[:, 0]
        q2_val = self.q2.forward(actor_in, cache=True)[:, 0]
        pick_q1 = (q1_val <= q2_val).astype(float)
        _, dq1_in = self.q1.backward(pick_q1[:, None])
        _, dq2_in = self.q2.backward((1.0 - pick_q1)[:, None])
        dq_daction = (dq1_in + dq2_in)[:, self.obs_dim:]

        one_minus_a2 = 1.0 - new_action * new_action
        dlogp_dz = 2.0 * new_action * one_minus_a2 / (one_minus_a2 + SQUASH_EPS)
        dz = (alpha * dlogp_dz - dq_daction * one_minus_a2) / n
        actor_grads, _ = self.actor.backward(dz)
        dlogstd = (dz * (std * noise)).sum(axis=0) - alpha
        self._actor_opt.step(actor_grads + [dlogstd])
        clamp_log_std(self.log_std)
        actor_loss = float(np.mean(alpha * new_logp - np.minimum(q1_val, q2_val)))

        # Temperature: push entropy toward the target.
        dlog_alpha = -float(np.mean(new_logp + self.target_entropy))
        self._alpha_opt.step([np.array([dlog_alpha])])
        if cfg.min_temperature > 0:
            self.log_alpha[0] = max(self.log_alpha[0], np.log(cfg.min_temperature))

        polyak_update(self.q1_target.parameters(), self.q1.parameters(), cfg.polyak_tau)
        polyak_update(self.q2_target.parameters(), self.q2.parameters(), cfg.polyak_tau)

        return {
            "q1_loss": losses[0],
            "q2_loss": losses[1],
            "actor_loss": actor_loss,
            "alpha": alpha,
            "entropy": float(np.mean(-new_logp)),
        }

    def export_arrays(self) -> dict[str, np.ndarray]:
        arrays = {}
        for i, (w, b) in enumerate(zip(self.actor.weights, self.actor.biases)):
            arrays[f"actor_w{i}"] = w
            arrays[f"actor_b{i}"] = b
        arrays["log_std"] = self.log_std
        arrays["obs_scale"] = self.obs_scale
        return arrays

    def load_arrays(self, arrays: dict[str, np.ndarray]) -> None:
        for i in range(len(self.actor.weights)):
            self.actor.weights[i][...] = arrays[f"actor_w{i}"]
            self.actor.biases[i][...] = arrays[f"actor_b{i}"]
        self.log_std[...] = arrays["log_std"]
        if "obs_scale" in arrays:
            self.obs_scale = arrays["obs_scale"].copy()

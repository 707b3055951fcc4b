"""Clipped-surrogate PPO over the numpy MLP substrate.

Actions are sampled from a Gaussian with a state-independent learned log-std
and clipped to [-1, 1] by the environment; log-probabilities are plain
Gaussian (no squash correction). The epoch loop stops as soon as the measured
KL divergence exceeds the target, before the offending minibatch is applied.
"""

from __future__ import annotations

from dataclasses import dataclass, field

import numpy as np

from ..neuralnet import Adam, Mlp, clamp_log_std
from .buffers import RolloutBuffer

LOG_2PI = float(np.log(2.0 * np.pi))


@dataclass(frozen=True)
class PpoConfig:
    steps_per_env: int = 128
    num_minibatches: int = 64
    learning_rate: float = 1e-4
    gamma: float = 0.99
    gae_lambda: float = 0.95
    clip_ratio: float = 0.2
    entropy_coef: float = 0.002
    value_coef: float = 1.0
    target_kl: float = 0.008
    epochs: int = 5
    n_envs: int = 16
    actor_hidden: tuple[int, ...] = (64, 64)
    critic_hidden: tuple[int, ...] = (128, 128)
    log_std_init: float = -0.5

    def __post_init__(self):
        if not (0.0 < self.clip_ratio < 1.0):
            raise ValueError("clip ratio must lie in (0, 1)")
        for name in ("steps_per_env", "num_minibatches", "epochs", "n_envs"):
            if getattr(self, name) <= 0:
                raise ValueError(f"{name} must be positive")


def gaussian_log_prob(actions: np.ndarray, mean: np.ndarray, std: np.ndarray) -> np.ndarray:
    z = (actions - mean) / std
    return -0.5 * np.sum(z * z, axis=-1) - np.sum(np.log(std)) - 0.5 * actions.shape[-1] * LOG_2PI


class PpoAgent:
    def __init__(self, obs_dim: int, act_dim: int, config: PpoConfig | None = None,
                 seed: int = 0, obs_scale: np.ndarray | None = None):
        self.config = config or PpoConfig()
        self.obs_dim = obs_dim
        self.act_dim = act_dim
        # Fixed per-channel input scaling; physical-unit observations would
        # otherwise saturate the tanh layers.
        self.obs_scale = (np.ones(obs_dim) if obs_scale is None
                          else np.asarray(obs_scale, dtype=float))
        rng = np.random.default_rng(seed)
        cfg = self.config
        self.actor = Mlp([obs_dim, *cfg.actor_hidden, act_dim], rng, final_scale=0.01)
        self.log_std = np.full(act_dim, cfg.log_std_init)
        self.critic = Mlp([obs_dim, *cfg.critic_hidden, 1], rng)
        self._actor_opt = Adam(self.actor.parameters() + [self.log_std], cfg.learning_rate)
        self._critic_opt = Adam(self.critic.parameters(), cfg.learning_rate)
        self._rng = rng

    @property
    def std(self) -> np.ndarray:
        return np.exp(self.log_std)

    def act(self, obs: np.ndarray) -> tuple[np.ndarray, np.ndarray, np.ndarray]:
        """Stochastic actions with their log-probs and value estimates (batched)."""
        obs = np.atleast_2d(np.asarray(obs, dtype=float)) / self.obs_scale
        mean = self.actor.forward(obs)
        std = self.std
        actions = mean + std * self._rng.standard_normal(mean.shape)
        log_probs = gaussian_log_prob(actions, mean, std)
        values = self.critic.forward(obs)[:, 0]
        return actions, log_probs, values

    def mean_action(self, obs: np.ndarray) -> np.ndarray:
        scaled = np.asarray(obs, dtype=float) / self.obs_scale
        return np.clip(self.actor.forward(scaled), -1.0, 1.0)

    def value(self, obs: np.ndarray) -> np.ndarray:
        obs = np.atleast_2d(np.asarray(obs, dtype=float)) / self.obs_scale
        return self.critic.forward(obs)[:, 0]

    def make_buffer(self) -> RolloutBuffer:
        cfg = self.config
        return RolloutBuffer(cfg.steps_per_env, cfg.n_envs, self.obs_dim, self.act_dim)

    def update(self, buffer: RolloutBuffer) -> dict[str, float]:
        """One PPO update over a finished rollout buffer; returns summary stats."""
        cfg = self.config
        batch = buffer.flat_batch()
        n = len(batch["advantages"])
        if n == 0:
            raise ValueError("empty rollout buffer")
        mb_size = max(1, n // cfg.num_minibatches)

        stats = {"policy_loss": 0.0, "value_loss": 0.0, "kl": 0.0,
                 "clip_fraction": 0.0, "entropy": 0.0,
                 "epochs_run": 0.0, "minibatches_run": 0.0}
        aborted = False
        for _ in range(cfg.epochs):
            if aborted:
                break
            perm = self._rng.permutation(n)
            for start in range(0, n, mb_size):
                idx = perm[start:start + mb_size]
                obs = batch["obs"][idx] / self.obs_scale
                actions = batch["actions"][idx]
                old_logp = batch["log_probs"][idx]
                adv = batch["advantages"][idx]
                rets = batch["returns"][idx]
                m = len(idx)

                mean = self.actor.forward(obs, cache=True)
                std = self.std
                z = (actions - mean) / std
                new_logp = gaussian_log_prob(actions, mean, std)
                kl = float(np.mean(old_logp - new_logp))
                if kl > cfg.target_kl:
                    aborted = True
                    break

                ratio = np.exp(new_logp - old_logp)
                surr1 = ratio * adv
                surr2 = np.clip(ratio, 1.0 - cfg.clip_ratio, 1.0 + cfg.clip_ratio) * adv
                unclipped = surr1 <= surr2

                # d(-min(surr1, surr2))/d new_logp, averaged over the minibatch
                dlogp = np.where(unclipped, -ratio * adv, 0.0) / m
                dmean = dlogp[:, None] * (z / std)
                actor_grads, _ = self.actor.backward(dmean)
                dlogstd = (dlogp[:, None] * (z * z - 1.0)).sum(axis=0) - cfg.entropy_coef
                self._actor_opt.step(actor_grads + [dlogstd])
                clamp_log_std(self.log_std)

                values = self.critic.forward(obs, cache=True)[:, 0]
                verr = values - rets
                critic_grads, _ = self.critic.backward(
                    (cfg.value_coef * 2.0 * verr / m)[:, None])
                self._critic_opt.step(critic_grads)

                entropy = float(np.sum(np.log(std)) + 0.5 * self.act_dim * (1.0 + LOG_2PI))
                stats["policy_loss"] = float(-np.mean(np.minimum(surr1, surr2)))
                stats["value_loss"] = float(np.mean(verr * verr))
                stats["kl"] = kl
                stats["clip_fraction"] = float(np.mean(np.abs(ratio - 1.0) > cfg.clip_ratio))
                stats["entropy"] = entropy
                stats["minibatches_run"] += 1
            else:
                stats["epochs_run"] += 1
        return stats

    def export_arrays(self) -> dict[str, np.ndarray]:
        arrays = {}
        for i, (w, b) in enumerate(zip(self.actor.weights, self.actor.biases)):
            arrays[f"actor_w{i}"] = w
            arrays[f"actor_b{i}"] = b
        arrays["log_std"] = self.log_std
        arrays["obs_scale"] = self.obs_scale
        for i, (w, b) in enumerate(zip(self.critic.weights, self.critic.biases)):
            arrays[f"critic_w{i}"] = w
            arrays[f"critic_b{i}"] = b
        return arrays

    def load_arrays(self, arrays: dict[str, np.ndarray]) -> None:
        for i in range(len(self.actor.weights)):
            self.actor.weights[i][...] = arrays[f"actor_w{i}"]
            self.actor.biases[i][...] = arrays[f"actor_b{i}"]
        self.log_std[...] = arrays["log_std"]
        if "obs_scale" in arrays:
            self.obs_scale = arrays["obs_scale"].copy()
        for i in range(len(self.critic.weights)):
            if f"critic_w{i}" in arrays:
                self.critic.weights[i][...] = arrays[f"critic_w{i}"]
                self.critic.biases[i][...] = arrays[f"critic_b{i}"]

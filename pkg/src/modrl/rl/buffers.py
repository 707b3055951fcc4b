"""Trajectory storage: on-policy rollouts (PPO) and an off-policy ring (SAC)."""

from __future__ import annotations

import numpy as np

from .gae import compute_gae


class RolloutBuffer:
    """Fixed-size on-policy buffer over parallel environments.

    Rows are added one vector-timestep at a time. ``finish`` computes
    per-environment GAE and normalizes advantages over the whole batch to
    zero mean / unit std before the policy loss consumes them.
    """

    def __init__(self, steps: int, n_envs: int, obs_dim: int, act_dim: int):
        self.steps = steps
        self.n_envs = n_envs
        self.obs = np.zeros((steps, n_envs, obs_dim))
        self.actions = np.zeros((steps, n_envs, act_dim))
        self.log_probs = np.zeros((steps, n_envs))
        self.rewards = np.zeros((steps, n_envs))
        self.values = np.zeros((steps, n_envs))
        self.terminals = np.zeros((steps, n_envs), dtype=bool)
        self.truncateds = np.zeros((steps, n_envs), dtype=bool)
        self.bootstrap_values = np.zeros((steps, n_envs))
        self.advantages = np.zeros((steps, n_envs))
        self.returns = np.zeros((steps, n_envs))
        self._cursor = 0
        self._finished = False

    @property
    def full(self) -> bool:
        return self._cursor >= self.steps

    def add(self, obs, actions, log_probs, rewards, values, terminals, truncateds,
            bootstrap_values) -> None:
        if self.full:
            raise RuntimeError("rollout buffer already full")
        t = self._cursor
        self.obs[t] = obs
        self.actions[t] = actions
        self.log_probs[t] = log_probs
        self.rewards[t] = rewards
        self.values[t] = values
        self.terminals[t] = terminals
        self.truncateds[t] = truncateds
        self.bootstrap_values[t] = bootstrap_values
        self._cursor += 1

    def finish(self, gamma: float, lam: float) -> None:
        """Compute GAE per environment and batch-normalize the advantages."""
        if not self.full:
            raise RuntimeError("rollout buffer not full yet")
        for e in range(self.n_envs):
            adv, ret = compute_gae(
                self.rewards[:, e], self.values[:, e],
                self.terminals[:, e], self.truncateds[:, e],
                self.bootstrap_values[:, e], gamma, lam)
            self.advantages[:, e] = adv
            self.returns[:, e] = ret
        flat = self.advantages.reshape(-1)
        std = flat.std()
        self.advantages = (self.advantages - flat.mean()) / (std + 1e-8)
        self._finished = True

    def flat_batch(self) -> dict[str, np.ndarray]:
        if not self._finished:
            raise RuntimeError("call finish() before reading the batch")
        n = self.steps * self.n_envs
        return {
            "obs": self.obs.reshape(n, -1),
            "actions": self.actions.reshape(n, -1),
            "log_probs": self.log_probs.reshape(n),
            "advantages": self.advantages.reshape(n),
            "returns": self.returns.reshape(n),
        }

    def reset(self) -> None:
        self._cursor = 0
        self._finished = False


class ReplayBuffer:
    """Uniform-sampling transition ring. ``done`` must be True only at true terminals.

    ``discount`` is the factor applied to the bootstrap term for that row;
    multi-step transitions store gamma**k there.
    """

    def __init__(self, capacity: int, obs_dim: int, act_dim: int):
        if capacity < 1:
            raise ValueError("capacity must be positive")
        self.capacity = capacity
        self.obs = np.zeros((capacity, obs_dim))
        self.actions = np.zeros((capacity, act_dim))
        self.rewards = np.zeros(capacity)
        self.next_obs = np.zeros((capacity, obs_dim))
        self.dones = np.zeros(capacity, dtype=bool)
        self.discounts = np.zeros(capacity)
        self._size = 0
        self._head = 0

    def __len__(self) -> int:
        return self._size

    def add(self, obs, action, reward, next_obs, done: bool,
            discount: float | None = None) -> None:
        i = self._head
        self.obs[i] = obs
        self.actions[i] = action
        self.rewards[i] = reward
        self.next_obs[i] = next_obs
        self.dones[i] = done
        self.discounts[i] = np.nan if discount is None else discount
        self._head = (self._head + 1) % self.capacity
        self._size = min(self._size + 1, self.capacity)

    def sample(self, batch_size: int, rng: np.random.Generator) -> dict[str, np.ndarray]:
        if self._size < batch_size:
            raise RuntimeError(f"replay holds {self._size} transitions, need {batch_size}")
        idx = rng.integers(0, self._size, size=batch_size)
        return {
            "obs": self.obs[idx],
            "actions": self.actions[idx],
            "rewards": self.rewards[idx],
            "next_obs": self.next_obs[idx],
            "dones": self.dones[idx],
            "discounts": self.discounts[idx],
        }


class NStepAccumulator:
    """Folds consecutive steps into n-step transitions before replay insertion."""

    def __init__(self, replay: ReplayBuffer, n: int, gamma: float):
        self.replay = replay
        self.n = n
        self.gamma = gamma
        self._pending: list[tuple] = []

    def _emit(self, count: int, next_obs, done: bool) -> None:
        obs0, act0 = self._pending[0][0], self._pending[0][1]
        reward = 0.0
        for k in range(count):
            reward += (self.gamma ** k) * self._pending[k][2]
        self.replay.add(obs0, act0, reward, next_obs, done,
                        discount=self.gamma ** count)

    def add(self, obs, action, reward, next_obs, done: bool, truncated: bool) -> None:
        self._pending.append((obs, action, reward))
        if len(self._pending) == self.n:
            self._emit(self.n, next_obs, done)
            self._pending.pop(0)
        if done or truncated:
            # Flush the shorter tails at an episode boundary.
            while self._pending:
                self._emit(len(self._pending), next_obs, done)
                self._pending.pop(0)

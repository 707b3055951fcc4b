"""Generalized advantage estimation with truncation-aware bootstrapping."""

from __future__ import annotations

import numpy as np


def compute_gae(
    rewards: np.ndarray,
    values: np.ndarray,
    terminals: np.ndarray,
    truncateds: np.ndarray,
    bootstrap_values: np.ndarray,
    gamma: float,
    lam: float,
) -> tuple[np.ndarray, np.ndarray]:
    """Advantages and returns over a (possibly multi-episode) step sequence.

    One-step residuals use the next stored value, except: at a true terminal
    the next value is zero, and at a truncation (or at the end of the buffer
    mid-episode) it is ``bootstrap_values[t]``, the critic's estimate of the
    state that was cut off. The lambda recursion restarts after any episode
    boundary so advantages never mix episodes.

    Returns (advantages, returns) with returns = advantages + values.
    """
    rewards = np.asarray(rewards, dtype=float)
    values = np.asarray(values, dtype=float)
    terminals = np.asarray(terminals, dtype=bool)
    truncateds = np.asarray(truncateds, dtype=bool)
    bootstrap_values = np.asarray(bootstrap_values, dtype=float)
    n = len(rewards)
    for name, arr in (("values", values), ("terminals", terminals),
                      ("truncateds", truncateds), ("bootstrap_values", bootstrap_values)):
        if len(arr) != n:
            raise ValueError(f"{name} has length {len(arr)}, expected {n}")
    if np.any(terminals & truncateds):
        raise ValueError("a step cannot be both terminal and truncated")

    advantages = np.zeros(n)
    carry = 0.0
    for t in range(n - 1, -1, -1):
        if terminals[t]:
            next_value = 0.0
            carry = 0.0
        elif truncateds[t] or t == n - 1:
            next_value = bootstrap_values[t]
            carry = 0.0
        else:
            next_value = values[t + 1]
        delta = rewards[t] + gamma * next_value - values[t]
        carry = delta + gamma * lam * carry
        advantages[t] = carry
    return advantages, advantages + values

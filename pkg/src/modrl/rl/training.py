"""Training drivers for the three module policies, plus deterministic evaluation.

Agent kinds: ``wheel-sac``, ``steer-ppo``, ``manip-ppo``. Training is fully
seeded: a single master seed drives agent init, episode seeds and exploration,
so identical (seed, config) pairs reproduce metrics byte for byte.
"""

from __future__ import annotations

import csv
from dataclasses import dataclass
from pathlib import Path

import numpy as np

from .. import neuralnet
from ..envs import (ManipEnv, ManipEnvConfig, SteerEnv, SteerEnvConfig,
                    WheelEnv, WheelEnvConfig, MANIP_SWEEP_DISTANCES)
from ..neuralnet import Mlp
from ..scripted import PolicyAdapter, RandomPolicy
from .buffers import NStepAccumulator, ReplayBuffer
from .ppo import PpoAgent, PpoConfig
from .sac import SacAgent, SacConfig

AGENT_KINDS = ("wheel-sac", "steer-ppo", "manip-ppo")

METRIC_COLUMNS = ("episode", "steps", "return", "success", "distance_final",
                  "mean_abs_torque", "mae_deg")

# Per-channel observation scales (divide before the nets); physical units in,
# roughly unit-range activations out.
WHEEL_OBS_SCALE = np.array([5.0, 5.0, 5.0, 5.0, 4.0, 4.0])
STEER_OBS_SCALE = np.concatenate([np.full(7, 2.0), np.full(7, 5.0), [1.0]])
MANIP_OBS_SCALE = np.concatenate([np.full(7, 2.0), np.full(7, 5.0),
                                  np.full(3, 1.5), np.full(3, 1.5)])

_SEED_CAP = 2**62


@dataclass(frozen=True)
class TrainBudget:
    wheel_episodes: int = 300
    steer_total_steps: int = 200_000
    manip_total_steps: int = 200_000


def _row(**kwargs) -> dict:
    row = {k: "" for k in METRIC_COLUMNS}
    row.update(kwargs)
    return row


def write_metrics_csv(path: str | Path, rows: list[dict]) -> None:
    with open(path, "w", newline="") as fh:
        writer = csv.DictWriter(fh, fieldnames=METRIC_COLUMNS)
        writer.writeheader()
        for row in rows:
            writer.writerow(row)


# --- wheel / SAC ---------------------------------------------------------------

def train_wheel(env_config: WheelEnvConfig | None = None,
                sac_config: SacConfig | None = None,
                episodes: int = 300, seed: int = 0,
                ) -> tuple[SacAgent, list[dict]]:
    env_config = env_config or WheelEnvConfig()
    sac_config = sac_config or SacConfig()
    master = np.random.default_rng(seed)
    env = WheelEnv(env_config)
    agent = SacAgent(WheelEnv.OBS_DIM, WheelEnv.ACT_DIM, sac_config,
                     seed=int(master.integers(_SEED_CAP)),
                     obs_scale=WHEEL_OBS_SCALE)
    replay = ReplayBuffer(sac_config.replay_capacity, WheelEnv.OBS_DIM, WheelEnv.ACT_DIM)
    feeder = NStepAccumulator(replay, max(1, sac_config.n_step), sac_config.gamma)
    warmup_rng = np.random.default_rng(int(master.integers(_SEED_CAP)))

    rows = []
    global_step = 0
    for episode in range(episodes):
        obs = env.reset(seed=int(master.integers(_SEED_CAP)))
        ep_return = 0.0
        torque_abs = 0.0
        steps = 0
        success = False
        distance = np.nan
        while True:
            if global_step < sac_config.warmup_steps:
                action = warmup_rng.uniform(-1.0, 1.0, 2)
            else:
                action, _ = agent.sample_action(obs)
            result = env.step(action)
            feeder.add(obs, action, result.reward, result.observation,
                       result.terminal, result.truncated)
            obs = result.observation
            global_step += 1
            steps += 1
            ep_return += result.reward
            torque_abs += float(np.mean(np.abs(result.info["applied_torque"])))
            if (global_step >= sac_config.warmup_steps
                    and len(replay) >= sac_config.batch_size
                    and global_step % sac_config.update_every == 0):
                for _ in range(sac_config.updates_per_step):
                    agent.update(replay)
            if result.done:
                success = bool(result.info["success"])
                distance = result.info["distance"]
                break
        rows.append(_row(
            episode=episode, steps=steps,
            **{"return": ep_return},
            success=int(success),
            distance_final=distance,
            mean_abs_torque=torque_abs / steps,
        ))
    return agent, rows


# --- PPO (steer / manip) -------------------------------------------------------

def _train_ppo(envs, agent: PpoAgent, total_steps: int, master: np.random.Generator,
               episode_stat) -> list[dict]:
    cfg = agent.config
    n_envs = len(envs)
    obs = np.stack([env.reset(seed=int(master.integers(_SEED_CAP))) for env in envs])
    updates = max(1, total_steps // (cfg.steps_per_env * n_envs))
    rows = []
    finished: list[dict] = []
    ep_returns = np.zeros(n_envs)
    ep_steps = np.zeros(n_envs, dtype=int)
    global_step = 0

    for update in range(updates):
        buffer = agent.make_buffer()
        for _ in range(cfg.steps_per_env):
            actions, log_probs, values = agent.act(obs)
            rewards = np.zeros(n_envs)
            terminals = np.zeros(n_envs, dtype=bool)
            truncateds = np.zeros(n_envs, dtype=bool)
            boots = np.zeros(n_envs)
            next_obs = np.empty_like(obs)
            for e, env in enumerate(envs):
                result = env.step(actions[e])
                rewards[e] = result.reward
                terminals[e] = result.terminal
                truncateds[e] = result.truncated
                ep_returns[e] += result.reward
                ep_steps[e] += 1
                if result.truncated:
                    boots[e] = agent.value(result.observation)[0]
                if result.done:
                    finished.append(episode_stat(result, ep_returns[e], ep_steps[e]))
                    ep_returns[e] = 0.0
                    ep_steps[e] = 0
                    next_obs[e] = env.reset(seed=int(master.integers(_SEED_CAP)))
                else:
                    next_obs[e] = result.observation
            buffer.add(obs, actions, log_probs, rewards, values, terminals,
                       truncateds, boots)
            obs = next_obs
            global_step += n_envs
        open_rows = ~(buffer.terminals[-1] | buffer.truncateds[-1])
        if np.any(open_rows):
            buffer.bootstrap_values[-1, open_rows] = agent.value(obs[open_rows])
        buffer.finish(cfg.gamma, cfg.gae_lambda)
        agent.update(buffer)

        window = finished[-32:]
        if window:
            rows.append(_row(
                episode=update,
                steps=global_step,
                **{"return": float(np.mean([w["return"] for w in window]))},
                success="" if window[0].get("success") is None
                        else float(np.mean([w["success"] for w in window])),
                distance_final="" if window[0].get("distance") is None
                               else float(np.mean([w["distance"] for w in window])),
                mae_deg="" if window[0].get("error_deg") is None
                        else float(np.mean([w["error_deg"] for w in window])),
            ))
    return rows


def train_steer(env_config: SteerEnvConfig | None = None,
                ppo_config: PpoConfig | None = None,
                total_steps: int = 200_000, seed: int = 0,
                ) -> tuple[PpoAgent, list[dict]]:
    env_config = env_config or SteerEnvConfig()
    ppo_config = ppo_config or PpoConfig()
    master = np.random.default_rng(seed)
    agent = PpoAgent(SteerEnv.OBS_DIM, SteerEnv.ACT_DIM, ppo_config,
                     seed=int(master.integers(_SEED_CAP)),
                     obs_scale=STEER_OBS_SCALE)
    envs = [SteerEnv(env_config) for _ in range(ppo_config.n_envs)]

    def stat(result, ep_return, steps):
        return {"return": ep_return, "success": None, "distance": None,
                "error_deg": abs(np.rad2deg(result.info["error"]))}

    rows = _train_ppo(envs, agent, total_steps, master, stat)
    return agent, rows


def train_manip(env_config: ManipEnvConfig | None = None,
                ppo_config: PpoConfig | None = None,
                total_steps: int = 200_000, seed: int = 0,
                ) -> tuple[PpoAgent, list[dict]]:
    env_config = env_config or ManipEnvConfig()
    ppo_config = ppo_config or PpoConfig()
    master = np.random.default_rng(seed)
    agent = PpoAgent(ManipEnv.OBS_DIM, ManipEnv.ACT_DIM, ppo_config,
                     seed=int(master.integers(_SEED_CAP)),
                     obs_scale=MANIP_OBS_SCALE)
    envs = [ManipEnv(env_config) for _ in range(ppo_config.n_envs)]

    def stat(result, ep_return, steps):
        return {"return": ep_return, "success": float(result.info["success"]),
                "distance": result.info["distance"], "error_deg": None}

    rows = _train_ppo(envs, agent, total_steps, master, stat)
    return agent, rows


def train(agent_kind: str, seed: int = 0, env_config=None, algo_config=None,
          budget: TrainBudget | None = None):
    """Dispatch on agent kind; returns (agent, metric rows)."""
    budget = budget or TrainBudget()
    if agent_kind == "wheel-sac":
        return train_wheel(env_config, algo_config, budget.wheel_episodes, seed)
    if agent_kind == "steer-ppo":
        return train_steer(env_config, algo_config, budget.steer_total_steps, seed)
    if agent_kind == "manip-ppo":
        return train_manip(env_config, algo_config, budget.manip_total_steps, seed)
    raise ValueError(f"unknown agent kind {agent_kind!r}; expected one of {AGENT_KINDS}")


# --- checkpoints ----------------------------------------------------------------

def save_agent(path: str | Path, agent_kind: str, agent) -> None:
    meta = {
        "obs_dim": agent.obs_dim,
        "act_dim": agent.act_dim,
        "actor_hidden": list(agent.config.actor_hidden),
    }
    neuralnet.save_checkpoint(path, agent_kind, agent.export_arrays(), meta)


def load_policy(path: str | Path) -> tuple[str, PolicyAdapter]:
    """Rebuild the deterministic actor from a checkpoint file."""
    kind, arrays, meta = neuralnet.load_checkpoint(path)
    if kind not in AGENT_KINDS:
        raise neuralnet.CheckpointFormatError(f"{path}: unknown agent kind {kind!r}")
    sizes = [int(meta["obs_dim"]), *[int(h) for h in meta["actor_hidden"]],
             int(meta["act_dim"])]
    actor = Mlp(sizes, np.random.default_rng(0))
    n_layers = len(sizes) - 1
    for i in range(n_layers):
        actor.weights[i][...] = arrays[f"actor_w{i}"]
        actor.biases[i][...] = arrays[f"actor_b{i}"]
    scale = arrays.get("obs_scale", np.ones(sizes[0]))
    if kind == "wheel-sac":
        return kind, PolicyAdapter(lambda obs: np.tanh(actor.forward(obs / scale)))
    return kind, PolicyAdapter(
        lambda obs: np.clip(actor.forward(obs / scale), -1.0, 1.0))


def policy_for_agent(agent_kind: str, agent) -> PolicyAdapter:
    return PolicyAdapter(agent.mean_action)


# --- evaluation -----------------------------------------------------------------

def blank_summary() -> dict:
    """Every evaluation field, so summary files always share one schema."""
    return {
        "kind": None, "episodes": None,
        "success_rate": None, "mean_final_distance": None, "mean_return": None,
        "mean_abs_torque": None, "mean_active_torque": None,
        "baseline_mean_abs_torque": None, "torque_reduction": None,
        "mae_deg": None, "rmse_deg": None, "within_5deg": None, "within_2deg": None,
        "distance_error_correlation": None, "per_distance": None,
    }


def evaluate_wheel(policy, env_config: WheelEnvConfig | None = None,
                   n_episodes: int = 50, seed: int = 0) -> dict:
    """Deterministic rollouts; torque is averaged over the nominal horizon.

    Motors are idle once an episode ends, so the per-motor torque mean uses
    the full horizon as denominator; ``mean_active_torque`` reports the
    in-episode average as well.
    """
    env_config = env_config or WheelEnvConfig()
    env = WheelEnv(env_config)
    master = np.random.default_rng(seed)
    horizon = env_config.clock.max_steps
    successes = 0
    distances = []
    returns = []
    torque_total = 0.0
    active_steps = 0
    for _ in range(n_episodes):
        obs = env.reset(seed=int(master.integers(_SEED_CAP)))
        ep_return = 0.0
        while True:
            result = env.step(policy.act(obs))
            obs = result.observation
            ep_return += result.reward
            torque_total += float(np.sum(np.abs(result.info["applied_torque"])))
            active_steps += 1
            if result.done:
                successes += int(result.info["success"])
                distances.append(result.info["distance"])
                break
        returns.append(ep_return)
    summary = blank_summary()
    summary.update({
        "kind": "wheel", "episodes": n_episodes,
        "success_rate": successes / n_episodes,
        "mean_final_distance": float(np.mean(distances)),
        "mean_return": float(np.mean(returns)),
        "mean_abs_torque": torque_total / (2.0 * horizon * n_episodes),
        "mean_active_torque": torque_total / (2.0 * active_steps),
    })
    return summary


def torque_baseline(env_config: WheelEnvConfig | None = None, n_episodes: int = 20,
                    seed: int = 0) -> float:
    """Horizon-normalized per-motor |torque| of the untrained (random-action) policy."""
    result = evaluate_wheel(RandomPolicy(2, seed=seed ^ 0x5EED), env_config,
                            n_episodes, seed)
    return result["mean_abs_torque"]


def evaluate_steer_grid(policy, env_config: SteerEnvConfig | None = None,
                        n_points: int = 101, seed: int = 0) -> dict:
    """Sweep the commanded angle over an even grid; report closed-loop accuracy."""
    env_config = env_config or SteerEnvConfig()
    env = SteerEnv(env_config)
    limit = env_config.target_limit
    targets = np.linspace(-limit, limit, n_points)
    master = np.random.default_rng(seed)
    errors_deg = []
    for target in targets:
        env.reset(seed=int(master.integers(_SEED_CAP)))
        env.set_target(float(target))
        obs = env._obs
        while True:
            result = env.step(policy.act(obs))
            obs = result.observation
            if result.done:
                errors_deg.append(np.rad2deg(result.info["error"]))
                break
    errors = np.abs(np.array(errors_deg))
    summary = blank_summary()
    summary.update({
        "kind": "steer", "episodes": n_points,
        "mae_deg": float(errors.mean()),
        "rmse_deg": float(np.sqrt(np.mean(errors ** 2))),
        "within_5deg": float(np.mean(errors <= 5.0)),
        "within_2deg": float(np.mean(errors <= 2.0)),
    })
    return summary


def evaluate_manip(policy, env_config: ManipEnvConfig | None = None,
                   n_episodes: int = 10, seed: int = 0) -> dict:
    env_config = env_config or ManipEnvConfig()
    env = ManipEnv(env_config)
    master = np.random.default_rng(seed)
    finals = []
    successes = 0
    returns = []
    for _ in range(n_episodes):
        obs = env.reset(seed=int(master.integers(_SEED_CAP)))
        ep_return = 0.0
        while True:
            result = env.step(policy.act(obs))
            obs = result.observation
            ep_return += result.reward
            if result.done:
                finals.append(result.info["distance"])
                successes += int(result.info["success"])
                break
        returns.append(ep_return)
    summary = blank_summary()
    summary.update({
        "kind": "manip", "episodes": n_episodes,
        "success_rate": successes / n_episodes,
        "mean_final_distance": float(np.mean(finals)),
        "mean_return": float(np.mean(returns)),
    })
    return summary


def evaluate_manip_sweep(policy, base_config: ManipEnvConfig | None = None,
                         distances=MANIP_SWEEP_DISTANCES, episodes_per: int = 5,
                         seed: int = 0) -> dict:
    """Final reach error per target distance plus its distance correlation."""
    from dataclasses import replace
    base_config = base_config or ManipEnvConfig()
    per_distance = []
    for i, dist in enumerate(distances):
        cfg = replace(base_config, target_distance=float(dist))
        res = evaluate_manip(policy, cfg, episodes_per, seed + 1000 * i)
        per_distance.append({
            "distance": float(dist),
            "mean_final_error": res["mean_final_distance"],
            "success_rate": res["success_rate"],
        })
    xs = np.array([p["distance"] for p in per_distance])
    ys = np.array([p["mean_final_error"] for p in per_distance])
    corr = float(np.corrcoef(xs, ys)[0, 1])
    summary = blank_summary()
    summary.update({
        "kind": "manip-sweep", "episodes": episodes_per * len(xs),
        "per_distance": per_distance,
        "distance_error_correlation": corr,
        "mean_final_distance": float(ys.mean()),
        "success_rate": float(np.mean([p["success_rate"] for p in per_distance])),
    })
    return summary


def evaluate(policy, env_kind: str, n_episodes: int = 50, seed: int = 0,
             env_config=None) -> dict:
    if env_kind == "wheel":
        return evaluate_wheel(policy, env_config, n_episodes, seed)
    if env_kind == "steer":
        return evaluate_steer_grid(policy, env_config, n_episodes, seed)
    if env_kind == "manip":
        return evaluate_manip(policy, env_config, n_episodes, seed)
    raise ValueError(f"unknown env kind {env_kind!r}")

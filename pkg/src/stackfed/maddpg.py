"""Multi-agent deterministic actor-critic training for the pricing game.

Each agent (the server plus one agent per node) owns an actor over its own
observation window and a centralized critic that sees every agent's
observation and action, the standard recipe for deterministic multi-agent
policy gradients.  Actors squash to [0, 1] and rescale onto the action box,
so bid and period constraints hold by construction.  The loop is strictly
sequential and seeded end to end; two runs with the same config produce
bit-identical logs.
"""

from __future__ import annotations

import os
from collections import defaultdict
from dataclasses import dataclass, field

import numpy as np

from .env import StackelbergEnv
from .neural import (
    Gradients,
    NetworkParams,
    OptimizerState,
    backward,
    forward,
    init_network,
    init_optimizer,
    optimizer_step,
    save_params,
    soft_update,
)


@dataclass
class Transition:
    obs: dict[str, np.ndarray]
    actions: dict[str, np.ndarray]
    rewards: dict[str, float]
    next_obs: dict[str, np.ndarray]
    done: bool = False


class ReplayBuffer:
    """Bounded FIFO store with a seeded uniform sampler."""

    def __init__(self, capacity: int, seed: int = 0):
        if capacity < 1:
            raise ValueError("capacity must be >= 1")
        self.capacity = capacity
        self.rng = np.random.default_rng(seed)
        self._items: list[Transition] = []

    def __len__(self) -> int:
        return len(self._items)

    def push(self, transition: Transition) -> None:
        self._items.append(transition)
        if len(self._items) > self.capacity:
            self._items.pop(0)

    def sample(self, batch_size: int, rng: np.random.Generator | None = None) -> list[Transition]:
        """Uniform sample without replacement within the batch."""
        if batch_size > len(self._items):
            raise ValueError(f"cannot sample {batch_size} from buffer of {len(self._items)}")
        gen = self.rng if rng is None else rng
        idx = gen.choice(len(self._items), size=batch_size, replace=False)
        return [self._items[i] for i in idx]


@dataclass
class AgentBundle:
    name: str
    actor: NetworkParams
    critic: NetworkParams
    target_actor: NetworkParams
    target_critic: NetworkParams
    opt_actor: OptimizerState
    opt_critic: OptimizerState
    act_lo: np.ndarray
    act_hi: np.ndarray
    gamma: float
    soft_rate: float


@dataclass
class TrainConfig:
    episodes: int = 200
    batch_size: int = 64
    buffer_capacity: int = 100_000
    hidden: int = 64
    gamma: float = 0.95
    soft_rate: float = 0.01
    lr_actor: float = 1e-3
    lr_critic: float = 2e-3
    noise_start: float = 0.25
    noise_floor: float = 0.02
    noise_decay_episodes: int | None = None  # None: 80% of episodes
    warmup_steps: int = 256
    truncation_terminal: bool = False
    # Every eval_every episodes a noise-free rollout scores the current
    # policies; the best-scoring snapshot (by server reward) is kept and
    # returned alongside the final networks.  0 disables snapshotting.
    eval_every: int = 10
    seed: int = 0

    def noise_at(self, episode: int) -> float:
        horizon = self.noise_decay_episodes or max(int(0.8 * self.episodes), 1)
        frac = min(episode / horizon, 1.0)
        return self.noise_start + (self.noise_floor - self.noise_start) * frac


def scaled_action(bundle: AgentBundle, obs: np.ndarray) -> np.ndarray:
    """Deterministic policy output mapped onto the action box."""
    y = forward(bundle.actor, obs)
    return bundle.act_lo + (bundle.act_hi - bundle.act_lo) * y


def noisy_action(
    bundle: AgentBundle, obs: np.ndarray, sigma: float, rng: np.random.Generator
) -> np.ndarray:
    a = scaled_action(bundle, obs)
    span = bundle.act_hi - bundle.act_lo
    a = a + rng.normal(0.0, sigma, size=a.shape) * span
    return np.clip(a, bundle.act_lo, bundle.act_hi)


def build_agents(env: StackelbergEnv, config: TrainConfig) -> dict[str, AgentBundle]:
    names = env.agent_names
    obs_dims = {
        name: env.server_obs_dim() if name == "server" else env.node_obs_dim()
        for name in names
    }
    joint_dim = sum(obs_dims.values()) + sum(
        env.action_bounds(name)[0].shape[0] for name in names
    )
    bundles = {}
    seeds = np.random.SeedSequence(config.seed).spawn(len(names))
    for name, seq in zip(names, seeds):
        rng = np.random.default_rng(seq)
        lo, hi = env.action_bounds(name)
        actor = init_network([obs_dims[name], config.hidden, config.hidden, lo.shape[0]], rng, head="sigmoid")
        critic = init_network([joint_dim, config.hidden, config.hidden, 1], rng, head="identity")
        bundles[name] = AgentBundle(
            name=name,
            actor=actor,
            critic=critic,
            target_actor=actor.copy(),
            target_critic=critic.copy(),
            opt_actor=init_optimizer(actor, config.lr_actor),
            opt_critic=init_optimizer(critic, config.lr_critic),
            act_lo=lo,
            act_hi=hi,
            gamma=config.gamma,
            soft_rate=config.soft_rate,
        )
    return bundles


def _joint_arrays(
    batch: list[Transition], names: list[str]
) -> tuple[np.ndarray, np.ndarray, np.ndarray, dict[str, np.ndarray], np.ndarray, dict[str, np.ndarray]]:
    obs = {n: np.stack([tr.obs[n] for tr in batch]) for n in names}
    next_obs = {n: np.stack([tr.next_obs[n] for tr in batch]) for n in names}
    actions = np.concatenate([np.stack([tr.actions[n] for tr in batch]) for n in names], axis=1)
    joint_obs = np.concatenate([obs[n] for n in names], axis=1)
    joint_next_obs = np.concatenate([next_obs[n] for n in names], axis=1)
    terminal = np.array([1.0 if tr.done else 0.0 for tr in batch])
    return joint_obs, joint_next_obs, actions, obs, terminal, next_obs


def td_target(
    rewards: np.ndarray,
    joint_next_obs: np.ndarray,
    next_actions: np.ndarray,
    target_critic: NetworkParams,
    gamma: float,
    terminal: np.ndarray | None = None,
) -> np.ndarray:
    """Bootstrap target e + gamma * Q'(o', mu'(o')) per batch row."""
    q_next = forward(target_critic, np.concatenate([joint_next_obs, next_actions], axis=1))[:, 0]
    if terminal is None:
        terminal = np.zeros_like(rewards)
    return rewards + gamma * (1.0 - terminal) * q_next


def critic_update(bundle: AgentBundle, joint_input: np.ndarray, targets: np.ndarray) -> float:
    """One mean-squared-error step on the centralized critic.

    Returns the pre-update loss.
    """
    batch = joint_input.shape[0]
    pred = forward(bundle.critic, joint_input)[:, 0]
    loss = float(np.mean((targets - pred) ** 2))
    d_pred = (2.0 / batch) * (pred - targets)
    grads, _ = backward(bundle.critic, joint_input, d_pred[:, None])
    bundle.critic, bundle.opt_critic = optimizer_step(bundle.opt_critic, bundle.critic, grads)
    return loss


def actor_update(
    bundle: AgentBundle,
    own_obs: np.ndarray,
    joint_obs: np.ndarray,
    joint_actions: np.ndarray,
    act_offset: int,
) -> float:
    """One ascent step on the actor through the frozen critic.

    The batch's joint actions are used for the other agents; this agent's
    slice is replaced by its current policy output.  Returns the mean
    critic value at the policy actions; critic parameters are not touched.
    """
    batch = own_obs.shape[0]
    span = bundle.act_hi - bundle.act_lo
    y = forward(bundle.actor, own_obs)
    own_action = bundle.act_lo + span * y
    dim = own_action.shape[1]

    actions = joint_actions.copy()
    actions[:, act_offset : act_offset + dim] = own_action
    joint_input = np.concatenate([joint_obs, actions], axis=1)
    q = forward(bundle.critic, joint_input)
    objective = float(np.mean(q))

    d_q = np.full((batch, 1), 1.0 / batch)
    _, d_input = backward(bundle.critic, joint_input, d_q)
    d_action = d_input[:, joint_obs.shape[1] + act_offset : joint_obs.shape[1] + act_offset + dim]

    # ascend: feed the negated upstream gradient to the descent optimizer
    grads, _ = backward(bundle.actor, own_obs, -d_action * span)
    bundle.actor, bundle.opt_actor = optimizer_step(bundle.opt_actor, bundle.actor, grads)
    return objective


@dataclass
class EpisodeLog:
    episode: int
    agent: str
    mean_reward: float
    action_summary: str
    noise_scale: float


@dataclass
class TrainResult:
    log: list[EpisodeLog] = field(default_factory=list)
    bundles: dict[str, AgentBundle] = field(default_factory=dict)
    critic_losses: list[float] = field(default_factory=list)
    best_bundles: dict[str, AgentBundle] = field(default_factory=dict)
    best_episode: int = -1
    best_server_reward: float = -np.inf


def _snapshot(bundles: dict[str, AgentBundle]) -> dict[str, AgentBundle]:
    out = {}
    for name, b in bundles.items():
        out[name] = AgentBundle(
            name=b.name,
            actor=b.actor.copy(),
            critic=b.critic.copy(),
            target_actor=b.target_actor.copy(),
            target_critic=b.target_critic.copy(),
            opt_actor=b.opt_actor,
            opt_critic=b.opt_critic,
            act_lo=b.act_lo,
            act_hi=b.act_hi,
            gamma=b.gamma,
            soft_rate=b.soft_rate,
        )
    return out


def train(config: TrainConfig, env: StackelbergEnv) -> TrainResult:
    """Full training loop: explore, store, sample, update, soft-update."""
    names = env.agent_names
    bundles = build_agents(env, config)
    if config.episodes == 0:
        return TrainResult(log=[], bundles=bundles)

    rng = np.random.default_rng(np.random.SeedSequence(config.seed).spawn(1)[0])
    buffer = ReplayBuffer(config.buffer_capacity, seed=config.seed + 1)

    obs_dims = [env.server_obs_dim()] + [env.node_obs_dim()] * env.n
    act_dims = [env.n] + [1] * env.n
    act_offsets = np.cumsum([0] + act_dims[:-1]).tolist()

    result = TrainResult(bundles=bundles)
    for ep in range(config.episodes):
        sigma = config.noise_at(ep)
        obs = env.reset()
        rewards_acc: dict[str, list[float]] = defaultdict(list)
        actions_acc: dict[str, list[np.ndarray]] = defaultdict(list)
        done = False
        while not done:
            actions = {
                name: noisy_action(bundles[name], obs[name], sigma, rng) for name in names
            }
            node_vec = np.array([actions[f"node_{i}"][0] for i in range(env.n)])
            next_obs, rewards, done = env.step(actions["server"], node_vec)
            buffer.push(
                Transition(
                    obs=obs,
                    actions=actions,
                    rewards=rewards,
                    next_obs=next_obs,
                    done=done and config.truncation_terminal,
                )
            )
            for name in names:
                rewards_acc[name].append(rewards[name])
                actions_acc[name].append(actions[name])

            if len(buffer) >= max(config.batch_size, config.warmup_steps):
                batch = buffer.sample(config.batch_size)
                joint_obs, joint_next, joint_actions, own_obs, terminal, next_own = _joint_arrays(
                    batch, names
                )
                next_actions = np.concatenate(
                    [
                        bundles[n].act_lo
                        + (bundles[n].act_hi - bundles[n].act_lo)
                        * forward(bundles[n].target_actor, next_own[n])
                        for n in names
                    ],
                    axis=1,
                )
                for k, name in enumerate(names):
                    e = np.array([tr.rewards[name] for tr in batch])
                    y = td_target(
                        e, joint_next, next_actions, bundles[name].target_critic,
                        bundles[name].gamma, terminal,
                    )
                    loss = critic_update(
                        bundles[name], np.concatenate([joint_obs, joint_actions], axis=1), y
                    )
                    if name == "server":
                        result.critic_losses.append(loss)
                    actor_update(
                        bundles[name], own_obs[name], joint_obs, joint_actions, act_offsets[k]
                    )
                for name in names:
                    b = bundles[name]
                    b.target_actor = soft_update(b.target_actor, b.actor, b.soft_rate)
                    b.target_critic = soft_update(b.target_critic, b.critic, b.soft_rate)
            obs = next_obs

        for name in names:
            mean_action = np.mean(np.stack(actions_acc[name]), axis=0)
            result.log.append(
                EpisodeLog(
                    episode=ep,
                    agent=name,
                    mean_reward=float(np.mean(rewards_acc[name])),
                    action_summary=";".join(f"{v:.6g}" for v in mean_action),
                    noise_scale=sigma,
                )
            )

        ready = len(buffer) >= max(config.batch_size, config.warmup_steps)
        if config.eval_every and ready and (ep + 1) % config.eval_every == 0:
            greedy_rewards, _ = greedy_rollout(bundles, env)
            if greedy_rewards["server"] > result.best_server_reward:
                result.best_server_reward = greedy_rewards["server"]
                result.best_bundles = _snapshot(bundles)
                result.best_episode = ep

    if not result.best_bundles:
        result.best_bundles = _snapshot(bundles)
        result.best_episode = config.episodes - 1
    return result


def greedy_rollout(
    bundles: dict[str, AgentBundle], env: StackelbergEnv
) -> tuple[dict[str, float], dict[str, np.ndarray]]:
    """One noise-free episode; returns mean rewards and the final actions."""
    names = env.agent_names
    obs = env.reset()
    rewards_acc: dict[str, list[float]] = defaultdict(list)
    actions = {}
    done = False
    while not done:
        actions = {name: scaled_action(bundles[name], obs[name]) for name in names}
        node_vec = np.array([actions[f"node_{i}"][0] for i in range(env.n)])
        obs, rewards, done = env.step(actions["server"], node_vec)
        for name in names:
            rewards_acc[name].append(rewards[name])
    return {name: float(np.mean(vals)) for name, vals in rewards_acc.items()}, actions


def save_bundles(directory: str, bundles: dict[str, AgentBundle]) -> None:
    os.makedirs(directory, exist_ok=True)
    for name, b in bundles.items():
        save_params(os.path.join(directory, f"{name}.actor.txt"), b.actor)
        save_params(os.path.join(directory, f"{name}.critic.txt"), b.critic)

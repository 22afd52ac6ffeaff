"""Partially observable pricing environment for the learning agents.

One step is one pricing round: the server posts a bid vector (projected
onto the budget simplex), every node posts a refresh period, and each side
is paid its game utility.  Agents never see the current round's actions,
only a rolling window of the last ``history_len`` rounds, and a node's
window contains its own received bids plus the other nodes' past periods,
never anyone's private cost.
"""

from __future__ import annotations

import csv
from dataclasses import dataclass, field

import numpy as np

from .game import (
    NodeParams,
    ServerParams,
    StrategyProfile,
    TaskParams,
    node_utility,
    server_utility,
    solve_equilibrium,
)


def budget_projection(raw: np.ndarray, R_max: float) -> np.ndarray:
    """Uniformly rescale non-negative bids so they sum to at most R_max."""
    raw = np.asarray(raw, dtype=float)
    if np.any(raw < 0):
        raise ValueError("bids must be non-negative")
    total = float(np.sum(raw))
    if total <= R_max:
        return raw.copy()
    return raw * (R_max / total)


@dataclass
class EnvConfig:
    nodes: list[NodeParams]
    server: ServerParams
    task: TaskParams
    history_len: int = 3
    max_steps: int = 40
    # None: per-agent scales from the analytic equilibrium (|V*| for the
    # server, |U_i*| per node) so every agent's reward curve is O(1).
    # A scalar divides every reward uniformly.
    reward_scale: float | None = None
    node_sees_all_bids: bool = False
    r_max: tuple[float, ...] | None = None  # None: sigma/(a*t) per node

    def __post_init__(self) -> None:
        if self.history_len < 1:
            raise ValueError("history_len must be >= 1")
        if self.max_steps < 1:
            raise ValueError("max_steps must be >= 1")
        if not self.nodes:
            raise ValueError("need at least one node")


@dataclass
class EnvState:
    round_index: int = 0
    history: list[tuple[np.ndarray, np.ndarray]] = field(default_factory=list)


class StackelbergEnv:
    """Rolling-history environment with utility-aligned rewards."""

    def __init__(self, config: EnvConfig):
        self.config = config
        self.nodes = config.nodes
        self.server = config.server
        self.task = config.task
        self.n = len(config.nodes)
        if config.r_max is not None:
            self.r_max = np.asarray(config.r_max, dtype=float)
        else:
            # Bids above sigma/theta_min cannot shorten the period any further
            # (the follower is pinned at its floor), so the box ends there.
            self.r_max = np.array([n.sigma / n.theta_min for n in config.nodes])
        if config.reward_scale is not None:
            self.reward_scale = float(config.reward_scale)
            self.node_scales = np.full(self.n, float(config.reward_scale))
        else:
            eq = solve_equilibrium(config.nodes, config.server, config.task)
            self.reward_scale = max(abs(eq.server_utility), 1e-9)
            self.node_scales = np.maximum(np.abs(eq.node_utilities), 1e-9)
        self.state = EnvState()

    # -- observation layout -------------------------------------------------

    @property
    def agent_names(self) -> list[str]:
        return ["server"] + [f"node_{i}" for i in range(self.n)]

    def server_obs_dim(self) -> int:
        return self.config.history_len * 2 * self.n

    def node_obs_dim(self) -> int:
        bids = self.n if self.config.node_sees_all_bids else 1
        return self.config.history_len * (bids + self.n - 1)

    def action_bounds(self, agent: str) -> tuple[np.ndarray, np.ndarray]:
        """Box [lo, hi] per action dimension for one agent."""
        if agent == "server":
            return np.zeros(self.n), self.r_max.copy()
        i = int(agent.split("_")[1])
        node = self.nodes[i]
        return np.array([node.theta_min]), np.array([node.theta_max])

    def _observations(self) -> dict[str, np.ndarray]:
        """Rolling window, normalized to the unit box via the action bounds."""
        theta_lo = np.array([n.theta_min for n in self.nodes])
        theta_span = np.array([n.theta_max - n.theta_min for n in self.nodes])
        hist = [
            (r / self.r_max, (th - theta_lo) / theta_span)
            for r, th in self.state.history[-self.config.history_len :]
        ]
        server = np.concatenate([np.concatenate([r, th]) for r, th in hist])
        obs = {"server": server}
        for i in range(self.n):
            parts = []
            for r, th in hist:
                bids = r if self.config.node_sees_all_bids else r[i : i + 1]
                others = np.delete(th, i)
                parts.append(np.concatenate([bids, others]))
            obs[f"node_{i}"] = np.concatenate(parts)
        return obs

    # -- dynamics ------------------------------------------------------------

    def reset(self, seed: int | None = None) -> dict[str, np.ndarray]:
        """Fill the window with a neutral mid-range profile.

        The warm-up profile is deterministic (box midpoints), so resets
        with any seed produce identical observations; the seed parameter
        exists for interface symmetry with stochastic environments.
        """
        del seed
        r_mid = 0.5 * self.r_max
        theta_mid = np.array(
            [0.5 * (n.theta_min + n.theta_max) for n in self.nodes]
        )
        self.state = EnvState(
            round_index=0,
            history=[
                (r_mid.copy(), theta_mid.copy())
                for _ in range(self.config.history_len)
            ],
        )
        return self._observations()

    def step(
        self, server_action: np.ndarray, node_actions: np.ndarray
    ) -> tuple[dict[str, np.ndarray], dict[str, float], bool]:
        server_action = np.asarray(server_action, dtype=float)
        node_actions = np.asarray(node_actions, dtype=float)
        if server_action.shape != (self.n,) or node_actions.shape != (self.n,):
            raise ValueError("action vectors must have one entry per node")
        if not (np.all(np.isfinite(server_action)) and np.all(np.isfinite(node_actions))):
            raise ValueError("actions must be finite")
        if np.any(server_action < -1e-12) or np.any(server_action > self.r_max + 1e-9):
            raise ValueError("server bids outside [0, r_max]")
        lo = np.array([n.theta_min for n in self.nodes])
        hi = np.array([n.theta_max for n in self.nodes])
        if np.any(node_actions < lo - 1e-9) or np.any(node_actions > hi + 1e-9):
            raise ValueError("node periods outside bounds")
        node_actions = np.clip(node_actions, lo, hi)
        server_action = np.clip(server_action, 0.0, self.r_max)

        bids = budget_projection(server_action, self.server.R_max)
        profile = StrategyProfile(r=bids, theta=node_actions)

        rewards = {
            "server": server_utility(profile, self.nodes, self.server, self.task)
            / self.reward_scale
        }
        for i, node in enumerate(self.nodes):
            rewards[f"node_{i}"] = (
                node_utility(float(bids[i]), float(node_actions[i]), node.sigma)
                / self.node_scales[i]
            )

        self.state.history.append((bids.copy(), node_actions.copy()))
        if len(self.state.history) > self.config.history_len:
            self.state.history.pop(0)
        self.state.round_index += 1
        done = self.state.round_index >= self.config.max_steps
        return self._observations(), rewards, done


def write_trace(path: str, rows: list[dict]) -> None:
    """Episode trace CSV: (episode, step, agent, action_0.., reward)."""
    width = max((len(row["action"]) for row in rows), default=0)
    headers = ["episode", "step", "agent"] + [f"action_{k}" for k in range(width)] + ["reward"]
    with open(path, "w", newline="") as fh:
        writer = csv.writer(fh)
        writer.writerow(headers)
        for row in rows:
            action = list(row["action"]) + [""] * (width - len(row["action"]))
            writer.writerow(
                [row["episode"], row["step"], row["agent"]]
                + [f"{a:.6g}" if a != "" else "" for a in action]
                + [f"{row['reward']:.6g}"]
            )

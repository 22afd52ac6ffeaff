"""Brute-force reference computations.

Everything here enumerates instead of using the analytic machinery, so the
closed-form solvers have something independent to be checked against.  The
grids are fixed and documented (period step 1e-2, bid step 1e-3 unless a
caller overrides them) to keep test runs reproducible.
"""

from __future__ import annotations

import itertools

import numpy as np

from .aoi import CycleParams, average_aoi, average_service_latency
from .game import (
    NodeParams,
    R_GRID_STEP,
    ServerParams,
    StrategyProfile,
    TaskParams,
    THETA_GRID_STEP,
    _node_solution,
    _reduced_value,
    server_utility,
)


def best_response_grid(node: NodeParams, r: float, n_points: int = 10_000) -> tuple[float, float]:
    """Follower's best period by exhaustive search on a dense grid."""
    grid = np.linspace(node.theta_min, node.theta_max, n_points)
    utilities = r * np.log(1.0 / grid) - node.sigma / grid
    k = int(np.argmax(utilities))
    return float(grid[k]), float(utilities[k])


def equilibrium_grid_search(
    node: NodeParams,
    server: ServerParams,
    task: TaskParams,
    r_step: float = R_GRID_STEP,
    theta_step: float = THETA_GRID_STEP,
) -> tuple[float, float, float]:
    """Single-node leader-follower optimum by joint grid enumeration.

    For every bid on the feasible interval the follower's period is the
    grid argmax of its utility over [theta_min, theta_max]; the bid
    maximizing the resulting server value wins.  Grid responses violating
    the age/latency caps are discarded.  Returns (r, theta, value).
    """
    sol = _node_solution(node, server, task)
    r_grid = np.arange(sol.r_lo, sol.r_hi + r_step, r_step)
    r_grid = r_grid[(r_grid >= sol.r_lo) & (r_grid <= sol.r_hi)]
    theta_grid = np.arange(node.theta_min, node.theta_max + theta_step, theta_step)
    theta_grid = theta_grid[theta_grid <= node.theta_max]

    # follower: argmax of -r*ln(theta) - sigma/theta for each bid
    utilities = -np.outer(r_grid, np.log(theta_grid)) - node.sigma / theta_grid[None, :]
    responses = theta_grid[np.argmax(utilities, axis=1)]

    gap = responses - node.a * task.t
    aoi = task.t * responses / gap + (task.t**2 / gap) * (node.a**2 - node.a) / 2.0
    lat = (
        gap**3 / (2.0 * task.t * responses)
        + 3.0 * gap**2 / (2.0 * responses)
        + node.a * task.t**2 / responses
    )
    quality = (
        server.rho
        * task.T
        * node.d
        * gap
        / (responses * (task.t * responses + task.t**2 * (node.a**2 - node.a) / 2.0))
    )
    sat = server.tau * quality - server.lam * lat
    values = server.beta * sat - r_grid * np.log(1.0 / responses)
    feasible = (aoi <= server.A_max) & (lat <= server.E_max)
    values = np.where(feasible, values, -np.inf)

    k = int(np.argmax(values))
    return float(r_grid[k]), float(responses[k]), float(values[k])


def budget_grid_search_3(
    nodes: list[NodeParams],
    server: ServerParams,
    task: TaskParams,
    step: float = 1e-2,
) -> tuple[np.ndarray, float]:
    """Three-node budgeted allocation by exhaustive 3-D grid enumeration."""
    if len(nodes) != 3:
        raise ValueError("this oracle is fixed at three nodes")
    grids, values = [], []
    for node in nodes:
        sol = _node_solution(node, server, task)
        g = np.arange(sol.r_lo, sol.r_hi + step, step)
        g = g[(g >= sol.r_lo) & (g <= sol.r_hi)]
        grids.append(g)
        values.append(_reduced_value(g, node.sigma, node.a, node.d, server, task))

    total = (
        values[0][:, None, None]
        + values[1][None, :, None]
        + values[2][None, None, :]
    )
    spend = (
        grids[0][:, None, None]
        + grids[1][None, :, None]
        + grids[2][None, None, :]
    )
    total = np.where(spend <= server.R_max, total, -np.inf)
    flat = int(np.argmax(total))
    i, j, k = np.unravel_index(flat, total.shape)
    bids = np.array([grids[0][i], grids[1][j], grids[2][k]])
    return bids, float(total[i, j, k])


def select_exhaustive(
    nodes: list[NodeParams],
    n: int,
    server: ServerParams,
    task: TaskParams,
) -> tuple[tuple[int, ...], float]:
    """Best size-n subset by full enumeration (desk scale only)."""
    from .game import allocate_budget

    best_subset, best_value = None, -np.inf
    for subset in itertools.combinations(range(len(nodes)), n):
        sub_nodes = [nodes[i] for i in subset]
        profile, _ = allocate_budget(sub_nodes, server, task)
        v = server_utility(profile, sub_nodes, server, task)
        if v > best_value + 1e-12:
            best_subset, best_value = subset, v
    return best_subset, float(best_value)


def symbolic_slot_aoi(c: int, a: int, t: float) -> float:
    """Closed form of the slot-model age: [c + 1 + (a-1)(a+2)/2] * t/(c+a)."""
    return (c + 1 + (a - 1) * (a + 2) / 2.0) * t / (c + a)


def symbolic_slot_latency(c: int, a: int, t: float) -> float:
    """Closed form of the slot-model delay: [c(c+3)/2 + a] * t/(c+a)."""
    return (c * (c + 3) / 2.0 + a) * t / (c + a)

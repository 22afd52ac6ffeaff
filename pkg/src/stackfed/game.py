"""Leader-follower pricing game between a rewarding server and caching nodes.

The server (leader) posts a per-node unit bid r_i; each node (follower)
answers with a refresh period theta_i.  Node payoff is the logarithmic
reward r*ln(1/theta) minus the maintenance cost sigma/theta, so the best
response is sigma/r clamped to the node's period bounds.  Substituting the
best response turns the leader's problem into independent one-dimensional
concave maximizations coupled only through the budget sum(r_i) <= R_max,
which is resolved by water-filling on a common marginal value.

Feasibility (maximum tolerable age and service latency) is translated into
a period interval [theta_lo, theta_hi] and from there into the bid interval
[sigma/theta_hi, sigma/theta_lo]; the leader optimizes over that interval,
so the induced response sigma/r is always interior and constraint-feasible.
"""

from __future__ import annotations

import functools
import math
from dataclasses import dataclass, field

import numpy as np

from .aoi import (
    CycleParams,
    SatisfactionParams,
    average_aoi,
    average_service_latency,
    model_quality,
)
from .gss import golden_section_max

# Documented grid steps used by oracles and deviation checks.
THETA_GRID_STEP = 1e-2
R_GRID_STEP = 1e-3

_FEAS_SCAN_POINTS = 512
_BISECT_ITERS = 90


class InfeasibleError(ValueError):
    """A node (or the joint budget) admits no feasible strategy.

    ``reason`` names the violated constraint: "aoi", "latency",
    "aoi+latency" or "budget".
    """

    def __init__(self, reason: str, detail: str = ""):
        self.reason = reason
        super().__init__(f"infeasible ({reason})" + (f": {detail}" if detail else ""))


@dataclass(frozen=True)
class TaskParams:
    """Task-level timing: duration T, slot length t, federated rounds K."""

    T: float = 10.0
    t: float = 1.0
    K: int = 1

    def __post_init__(self) -> None:
        if self.T <= 0 or self.t <= 0:
            raise ValueError("T and t must be > 0")
        if self.K < 1:
            raise ValueError("K must be >= 1")


@dataclass(frozen=True)
class NodeParams:
    """One node's private economics and cycle structure.

    sigma:     unit maintenance cost (> 0)
    a:         idle/service slots per cycle (integer >= 1)
    d:         samples collected per slot
    theta_min: lower period bound (must exceed a*t of the task in use)
    theta_max: upper period bound
    """

    sigma: float
    a: int
    d: float
    theta_min: float
    theta_max: float

    def __post_init__(self) -> None:
        if self.sigma <= 0:
            raise ValueError(f"sigma must be > 0, got {self.sigma}")
        if self.a < 1 or not float(self.a).is_integer():
            raise ValueError(f"a must be an integer >= 1, got {self.a}")
        if self.d <= 0:
            raise ValueError(f"d must be > 0, got {self.d}")
        if not (0 < self.theta_min < self.theta_max):
            raise ValueError(
                f"need 0 < theta_min < theta_max, got [{self.theta_min}, {self.theta_max}]"
            )


@dataclass(frozen=True)
class ServerParams:
    """Server-side conversion coefficients and constraints.

    tau, lam, rho: satisfaction conversion parameters
    beta:          profit per unit satisfaction (> 0)
    R_max:         total bid budget (> 0)
    A_max:         maximum tolerable average age
    E_max:         maximum tolerable average service latency
    """

    tau: float
    lam: float
    rho: float
    beta: float
    R_max: float
    A_max: float = math.inf
    E_max: float = math.inf

    def __post_init__(self) -> None:
        if self.beta < 0:
            raise ValueError("beta must be >= 0")
        if self.R_max <= 0:
            raise ValueError("R_max must be > 0")
        if self.A_max <= 0 or self.E_max <= 0:
            raise ValueError("A_max and E_max must be > 0")


@dataclass
class StrategyProfile:
    """Joint decision: per-node unit bids r and refresh periods theta."""

    r: np.ndarray
    theta: np.ndarray

    def __post_init__(self) -> None:
        self.r = np.asarray(self.r, dtype=float)
        self.theta = np.asarray(self.theta, dtype=float)
        if self.r.shape != self.theta.shape:
            raise ValueError("r and theta must have matching length")


@dataclass
class AllocationReport:
    """Bookkeeping from the budget allocation."""

    mu: float
    excluded: tuple[int, ...]
    reasons: dict[int, str]
    binding: tuple[tuple[str, ...], ...]
    spent: float


@dataclass
class Equilibrium:
    profile: StrategyProfile
    node_utilities: np.ndarray
    server_utility: float
    kkt_multiplier: float
    binding_constraints: tuple[tuple[str, ...], ...]


@dataclass
class VerificationResult:
    accepted: bool
    witness: dict | None = None


# ---------------------------------------------------------------------------
# follower side
# ---------------------------------------------------------------------------


def node_reward(r: float, theta: float) -> float:
    """Payment r * ln(1/theta).  Negative whenever theta > 1."""
    if theta <= 0:
        raise ValueError(f"theta must be > 0, got {theta}")
    if r < 0:
        raise ValueError(f"r must be >= 0, got {r}")
    return r * math.log(1.0 / theta)


def node_cost(sigma: float, theta: float) -> float:
    """Cycle maintenance cost sigma / theta."""
    if theta <= 0:
        raise ValueError(f"theta must be > 0, got {theta}")
    if sigma <= 0:
        raise ValueError(f"sigma must be > 0, got {sigma}")
    return sigma / theta


def node_utility(r: float, theta: float, sigma: float) -> float:
    return node_reward(r, theta) - node_cost(sigma, theta)


def node_utility_derivatives(r: float, theta: float, sigma: float) -> tuple[float, float]:
    """d/dtheta and d^2/dtheta^2 of the node utility.

    first  = sigma/theta^2 - r/theta  (zero at theta = sigma/r)
    second = (r*theta - 2*sigma)/theta^3
    """
    first = sigma / theta**2 - r / theta
    second = (r * theta - 2.0 * sigma) / theta**3
    return first, second


def best_response(node: NodeParams, r: float) -> float:
    """Follower's optimal period: clamp(sigma/r, theta_min, theta_max).

    r = 0 means no reward at all, so the node minimizes cost at theta_max.
    """
    if r < 0:
        raise ValueError(f"r must be >= 0, got {r}")
    if r == 0.0:
        return node.theta_max
    return min(max(node.sigma / r, node.theta_min), node.theta_max)


# ---------------------------------------------------------------------------
# shared helpers
# ---------------------------------------------------------------------------


def cycle_for(node: NodeParams, theta: float, task: TaskParams) -> CycleParams:
    return CycleParams(theta=theta, a=node.a, t=task.t, T=task.T, d=node.d)


def sat_params(server: ServerParams) -> SatisfactionParams:
    return SatisfactionParams(tau=server.tau, lam=server.lam, rho=server.rho)


def check_node(node: NodeParams, task: TaskParams) -> None:
    if node.theta_min <= node.a * task.t:
        raise ValueError(
            f"theta_min={node.theta_min} must exceed a*t={node.a * task.t}"
        )


def node_satisfaction(node: NodeParams, theta: float, server: ServerParams, task: TaskParams) -> float:
    p = cycle_for(node, theta, task)
    s = sat_params(server)
    return server.tau * model_quality(p, s) - server.lam * average_service_latency(p)


# ---------------------------------------------------------------------------
# leader side
# ---------------------------------------------------------------------------


def server_utility(
    profile: StrategyProfile,
    nodes: list[NodeParams],
    server: ServerParams,
    task: TaskParams,
) -> float:
    """Sum over nodes of beta * satisfaction - payment."""
    if len(nodes) != len(profile.r):
        raise ValueError("profile length does not match node count")
    total = 0.0
    for node, r, theta in zip(nodes, profile.r, profile.theta):
        g = node_satisfaction(node, float(theta), server, task)
        total += server.beta * g - node_reward(float(r), float(theta))
    return total


def _reduced_value(r, sigma, a, d, server: ServerParams, task: TaskParams):
    """Leader objective after substituting theta = sigma/r (broadcasts)."""
    t, T = task.t, task.T
    quality = (
        server.beta
        * server.tau
        * server.rho
        * T
        * d
        * (sigma - a * t * r)
        / (sigma * (t * sigma / r + t**2 * (a**2 - a) / 2.0))
    )
    gap = sigma / r - a * t
    latency = (
        server.beta
        * server.lam
        * (gap**3 + 3.0 * t * gap**2 + 2.0 * a * t**3)
        * r
        / (2.0 * t * sigma)
    )
    return quality - latency - r * np.log(r / sigma)


def _reduced_derivatives(r, sigma, a, d, server: ServerParams, task: TaskParams):
    """Closed-form first/second derivatives of the reduced objective."""
    t, T = task.t, task.T
    w = (a**2 - a) * t * r + 2.0 * sigma
    first = (
        -2.0
        * T
        * server.rho
        * d
        * server.tau
        * server.beta
        * ((a**3 - a**2) * t**2 * r**2 + 4.0 * a * sigma * t * r - 2.0 * sigma**2)
        / (sigma * t * w**2)
        + server.lam
        * server.beta
        * ((a**3 - 3.0 * a**2 - 2.0 * a) * t**3 * r**3 + (3.0 - 3.0 * a) * sigma**2 * t * r + 2.0 * sigma**3)
        / (2.0 * sigma * t * r**3)
        - np.log(r / sigma)
        - 1.0
    )
    lam_cap = sigma - (a - 1.0) * t * r
    second = (
        -8.0 * T * a * (a + 1.0) * server.rho * d * server.tau * server.beta * sigma / w**3
        - 3.0 * server.lam * sigma * server.beta * lam_cap / (t * r**4)
        - 1.0 / r
    )
    return first, second


def _check_regime(r: float, node: NodeParams, task: TaskParams) -> None:
    cap = node.sigma / (node.a * task.t)
    if not (0.0 < r < cap):
        raise ValueError(f"r={r} outside the regime (0, sigma/(a*t)) = (0, {cap})")


def reduced_server_utility(
    r: float, node: NodeParams, server: ServerParams, task: TaskParams
) -> float:
    """Per-node leader objective with the interior response substituted in.

    Valid on 0 < r < sigma/(a*t) so that sigma/r stays above a*t.
    """
    _check_regime(r, node, task)
    return float(_reduced_value(r, node.sigma, node.a, node.d, server, task))


def reduced_server_utility_derivatives(
    r: float, node: NodeParams, server: ServerParams, task: TaskParams
) -> tuple[float, float]:
    """Closed-form d/dr and d^2/dr^2 of the reduced leader objective.

    The second derivative is negative throughout the regime; the
    concavity proof assumes a > 1, but the formulas remain exact for
    a = 1 as well.
    """
    _check_regime(r, node, task)
    first, second = _reduced_derivatives(r, node.sigma, node.a, node.d, server, task)
    return float(first), float(second)


# ---------------------------------------------------------------------------
# feasibility translation and per-node optimum
# ---------------------------------------------------------------------------


def feasible_theta_interval(
    node: NodeParams, server: ServerParams, task: TaskParams
) -> tuple[float, float, str, str]:
    """Period interval satisfying the age and latency caps.

    Returns (theta_lo, theta_hi, lo_reason, hi_reason) where the reasons
    are "bounds", "aoi" or "latency" naming what pins each endpoint.
    Raises InfeasibleError when the interval is empty.

    The age is decreasing in theta (lower bound) and the latency sublevel
    set is an interval (single dip, then growth), so the feasible set is
    an interval and grid-scan plus bisection recovers it.
    """
    check_node(node, task)

    def feasible(theta: float) -> bool:
        p = cycle_for(node, theta, task)
        return (
            average_aoi(p) <= server.A_max
            and average_service_latency(p) <= server.E_max
        )

    grid = np.linspace(node.theta_min, node.theta_max, _FEAS_SCAN_POINTS)
    ok = np.array([feasible(th) for th in grid])
    if not ok.any():
        aoi_all = all(
            average_aoi(cycle_for(node, th, task)) > server.A_max for th in grid
        )
        lat_all = all(
            average_service_latency(cycle_for(node, th, task)) > server.E_max for th in grid
        )
        if aoi_all and not lat_all:
            raise InfeasibleError("aoi", f"A > A_max={server.A_max} on all of [{node.theta_min}, {node.theta_max}]")
        if lat_all and not aoi_all:
            raise InfeasibleError("latency", f"E > E_max={server.E_max} on all of [{node.theta_min}, {node.theta_max}]")
        raise InfeasibleError("aoi+latency", "no period satisfies both caps")

    idx = np.nonzero(ok)[0]
    lo_i, hi_i = int(idx[0]), int(idx[-1])

    theta_lo, lo_reason = grid[lo_i], "bounds"
    if lo_i > 0:
        bad, good = grid[lo_i - 1], grid[lo_i]
        for _ in range(_BISECT_ITERS):
            mid = 0.5 * (bad + good)
            if feasible(mid):
                good = mid
            else:
                bad = mid
        theta_lo = good
        p = cycle_for(node, bad, task)
        lo_reason = "aoi" if average_aoi(p) > server.A_max else "latency"

    theta_hi, hi_reason = grid[hi_i], "bounds"
    if hi_i < len(grid) - 1:
        good, bad = grid[hi_i], grid[hi_i + 1]
        for _ in range(_BISECT_ITERS):
            mid = 0.5 * (good + bad)
            if feasible(mid):
                good = mid
            else:
                bad = mid
        theta_hi = good
        p = cycle_for(node, bad, task)
        hi_reason = "latency" if average_service_latency(p) > server.E_max else "aoi"

    return float(theta_lo), float(theta_hi), lo_reason, hi_reason


@dataclass(frozen=True)
class _NodeSolution:
    r_lo: float
    r_hi: float
    r_star: float
    value: float
    lo_reason: str  # pins r_hi (theta_lo side)
    hi_reason: str  # pins r_lo (theta_hi side)


@functools.lru_cache(maxsize=16384)
def _node_solution(node: NodeParams, server: ServerParams, task: TaskParams) -> _NodeSolution:
    theta_lo, theta_hi, lo_reason, hi_reason = feasible_theta_interval(node, server, task)
    r_lo = node.sigma / theta_hi
    r_hi = node.sigma / theta_lo

    def f(r: float) -> float:
        return float(_reduced_value(r, node.sigma, node.a, node.d, server, task))

    if node.a == 1:
        # Outside the concavity proof's regime: bracket on a coarse grid
        # first, then refine with golden-section inside the bracket.
        grid = np.linspace(r_lo, r_hi, 257)
        vals = _reduced_value(grid, node.sigma, node.a, node.d, server, task)
        k = int(np.argmax(vals))
        lo = grid[max(k - 1, 0)]
        hi = grid[min(k + 1, len(grid) - 1)]
        r_star, value = golden_section_max(f, float(lo), float(hi))
    else:
        r_star, value = golden_section_max(f, r_lo, r_hi)
    return _NodeSolution(r_lo, r_hi, r_star, value, lo_reason, hi_reason)


def optimize_unit_reward(
    node: NodeParams,
    server: ServerParams,
    task: TaskParams,
    rng: np.random.Generator | None = None,
) -> float:
    """Best unit bid for a single node, ignoring the cross-node budget.

    Maximizes the reduced objective over the feasible bid interval
    [sigma/theta_hi, sigma/theta_lo].  A Generator, when given, splits the
    bracket at a random interior point and solves both halves; the result
    is identical for the concave objective and serves as a multi-start.
    """
    sol = _node_solution(node, server, task)
    if rng is None:
        return sol.r_star

    def f(r: float) -> float:
        return float(_reduced_value(r, node.sigma, node.a, node.d, server, task))

    split = sol.r_lo + (sol.r_hi - sol.r_lo) * float(rng.uniform(0.05, 0.95))
    x1, v1 = golden_section_max(f, sol.r_lo, split)
    x2, v2 = golden_section_max(f, split, sol.r_hi)
    return x1 if v1 >= v2 else x2


# ---------------------------------------------------------------------------
# budget coupling
# ---------------------------------------------------------------------------


def _waterfill_bids(
    sols: list[_NodeSolution],
    nodes: list[NodeParams],
    server: ServerParams,
    task: TaskParams,
    budget: float,
) -> tuple[np.ndarray, float]:
    """Common-marginal allocation: interior bids satisfy dV/dr = mu."""
    sigma = np.array([n.sigma for n in nodes])
    a = np.array([float(n.a) for n in nodes])
    d = np.array([n.d for n in nodes])
    r_lo = np.array([s.r_lo for s in sols])
    r_hi = np.array([s.r_star for s in sols])  # never allocate above the optimum

    def bids_at(mu: float) -> np.ndarray:
        lo = r_lo.copy()
        hi = r_hi.copy()
        g_lo, _ = _reduced_derivatives(lo, sigma, a, d, server, task)
        g_hi, _ = _reduced_derivatives(hi, sigma, a, d, server, task)
        out = np.where(g_lo <= mu, lo, np.where(g_hi >= mu, hi, np.nan))
        active = np.isnan(out)
        lo_a, hi_a = lo[active], hi[active]
        for _ in range(_BISECT_ITERS):
            mid = 0.5 * (lo_a + hi_a)
            g_mid, _ = _reduced_derivatives(mid, sigma[active], a[active], d[active], server, task)
            take_hi = g_mid > mu
            lo_a = np.where(take_hi, mid, lo_a)
            hi_a = np.where(take_hi, hi_a, mid)
        out[active] = 0.5 * (lo_a + hi_a)
        return out

    if float(np.sum(r_lo)) > budget + 1e-9:
        raise InfeasibleError(
            "budget",
            f"minimum feasible bids sum to {float(np.sum(r_lo)):.6g} > R_max={budget}",
        )

    g_lo_all, _ = _reduced_derivatives(r_lo, sigma, a, d, server, task)
    mu_lo, mu_hi = 0.0, float(np.max(g_lo_all)) + 1.0
    for _ in range(_BISECT_ITERS):
        mu = 0.5 * (mu_lo + mu_hi)
        spent = float(np.sum(bids_at(mu)))
        if spent > budget:
            mu_lo = mu
        else:
            mu_hi = mu
    mu = mu_hi
    bids = bids_at(mu)
    # Polish the budget residual by scaling the interior bids.
    spent = float(np.sum(bids))
    if spent > 0 and abs(spent - budget) > 1e-8:
        interior = (bids > r_lo + 1e-12) & (bids < r_hi - 1e-12)
        slack = budget - spent
        if interior.any():
            bids[interior] += slack * bids[interior] / float(np.sum(bids[interior]))
            bids = np.minimum(np.maximum(bids, r_lo), r_hi)
    return bids, mu


def allocate_budget(
    nodes: list[NodeParams],
    server: ServerParams,
    task: TaskParams,
    rng: np.random.Generator | None = None,
) -> tuple[StrategyProfile, AllocationReport]:
    """Spread the bid budget over nodes.

    Unconstrained per-node optima are returned when they fit.  Otherwise
    every interior bid shares a common marginal value mu found by
    bisection, with the budget met to 1e-8.  Nodes with an empty feasible
    interval are excluded (bid 0, period theta_max) and reported.
    """
    sols: dict[int, _NodeSolution] = {}
    reasons: dict[int, str] = {}
    for i, node in enumerate(nodes):
        try:
            sols[i] = _node_solution(node, server, task)
        except InfeasibleError as err:
            reasons[i] = err.reason

    n = len(nodes)
    r = np.zeros(n)
    binding: list[tuple[str, ...]] = [() for _ in range(n)]
    included = sorted(sols)
    mu = 0.0

    if included:
        if rng is not None:
            stars = np.array(
                [optimize_unit_reward(nodes[i], server, task, rng) for i in included]
            )
        else:
            stars = np.array([sols[i].r_star for i in included])
        if float(np.sum(stars)) <= server.R_max:
            for k, i in enumerate(included):
                r[i] = stars[k]
        else:
            sub_nodes = [nodes[i] for i in included]
            sub_sols = [sols[i] for i in included]
            bids, mu = _waterfill_bids(sub_sols, sub_nodes, server, task, server.R_max)
            for k, i in enumerate(included):
                r[i] = bids[k]

    theta = np.array(
        [best_response(node, float(r[i])) for i, node in enumerate(nodes)]
    )
    for i in included:
        sol = sols[i]
        flags: list[str] = []
        if mu > 0 and r[i] < sol.r_star - 1e-10:
            flags.append("budget")
        if abs(r[i] - sol.r_lo) <= 1e-10:
            flags.append(sol.hi_reason)
        if abs(r[i] - sol.r_hi) <= 1e-10:
            flags.append(sol.lo_reason)
        binding[i] = tuple(flags)
    for i in reasons:
        binding[i] = (f"excluded:{reasons[i]}",)

    profile = StrategyProfile(r=r, theta=theta)
    report = AllocationReport(
        mu=mu,
        excluded=tuple(sorted(reasons)),
        reasons=reasons,
        binding=tuple(binding),
        spent=float(np.sum(r)),
    )
    return profile, report


def select_nodes(
    nodes: list[NodeParams],
    n: int,
    server: ServerParams,
    task: TaskParams,
) -> tuple[tuple[int, ...], StrategyProfile]:
    """Greedy subset of size n by marginal server utility under allocation.

    Ties break toward the lowest node index.  Returns the chosen indices
    (in pick order) and the allocation profile over those nodes in index
    order.
    """
    if not (1 <= n <= len(nodes)):
        raise ValueError(f"need 1 <= n <= {len(nodes)}, got {n}")
    chosen: list[int] = []
    remaining = list(range(len(nodes)))
    for _ in range(n):
        best_i, best_v = None, -math.inf
        for i in remaining:
            subset = sorted(chosen + [i])
            sub_nodes = [nodes[j] for j in subset]
            profile, _ = allocate_budget(sub_nodes, server, task)
            v = server_utility(profile, sub_nodes, server, task)
            if v > best_v + 1e-12:
                best_i, best_v = i, v
        chosen.append(best_i)
        remaining.remove(best_i)
    subset = sorted(chosen)
    sub_nodes = [nodes[j] for j in subset]
    profile, _ = allocate_budget(sub_nodes, server, task)
    return tuple(subset), profile


def solve_equilibrium(
    nodes: list[NodeParams],
    server: ServerParams,
    task: TaskParams,
    seed: int | None = None,
) -> Equilibrium:
    """Budget allocation for the leader, best responses for the followers."""
    rng = np.random.default_rng(seed) if seed is not None else None
    profile, report = allocate_budget(nodes, server, task, rng=rng)
    utilities = np.array(
        [
            node_utility(float(r), float(th), node.sigma)
            for node, r, th in zip(nodes, profile.r, profile.theta)
        ]
    )
    v = server_utility(profile, nodes, server, task)
    return Equilibrium(
        profile=profile,
        node_utilities=utilities,
        server_utility=v,
        kkt_multiplier=report.mu,
        binding_constraints=report.binding,
    )


def verify_equilibrium(
    eq: Equilibrium,
    nodes: list[NodeParams],
    server: ServerParams,
    task: TaskParams,
    eps: float = 1e-6,
) -> VerificationResult:
    """Grid check of the equilibrium conditions.

    Follower side: no node may gain more than eps at any grid period in
    its bounds (step THETA_GRID_STEP), with its bid fixed.  Leader side:
    no per-node bid deviation on the feasible interval (step R_GRID_STEP,
    respecting the budget) may gain more than eps, where the follower
    re-responds to the deviation (backward-induction reading).
    """
    r = eq.profile.r
    theta = eq.profile.theta
    spent = float(np.sum(r))

    for i, node in enumerate(nodes):
        grid = np.arange(node.theta_min, node.theta_max + THETA_GRID_STEP, THETA_GRID_STEP)
        grid = grid[grid <= node.theta_max]
        base = node_utility(float(r[i]), float(theta[i]), node.sigma)
        vals = float(r[i]) * np.log(1.0 / grid) - node.sigma / grid
        k = int(np.argmax(vals))
        if vals[k] > base + eps:
            return VerificationResult(
                False,
                {
                    "agent": f"node_{i}",
                    "deviation_theta": float(grid[k]),
                    "gain": float(vals[k] - base),
                },
            )

    for i, node in enumerate(nodes):
        try:
            sol = _node_solution(node, server, task)
        except InfeasibleError:
            continue
        headroom = server.R_max - (spent - float(r[i]))
        hi = min(sol.r_hi, headroom)
        if hi <= sol.r_lo:
            continue
        grid = np.arange(sol.r_lo, hi + R_GRID_STEP, R_GRID_STEP)
        grid = grid[(grid >= sol.r_lo) & (grid <= hi)]
        if len(grid) == 0:
            continue
        vals = _reduced_value(grid, node.sigma, node.a, node.d, server, task)
        base_theta = best_response(node, float(r[i]))
        base = server.beta * node_satisfaction(node, base_theta, server, task) - node_reward(
            float(r[i]), base_theta
        )
        k = int(np.argmax(vals))
        if vals[k] > base + eps:
            return VerificationResult(
                False,
                {
                    "agent": "server",
                    "node": i,
                    "deviation_r": float(grid[k]),
                    "gain": float(vals[k] - base),
                },
            )

    return VerificationResult(True, None)


# ---------------------------------------------------------------------------
# baseline pricing strategies
# ---------------------------------------------------------------------------

BASELINE_KINDS = ("quality_first", "price_first", "random_pricing", "random_subset")


def quality_peak_theta(node: NodeParams, task: TaskParams) -> float:
    """Period maximizing model quality: a*t + t*sqrt(a^2 + a*(a^2-a)/2)."""
    a, t = node.a, task.t
    return a * t + t * math.sqrt(a**2 + a * (a**2 - a) / 2.0)


def baseline_strategy(
    kind: str,
    nodes: list[NodeParams],
    server: ServerParams,
    task: TaskParams,
    seed: int,
    n: int | None = None,
) -> StrategyProfile:
    """Reference pricing schemes the optimized mechanism is compared against.

    quality_first:  rank by quality at the quality-peak period, fund each
                    selected node at the bid inducing that period.
    price_first:    rank by ascending sigma, fund at the cheapest feasible
                    bid sigma/theta_hi.
    random_pricing: quality-ranked subset, bids drawn uniformly on each
                    node's feasible interval, then rescaled to the budget.
    random_subset:  uniform random subset, priced optimally.

    All outputs satisfy sum(r) <= R_max.  Ties break toward lower index.
    """
    if kind not in BASELINE_KINDS:
        raise ValueError(f"unknown baseline kind {kind!r}")
    count = len(nodes) if n is None else n
    if not (1 <= count <= len(nodes)):
        raise ValueError(f"need 1 <= n <= {len(nodes)}, got {count}")
    rng = np.random.default_rng(seed)

    sols: dict[int, _NodeSolution] = {}
    for i, node in enumerate(nodes):
        try:
            sols[i] = _node_solution(node, server, task)
        except InfeasibleError:
            continue

    def quality_rank() -> list[int]:
        scored = []
        for i in sols:
            node = nodes[i]
            th = min(max(quality_peak_theta(node, task), node.sigma / sols[i].r_hi), node.sigma / sols[i].r_lo)
            q = model_quality(cycle_for(node, th, task), sat_params(server))
            scored.append((-q, i))
        return [i for _, i in sorted(scored)]

    r = np.zeros(len(nodes))

    if kind in ("quality_first", "price_first"):
        if kind == "quality_first":
            order = quality_rank()[:count]
            wanted = {}
            for i in order:
                node = nodes[i]
                th = min(max(quality_peak_theta(node, task), node.sigma / sols[i].r_hi), node.sigma / sols[i].r_lo)
                wanted[i] = node.sigma / th
        else:
            order = sorted(sols, key=lambda i: (nodes[i].sigma, i))[:count]
            wanted = {i: sols[i].r_lo for i in order}
        left = server.R_max
        for i in order:
            bid = min(wanted[i], left)
            if bid <= 0:
                break
            r[i] = bid
            left -= bid
    elif kind == "random_pricing":
        order = quality_rank()[:count]
        for i in order:
            r[i] = rng.uniform(sols[i].r_lo, sols[i].r_hi)
        total = float(np.sum(r))
        if total > server.R_max:
            r *= server.R_max / total
    else:  # random_subset
        pool = sorted(sols)
        take = min(count, len(pool))
        subset = sorted(rng.choice(pool, size=take, replace=False).tolist())
        # drop the highest-floor nodes until the minimum bids fit the budget
        while subset and sum(sols[i].r_lo for i in subset) > server.R_max:
            subset.remove(max(subset, key=lambda i: (sols[i].r_lo, i)))
        if subset:
            sub_nodes = [nodes[i] for i in subset]
            profile, _ = allocate_budget(sub_nodes, server, task)
            for k, i in enumerate(subset):
                r[i] = profile.r[k]

    theta = np.array([best_response(node, float(r[i])) for i, node in enumerate(nodes)])
    return StrategyProfile(r=r, theta=theta)

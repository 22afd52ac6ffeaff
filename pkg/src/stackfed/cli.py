"""Command-line entry points.

Subcommands:
  equilibrium  solve and verify one game instance
  sweep        run a figure scenario and emit CSV/summary outputs
  train-drl    run the multi-agent training scenario
  fl-run       run the federated-averaging experiment
  oracle       brute-force cross-checks of the analytic machinery

Exit code 0 only when every check requested by the run passes.
"""

from __future__ import annotations

import argparse
import sys

import numpy as np

from . import flsim
from .aoi import cycle_model_divergence
from .game import (
    NodeParams,
    solve_equilibrium,
    verify_equilibrium,
)
from .harness import (
    CheckResult,
    Scenario,
    emit_report,
    load_scenario,
    reference_instance,
    run_scenario,
    summary_text,
)
from .oracles import best_response_grid, equilibrium_grid_search


def _scenario_from_args(args) -> Scenario:
    scenario = load_scenario(args.scenario)
    if args.seed is not None:
        scenario.seed = args.seed
    return scenario


def cmd_equilibrium(args) -> int:
    nodes, server, task = reference_instance()
    if args.scenario:
        scenario = _scenario_from_args(args)
        nodes, server, task = reference_instance(scenario)
    eq = solve_equilibrium(nodes, server, task, seed=args.seed)
    result = verify_equilibrium(eq, nodes, server, task)
    print("bids      ", " ".join(f"{v:.6g}" for v in eq.profile.r))
    print("periods   ", " ".join(f"{v:.6g}" for v in eq.profile.theta))
    print("node utils", " ".join(f"{v:.6g}" for v in eq.node_utilities))
    print(f"server utility {eq.server_utility:.6g}")
    print(f"budget multiplier {eq.kkt_multiplier:.6g}")
    print("verified" if result.accepted else f"REJECTED: {result.witness}")
    return 0 if result.accepted else 1


def _run_and_emit(args) -> int:
    scenario = _scenario_from_args(args)
    result = run_scenario(scenario)
    emit_report(result, args.out, fmt=args.format)
    print(summary_text(result), end="")
    return 0 if all(c.passed for c in result.checks) else 1


def cmd_sweep(args) -> int:
    return _run_and_emit(args)


def cmd_train_drl(args) -> int:
    scenario = _scenario_from_args(args)
    if scenario.kind != "fig15":
        print("train-drl expects a fig15-kind scenario", file=sys.stderr)
        return 2
    return _run_and_emit(args)


def cmd_fl_run(args) -> int:
    scenario = _scenario_from_args(args)
    if scenario.kind != "fig9":
        print("fl-run expects a fig9-kind scenario", file=sys.stderr)
        return 2
    return _run_and_emit(args)


def cmd_oracle(args) -> int:
    checks: list[CheckResult] = []

    div = cycle_model_divergence(3, 2, 1.0)
    print(
        "slot vs period model at c=3, a=2, t=1: "
        f"age {div['aoi_slot']:.6g} vs {div['aoi_period']:.6g} "
        f"(ratio {div['aoi_ratio']:.6g}), "
        f"latency {div['latency_slot']:.6g} vs {div['latency_period']:.6g} "
        f"(ratio {div['latency_ratio']:.6g})"
    )
    checks.append(
        CheckResult(
            "oracle_divergence_documented",
            abs(div["aoi_slot"] - 1.2) < 1e-12 and abs(div["aoi_period"] - 2.0) < 1e-12,
        )
    )

    rng = np.random.default_rng(args.seed if args.seed is not None else 0)
    nodes, server, task = reference_instance()
    ok_br = True
    for _ in range(50):
        node = nodes[int(rng.integers(len(nodes)))]
        r = float(rng.uniform(0.05, 0.95) * node.sigma / (node.a * task.t))
        from .game import best_response, node_utility

        theta_grid, u_grid = best_response_grid(node, r)
        theta_star = best_response(node, r)
        if node_utility(r, theta_star, node.sigma) < u_grid - 1e-6:
            ok_br = False
    checks.append(CheckResult("oracle_best_response_grid", ok_br, "50 random bids"))

    eq = solve_equilibrium(nodes, server, task)
    ok_eq = True
    for i, node in enumerate(nodes):
        r_hat, theta_hat, v_hat = equilibrium_grid_search(node, server, task)
        eq_i = solve_equilibrium([node], server, task)
        if abs(r_hat - eq_i.profile.r[0]) > 1e-2 or abs(theta_hat - eq_i.profile.theta[0]) > 1e-2:
            ok_eq = False
        rel = abs(v_hat - eq_i.server_utility) / abs(eq_i.server_utility)
        print(
            f"node {i}: solver r={eq_i.profile.r[0]:.6g} theta={eq_i.profile.theta[0]:.6g} "
            f"V={eq_i.server_utility:.6g}; grid r={r_hat:.6g} theta={theta_hat:.6g} V={v_hat:.6g} "
            f"(rel {rel:.2e})"
        )
        if rel > 1e-3:
            ok_eq = False
    checks.append(CheckResult("oracle_equilibrium_grid", ok_eq, "reference nodes"))

    for c in checks:
        print(("PASS" if c.passed else "FAIL"), c.name, c.detail)
    return 0 if all(c.passed for c in checks) else 1


def build_parser() -> argparse.ArgumentParser:
    parser = argparse.ArgumentParser(prog="stackfed", description=__doc__)
    sub = parser.add_subparsers(dest="command", required=True)

    def common(p, scenario_required=True):
        p.add_argument("--scenario", required=scenario_required, help="scenario file path")
        p.add_argument("--seed", type=int, default=None, help="override the scenario seed")
        p.add_argument("--out", default="out", help="output directory")
        p.add_argument("--format", choices=("csv", "summary"), default="csv")

    p_eq = sub.add_parser("equilibrium", help="solve and verify one instance")
    common(p_eq, scenario_required=False)
    p_eq.set_defaults(func=cmd_equilibrium)

    p_sweep = sub.add_parser("sweep", help="run a figure scenario")
    common(p_sweep)
    p_sweep.set_defaults(func=cmd_sweep)

    p_drl = sub.add_parser("train-drl", help="multi-agent training scenario")
    common(p_drl)
    p_drl.set_defaults(func=cmd_train_drl)

    p_fl = sub.add_parser("fl-run", help="federated experiment scenario")
    common(p_fl)
    p_fl.set_defaults(func=cmd_fl_run)

    p_or = sub.add_parser("oracle", help="brute-force cross-checks")
    common(p_or, scenario_required=False)
    p_or.set_defaults(func=cmd_oracle)

    return parser


def main(argv: list[str] | None = None) -> int:
    args = build_parser().parse_args(argv)
    return args.func(args)


if __name__ == "__main__":
    sys.exit(main())

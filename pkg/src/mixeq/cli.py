"""Command-line interface.

Subcommands: solve, sweep, analyze, oracle, braess, compare-centralized.
Exit codes: 0 success, 1 input error, 2 solver non-convergence (results are
still printed/written). CSV output is deterministic byte-for-byte for fixed
inputs; the MIXEQ_THREADS environment variable bounds sweep concurrency
(unset = 1, 0 = one thread per CPU).
"""

from __future__ import annotations

import argparse
import json
import os
import sys
from concurrent.futures import ThreadPoolExecutor
from typing import List, Optional, Sequence, Tuple

import numpy as np

from mixeq import kernels
from mixeq.analysis import analyze, compare_centralized
from mixeq.costs import CostParams
from mixeq.errors import MixeqError
from mixeq.netio import load_network
from mixeq.netmodel import (
    IncidenceMatrix,
    Link,
    Network,
    PathSet,
    declared_path_set,
    enumerate_paths,
    incidence_matrix,
)
from mixeq.oracle import exact_mixed
from mixeq.solver import (
    EquilibriumResult,
    FlowPattern,
    SolverConfig,
    multi_start_uniqueness_check,
    solve_mixed,
    vi_gap,
)

__all__ = ["main", "braess_network"]

# Braess-style test network: S->A->T and S->B->T with a crossing A->B link
# plus a direct S->T bypass whose parameters k6, b6 select the regime.
_BRAESS_K = (10.0, 5.0, 2.0, 5.0, 3.0)
_BRAESS_B = (1.0, 8.0, 7.0, 1.0, 1.0)
_BRAESS_ENDS = (("S", "A"), ("A", "T"), ("S", "B"), ("B", "T"), ("A", "B"))
_BRAESS_PATHS = (("1", "2"), ("3", "4"), ("1", "5", "4"), ("3", "5", "2"), ("6",))


def braess_network(k6: float = 7.0, b6: float = 11.0) -> Tuple[Network, PathSet]:
    """Built-in 4-node Braess network with its declared 5-path set.

    The declared set includes the path 3-5-2, which traverses link 5 against
    its direction; enumeration finds only the 4 directed paths.
    """
    links = [
        Link(id=str(i + 1), tail=t, head=h, cost=CostParams(k=_BRAESS_K[i], b=_BRAESS_B[i]))
        for i, (t, h) in enumerate(_BRAESS_ENDS)
    ]
    links.append(Link(id="6", tail="S", head="T", cost=CostParams(k=k6, b=b6)))
    network = Network(
        nodes=frozenset({"S", "A", "B", "T"}),
        links=tuple(links),
        origin="S",
        destination="T",
        demand=1.0,
    )
    return network, declared_path_set(network, _BRAESS_PATHS)


def _fmt(value: float) -> str:
    # repr of a Python float is the shortest round-trip decimal
    return repr(float(value))


def _bool_str(flag: bool) -> str:
    return "true" if flag else "false"


def _thread_count() -> int:
    raw = os.environ.get("MIXEQ_THREADS")
    if raw is None or raw.strip() == "":
        return 1
    try:
        value = int(raw)
    except ValueError as exc:
        raise MixeqError(f"MIXEQ_THREADS must be an integer, got {raw!r}") from exc
    if value < 0:
        raise MixeqError("MIXEQ_THREADS must be nonnegative")
    if value == 0:
        return os.cpu_count() or 1
    return value


def _resolve_paths(network: Network, declared: Optional[PathSet], enumerated: bool) -> PathSet:
    if declared is not None and not enumerated:
        return declared
    return enumerate_paths(network)


def _config(alpha: float, tol: float) -> SolverConfig:
    return SolverConfig(alpha=alpha, outer_tol=tol, inner_tol=tol * 1e-2)


def _solve_many(
    network: Network,
    delta: IncidenceMatrix,
    alphas: Sequence[float],
    tol: float,
) -> List[EquilibriumResult]:
    def one(alpha: float) -> EquilibriumResult:
        return solve_mixed(network, delta, _config(float(alpha), tol))

    threads = _thread_count()
    if threads <= 1:
        return [one(a) for a in alphas]
    with ThreadPoolExecutor(max_workers=threads) as pool:
        return list(pool.map(one, alphas))


def _write_csv(
    out_path: str,
    param_name: str,
    values: Sequence[float],
    results: Sequence[EquilibriumResult],
) -> None:
    p_count = results[0].flow.x_h.shape[0]
    header = [param_name, "social_cost", "lambda_h", "lambda_a", "gap", "converged"]
    header += [f"flow_p{i + 1}" for i in range(p_count)]
    lines = [",".join(header)]
    for value, res in zip(values, results):
        row = [
            _fmt(value),
            _fmt(res.social),
            _fmt(res.lambda_h),
            _fmt(res.lambda_a),
            _fmt(res.gap),
            _bool_str(res.converged),
        ]
        row += [_fmt(x) for x in res.flow.x_agg]
        lines.append(",".join(row))
    with open(out_path, "w", encoding="utf-8", newline="\n") as fh:
        fh.write("\n".join(lines) + "\n")


def _result_doc(paths: PathSet, res: EquilibriumResult) -> dict:
    return {
        "alpha": res.flow.alpha,
        "converged": res.converged,
        "iterations": res.iterations,
        "lambda_h": res.lambda_h,
        "lambda_a": res.lambda_a,
        "social_cost": res.social,
        "gap": res.gap,
        "paths": [list(p) for p in paths.paths],
        "x_h": res.flow.x_h.tolist(),
        "x_a": res.flow.x_a.tolist(),
        "x_agg": res.flow.x_agg.tolist(),
    }


def _print_result(paths: PathSet, res: EquilibriumResult) -> None:
    print(f"backend: {kernels.BACKEND}")
    print(f"alpha: {_fmt(res.flow.alpha)}")
    print(f"converged: {_bool_str(res.converged)}")
    print(f"iterations: {res.iterations}")
    print(f"lambda_h: {_fmt(res.lambda_h)}")
    print(f"lambda_a: {_fmt(res.lambda_a)}")
    print(f"social_cost: {_fmt(res.social)}")
    print(f"gap: {_fmt(res.gap)}")
    x_h, x_a = res.flow.x_h, res.flow.x_a
    for i, path in enumerate(paths.paths):
        print(
            f"flow_p{i + 1} [{'-'.join(path)}]: {_fmt(x_h[i] + x_a[i])} "
            f"(human {_fmt(x_h[i])}, auto {_fmt(x_a[i])})"
        )


def _write_json(out_path: str, doc: dict) -> None:
    with open(out_path, "w", encoding="utf-8", newline="\n") as fh:
        json.dump(doc, fh, indent=2)
        fh.write("\n")


def _cmd_solve(args) -> int:
    network, declared = load_network(args.network)
    paths = _resolve_paths(network, declared, args.enumerated_paths)
    delta = incidence_matrix(network, paths)
    res = solve_mixed(network, delta, _config(args.alpha, args.tol))
    _print_result(paths, res)
    if args.out:
        _write_json(args.out, _result_doc(paths, res))
    return 0 if res.converged else 2


def _cmd_sweep(args) -> int:
    if not (0.0 <= args.alpha_min <= args.alpha_max <= 1.0):
        raise MixeqError("need 0 <= alpha-min <= alpha-max <= 1")
    if args.steps < 2:
        raise MixeqError("steps must be at least 2")
    network, declared = load_network(args.network)
    paths = _resolve_paths(network, declared, args.enumerated_paths)
    delta = incidence_matrix(network, paths)
    alphas = np.linspace(args.alpha_min, args.alpha_max, args.steps)
    results = _solve_many(network, delta, alphas, args.tol)
    _write_csv(args.out, "alpha", alphas, results)
    bad = sum(1 for r in results if not r.converged)
    print(f"wrote {args.out} ({len(results)} rows, {bad} non-converged)")
    return 2 if bad else 0


def _fmt_opt(value: Optional[float]) -> str:
    return "none" if value is None else _fmt(value)


def _cmd_analyze(args) -> int:
    network, declared = load_network(args.network)
    paths = _resolve_paths(network, declared, args.enumerated_paths)
    delta = incidence_matrix(network, paths)
    cfg = _config(args.alpha, args.tol)
    verdict = analyze(network, delta, args.alpha, cfg)

    doc: dict = {"alpha": args.alpha, "skipped": verdict.skipped}
    if verdict.no_effect is not None:
        ne = verdict.no_effect
        print(f"no_effect: holds={_bool_str(ne.holds)} b0={_fmt_opt(ne.b0)}")
        doc["no_effect"] = {"holds": ne.holds, "b0": ne.b0}
    if verdict.deterioration is not None:
        det = verdict.deterioration
        hyp = det.hypotheses
        print(
            f"deterioration: verdict={det.verdict} gamma={_fmt_opt(det.gamma)} "
            f"condition_value={_fmt_opt(det.condition_value)} "
            f"alpha_validity_hint={_fmt_opt(det.alpha_validity_hint)}"
        )
        print(
            "  hypotheses:"
            f" linear_costs={_bool_str(hyp.linear_costs)}"
            f" delta_v_independent={_bool_str(hyp.delta_v_independent)}"
            f" q_unique={_bool_str(hyp.q_unique)}"
            f" q_off_support={_bool_str(hyp.q_off_support)}"
            f" strict_off_support_costs={_bool_str(hyp.strict_off_support_costs)}"
        )
        doc["deterioration"] = {
            "verdict": det.verdict,
            "v": list(det.v),
            "q": det.q,
            "gamma": det.gamma,
            "condition_value": det.condition_value,
            "alpha_validity_hint": det.alpha_validity_hint,
            "hypotheses": {
                "linear_costs": hyp.linear_costs,
                "delta_v_independent": hyp.delta_v_independent,
                "q_unique": hyp.q_unique,
                "q_off_support": hyp.q_off_support,
                "strict_off_support_costs": hyp.strict_off_support_costs,
            },
        }
    cen = verdict.centralized_match
    exit_code = 0
    if cen is not None:
        print(
            f"centralized: decentralized={_fmt(cen.social_decentralized)} "
            f"centralized={_fmt(cen.social_centralized)} deviation={_fmt(cen.deviation)} "
            f"converged={_bool_str(cen.converged)}"
        )
        doc["centralized"] = {
            "social_decentralized": cen.social_decentralized,
            "social_centralized": cen.social_centralized,
            "deviation": cen.deviation,
            "converged": cen.converged,
        }
        if not cen.converged:
            exit_code = 2
    if verdict.improvement is not None:
        imp = verdict.improvement
        print(
            f"improvement: dominates={_bool_str(imp.dominates)} "
            f"social_mixed={_fmt(imp.social_mixed)} "
            f"social_baseline={_fmt(imp.social_baseline)} "
            f"baseline_gap={_fmt(imp.baseline_gap)}"
        )
        doc["improvement"] = {
            "dominates": imp.dominates,
            "social_mixed": imp.social_mixed,
            "social_baseline": imp.social_baseline,
            "baseline_gap": imp.baseline_gap,
            "baseline_x": imp.baseline_x.tolist(),
            "mixed_x_h": imp.mixed_x_h.tolist(),
        }
    for name, reason in verdict.skipped.items():
        print(f"skipped: {name}: {reason}")
    if args.seed is not None:
        report = multi_start_uniqueness_check(network, delta, cfg, seed=args.seed)
        print(
            f"uniqueness: max_f_deviation={_fmt(report.max_f_deviation)} "
            f"max_s_deviation={_fmt(report.max_s_deviation)} "
            f"converged={report.n_converged}/{report.n_runs}"
        )
        doc["uniqueness"] = {
            "max_f_deviation": report.max_f_deviation,
            "max_s_deviation": report.max_s_deviation,
            "n_converged": report.n_converged,
            "n_runs": report.n_runs,
        }
    if args.out:
        _write_json(args.out, doc)
    return exit_code


def _cmd_oracle(args) -> int:
    network, declared = load_network(args.network)
    paths = _resolve_paths(network, declared, args.enumerated_paths)
    delta = incidence_matrix(network, paths)
    eq = exact_mixed(network, delta, args.alpha)
    x_h, x_a = eq.split_witness
    gap = vi_gap(network, delta, FlowPattern(x_h=x_h, x_a=x_a, alpha=args.alpha))
    print(f"lambda_h: {_fmt(eq.lambda_h)}")
    print(f"lambda_a: {_fmt(eq.lambda_a)}")
    print(f"support_h: {sorted(eq.support.v_h)}")
    print(f"support_a: {sorted(eq.support.v_a)}")
    print(f"gap: {_fmt(gap)}")
    for i in range(delta.num_paths):
        print(f"x_agg_p{i + 1}: {_fmt(eq.x_agg[i])}")
    if args.out:
        _write_json(
            args.out,
            {
                "alpha": args.alpha,
                "lambda_h": eq.lambda_h,
                "lambda_a": eq.lambda_a,
                "support_h": sorted(eq.support.v_h),
                "support_a": sorted(eq.support.v_a),
                "x_agg": eq.x_agg.tolist(),
                "x_h": x_h.tolist(),
                "x_a": x_a.tolist(),
                "gap": gap,
                "paths": [list(p) for p in paths.paths],
            },
        )
    return 0


def _cmd_braess(args) -> int:
    os.makedirs(args.out_dir, exist_ok=True)

    def prepare(k6: float, b6: float):
        network, declared = braess_network(k6, b6)
        paths = declared if not args.enumerated_paths else enumerate_paths(network)
        return network, incidence_matrix(network, paths)

    bad = 0
    if args.variant in ("paper", "deterioration"):
        if args.variant == "paper":
            network, delta = prepare(7.0, 11.0)
            alphas = np.linspace(0.0, 1.0, 101)
        else:
            network, delta = prepare(1.0, 18.3)
            alphas = np.linspace(0.0, 0.1, 51)
        results = _solve_many(network, delta, alphas, args.tol)
        out = os.path.join(args.out_dir, f"braess_{args.variant}.csv")
        _write_csv(out, "alpha", alphas, results)
        bad = sum(1 for r in results if not r.converged)
    elif args.variant == "sweep_k6":
        grid = np.linspace(0.5, 10.0, 50)
        results = []
        for k6 in grid:
            network, delta = prepare(float(k6), 18.3)
            results.append(solve_mixed(network, delta, _config(0.02, args.tol)))
        out = os.path.join(args.out_dir, "braess_sweep_k6.csv")
        _write_csv(out, "k6", grid, results)
        bad = sum(1 for r in results if not r.converged)
    else:
        grid = np.linspace(15.0, 25.0, 50)
        results = []
        for b6 in grid:
            network, delta = prepare(1.0, float(b6))
            results.append(solve_mixed(network, delta, _config(0.02, args.tol)))
        out = os.path.join(args.out_dir, "braess_sweep_b6.csv")
        _write_csv(out, "b6", grid, results)
        bad = sum(1 for r in results if not r.converged)
    print(f"wrote {out} ({len(results)} rows, {bad} non-converged)")
    return 2 if bad else 0


def _cmd_compare(args) -> int:
    network, declared = load_network(args.network)
    paths = _resolve_paths(network, declared, args.enumerated_paths)
    delta = incidence_matrix(network, paths)
    cmp = compare_centralized(network, delta, args.alpha, _config(args.alpha, args.tol))
    print(f"social_decentralized: {_fmt(cmp.social_decentralized)}")
    print(f"social_centralized: {_fmt(cmp.social_centralized)}")
    print(f"deviation: {_fmt(cmp.deviation)}")
    print(f"converged: {_bool_str(cmp.converged)}")
    if args.out:
        _write_json(
            args.out,
            {
                "alpha": args.alpha,
                "social_decentralized": cmp.social_decentralized,
                "social_centralized": cmp.social_centralized,
                "deviation": cmp.deviation,
                "converged": cmp.converged,
            },
        )
    return 0 if cmp.converged else 2


class _Parser(argparse.ArgumentParser):
    # input errors must exit 1, not argparse's default 2
    def error(self, message):
        raise MixeqError(message)


def _build_parser() -> argparse.ArgumentParser:
    parser = _Parser(prog="mixeq", description="Mixed-autonomy traffic equilibria.")
    sub = parser.add_subparsers(dest="command", required=True)

    def add_common(p, alpha=False, network=True):
        if network:
            p.add_argument("--network", required=True, help="network JSON file")
        if alpha:
            p.add_argument("--alpha", type=float, required=True,
                           help="autonomous demand share in [0, 1]")
        p.add_argument("--tol", type=float, default=1e-8,
                       help="relative VI-gap tolerance (default 1e-8)")
        p.add_argument("--out", help="write results to this file")
        p.add_argument("--enumerated-paths", action="store_true",
                       help="ignore declared paths and enumerate directed ones")

    p_solve = sub.add_parser("solve", help="solve one equilibrium")
    add_common(p_solve, alpha=True)
    p_solve.set_defaults(func=_cmd_solve)

    p_sweep = sub.add_parser("sweep", help="alpha sweep to CSV")
    p_sweep.add_argument("--network", required=True)
    p_sweep.add_argument("--alpha-min", type=float, default=0.0)
    p_sweep.add_argument("--alpha-max", type=float, default=1.0)
    p_sweep.add_argument("--steps", type=int, default=101)
    p_sweep.add_argument("--out", required=True, help="output CSV path")
    p_sweep.add_argument("--tol", type=float, default=1e-8)
    p_sweep.add_argument("--enumerated-paths", action="store_true")
    p_sweep.set_defaults(func=_cmd_sweep)

    p_analyze = sub.add_parser("analyze", help="instance-level effect checks")
    add_common(p_analyze, alpha=True)
    p_analyze.add_argument("--seed", type=int, default=None,
                           help="also run the multi-start uniqueness probe")
    p_analyze.set_defaults(func=_cmd_analyze)

    p_oracle = sub.add_parser("oracle", help="exact equilibrium (linear costs)")
    add_common(p_oracle, alpha=True)
    p_oracle.set_defaults(func=_cmd_oracle)

    p_braess = sub.add_parser("braess", help="built-in Braess experiments")
    p_braess.add_argument("--variant", required=True,
                          choices=("paper", "deterioration", "sweep_k6", "sweep_b6"))
    p_braess.add_argument("--out-dir", required=True)
    p_braess.add_argument("--tol", type=float, default=1e-8)
    p_braess.add_argument("--enumerated-paths", action="store_true")
    p_braess.set_defaults(func=_cmd_braess)

    p_cmp = sub.add_parser("compare-centralized",
                           help="decentralized vs centralized autonomous routing")
    add_common(p_cmp, alpha=True)
    p_cmp.set_defaults(func=_cmd_compare)
    return parser


def main(argv: Optional[Sequence[str]] = None) -> int:
    parser = _build_parser()
    try:
        args = parser.parse_args(argv)
        return args.func(args)
    except MixeqError as exc:
        print(f"error: {exc}", file=sys.stderr)
        return 1
    except ValueError as exc:
        print(f"error: {exc}", file=sys.stderr)
        return 1


if __name__ == "__main__":
    sys.exit(main())

"""Command-line front end.

Subcommands: gen, solve, bench, grid, regress, eval-external, oracle.
The default output directory is taken from --out, falling back to the
JSSPT_OUT environment variable, then the working directory. Failures exit
nonzero with a category prefix on stderr.
"""

from __future__ import annotations

import argparse
import json
import os
import sys
from pathlib import Path

from . import harness
from .engine import save_result
from .errors import (
    ActionError,
    ConfigurationError,
    DocumentError,
    JssptError,
    MetricError,
    OracleLimitError,
    ProtocolError,
    StateError,
    TransportError,
)
from .instances import GenerationConfig, generate_instance, load_instance, save_instance
from .oracle import brute_force_oracle
from .rules import ALL_COMBOS, parse_combo, solve, solve_all_combos

ENV_OUT_DIR = "JSSPT_OUT"

_ERROR_CATEGORIES = (
    (ConfigurationError, 2, "configuration"),
    (DocumentError, 3, "document"),
    (OracleLimitError, 7, "refused"),
    (ProtocolError, 5, "protocol"),
    (TransportError, 6, "transport"),
    (ActionError, 4, "compute"),
    (StateError, 4, "compute"),
    (MetricError, 4, "compute"),
)


def _out_dir(value: str | None) -> Path:
    path = Path(value or os.environ.get(ENV_OUT_DIR) or ".")
    path.mkdir(parents=True, exist_ok=True)
    return path


def _parse_sizes(text: str) -> tuple[tuple[int, int], ...]:
    try:
        sizes = tuple(
            (int(n), int(m))
            for n, m in (part.lower().split("x") for part in text.split(","))
        )
    except ValueError as exc:
        raise ConfigurationError(f"cannot parse sizes {text!r} (want e.g. 15x10,10x10)") from exc
    return sizes


def _parse_rhos(text: str) -> tuple[float, ...]:
    try:
        return tuple(float(x) for x in text.split(","))
    except ValueError as exc:
        raise ConfigurationError(f"cannot parse scarcity list {text!r}") from exc


def _parse_solvers(text: str) -> tuple[str, ...]:
    if text == "all":
        return ALL_COMBOS
    solvers = tuple(s.strip() for s in text.split(","))
    for ident in solvers:
        parse_combo(ident)
    return solvers


# -- subcommands ---------------------------------------------------------------

def _cmd_gen(args) -> int:
    out = _out_dir(args.out)
    written = []
    for i in range(args.count):
        config = GenerationConfig(
            n=args.n,
            m=args.m,
            proc_range=tuple(args.proc),
            transport_range=tuple(args.transport),
            k=args.k,
            seed=args.seed + i,
        )
        written.append(save_instance(generate_instance(config), out))
    for path in written:
        print(path)
    return 0


def _cmd_solve(args) -> int:
    instance = load_instance(args.instance)
    if args.all_combos:
        sweep = solve_all_combos(instance, seed=args.seed)
        for result in sweep.results:
            print(f"{result.solver_id},{result.makespan}")
        print(f"best,{sweep.best_solver},{sweep.best_makespan}")
        return 0
    op_rule, agv_rule = parse_combo(f"{args.op_rule}+{args.agv_rule}")
    result = solve(instance, op_rule, agv_rule, seed=args.seed)
    if args.out:
        save_result(result, args.out)
    print(f"{result.solver_id},{result.makespan}")
    return 0


def _bench_plan(args) -> harness.ExperimentPlan:
    if args.plan:
        plan = harness.load_plan(args.plan)
        if args.seed is not None:
            plan = harness.ExperimentPlan(
                sizes=plan.sizes,
                rhos=plan.rhos,
                instances_per_config=plan.instances_per_config,
                solvers=plan.solvers,
                seed=args.seed,
            )
        return plan
    return harness.ExperimentPlan(
        sizes=_parse_sizes(args.sizes),
        rhos=_parse_rhos(args.rhos),
        instances_per_config=args.instances,
        solvers=_parse_solvers(args.solvers),
        seed=args.seed if args.seed is not None else 0,
    )


def _cmd_bench(args) -> int:
    plan = _bench_plan(args)
    out = _out_dir(args.out)
    records, summary, global_best = harness.run_bench(plan, jobs=args.jobs)
    results_path = out / "results.csv"
    summary_path = out / "summary.csv"
    results_path.write_text(harness.records_to_csv(records), encoding="utf-8")
    summary_path.write_text(harness.summary_to_csv(summary), encoding="utf-8")
    print(f"{len(records)} rows -> {results_path}")
    print(f"summary -> {summary_path}")
    print(f"global best combo: {global_best}")
    return 0


def _cmd_grid(args) -> int:
    plan = harness.GridPlan(
        sizes=_parse_sizes(args.sizes),
        rhos=_parse_rhos(args.rhos),
        instances_per_cell=args.instances_per_cell,
        solver_a=args.solver_a,
        solver_b=args.solver_b,
        seed=args.seed if args.seed is not None else 0,
    )
    out = _out_dir(args.out)
    records, cells, heatmap = harness.run_grid(plan, jobs=args.jobs)
    results_path = out / "grid_results.csv"
    cells_path = out / "grid_cells.csv"
    heatmap_path = out / "heatmap.csv"
    results_path.write_text(harness.records_to_csv(records), encoding="utf-8")
    cells_path.write_text(harness.grid_cells_to_csv(cells), encoding="utf-8")
    heatmap_path.write_text(harness.heatmap_to_csv(heatmap), encoding="utf-8")
    print(f"{len(records)} rows -> {results_path}")
    print(f"cells -> {cells_path}")
    print(f"heatmap -> {heatmap_path}")
    return 0


def _cmd_regress(args) -> int:
    records = harness.read_records(args.results)
    reports = harness.run_regression_suite(records, args.solver, args.baseline)
    text = harness.format_regression_suite(reports)
    if args.out:
        Path(args.out).write_text(text, encoding="utf-8")
        print(f"report -> {args.out}")
    else:
        print(text, end="")
    return 0


def _cmd_eval_external(args) -> int:
    paths: list[Path] = []
    for entry in args.instances:
        p = Path(entry)
        if p.is_dir():
            paths.extend(sorted(p.glob("*.json")))
        else:
            paths.append(p)
    if not paths:
        raise ConfigurationError("no instance documents found")
    instances = [load_instance(p) for p in paths]
    records = harness.run_external_eval(
        instances, args.cmd, label=args.label, timeout=args.timeout
    )
    out_path = Path(args.out) if args.out else _out_dir(None) / "external_results.csv"
    out_path.write_text(harness.records_to_csv(records), encoding="utf-8")
    print(f"{len(records)} rows -> {out_path}")
    return 0


def _cmd_oracle(args) -> int:
    instance = load_instance(args.instance)
    result = brute_force_oracle(instance, limit=args.limit)
    print(f"optimum,{result.makespan}")
    print(f"trace,{json.dumps([list(d) for d in result.decisions])}")
    print(f"explored,{result.explored}")
    return 0


# -- parser ----------------------------------------------------------------------

def build_parser() -> argparse.ArgumentParser:
    parser = argparse.ArgumentParser(
        prog="jsspt",
        description="Job-shop-with-transport scheduling: generation, solving, benchmarking.",
    )
    sub = parser.add_subparsers(dest="command", required=True)

    p = sub.add_parser("gen", help="generate random instances")
    p.add_argument("--n", type=int, required=True)
    p.add_argument("--m", type=int, required=True)
    p.add_argument("--k", type=int, default=None, help="AGV count (omit to sample DU(3, n))")
    p.add_argument("--proc", type=int, nargs=2, default=(1, 100), metavar=("LO", "HI"))
    p.add_argument("--transport", type=int, nargs=2, default=(1, 100), metavar=("LO", "HI"))
    p.add_argument("--count", type=int, default=1)
    p.add_argument("--seed", type=int, default=0)
    p.add_argument("--out", default=None)
    p.set_defaults(func=_cmd_gen)

    p = sub.add_parser("solve", help="run one rule combo (or all 40) on an instance")
    p.add_argument("--instance", required=True)
    p.add_argument("--op-rule", default="SPT")
    p.add_argument("--agv-rule", default="SCTA")
    p.add_argument("--all-combos", action="store_true")
    p.add_argument("--seed", type=int, default=0)
    p.add_argument("--out", default=None, help="write the schedule document here")
    p.set_defaults(func=_cmd_solve)

    p = sub.add_parser("bench", help="benchmark solvers over a plan")
    p.add_argument("--plan", default=None, help="plan JSON file")
    p.add_argument("--sizes", default="15x10,10x10,12x12,14x14,20x5,5x10,15x15,30x10")
    p.add_argument("--rhos", default="0.2,0.4,0.6,0.8,1.0,1.2")
    p.add_argument("--instances", type=int, default=100)
    p.add_argument("--solvers", default="all")
    p.add_argument("--seed", type=int, default=None)
    p.add_argument("--jobs", type=int, default=1)
    p.add_argument("--out", default=None)
    p.set_defaults(func=_cmd_bench)

    p = sub.add_parser("grid", help="duration-grid experiment over two solvers")
    p.add_argument("--sizes", default="15x10,10x10,12x12,14x14,20x5,5x10,15x15,30x10")
    p.add_argument("--rhos", default="0.2,0.4,0.6,0.8,1.0,1.2")
    p.add_argument("--instances-per-cell", type=int, default=20)
    p.add_argument("--solver-a", default="SPT+SCTA")
    p.add_argument("--solver-b", default="MOR+SCTA")
    p.add_argument("--seed", type=int, default=None)
    p.add_argument("--jobs", type=int, default=1)
    p.add_argument("--out", default=None)
    p.set_defaults(func=_cmd_grid)

    p = sub.add_parser("regress", help="fit the coupling-factor models on a results table")
    p.add_argument("--results", required=True)
    p.add_argument("--solver", required=True)
    p.add_argument("--baseline", required=True)
    p.add_argument("--out", default=None)
    p.set_defaults(func=_cmd_regress)

    p = sub.add_parser("eval-external", help="evaluate an external policy process")
    p.add_argument("--instances", nargs="+", required=True, help="instance files or directories")
    p.add_argument("--cmd", required=True, help="command line of the policy process")
    p.add_argument("--label", default="external")
    p.add_argument("--timeout", type=float, default=30.0)
    p.add_argument("--out", default=None)
    p.set_defaults(func=_cmd_eval_external)

    p = sub.add_parser("oracle", help="exact optimum of a small instance")
    p.add_argument("--instance", required=True)
    p.add_argument("--limit", type=int, default=8)
    p.set_defaults(func=_cmd_oracle)

    return parser


def main(argv=None) -> int:
    parser = build_parser()
    args = parser.parse_args(argv)
    try:
        return args.func(args)
    except JssptError as exc:
        for err_type, code, category in _ERROR_CATEGORIES:
            if isinstance(exc, err_type):
                print(f"jsspt: {category} error: {exc}", file=sys.stderr)
                return code
        print(f"jsspt: error: {exc}", file=sys.stderr)
        return 1
    except OSError as exc:
        print(f"jsspt: io error: {exc}", file=sys.stderr)
        return 3


if __name__ == "__main__":
    raise SystemExit(main())

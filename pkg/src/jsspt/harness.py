"""Experiment orchestration: benchmark sweeps, the duration grid, regression
on solver gaps, and external-policy evaluation.

Everything here is deterministic under (plan, seed): instance seeds are drawn
once from a master stream in a fixed order, per-solver RNG streams derive from
(instance seed, solver index), and parallel fan-out reduces in instance order,
so repeated runs emit byte-identical tables.
"""

from __future__ import annotations

import csv
import io
import json
import math
from concurrent.futures import ProcessPoolExecutor
from dataclasses import dataclass
from pathlib import Path

import numpy as np

from .bridge import ExternalPolicyClient, run_episode
from .errors import ConfigurationError, MetricError
from .instances import (
    GRID_BINS,
    GenerationConfig,
    GridCellConfig,
    Instance,
    generate_grid_cell_instances,
    generate_instance,
)
from .metrics import ResultRecord, bottleneck_features, make_record, rpi
from .regression import RegressionReport, aggregate_ci, ols_fit, z_normalize
from .rules import ALL_COMBOS, parse_combo, solve

#: Resource-scarcity ladder used throughout the experiments.
RHO_LADDER: tuple[float, ...] = (0.2, 0.4, 0.6, 0.8, 1.0, 1.2)

#: Benchmark instance shapes (jobs x machines).
DEFAULT_SIZES: tuple[tuple[int, int], ...] = (
    (15, 10),
    (10, 10),
    (12, 12),
    (14, 14),
    (20, 5),
    (5, 10),
    (15, 15),
    (30, 10),
)

#: The tau* heatmap axis: 21 bins of width 0.1 on [-1, 1].
TAU_BINS: tuple[float, ...] = tuple(round(-1.0 + 0.1 * i, 1) for i in range(21))


def fleet_size(rho_value: float, n: int) -> int:
    """AGV count for a nominal scarcity value; half-up rounding, at least 1."""
    return max(1, int(math.floor(rho_value * n + 0.5)))


def _check_combo_id(ident: str) -> None:
    try:
        parse_combo(ident)
    except Exception as exc:
        raise ConfigurationError(f"unknown solver in plan: {ident!r}") from exc


def agv_ladder(n: int, rhos=RHO_LADDER) -> tuple[int, ...]:
    return tuple(fleet_size(r, n) for r in rhos)


@dataclass(frozen=True)
class ExperimentPlan:
    """A benchmark sweep: sizes x scarcity ladder x instances x solvers."""

    sizes: tuple[tuple[int, int], ...] = DEFAULT_SIZES
    rhos: tuple[float, ...] = RHO_LADDER
    instances_per_config: int = 100
    solvers: tuple[str, ...] = ALL_COMBOS
    seed: int = 0

    def __post_init__(self) -> None:
        if not self.sizes:
            raise ConfigurationError("plan needs at least one size")
        for n, m in self.sizes:
            if n < 1 or m < 1:
                raise ConfigurationError(f"invalid size {n}x{m}")
        if not self.rhos or any(r <= 0 for r in self.rhos):
            raise ConfigurationError("scarcity values must be positive")
        if self.instances_per_config < 1:
            raise ConfigurationError("instances_per_config must be >= 1")
        if not self.solvers:
            raise ConfigurationError("plan needs at least one solver")
        for ident in self.solvers:
            _check_combo_id(ident)

    def configs(self) -> list[tuple[int, int, int, float]]:
        """(n, m, k, nominal rho) per configuration, size-major."""
        return [
            (n, m, fleet_size(r, n), r)
            for n, m in self.sizes
            for r in self.rhos
        ]


def plan_to_document(plan: ExperimentPlan) -> dict:
    return {
        "sizes": [list(s) for s in plan.sizes],
        "rhos": list(plan.rhos),
        "instances_per_config": plan.instances_per_config,
        "solvers": list(plan.solvers),
        "seed": plan.seed,
    }


def plan_from_document(doc: dict) -> ExperimentPlan:
    try:
        solvers = doc.get("solvers", "all")
        if solvers == "all":
            solvers = ALL_COMBOS
        return ExperimentPlan(
            sizes=tuple((int(n), int(m)) for n, m in doc["sizes"]),
            rhos=tuple(float(r) for r in doc.get("rhos", RHO_LADDER)),
            instances_per_config=int(doc.get("instances_per_config", 100)),
            solvers=tuple(str(s) for s in solvers),
            seed=int(doc.get("seed", 0)),
        )
    except (KeyError, TypeError, ValueError) as exc:
        raise ConfigurationError(f"bad plan document: {exc}") from exc


def load_plan(path: str | Path) -> ExperimentPlan:
    return plan_from_document(json.loads(Path(path).read_text(encoding="utf-8")))


def generate_bench_instances(plan: ExperimentPlan) -> list[Instance]:
    """All benchmark instances in plan order, seeds drawn from one stream."""
    seed_rng = np.random.default_rng(plan.seed)
    out = []
    for n, m, k, _ in plan.configs():
        child_seeds = seed_rng.integers(0, 2**31 - 1, size=plan.instances_per_config)
        for child in child_seeds:
            config = GenerationConfig(n=n, m=m, k=k, seed=int(child))
            out.append(generate_instance(config))
    return out


# -- solving ------------------------------------------------------------------

def _solver_seed(instance: Instance, solver_id: str) -> tuple[int, int]:
    return (instance.seed, ALL_COMBOS.index(solver_id))


def _solve_one_instance(args) -> list[ResultRecord]:
    instance, solver_ids, cell_id = args
    records = []
    for ident in solver_ids:
        op_rule, agv_rule = parse_combo(ident)
        result = solve(instance, op_rule, agv_rule, seed=_solver_seed(instance, ident))
        records.append(make_record(instance, result, cell_id))
    return records


def solve_instances(
    instances: list[Instance],
    solver_ids,
    cell_ids: list[str] | None = None,
    jobs: int = 1,
) -> list[ResultRecord]:
    """Run every solver on every instance; fan out across processes when
    jobs > 1, reducing in instance order either way."""
    solver_ids = tuple(solver_ids)
    cells = cell_ids if cell_ids is not None else [""] * len(instances)
    tasks = [(inst, solver_ids, cell) for inst, cell in zip(instances, cells)]
    records: list[ResultRecord] = []
    if jobs > 1 and len(tasks) > 1:
        with ProcessPoolExecutor(max_workers=jobs) as pool:
            for batch in pool.map(_solve_one_instance, tasks, chunksize=4):
                records.extend(batch)
    else:
        for task in tasks:
            records.extend(_solve_one_instance(task))
    return records


def run_bench(plan: ExperimentPlan, jobs: int = 1):
    """Execute the benchmark plan; returns (records, summary rows, global best)."""
    instances = generate_bench_instances(plan)
    records = solve_instances(instances, plan.solvers, jobs=jobs)
    summary, global_best = summarize_results(records)
    return records, summary, global_best


# -- summaries ------------------------------------------------------------------

SUMMARY_COLUMNS = (
    "solver",
    "instances",
    "mean_makespan",
    "mean_rpi_vs_best",
    "ci95_rpi_vs_best",
    "mean_rpi_vs_global",
    "ci95_rpi_vs_global",
    "win_rate_vs_global",
    "global_best",
)

#: Tie preference for the global-best combo, matching the benchmark baseline.
PREFERRED_GLOBAL_BEST = "MOR+SCTA"


def select_global_best(records: list[ResultRecord]) -> str:
    """The rule combo with the highest round-robin win rate (strict wins
    against every other combo over all instances). Ties prefer MOR+SCTA,
    then the lexicographically smallest identifier."""
    combos = sorted({r.solver_id for r in records if r.solver_id in ALL_COMBOS})
    if len(combos) < 1:
        raise MetricError("no dispatching-rule rows to pick a global best from")
    if len(combos) == 1:
        return combos[0]
    by_instance: dict[str, dict[str, int]] = {}
    for rec in records:
        if rec.solver_id in ALL_COMBOS:
            by_instance.setdefault(rec.instance_id, {})[rec.solver_id] = rec.makespan
    wins = {c: 0 for c in combos}
    for makespans in by_instance.values():
        present = [c for c in combos if c in makespans]
        for c in present:
            for other in present:
                if other != c and makespans[c] < makespans[other]:
                    wins[c] += 1
    most_wins = max(wins.values())
    tied = [c for c in combos if wins[c] == most_wins]
    if PREFERRED_GLOBAL_BEST in tied:
        return PREFERRED_GLOBAL_BEST
    return tied[0]


def summarize_results(records: list[ResultRecord]):
    """Per-solver benchmark summary against the per-instance best rule combo
    and against the fixed global-best combo. All solver ids present (including
    external ones) are ranked with the same arithmetic."""
    if not records:
        raise MetricError("cannot summarize an empty results table")
    global_best = select_global_best(records)
    best_per_instance: dict[str, int] = {}
    global_per_instance: dict[str, int] = {}
    for rec in records:
        if rec.solver_id in ALL_COMBOS:
            prev = best_per_instance.get(rec.instance_id)
            if prev is None or rec.makespan < prev:
                best_per_instance[rec.instance_id] = rec.makespan
        if rec.solver_id == global_best:
            global_per_instance[rec.instance_id] = rec.makespan

    solvers = sorted({r.solver_id for r in records})
    rows = []
    for solver_id in solvers:
        mine = [r for r in records if r.solver_id == solver_id]
        rpis_best = [
            rpi(r.makespan, best_per_instance[r.instance_id])
            for r in mine
            if r.instance_id in best_per_instance
        ]
        rpis_global = [
            rpi(r.makespan, global_per_instance[r.instance_id])
            for r in mine
            if r.instance_id in global_per_instance
        ]
        wins = [
            1 if r.makespan < global_per_instance[r.instance_id] else 0
            for r in mine
            if r.instance_id in global_per_instance
        ]
        rows.append(
            {
                "solver": solver_id,
                "instances": len(mine),
                "mean_makespan": _mean(r.makespan for r in mine),
                "mean_rpi_vs_best": _mean(rpis_best),
                "ci95_rpi_vs_best": _half_width(rpis_best),
                "mean_rpi_vs_global": _mean(rpis_global),
                "ci95_rpi_vs_global": _half_width(rpis_global),
                "win_rate_vs_global": _mean(wins),
                "global_best": global_best,
            }
        )
    rows.sort(key=lambda r: (-r["mean_rpi_vs_best"], r["solver"]))
    return rows, global_best


def _mean(values) -> float:
    values = list(values)
    return sum(values) / len(values) if values else float("nan")


def _half_width(values) -> float:
    values = list(values)
    if len(values) < 2:
        return 0.0
    return aggregate_ci(values)[1]


# -- results tables --------------------------------------------------------------

RESULT_COLUMNS = (
    "instance",
    "solver",
    "makespan",
    "n",
    "m",
    "k",
    "p_raw",
    "t_raw",
    "rho",
    "tau",
    "regime",
    "cell",
    "seed",
)


def _fmt(value) -> str:
    if isinstance(value, float):
        return f"{value:.6f}"
    return str(value)


def records_to_csv(records: list[ResultRecord]) -> str:
    buf = io.StringIO()
    writer = csv.writer(buf, lineterminator="\n")
    writer.writerow(RESULT_COLUMNS)
    for r in records:
        writer.writerow(
            [
                r.instance_id,
                r.solver_id,
                r.makespan,
                r.n,
                r.m,
                r.k,
                _fmt(r.p_raw),
                _fmt(r.t_raw),
                _fmt(r.rho),
                _fmt(r.tau),
                r.regime,
                r.cell_id,
                r.seed,
            ]
        )
    return buf.getvalue()


def records_from_csv(text: str) -> list[ResultRecord]:
    reader = csv.DictReader(io.StringIO(text))
    records = []
    for row in reader:
        records.append(
            ResultRecord(
                instance_id=row["instance"],
                solver_id=row["solver"],
                makespan=int(row["makespan"]),
                n=int(row["n"]),
                m=int(row["m"]),
                k=int(row["k"]),
                p_raw=float(row["p_raw"]),
                t_raw=float(row["t_raw"]),
                rho=float(row["rho"]),
                tau=float(row["tau"]),
                regime=row["regime"],
                cell_id=row["cell"],
                seed=int(row["seed"]),
            )
        )
    return records


def write_records(records: list[ResultRecord], path: str | Path) -> Path:
    path = Path(path)
    path.write_text(records_to_csv(records), encoding="utf-8")
    return path


def read_records(path: str | Path) -> list[ResultRecord]:
    return records_from_csv(Path(path).read_text(encoding="utf-8"))


def summary_to_csv(rows: list[dict]) -> str:
    buf = io.StringIO()
    writer = csv.writer(buf, lineterminator="\n")
    writer.writerow(SUMMARY_COLUMNS)
    for row in rows:
        writer.writerow([_fmt(row[c]) for c in SUMMARY_COLUMNS])
    return buf.getvalue()


# -- grid experiment ----------------------------------------------------------

@dataclass(frozen=True)
class GridPlan:
    """The duration-grid experiment: every decade-bin combination, each base
    configuration, `instances_per_cell` instances, two solvers to compare."""

    sizes: tuple[tuple[int, int], ...] = DEFAULT_SIZES
    rhos: tuple[float, ...] = RHO_LADDER
    instances_per_cell: int = 20
    solver_a: str = "SPT+SCTA"
    solver_b: str = "MOR+SCTA"
    seed: int = 0

    def __post_init__(self) -> None:
        if not self.sizes or not self.rhos:
            raise ConfigurationError("grid plan needs sizes and scarcity values")
        if self.instances_per_cell < 1:
            raise ConfigurationError("instances_per_cell must be >= 1")
        _check_combo_id(self.solver_a)
        _check_combo_id(self.solver_b)

    def base_configs(self) -> list[tuple[int, int, int, float]]:
        return [
            (n, m, fleet_size(r, n), r)
            for n, m in self.sizes
            for r in self.rhos
        ]


def generate_grid_instances(plan: GridPlan) -> tuple[list[Instance], list[str]]:
    """Instances for every (cell, base config) pair plus their cell ids."""
    seed_rng = np.random.default_rng(plan.seed)
    instances: list[Instance] = []
    cell_ids: list[str] = []
    for proc_bin in GRID_BINS:
        for transport_bin in GRID_BINS:
            cell_label = f"p{proc_bin[0]}_t{transport_bin[0]}"
            for n, m, k, _ in plan.base_configs():
                child = int(seed_rng.integers(0, 2**31 - 1))
                cell = GridCellConfig(
                    proc_bin=proc_bin,
                    transport_bin=transport_bin,
                    n=n,
                    m=m,
                    k=k,
                    instances_per_cell=plan.instances_per_cell,
                    seed=child,
                )
                for inst in generate_grid_cell_instances(cell):
                    instances.append(inst)
                    cell_ids.append(cell_label)
    return instances, cell_ids


def run_grid(plan: GridPlan, jobs: int = 1):
    """Execute the grid experiment; returns (records, cell rows, heatmap rows)."""
    instances, cell_ids = generate_grid_instances(plan)
    records = solve_instances(
        instances, (plan.solver_a, plan.solver_b), cell_ids=cell_ids, jobs=jobs
    )
    cells = grid_cell_table(records, plan.solver_a, plan.solver_b)
    heatmap = heatmap_table(records, plan.solver_a, plan.solver_b, plan.rhos)
    return records, cells, heatmap


def _pair_records(records, solver_a: str, solver_b: str):
    """Join the two solvers' rows by instance; every instance needs both."""
    rows_a = {r.instance_id: r for r in records if r.solver_id == solver_a}
    rows_b = {r.instance_id: r for r in records if r.solver_id == solver_b}
    if set(rows_a) != set(rows_b):
        missing = sorted(set(rows_a) ^ set(rows_b))
        raise MetricError(
            f"cannot pair solvers {solver_a!r} and {solver_b!r}: "
            f"{len(missing)} unmatched instances (first: {missing[0]})"
        )
    if not rows_a:
        raise MetricError(f"no rows found for solvers {solver_a!r} / {solver_b!r}")
    return [(rows_a[i], rows_b[i]) for i in sorted(rows_a)]


GRID_CELL_COLUMNS = (
    "proc_bin",
    "transport_bin",
    "cell",
    "instances",
    "mean_tau",
    "mean_makespan_a",
    "mean_makespan_b",
    "mean_rpi",
)


def grid_cell_table(records, solver_a: str, solver_b: str) -> list[dict]:
    """Aggregate makespans and improvement per duration cell (all base
    configurations pooled)."""
    pairs = _pair_records(records, solver_a, solver_b)
    by_cell: dict[str, list[tuple[ResultRecord, ResultRecord]]] = {}
    for pair in pairs:
        by_cell.setdefault(pair[0].cell_id, []).append(pair)
    rows = []
    for proc_bin in GRID_BINS:
        for transport_bin in GRID_BINS:
            label = f"p{proc_bin[0]}_t{transport_bin[0]}"
            cell_pairs = by_cell.get(label)
            if not cell_pairs:
                continue
            rows.append(
                {
                    "proc_bin": f"{proc_bin[0]}-{proc_bin[1]}",
                    "transport_bin": f"{transport_bin[0]}-{transport_bin[1]}",
                    "cell": label,
                    "instances": len(cell_pairs),
                    "mean_tau": _mean(a.tau for a, _ in cell_pairs),
                    "mean_makespan_a": _mean(a.makespan for a, _ in cell_pairs),
                    "mean_makespan_b": _mean(b.makespan for _, b in cell_pairs),
                    "mean_rpi": _mean(
                        rpi(a.makespan, b.makespan) for a, b in cell_pairs
                    ),
                }
            )
    return rows


def grid_cells_to_csv(rows: list[dict]) -> str:
    buf = io.StringIO()
    writer = csv.writer(buf, lineterminator="\n")
    writer.writerow(GRID_CELL_COLUMNS)
    for row in rows:
        writer.writerow([_fmt(row[c]) for c in GRID_CELL_COLUMNS])
    return buf.getvalue()


def nearest_rho(value: float, axis) -> float:
    """Column of the heatmap a realized k/n belongs to."""
    return min(axis, key=lambda r: (abs(r - value), r))


def tau_bin(tau: float) -> float:
    """tau* rounded half-up to the nearest 0.1, clamped to [-1, 1]."""
    binned = math.floor(tau * 10 + 0.5) / 10
    return min(1.0, max(-1.0, binned)) + 0.0


def heatmap_table(records, solver_a: str, solver_b: str, rho_axis=RHO_LADDER):
    """Mean improvement of solver_a over solver_b keyed by (rho column,
    tau* bin); rows descend from tau* = 1.0 to -1.0, cells without data are
    None."""
    pairs = _pair_records(records, solver_a, solver_b)
    axis = tuple(sorted(rho_axis))
    sums: dict[tuple[float, float], list[float]] = {}
    for a, b in pairs:
        key = (tau_bin(a.tau), nearest_rho(a.rho, axis))
        sums.setdefault(key, []).append(rpi(a.makespan, b.makespan))
    rows = []
    for tau_value in reversed(TAU_BINS):
        row: dict = {"tau": tau_value}
        for rho_value in axis:
            values = sums.get((tau_value, rho_value))
            row[rho_value] = _mean(values) if values else None
        rows.append(row)
    return rows


def heatmap_to_csv(rows: list[dict]) -> str:
    if not rows:
        return "tau\n"
    axis = [c for c in rows[0] if c != "tau"]
    buf = io.StringIO()
    writer = csv.writer(buf, lineterminator="\n")
    writer.writerow(["tau"] + [f"{r:g}" for r in axis])
    for row in rows:
        writer.writerow(
            [f"{row['tau']:.1f}"]
            + ["" if row[c] is None else _fmt(row[c]) for c in axis]
        )
    return buf.getvalue()


# -- regression on solver gaps ---------------------------------------------------

REGRESSION_MODELS: tuple[tuple[str, tuple[str, ...]], ...] = (
    ("BM", ("BM",)),
    ("JBN", ("JBN",)),
    ("ABN", ("ABN",)),
    ("JBN+ABN", ("JBN", "ABN")),
    ("BM+JBN+ABN", ("BM", "JBN", "ABN")),
)


def run_regression_suite(
    records, solver: str, baseline: str
) -> list[tuple[str, RegressionReport]]:
    """Fit the single-, two- and three-feature models of the coupling-factor
    regression: improvement of `solver` over `baseline` explained by the
    z-normalized bottleneck features."""
    pairs = _pair_records(records, solver, baseline)
    y = np.array([rpi(a.makespan, b.makespan) for a, b in pairs])
    feats = np.array(
        [
            [f.bm, f.jbn, f.abn]
            for f in (bottleneck_features(a.rho, a.tau) for a, _ in pairs)
        ]
    )
    z = z_normalize(feats, names=["BM", "JBN", "ABN"])
    columns = {"BM": z[:, 0], "JBN": z[:, 1], "ABN": z[:, 2]}
    reports = []
    for label, names in REGRESSION_MODELS:
        design = np.column_stack(
            [np.ones(len(y))] + [columns[name] for name in names]
        )
        reports.append((label, ols_fit(design, y, names=["const", *names])))
    return reports


def format_regression_suite(reports: list[tuple[str, RegressionReport]]) -> str:
    blocks = []
    for label, report in reports:
        blocks.append(f"model,{label}")
        blocks.append(report.format_text())
    return "\n".join(blocks)


# -- external policy evaluation ----------------------------------------------------

def run_external_eval(
    instances: list[Instance],
    command,
    label: str = "external",
    timeout: float = 30.0,
    reward_scale: float = 5.0,
) -> list[ResultRecord]:
    """Evaluate one external joint policy over an instance set; rows use the
    same schema as rule-combo rows, so rankings and regressions apply as-is."""
    records = []
    with ExternalPolicyClient(command, timeout=timeout) as client:
        for instance in instances:
            trace = run_episode(
                instance, client, client, reward_scale=reward_scale, solver_id=label
            )
            records.append(make_record(instance, trace.result))
    return records

"""Greedy dispatching rules and the 10 x 4 combo solvers.

Operation rules score each unfinished job's next operation; AGV rules score
vehicles on raw transport times for the already-chosen operation. All ties
break toward the lowest index so benchmark tables are reproducible; only the
RANDOM rules consume the seeded stream.
"""

from __future__ import annotations

import math
from dataclasses import dataclass
from enum import Enum
from typing import NamedTuple

import numpy as np

from .engine import JointAction, ScheduleResult, build_result, reset
from .errors import ActionError, StateError
from .features import raw_transport_times
from .instances import Instance


class OperationRule(str, Enum):
    SPT = "SPT"            # shortest processing time of the candidate
    SMPT = "SMPT"          # shortest mean remaining processing time
    LPT = "LPT"            # longest processing time of the candidate
    MWR = "MWR"            # most work remaining
    LWR = "LWR"            # least work remaining
    FDD_MWR = "FDD/MWR"    # flow due date / work remaining
    MOR = "MOR"            # most operations remaining
    LOR = "LOR"            # least operations remaining
    RANDOM = "RANDOM"
    FCFS = "FCFS"          # earliest-ready candidate


class AgvRule(str, Enum):
    RANDOM = "RANDOM"
    SPUT = "SPUT"          # soonest pick-up: min arrival at the source
    SCTA = "SCTA"          # soonest complete transport: min task finish
    SCPT = "SCPT"          # soonest completion of pending tasks: min release


def select_operation(rule, state, rng: np.random.Generator | None = None) -> int:
    """Pick a job from the valid frontier according to `rule`."""
    rule = OperationRule(rule)
    candidates = state.valid_operations()
    if not candidates:
        raise StateError("no unscheduled operations left")
    if rule is OperationRule.RANDOM:
        if rng is None:
            raise ActionError("RANDOM operation rule needs a random generator")
        return candidates[int(rng.integers(len(candidates)))]

    inst = state.instance
    best_job = candidates[0]
    best_score = _operation_score(rule, state, inst, best_job, state.next_op[best_job])
    for j in candidates[1:]:
        score = _operation_score(rule, state, inst, j, state.next_op[j])
        if score < best_score:
            best_score = score
            best_job = j
    return best_job


def _operation_score(rule, state, inst: Instance, j: int, i: int) -> float:
    # Lower is better; max-type rules negate.
    if rule is OperationRule.SPT:
        return inst.proc_times[j][i - 1]
    if rule is OperationRule.LPT:
        return -inst.proc_times[j][i - 1]
    remaining_ops = inst.m + 2 - i
    if rule is OperationRule.SMPT:
        return inst.work_suffix[j][i - 1] / remaining_ops
    if rule is OperationRule.MWR:
        return -inst.work_suffix[j][i - 1]
    if rule is OperationRule.LWR:
        return inst.work_suffix[j][i - 1]
    if rule is OperationRule.FDD_MWR:
        remaining = inst.work_suffix[j][i - 1]
        if remaining == 0:
            return math.inf
        return inst.work_prefix[j][i - 1] / remaining
    if rule is OperationRule.MOR:
        return -remaining_ops
    if rule is OperationRule.LOR:
        return remaining_ops
    if rule is OperationRule.FCFS:
        return state.entries[j][-1].end if i > 1 else 0
    raise AssertionError(f"unhandled rule {rule}")


def select_agv(rule, state, job: int, rng: np.random.Generator | None = None) -> int:
    """Pick a vehicle for the chosen job's next operation according to `rule`."""
    rule = AgvRule(rule)
    times = raw_transport_times(state, job)  # (ready, empty, arrival, finish)
    if rule is AgvRule.RANDOM:
        if rng is None:
            raise ActionError("RANDOM agv rule needs a random generator")
        return int(rng.integers(len(times)))
    if rule is AgvRule.SPUT:
        key = 2  # arrival at the pickup machine
    elif rule is AgvRule.SCTA:
        key = 3  # finish of the whole transport task
    else:  # SCPT
        key = 0  # release from pending tasks
    best_u = 0
    best = times[0][key]
    for u in range(1, len(times)):
        if times[u][key] < best:
            best = times[u][key]
            best_u = u
    return best_u


OPERATION_RULES: tuple[OperationRule, ...] = tuple(OperationRule)
AGV_RULES: tuple[AgvRule, ...] = tuple(AgvRule)

#: Canonical order of the 40 combo solver identifiers (operation rule major).
ALL_COMBOS: tuple[str, ...] = tuple(
    f"{o.value}+{a.value}" for o in OPERATION_RULES for a in AGV_RULES
)


def combo_id(op_rule, agv_rule) -> str:
    return f"{OperationRule(op_rule).value}+{AgvRule(agv_rule).value}"


def parse_combo(identifier: str) -> tuple[OperationRule, AgvRule]:
    try:
        op_part, agv_part = identifier.rsplit("+", 1)
        return OperationRule(op_part), AgvRule(agv_part)
    except ValueError as exc:
        raise ActionError(f"unknown solver identifier {identifier!r}") from exc


@dataclass(frozen=True)
class ComboSolver:
    """One operation rule paired with one AGV rule; deterministic under seed."""

    op_rule: OperationRule
    agv_rule: AgvRule
    seed: int | tuple[int, ...] = 0

    @property
    def identifier(self) -> str:
        return combo_id(self.op_rule, self.agv_rule)

    def solve(self, instance: Instance) -> ScheduleResult:
        return solve(instance, self.op_rule, self.agv_rule, self.seed)


def solve(instance: Instance, op_rule, agv_rule, seed=0) -> ScheduleResult:
    """Run one full construction episode with the rule pair."""
    op_rule = OperationRule(op_rule)
    agv_rule = AgvRule(agv_rule)
    rng = np.random.default_rng(seed)
    state = reset(instance)
    decisions: list[tuple[int, int]] = []
    for _ in range(instance.total_ops):
        job = select_operation(op_rule, state, rng)
        agv = select_agv(agv_rule, state, job, rng)
        state = state.apply(JointAction(job, agv))
        decisions.append((job, agv))
    return build_result(state, combo_id(op_rule, agv_rule), decisions)


class ComboSweep(NamedTuple):
    results: tuple[ScheduleResult, ...]
    best_solver: str
    best_makespan: int


def solve_all_combos(instance: Instance, seed=0) -> ComboSweep:
    """Evaluate all 40 rule combinations; RANDOM streams are independent per
    combo. Reports the per-instance best (ties keep the canonical order)."""
    results = []
    best_solver = ""
    best_makespan = None
    for index, ident in enumerate(ALL_COMBOS):
        op_rule, agv_rule = parse_combo(ident)
        result = solve(instance, op_rule, agv_rule, seed=_combo_seed(seed, index))
        results.append(result)
        if best_makespan is None or result.makespan < best_makespan:
            best_makespan = result.makespan
            best_solver = ident
    return ComboSweep(tuple(results), best_solver, int(best_makespan))


def _combo_seed(seed, index: int):
    if isinstance(seed, (list, tuple)):
        return tuple(seed) + (index,)
    return (int(seed), index)

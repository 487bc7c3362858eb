import numpy as np
import pytest

from helpers import make_instance, micro_instance, zero_transport
from jsspt.engine import JointAction, lower_bound, reset, validate_schedule
from jsspt.errors import ActionError, StateError
from jsspt.instances import LOAD, GenerationConfig, generate_instance
from jsspt.rules import (
    ALL_COMBOS,
    AgvRule,
    ComboSolver,
    OperationRule,
    combo_id,
    parse_combo,
    select_agv,
    select_operation,
    solve,
    solve_all_combos,
)


def three_job_instance():
    # Three single-machine jobs with processing times 5, 3, 7.
    return make_instance([[0], [0], [0]], [[5], [3], [7]], zero_transport(1), k=1)


def test_spt_and_lpt():
    state = reset(three_job_instance())
    assert select_operation(OperationRule.SPT, state) == 1
    assert select_operation(OperationRule.LPT, state) == 2


def test_mwr_tie_breaks_lowest_index():
    inst = make_instance(
        [[0, 1], [1, 0], [0, 1]],
        [[6, 6], [8, 4], [4, 5]],
        zero_transport(2),
        k=1,
    )
    # Remaining work: 12, 12, 9 -> tie between jobs 0 and 1, take job 0.
    assert select_operation(OperationRule.MWR, reset(inst)) == 0
    assert select_operation(OperationRule.LWR, reset(inst)) == 2


def test_smpt_uses_mean_remaining():
    # Job 0: remaining {9, 0} mean 3.0; job 1: remaining {4, 0} mean 2.0.
    inst = make_instance([[0, 1], [1, 0]], [[9, 9], [4, 4]], zero_transport(2), k=1)
    state = reset(inst).apply(JointAction(0, 0)).apply(JointAction(1, 0))
    assert select_operation(OperationRule.SMPT, state) == 1


def test_fdd_mwr_ratio():
    # Candidates at op 1: FDD/MWR = p1 / total. Job 0: 2/10; job 1: 5/6.
    inst = make_instance([[0, 1], [1, 0]], [[2, 8], [5, 1]], zero_transport(2), k=1)
    assert select_operation(OperationRule.FDD_MWR, reset(inst)) == 0


def test_mor_and_lor():
    inst = make_instance([[0, 1], [1, 0]], [[3, 3], [3, 3]], zero_transport(2), k=1)
    state = reset(inst).apply(JointAction(0, 0))
    # Job 0 has 2 ops left, job 1 has 3.
    assert select_operation(OperationRule.MOR, state) == 1
    assert select_operation(OperationRule.LOR, state) == 0


def test_fcfs_picks_earliest_ready():
    # After both first ops: completions 4 (job 0) and 2 (job 1).
    transport = zero_transport(2)
    transport[LOAD][2] = 1
    transport[LOAD][3] = 1
    inst = make_instance([[0, 1], [1, 0]], [[3, 4], [1, 2]], transport, k=2)
    state = reset(inst).apply(JointAction(0, 0)).apply(JointAction(1, 1))
    assert state.entries[0][0].end == 4
    assert state.entries[1][0].end == 2
    assert select_operation(OperationRule.FCFS, state) == 1


def test_random_rule_needs_rng_and_stays_in_mask():
    state = reset(three_job_instance())
    with pytest.raises(ActionError):
        select_operation(OperationRule.RANDOM, state)
    rng = np.random.default_rng(0)
    picks = {select_operation(OperationRule.RANDOM, state, rng) for _ in range(50)}
    assert picks <= {0, 1, 2}
    assert len(picks) > 1


def test_select_operation_terminal_errors(i1):
    state = reset(i1).apply(JointAction(0, 0)).apply(JointAction(0, 0))
    with pytest.raises(StateError):
        select_operation(OperationRule.SPT, state)


def test_agv_rules_single_vehicle(i1):
    state = reset(i1)
    for rule in (AgvRule.SPUT, AgvRule.SCTA, AgvRule.SCPT):
        assert select_agv(rule, state, 0) == 0
    assert select_agv(AgvRule.RANDOM, state, 0, np.random.default_rng(0)) == 0


def test_sput_vs_scpt_divergence():
    # ERT {0, 3}, empty travel {5, 1}: arrival {5, 4}.
    transport = zero_transport(2)
    transport[2][LOAD] = 5  # M1 -> load
    transport[3][LOAD] = 1  # M2 -> load
    inst = make_instance([[0, 1]], [[2, 2]], transport, k=2)
    state = reset(inst)
    state.agv_location = [2, 3]
    state.agv_free = [0, 3]
    assert select_agv(AgvRule.SPUT, state, 0) == 1  # earliest arrival
    assert select_agv(AgvRule.SCPT, state, 0) == 0  # earliest release


def test_scta_picks_min_task_finish():
    # Task finishes {9, 7, 11}.
    transport = zero_transport(2)
    transport[LOAD][2] = 2   # load -> M1 (the loaded leg)
    transport[3][LOAD] = 7   # M2 -> load
    transport[2][LOAD] = 5   # M1 -> load
    inst = make_instance([[0, 1]], [[2, 2]], transport, k=3)
    state = reset(inst)
    state.agv_location = [3, 2, LOAD]
    state.agv_free = [0, 0, 9]
    assert select_agv(AgvRule.SCTA, state, 0) == 1


def test_select_agv_invalid_job(i1):
    with pytest.raises(ActionError):
        select_agv(AgvRule.SCTA, reset(i1), 3)


def test_solve_micro_all_combos_force_ten():
    inst = micro_instance()
    sweep = solve_all_combos(inst, seed=0)
    assert len(sweep.results) == 40
    assert all(r.makespan == 10 for r in sweep.results)
    assert sweep.best_makespan == 10
    for result in sweep.results:
        assert validate_schedule(result, inst) == []


def test_solver_identifiers():
    assert len(ALL_COMBOS) == 40
    assert len(set(ALL_COMBOS)) == 40
    assert combo_id(OperationRule.FDD_MWR, AgvRule.SCTA) == "FDD/MWR+SCTA"
    assert parse_combo("FDD/MWR+SCTA") == (OperationRule.FDD_MWR, AgvRule.SCTA)
    with pytest.raises(ActionError):
        parse_combo("NOPE+SCTA")


def test_solve_deterministic_under_seed():
    inst = generate_instance(GenerationConfig(n=6, m=6, k=3, seed=9))
    a = solve(inst, "SPT", "SCTA", seed=4)
    b = solve(inst, "SPT", "SCTA", seed=4)
    assert a.makespan == b.makespan
    assert a.rows == b.rows
    r1 = solve(inst, "RANDOM", "RANDOM", seed=4)
    r2 = solve(inst, "RANDOM", "RANDOM", seed=4)
    assert r1.rows == r2.rows


def test_random_combo_always_valid():
    inst = generate_instance(GenerationConfig(n=4, m=3, k=2, seed=21))
    bound = lower_bound(inst)
    for seed in range(100):
        result = solve(inst, "RANDOM", "RANDOM", seed=seed)
        assert validate_schedule(result, inst) == []
        assert result.makespan >= bound


def test_combo_solver_wrapper():
    inst = generate_instance(GenerationConfig(n=3, m=3, k=2, seed=2))
    solver = ComboSolver(OperationRule.MWR, AgvRule.SCTA, seed=1)
    assert solver.identifier == "MWR+SCTA"
    result = solver.solve(inst)
    assert result.solver_id == "MWR+SCTA"
    assert validate_schedule(result, inst) == []


def test_best_combo_bounds_all_makespans():
    inst = generate_instance(GenerationConfig(n=4, m=4, k=2, seed=33))
    sweep = solve_all_combos(inst, seed=1)
    assert sweep.best_makespan == min(r.makespan for r in sweep.results)
    best = next(r for r in sweep.results if r.solver_id == sweep.best_solver)
    assert best.makespan == sweep.best_makespan


def test_replaying_decisions_reproduces_schedule():
    inst = generate_instance(GenerationConfig(n=5, m=4, k=3, seed=8))
    result = solve(inst, "FDD/MWR", "SPUT", seed=0)
    state = reset(inst)
    for job, agv in result.decisions:
        state = state.apply(JointAction(job, agv))
    assert state.makespan() == result.makespan


def test_rule_choices_invariant_under_duration_doubling():
    inst = generate_instance(GenerationConfig(n=5, m=4, k=3, seed=14))
    doubled = make_instance(
        [list(r) for r in inst.routings],
        [[2 * p for p in row[:-1]] for row in inst.proc_times],
        [[2 * t for t in row] for row in inst.transport],
        k=inst.k,
    )
    state_a, state_b = reset(inst), reset(doubled)
    for rule in OperationRule:
        if rule is OperationRule.RANDOM:
            continue
        assert select_operation(rule, state_a) == select_operation(rule, state_b)
    job = select_operation(OperationRule.SPT, state_a)
    for rule in (AgvRule.SPUT, AgvRule.SCTA, AgvRule.SCPT):
        assert select_agv(rule, state_a, job) == select_agv(rule, state_b, job)

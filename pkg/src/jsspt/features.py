"""Observation builders for the two decision phases.

The operation phase sees a disjunctive graph over operation and machine
vertices (precedence edges along each job chain, bidirectional assignment
edges between operations and their machines). The AGV phase sees six scalars
per vehicle, conditioned on the operation just selected. Raw integer times
are kept next to their [0,1]-scaled counterparts so greedy rules can use real
times while learned policies consume the scaled view.
"""

from __future__ import annotations

from dataclasses import dataclass

from .engine import ScheduleState
from .errors import ActionError, StateError


def op_lower_bound(state: ScheduleState, job: int, op: int) -> int:
    """Remaining-work completion bound for one operation: the latest completion
    among the job's scheduled operations up to `op`, plus the processing time
    of its still-unscheduled operations up to `op`. Equals the operation's own
    completion time once it is scheduled, and the job's remaining-work estimate
    before that."""
    inst = state.instance
    if not (0 <= job < inst.n and 1 <= op <= inst.m + 1):
        raise StateError(f"no operation ({job}, {op}) in a {inst.n}x{inst.m} instance")
    nxt = state.next_op[job]
    done_upto = min(op, nxt - 1)
    head = state.entries[job][done_upto - 1].end if done_upto >= 1 else 0
    tail = 0
    for i in range(max(nxt, 1), op + 1):
        tail += inst.proc_times[job][i - 1]
    return head + tail


def machine_ratio(state: ScheduleState, machine: int) -> float:
    """Share of jobs whose operation on this machine is already scheduled."""
    if not 0 <= machine < state.instance.m + 2:
        raise StateError(f"machine index {machine} out of range")
    return state.machine_ops[machine] / state.instance.n


@dataclass(frozen=True)
class DisjunctiveGraph:
    """Vertex-feature tables plus edge lists; shape is constant across an
    episode, only the features change.

    Vertex ids: operation (job, op) -> job*(m+1) + op-1; machine t ->
    n*(m+1) + t with t in transport-index order (load, unload, M_1..M_m).
    """

    n: int
    m: int
    op_scheduled: tuple[int, ...]
    op_bound_raw: tuple[int, ...]
    op_bound: tuple[float, ...]
    machine_scheduled: tuple[int, ...]
    machine_ratio: tuple[float, ...]
    precedence_edges: tuple[tuple[int, int], ...]
    assignment_edges: tuple[tuple[int, int], ...]

    def op_vertex(self, job: int, op: int) -> int:
        return job * (self.m + 1) + op - 1

    def machine_vertex(self, machine: int) -> int:
        return self.n * (self.m + 1) + machine

    @property
    def vertex_count(self) -> int:
        return self.n * (self.m + 1) + self.m + 2

    def vertex_table(self) -> list[tuple[int, int, int, float]]:
        """Unified per-vertex features (vertex id, scheduled flag, machine-type
        flag, type scalar): the normalized completion bound for operation
        vertices, the scheduled-share ratio for machine vertices."""
        rows = [
            (v, self.op_scheduled[v], 0, self.op_bound[v])
            for v in range(self.n * (self.m + 1))
        ]
        base = self.n * (self.m + 1)
        rows.extend(
            (base + t, self.machine_scheduled[t], 1, self.machine_ratio[t])
            for t in range(self.m + 2)
        )
        return rows


def build_graph(state: ScheduleState) -> DisjunctiveGraph:
    """Snapshot the disjunctive graph for the operation-selection phase."""
    inst = state.instance
    n, m = inst.n, inst.m
    scheduled = []
    raw = []
    for j in range(n):
        nxt = state.next_op[j]
        for i in range(1, m + 2):
            scheduled.append(1 if i < nxt else 0)
            raw.append(op_lower_bound(state, j, i))
    lo, hi = min(raw), max(raw)
    if hi == lo:
        norm = [0.0] * len(raw)
    else:
        span = hi - lo
        norm = [(v - lo) / span for v in raw]

    ratios = [state.machine_ops[t] / n for t in range(m + 2)]

    def op_vertex(j: int, i: int) -> int:
        return j * (m + 1) + i - 1

    machine_base = n * (m + 1)
    precedence = []
    assignment = []
    for j in range(n):
        for i in range(1, m + 1):
            precedence.append((op_vertex(j, i), op_vertex(j, i + 1)))
        for i in range(1, m + 2):
            ov = op_vertex(j, i)
            mv = machine_base + inst.op_machine(j, i)
            assignment.append((ov, mv))
            assignment.append((mv, ov))
    return DisjunctiveGraph(
        n=n,
        m=m,
        op_scheduled=tuple(scheduled),
        op_bound_raw=tuple(raw),
        op_bound=tuple(norm),
        machine_scheduled=(0,) * (m + 2),
        machine_ratio=tuple(ratios),
        precedence_edges=tuple(precedence),
        assignment_edges=tuple(assignment),
    )


@dataclass(frozen=True)
class AgvFeatureVector:
    """Six transport scalars for one AGV, raw and scaled.

    pickup_ready: completion time of the selected operation's predecessor.
    machine_ready: latest completion among operations already scheduled on the
        target machine.
    agv_ready: when the vehicle finishes its pending tasks.
    empty_travel: empty travel time from the vehicle's location to the pickup.
    arrival: agv_ready + empty_travel.
    task_finish: arrival + loaded travel to the target machine.
    """

    agv: int
    pickup_ready: int
    machine_ready: int
    agv_ready: int
    empty_travel: int
    arrival: int
    task_finish: int
    pickup_ready_scaled: float
    machine_ready_scaled: float
    agv_ready_scaled: float
    empty_travel_scaled: float
    arrival_scaled: float
    task_finish_scaled: float


def raw_transport_times(
    state: ScheduleState, job: int
) -> list[tuple[int, int, int, int]]:
    """Per AGV: (agv_ready, empty_travel, arrival, task_finish) for the job's
    next operation. Cheap helper shared with the AGV dispatching rules."""
    inst = state.instance
    op = _candidate_op(state, job)
    source = inst.op_source(job, op)
    target = inst.op_machine(job, op)
    transport = inst.transport
    out = []
    for u in range(inst.k):
        ready = state.agv_free[u]
        empty = transport[state.agv_location[u]][source]
        arrival = ready + empty
        out.append((ready, empty, arrival, arrival + transport[source][target]))
    return out


def agv_features(state: ScheduleState, job: int) -> list[AgvFeatureVector]:
    """Feature vectors for every AGV, conditioned on the selected job's next
    operation. Vehicle-side features are min-max scaled across the fleet;
    pickup_ready and machine_ready are scaled against the same quantities of
    all currently valid candidate operations (max == min collapses to 0)."""
    inst = state.instance
    op = _candidate_op(state, job)
    frontier = state.valid_operations()

    pickup_ready = state.predecessor_end(job)
    machine_ready = state.machine_free[inst.op_machine(job, op)]
    pickup_peers = [state.predecessor_end(j) for j in frontier]
    machine_peers = [
        state.machine_free[inst.op_machine(j, state.next_op[j])] for j in frontier
    ]
    pickup_scaled = _scale_against(pickup_ready, pickup_peers)
    machine_scaled = _scale_against(machine_ready, machine_peers)

    raw = raw_transport_times(state, job)
    ready_s = _minmax([r[0] for r in raw])
    empty_s = _minmax([r[1] for r in raw])
    arrival_s = _minmax([r[2] for r in raw])
    finish_s = _minmax([r[3] for r in raw])

    return [
        AgvFeatureVector(
            agv=u,
            pickup_ready=pickup_ready,
            machine_ready=machine_ready,
            agv_ready=raw[u][0],
            empty_travel=raw[u][1],
            arrival=raw[u][2],
            task_finish=raw[u][3],
            pickup_ready_scaled=pickup_scaled,
            machine_ready_scaled=machine_scaled,
            agv_ready_scaled=ready_s[u],
            empty_travel_scaled=empty_s[u],
            arrival_scaled=arrival_s[u],
            task_finish_scaled=finish_s[u],
        )
        for u in range(inst.k)
    ]


def _candidate_op(state: ScheduleState, job: int) -> int:
    inst = state.instance
    if not 0 <= job < inst.n:
        raise ActionError(f"job index {job} out of range")
    op = state.next_op[job]
    if op > inst.m + 1:
        raise ActionError(f"job {job} has no unscheduled operation")
    return op


def _minmax(values: list[int]) -> list[float]:
    lo, hi = min(values), max(values)
    if hi == lo:
        return [0.0] * len(values)
    span = hi - lo
    return [(v - lo) / span for v in values]


def _scale_against(value: int, peers: list[int]) -> float:
    lo, hi = min(peers), max(peers)
    if hi == lo:
        return 0.0
    return (value - lo) / (hi - lo)

"""Shared builders for hand-crafted instances and random episodes."""

from __future__ import annotations

import numpy as np

from jsspt.engine import JointAction, ScheduleResult, build_result, reset
from jsspt.instances import GenerationConfig, Instance, generate_instance


def make_instance(
    routings,
    proc,
    transport,
    k: int = 1,
    ident: str = "test",
    seed: int = 0,
) -> Instance:
    """Build an instance from plain lists; `proc` rows omit the final zero."""
    n = len(routings)
    m = len(routings[0])
    return Instance(
        id=ident,
        n=n,
        m=m,
        k=k,
        routings=tuple(tuple(r) for r in routings),
        proc_times=tuple(tuple(p) + (0,) for p in proc),
        transport=tuple(tuple(row) for row in transport),
        seed=seed,
    )


def micro_instance() -> Instance:
    """One job, one machine, one AGV: p=5, t(load, M1)=2, t(M1, unload)=3.
    The only feasible schedule has makespan 10."""
    transport = [
        [0, 0, 2],  # from load
        [0, 0, 0],  # from unload
        [0, 3, 0],  # from M1
    ]
    return make_instance([[0]], [[5]], transport, k=1, ident="micro")


def zero_transport(m: int) -> list[list[int]]:
    size = m + 2
    return [[0] * size for _ in range(size)]


def random_small_instance(rng: np.random.Generator) -> Instance:
    """Random shape up to 10 jobs x 10 machines x 5 AGVs, times in [1, 100]."""
    n = int(rng.integers(1, 11))
    m = int(rng.integers(1, 11))
    k = int(rng.integers(1, 6))
    config = GenerationConfig(n=n, m=m, k=k, seed=int(rng.integers(2**31 - 1)))
    return generate_instance(config)


def random_episode(instance: Instance, rng: np.random.Generator) -> ScheduleResult:
    """Drive the engine with uniformly random valid actions to completion."""
    state = reset(instance)
    decisions = []
    while not state.is_terminal():
        jobs = state.valid_operations()
        job = jobs[int(rng.integers(len(jobs)))]
        agv = int(rng.integers(instance.k))
        state = state.apply(JointAction(job, agv))
        decisions.append((job, agv))
    return build_result(state, "random-walk", decisions)


def all_decision_sequences(instance: Instance):
    """Yield every complete (job, agv) decision sequence, depth first.
    Exponential; keep instances tiny. Used as the oracle's own oracle."""
    total = instance.total_ops

    def expand(state, trail):
        if len(trail) == total:
            yield trail, state
            return
        for job in state.valid_operations():
            for agv in range(instance.k):
                yield from expand(state.apply(JointAction(job, agv)), trail + ((job, agv),))

    yield from expand(reset(instance), ())

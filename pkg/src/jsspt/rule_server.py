"""Reference external policy process.

Serves a dispatching-rule pair over protocol v1 on stdin/stdout, exactly as an
externally trained agent would be wired up. The server keeps its own schedule
state, rebuilt from the instance document named in each handshake, so it can
evaluate any built-in rule without decoding times out of the observation
tables (those are still transmitted in full).

Run as:  python -m jsspt.rule_server --op-rule SPT --agv-rule SCTA \
             --instances-dir ./instances
"""

from __future__ import annotations

import argparse
import sys
from pathlib import Path

import numpy as np

from .bridge import PROTOCOL_VERSION, encode_message, parse_message
from .engine import JointAction, reset
from .instances import load_instance
from .rules import AgvRule, OperationRule, select_agv, select_operation


def serve(op_rule, agv_rule, instances_dir: Path, seed: int = 0,
          stdin=None, stdout=None) -> None:
    stdin = stdin or sys.stdin
    stdout = stdout or sys.stdout
    op_rule = OperationRule(op_rule)
    agv_rule = AgvRule(agv_rule)
    state = None
    rng = np.random.default_rng(seed)

    def reply(obj: dict) -> None:
        stdout.write(encode_message(obj) + "\n")
        stdout.flush()

    for line in stdin:
        line = line.strip()
        if not line:
            continue
        msg = parse_message(line)
        kind = msg["type"]
        if kind == "hello":
            instance = load_instance(instances_dir / f"{msg['instance']}.json")
            state = reset(instance)
            rng = np.random.default_rng(seed)
            reply({"type": "ready", "version": PROTOCOL_VERSION})
        elif kind == "observation" and msg["phase"] == "operation":
            job = select_operation(op_rule, state, rng)
            reply({"type": "decision", "step": msg["step"], "choice": job})
        elif kind == "observation" and msg["phase"] == "agv":
            job = msg["selected_job"]
            agv = select_agv(agv_rule, state, job, rng)
            reply({"type": "decision", "step": msg["step"], "choice": agv})
            state = state.apply(JointAction(job, agv))
        elif kind == "terminal":
            state = None
        else:
            raise SystemExit(f"rule_server: unexpected message type {kind!r}")


def main(argv=None) -> int:
    parser = argparse.ArgumentParser(
        prog="jsspt.rule_server",
        description="Serve a dispatching-rule pair over the external policy protocol.",
    )
    parser.add_argument("--op-rule", required=True, help="operation-selection rule name")
    parser.add_argument("--agv-rule", required=True, help="AGV-selection rule name")
    parser.add_argument(
        "--instances-dir",
        required=True,
        type=Path,
        help="directory holding <instance-id>.json documents",
    )
    parser.add_argument("--seed", type=int, default=0)
    args = parser.parse_args(argv)
    serve(args.op_rule, args.agv_rule, args.instances_dir, args.seed)
    return 0


if __name__ == "__main__":
    raise SystemExit(main())

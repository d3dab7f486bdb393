# Copyright (C) 2026 The OpenXOR Workbench authors
#
# OpenXOR Workbench is free software: you can redistribute it and/or modify
# it under the terms of the GNU Lesser General Public License as published by
# the Free Software Foundation, either version 3 of the License, or
# (at your option) any later version.
#
# OpenXOR Workbench is distributed in the hope that it will be useful,
# but WITHOUT ANY WARRANTY; without even the implied warranty of
# MERCHANTABILITY or FITNESS FOR A PARTICULAR PURPOSE.  See the
# GNU Lesser General Public License for more details.
#
# You should have received a copy of the GNU Lesser General Public License
# along with OpenXOR Workbench. If not, see <https://www.gnu.org/licenses/>.

"""
Exact and heuristic solvers.

`solve_backtracking` is the depth-first expansion of partial operation
sequences: each node is an (pos, acc) state and its two children extend the
prefix with NOP, then XOR. It doubles as the fixed-point view of OpenXOR, where
the operator extends partial sequences until a valid one is found or the tree
is exhausted.
"""

import json
from collections.abc import Iterable, Mapping, Sequence
from dataclasses import dataclass, field
from enum import Enum
from pathlib import Path
from typing import Any, Protocol

from openxor import consts
from openxor.core import Instance, OperatorState, Op, rollout, verify
from openxor.errors import ContractViolation, DatasetFormatError, OpenXorError
from openxor.logger import InstanceLogger, WorkbenchLogger
from openxor.rng import Xoshiro256
from openxor.utils import Stopwatch, atomic_write_text

_log = WorkbenchLogger("solve")


class SolveStatus(Enum):
    SOLVED = "Solved"
    EXHAUSTED = "Exhausted"
    TIMEOUT = "Timeout"
    # a heuristic produced a full attempt that does not verify
    FAILED = "Failed"


@dataclass(frozen=True)
class SolveOutcome:
    instance_id: str
    method: str
    status: SolveStatus
    ops: tuple[Op, ...] | None
    nodes_explored: int
    wall_time: float
    failed_at: int | None = None

    @property
    def solved(self) -> bool:
        return self.status is SolveStatus.SOLVED

    def to_dict(self, timing: bool = True) -> dict[str, Any]:
        data: dict[str, Any] = {
            "id": self.instance_id,
            "method": self.method,
            "status": self.status.value,
            "ops": None if self.ops is None else [op.name for op in self.ops],
            "nodes": self.nodes_explored,
            "time_s": round(self.wall_time, 6) if timing else 0.0,
        }
        if self.failed_at is not None:
            data["failed_at"] = self.failed_at
        return data

    @staticmethod
    def from_dict(data: Mapping[str, Any]) -> "SolveOutcome":
        ops = data.get("ops")
        return SolveOutcome(
            instance_id=str(data["id"]),
            method=str(data.get("method", "unknown")),
            status=SolveStatus(data["status"]),
            ops=None if ops is None else tuple(Op.parse(op) for op in ops),
            nodes_explored=int(data.get("nodes", 0)),
            wall_time=float(data.get("time_s", 0.0)),
            failed_at=data.get("failed_at"),
        )


def write_outcomes(
    path: Path, outcomes: Iterable[SolveOutcome], timing: bool = True
) -> None:
    text = "".join(
        json.dumps(o.to_dict(timing), separators=(",", ":")) + "\n" for o in outcomes
    )
    try:
        atomic_write_text(path, text)
    except OSError as e:
        raise OSError(
            e.errno, f"Failed to write results: {e.strerror}", str(path)
        ) from e


def read_outcomes(path: Path) -> list[SolveOutcome]:
    try:
        lines = path.read_text(encoding="utf-8").splitlines()
    except OSError as e:
        raise OSError(
            e.errno, f"Failed to read results: {e.strerror}", str(path)
        ) from e
    outcomes = []
    for line_num, line in enumerate(lines, 1):
        if not line.strip():
            continue
        try:
            outcomes.append(SolveOutcome.from_dict(json.loads(line)))
        except (ValueError, KeyError, TypeError) as e:
            raise DatasetFormatError(path, line_num, str(e)) from e
    return outcomes


def attempt_outcome(
    instance: Instance,
    method: str,
    ops: Sequence[Op],
    nodes: int,
    wall_time: float,
    failed_at: int | None = None,
) -> SolveOutcome:
    """Wrap a full-length attempt; Solved only if it verifies."""
    ops = tuple(ops)
    exact = verify(instance, ops).exact
    return SolveOutcome(
        instance.id,
        method,
        SolveStatus.SOLVED if exact else SolveStatus.FAILED,
        ops,
        max(1, nodes),
        wall_time,
        None if exact else failed_at,
    )


def _certified(
    instance: Instance, method: str, ops: Sequence[Op], nodes: int, wall_time: float
) -> SolveOutcome:
    outcome = attempt_outcome(instance, method, ops, nodes, wall_time)
    if not outcome.solved:
        raise OpenXorError(f"{instance.id}: {method} produced a sequence that fails")
    return outcome


def solve_backtracking(
    instance: Instance, max_steps: int = consts.DEFAULT_MAX_STEPS
) -> SolveOutcome:
    """
    Depth-first search trying NOP before XOR, pruning on a violated checkpoint
    and on a target mismatch at the end.

    :param max_steps: node budget; the search reports Timeout once it is spent.
    """
    if max_steps < 1:
        raise ContractViolation("max_steps must be at least 1")
    bits, n, target = instance.bits, instance.n, instance.target
    required = instance.checkpoint_map
    ops = [Op.NOP] * n
    steps = 0
    found = False
    timed_out = False

    with Stopwatch() as watch:
        # frame: [pos, acc, stage]; stage 0 = enter, 1 = NOP child done,
        # 2 = XOR child done
        stack: list[list[int]] = [[0, 0, 0]]
        while stack:
            frame = stack[-1]
            pos, acc, stage = frame
            if stage == 0:
                if steps >= max_steps:
                    timed_out = True
                    break
                steps += 1
                if pos in required and acc != required[pos]:
                    stack.pop()
                    found = False
                elif pos == n:
                    stack.pop()
                    found = acc == target
                else:
                    frame[2] = 1
                    ops[pos] = Op.NOP
                    stack.append([pos + 1, acc, 0])
            elif found:
                stack.pop()
            elif stage == 1:
                frame[2] = 2
                ops[pos] = Op.XOR
                stack.append([pos + 1, acc ^ bits[pos], 0])
            else:
                stack.pop()
                found = False

    if found:
        return _certified(instance, "backtrack", ops, steps, watch.elapsed)
    status = SolveStatus.TIMEOUT if timed_out else SolveStatus.EXHAUSTED
    InstanceLogger.from_component_logger(instance.id, _log).debug(
        f"{status.value} after {steps} nodes."
    )
    return SolveOutcome(
        instance.id, "backtrack", status, None, max(1, steps), watch.elapsed
    )


def solve_random(instance: Instance, rng: Xoshiro256) -> SolveOutcome:
    with Stopwatch() as watch:
        ops = [Op(b) for b in rng.bits(instance.n)]
    return attempt_outcome(instance, "random", ops, 1, watch.elapsed)


def greedy_policy(state: OperatorState, prefix: Sequence[Op]) -> Op:
    """XOR while the accumulator disagrees with the target; checkpoint-blind."""
    return Op.XOR if state.acc != state.instance.target else Op.NOP


def solve_greedy(instance: Instance) -> SolveOutcome:
    with Stopwatch() as watch:
        ops = rollout(instance, greedy_policy)
    return attempt_outcome(instance, "greedy", ops, instance.n, watch.elapsed)


class BeamScoring(Enum):
    CHECKPOINTS_SATISFIED = "checkpoints"
    POLICY_LOG_PROB = "logprob"


class StepScorer(Protocol):
    def op_log_probs(self, state: OperatorState) -> Mapping[Op, float]: ...


@dataclass(frozen=True)
class BeamConfig:
    beam_size: int
    scoring: BeamScoring = BeamScoring.CHECKPOINTS_SATISFIED
    scorer: StepScorer | None = field(default=None, compare=False)

    def __post_init__(self) -> None:
        if self.beam_size < 1:
            raise ContractViolation("beam size must be at least 1")
        if self.scoring is BeamScoring.POLICY_LOG_PROB and self.scorer is None:
            raise ContractViolation("log-probability scoring needs a scorer")


@dataclass
class _Path:
    score: float
    # (op, parent) cons cell; None for the empty prefix
    node: tuple[Op, Any] | None
    acc: int
    # position of this path among the beam in pure lexicographic order
    lex_rank: int = 0

    def ops(self) -> list[Op]:
        out: list[Op] = []
        node = self.node
        while node is not None:
            out.append(node[0])
            node = node[1]
        out.reverse()
        return out


def _run_beam(
    instance: Instance, config: BeamConfig
) -> tuple[list[Op], int, int | None]:
    bits, required = instance.bits, instance.checkpoint_map
    use_policy = config.scoring is BeamScoring.POLICY_LOG_PROB
    beam = [_Path(0.0, None, 0)]
    nodes = 0
    log_probs: Mapping[Op, float] = {}

    for pos in range(instance.n):
        need = required.get(pos + 1)
        children: list[tuple[tuple[float, int, int], _Path]] = []
        dropped: list[tuple[tuple[float, int, int], _Path]] = []
        for path in beam:
            if use_policy and config.scorer is not None:
                log_probs = config.scorer.op_log_probs(
                    OperatorState(instance, path.acc, pos)
                )
            for op in (Op.NOP, Op.XOR):
                nodes += 1
                acc = path.acc ^ (bits[pos] & op)
                gain = log_probs[op] if use_policy else float(need is not None)
                child = _Path(path.score + gain, (op, path.node), acc)
                key = (-child.score, path.lex_rank, int(op))
                if need is not None and acc != need:
                    dropped.append((key, child))
                else:
                    children.append((key, child))
        if not children:
            best = min(dropped, key=lambda c: c[0])[1]
            return best.ops() + [Op.NOP] * (instance.n - pos - 1), nodes, pos + 1
        children.sort(key=lambda c: c[0])
        kept = children[: config.beam_size]
        for rank, (_, child) in enumerate(sorted(kept, key=lambda c: c[0][1:])):
            child.lex_rank = rank
        beam = [child for _, child in kept]

    for path in beam:
        if path.acc == instance.target:
            return path.ops(), nodes, None
    return beam[0].ops(), nodes, instance.n


def solve_beam(instance: Instance, config: BeamConfig) -> SolveOutcome:
    """
    Keep the best `beam_size` prefixes per position. Children violating the
    checkpoint at the position just reached are dropped and the beam is
    refilled from the remaining children. Ties go to the lexicographically
    smaller prefix (NOP < XOR).

    A beam that dies still returns an attempt: the best dropped prefix padded
    with NOP, marked failed at the position where the beam emptied.
    """
    with Stopwatch() as watch:
        ops, nodes, failed_at = _run_beam(instance, config)
    return attempt_outcome(instance, "beam", ops, nodes, watch.elapsed, failed_at)


def _segment_ops(instance: Instance) -> tuple[list[Op] | None, int]:
    bits, n = instance.bits, instance.n
    constraints = [(c.position, c.required) for c in instance.checkpoints]
    if constraints and constraints[-1][0] == n:
        if constraints[-1][1] != instance.target:
            return None, 1
    else:
        constraints.append((n, instance.target))

    ops = [Op.NOP] * n
    acc, start = 0, 0
    for segments, (position, value) in enumerate(constraints, 1):
        if value != acc:
            flip = next((j for j in range(start, position) if bits[j]), None)
            if flip is None:
                return None, segments
            ops[flip] = Op.XOR
        acc, start = value, position
    return ops, len(constraints)


def solve_segments(instance: Instance) -> SolveOutcome:
    """
    Fix the parity of each stretch between consecutive constraints with a
    single XOR on the stretch's first one-bit. Exhausted iff a stretch must
    flip the accumulator but holds no one-bit.
    """
    with Stopwatch() as watch:
        ops, segments = _segment_ops(instance)
    if ops is None:
        return SolveOutcome(
            instance.id,
            "segments",
            SolveStatus.EXHAUSTED,
            None,
            segments,
            watch.elapsed,
        )
    return _certified(instance, "segments", ops, segments, watch.elapsed)

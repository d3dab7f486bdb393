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

"""Prompt rendering and answer extraction for the text-only task protocol."""

import re
from collections.abc import Sequence

from openxor.core import Checkpoint, Instance, Op
from openxor.errors import ContractViolation, ResponseFormatError

PROMPT_TEMPLATE = """\
# XOR/NOP Reasoning Challenge with Checkpoint Constraints

You are given a sequence of bits and need to determine a sequence of
operations (XOR or NOP) that produces a target output while satisfying
checkpoint constraints.

## Rules:
- Start with accumulator = 0
- Process each bit left-to-right with an operation:
  * XOR: accumulator = accumulator XOR current_bit
  * NOP: accumulator stays unchanged
- **Checkpoint constraints:** At certain positions, the accumulator
  MUST equal a specific required value
- Goal: Final accumulator should equal the target output AND all
  checkpoints must be satisfied

## Few-Shot Examples:
{examples}

## Your Task:
{task}

**CRITICAL:** Your solution MUST satisfy ALL checkpoint constraints.

Please provide a valid sequence of operations (XOR or NOP).
Your answer should be a space-separated sequence of {n} operations.

Operations:
"""

_WORD = re.compile(r"[A-Za-z0-9_]+")


def format_bits(bits: Sequence[int]) -> str:
    return "[" + ", ".join(str(b) for b in bits) + "]"


def format_checkpoints(checkpoints: Sequence[Checkpoint]) -> str:
    if not checkpoints:
        return "none"
    return ", ".join(f"position {c.position} → {c.required}" for c in checkpoints)


def format_ops(ops: Sequence[Op]) -> str:
    return " ".join(op.name for op in ops)


def _problem_lines(instance: Instance) -> list[str]:
    return [
        f"Input bits: {format_bits(instance.bits)}",
        f"Target output: {instance.target}",
        f"Checkpoint constraints: {format_checkpoints(instance.checkpoints)}",
    ]


def render_prompt(instance: Instance) -> str:
    """The task prompt with the instance's few-shot demonstrations, LF newlines."""
    if not instance.few_shot:
        raise ContractViolation(f"{instance.id}: rendering needs few-shot examples")
    blocks = []
    for j, example in enumerate(instance.few_shot, 1):
        if example.ground_truth is None:
            raise ContractViolation(f"{example.id}: few-shot example has no solution")
        lines = [
            f"Example {j}:",
            *_problem_lines(example),
            f"Operations: {format_ops(example.ground_truth)}",
        ]
        blocks.append("\n".join(lines))
    return PROMPT_TEMPLATE.format(
        examples="\n\n".join(blocks),
        task="\n".join(_problem_lines(instance)),
        n=instance.n,
    )


def parse_response(text: str, n: int | None = None) -> list[Op]:
    """
    The last unbroken run of XOR/NOP words in `text`, case-insensitive. Any
    other word or number ends a run; punctuation does not.

    :raises ResponseFormatError: reason "no_operations" when no run exists,
        "length" when the run does not hold `n` operations.
    """
    run: list[Op] = []
    last: list[Op] = []
    for word in _WORD.findall(text):
        upper = word.upper()
        if upper in ("XOR", "NOP"):
            run.append(Op[upper])
        elif run:
            last, run = run, []
    if run:
        last = run
    if not last:
        raise ResponseFormatError("no_operations", "no XOR/NOP sequence found")
    if n is not None and len(last) != n:
        raise ResponseFormatError(
            "length", f"expected {n} operations, found {len(last)}"
        )
    return last

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
The OpenXOR problem model.

An instance is a bit sequence, a target bit and checkpoints. A solution picks
XOR or NOP for every bit; the accumulator starts at 0 and is XOR-ed with the
bit wherever XOR was picked. Checkpoint (p, v) demands acc[p] = v, where acc[p]
is the accumulator after p bits (1-based), and acc[n] must equal the target.
"""

import json
from collections.abc import Callable, Iterable, Iterator, Sequence
from dataclasses import dataclass, field
from enum import IntEnum
from fractions import Fraction
from functools import cached_property
from pathlib import Path
from typing import Any

from openxor.consts import MAX_FEW_SHOT_N
from openxor.errors import ContractViolation, DatasetFormatError


class Op(IntEnum):
    # the value is the XOR mask applied to the current bit
    NOP = 0
    XOR = 1

    @staticmethod
    def parse(token: str) -> "Op":
        if not isinstance(token, str):
            raise ValueError(f"Operation must be a string, got {token!r}")
        try:
            return Op[token.strip().upper()]
        except KeyError as e:
            raise ValueError(f"Unknown operation {token!r}") from e


@dataclass(frozen=True)
class Checkpoint:
    position: int
    required: int


@dataclass(frozen=True)
class Trace:
    acc: tuple[int, ...]


@dataclass(frozen=True)
class VerifyReport:
    checkpoint_results: tuple[bool, ...]
    target_ok: bool

    @property
    def exact(self) -> bool:
        return self.target_ok and all(self.checkpoint_results)

    @property
    def checkpoint_fraction(self) -> Fraction:
        if not self.checkpoint_results:
            return Fraction(1)
        return Fraction(sum(self.checkpoint_results), len(self.checkpoint_results))


@dataclass(frozen=True)
class Instance:
    id: str
    bits: tuple[int, ...]
    target: int
    checkpoints: tuple[Checkpoint, ...] = ()
    ground_truth: tuple[Op, ...] | None = None
    few_shot: tuple["Instance", ...] = field(default=())

    def __post_init__(self) -> None:
        if not self.bits:
            raise ContractViolation(f"{self.id}: an instance needs at least one bit")
        if any(b not in (0, 1) for b in self.bits) or self.target not in (0, 1):
            raise ContractViolation(f"{self.id}: bits and target must be 0 or 1")
        positions = [c.position for c in self.checkpoints]
        if positions != sorted(set(positions)):
            raise ContractViolation(
                f"{self.id}: checkpoint positions must be unique and ascending"
            )
        if positions and not 1 <= positions[0] <= positions[-1] <= self.n:
            raise ContractViolation(f"{self.id}: checkpoint outside [1, {self.n}]")
        if any(c.required not in (0, 1) for c in self.checkpoints):
            raise ContractViolation(f"{self.id}: checkpoint values must be 0 or 1")
        if self.ground_truth is not None and not verify(self, self.ground_truth).exact:
            raise ContractViolation(f"{self.id}: ground truth does not verify")
        for example in self.few_shot:
            if example.ground_truth is None or example.n > MAX_FEW_SHOT_N:
                raise ContractViolation(
                    f"{self.id}: few-shot examples need a ground truth and "
                    f"n <= {MAX_FEW_SHOT_N}"
                )

    @property
    def n(self) -> int:
        return len(self.bits)

    @property
    def k(self) -> int:
        return len(self.checkpoints)

    @cached_property
    def checkpoint_map(self) -> dict[int, int]:
        return {c.position: c.required for c in self.checkpoints}

    def to_dict(self) -> dict[str, Any]:
        return {
            "id": self.id,
            "bits": list(self.bits),
            "target": self.target,
            "checkpoints": [[c.position, c.required] for c in self.checkpoints],
            "ground_truth": None
            if self.ground_truth is None
            else [op.name for op in self.ground_truth],
            "few_shot": [example.to_dict() for example in self.few_shot],
        }

    @staticmethod
    def from_dict(data: dict[str, Any], zero_based: bool = False) -> "Instance":
        """
        :param zero_based: checkpoints are written as "acc after index p" with
            0-based p (the worked example's `{3 -> 1}` notation); shift them.
        """
        shift = 1 if zero_based else 0
        ground_truth = data.get("ground_truth")
        return Instance(
            id=str(data["id"]),
            bits=tuple(int(b) for b in data["bits"]),
            target=int(data["target"]),
            checkpoints=tuple(
                Checkpoint(int(p) + shift, int(v))
                for p, v in sorted(data.get("checkpoints") or [], key=lambda c: c[0])
            ),
            ground_truth=None
            if ground_truth is None
            else tuple(Op.parse(op) for op in ground_truth),
            few_shot=tuple(
                Instance.from_dict(example, zero_based)
                for example in data.get("few_shot") or []
            ),
        )


def simulate(bits: Sequence[int], ops: Sequence[Op]) -> Trace:
    if len(bits) != len(ops):
        raise ContractViolation(f"{len(bits)} bits but {len(ops)} operations")
    acc = [0]
    for bit, op in zip(bits, ops, strict=True):
        acc.append(acc[-1] ^ (bit & op))
    return Trace(tuple(acc))


def verify(instance: Instance, ops: Sequence[Op]) -> VerifyReport:
    """Check every checkpoint and the target on the full trace."""
    trace = simulate(instance.bits, ops).acc
    return VerifyReport(
        checkpoint_results=tuple(
            trace[c.position] == c.required for c in instance.checkpoints
        ),
        target_ok=trace[-1] == instance.target,
    )


@dataclass(frozen=True)
class OperatorState:
    """Accumulator and number of bits consumed, over a fixed instance."""

    instance: Instance
    acc: int = 0
    pos: int = 0

    @property
    def done(self) -> bool:
        return self.pos >= self.instance.n

    def apply(self, op: Op) -> "OperatorState":
        if self.done:
            raise ContractViolation("cannot apply an operation past the last bit")
        bit = self.instance.bits[self.pos]
        return OperatorState(self.instance, self.acc ^ (bit & op), self.pos + 1)

    def violates_checkpoint(self) -> bool:
        """The checkpoint at the current position, if any, is not met."""
        required = self.instance.checkpoint_map.get(self.pos)
        return required is not None and required != self.acc


Policy = Callable[[OperatorState, Sequence[Op]], Op]


def rollout(instance: Instance, policy: Policy, steps: int | None = None) -> list[Op]:
    """Run `policy` from the initial state for `steps` (default n) positions."""
    state = OperatorState(instance)
    ops: list[Op] = []
    for _ in range(instance.n if steps is None else steps):
        op = Op(policy(state, ops))
        ops.append(op)
        state = state.apply(op)
    return ops


def dumps_instance(instance: Instance) -> str:
    return json.dumps(instance.to_dict(), separators=(",", ":"), ensure_ascii=False)


def iter_instances(path: Path, zero_based: bool = False) -> Iterator[Instance]:
    try:
        with path.open(encoding="utf-8") as f:
            for line_num, line in enumerate(f, 1):
                line = line.strip()
                if not line:
                    continue
                try:
                    yield Instance.from_dict(json.loads(line), zero_based)
                except (ValueError, KeyError, TypeError, ContractViolation) as e:
                    raise DatasetFormatError(path, line_num, str(e)) from e
    except OSError as e:
        raise OSError(
            e.errno, f"Failed to read dataset: {e.strerror}", str(path)
        ) from e


def load_instances(path: Path, zero_based: bool = False) -> list[Instance]:
    return list(iter_instances(path, zero_based))


def write_instances(path: Path, instances: Iterable[Instance]) -> None:
    text = "".join(dumps_instance(instance) + "\n" for instance in instances)
    try:
        path.parent.mkdir(parents=True, exist_ok=True)
        path.write_bytes(text.encode("utf-8"))
    except OSError as e:
        raise OSError(
            e.errno, f"Failed to write dataset: {e.strerror}", str(path)
        ) from e

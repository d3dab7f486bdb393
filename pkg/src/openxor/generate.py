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
Instance generation by reverse construction: draw bits and a random solution,
simulate it, then read checkpoint values and the target off its own trace, so
every instance has at least one solution.
"""

import math
from concurrent.futures import ProcessPoolExecutor
from dataclasses import dataclass, field, replace
from pathlib import Path

from openxor import consts
from openxor.core import (
    Checkpoint,
    Instance,
    Op,
    Policy,
    rollout,
    simulate,
    verify,
    write_instances,
)
from openxor.errors import ContractViolation
from openxor.logger import WorkbenchLogger
from openxor.rng import Xoshiro256
from openxor.solvers import solve_segments

_log = WorkbenchLogger("generate")

# share of XOR decisions above which a policy counts as XOR-leaning
XOR_TENDENCY = 0.6


def checkpoint_count(n: int, density: float) -> int:
    """round(n * density), halves rounded up so every port agrees."""
    return max(0, math.floor(n * density + 0.5))


@dataclass(frozen=True)
class GenConfig:
    n: int
    checkpoint_density: float
    seed: int = 0
    count: int = 1
    # None draws 3, 4 or 5 per instance
    few_shot_count: int | None = None
    few_shot_n: int = consts.FEW_SHOT_N
    id_prefix: str = "oxr-"

    def __post_init__(self) -> None:
        if self.n < 1:
            raise ContractViolation("n must be at least 1")
        if not 0 < self.checkpoint_density <= 1:
            raise ContractViolation("checkpoint density must lie in (0, 1]")
        if self.count < 0:
            raise ContractViolation("count must not be negative")
        few_shot = self.few_shot_count
        if few_shot is not None and not 3 <= few_shot <= 5:  # noqa: PLR2004
            raise ContractViolation("few_shot_count must lie in [3, 5]")
        if not 1 <= self.few_shot_n <= consts.MAX_FEW_SHOT_N:
            raise ContractViolation(
                f"few-shot length must lie in [1, {consts.MAX_FEW_SHOT_N}]"
            )
        if not 0 <= self.seed < 1 << 64:
            raise ContractViolation("seed must be an unsigned 64-bit integer")

    @property
    def k(self) -> int:
        return checkpoint_count(self.n, self.checkpoint_density)


@dataclass(frozen=True)
class Dataset:
    config: GenConfig
    instances: tuple[Instance, ...]
    generator_version: str = field(default=consts.GENERATOR_VERSION)

    def write(self, path: Path) -> None:
        write_instances(path, self.instances)


def _construct(rng: Xoshiro256, n: int, k: int, instance_id: str) -> Instance:
    bits = rng.bits(n)
    ops = tuple(Op(b) for b in rng.bits(n))
    acc = simulate(bits, ops).acc
    positions = rng.sample_positions(k, n)
    return Instance(
        id=instance_id,
        bits=tuple(bits),
        target=acc[n],
        checkpoints=tuple(Checkpoint(p, acc[p]) for p in positions),
        ground_truth=ops,
    )


def generate_instance(
    config: GenConfig, rng: Xoshiro256, instance_id: str = "oxr-0000"
) -> Instance:
    """One reverse-constructed instance with its few-shot demonstrations."""
    instance = _construct(rng, config.n, config.k, instance_id)
    shots = config.few_shot_count or 3 + rng.below(3)
    few_shot = tuple(
        _construct(rng, config.few_shot_n, 1, f"{instance_id}-fs{j}")
        for j in range(shots)
    )
    return replace(instance, few_shot=few_shot)


def _generate_indexed(config: GenConfig, index: int) -> Instance:
    return generate_instance(
        config,
        Xoshiro256.stream(config.seed, index),
        f"{config.id_prefix}{index:04d}",
    )


def generate_dataset(config: GenConfig, jobs: int = 1) -> Dataset:
    """
    Instance i draws from stream (seed, i), so output does not depend on
    `jobs`.
    """
    _log.info(
        f"Generating {config.count} instances, n={config.n}, k={config.k}, "
        f"seed={config.seed}."
    )
    indices = range(config.count)
    if jobs > 1 and config.count > 1:
        with ProcessPoolExecutor(max_workers=jobs) as pool:
            instances = tuple(
                pool.map(
                    _generate_indexed,
                    [config] * config.count,
                    indices,
                    chunksize=max(1, config.count // (4 * jobs)),
                )
            )
    else:
        instances = tuple(_generate_indexed(config, i) for i in indices)
    return Dataset(config, instances)


def _deterministic_rollout(instance: Instance, policy: Policy) -> list[Op]:
    first = rollout(instance, policy)
    if rollout(instance, policy) != first:
        raise ContractViolation("policy gave different decisions on identical input")
    return first


def adversarial_against(policy: Policy, n: int, seed: int = 0) -> Instance:
    """
    Build a satisfiable instance the deterministic `policy` fails on.

    The policy runs on a checkpoint-free instance; at the midpoint an XOR-leaning
    policy gets a later checkpoint demanding the midpoint accumulator (it would
    need NOP), any other policy gets a midpoint checkpoint demanding the
    flipped accumulator (it would need XOR). If the policy reacts to the
    checkpoint and passes anyway, every other single checkpoint in [n/2, n]
    contradicting its free run is tried.
    """
    if n < 2:  # noqa: PLR2004
        raise ContractViolation("adversarial instances need n >= 2")
    rng = Xoshiro256.stream(seed, 0)
    bits = rng.bits(n)
    # a one-bit at both ends keeps every midpoint value and target reachable
    bits[0] = bits[-1] = 1
    base = Instance(f"adv-{seed:04d}", tuple(bits), rng.below(2))

    free_run = _deterministic_rollout(base, policy)
    acc = simulate(base.bits, free_run).acc
    half = n // 2
    xor_share = sum(free_run[:half]) / half

    if xor_share > XOR_TENDENCY:
        candidates = [
            (p, acc[half]) for p in range(half + 1, n + 1) if acc[p] != acc[half]
        ]
    else:
        candidates = [(half, acc[half] ^ 1)]
    candidates += [(p, acc[p] ^ 1) for p in range(half, n + 1)]

    seen = set()
    for position, value in candidates:
        if (position, value) in seen:
            continue
        seen.add((position, value))
        candidate = replace(base, checkpoints=(Checkpoint(position, value),))
        certificate = solve_segments(candidate)
        if not certificate.solved:
            continue
        if not verify(candidate, _deterministic_rollout(candidate, policy)).exact:
            _log.debug(
                f"Checkpoint ({position}, {value}) defeats the policy "
                f"(XOR share {xor_share:.2f})."
            )
            return replace(candidate, ground_truth=certificate.ops)
    raise ContractViolation(f"no single checkpoint in [{half}, {n}] defeats the policy")

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
Metrics, report tables and empirical checks of the search bounds.

Checkpoint and target accuracy are taken over completed attempts only and
evaluate the whole trace, also past a violated checkpoint.
"""

import csv
import io
import math
from collections.abc import Iterable, Mapping, Sequence
from dataclasses import dataclass, field
from fractions import Fraction
from pathlib import Path
from typing import Any

import numpy as np
from tabulate import tabulate

from openxor import consts
from openxor.core import Checkpoint, Instance, verify
from openxor.errors import ContractViolation, ResultMismatchError
from openxor.logger import WorkbenchLogger
from openxor.rng import Xoshiro256
from openxor.solvers import (
    BeamConfig,
    BeamScoring,
    SolveOutcome,
    solve_beam,
    solve_random,
)
from openxor.utils import atomic_write_text, file_sha256

_log = WorkbenchLogger("eval")

EXACT_METHODS = frozenset({"backtrack", "segments"})
MAX_ENUMERATION_N = 24
WILSON_Z = 1.959963984540054
BOUND_SLACK = 1.5
# markdown and csv marker for a metric with nothing to average over
UNDEFINED = "N/A"


@dataclass(frozen=True)
class Metrics:
    n_instances: int
    completion_rate: float
    exact_accuracy: float
    checkpoint_accuracy: float | None
    target_accuracy: float | None
    mean_time: float | None


def score(
    instances: Sequence[Instance], outcomes: Iterable[SolveOutcome]
) -> Metrics:
    """Pair outcomes with instances by id and compute the five metrics."""
    by_id: dict[str, SolveOutcome] = {}
    duplicates = set()
    for outcome in outcomes:
        if outcome.instance_id in by_id:
            duplicates.add(outcome.instance_id)
        by_id[outcome.instance_id] = outcome
    known = {instance.id for instance in instances}
    missing = known - by_id.keys()
    unexpected = (by_id.keys() - known) | duplicates
    if missing or unexpected:
        raise ResultMismatchError(missing, unexpected)

    completed = exact = target_ok = 0
    checkpoint_total = Fraction(0)
    time_total = 0.0
    for instance in sorted(instances, key=lambda i: i.id):
        outcome = by_id[instance.id]
        if outcome.ops is None or len(outcome.ops) != instance.n:
            continue
        report = verify(instance, outcome.ops)
        completed += 1
        exact += report.exact
        target_ok += report.target_ok
        checkpoint_total += report.checkpoint_fraction
        time_total += outcome.wall_time

    total = len(instances)
    return Metrics(
        n_instances=total,
        completion_rate=completed / total if total else 0.0,
        exact_accuracy=exact / total if total else 0.0,
        checkpoint_accuracy=float(checkpoint_total / completed) if completed else None,
        target_accuracy=target_ok / completed if completed else None,
        mean_time=time_total / completed if completed else None,
    )


@dataclass(frozen=True)
class MethodRow:
    method: str
    metrics: Metrics


def check_dominance(rows: Sequence[MethodRow]) -> list[str]:
    """Complaints for every heuristic that beats an exact solver on exactness."""
    exact_rows = [r for r in rows if r.method in EXACT_METHODS]
    return [
        f"{row.method} ({row.metrics.exact_accuracy:.3f}) beats exact solver "
        f"{ref.method} ({ref.metrics.exact_accuracy:.3f})"
        for row in rows
        if row.method not in EXACT_METHODS
        for ref in exact_rows
        if row.metrics.exact_accuracy > ref.metrics.exact_accuracy
    ]


@dataclass(frozen=True)
class DatasetFingerprint:
    sha256: str
    count: int
    n_values: tuple[int, ...]
    mean_density: float
    seed: int | None = None

    @staticmethod
    def of(
        path: Path, instances: Sequence[Instance], seed: int | None = None
    ) -> "DatasetFingerprint":
        densities = [i.k / i.n for i in instances]
        return DatasetFingerprint(
            sha256=file_sha256(path),
            count=len(instances),
            n_values=tuple(sorted({i.n for i in instances})),
            mean_density=sum(densities) / len(densities) if densities else 0.0,
            seed=seed,
        )

    def describe(self) -> str:
        seed = "" if self.seed is None else f", seed {self.seed}"
        return (
            f"{self.count} instances, n in {list(self.n_values)}, "
            f"density {self.mean_density:.4f}{seed}, sha256 {self.sha256[:16]}"
        )


def _percent(value: float | None) -> str:
    return UNDEFINED if value is None else f"{100 * value:.1f}%"


def _seconds(value: float | None) -> str:
    return UNDEFINED if value is None else f"{value:.4f}"


@dataclass(frozen=True)
class EvalReport:
    rows: tuple[MethodRow, ...]
    fingerprint: DatasetFingerprint | None = None
    failure_modes: Mapping[str, int] | None = None
    feature_layout: tuple[str, ...] | None = None
    decoding: Mapping[str, Any] | None = None
    versions: Mapping[str, str] = field(
        default_factory=lambda: {
            "openxor": str(consts.OPENXOR_VERSION),
            "dataset format": str(consts.DATASET_FORMAT_VERSION),
            "model format": str(consts.MODEL_FORMAT_VERSION),
        }
    )

    def to_csv(self) -> str:
        out = io.StringIO()
        writer = csv.writer(out, lineterminator="\n")
        writer.writerow(
            [
                "method",
                "n_instances",
                "completion_rate",
                "exact_accuracy",
                "checkpoint_accuracy_completed",
                "target_accuracy_completed",
                "mean_time_s",
            ]
        )
        for row in self.rows:
            m = row.metrics
            writer.writerow(
                [
                    row.method,
                    m.n_instances,
                    f"{m.completion_rate:.6f}",
                    f"{m.exact_accuracy:.6f}",
                    *(
                        UNDEFINED if v is None else f"{v:.6f}"
                        for v in (m.checkpoint_accuracy, m.target_accuracy, m.mean_time)
                    ),
                ]
            )
        return out.getvalue()

    def to_markdown(self) -> str:
        lines = ["# OpenXOR evaluation", ""]
        lines += [f"- {name}: {value}" for name, value in self.versions.items()]
        if self.fingerprint is not None:
            lines.append(f"- dataset: {self.fingerprint.describe()}")
        if self.decoding is not None:
            settings = ", ".join(f"{k}={v}" for k, v in sorted(self.decoding.items()))
            lines.append(f"- decoding: {settings}")
        if self.feature_layout is not None:
            lines.append(f"- policy features: {', '.join(self.feature_layout)}")
        lines.append("")
        if self.rows:
            table = [
                [
                    row.method,
                    _percent(row.metrics.completion_rate),
                    _percent(row.metrics.exact_accuracy),
                    _percent(row.metrics.checkpoint_accuracy),
                    _percent(row.metrics.target_accuracy),
                    _seconds(row.metrics.mean_time),
                ]
                for row in self.rows
            ]
            headers = [
                "Method",
                "Completion",
                "Exact Acc.",
                "Ckpt Acc. (completed)",
                "Target Acc. (completed)",
                "Time (s)",
            ]
            lines += [tabulate(table, headers, tablefmt="github"), ""]
        if self.failure_modes is not None:
            total = sum(self.failure_modes.values())
            table = [
                [name, count, _percent(count / total if total else None)]
                for name, count in self.failure_modes.items()
            ]
            lines += [
                tabulate(table, ["Failure Type", "Count", "Share"], tablefmt="github"),
                "",
            ]
        return "\n".join(lines)

    def write(self, path: Path) -> None:
        match path.suffix.lower():
            case ".csv":
                text = self.to_csv()
            case ".md" | ".markdown":
                text = self.to_markdown()
            case _:
                raise ContractViolation(f"{path}: report must end in .csv or .md")
        try:
            atomic_write_text(path, text)
        except OSError as e:
            raise OSError(
                e.errno, f"Failed to write report: {e.strerror}", str(path)
            ) from e


def _parity(values: np.ndarray) -> np.ndarray:
    # xor-fold 32 bits down to one
    for shift in (16, 8, 4, 2, 1):
        values = values ^ (values >> shift)
    return values & 1


@dataclass(frozen=True)
class SolutionCount:
    total: int
    with_target: int
    without_target: int


def enumerate_solutions(instance: Instance) -> SolutionCount:
    """Count every valid operation sequence by brute force (n <= 24)."""
    n = instance.n
    if n > MAX_ENUMERATION_N:
        raise ContractViolation(f"enumeration is limited to n <= {MAX_ENUMERATION_N}")
    # bit i of a mask is the op at position i + 1
    masks = np.arange(1 << n, dtype=np.uint32)
    bit_mask = sum(b << i for i, b in enumerate(instance.bits))
    effective = masks & np.uint32(bit_mask)
    ok = np.ones(1 << n, dtype=bool)
    for checkpoint in instance.checkpoints:
        prefix = np.uint32((1 << checkpoint.position) - 1)
        ok &= _parity(effective & prefix) == checkpoint.required
    with_target = ok & (_parity(effective) == instance.target)
    return SolutionCount(1 << n, int(with_target.sum()), int(ok.sum()))


def segment_preconditions_hold(instance: Instance) -> bool:
    """Every stretch before, between and after the checkpoints holds a one-bit."""
    bounds = [0, *(c.position for c in instance.checkpoints)]
    if bounds[-1] != instance.n:
        bounds.append(instance.n)
    return all(any(instance.bits[a:b]) for a, b in zip(bounds, bounds[1:]))


@dataclass(frozen=True)
class DensityReport:
    instance: Instance
    with_target: Fraction
    without_target: Fraction
    preconditions_hold: bool

    @property
    def expected_with_target(self) -> Fraction:
        return Fraction(1, 2 ** (self.instance.k + 1))

    @property
    def expected_without_target(self) -> Fraction:
        return Fraction(1, 2**self.instance.k)

    @property
    def passed(self) -> bool:
        return not self.preconditions_hold or (
            self.with_target == self.expected_with_target
            and self.without_target == self.expected_without_target
        )


def _density_instance(n: int, k: int, seed: int) -> Instance:
    rng = Xoshiro256.stream(seed, 0)
    for attempt in range(1000):
        # checkpoints stay below n so the target is an independent constraint
        positions = rng.sample_positions(k, n - 1)
        candidate = Instance(
            f"density-{attempt}",
            tuple(rng.bits(n)),
            rng.below(2),
            tuple(Checkpoint(p, rng.below(2)) for p in positions),
        )
        if segment_preconditions_hold(candidate):
            return candidate
    raise ContractViolation(f"no instance with n={n}, k={k} meets the preconditions")


def validate_density(
    n: int, k: int, seed: int = 0, instance: Instance | None = None
) -> DensityReport:
    """
    Exact share of valid sequences among all 2^n, with and without the target
    constraint. Without an explicit `instance`, one meeting the segment
    preconditions is drawn.
    """
    if instance is None:
        if not 1 <= n <= MAX_ENUMERATION_N or not 0 <= k < n:
            raise ContractViolation(f"need 0 <= k < n <= {MAX_ENUMERATION_N}")
        instance = _density_instance(n, k, seed)
    count = enumerate_solutions(instance)
    report = DensityReport(
        instance,
        Fraction(count.with_target, count.total),
        Fraction(count.without_target, count.total),
        segment_preconditions_hold(instance),
    )
    _log.info(
        f"Density n={instance.n}, k={instance.k}: {report.with_target} with target, "
        f"{report.without_target} without."
    )
    return report


def wilson(successes: int, trials: int, z: float = WILSON_Z) -> tuple[float, float]:
    """Wilson score interval for a binomial proportion."""
    if trials <= 0:
        raise ContractViolation("trials must be positive")
    p = successes / trials
    denom = 1 + z * z / trials
    centre = (p + z * z / (2 * trials)) / denom
    half = z * math.sqrt(p * (1 - p) / trials + z * z / (4 * trials * trials)) / denom
    return max(0.0, centre - half), min(1.0, centre + half)


@dataclass(frozen=True)
class BoundReport:
    law: str
    trials: int
    successes: int
    bound: float
    slack: float = BOUND_SLACK

    @property
    def rate(self) -> float:
        return self.successes / self.trials

    @property
    def interval(self) -> tuple[float, float]:
        return wilson(self.successes, self.trials)

    @property
    def passed(self) -> bool:
        return self.interval[0] <= self.bound * self.slack

    def describe(self) -> str:
        low, high = self.interval
        verdict = "pass" if self.passed else "FAIL"
        return (
            f"{self.law}: {self.successes}/{self.trials} = {self.rate:.6g} "
            f"(95% CI [{low:.6g}, {high:.6g}]) vs bound {self.bound:.6g} "
            f"x {self.slack}: {verdict}"
        )


def bound_instance(rng: Xoshiro256, k: int, guard: int, trial: int = 0) -> Instance:
    """
    Instance with k evenly spaced checkpoints, the last one at n, every
    stretch holding a one-bit. With `guard` > 0 the `guard` bits before each
    checkpoint are zero; otherwise the bit right before each checkpoint is one.
    """
    if k < 1 or guard < 0:
        raise ContractViolation("need k >= 1 and guard >= 0")
    length = max(8, guard + 4)
    bits = rng.bits(k * length)
    checkpoints = []
    for j in range(1, k + 1):
        start, end = (j - 1) * length, j * length
        if guard:
            bits[end - guard : end] = [0] * guard
            free = end - guard - start
            if not any(bits[start : end - guard]):
                bits[start + rng.below(free)] = 1
        else:
            bits[end - 1] = 1
        checkpoints.append(Checkpoint(end, rng.below(2)))
    return Instance(
        f"bound-{trial:06d}", tuple(bits), checkpoints[-1].required, tuple(checkpoints)
    )


def validate_random_bound(k: int, trials: int, seed: int = 0) -> BoundReport:
    """Success rate of single random attempts against 2^-k."""
    if trials < 1:
        raise ContractViolation("trials must be positive")
    successes = 0
    for trial in range(trials):
        rng = Xoshiro256.stream(seed, trial)
        instance = bound_instance(rng, k, 0, trial)
        successes += solve_random(instance, rng).solved
    report = BoundReport(f"random k={k}", trials, successes, 2.0**-k)
    _log.info(report.describe())
    return report


def beam_guard(beam_size: int, k: int) -> int:
    """
    Zero-bits placed before each checkpoint. After ceil(log2 B) of them every
    kept path extends the same parent, so one more leaves a single accumulator
    to meet the checkpoint. A beam of 2^k or more gets a one-bit there instead.
    """
    if beam_size >= 2**k:
        return 0
    return math.ceil(math.log2(beam_size)) + 1


def validate_beam_bound(
    beam_size: int, k: int, trials: int, seed: int = 0
) -> BoundReport:
    """Success rate of checkpoint-scored beam search against B / 2^k."""
    if trials < 1:
        raise ContractViolation("trials must be positive")
    config = BeamConfig(beam_size, BeamScoring.CHECKPOINTS_SATISFIED)
    guard = beam_guard(beam_size, k)
    successes = 0
    for trial in range(trials):
        instance = bound_instance(Xoshiro256.stream(seed, trial), k, guard, trial)
        successes += solve_beam(instance, config).solved
    report = BoundReport(
        f"beam B={beam_size} k={k}", trials, successes, min(1.0, beam_size / 2**k)
    )
    _log.info(report.describe())
    return report

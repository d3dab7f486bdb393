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
Teacher-forced training of the policy network with AdamW, and inference.
"""

from collections.abc import Sequence
from dataclasses import dataclass, field
from enum import Enum

import numpy as np
from tqdm import tqdm

from openxor.core import Instance, OperatorState, Op, verify
from openxor.errors import ContractViolation, NumericError
from openxor.generate import Dataset
from openxor.logger import InstanceLogger, WorkbenchLogger
from openxor.policy import (
    NOP_COLUMN,
    XOR_COLUMN,
    PolicyParams,
    argmax_op,
    featurize,
    featurize_trace,
    forward_batch,
    policy_forward,
)
from openxor.rng import Xoshiro256
from openxor.solvers import SolveOutcome, attempt_outcome
from openxor.utils import Stopwatch

_log = WorkbenchLogger("train")
_infer_log = WorkbenchLogger("infer")


@dataclass(frozen=True)
class TrainConfig:
    epochs: int = 5
    learning_rate: float = 1e-3
    weight_decay: float = 0.01
    seed: int = 0
    beta1: float = 0.9
    beta2: float = 0.999
    eps: float = 1e-8

    def __post_init__(self) -> None:
        if self.epochs < 1:
            raise ContractViolation("epochs must be at least 1")
        if self.learning_rate <= 0 or self.weight_decay < 0 or self.eps <= 0:
            raise ContractViolation("rates must be positive")
        if not (0 <= self.beta1 < 1 and 0 <= self.beta2 < 1):
            raise ContractViolation("betas must lie in [0, 1)")


def loss_and_grad(
    params: PolicyParams, instance: Instance
) -> tuple[float, PolicyParams]:
    """
    Summed cross-entropy of the policy against the ground-truth operations,
    with states rolled forward along the ground truth.
    """
    if instance.ground_truth is None:
        raise ContractViolation(f"{instance.id}: training needs a ground truth")
    ops = instance.ground_truth
    act = forward_batch(params, featurize_trace(instance, ops))
    labels = np.where(np.asarray(ops) == Op.XOR, XOR_COLUMN, NOP_COLUMN)
    rows = np.arange(len(ops))

    shifted = act.logits - act.logits.max(axis=1, keepdims=True)
    log_probs = shifted - np.log(np.exp(shifted).sum(axis=1, keepdims=True))
    loss = float(-log_probs[rows, labels].sum())

    d_logits = act.probs.copy()
    d_logits[rows, labels] -= 1.0
    d_hidden = (d_logits @ params.w_out.T) * (1.0 - act.hidden**2)
    d_embed = (d_hidden @ params.w_hidden.T) * (1.0 - act.embed**2)
    grad = PolicyParams(
        w_embed=act.features.T @ d_embed,
        b_embed=d_embed.sum(axis=0),
        w_hidden=act.embed.T @ d_hidden,
        b_hidden=d_hidden.sum(axis=0),
        w_out=act.hidden.T @ d_logits,
        b_out=d_logits.sum(axis=0),
    )
    if not np.isfinite(loss) or not grad.all_finite():
        raise NumericError("non-finite loss or gradient")
    return loss, grad


@dataclass
class AdamState:
    m: PolicyParams = field(default_factory=PolicyParams.zeros)
    v: PolicyParams = field(default_factory=PolicyParams.zeros)
    step: int = 0


def adamw_step(
    params: PolicyParams, grad: PolicyParams, state: AdamState, config: TrainConfig
) -> PolicyParams:
    """One AdamW update with decoupled weight decay; advances `state` in place."""
    if not grad.all_finite():
        raise NumericError("non-finite gradient")
    b1, b2 = config.beta1, config.beta2
    state.step += 1
    state.m = state.m.map(grad, lambda m, g: b1 * m + (1 - b1) * g)
    state.v = state.v.map(grad, lambda v, g: b2 * v + (1 - b2) * g * g)
    m_scale = 1.0 / (1 - b1**state.step)
    v_scale = 1.0 / (1 - b2**state.step)
    lr, wd, eps = config.learning_rate, config.weight_decay, config.eps

    def update(theta: np.ndarray, m: np.ndarray, v: np.ndarray) -> np.ndarray:
        step = (m * m_scale) / (np.sqrt(v * v_scale) + eps)
        return theta - lr * step - lr * wd * theta

    updated = PolicyParams(
        **{
            name: update(theta, getattr(state.m, name), getattr(state.v, name))
            for name, theta in params.arrays()
        }
    )
    if not updated.all_finite():
        raise NumericError("optimizer produced non-finite parameters")
    return updated


@dataclass(frozen=True)
class TrainResult:
    params: PolicyParams
    epoch_losses: tuple[float, ...]


def train(
    dataset: Dataset | Sequence[Instance],
    config: TrainConfig,
    progress: bool = True,
) -> TrainResult:
    """
    One optimizer step per instance, instances in dataset order, `epochs`
    passes. Reports the mean per-instance loss of every epoch.
    """
    instances = dataset.instances if isinstance(dataset, Dataset) else tuple(dataset)
    if not instances:
        raise ContractViolation("cannot train on an empty dataset")
    if missing := [i.id for i in instances if i.ground_truth is None]:
        raise ContractViolation(f"instances without ground truth: {', '.join(missing)}")

    params = PolicyParams.init(config.seed)
    state = AdamState()
    _log.info(
        f"Training on {len(instances)} instances for {config.epochs} epochs "
        f"({params.parameter_count} parameters)."
    )
    losses: list[float] = []
    for epoch in range(1, config.epochs + 1):
        total = 0.0
        for instance in tqdm(
            instances, desc=f"epoch {epoch}", unit="inst", disable=not progress
        ):
            try:
                loss, grad = loss_and_grad(params, instance)
                params = adamw_step(params, grad, state, config)
            except NumericError as e:
                raise NumericError(f"{instance.id} (epoch {epoch}): {e}") from e
            total += loss
        losses.append(total / len(instances))
        _log.info(f"Epoch {epoch}: mean loss {losses[-1]:.6f}.")

    if any(later >= earlier for earlier, later in zip(losses[:3], losses[1:3])):
        _log.warning(f"Loss did not decrease over the first epochs: {losses[:3]}.")
    return TrainResult(params, tuple(losses))


class InferenceMode(Enum):
    GREEDY = "greedy"
    SAMPLE = "sample"


def _roll(
    params: PolicyParams, instance: Instance, rng: Xoshiro256 | None
) -> tuple[list[Op], int | None]:
    """
    Roll the policy over the whole instance. Returns the operations and the
    position of the first violated checkpoint, if any.
    """
    state = OperatorState(instance)
    ops: list[Op] = []
    failed_at = None
    while not state.done:
        p_xor, p_nop = policy_forward(params, featurize(state))
        if rng is None:
            op = argmax_op(p_xor, p_nop)
        else:
            op = Op.XOR if rng.random() < p_xor else Op.NOP
        ops.append(op)
        state = state.apply(op)
        if failed_at is None and state.violates_checkpoint():
            failed_at = state.pos
    return ops, failed_at


def infer(
    params: PolicyParams,
    instance: Instance,
    mode: InferenceMode = InferenceMode.GREEDY,
    retries: int = 0,
    rng: Xoshiro256 | None = None,
) -> SolveOutcome:
    """
    Greedy mode takes the argmax at every position. Sample mode draws from the
    policy for up to `1 + retries` rollouts and keeps the first that verifies,
    else the one meeting the most checkpoints.

    A failed attempt records where its first checkpoint broke; the rollout
    still runs to the end so the attempt can be scored.
    """
    if retries < 0:
        raise ContractViolation("retries must not be negative")
    if mode is InferenceMode.SAMPLE and rng is None:
        raise ContractViolation("sampling needs a random stream")
    attempts = 1 if mode is InferenceMode.GREEDY else 1 + retries

    best: tuple[list[Op], int | None] = ([], None)
    best_key = None
    rollouts = 0
    with Stopwatch() as watch:
        while rollouts < attempts:
            rollouts += 1
            ops, failed_at = _roll(
                params, instance, rng if mode is InferenceMode.SAMPLE else None
            )
            report = verify(instance, ops)
            key = (report.exact, report.checkpoint_fraction)
            if best_key is None or key > best_key:
                best, best_key = (ops, failed_at), key
            if report.exact:
                break
    ops, failed_at = best
    if failed_at is None and not verify(instance, ops).exact:
        failed_at = instance.n
    outcome = attempt_outcome(
        instance, "openlm", ops, rollouts * instance.n, watch.elapsed, failed_at
    )
    if not outcome.solved:
        InstanceLogger.from_component_logger(instance.id, _infer_log).debug(
            f"Policy failed at position {outcome.failed_at}."
        )
    return outcome

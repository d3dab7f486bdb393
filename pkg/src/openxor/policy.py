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
The operator-policy network: state features, a tanh MLP with a two-way softmax
over (XOR, NOP), and the model file format.

Features are length-normalised, so a network trained on short instances runs
on long ones unchanged.
"""

import json
import math
import struct
from collections.abc import Callable, Iterator, Mapping, Sequence
from dataclasses import dataclass
from pathlib import Path
from typing import Any

import numpy as np
import numpy.typing as npt

from openxor import consts
from openxor.core import Instance, OperatorState, Op
from openxor.errors import ModelFormatError, NumericError
from openxor.rng import Xoshiro256
from openxor.utils import atomic_write_bytes
from openxor.version import SemanticVersion

Array = npt.NDArray[np.float64]

WINDOW = 6
ONES_CAP = 8
FEATURE_LAYOUT: tuple[str, ...] = (
    "acc",
    "pos/n",
    *(f"bit[pos+{i}]" for i in range(1, WINDOW + 1)),
    "has_next",
    "(p_next-pos)/n",
    "v_next",
    "acc^v_next",
    "min(ones(pos,p_next],8)/8",
    "target",
    "acc^target",
)
N_FEATURES = len(FEATURE_LAYOUT)
EMBED_DIM = 64
HIDDEN_DIM = 128
# output column order
XOR_COLUMN, NOP_COLUMN = 0, 1

PARAM_NAMES = ("w_embed", "b_embed", "w_hidden", "b_hidden", "w_out", "b_out")
PARAM_SHAPES: dict[str, tuple[int, ...]] = {
    "w_embed": (N_FEATURES, EMBED_DIM),
    "b_embed": (EMBED_DIM,),
    "w_hidden": (EMBED_DIM, HIDDEN_DIM),
    "b_hidden": (HIDDEN_DIM,),
    "w_out": (HIDDEN_DIM, 2),
    "b_out": (2,),
}
_FAN_IN = {
    "w_embed": N_FEATURES,
    "b_embed": N_FEATURES,
    "w_hidden": EMBED_DIM,
    "b_hidden": EMBED_DIM,
    "w_out": HIDDEN_DIM,
    "b_out": HIDDEN_DIM,
}

MODEL_MAGIC = b"OLM1"


def _state_features(
    instance: Instance, positions: npt.NDArray[np.int64], acc: npt.NDArray[np.int64]
) -> Array:
    """Feature rows for the states (acc[i], positions[i]) of one instance."""
    n = instance.n
    bits = np.asarray(instance.bits, dtype=np.int64)
    padded = np.concatenate([bits, np.zeros(WINDOW, dtype=np.int64)])
    ones_before = np.concatenate([[0], np.cumsum(bits)])
    cp_pos = np.asarray([c.position for c in instance.checkpoints], dtype=np.int64)
    cp_val = np.asarray([c.required for c in instance.checkpoints], dtype=np.int64)

    # the next checkpoint strictly ahead; the end acts as one when none is left
    following = np.searchsorted(cp_pos, positions, side="right")
    has_next = following < len(cp_pos)
    safe = np.minimum(following, max(len(cp_pos) - 1, 0))
    p_next = np.where(has_next, cp_pos[safe] if len(cp_pos) else n, n)
    v_next = np.where(has_next, cp_val[safe] if len(cp_val) else 0, instance.target)

    windows = np.lib.stride_tricks.sliding_window_view(padded, WINDOW)[positions]
    ones = ones_before[p_next] - ones_before[positions]

    out = np.empty((len(positions), N_FEATURES), dtype=np.float64)
    out[:, 0] = acc
    out[:, 1] = positions / n
    out[:, 2 : 2 + WINDOW] = windows
    col = 2 + WINDOW
    out[:, col] = has_next
    out[:, col + 1] = (p_next - positions) / n
    out[:, col + 2] = v_next
    out[:, col + 3] = acc ^ v_next
    out[:, col + 4] = np.minimum(ones, ONES_CAP) / ONES_CAP
    out[:, col + 5] = instance.target
    out[:, col + 6] = acc ^ instance.target
    return out


def featurize(state: OperatorState) -> Array:
    return _state_features(
        state.instance,
        np.asarray([state.pos], dtype=np.int64),
        np.asarray([state.acc], dtype=np.int64),
    )[0]


def featurize_trace(instance: Instance, ops: Sequence[Op]) -> Array:
    """Features of the n states visited when following `ops`, one row each."""
    bits = np.asarray(instance.bits, dtype=np.int64)
    chosen = bits & np.asarray(ops, dtype=np.int64)
    acc = np.concatenate([[0], np.bitwise_xor.accumulate(chosen)])[:-1]
    return _state_features(instance, np.arange(instance.n, dtype=np.int64), acc)


@dataclass(frozen=True, eq=False)
class PolicyParams:
    w_embed: Array
    b_embed: Array
    w_hidden: Array
    b_hidden: Array
    w_out: Array
    b_out: Array

    def arrays(self) -> Iterator[tuple[str, Array]]:
        for name in PARAM_NAMES:
            yield name, getattr(self, name)

    @property
    def parameter_count(self) -> int:
        return sum(a.size for _, a in self.arrays())

    @staticmethod
    def init(seed: int) -> "PolicyParams":
        """Uniform in +-sqrt(1 / fan_in) per layer, row-major draw order."""
        rng = Xoshiro256(seed)
        arrays = {}
        for name in PARAM_NAMES:
            bound = math.sqrt(1.0 / _FAN_IN[name])
            shape = PARAM_SHAPES[name]
            values = [rng.uniform(-bound, bound) for _ in range(math.prod(shape))]
            arrays[name] = np.asarray(values, dtype=np.float64).reshape(shape)
        return PolicyParams(**arrays)

    @staticmethod
    def zeros() -> "PolicyParams":
        return PolicyParams(**{n: np.zeros(s) for n, s in PARAM_SHAPES.items()})

    def map(
        self, other: "PolicyParams | None", fn: Callable[..., Array]
    ) -> "PolicyParams":
        if other is None:
            return PolicyParams(**{n: fn(a) for n, a in self.arrays()})
        return PolicyParams(**{n: fn(a, getattr(other, n)) for n, a in self.arrays()})

    def all_finite(self) -> bool:
        return all(np.isfinite(a).all() for _, a in self.arrays())

    def to_bytes(self) -> bytes:
        return b"".join(
            np.ascontiguousarray(a, dtype="<f8").tobytes() for _, a in self.arrays()
        )


@dataclass(frozen=True, eq=False)
class Activations:
    features: Array
    embed: Array
    hidden: Array
    logits: Array
    probs: Array


def forward_batch(params: PolicyParams, features: Array) -> Activations:
    """Rows of `features` in, rows of (p_XOR, p_NOP) out."""
    embed = np.tanh(features @ params.w_embed + params.b_embed)
    hidden = np.tanh(embed @ params.w_hidden + params.b_hidden)
    logits = hidden @ params.w_out + params.b_out
    shifted = logits - logits.max(axis=1, keepdims=True)
    exp = np.exp(shifted)
    probs = exp / exp.sum(axis=1, keepdims=True)
    if not np.isfinite(probs).all():
        raise NumericError("policy produced non-finite probabilities")
    return Activations(features, embed, hidden, logits, probs)


def policy_forward(params: PolicyParams, features: Array) -> tuple[float, float]:
    probs = forward_batch(params, np.atleast_2d(features)).probs[0]
    return float(probs[XOR_COLUMN]), float(probs[NOP_COLUMN])


def argmax_op(p_xor: float, p_nop: float) -> Op:
    # ties go to NOP
    return Op.XOR if p_xor > p_nop else Op.NOP


class PolicyScorer:
    """Per-state log-probabilities, used by beam search."""

    def __init__(self, params: PolicyParams) -> None:
        self.params = params

    def op_log_probs(self, state: OperatorState) -> Mapping[Op, float]:
        p_xor, p_nop = policy_forward(self.params, featurize(state))
        tiny = np.finfo(np.float64).tiny
        return {Op.XOR: math.log(max(p_xor, tiny)), Op.NOP: math.log(max(p_nop, tiny))}


class NetworkPolicy:
    """The network's argmax decision as a `Policy` callable."""

    def __init__(self, params: PolicyParams) -> None:
        self.params = params

    def __call__(self, state: OperatorState, prefix: Sequence[Op]) -> Op:
        return argmax_op(*policy_forward(self.params, featurize(state)))


def _header(params: PolicyParams, metadata: Mapping[str, Any] | None) -> bytes:
    header = {
        "arrays": [{"name": n, "shape": list(a.shape)} for n, a in params.arrays()],
        "dtype": "<f8",
        "feature_layout": list(FEATURE_LAYOUT),
        "format_version": str(consts.MODEL_FORMAT_VERSION),
        "metadata": dict(metadata or {}),
        "window": WINDOW,
    }
    return json.dumps(header, sort_keys=True, separators=(",", ":")).encode("utf-8")


def dump_model(
    params: PolicyParams, metadata: Mapping[str, Any] | None = None
) -> bytes:
    header = _header(params, metadata)
    return MODEL_MAGIC + struct.pack("<Q", len(header)) + header + params.to_bytes()


def save_model(
    path: Path, params: PolicyParams, metadata: Mapping[str, Any] | None = None
) -> None:
    try:
        atomic_write_bytes(path, dump_model(params, metadata))
    except OSError as e:
        raise OSError(e.errno, f"Failed to write model: {e.strerror}", str(path)) from e


def parse_model(data: bytes) -> tuple[PolicyParams, dict[str, Any]]:
    """Inverse of `dump_model`; returns the parameters and the stored metadata."""
    prefix = len(MODEL_MAGIC) + 8
    if len(data) < prefix or not data.startswith(MODEL_MAGIC):
        raise ModelFormatError("not an OpenLM model file")
    (header_len,) = struct.unpack("<Q", data[len(MODEL_MAGIC) : prefix])
    try:
        header = json.loads(data[prefix : prefix + header_len].decode("utf-8"))
        version = SemanticVersion.from_string(header["format_version"])
    except (ValueError, KeyError, UnicodeDecodeError) as e:
        raise ModelFormatError(f"unreadable model header: {e}") from e
    if not version.compatible_with(consts.MODEL_FORMAT_VERSION):
        raise ModelFormatError(
            f"model format {version} is not compatible with "
            f"{consts.MODEL_FORMAT_VERSION}"
        )
    if tuple(header.get("feature_layout", ())) != FEATURE_LAYOUT:
        raise ModelFormatError("model was trained on a different feature layout")

    arrays = {}
    offset = prefix + header_len
    for entry in header.get("arrays", []):
        name, shape = entry["name"], tuple(entry["shape"])
        if PARAM_SHAPES.get(name) != shape:
            raise ModelFormatError(f"unexpected array {name} with shape {shape}")
        size = math.prod(shape) * 8
        chunk = data[offset : offset + size]
        if len(chunk) != size:
            raise ModelFormatError("model file is truncated")
        values = np.frombuffer(chunk, dtype="<f8").astype(np.float64)
        arrays[name] = values.reshape(shape)
        offset += size
    if set(arrays) != set(PARAM_NAMES) or offset != len(data):
        raise ModelFormatError("model arrays do not match the network")
    params = PolicyParams(**arrays)
    if not params.all_finite():
        raise ModelFormatError("model holds non-finite weights")
    return params, header["metadata"]


def load_model(path: Path) -> tuple[PolicyParams, dict[str, Any]]:
    try:
        data = path.read_bytes()
    except OSError as e:
        raise OSError(e.errno, f"Failed to read model: {e.strerror}", str(path)) from e
    try:
        return parse_model(data)
    except ModelFormatError as e:
        raise ModelFormatError(f"{path}: {e}") from e

import math
import struct
from pathlib import Path

import numpy as np
import pytest
from hypothesis import given
from hypothesis import strategies as st

from openxor.core import Instance, OperatorState, Op
from openxor.errors import ModelFormatError, NumericError
from openxor.policy import (
    FEATURE_LAYOUT,
    MODEL_MAGIC,
    N_FEATURES,
    NetworkPolicy,
    PolicyParams,
    PolicyScorer,
    argmax_op,
    dump_model,
    featurize,
    featurize_trace,
    load_model,
    parse_model,
    policy_forward,
    save_model,
)

from .test_solvers import constructed


def test_network_shape() -> None:
    assert N_FEATURES == len(FEATURE_LAYOUT) == 15
    assert PolicyParams.zeros().parameter_count == 9602


def test_initial_state_features(worked: Instance) -> None:
    features = featurize(OperatorState(worked))
    assert features[0] == 0
    assert features[1] == 0
    assert list(features[2:8]) == [0, 1, 1, 1, 1, 0]
    # next checkpoint at 4 wants 1; bits 1..4 hold three ones
    assert list(features[8:13]) == pytest.approx([1, 4 / 7, 1, 1, 3 / 8])
    assert list(features[13:]) == [1, 1]


def test_end_state_features(worked: Instance) -> None:
    features = featurize(OperatorState(worked, 1, worked.n))
    assert list(features[2:8]) == [0] * 6
    assert features[8] == 0
    assert features[9] == 0


def test_features_past_last_checkpoint_use_target(worked: Instance) -> None:
    features = featurize(OperatorState(worked, 1, 4))
    assert features[8] == 0
    assert features[9] == pytest.approx(3 / 7)
    # v_next is the target and acc already matches it
    assert features[10] == 1
    assert features[11] == 0
    assert features[12] == pytest.approx(2 / 8)
    assert features[14] == 0


@given(constructed(max_n=40))
def test_trace_features_are_unit_range(instance: Instance) -> None:
    assert instance.ground_truth is not None
    rows = featurize_trace(instance, instance.ground_truth)
    assert rows.shape == (instance.n, N_FEATURES)
    assert ((rows >= 0) & (rows <= 1)).all()


def test_trace_features_match_stepwise(worked: Instance) -> None:
    rows = featurize_trace(worked, worked.ground_truth or ())
    state = OperatorState(worked)
    for row, op in zip(rows, worked.ground_truth or (), strict=True):
        np.testing.assert_array_equal(row, featurize(state))
        state = state.apply(op)


def test_zero_params_are_uniform() -> None:
    assert policy_forward(PolicyParams.zeros(), np.zeros(N_FEATURES)) == (0.5, 0.5)


def test_crafted_logits() -> None:
    arrays = dict(PolicyParams.zeros().arrays())
    arrays["b_out"] = np.array([math.log(3), 0.0])
    params = PolicyParams(**arrays)
    p_xor, p_nop = policy_forward(params, np.ones(N_FEATURES))
    assert p_xor == pytest.approx(0.75, abs=1e-12)
    assert p_nop == pytest.approx(0.25, abs=1e-12)


def hand_forward(params: PolicyParams, x: list[float]) -> tuple[float, float]:
    def layer(inputs: list[float], w: np.ndarray, b: np.ndarray) -> list[float]:
        return [
            float(b[j]) + sum(inputs[i] * float(w[i, j]) for i in range(len(inputs)))
            for j in range(len(b))
        ]

    embed = [math.tanh(v) for v in layer(x, params.w_embed, params.b_embed)]
    hidden = [math.tanh(v) for v in layer(embed, params.w_hidden, params.b_hidden)]
    z_xor, z_nop = layer(hidden, params.w_out, params.b_out)
    top = max(z_xor, z_nop)
    e_xor, e_nop = math.exp(z_xor - top), math.exp(z_nop - top)
    return e_xor / (e_xor + e_nop), e_nop / (e_xor + e_nop)


@given(st.integers(0, 2**32), st.lists(st.floats(0, 1), min_size=15, max_size=15))
def test_forward_matches_hand_evaluation(seed: int, x: list[float]) -> None:
    params = PolicyParams.init(seed)
    p_xor, p_nop = policy_forward(params, np.asarray(x))
    expected = hand_forward(params, x)
    assert p_xor == pytest.approx(expected[0], abs=1e-12)
    assert p_nop == pytest.approx(expected[1], abs=1e-12)
    assert abs(p_xor + p_nop - 1) <= 1e-12


def test_non_finite_output_raises() -> None:
    params = PolicyParams.zeros()
    params.b_out[0] = np.nan
    with pytest.raises(NumericError):
        policy_forward(params, np.zeros(N_FEATURES))


def test_argmax_ties_go_to_nop() -> None:
    assert argmax_op(0.5, 0.5) is Op.NOP
    assert argmax_op(0.6, 0.4) is Op.XOR


def test_init_is_seeded_and_bounded() -> None:
    a, b = PolicyParams.init(3), PolicyParams.init(3)
    assert a.to_bytes() == b.to_bytes()
    assert a.to_bytes() != PolicyParams.init(4).to_bytes()
    assert np.abs(a.w_embed).max() <= math.sqrt(1 / N_FEATURES)
    assert np.abs(a.w_out).max() <= math.sqrt(1 / 128)


def test_network_policy_and_scorer(worked: Instance) -> None:
    state = OperatorState(worked)
    params = PolicyParams.init(1)
    p_xor, p_nop = policy_forward(params, featurize(state))
    log_probs = PolicyScorer(params).op_log_probs(state)
    assert log_probs[Op.XOR] == pytest.approx(math.log(p_xor))
    assert NetworkPolicy(params)(state, []) is argmax_op(p_xor, p_nop)


def test_model_file_round_trip(tmp_path: Path) -> None:
    params = PolicyParams.init(5)
    path = tmp_path / "m.olm"
    save_model(path, params, {"epochs": 1})
    loaded, metadata = load_model(path)
    assert loaded.to_bytes() == params.to_bytes()
    assert metadata == {"epochs": 1}
    assert path.read_bytes().startswith(MODEL_MAGIC)


def test_model_header_is_sorted_json() -> None:
    data = dump_model(PolicyParams.zeros())
    (length,) = struct.unpack("<Q", data[4:12])
    header = data[12 : 12 + length].decode()
    assert header.startswith('{"arrays":')
    assert len(data) == 12 + length + 9602 * 8


def test_model_corruption_is_rejected() -> None:
    data = dump_model(PolicyParams.zeros())
    with pytest.raises(ModelFormatError):
        parse_model(b"XXXX" + data[4:])
    with pytest.raises(ModelFormatError):
        parse_model(data[:-8])
    with pytest.raises(ModelFormatError):
        parse_model(data + b"\0" * 8)
    with pytest.raises(ModelFormatError):
        future = data.replace(b'"format_version":"1.0.0"', b'"format_version":"2.0.0"')
        parse_model(future)
    with pytest.raises(ModelFormatError):
        parse_model(data.replace(b'"acc"', b'"acX"'))
    nan_tail = data[:-8] + struct.pack("<d", math.nan)
    with pytest.raises(ModelFormatError, match="non-finite"):
        parse_model(nan_tail)


def test_load_model_names_file(tmp_path: Path) -> None:
    path = tmp_path / "m.olm"
    path.write_bytes(b"junk")
    with pytest.raises(ModelFormatError, match="m.olm"):
        load_model(path)

from pathlib import Path

import pytest
from hypothesis import given
from hypothesis import strategies as st

from openxor.core import Instance, OperatorState, Op, rollout, verify
from openxor.errors import ContractViolation
from openxor.generate import (
    GenConfig,
    adversarial_against,
    checkpoint_count,
    generate_dataset,
    generate_instance,
)
from openxor.rng import Xoshiro256
from openxor.solvers import greedy_policy, solve_segments


@pytest.mark.parametrize(
    ("n", "density", "k"),
    [(8, 0.125, 1), (2048, 0.01, 20), (512, 0.01, 5), (10, 0.05, 1), (4, 1.0, 4)],
)
def test_checkpoint_count(n: int, density: float, k: int) -> None:
    assert checkpoint_count(n, density) == k
    assert GenConfig(n, density).k == k


@given(st.integers(0, 2**64 - 1), st.integers(1, 64), st.floats(0.01, 1.0))
def test_generated_instances_carry_a_valid_solution(
    seed: int, n: int, density: float
) -> None:
    config = GenConfig(n, density, seed)
    instance = generate_instance(config, Xoshiro256(seed))
    assert instance.ground_truth is not None
    assert verify(instance, instance.ground_truth).exact
    assert instance.k == config.k
    assert 3 <= len(instance.few_shot) <= 5
    for example in instance.few_shot:
        assert example.n == 8
        assert example.k == 1


def test_fixed_seed_gives_identical_bytes(tmp_path: Path) -> None:
    config = GenConfig(16, 0.125, seed=42, count=20)
    generate_dataset(config).write(tmp_path / "a.jsonl")
    generate_dataset(config).write(tmp_path / "b.jsonl")
    assert (tmp_path / "a.jsonl").read_bytes() == (tmp_path / "b.jsonl").read_bytes()


def test_parallel_generation_matches_serial() -> None:
    config = GenConfig(32, 0.1, seed=5, count=12)
    parallel = generate_dataset(config, jobs=2)
    assert parallel.instances == generate_dataset(config).instances


def test_ids_and_few_shot_count() -> None:
    dataset = generate_dataset(GenConfig(8, 0.125, seed=1, count=3, few_shot_count=4))
    assert [i.id for i in dataset.instances] == ["oxr-0000", "oxr-0001", "oxr-0002"]
    first = dataset.instances[0]
    assert [e.id for e in first.few_shot] == [f"oxr-0000-fs{j}" for j in range(4)]


def test_empty_dataset_writes_empty_file(tmp_path: Path) -> None:
    dataset = generate_dataset(GenConfig(8, 0.125, count=0))
    dataset.write(tmp_path / "empty.jsonl")
    assert (tmp_path / "empty.jsonl").read_bytes() == b""


@pytest.mark.parametrize(
    "kwargs",
    [
        {"n": 0},
        {"checkpoint_density": 0.0},
        {"checkpoint_density": 1.5},
        {"count": -1},
        {"few_shot_count": 2},
        {"few_shot_n": 17},
        {"seed": -1},
    ],
)
def test_config_validation(kwargs: dict) -> None:
    with pytest.raises(ContractViolation):
        GenConfig(**({"n": 8, "checkpoint_density": 0.125} | kwargs))


def always_xor(state: OperatorState, prefix: object) -> Op:
    return Op.XOR


def always_nop(state: OperatorState, prefix: object) -> Op:
    return Op.NOP


@pytest.mark.parametrize("policy", [always_xor, always_nop, greedy_policy])
@pytest.mark.parametrize("n", [2, 3, 16, 101])
def test_adversarial_instance_defeats_policy(policy, n: int) -> None:
    for seed in range(10):
        instance = adversarial_against(policy, n, seed)
        assert instance.k == 1
        assert solve_segments(instance).solved
        assert not verify(instance, rollout(instance, policy)).exact


def test_adversarial_rejects_nondeterministic_policy() -> None:
    rng = Xoshiro256(3)

    def coin(state: OperatorState, prefix: object) -> Op:
        return Op(rng.below(2))

    with pytest.raises(ContractViolation):
        adversarial_against(coin, 64)


@pytest.mark.slow
def test_greedy_defeated_on_every_constructed_instance() -> None:
    for seed in range(100):
        instance: Instance = adversarial_against(greedy_policy, 2048, seed)
        assert not verify(instance, rollout(instance, greedy_policy)).exact

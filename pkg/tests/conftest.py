import os

import pytest
from hypothesis import HealthCheck, settings

from openxor.core import Checkpoint, Instance, Op

settings.register_profile(
    "ci", max_examples=200, deadline=None, suppress_health_check=[HealthCheck.too_slow]
)
settings.register_profile("fast", max_examples=25, deadline=None)
settings.load_profile(os.environ.get("HYPOTHESIS_PROFILE", "fast"))

WORKED_BITS = (0, 1, 1, 1, 1, 0, 1)
WORKED_OPS = tuple(Op[name] for name in "XOR XOR NOP NOP XOR NOP XOR".split())


def few_shot_examples() -> tuple[Instance, ...]:
    def example(j: int, bits: str, target: int, cp: Checkpoint, ops: str) -> Instance:
        return Instance(
            f"worked-fs{j}",
            tuple(int(b) for b in bits),
            target,
            (cp,),
            tuple(Op[name] for name in ops.split()),
        )

    return (
        example(0, "10110010", 1, Checkpoint(3, 1), "XOR NOP NOP XOR NOP NOP XOR NOP"),
        example(1, "01101001", 0, Checkpoint(5, 1), "NOP XOR NOP NOP NOP NOP NOP XOR"),
        example(2, "11001110", 1, Checkpoint(2, 0), "NOP NOP NOP NOP XOR NOP NOP NOP"),
    )


@pytest.fixture
def worked() -> Instance:
    """Seven bits, target 1, accumulator 1 required after four bits."""
    return Instance(
        "worked",
        WORKED_BITS,
        1,
        (Checkpoint(4, 1),),
        WORKED_OPS,
        few_shot_examples(),
    )


def pytest_addoption(parser: pytest.Parser) -> None:
    parser.addoption("--runslow", action="store_true", help="Run slow tests.")


def pytest_collection_modifyitems(
    config: pytest.Config, items: list[pytest.Item]
) -> None:
    if config.getoption("--runslow"):
        return
    skip = pytest.mark.skip(reason="needs --runslow")
    for item in items:
        if "slow" in item.keywords:
            item.add_marker(skip)

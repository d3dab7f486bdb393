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
Operator iteration: a state, an operator on it and a convergence test.
Applying the operator until the test passes yields the fixed point.

The search for OpenXOR solutions is this same scheme over partial operation
sequences; `openxor.solvers.solve_backtracking` is that traversal.
"""

import math
from collections.abc import Callable, Mapping
from dataclasses import dataclass, field
from pathlib import Path
from typing import Generic, TypeVar

import numpy as np

from openxor.errors import ContractViolation, NegativeCycleError
from openxor.logger import WorkbenchLogger

_log = WorkbenchLogger("fixpoint")

X = TypeVar("X")

# u -> {v: weight}
Graph = Mapping[str, Mapping[str, float]]


def exact_equality(previous: object, current: object) -> bool:
    return previous == current


def sup_norm(eps: float) -> Callable[[object, object], bool]:
    """Converged once no coordinate moved by more than `eps`."""
    if eps < 0:
        raise ContractViolation("eps must not be negative")

    def converged(previous: object, current: object) -> bool:
        delta = np.abs(np.asarray(current, dtype=np.float64) - np.asarray(previous))
        return bool(np.max(delta, initial=0.0) <= eps)

    return converged


@dataclass(frozen=True)
class OperatorSystem(Generic[X]):
    apply: Callable[[X], X]
    converged: Callable[[X, X], bool] = exact_equality
    max_iterations: int = 1000
    # called with (previous, next) after every application
    observer: Callable[[X, X], None] | None = field(default=None, compare=False)


@dataclass(frozen=True)
class FixpointResult(Generic[X]):
    fixed_point: X
    iterations: int
    converged: bool
    trajectory: tuple[X, ...] = ()


def iterate(
    system: OperatorSystem[X], x0: X, keep_trajectory: bool = False
) -> FixpointResult[X]:
    """
    Apply the operator from `x0` until two consecutive states satisfy the
    convergence test. Running out of iterations is reported through
    `converged=False`, not raised.
    """
    if system.max_iterations < 1:
        raise ContractViolation("max_iterations must be at least 1")
    trajectory = [x0]
    current = x0
    for iteration in range(1, system.max_iterations + 1):
        following = system.apply(current)
        if system.observer is not None:
            system.observer(current, following)
        if keep_trajectory:
            trajectory.append(following)
        if system.converged(current, following):
            return FixpointResult(
                following, iteration, True, tuple(trajectory) if keep_trajectory else ()
            )
        current = following
    _log.debug(f"No fixed point within {system.max_iterations} iterations.")
    return FixpointResult(
        current,
        system.max_iterations,
        False,
        tuple(trajectory) if keep_trajectory else (),
    )


def dp_stairs(n: int) -> int:
    """Ways to climb `n` stairs in steps of one or two."""
    if n < 0:
        raise ContractViolation("n must not be negative")

    def step(f: tuple[int, ...]) -> tuple[int, ...]:
        return tuple(1 if i <= 1 else f[i - 1] + f[i - 2] for i in range(n + 1))

    result = iterate(OperatorSystem(step, max_iterations=n + 2), (0,) * (n + 1))
    if not result.converged:
        raise ContractViolation(f"stair table did not settle for n={n}")
    return result.fixed_point[n]


def vertices(graph: Graph) -> list[str]:
    found = set(graph)
    for targets in graph.values():
        found.update(targets)
    return sorted(found)


def bellman_ford(graph: Graph, source: str) -> dict[str, float]:
    """
    Single-source shortest distances by min-relaxation to a fixed point.
    Unreachable vertices keep `math.inf`.
    """
    nodes = vertices(graph)
    if source not in nodes:
        nodes = sorted([*nodes, source])
    index = {v: i for i, v in enumerate(nodes)}
    edges = [
        (index[u], index[v], w)
        for u, targets in graph.items()
        for v, w in targets.items()
    ]

    def relax(dist: tuple[float, ...]) -> tuple[float, ...]:
        out = list(dist)
        for u, v, w in edges:
            candidate = dist[u] + w
            if candidate < out[v]:
                out[v] = candidate
        return tuple(out)

    start = tuple(0.0 if v == source else math.inf for v in nodes)
    result = iterate(OperatorSystem(relax, max_iterations=len(nodes) + 1), start)
    if not result.converged:
        raise NegativeCycleError(f"negative cycle reachable from {source!r}")
    return dict(zip(nodes, result.fixed_point, strict=True))


def bfs_reach(graph: Graph, source: str) -> frozenset[str]:
    """Vertices reachable from `source`, grown one frontier per iteration."""
    nodes = vertices(graph)

    def expand(reached: frozenset[str]) -> frozenset[str]:
        return reached.union(*(graph.get(u, {}).keys() for u in reached))

    def monotone(previous: frozenset[str], current: frozenset[str]) -> None:
        if not previous <= current:
            raise ContractViolation("reachable set shrank between iterations")

    system = OperatorSystem(expand, max_iterations=len(nodes) + 2, observer=monotone)
    return iterate(system, frozenset({source})).fixed_point


def read_graph(path: Path) -> dict[str, dict[str, float]]:
    """Edge list, one `u v w` per line; a missing weight counts as 1."""
    graph: dict[str, dict[str, float]] = {}
    try:
        lines = path.read_text(encoding="utf-8").splitlines()
    except OSError as e:
        raise OSError(e.errno, f"Failed to read graph: {e.strerror}", str(path)) from e
    for line_num, line in enumerate(lines, 1):
        parts = line.split("#", 1)[0].split()
        if not parts:
            continue
        if len(parts) not in (2, 3):
            raise ContractViolation(f"{path}:{line_num}: expected 'u v w'")
        u, v = parts[:2]
        try:
            weight = float(parts[2]) if len(parts) == 3 else 1.0  # noqa: PLR2004
        except ValueError as e:
            raise ContractViolation(
                f"{path}:{line_num}: bad weight {parts[2]!r}"
            ) from e
        graph.setdefault(u, {})[v] = weight
    return graph

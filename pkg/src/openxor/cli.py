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
Command line entry point. Logs go to standard error; data goes to the files
named by flags or to standard output.

Exit codes: 0 on success, 1 on a domain failure, 2 on a usage error.
"""

import argparse
import math
import os
import sys
from collections.abc import Callable, Sequence
from concurrent.futures import ProcessPoolExecutor
from dataclasses import dataclass
from functools import partial
from pathlib import Path
from typing import TypeVar

from tqdm import tqdm

from openxor import consts
from openxor.core import Instance, load_instances
from openxor.errors import ContractViolation, OpenXorError
from openxor.evaluation import (
    EXACT_METHODS,
    DatasetFingerprint,
    EvalReport,
    MethodRow,
    check_dominance,
    score,
    validate_beam_bound,
    validate_density,
    validate_random_bound,
)
from openxor.fixpoint import bellman_ford, bfs_reach, dp_stairs, read_graph, vertices
from openxor.generate import GenConfig, generate_dataset
from openxor.grading import grade, read_transcripts
from openxor.logger import WorkbenchLogger, configure_logging, header_logger
from openxor.net import EndpointConnection
from openxor.policy import (
    FEATURE_LAYOUT,
    PolicyParams,
    PolicyScorer,
    load_model,
    save_model,
)
from openxor.prompts import render_prompt
from openxor.rng import Xoshiro256
from openxor.settings import EndpointSettings
from openxor.solvers import (
    BeamConfig,
    BeamScoring,
    SolveOutcome,
    read_outcomes,
    solve_backtracking,
    solve_beam,
    solve_greedy,
    solve_random,
    solve_segments,
    write_outcomes,
)
from openxor.training import InferenceMode, TrainConfig, infer, train
from openxor.utils import atomic_write_text, file_sha256

_log = WorkbenchLogger("cli")
_header = WorkbenchLogger("run", header_logger)

METHODS = ("backtrack", "segments", "random", "greedy", "beam")
MAX_SEED = (1 << 64) - 1

N = TypeVar("N", int, float)


def _version_text() -> str:
    return (
        f"openxor {consts.OPENXOR_VERSION} "
        f"(dataset format {consts.DATASET_FORMAT_VERSION}, "
        f"model format {consts.MODEL_FORMAT_VERSION})"
    )


def _log_header(args: argparse.Namespace, dataset: Path | None = None) -> None:
    _header.info(f"{_version_text()}, seed={args.seed}, jobs={args.jobs}.")
    if dataset is not None and dataset.is_file():
        _header.info(f"Dataset {dataset}: sha256 {file_sha256(dataset)}.")


def _load(path: Path, args: argparse.Namespace) -> list[Instance]:
    instances = load_instances(path, getattr(args, "zero_based", False))
    _log.info(f"Loaded {len(instances)} instances from {path}.")
    return instances


@dataclass(frozen=True)
class _SolveTask:
    method: str
    seed: int
    max_steps: int = consts.DEFAULT_MAX_STEPS
    beam_size: int = 4
    scoring: BeamScoring = BeamScoring.CHECKPOINTS_SATISFIED
    params: PolicyParams | None = None
    mode: InferenceMode = InferenceMode.GREEDY
    retries: int = 0


def _solve_indexed(task: _SolveTask, index: int, instance: Instance) -> SolveOutcome:
    match task.method:
        case "backtrack":
            return solve_backtracking(instance, task.max_steps)
        case "segments":
            return solve_segments(instance)
        case "random":
            return solve_random(instance, Xoshiro256.stream(task.seed, index))
        case "greedy":
            return solve_greedy(instance)
        case "beam":
            scorer = None if task.params is None else PolicyScorer(task.params)
            config = BeamConfig(task.beam_size, task.scoring, scorer)
            return solve_beam(instance, config)
        case "openlm" if task.params is not None:
            return infer(
                task.params,
                instance,
                task.mode,
                task.retries,
                Xoshiro256.stream(task.seed, index),
            )
    raise ContractViolation(f"unknown method {task.method!r}")


def _run_all(
    task: _SolveTask, instances: Sequence[Instance], args: argparse.Namespace
) -> list[SolveOutcome]:
    """Instance-parallel map; output order follows input order."""
    worker = partial(_solve_indexed, task)
    indices = range(len(instances))
    progress = partial(
        tqdm, total=len(instances), desc=task.method, unit="inst", disable=args.quiet
    )
    if args.jobs > 1 and len(instances) > 1:
        with ProcessPoolExecutor(max_workers=args.jobs) as pool:
            return list(progress(pool.map(worker, indices, instances)))
    return list(progress(map(worker, indices, instances)))


def cmd_generate(args: argparse.Namespace) -> int:
    _log_header(args)
    config = GenConfig(
        n=args.n,
        checkpoint_density=args.density,
        seed=args.seed,
        count=args.count,
        few_shot_count=args.few_shot_count,
    )
    dataset = generate_dataset(config, args.jobs)
    dataset.write(args.out)
    _log.info(f"Wrote {len(dataset.instances)} instances to {args.out}.")
    return 0


def cmd_solve(args: argparse.Namespace) -> int:
    _log_header(args, args.input)
    instances = _load(args.input, args)
    scoring = BeamScoring(args.scoring)
    params = None
    if scoring is BeamScoring.POLICY_LOG_PROB:
        if args.model is None:
            raise ContractViolation("--scoring logprob needs --model")
        params, _ = load_model(args.model)
    task = _SolveTask(
        method=args.method,
        seed=args.seed,
        max_steps=args.max_steps,
        beam_size=args.beam_size,
        scoring=scoring,
        params=params,
    )
    outcomes = _run_all(task, instances, args)
    write_outcomes(args.out, outcomes, timing=not args.no_timing)
    unsolved = [o.instance_id for o in outcomes if not o.solved]
    _log.info(f"{len(outcomes) - len(unsolved)}/{len(outcomes)} solved.")
    if args.method in EXACT_METHODS and unsolved:
        _log.error(f"{args.method} did not solve: {', '.join(unsolved)}")
        return 1
    return 0


def cmd_train(args: argparse.Namespace) -> int:
    _log_header(args, args.data)
    instances = _load(args.data, args)
    config = TrainConfig(
        epochs=args.epochs,
        learning_rate=args.lr,
        weight_decay=args.wd,
        seed=args.seed,
    )
    result = train(instances, config, progress=not args.quiet)
    save_model(
        args.out,
        result.params,
        {
            "dataset_sha256": file_sha256(args.data),
            "epoch_losses": list(result.epoch_losses),
            "epochs": config.epochs,
            "learning_rate": config.learning_rate,
            "seed": config.seed,
            "weight_decay": config.weight_decay,
        },
    )
    _log.info(f"Saved model to {args.out}.")
    return 0


def cmd_infer(args: argparse.Namespace) -> int:
    _log_header(args, args.input)
    params, _ = load_model(args.model)
    instances = _load(args.input, args)
    task = _SolveTask(
        method="openlm",
        seed=args.seed,
        params=params,
        mode=InferenceMode(args.mode),
        retries=args.retries,
    )
    outcomes = _run_all(task, instances, args)
    write_outcomes(args.out, outcomes, timing=not args.no_timing)
    solved = sum(o.solved for o in outcomes)
    _log.info(f"{solved}/{len(outcomes)} solved.")
    return 0


def cmd_eval(args: argparse.Namespace) -> int:
    _log_header(args, args.data)
    instances = _load(args.data, args)
    rows = []
    for path in args.results:
        outcomes = read_outcomes(path)
        method = outcomes[0].method if outcomes else path.stem
        rows.append(MethodRow(method, score(instances, outcomes)))
    report = EvalReport(
        tuple(rows),
        fingerprint=DatasetFingerprint.of(args.data, instances, args.dataset_seed),
        feature_layout=FEATURE_LAYOUT
        if any(r.method == "openlm" for r in rows)
        else None,
    )
    for path in args.out:
        report.write(path)
        _log.info(f"Wrote report to {path}.")
    if complaints := check_dominance(rows):
        for complaint in complaints:
            _log.error(complaint)
        return 1
    return 0


def cmd_validate(args: argparse.Namespace) -> int:
    _log_header(args)
    match args.law:
        case "random":
            report = validate_random_bound(args.k, args.trials, args.seed)
            print(report.describe())
            return 0 if report.passed else 1
        case "beam":
            report = validate_beam_bound(args.beam_size, args.k, args.trials, args.seed)
            print(report.describe())
            return 0 if report.passed else 1
    density = validate_density(args.n, args.k, args.seed)
    print(
        f"density n={density.instance.n} k={density.instance.k}: "
        f"{density.with_target} with target (expected {density.expected_with_target}), "
        f"{density.without_target} without "
        f"(expected {density.expected_without_target}), "
        f"preconditions {'hold' if density.preconditions_hold else 'fail'}"
    )
    return 0 if density.passed else 1


def cmd_prompt(args: argparse.Namespace) -> int:
    _log_header(args, args.input)
    instances = _load(args.input, args)
    for instance in instances:
        atomic_write_text(args.out / f"{instance.id}.txt", render_prompt(instance))
    _log.info(f"Wrote {len(instances)} prompts to {args.out}.")
    return 0


def cmd_grade(args: argparse.Namespace) -> int:
    _log_header(args, args.input)
    instances = _load(args.input, args)
    transcripts = read_transcripts(args.transcripts, instances)
    result = grade(instances, transcripts.transcripts, args.method)
    report = EvalReport(
        (MethodRow(args.method, score(instances, result.outcomes)),),
        fingerprint=DatasetFingerprint.of(args.input, instances),
        failure_modes=result.histogram,
        decoding=transcripts.decoding,
    )
    for path in args.out:
        report.write(path)
        _log.info(f"Wrote report to {path}.")
    return 0


def cmd_submit(args: argparse.Namespace) -> int:
    _log_header(args, args.input)
    instances = _load(args.input, args)
    settings = EndpointSettings.from_env(
        {
            "base_url": args.endpoint,
            "model": args.model,
            "temperature": args.temperature,
            "max_tokens": args.max_tokens,
            "max_concurrency": args.max_concurrency,
        }
    )
    _log.info(f"Submitting to {settings.base_url} as {settings.model}.")
    transcripts = EndpointConnection(settings).submit_all(instances, args.out)
    _log.info(f"Wrote {len(transcripts)} transcripts to {args.out}.")
    return 0


def _format_distance(value: float) -> str:
    if math.isinf(value):
        return "inf"
    return f"{value:g}"


def cmd_fixpoint(args: argparse.Namespace) -> int:
    _log_header(args)
    if args.demo == "stairs":
        print(dp_stairs(args.n))
        return 0
    if args.graph is None:
        raise ContractViolation(f"--demo {args.demo} needs --graph")
    graph = read_graph(args.graph)
    source = args.source or next(iter(vertices(graph)), None)
    if source is None:
        raise ContractViolation(f"{args.graph} holds no edges")
    if args.demo == "bellman":
        for vertex, distance in bellman_ford(graph, source).items():
            print(f"{vertex} {_format_distance(distance)}")
    else:
        for vertex in sorted(bfs_reach(graph, source)):
            print(vertex)
    return 0


def _bounded(
    kind: Callable[[str], N], low: N, high: N | None = None, strict: bool = False
) -> Callable[[str], N]:
    """argparse type: `kind` in [low, high], or (low, high] when `strict`."""

    def parse(text: str) -> N:
        value = kind(text)
        below = value <= low if strict else value < low
        if math.isnan(value) or below or (high is not None and value > high):
            opening = "(" if strict else "["
            closing = f"{high}]" if high is not None else "inf)"
            raise argparse.ArgumentTypeError(
                f"{text} is outside {opening}{low}, {closing}"
            )
        return value

    parse.__name__ = getattr(kind, "__name__", "value")
    return parse


def _common_flags() -> argparse.ArgumentParser:
    common = argparse.ArgumentParser(add_help=False)
    common.add_argument(
        "--seed", type=_bounded(int, 0, MAX_SEED), default=0, help="Random seed."
    )
    common.add_argument(
        "--jobs",
        type=_bounded(int, 1),
        default=os.cpu_count() or 1,
        help="Parallel workers (default: processor count).",
    )
    common.add_argument("--quiet", action="store_true", help="Only log warnings.")
    common.add_argument("--verbose", action="store_true", help="Log debug output.")
    common.add_argument(
        "--no-timing",
        action="store_true",
        help="Write zero wall times so repeated runs are byte-identical.",
    )
    common.add_argument(
        "--zero-based",
        action="store_true",
        help="Input checkpoints count from 0 (acc after index p).",
    )
    return common


def build_parser() -> argparse.ArgumentParser:
    parser = argparse.ArgumentParser(
        prog="openxor", description="OpenXOR research workbench."
    )
    parser.add_argument("--version", action="version", version=_version_text())
    sub = parser.add_subparsers(dest="command", required=True)
    common = _common_flags()

    def command(
        name: str, func: Callable[[argparse.Namespace], int], help_text: str
    ) -> argparse.ArgumentParser:
        p = sub.add_parser(name, parents=[common], help=help_text)
        p.set_defaults(func=func)
        return p

    p = command("generate", cmd_generate, "Generate a dataset.")
    p.add_argument("--n", type=_bounded(int, 1), required=True)
    p.add_argument(
        "--density", type=_bounded(float, 0.0, 1.0, strict=True), required=True
    )
    p.add_argument("--count", type=_bounded(int, 0), default=1)
    p.add_argument("--few-shot-count", type=int, choices=(3, 4, 5), default=None)
    p.add_argument("--out", type=Path, required=True)

    p = command("solve", cmd_solve, "Run a solver over a dataset.")
    p.add_argument("--method", choices=METHODS, required=True)
    p.add_argument("--in", dest="input", type=Path, required=True)
    p.add_argument("--out", type=Path, required=True)
    p.add_argument("--beam-size", type=_bounded(int, 1), default=4)
    p.add_argument(
        "--scoring", choices=[s.value for s in BeamScoring], default="checkpoints"
    )
    p.add_argument("--model", type=Path, help="Model file for --scoring logprob.")
    p.add_argument(
        "--max-steps", type=_bounded(int, 1), default=consts.DEFAULT_MAX_STEPS
    )

    p = command("train", cmd_train, "Train the policy network.")
    p.add_argument("--data", type=Path, required=True)
    p.add_argument("--out", type=Path, required=True)
    p.add_argument("--epochs", type=_bounded(int, 1), default=5)
    p.add_argument("--lr", type=_bounded(float, 0.0, strict=True), default=1e-3)
    p.add_argument("--wd", type=_bounded(float, 0.0), default=0.01)

    p = command("infer", cmd_infer, "Run a trained policy over a dataset.")
    p.add_argument("--model", type=Path, required=True)
    p.add_argument("--in", dest="input", type=Path, required=True)
    p.add_argument("--out", type=Path, required=True)
    p.add_argument("--mode", choices=[m.value for m in InferenceMode], default="greedy")
    p.add_argument("--retries", type=_bounded(int, 0), default=0)

    p = command("eval", cmd_eval, "Score result files into a report.")
    p.add_argument("--data", type=Path, required=True)
    p.add_argument("--results", type=Path, action="append", required=True)
    p.add_argument("--out", type=Path, action="append", required=True)
    p.add_argument(
        "--dataset-seed",
        type=_bounded(int, 0, MAX_SEED),
        default=None,
        help="Seed the dataset was made with.",
    )

    p = command("validate", cmd_validate, "Check a search bound empirically.")
    p.add_argument("--law", choices=("random", "beam", "density"), required=True)
    p.add_argument("--k", type=_bounded(int, 0), required=True)
    p.add_argument("--trials", type=_bounded(int, 1), default=10_000)
    p.add_argument("--beam-size", type=_bounded(int, 1), default=4)
    p.add_argument("--n", type=_bounded(int, 1), default=12)

    p = command("prompt", cmd_prompt, "Render task prompts.")
    p.add_argument("--in", dest="input", type=Path, required=True)
    p.add_argument("--out", type=Path, required=True)

    p = command("grade", cmd_grade, "Classify and score model transcripts.")
    p.add_argument("--in", dest="input", type=Path, required=True)
    p.add_argument("--transcripts", type=Path, required=True)
    p.add_argument("--out", type=Path, action="append", required=True)
    p.add_argument("--method", default="llm", help="Row label in the report.")

    p = command("submit", cmd_submit, "Send prompts to a chat endpoint.")
    p.add_argument("--in", dest="input", type=Path, required=True)
    p.add_argument("--out", type=Path, required=True)
    p.add_argument("--endpoint", help=f"Base URL (default: ${consts.ENDPOINT_ENV}).")
    p.add_argument("--model", help=f"Model name (default: ${consts.MODEL_ENV}).")
    p.add_argument("--temperature", type=_bounded(float, 0.0), default=0.0)
    p.add_argument("--max-tokens", type=_bounded(int, 1), default=None)
    p.add_argument("--max-concurrency", type=_bounded(int, 1), default=4)

    p = command("fixpoint", cmd_fixpoint, "Run an operator-iteration demo.")
    p.add_argument("--demo", choices=("stairs", "bellman", "bfs"), required=True)
    p.add_argument("--n", type=_bounded(int, 0), default=10)
    p.add_argument("--graph", type=Path, help="Edge list, one 'u v w' per line.")
    p.add_argument("--source", help="Source vertex (default: smallest).")
    return parser


def main(argv: Sequence[str] | None = None) -> int:
    parser = build_parser()
    try:
        args = parser.parse_args(argv)
    except SystemExit as e:
        return e.code if isinstance(e.code, int) else 2
    configure_logging(quiet=args.quiet, verbose=args.verbose)
    try:
        return args.func(args)
    except OpenXorError as e:
        _log.error(str(e))
        return 1
    except OSError as e:
        _log.error(f"{e.strerror or e}: {e.filename}" if e.filename else str(e))
        return 1


if __name__ == "__main__":
    sys.exit(main())

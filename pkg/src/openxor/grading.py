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
Failure-mode classification of model transcripts.

Rules are tried in a fixed order and the first that fires decides:
a parseable full-length answer, truncation, refusal, a claimed contradiction
on an instance the segment solver can satisfy, and finally a format error.
"""

import json
import re
from collections import Counter
from collections.abc import Mapping, Sequence
from dataclasses import dataclass
from enum import Enum
from functools import cache
from importlib import resources
from pathlib import Path
from typing import Any

from openxor.core import Instance, Op
from openxor.errors import (
    DatasetFormatError,
    ResponseFormatError,
    ResultMismatchError,
)
from openxor.logger import InstanceLogger, WorkbenchLogger
from openxor.prompts import parse_response
from openxor.solvers import SolveOutcome, SolveStatus, attempt_outcome, solve_segments

_log = WorkbenchLogger("grade")

MANIFEST_NAME = "transcripts.jsonl"


class TranscriptSource(Enum):
    FILE = "file"
    ENDPOINT = "endpoint"


@dataclass(frozen=True)
class Transcript:
    instance_id: str
    text: str
    source: TranscriptSource = TranscriptSource.FILE
    token_limit: bool = False


class FailureClass(Enum):
    REFUSAL = "Refusal"
    LENGTH_LIMIT = "LengthLimit"
    CONSTRAINT_HALLUCINATION = "ConstraintHallucination"
    FORMAT_ERROR = "FormatError"
    VALID_ATTEMPT = "ValidAttempt"


@dataclass(frozen=True)
class Classification:
    failure_class: FailureClass
    # the rule or lexicon pattern that fired
    rule: str
    ops: tuple[Op, ...] | None = None


@dataclass(frozen=True)
class FailureLexicon:
    version: str
    refusal: tuple[re.Pattern[str], ...]
    truncation: tuple[re.Pattern[str], ...]
    unsatisfiable: tuple[re.Pattern[str], ...]

    @staticmethod
    def from_dict(data: Mapping[str, Any]) -> "FailureLexicon":
        def compile_all(key: str) -> tuple[re.Pattern[str], ...]:
            return tuple(re.compile(p, re.IGNORECASE) for p in data.get(key, []))

        return FailureLexicon(
            version=str(data["version"]),
            refusal=compile_all("refusal"),
            truncation=compile_all("truncation"),
            unsatisfiable=compile_all("unsatisfiable"),
        )

    @staticmethod
    def load(path: Path | None = None) -> "FailureLexicon":
        """The lexicon at `path`, or the one shipped with the package."""
        if path is None:
            text = (
                resources.files("openxor")
                .joinpath("data/failure_lexicon.json")
                .read_text(encoding="utf-8")
            )
        else:
            text = path.read_text(encoding="utf-8")
        return FailureLexicon.from_dict(json.loads(text))


@cache
def default_lexicon() -> FailureLexicon:
    return FailureLexicon.load()


def _first_match(patterns: Sequence[re.Pattern[str]], text: str) -> str | None:
    for pattern in patterns:
        if pattern.search(text):
            return pattern.pattern
    return None


def classify(
    transcript: Transcript, instance: Instance, lexicon: FailureLexicon | None = None
) -> Classification:
    lexicon = lexicon or default_lexicon()
    text = transcript.text
    try:
        ops = parse_response(text, instance.n)
        return Classification(FailureClass.VALID_ATTEMPT, "parsed", tuple(ops))
    except ResponseFormatError as e:
        format_reason = e.reason

    if transcript.token_limit:
        return Classification(FailureClass.LENGTH_LIMIT, "token_limit_flag")
    if rule := _first_match(lexicon.truncation, text):
        return Classification(FailureClass.LENGTH_LIMIT, rule)
    if rule := _first_match(lexicon.refusal, text):
        return Classification(FailureClass.REFUSAL, rule)
    if (rule := _first_match(lexicon.unsatisfiable, text)) and solve_segments(
        instance
    ).solved:
        return Classification(FailureClass.CONSTRAINT_HALLUCINATION, rule)
    return Classification(FailureClass.FORMAT_ERROR, format_reason)


@dataclass(frozen=True)
class TranscriptSet:
    transcripts: tuple[Transcript, ...]
    # decoding settings recorded by the endpoint client, if any
    decoding: Mapping[str, Any] | None = None


def read_transcripts(directory: Path, instances: Sequence[Instance]) -> TranscriptSet:
    """
    One `<id>.txt` per instance. A manifest written by the endpoint client
    supplies token-limit flags and decoding settings.
    """
    manifest: dict[str, dict[str, Any]] = {}
    decoding = None
    manifest_path = directory / MANIFEST_NAME
    if manifest_path.exists():
        lines = manifest_path.read_text(encoding="utf-8").splitlines()
        for line_num, line in enumerate(lines, 1):
            if not line.strip():
                continue
            try:
                entry = json.loads(line)
                manifest[str(entry["id"])] = entry
                decoding = entry.get("decoding", decoding)
            except (ValueError, KeyError, TypeError, AttributeError) as e:
                raise DatasetFormatError(manifest_path, line_num, str(e)) from e

    missing = [i.id for i in instances if not (directory / f"{i.id}.txt").is_file()]
    if missing:
        raise ResultMismatchError(missing, [])
    transcripts = []
    for instance in instances:
        path = directory / f"{instance.id}.txt"
        try:
            text = path.read_bytes().decode("utf-8", errors="replace")
        except OSError as e:
            raise OSError(
                e.errno, f"Failed to read transcript: {e.strerror}", str(path)
            ) from e
        entry = manifest.get(instance.id)
        transcripts.append(
            Transcript(
                instance.id,
                text,
                TranscriptSource.ENDPOINT if entry else TranscriptSource.FILE,
                bool(entry and entry.get("token_limit")),
            )
        )
    return TranscriptSet(tuple(transcripts), decoding)


@dataclass(frozen=True)
class GradeResult:
    outcomes: tuple[SolveOutcome, ...]
    classifications: Mapping[str, Classification]

    @property
    def histogram(self) -> dict[str, int]:
        counts = Counter(c.failure_class for c in self.classifications.values())
        return {cls.value: counts[cls] for cls in FailureClass}


def grade(
    instances: Sequence[Instance],
    transcripts: Sequence[Transcript],
    method: str = "llm",
    lexicon: FailureLexicon | None = None,
) -> GradeResult:
    """Classify every transcript and turn valid attempts into scorable outcomes."""
    by_id = {t.instance_id: t for t in transcripts}
    known = {i.id for i in instances}
    if by_id.keys() != known:
        raise ResultMismatchError(known - by_id.keys(), by_id.keys() - known)

    outcomes = []
    classifications = {}
    for instance in instances:
        result = classify(by_id[instance.id], instance, lexicon)
        classifications[instance.id] = result
        InstanceLogger.from_component_logger(instance.id, _log).debug(
            f"{result.failure_class.value} ({result.rule})."
        )
        if result.ops is not None:
            outcomes.append(attempt_outcome(instance, method, result.ops, 1, 0.0))
        else:
            outcomes.append(
                SolveOutcome(instance.id, method, SolveStatus.FAILED, None, 1, 0.0)
            )
    return GradeResult(tuple(outcomes), classifications)

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

import json
import threading
from collections.abc import Callable, Sequence
from concurrent.futures import ThreadPoolExecutor
from pathlib import Path
from typing import Any

from requests import Response, Session
from requests.exceptions import RequestException

from openxor import utils
from openxor.core import Instance
from openxor.errors import (
    AuthenticationError,
    ContractViolation,
    RateLimitError,
    TransportError,
)
from openxor.grading import MANIFEST_NAME, Transcript, TranscriptSource
from openxor.logger import InstanceLogger, WorkbenchLogger
from openxor.prompts import render_prompt
from openxor.settings import EndpointSettings

HTTP_UNAUTHORIZED = 401
HTTP_FORBIDDEN = 403
HTTP_TOO_MANY_REQUESTS = 429
HTTP_SERVER_ERROR = 500


def _retry_after(response: Response) -> float | None:
    try:
        return max(0.0, float(response.headers["Retry-After"]))
    except (KeyError, ValueError):
        return None


class EndpointConnection:
    """Class for handling chat endpoint connections."""

    _settings: EndpointSettings
    _log: WorkbenchLogger

    def __init__(
        self,
        settings: EndpointSettings,
        log: WorkbenchLogger | None = None,
        session_factory: Callable[[], Session] = Session,
    ) -> None:
        """
        :param settings: Endpoint address, model, credential and decoding.
        :param log: The logger instance. Errors will be logged to this instance.
        :param session_factory: Builds the HTTP session; each thread gets its own.
        """
        self._settings = settings
        self._log = log or WorkbenchLogger("submit")
        self._session_factory = session_factory
        self._local = threading.local()
        self._sessions: list[Session] = []
        self._lock = threading.Lock()

    @property
    def _session(self) -> Session:
        session: Session | None = getattr(self._local, "session", None)
        if session is None:
            session = self._session_factory()
            session.headers["Authorization"] = f"Bearer {self._settings.api_key}"
            self._local.session = session
            with self._lock:
                self._sessions.append(session)
        return session

    def close(self) -> None:
        with self._lock:
            sessions, self._sessions = self._sessions, []
            self._local = threading.local()
        for session in sessions:
            session.close()

    @property
    def completions_url(self) -> str:
        return f"{self._settings.base_url.rstrip('/')}/chat/completions"

    def _post(self, payload: dict[str, Any]) -> Response:
        """Raises the errors worth another attempt; returns any other response."""
        try:
            response = self._session.post(
                self.completions_url, json=payload, timeout=self._settings.timeout
            )
        except RequestException as e:
            self._log.debug(e)
            raise TransportError(f"Failed to reach {self.completions_url}: {e}") from e
        if response.status_code == HTTP_TOO_MANY_REQUESTS:
            raise RateLimitError("Endpoint is rate limiting.", _retry_after(response))
        if response.status_code >= HTTP_SERVER_ERROR:
            raise TransportError(f"Endpoint returned {response.status_code}.")
        return response

    def complete(self, prompt: str) -> tuple[str, str | None]:
        """
        :param prompt: The user message.
        :return: The answer text and the finish reason.
        """
        payload: dict[str, Any] = {
            "model": self._settings.model,
            "messages": [{"role": "user", "content": prompt}],
            "temperature": self._settings.temperature,
        }
        if self._settings.max_tokens is not None:
            payload["max_tokens"] = self._settings.max_tokens
        post = utils.retry_operation(
            self._settings.retries,
            self._settings.retry_delay,
            (RateLimitError, TransportError),
        )(self._post)
        response = post(payload)
        if response.status_code in (HTTP_UNAUTHORIZED, HTTP_FORBIDDEN):
            raise AuthenticationError(
                f"Endpoint rejected the credential ({response.status_code})."
            )
        if not response.ok:
            raise TransportError(f"Endpoint returned {response.status_code}.")
        try:
            choice = response.json()["choices"][0]
            return choice["message"]["content"] or "", choice.get("finish_reason")
        except (ValueError, KeyError, IndexError, TypeError) as e:
            raise TransportError(f"Malformed completion response: {e}") from e

    def submit(self, instance: Instance) -> Transcript:
        text, finish_reason = self.complete(render_prompt(instance))
        token_limit = finish_reason == "length"
        if token_limit:
            InstanceLogger.from_component_logger(instance.id, self._log).info(
                "Answer stopped at the token limit."
            )
        return Transcript(instance.id, text, TranscriptSource.ENDPOINT, token_limit)

    def submit_all(
        self, instances: Sequence[Instance], out_dir: Path
    ) -> list[Transcript]:
        """
        Submit every instance with at most `max_concurrency` requests in flight.
        Each transcript is written as soon as it arrives. The manifest lists the
        ones that arrived even when some failed; the first failure is re-raised.
        """
        if len({i.id for i in instances}) != len(instances):
            raise ContractViolation("instance ids must be unique")
        transcripts: list[Transcript] = []
        errors: list[Exception] = []

        def run(instance: Instance) -> Transcript:
            transcript = self.submit(instance)
            store_transcript(out_dir, transcript)
            return transcript

        with ThreadPoolExecutor(max_workers=self._settings.max_concurrency) as pool:
            futures = [pool.submit(run, instance) for instance in instances]
            for instance, future in zip(instances, futures, strict=True):
                try:
                    transcripts.append(future.result())
                except Exception as e:  # noqa: BLE001
                    InstanceLogger.from_component_logger(instance.id, self._log).error(
                        f"Submission failed: {e}"
                    )
                    errors.append(e)
        write_manifest(out_dir, transcripts, self._settings)
        self.close()
        if errors:
            raise errors[0]
        return transcripts


def store_transcript(out_dir: Path, transcript: Transcript) -> Path:
    path = out_dir / f"{transcript.instance_id}.txt"
    utils.atomic_write_text(path, transcript.text)
    return path


def write_manifest(
    out_dir: Path, transcripts: Sequence[Transcript], settings: EndpointSettings
) -> None:
    lines = [
        json.dumps(
            {
                "id": t.instance_id,
                "file": f"{t.instance_id}.txt",
                "token_limit": t.token_limit,
                "decoding": settings.decoding(),
            },
            sort_keys=True,
        )
        for t in sorted(transcripts, key=lambda t: t.instance_id)
    ]
    text = "".join(f"{line}\n" for line in lines)
    utils.atomic_write_text(out_dir / MANIFEST_NAME, text)

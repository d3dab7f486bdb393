import json
import threading
from dataclasses import replace
from pathlib import Path
from typing import Any

import pytest
from requests import Response
from requests.exceptions import ConnectionError as RequestsConnectionError

from openxor.core import Instance
from openxor.errors import AuthenticationError, ContractViolation, TransportError
from openxor.grading import FailureClass, classify, read_transcripts
from openxor.net import EndpointConnection
from openxor.settings import EndpointSettings


def response(status: int, body: Any = None, headers: dict | None = None) -> Response:
    r = Response()
    r.status_code = status
    r._content = json.dumps(body).encode() if body is not None else b"not json"
    r.encoding = "utf-8"
    r.headers.update(headers or {})
    return r


def completion(text: str, finish_reason: str = "stop") -> Response:
    return response(
        200,
        {"choices": [{"message": {"content": text}, "finish_reason": finish_reason}]},
    )


class FakeSession:
    """Replays canned responses and records every request."""

    def __init__(self, *replies: Response | Exception) -> None:
        self.headers: dict[str, str] = {}
        self.replies = list(replies)
        self.requests: list[tuple[str, dict]] = []
        self.threads: set[int] = set()
        self.closed = False

    def post(self, url: str, json: dict, timeout: float) -> Response:
        self.requests.append((url, json))
        self.threads.add(threading.get_ident())
        reply = self.replies.pop(0) if len(self.replies) > 1 else self.replies[0]
        if isinstance(reply, Exception):
            raise reply
        return reply

    def close(self) -> None:
        self.closed = True


def settings(**overrides: Any) -> EndpointSettings:
    values = {
        "base_url": "http://localhost:8000/v1/",
        "model": "test-model",
        "api_key": "secret",
        "retry_delay": 0.0,
    }
    return EndpointSettings.from_dict(values | overrides)


def connect(session: FakeSession, **overrides: Any) -> EndpointConnection:
    return EndpointConnection(
        settings(**overrides),
        session_factory=lambda: session,  # type: ignore[arg-type,return-value]
    )


def test_request_shape(worked: Instance) -> None:
    session = FakeSession(completion("XOR XOR NOP NOP XOR NOP XOR"))
    transcript = connect(session, max_tokens=64).submit(worked)
    url, payload = session.requests[0]
    assert url == "http://localhost:8000/v1/chat/completions"
    assert payload["model"] == "test-model"
    assert payload["temperature"] == 0.0
    assert payload["max_tokens"] == 64
    assert payload["messages"][0]["role"] == "user"
    assert payload["messages"][0]["content"].endswith("Operations:\n")
    assert session.headers["Authorization"] == "Bearer secret"
    assert not transcript.token_limit
    assert classify(transcript, worked).failure_class is FailureClass.VALID_ATTEMPT


def test_length_finish_sets_flag(worked: Instance) -> None:
    session = FakeSession(completion("XOR XOR", "length"))
    transcript = connect(session).submit(worked)
    assert transcript.token_limit
    assert classify(transcript, worked).failure_class is FailureClass.LENGTH_LIMIT


def test_rate_limit_is_retried(worked: Instance) -> None:
    session = FakeSession(
        response(429, {}, {"Retry-After": "0"}),
        completion("XOR XOR NOP NOP XOR NOP XOR"),
    )
    connect(session).submit(worked)
    assert len(session.requests) == 2


def test_server_errors_exhaust_retries(worked: Instance) -> None:
    session = FakeSession(response(503, {}))
    with pytest.raises(TransportError):
        connect(session, retries=3).submit(worked)
    assert len(session.requests) == 3


def test_unreachable_host(worked: Instance) -> None:
    session = FakeSession(RequestsConnectionError("refused"))
    with pytest.raises(TransportError, match="Failed to reach"):
        connect(session, retries=1).submit(worked)


def test_rejected_credential_is_not_retried(worked: Instance) -> None:
    session = FakeSession(response(401, {}))
    with pytest.raises(AuthenticationError):
        connect(session).submit(worked)
    assert len(session.requests) == 1


def test_malformed_body(worked: Instance) -> None:
    with pytest.raises(TransportError, match="Malformed"):
        connect(FakeSession(response(200))).submit(worked)


def test_submit_all_writes_transcripts_and_manifest(
    tmp_path: Path, worked: Instance
) -> None:
    session = FakeSession(completion("XOR XOR NOP NOP XOR NOP XOR"))
    connect(session, max_concurrency=2).submit_all([worked], tmp_path)
    assert session.closed
    loaded = read_transcripts(tmp_path, [worked])
    assert loaded.transcripts[0].text == "XOR XOR NOP NOP XOR NOP XOR"
    assert loaded.decoding == {
        "model": "test-model",
        "temperature": 0.0,
        "max_tokens": None,
    }


def test_submit_all_keeps_what_arrived(tmp_path: Path, worked: Instance) -> None:
    broken = Instance("broken", worked.bits, worked.target, few_shot=worked.few_shot)
    session = FakeSession(completion("XOR"), response(401, {}))
    with pytest.raises(AuthenticationError):
        connect(session, max_concurrency=1).submit_all([worked, broken], tmp_path)
    assert (tmp_path / "worked.txt").exists()
    assert not (tmp_path / "broken.txt").exists()


def test_each_worker_thread_gets_its_own_session(
    tmp_path: Path, worked: Instance
) -> None:
    sessions: list[FakeSession] = []
    lock = threading.Lock()

    def factory() -> FakeSession:
        session = FakeSession(completion("XOR XOR NOP NOP XOR NOP XOR"))
        with lock:
            sessions.append(session)
        return session

    connection = EndpointConnection(
        settings(max_concurrency=4),
        session_factory=factory,  # type: ignore[arg-type]
    )
    instances = [replace(worked, id=f"w{i}") for i in range(12)]
    assert len(connection.submit_all(instances, tmp_path)) == 12
    assert 1 <= len(sessions) <= 4
    assert sum(len(s.requests) for s in sessions) == 12
    assert all(len(s.threads) == 1 for s in sessions)
    assert all(s.closed for s in sessions)
    assert all(s.headers["Authorization"] == "Bearer secret" for s in sessions)


def test_settings_need_endpoint_model_and_key() -> None:
    with pytest.raises(ContractViolation, match="OPENXOR_ENDPOINT"):
        EndpointSettings.from_dict({"model": "m", "api_key": "k"})
    with pytest.raises(ContractViolation, match="OPENXOR_API_KEY"):
        EndpointSettings.from_dict({"base_url": "http://x", "model": "m"})


def test_settings_precedence(tmp_path: Path) -> None:
    dotenv = tmp_path / ".env"
    dotenv.write_text(
        "OPENXOR_ENDPOINT=http://dotenv\nOPENXOR_MODEL=dotenv-model\n"
        "OPENXOR_API_KEY=dotenv-key\n"
    )
    environ = {"OPENXOR_MODEL": "env-model"}
    resolved = EndpointSettings.from_env({"temperature": 0.5}, environ, dotenv)
    assert resolved.base_url == "http://dotenv"
    assert resolved.model == "env-model"
    assert resolved.api_key == "dotenv-key"
    assert resolved.temperature == 0.5
    assert "dotenv-key" not in repr(resolved)
    flagged = EndpointSettings.from_env({"model": "flag"}, environ, dotenv)
    assert flagged.model == "flag"

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

from collections.abc import Iterable
from pathlib import Path


class OpenXorError(Exception):
    """Base class for every error raised by the workbench."""


class ContractViolation(OpenXorError):
    """A caller broke an operation's precondition."""


class DatasetFormatError(OpenXorError):
    def __init__(self, path: Path | str, line: int | None, reason: str) -> None:
        where = f"{path}:{line}" if line is not None else str(path)
        super().__init__(f"{where}: {reason}")
        self.path = Path(path)
        self.line = line
        self.reason = reason


class NumericError(OpenXorError):
    """Non-finite values showed up in the network or the optimizer."""


class NegativeCycleError(OpenXorError):
    pass


class ModelFormatError(OpenXorError):
    pass


class ResultMismatchError(OpenXorError):
    """Results and instances do not pair up one-to-one by id."""

    def __init__(self, missing: Iterable[str], unexpected: Iterable[str]) -> None:
        self.missing = sorted(missing)
        self.unexpected = sorted(unexpected)
        parts = []
        if self.missing:
            parts.append(f"no result for {', '.join(self.missing)}")
        if self.unexpected:
            parts.append(f"unknown ids {', '.join(self.unexpected)}")
        super().__init__("; ".join(parts) or "result mismatch")


class ResponseFormatError(OpenXorError):
    """A model transcript holds no usable operation sequence."""

    def __init__(self, reason: str, detail: str) -> None:
        super().__init__(f"{reason}: {detail}")
        self.reason = reason
        self.detail = detail


class TransportError(OpenXorError):
    pass


class AuthenticationError(TransportError):
    pass


class RateLimitError(TransportError):
    def __init__(self, message: str, retry_after: float | None = None) -> None:
        super().__init__(message)
        self.retry_after = retry_after

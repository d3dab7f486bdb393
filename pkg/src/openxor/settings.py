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

import os
from collections.abc import Mapping
from dataclasses import dataclass, field
from pathlib import Path
from typing import Any

from dotenv import dotenv_values

from openxor import consts
from openxor.errors import ContractViolation


@dataclass(frozen=True)
class EndpointSettings:
    """Configuration for an OpenAI-compatible chat endpoint."""

    base_url: str
    model: str
    api_key: str = field(repr=False)
    temperature: float = 0.0
    max_tokens: int | None = None
    timeout: float = 300.0
    max_concurrency: int = 4
    retries: int = 3
    retry_delay: float = 2.0

    def __post_init__(self) -> None:
        if not self.base_url:
            raise ContractViolation(
                f"no endpoint given (--endpoint or {consts.ENDPOINT_ENV})"
            )
        if not self.model:
            raise ContractViolation(f"no model given (--model or {consts.MODEL_ENV})")
        if not self.api_key:
            raise ContractViolation(f"no credential in {consts.API_KEY_ENV}")
        if self.max_concurrency < 1 or self.retries < 1:
            raise ContractViolation("concurrency and retries must be at least 1")

    @staticmethod
    def from_dict(settings: Mapping[str, Any]) -> "EndpointSettings":
        """Create an EndpointSettings object from a dictionary, ignoring None."""
        present = {k: v for k, v in settings.items() if v is not None}
        return EndpointSettings(
            base_url=present.get("base_url", ""),
            model=present.get("model", ""),
            api_key=present.get("api_key", ""),
            **{
                k: present[k]
                for k in (
                    "temperature",
                    "max_tokens",
                    "timeout",
                    "max_concurrency",
                    "retries",
                    "retry_delay",
                )
                if k in present
            },
        )

    @staticmethod
    def from_env(
        overrides: Mapping[str, Any] | None = None,
        environ: Mapping[str, str] | None = None,
        dotenv_path: Path | None = None,
    ) -> "EndpointSettings":
        """
        Flags in `overrides` win over the process environment, which wins over
        a `.env` file. The credential is only ever read from the environment.
        """
        env: dict[str, Any] = {
            k: v
            for k, v in dotenv_values(dotenv_path or Path.cwd() / ".env").items()
            if v is not None
        }
        env.update(os.environ if environ is None else environ)
        settings: dict[str, Any] = {
            "base_url": env.get(consts.ENDPOINT_ENV),
            "model": env.get(consts.MODEL_ENV),
            "api_key": env.get(consts.API_KEY_ENV),
        }
        settings.update({k: v for k, v in (overrides or {}).items() if v is not None})
        return EndpointSettings.from_dict(settings)

    def decoding(self) -> dict[str, Any]:
        """Settings that shape the model's answer, recorded in reports."""
        return {
            "model": self.model,
            "temperature": self.temperature,
            "max_tokens": self.max_tokens,
        }

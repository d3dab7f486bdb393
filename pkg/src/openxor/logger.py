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

import logging
import sys
from typing import Any

logger = logging.getLogger("openxor")
# run headers pass through --quiet
header_logger = logging.getLogger("openxor.header")

LOG_FORMAT = "%(asctime)s %(levelname)-7s %(message)s"


class WorkbenchLogger(logging.LoggerAdapter):
    """Logger wrapper for component logs. Logs are prefixed with the component
    name."""

    def __init__(
        self, component: str, logger_: Any = logger, extra: Any = None
    ) -> None:
        super().__init__(logger_, extra or {})
        self.component = component.upper()

    def process(self, msg: Any, kwargs: Any) -> Any:
        return f"[{self.component}]: {msg}", kwargs


class InstanceLogger(WorkbenchLogger):
    """Logger wrapper for per-instance logs. Logs are prefixed with the instance
    id and component name."""

    def __init__(
        self, component: str, instance_id: str, logger_: Any = logger, extra: Any = None
    ) -> None:
        super().__init__(component, logger_, extra)
        self.instance_id = instance_id

    def process(self, msg: Any, kwargs: Any) -> Any:
        return f"#{self.instance_id} [{self.component}]: {msg}", kwargs

    @classmethod
    def from_component_logger(
        cls, instance_id: str, component_logger: WorkbenchLogger
    ) -> "InstanceLogger":
        return cls(
            component_logger.component,
            instance_id,
            component_logger.logger,
            component_logger.extra,
        )


def configure_logging(quiet: bool = False, verbose: bool = False) -> None:
    """
    Route workbench logs to standard error. Standard output stays reserved for
    data. Records from `header_logger` are emitted at every level.
    """
    level = logging.DEBUG if verbose else logging.WARNING if quiet else logging.INFO
    handler = logging.StreamHandler(sys.stderr)
    handler.setFormatter(logging.Formatter(LOG_FORMAT))
    logger.handlers.clear()
    logger.addHandler(handler)
    logger.setLevel(level)
    logger.propagate = False
    header_logger.setLevel(min(level, logging.INFO))

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

from dataclasses import dataclass
from typing import Any


@dataclass(frozen=True, order=True)
class SemanticVersion:
    """Version triple used for the package, the dataset format and model files."""

    major: int
    minor: int
    patch: int

    def __str__(self) -> str:
        return f"{self.major}.{self.minor}.{self.patch}"

    def compatible_with(self, other: Any) -> bool:
        """
        Files written under `other` can be read by code at `self`. Majors must
        match; while the major is 0 every minor bump is breaking.
        """
        if not isinstance(other, SemanticVersion):
            return False
        if self.major != other.major:
            return False
        if self.major == 0:
            return self.minor == other.minor
        return True

    @staticmethod
    def from_string(version: str) -> "SemanticVersion":
        try:
            major, minor, patch = map(int, version.strip().split("."))
        except ValueError as e:
            raise ValueError(f"Not a semantic version: {version!r}") from e
        return SemanticVersion(major, minor, patch)

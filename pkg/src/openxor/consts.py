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

from openxor.version import SemanticVersion

DATASET_FORMAT_VERSION = SemanticVersion(1, 0, 0)
MODEL_FORMAT_VERSION = SemanticVersion(1, 0, 0)
GENERATOR_VERSION = f"splitmix64+xoshiro256**/{DATASET_FORMAT_VERSION}"

# Backtracking step budget when none is given.
DEFAULT_MAX_STEPS = 10_000_000
# Few-shot demonstrations are short and carry a single checkpoint.
FEW_SHOT_N = 8
FEW_SHOT_DENSITY = 0.125
MAX_FEW_SHOT_N = 16

API_KEY_ENV = "OPENXOR_API_KEY"
ENDPOINT_ENV = "OPENXOR_ENDPOINT"
MODEL_ENV = "OPENXOR_MODEL"

try:
    from openxor._version import __version__  # type: ignore

    OPENXOR_VERSION = SemanticVersion.from_string(__version__)
except ImportError:
    try:
        from importlib.metadata import PackageNotFoundError, version

        OPENXOR_VERSION = SemanticVersion.from_string(version("openxor-workbench"))
    except (ImportError, PackageNotFoundError, ValueError):
        OPENXOR_VERSION = SemanticVersion(0, 0, 0)

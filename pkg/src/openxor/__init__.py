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

from openxor.core import Instance, Op, simulate, verify
from openxor.generate import GenConfig, generate_dataset
from openxor.solvers import SolveOutcome, SolveStatus

__all__ = [
    "GenConfig",
    "Instance",
    "Op",
    "SolveOutcome",
    "SolveStatus",
    "generate_dataset",
    "simulate",
    "verify",
]

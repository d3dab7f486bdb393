"""Writes src/openxor/_version.py from the version in pyproject.toml."""

import re
import tomllib
from pathlib import Path

ROOT = Path(__file__).resolve().parent.parent
PYPROJECT_PATH = ROOT / "pyproject.toml"
VERSION_FILE_PATH = ROOT / "src" / "openxor" / "_version.py"


def write_version() -> None:
    with PYPROJECT_PATH.open("rb") as f:
        version = tomllib.load(f)["project"]["version"]
    if not re.fullmatch(r"\d+\.\d+\.\d+", version):
        raise SystemExit(f"{PYPROJECT_PATH}: not a semantic version: {version!r}")
    VERSION_FILE_PATH.write_text(f'__version__ = "{version}"\n', encoding="utf-8")


if __name__ == "__main__":
    write_version()

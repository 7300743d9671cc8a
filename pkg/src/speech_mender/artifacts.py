"""Artifact files: atomic writes and JSON reading."""

import json
import os
import tempfile
from collections.abc import Iterator
from contextlib import contextmanager
from decimal import Decimal
from pathlib import Path
from typing import Any

from .errors import MissingFile, SchemaError


@contextmanager
def atomic_path(path: Path) -> Iterator[Path]:
    """Yield a temporary sibling path that replaces ``path`` on success."""
    path.parent.mkdir(parents=True, exist_ok=True)
    fd, tmp_name = tempfile.mkstemp(prefix=f".{path.name}.", suffix=".tmp", dir=path.parent)
    os.close(fd)
    tmp_path = Path(tmp_name)
    try:
        yield tmp_path
        os.replace(tmp_path, path)
    finally:
        if tmp_path.exists():
            tmp_path.unlink()


def atomic_write_text(path: Path, content: str) -> Path:
    """Write UTF-8 text atomically."""
    with atomic_path(path) as tmp_path:
        tmp_path.write_text(content, encoding="utf-8")
    return path


def atomic_copy(source: Path, destination: Path) -> Path:
    """Copy a file byte-for-byte, atomically."""
    with atomic_path(destination) as tmp_path:
        tmp_path.write_bytes(source.read_bytes())
    return destination


def read_text_file(path: Path) -> str:
    """Read a UTF-8 input file."""
    if not path.is_file():
        raise MissingFile(str(path))
    return path.read_text(encoding="utf-8")


def read_json_document(path: Path) -> Any:
    """Read a JSON file, decoding non-integer numbers as Decimal.

    Raises:
        MissingFile: If the path does not exist.
        SchemaError: If the file is not valid JSON.
    """
    text = read_text_file(path)
    try:
        return json.loads(text, parse_float=Decimal)
    except json.JSONDecodeError as e:
        raise SchemaError("$", f"{path}: {e}") from e

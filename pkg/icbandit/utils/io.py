"""
Atomic file output.
"""

import os
import tempfile
from pathlib import Path

from icbandit.errors import OutputError


def ensure_writable_directory(path: Path) -> Path:
    """
    Create the directory if needed and verify that files can be written into it.

    Args:
        path: Output directory

    Returns:
        The resolved directory path

    Raises:
        OutputError: If the directory cannot be created or written
    """
    try:
        path.mkdir(parents=True, exist_ok=True)
        with tempfile.NamedTemporaryFile(dir=path, prefix=".probe-", delete=True):
            pass
    except OSError as e:
        raise OutputError(
            f"Output directory is not writable: {path}",
            details={"path": str(path), "reason": str(e)},
        ) from e
    return path.resolve()


def write_atomic(path: Path, content: str) -> None:
    """
    Write text to a temporary file in the target directory, then rename it into place.

    Args:
        path: Destination file
        content: Text content
    """
    try:
        fd, tmp_name = tempfile.mkstemp(dir=path.parent, prefix=f".{path.name}.", suffix=".tmp")
    except OSError as e:
        raise OutputError(
            f"Cannot create a file in {path.parent}", details={"path": str(path), "reason": str(e)}
        ) from e
    try:
        with os.fdopen(fd, "w", encoding="utf-8", newline="") as handle:
            handle.write(content)
        os.replace(tmp_name, path)
    except OSError as e:
        if os.path.exists(tmp_name):
            os.unlink(tmp_name)
        raise OutputError(
            f"Failed to write {path}", details={"path": str(path), "reason": str(e)}
        ) from e

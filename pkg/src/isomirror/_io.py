"""Atomic file output helpers."""

from __future__ import annotations

import contextlib
import os
import tempfile
from pathlib import Path


@contextlib.contextmanager
def atomic_write(path, mode="w"):
    """Write to a temporary sibling of ``path`` and rename it into place on success."""
    path = Path(path)
    path.parent.mkdir(parents=True, exist_ok=True)
    fd, tmp = tempfile.mkstemp(prefix=f".{path.name}.", suffix=".tmp", dir=path.parent)
    kwargs = {} if "b" in mode else {"encoding": "utf-8", "newline": "\n"}
    try:
        with os.fdopen(fd, mode, **kwargs) as fh:
            yield fh
        os.replace(tmp, path)
    except BaseException:
        with contextlib.suppress(FileNotFoundError):
            os.unlink(tmp)
        raise


class OutputBatch:
    """Collect several outputs and publish them together.

    Files are staged next to their targets and renamed only when the ``with``
    block exits cleanly; on error every staged file is removed, so a failed
    command leaves no partial results behind.
    """

    def __init__(self, directory):
        self.directory = Path(directory)
        self._staged: list[tuple[str, Path]] = []

    def __enter__(self):
        self.directory.mkdir(parents=True, exist_ok=True)
        return self

    def path(self, name: str) -> str:
        """Return a staging path to write ``name`` to."""
        fd, tmp = tempfile.mkstemp(prefix=f".{Path(name).name}.", suffix=".tmp", dir=self.directory)
        os.close(fd)
        self._staged.append((tmp, self.directory / name))
        return tmp

    @contextlib.contextmanager
    def open(self, name: str):
        tmp = self.path(name)
        with open(tmp, "w", encoding="utf-8", newline="\n") as fh:
            yield fh

    @property
    def targets(self) -> list[Path]:
        return [t for _, t in self._staged]

    def __exit__(self, exc_type, exc, tb):
        if exc_type is None:
            for tmp, target in self._staged:
                target.parent.mkdir(parents=True, exist_ok=True)
                os.replace(tmp, target)
        else:
            for tmp, _ in self._staged:
                with contextlib.suppress(FileNotFoundError):
                    os.unlink(tmp)
        return False

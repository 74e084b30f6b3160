"""Record filesystem writes made by the process while a block runs."""
from __future__ import annotations

import os
import sys
from contextlib import contextmanager

_WRITE_EVENTS = {"os.remove", "os.rename", "os.mkdir", "os.rmdir", "os.truncate", "os.symlink",
                 "os.link", "os.chmod", "shutil.rmtree", "shutil.copyfile", "shutil.move"}
_active: list[list[str]] = []


def _hook(event, args):
    if not _active:
        return
    if event == "open":
        path, mode, flags = (list(args) + [None, None, None])[:3]
        if path is None or isinstance(path, int):
            return
        writing = (mode and any(c in str(mode) for c in "wax+")) or (
            isinstance(flags, int) and flags & (os.O_WRONLY | os.O_RDWR | os.O_CREAT | os.O_TRUNC | os.O_APPEND))
        if writing:
            _active[-1].append(os.path.abspath(os.fsdecode(path)))
    elif event in _WRITE_EVENTS and args:
        _active[-1].append(os.path.abspath(os.fsdecode(args[0])) if isinstance(args[0], (str, bytes, os.PathLike)) else str(args[0]))


sys.addaudithook(_hook)


@contextmanager
def record_writes():
    touched: list[str] = []
    _active.append(touched)
    try:
        yield touched
    finally:
        _active.pop()

"""Shared helpers: seed splitting, atomic file writes, thread fan-out."""

from __future__ import annotations

import hashlib
import os
import tempfile
from concurrent.futures import ThreadPoolExecutor
from typing import Callable, Iterable, Sequence


def subseed(root: int, *parts) -> int:
    """Derive a child seed from a root seed and a label path.

    The split rule is sha256 over the repr of ``(root, *parts)``; parts are
    stage names and indices (e.g. ``subseed(s, "trace", 3)``). Stable across
    runs and platforms, so one top-level seed reproduces every stage.
    """
    digest = hashlib.sha256(repr((int(root),) + tuple(parts)).encode("ascii")).digest()
    return int.from_bytes(digest[:8], "little")


def atomic_write_text(path: str | os.PathLike, text: str) -> None:
    """Write a file via temp-and-rename so readers never see partial output."""
    path = os.fspath(path)
    directory = os.path.dirname(path) or "."
    fd, tmp = tempfile.mkstemp(dir=directory, prefix=".tmp-", suffix="~")
    try:
        with os.fdopen(fd, "w", newline="") as handle:
            handle.write(text)
        os.replace(tmp, path)
    except BaseException:
        if os.path.exists(tmp):
            os.unlink(tmp)
        raise


def parallel_map(fn: Callable, items: Sequence, threads: int = 1) -> list:
    """Map ``fn`` over ``items``, optionally on a thread pool.

    Results come back in input order regardless of completion order, so the
    reduction is deterministic for any thread count.
    """
    if threads <= 1 or len(items) <= 1:
        return [fn(item) for item in items]
    with ThreadPoolExecutor(max_workers=threads) as pool:
        return list(pool.map(fn, items))


def sha256_hex(data: bytes) -> str:
    return hashlib.sha256(data).hexdigest()


def format_float(x: float) -> str:
    """Shortest round-trip decimal form; keeps CSV/JSON artifacts byte-stable."""
    return repr(float(x))

"""Single-word atomic cells.

CPython has no user-visible compare-and-swap, so every cell guards its
compare-then-store with one lock from a small striped pool.  The critical
section never calls out, never waits on another cell, and is held for a
handful of bytecodes, so the algorithms built on top keep their lock-free
structure: no operation ever waits for another operation to *finish*.

Successful writes can be journaled (see :func:`recording`), which is what the
local-consistency stepper uses to apply one atomic step and roll it back.
"""
from __future__ import annotations

import threading
from contextlib import contextmanager
from typing import Any, Generic, Iterator, TypeVar

T = TypeVar("T")

_STRIPES = 64
_LOCKS = [threading.Lock() for _ in range(_STRIPES)]

# (cell, previous value) for every successful write while recording
_journal: list[tuple[Any, Any]] | None = None


def _lock_for(obj: object) -> threading.Lock:
    return _LOCKS[(id(obj) >> 4) % _STRIPES]


def _log(cell: Any, old: Any) -> None:
    if _journal is not None:
        _journal.append((cell, old))


@contextmanager
def recording() -> Iterator[list[tuple[Any, Any]]]:
    """Journal every successful atomic write made inside the block.

    Single-threaded use only (the stepper owns the structure).
    """
    global _journal
    prev = _journal
    _journal = []
    try:
        yield _journal
    finally:
        _journal = prev


def rollback(journal: list[tuple[Any, Any]]) -> None:
    """Undo journaled writes, newest first."""
    for cell, old in reversed(journal):
        cell._restore(old)


class AtomicReference(Generic[T]):
    """A reference cell with identity-based compare-and-set."""

    __slots__ = ("_value",)

    def __init__(self, value: T = None) -> None:
        self._value = value

    def get(self) -> T:
        return self._value

    def set(self, value: T) -> None:
        with _lock_for(self):
            _log(self, self._value)
            self._value = value

    def compare_and_set(self, expected: T, value: T) -> bool:
        with _lock_for(self):
            if self._value is not expected:
                return False
            _log(self, expected)
            self._value = value
            return True

    def _restore(self, value: T) -> None:
        self._value = value

    def __repr__(self) -> str:
        return f"AtomicReference({self._value!r})"


class AtomicFlag:
    """Boolean that can only go False -> True."""

    __slots__ = ("_value",)

    def __init__(self) -> None:
        self._value = False

    def get(self) -> bool:
        return self._value

    def test_and_set(self) -> bool:
        """Set the flag; return True iff this call flipped it."""
        with _lock_for(self):
            if self._value:
                return False
            _log(self, False)
            self._value = True
            return True

    def _restore(self, value: bool) -> None:
        self._value = value


class AtomicCounter:
    __slots__ = ("_value",)

    def __init__(self, value: int = 0) -> None:
        self._value = value

    def increment(self, by: int = 1) -> int:
        with _lock_for(self):
            self._value += by
            return self._value

    def get(self) -> int:
        return self._value

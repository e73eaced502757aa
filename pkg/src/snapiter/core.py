"""Node handles, the set-adapter contract, and the sequential cursor contract."""
from __future__ import annotations

import itertools
from typing import Iterator, Optional, Protocol

from snapiter.atomics import _lock_for, _log

INT64_MIN = -(2**63)
INT64_MAX = 2**63 - 1

_identities = itertools.count(1)


class ContractViolation(RuntimeError):
    """Raised when a caller breaks an operation's precondition."""


def check_key(key: int) -> int:
    if not isinstance(key, int) or isinstance(key, bool):
        raise TypeError(f"keys are 64-bit integers, got {type(key).__name__}")
    if not INT64_MIN <= key <= INT64_MAX:
        raise ValueError(f"key {key} outside the signed 64-bit range")
    return key


class NodeHandle:
    """One key behind a level of indirection, plus a logical-deletion mark.

    Identities come from a process-wide counter and are never reused.
    Handles are never recycled either; the garbage collector only frees a
    handle once nothing (tree, bucket, snapshot-list, report) refers to it.
    """

    __slots__ = ("key", "identity", "_marked", "__weakref__")

    def __init__(self, key: int, identity: Optional[int] = None) -> None:
        self.key = key
        self.identity = next(_identities) if identity is None else identity
        self._marked = False

    @property
    def marked(self) -> bool:
        return self._marked

    def mark(self) -> bool:
        """Atomically flip the mark false -> true; True iff this call did it."""
        with _lock_for(self):
            if self._marked:
                return False
            _log(self, False)
            self._marked = True
            return True

    def _restore(self, value: bool) -> None:
        self._marked = value

    def __repr__(self) -> str:
        m = "*" if self._marked else ""
        return f"<node {self.key}{m} #{self.identity}>"


def mark_node(n: NodeHandle) -> bool:
    return n.mark()


class Cursor(Protocol):
    """Resumable sequential iterator.

    ``step`` performs one unit of traversal (one shared-memory read of the
    structure) and returns the unmarked node it arrived at, or ``None`` when
    the step landed somewhere that yields nothing.  Between two steps the
    cursor holds only its own private state, so a caller may pause it, let
    the structure change, and resume.
    """

    done: bool

    def step(self) -> Optional[NodeHandle]: ...

    def clone(self) -> "Cursor": ...

    def describe(self) -> str: ...

    def __iter__(self) -> Iterator[NodeHandle]: ...

    def __next__(self) -> NodeHandle: ...


class CursorBase:
    done = False

    def __iter__(self) -> "CursorBase":
        return self

    def __next__(self) -> NodeHandle:
        while not self.done:
            n = self.step()
            if n is not None:
                return n
        raise StopIteration


class SetAdapter(Protocol):
    """What a backend must provide to be wrapped by the framework.

    ``seek`` is read-only and may return a marked node.  ``ds_insert``
    returns the new handle, or ``None`` when its atomic step lost a race
    (the caller retries).  ``ds_delete`` physically unlinks an already
    marked node and returns once it is unreachable.
    """

    #: traversal visits keys in ascending order (enables sorted append)
    sorted_traversal: bool

    def seek(self, key: int) -> Optional[NodeHandle]: ...

    def ds_insert(self, key: int) -> Optional[NodeHandle]: ...

    def ds_delete(self, node: NodeHandle) -> None: ...

    def sequential_cursor(self) -> Cursor: ...


def sequential_cursor(adapter: SetAdapter) -> Cursor:
    return adapter.sequential_cursor()

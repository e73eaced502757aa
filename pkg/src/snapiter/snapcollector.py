"""The shared snap-collector object.

Iterators append the nodes they traverse to one shared snapshot-list;
updaters append reports about concurrent changes to their own report-list.
Both kinds of list are singly linked with a CAS on the last entry's ``next``
field.  Blocking links the distinguished ``_END`` entry after the last
entry, after which no append can succeed.
"""
from __future__ import annotations

import enum
import threading
from typing import NamedTuple, Optional

from snapiter.atomics import AtomicCounter, AtomicReference
from snapiter.core import ContractViolation, NodeHandle


class Kind(enum.Enum):
    INSERT = "insert"
    DELETE = "delete"


INSERT = Kind.INSERT
DELETE = Kind.DELETE


class Report(NamedTuple):
    node: NodeHandle
    kind: Kind

    @property
    def key(self) -> int:
        return self.node.key

    @property
    def identity(self) -> int:
        return self.node.identity


class _Entry:
    __slots__ = ("item", "next")

    def __init__(self, item) -> None:
        self.item = item
        self.next: AtomicReference[Optional[_Entry]] = AtomicReference(None)


_END = _Entry(None)


class _LinkedLog:
    """Append-only linked list that can be sealed with ``_END``."""

    __slots__ = ("head", "tail")

    def __init__(self) -> None:
        self.head = _Entry(None)
        self.tail: AtomicReference[_Entry] = AtomicReference(self.head)

    def _settled_tail(self) -> _Entry:
        while True:
            tail = self.tail.get()
            if tail is _END:
                return tail
            nxt = tail.next.get()
            if nxt is None:
                return tail
            self.tail.compare_and_set(tail, nxt)

    def try_append(self, entry: _Entry) -> bool:
        tail = self._settled_tail()
        if tail is _END:
            return False
        if tail.next.compare_and_set(None, entry):
            self.tail.compare_and_set(tail, entry)
            return True
        return False

    def seal(self) -> None:
        while True:
            tail = self._settled_tail()
            if tail is _END:
                return
            if tail.next.compare_and_set(None, _END):
                self.tail.compare_and_set(tail, _END)
                return

    @property
    def sealed(self) -> bool:
        return self._settled_tail() is _END

    def items(self) -> list:
        out = []
        e = self.head.next.get()
        while e is not None and e is not _END:
            out.append(e.item)
            e = e.next.get()
        return out


class CollectorStats:
    """Counters shared by every collector a registry creates."""

    def __init__(self) -> None:
        self.snapshot_cas_failures = AtomicCounter()
        self.collectors_installed = AtomicCounter()

    def reset(self) -> None:
        self.snapshot_cas_failures = AtomicCounter()
        self.collectors_installed = AtomicCounter()


class SnapCollector:
    def __init__(self, n_threads: int, stats: Optional[CollectorStats] = None,
                 hook=None) -> None:
        self.active = True
        self.hook = hook
        self.snapshot_list = _LinkedLog()
        self.report_lists = [_LinkedLog() for _ in range(n_threads)]
        self.blocked_nodes = False
        self.blocked_reports = [False] * n_threads
        self.stats = stats if stats is not None else CollectorStats()

    @property
    def n_threads(self) -> int:
        return len(self.report_lists)

    def collected(self) -> list[NodeHandle]:
        return self.snapshot_list.items()

    def reports(self, thread_id: Optional[int] = None) -> list[Report]:
        if thread_id is not None:
            return self.report_lists[thread_id].items()
        out: list[Report] = []
        for lst in self.report_lists:
            out.extend(lst.items())
        return out

    def __repr__(self) -> str:
        state = "active" if self.active else "inactive"
        return f"<SnapCollector {state} at {id(self):#x}>"


class Registry:
    """Global collector slot plus dense thread ids for report-lists.

    Updater threads get ids ``0..max_threads-1``; a thread registers on
    first use and may hand its id back with :meth:`release` when it exits.
    """

    def __init__(self, max_threads: int = 32) -> None:
        if max_threads < 1:
            raise ValueError("max_threads must be positive")
        self.max_threads = max_threads
        self.slot: AtomicReference[Optional[SnapCollector]] = AtomicReference(None)
        self.stats = CollectorStats()
        self.tracer = None
        # called at shared-memory access points of iterators; lets a test
        # scheduler interleave threads deterministically
        self.hook = None
        self._local = threading.local()
        self._free = list(range(max_threads - 1, -1, -1))
        self._lock = threading.Lock()

    def register(self) -> int:
        tid = getattr(self._local, "tid", None)
        if tid is not None:
            return tid
        with self._lock:
            if not self._free:
                raise ContractViolation(
                    f"more than {self.max_threads} updater threads registered"
                )
            tid = self._free.pop()
        self._local.tid = tid
        return tid

    def release(self) -> None:
        tid = getattr(self._local, "tid", None)
        if tid is None:
            return
        self._local.tid = None
        with self._lock:
            self._free.append(tid)

    def thread_id(self) -> int:
        tid = getattr(self._local, "tid", None)
        return self.register() if tid is None else tid


def acquire_collector(registry: Registry) -> SnapCollector:
    """Return the active collector, installing a fresh one if there is none."""
    while True:
        current = registry.slot.get()
        if current is not None and current.active:
            return current
        fresh = SnapCollector(registry.max_threads, registry.stats, registry.hook)
        if registry.slot.compare_and_set(current, fresh):
            registry.stats.collectors_installed.increment()
            return fresh


def read_collector(registry: Registry) -> Optional[SnapCollector]:
    c = registry.slot.get()
    if c is not None and c.active:
        return c
    return None


def add_node(c: SnapCollector, node: NodeHandle, sorted_append: bool = False) -> bool:
    """Append ``node`` to the snapshot-list.

    Returns False once the collector is inactive or blocked.  With
    ``sorted_append`` the node is skipped (and True returned) when the last
    collected key is already >= its key, because some other iterator has
    traversed past it.
    """
    lst = c.snapshot_list
    entry = None
    while True:
        if not c.active:
            return False
        tail = lst._settled_tail()
        if tail is _END:
            return False
        if sorted_append and tail is not lst.head and tail.item.key >= node.key:
            return True
        if entry is None:
            entry = _Entry(node)
        if c.hook is not None:
            c.hook()
        if tail.next.compare_and_set(None, entry):
            lst.tail.compare_and_set(tail, entry)
            return True
        c.stats.snapshot_cas_failures.increment()


def report(c: SnapCollector, thread_id: int, r: Report) -> None:
    if not c.active or c.blocked_reports[thread_id]:
        return
    lst = c.report_lists[thread_id]
    entry = _Entry(r)
    # single writer: a failed append means the list was sealed
    while not lst.try_append(entry):
        if lst.sealed:
            return


def block_and_deactivate(c: SnapCollector) -> None:
    c.active = False
    c.snapshot_list.seal()
    c.blocked_nodes = True
    for t, lst in enumerate(c.report_lists):
        lst.seal()
        c.blocked_reports[t] = True


def merge_evidence(collected: bool, inserted: bool, deleted: bool) -> bool:
    return (collected or inserted) and not deleted


def reconstruct_snapshot(c: SnapCollector) -> tuple[int, ...]:
    """Merge the blocked snapshot-list with all reports into sorted keys."""
    if c.active or not c.blocked_nodes or not all(c.blocked_reports):
        raise ContractViolation("reconstruct_snapshot needs a blocked, inactive collector")
    nodes: dict[int, NodeHandle] = {}
    collected = set()
    for n in c.snapshot_list.items():
        nodes[n.identity] = n
        collected.add(n.identity)
    inserted = set()
    deleted = set()
    for lst in c.report_lists:
        for r in lst.items():
            nodes[r.node.identity] = r.node
            (inserted if r.kind is INSERT else deleted).add(r.node.identity)
    keep = sorted(
        (nodes[i].key, i)
        for i in nodes
        if merge_evidence(i in collected, i in inserted, i in deleted)
    )
    out: list[int] = []
    for key, _ in keep:
        if not out or out[-1] != key:
            out.append(key)
    return tuple(out)

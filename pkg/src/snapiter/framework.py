"""Set operations that report to the snap-collector, and Iterate.

Each operation is a retry loop around the backend's ``seek``,
``ds_insert`` and ``ds_delete``.  A delete is decided by whoever flips the
node's mark; every thread that finds a marked node reports the deletion and
helps unlink it before going on.
"""
from __future__ import annotations

from typing import Iterator, Optional

from snapiter.core import NodeHandle, SetAdapter, check_key
from snapiter.snapcollector import (
    DELETE,
    INSERT,
    Registry,
    Report,
    acquire_collector,
    add_node,
    block_and_deactivate,
    read_collector,
    reconstruct_snapshot,
    report,
)


def _trace(registry: Registry, event: str, **payload) -> None:
    tracer = registry.tracer
    if tracer is not None:
        tracer(event, **payload)


def report_delete(registry: Registry, n: NodeHandle) -> None:
    c = read_collector(registry)
    if c is not None:
        report(c, registry.thread_id(), Report(n, DELETE))
        _trace(registry, "report", node=n, kind="delete")


def try_report(registry: Registry, n: NodeHandle) -> None:
    c = read_collector(registry)
    if c is None:
        return
    # the mark is read after the collector
    kind = DELETE if n.marked else INSERT
    report(c, registry.thread_id(), Report(n, kind))
    _trace(registry, "report", node=n, kind=kind.value)


def insert(adapter: SetAdapter, registry: Registry, key: int) -> bool:
    check_key(key)
    while True:
        n = adapter.seek(key)
        if n is not None:
            if n.marked:
                report_delete(registry, n)
                adapter.ds_delete(n)
                continue
            try_report(registry, n)
            return False
        new = adapter.ds_insert(key)
        if new is not None:
            try_report(registry, new)
            return True


def delete(adapter: SetAdapter, registry: Registry, key: int) -> bool:
    check_key(key)
    while True:
        n = adapter.seek(key)
        if n is None:
            return False
        won = n.mark()
        if won:
            _trace(registry, "mark", node=n)
        report_delete(registry, n)
        adapter.ds_delete(n)
        if won:
            return True


def contains(adapter: SetAdapter, registry: Registry, key: int) -> bool:
    check_key(key)
    n = adapter.seek(key)
    if n is None:
        return False
    if n.marked:
        report_delete(registry, n)
        return False
    try_report(registry, n)
    return True


def iterate(
    adapter: SetAdapter, registry: Registry, sorted_append: Optional[bool] = None
) -> tuple[int, ...]:
    """Return a linearizable snapshot of the set as sorted keys.

    ``sorted_append`` defaults to the adapter's ``sorted_traversal`` flag and
    is ignored for adapters that do not traverse in key order.
    """
    sorted_append = adapter.sorted_traversal if sorted_append is None else (
        sorted_append and adapter.sorted_traversal
    )
    c = acquire_collector(registry)
    hook = registry.hook
    for n in adapter.sequential_cursor():
        if hook is not None:
            hook()
        if not c.active:
            break
        if n.marked:
            continue
        if add_node(c, n, sorted_append):
            _trace(registry, "collect", node=n)
    block_and_deactivate(c)
    _trace(registry, "deactivate", collector=id(c))
    return reconstruct_snapshot(c)


class ConcurrentSet:
    """A backend plus a collector registry, exposed as a set API."""

    def __init__(
        self,
        adapter: SetAdapter,
        registry: Optional[Registry] = None,
        sorted_append: Optional[bool] = None,
    ) -> None:
        self.adapter = adapter
        self.registry = registry if registry is not None else Registry()
        self.sorted_append = sorted_append

    def insert(self, key: int) -> bool:
        return insert(self.adapter, self.registry, key)

    def delete(self, key: int) -> bool:
        return delete(self.adapter, self.registry, key)

    def contains(self, key: int) -> bool:
        return contains(self.adapter, self.registry, key)

    __contains__ = contains

    def iterate(self) -> tuple[int, ...]:
        return iterate(self.adapter, self.registry, self.sorted_append)

    def __iter__(self) -> Iterator[int]:
        return iter(self.iterate())

    def __len__(self) -> int:
        return len(self.iterate())

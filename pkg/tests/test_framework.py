import threading

import pytest

from snapiter import ConcurrentSet, HashSet, NodeHandle, Registry, UBST, try_report
from snapiter.atomics import AtomicReference
from snapiter.snapcollector import DELETE, INSERT, Report, acquire_collector

BACKENDS = {"ubst": UBST, "hashset": HashSet}


@pytest.fixture
def s(structure):
    return ConcurrentSet(BACKENDS[structure](), Registry(8))


def test_insert_then_contains(s):
    assert s.insert(5)
    assert s.contains(5) and 5 in s


def test_insert_duplicate(s):
    s.insert(5)
    assert s.insert(5) is False


def test_insert_helps_remove_marked_node(s):
    s.insert(5)
    old = s.adapter.seek(5)
    old.mark()
    assert s.insert(5)
    new = s.adapter.seek(5)
    assert new.identity != old.identity and not new.marked
    assert s.adapter.audit() == [5]


def test_delete(s):
    s.insert(5)
    assert s.delete(5)
    assert not s.contains(5)
    assert s.delete(5) is False


def test_delete_on_empty(s):
    assert s.delete(5) is False


def test_delete_of_node_marked_by_someone_else_helps_then_reports_absent(s):
    s.insert(5)
    s.adapter.seek(5).mark()
    assert s.delete(5) is False
    assert s.adapter.audit() == []


def test_contains_empty(s):
    assert not s.contains(5)


def test_contains_marked_reports_delete(s):
    s.insert(5)
    n = s.adapter.seek(5)
    n.mark()
    c = acquire_collector(s.registry)
    assert s.contains(5) is False
    assert Report(n, DELETE) in c.reports()


def test_concurrent_delete_one_winner(s):
    for k in range(300):
        s.insert(k)
        out = []
        barrier = threading.Barrier(2)

        def deleter():
            barrier.wait()
            out.append(s.delete(k))
            s.registry.release()

        threads = [threading.Thread(target=deleter) for _ in range(2)]
        for t in threads:
            t.start()
        for t in threads:
            t.join()
        assert sorted(out) == [False, True]
    assert s.adapter.audit() == []


def test_try_report_without_collector():
    reg = Registry(2)
    try_report(reg, NodeHandle(1))
    assert reg.slot.get() is None


def test_try_report_inactive_collector():
    reg = Registry(2)
    c = acquire_collector(reg)
    c.active = False
    try_report(reg, NodeHandle(1))
    assert c.reports() == []


def test_try_report_unmarked_is_insert():
    reg = Registry(2)
    c = acquire_collector(reg)
    n = NodeHandle(1)
    try_report(reg, n)
    assert c.reports() == [Report(n, INSERT)]


class MarkOnRead(AtomicReference):
    """Collector slot that marks a node the first time it is read after
    being armed: a scripted delete landing between seek and try_report."""

    def __init__(self, value):
        super().__init__(value)
        self.victim = None

    def get(self):
        if self.victim is not None:
            self.victim.mark()
            self.victim = None
        return super().get()


def test_try_report_sees_mark_landing_after_seek(structure):
    s = ConcurrentSet(BACKENDS[structure](), Registry(2))
    s.insert(5)
    c = acquire_collector(s.registry)
    slot = MarkOnRead(c)
    s.registry.slot = slot
    n = s.adapter.seek(5)
    slot.victim = n
    # contains saw an unmarked node, then the mark landed before the report
    assert s.contains(5) is True
    assert c.reports() == [Report(n, DELETE)]


def test_insert_reports_new_node_to_active_collector(s):
    c = acquire_collector(s.registry)
    s.insert(3)
    n = s.adapter.seek(3)
    assert Report(n, INSERT) in c.reports()


def test_iterate_quiescent(s):
    assert s.iterate() == ()
    for k in (3, 1, 2):
        s.insert(k)
    assert s.iterate() == (1, 2, 3)
    assert list(s) == [1, 2, 3] and len(s) == 3


def test_iterate_deactivates_collector(s):
    s.insert(1)
    s.iterate()
    c = s.registry.slot.get()
    assert not c.active and c.blocked_nodes


def test_sorted_append_ignored_for_hash_traversal():
    s = ConcurrentSet(HashSet(), Registry(2), sorted_append=True)
    for k in (9, 1, 6, 3):
        s.insert(k)
    assert s.iterate() == (1, 3, 6, 9)


def test_concurrent_iterators_agree_when_quiescent(s):
    for k in range(200):
        s.insert(k)
    out = []

    def it():
        for _ in range(5):
            out.append(s.iterate())

    threads = [threading.Thread(target=it) for _ in range(3)]
    for t in threads:
        t.start()
    for t in threads:
        t.join()
    assert all(snap == tuple(range(200)) for snap in out)

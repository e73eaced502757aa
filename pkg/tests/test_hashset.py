import threading

import pytest

from snapiter import ConcurrentSet, HashSet, Registry
from snapiter.hashset import HASH_MULTIPLIER, AuditError, FSet, HNode, bucket_of, read_bucket


def brute_bucket(k, size):
    return ((k * HASH_MULTIPLIER) % 2**64) % size


def bucket_keys(t: HNode, i: int):
    return [n.key for n in read_bucket(t, i)]


@pytest.mark.parametrize("size", [1, 2, 4, 8, 64])
def test_bucket_of_matches_brute_force(size):
    for k in list(range(-50, 50)) + [2**63 - 1, -(2**63)]:
        assert bucket_of(k, size) == brute_bucket(k, size)


def test_multiplier_preserves_low_two_bits():
    assert all(bucket_of(k, 4) == k % 4 for k in range(100))


def test_hnode_requires_power_of_two():
    with pytest.raises(ValueError):
        HNode(6)


def test_init_bucket_split_on_grow():
    # oracle first: which of {1,5,9} land where in 4 buckets
    src = [1, 5, 9]
    assert all(brute_bucket(k, 2) == 1 for k in src)
    want = {i: [k for k in src if brute_bucket(k, 4) == i] for i in (1, 3)}
    assert want == {1: [1, 5, 9], 3: []}

    hs = HashSet.from_layout(4, src, pred_size=2)
    head = hs.head.get()
    pred = head.pred.get()
    assert head.buckets[1].get() is None
    got1 = hs.init_bucket(head, 1)
    got3 = hs.init_bucket(head, 3)
    assert [n.key for n in got1.nodes] == want[1]
    assert [n.key for n in got3.nodes] == want[3]
    assert pred.buckets[1].get().frozen
    # the same node handles move forward
    assert got1.nodes == pred.buckets[1].get().nodes


def test_init_bucket_merge_on_shrink():
    keys = list(range(16))
    hs = HashSet.from_layout(2, keys, pred_size=4)
    head = hs.head.get()
    for i in range(2):
        got = sorted(n.key for n in hs.init_bucket(head, i).nodes)
        assert got == sorted(k for k in keys if brute_bucket(k, 2) == i)


def test_init_bucket_already_initialized():
    hs = HashSet.from_layout(4, [1, 5], pred_size=2, initialized=[1])
    head = hs.head.get()
    pred = head.pred.get()
    before = head.buckets[1].get()
    pred_before = [b.get() for b in pred.buckets]
    assert hs.init_bucket(head, 1) is before
    assert [b.get() for b in pred.buckets] == pred_before


def test_init_bucket_race_installs_one_fset():
    for _ in range(200):
        hs = HashSet.from_layout(4, [1, 5, 9, 3], pred_size=2)
        head = hs.head.get()
        got = []
        barrier = threading.Barrier(3)

        def init():
            barrier.wait()
            got.append(hs.init_bucket(head, 1))

        ths = [threading.Thread(target=init) for _ in range(3)]
        for t in ths:
            t.start()
        for t in ths:
            t.join()
        assert all(f is head.buckets[1].get() for f in got)


def test_resize_installs_uninitialized_head():
    hs = HashSet(4)
    old = hs.head.get()
    assert hs.resize(True)
    new = hs.head.get()
    assert new.size == 8
    assert all(b.get() is None for b in new.buckets)
    assert new.pred.get() is old


def test_resize_race_one_winner():
    for _ in range(200):
        hs = HashSet(4)
        for k in range(10):
            hs.ds_insert(k)
        t0 = hs.head.get()
        wins = []
        barrier = threading.Barrier(3)

        def grow():
            barrier.wait()
            wins.append(hs.resize(True, expected=t0))

        ths = [threading.Thread(target=grow) for _ in range(3)]
        for t in ths:
            t.start()
        for t in ths:
            t.join()
        assert wins.count(True) == 1
        assert hs.head.get().size == 8


def test_contents_survive_grow_and_shrink():
    hs = HashSet(4)
    for k in range(40):
        hs.ds_insert(k)
    for grow in (True, True, False, False, False):
        hs.resize(grow)
        assert all(hs.seek(k).key == k for k in range(40))
        assert hs.audit() == list(range(40))


def test_insert_into_frozen_bucket_fails_until_resize_finishes():
    hs = HashSet(4)
    t = hs.head.get()
    i = bucket_of(5, 4)
    hs._freeze(t, i)
    assert hs.ds_insert(5) is None
    hs.resize(True)
    n = hs.ds_insert(5)
    assert n is not None
    new = hs.head.get()
    assert any(x is n for x in new.buckets[bucket_of(5, 8)].get().nodes)


def test_delete_then_bucket_empty():
    hs = HashSet(4)
    n = hs.ds_insert(5)
    n.mark()
    hs.ds_delete(n)
    assert hs.head.get().buckets[bucket_of(5, 4)].get().nodes == ()
    hs.ds_delete(n)  # already gone
    assert hs.audit() == []


def test_threshold_triggers_grow():
    hs = HashSet(1, threshold=3)
    for k in range(4):
        hs.ds_insert(k)
    assert hs.head.get().size == 2
    assert hs.audit() == [0, 1, 2, 3]


def test_cursor_reads_through_uninitialized_buckets():
    hs = HashSet.from_layout(8, list(range(20)), pred_size=4, initialized=[0])
    head = hs.head.get()
    assert sorted(n.key for n in hs.sequential_cursor()) == list(range(20))
    # the scan did not initialize anything
    assert sum(b.get() is None for b in head.buckets) == 7


def test_audit_rejects_misplaced_key():
    hs = HashSet(4)
    hs.ds_insert(1)
    t = hs.head.get()
    n = t.buckets[1].get().nodes[0]
    t.buckets[1].set(FSet(()))
    t.buckets[2].set(FSet((n,)))
    with pytest.raises(AuditError):
        hs.audit()


def test_concurrent_distinct_inserts():
    s = ConcurrentSet(HashSet(), Registry(8))
    per = 2500

    def ins(t):
        for k in range(t * per, (t + 1) * per):
            assert s.insert(k)
        s.registry.release()

    ths = [threading.Thread(target=ins, args=(t,)) for t in range(4)]
    for t in ths:
        t.start()
    for t in ths:
        t.join()
    assert s.adapter.audit() == list(range(4 * per))


def test_delete_racing_resize():
    for _ in range(50):
        s = ConcurrentSet(HashSet(4), Registry(4))
        for k in range(30):
            s.insert(k)

        def deleter():
            for k in range(0, 30, 2):
                assert s.delete(k)
            s.registry.release()

        def resizer():
            for grow in (True, False, True):
                s.adapter.resize(grow)

        ths = [threading.Thread(target=deleter), threading.Thread(target=resizer)]
        for t in ths:
            t.start()
        for t in ths:
            t.join()
        assert s.adapter.audit() == list(range(1, 30, 2))

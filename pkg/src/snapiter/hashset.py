"""Lock-free resizable hash set with freezable, copy-on-write buckets.

The set is a chain of versions (``HNode``).  Each bucket slot holds an
immutable ``FSet``: a tuple of node handles plus a ``frozen`` bit.  Every
change to a bucket, including freezing it, is one CAS on its slot, so an
update racing a freeze either lands before the freeze (and is copied
forward) or fails.

A resize installs a new head whose buckets are all empty slots; each slot is
filled lazily from the predecessor's frozen bucket(s) the first time an
update needs it.
"""
from __future__ import annotations

from typing import NamedTuple, Optional

from snapiter.atomics import AtomicReference
from snapiter.core import CursorBase, NodeHandle, check_key

HASH_MULTIPLIER = 0x9E3779B97F4A7C15
_MASK64 = (1 << 64) - 1


def bucket_of(key: int, size: int) -> int:
    return ((key * HASH_MULTIPLIER) & _MASK64) & (size - 1)


class AuditError(AssertionError):
    pass


class FSet(NamedTuple):
    nodes: tuple
    frozen: bool = False


_EMPTY = FSet(())


class HNode:
    __slots__ = ("size", "buckets", "pred")

    def __init__(self, size: int, pred: Optional["HNode"] = None, initialized: bool = False) -> None:
        if size < 1 or size & (size - 1):
            raise ValueError(f"bucket count must be a power of two, got {size}")
        self.size = size
        self.buckets = [AtomicReference(_EMPTY if initialized else None) for _ in range(size)]
        self.pred: AtomicReference[Optional[HNode]] = AtomicReference(pred)

    def __repr__(self) -> str:
        return f"<HNode size={self.size}>"


def read_bucket(t: HNode, i: int) -> tuple:
    """Nodes of bucket ``i`` of version ``t``, read through ``pred`` if the
    slot is still empty.  Never initializes anything."""
    while True:
        b = t.buckets[i].get()
        if b is not None:
            return b.nodes
        s = t.pred.get()
        if s is None:
            continue
        if t.size == s.size * 2:
            src = s.buckets[i % s.size].get()
            return tuple(n for n in src.nodes if bucket_of(n.key, t.size) == i)
        return s.buckets[i].get().nodes + s.buckets[i + t.size].get().nodes


class HashCursor(CursorBase):
    """Bucket-by-bucket scan of the head version seen at the first step."""

    __slots__ = ("_head", "t", "i", "nodes", "pos", "done", "_last")

    def __init__(self, head: AtomicReference) -> None:
        self._head = head
        self.t: Optional[HNode] = None
        self.i = -1
        self.nodes: tuple = ()
        self.pos = 0
        self.done = False
        self._last = None

    def step(self) -> Optional[NodeHandle]:
        if self.done:
            return None
        out = None
        if self.t is None:
            self.t = self._head.get()
            self._last = self.t
        elif self.pos < len(self.nodes):
            n = self.nodes[self.pos]
            self.pos += 1
            self._last = n
            if not n.marked:
                out = n
        else:
            self.i += 1
            self.nodes = read_bucket(self.t, self.i)
            self.pos = 0
            self._last = self.i
        self.done = self.i >= self.t.size - 1 and self.pos >= len(self.nodes)
        return out

    def clone(self) -> "HashCursor":
        c = HashCursor(self._head)
        c.t, c.i, c.nodes, c.pos, c.done, c._last = (
            self.t, self.i, self.nodes, self.pos, self.done, self._last)
        return c

    def describe(self) -> str:
        if self._last is None:
            return "start"
        if isinstance(self._last, HNode):
            return f"head(size={self._last.size})"
        if isinstance(self._last, int):
            return f"bucket({self._last})"
        return f"node({self._last.key})"


class HashSet:
    """Set adapter backed by the resizable hash set.

    ``threshold`` is the bucket length above which an insert triggers a
    grow.  The set never shrinks on its own; ``resize(grow=False)`` is
    available to callers.
    """

    sorted_traversal = False

    def __init__(self, initial_size: int = 4, threshold: int = 8) -> None:
        self.head: AtomicReference[HNode] = AtomicReference(HNode(initial_size, initialized=True))
        self.threshold = threshold
        self.frozen_log: Optional[list] = None

    def bucket_of(self, key: int, size: int) -> int:
        return bucket_of(key, size)

    # -- buckets --------------------------------------------------------

    def _freeze(self, t: HNode, j: int) -> FSet:
        cell = t.buckets[j]
        while True:
            f = cell.get()
            if f is None:
                self.init_bucket(t, j)
                continue
            if f.frozen:
                return f
            frozen = FSet(f.nodes, True)
            if cell.compare_and_set(f, frozen):
                if self.frozen_log is not None:
                    self.frozen_log.append((cell, frozen))
                return frozen

    def init_bucket(self, t: HNode, i: int) -> FSet:
        cell = t.buckets[i]
        b = cell.get()
        if b is not None:
            return b
        s = t.pred.get()
        if s is None:
            # pred is cleared only after every bucket is filled
            return cell.get()
        if t.size == s.size * 2:
            src = self._freeze(s, i % s.size)
            nodes = tuple(n for n in src.nodes if bucket_of(n.key, t.size) == i)
        else:
            nodes = self._freeze(s, i).nodes + self._freeze(s, i + t.size).nodes
        cell.compare_and_set(None, FSet(nodes))
        return cell.get()

    def install_step(self, t: HNode, i: int) -> bool:
        """The install CAS of ``init_bucket`` alone; sources must be frozen."""
        s = t.pred.get()
        if t.buckets[i].get() is not None or s is None:
            return False
        if t.size == s.size * 2:
            src = s.buckets[i % s.size].get()
            if not src.frozen:
                return False
            nodes = tuple(n for n in src.nodes if bucket_of(n.key, t.size) == i)
        else:
            a, b = s.buckets[i].get(), s.buckets[i + t.size].get()
            if not (a.frozen and b.frozen):
                return False
            nodes = a.nodes + b.nodes
        return t.buckets[i].compare_and_set(None, FSet(nodes))

    def freeze_step(self, t: HNode, j: int) -> bool:
        f = t.buckets[j].get()
        if f is None or f.frozen:
            return False
        self._freeze(t, j)
        return True

    # -- set adapter ----------------------------------------------------

    def seek(self, key: int) -> Optional[NodeHandle]:
        t = self.head.get()
        for n in read_bucket(t, bucket_of(key, t.size)):
            if n.key == key:
                return n
        return None

    def ds_insert(self, key: int) -> Optional[NodeHandle]:
        check_key(key)
        t = self.head.get()
        i = bucket_of(key, t.size)
        b = self.init_bucket(t, i)
        if b.frozen:
            return None
        for n in b.nodes:
            if n.key == key:
                return None
        node = NodeHandle(key)
        if not t.buckets[i].compare_and_set(b, FSet(b.nodes + (node,))):
            return None
        if len(b.nodes) + 1 > self.threshold:
            self.resize(True, expected=t)
        return node

    def ds_delete(self, node: NodeHandle) -> None:
        while True:
            t = self.head.get()
            i = bucket_of(node.key, t.size)
            b = self.init_bucket(t, i)
            if not any(n is node for n in b.nodes):
                return
            if b.frozen:
                continue
            rest = tuple(n for n in b.nodes if n is not node)
            if t.buckets[i].compare_and_set(b, FSet(rest)):
                return

    def resize(self, grow: bool, expected: Optional[HNode] = None) -> bool:
        """Install a new head of twice (or half) the size; True if this call
        swung the head."""
        t = self.head.get()
        if expected is not None and t is not expected:
            return False
        if not grow and t.size == 1:
            return False
        for i in range(t.size):
            self.init_bucket(t, i)
        if t.pred.get() is not None:
            t.pred.set(None)
        new = HNode(t.size * 2 if grow else t.size // 2, pred=t)
        return self.head.compare_and_set(t, new)

    def sequential_cursor(self) -> HashCursor:
        return HashCursor(self.head)

    # -- inspection -----------------------------------------------------

    def nodes(self) -> list[NodeHandle]:
        t = self.head.get()
        out: list[NodeHandle] = []
        for i in range(t.size):
            out.extend(read_bucket(t, i))
        return out

    def keys(self) -> list[int]:
        return sorted(n.key for n in self.nodes() if not n.marked)

    def audit(self) -> list[int]:
        """Check a quiescent set; return its keys sorted."""
        t = self.head.get()
        seen: dict[int, NodeHandle] = {}
        uninitialized = 0
        for i in range(t.size):
            b = t.buckets[i].get()
            if b is None:
                uninitialized += 1
            elif b.frozen:
                raise AuditError(f"head bucket {i} is frozen")
            for n in read_bucket(t, i):
                if bucket_of(n.key, t.size) != i:
                    raise AuditError(f"key {n.key} sits in bucket {i} of {t.size}")
                if n.key in seen:
                    raise AuditError(f"key {n.key} present twice")
                if n.marked:
                    raise AuditError(f"marked node {n.key} still reachable")
                seen[n.key] = n
        s = t.pred.get()
        if s is not None:
            if s.pred.get() is not None:
                raise AuditError("predecessor chain longer than one")
            if s.size not in (t.size * 2, t.size // 2):
                raise AuditError(f"pred size {s.size} does not match head {t.size}")
        elif uninitialized:
            raise AuditError("uninitialized buckets but no predecessor")
        if self.frozen_log is not None:
            for cell, fset in self.frozen_log:
                if cell.get() is not fset:
                    raise AuditError("a frozen bucket changed")
        return sorted(seen)

    @classmethod
    def from_layout(
        cls,
        size: int,
        keys,
        pred_size: Optional[int] = None,
        initialized=(),
        freeze=(),
        threshold: int = 8,
    ) -> "HashSet":
        """Build a (possibly mid-resize) set directly, single-threaded.

        Without ``pred_size`` the head holds ``keys``.  With it, a fully
        initialized predecessor of ``pred_size`` buckets holds the keys and
        the head starts empty; then head buckets in ``initialized`` are
        filled (freezing their sources) and pred buckets in ``freeze`` are
        frozen.  Within a bucket nodes keep the order of ``keys``.
        """
        hs = cls(size if pred_size is None else pred_size, threshold)
        base = hs.head.get()
        for k in keys:
            i = bucket_of(k, base.size)
            b = base.buckets[i].get()
            base.buckets[i].set(FSet(b.nodes + (NodeHandle(k),)))
        if pred_size is None:
            return hs
        head = HNode(size, pred=base)
        hs.head.set(head)
        for i in initialized:
            hs.init_bucket(head, i)
        for j in freeze:
            hs._freeze(base, j)
        return hs

"""Lock-free unbalanced external BST with flagged/tagged edges.

Keys live in leaves; internal nodes only route.  An edge is one atomic cell
holding an immutable ``Edge(child, flag, tag)`` triple.  A flagged edge
means its child leaf is being removed; a tagged edge means its parent
internal node is being removed.  Flagged or tagged edges never change
again.

Two sentinel levels sit above the real tree (keys above the int64 range),
so a seek always has an ancestor, successor and parent::

            R(inf2)
           /      \\
        S(inf1)   inf2
        /     \\
     [tree]   inf1          [tree] is initially the leaf inf0
"""
from __future__ import annotations

from typing import NamedTuple, Optional, Union

from snapiter.atomics import AtomicReference
from snapiter.core import INT64_MAX, CursorBase, NodeHandle, check_key

INF0 = INT64_MAX + 1
INF1 = INT64_MAX + 2
INF2 = INT64_MAX + 3


class AuditError(AssertionError):
    pass


class Edge(NamedTuple):
    child: "TreeNode"
    flag: bool = False
    tag: bool = False


class Leaf:
    __slots__ = ("node",)

    def __init__(self, node: NodeHandle) -> None:
        self.node = node

    @property
    def key(self) -> int:
        return self.node.key

    def __repr__(self) -> str:
        return f"Leaf({self.node!r})"


class Internal:
    __slots__ = ("key", "left", "right")

    def __init__(self, key: int, left: "TreeNode", right: "TreeNode") -> None:
        self.key = key
        self.left: AtomicReference[Edge] = AtomicReference(Edge(left))
        self.right: AtomicReference[Edge] = AtomicReference(Edge(right))

    def child_cell(self, key: int) -> AtomicReference[Edge]:
        return self.left if key < self.key else self.right

    def __repr__(self) -> str:
        return f"Internal({self.key})"


TreeNode = Union[Leaf, Internal]


class SeekRecord(NamedTuple):
    ancestor: Internal
    successor: Internal
    parent: Internal
    leaf: Leaf


def _sentinel_leaf(key: int) -> Leaf:
    return Leaf(NodeHandle(key))


def _is_real(leaf: Leaf) -> bool:
    return leaf.node.key <= INT64_MAX


class TreeCursor(CursorBase):
    """In-order DFS over leaves that reads each edge only when descending it.

    The stack holds edge *cells*, not children, so an internal node's
    outgoing edges are read when the traversal actually goes down them.
    """

    __slots__ = ("stack", "at", "done")

    def __init__(self, stack: list, at=None) -> None:
        self.stack = stack
        self.at = at
        self.done = not stack

    def step(self) -> Optional[NodeHandle]:
        if self.done:
            return None
        stack = self.stack
        child = stack.pop().get().child
        self.at = child
        if child.__class__ is Internal:
            stack.append(child.right)
            stack.append(child.left)
            return None
        self.done = not stack
        node = child.node
        if node.key <= INT64_MAX and not node._marked:
            return node
        return None

    def clone(self) -> "TreeCursor":
        c = TreeCursor(list(self.stack), self.at)
        c.done = self.done
        return c

    def describe(self) -> str:
        if self.at is None:
            return "start"
        if isinstance(self.at, Internal):
            return f"internal(routing={self.at.key})"
        return f"leaf({self.at.key})"


class UBST:
    """Set adapter backed by the external BST."""

    sorted_traversal = True

    def __init__(self) -> None:
        self.S = Internal(INF1, _sentinel_leaf(INF0), _sentinel_leaf(INF1))
        self.root = Internal(INF2, self.S, _sentinel_leaf(INF2))
        # (cell, edge) recorded when a flag or tag lands, for audits
        self.frozen_edges: Optional[list] = None

    # -- search ---------------------------------------------------------

    def ds_seek(self, key: int) -> SeekRecord:
        ancestor = self.root
        successor = parent = self.S
        pe = self.S.left.get()
        leaf = pe.child
        while leaf.__class__ is Internal:
            ce = (leaf.left if key < leaf.key else leaf.right).get()
            if not pe.tag:
                ancestor, successor = parent, leaf
            parent, leaf, pe = leaf, ce.child, ce
        return SeekRecord(ancestor, successor, parent, leaf)

    def seek(self, key: int) -> Optional[NodeHandle]:
        leaf = self.ds_seek(key).leaf
        return leaf.node if leaf.key == key else None

    # -- updates --------------------------------------------------------

    def ds_insert(self, key: int) -> Optional[NodeHandle]:
        check_key(key)
        rec = self.ds_seek(key)
        leaf = rec.leaf
        if leaf.key == key:
            return None
        cell = rec.parent.child_cell(key)
        e = cell.get()
        if e.child is leaf and not e.flag and not e.tag:
            node = NodeHandle(key)
            new_leaf = Leaf(node)
            if key < leaf.key:
                internal = Internal(leaf.key, new_leaf, leaf)
            else:
                internal = Internal(key, leaf, new_leaf)
            if cell.compare_and_set(e, Edge(internal)):
                return node
            e = cell.get()
        if e.child is leaf and (e.flag or e.tag):
            self.cleanup(key, rec)
        return None

    def ds_delete(self, node: NodeHandle) -> None:
        key = node.key
        while True:
            rec = self.ds_seek(key)
            if rec.leaf.node is not node:
                return
            cell = rec.parent.child_cell(key)
            e = cell.get()
            if e.child is not rec.leaf:
                continue
            if not e.flag and not e.tag and not self._flag(cell, e):
                continue
            self.cleanup(key, rec)

    def _flag(self, cell: AtomicReference, e: Edge) -> bool:
        flagged = Edge(e.child, True, False)
        if cell.compare_and_set(e, flagged):
            if self.frozen_edges is not None:
                self.frozen_edges.append((cell, flagged))
            return True
        return False

    def _survivor_cell(self, key: int, rec: SeekRecord) -> Optional[AtomicReference]:
        """The parent's edge that leads to the node that stays, or None."""
        parent = rec.parent
        if key < parent.key:
            child, sibling = parent.left, parent.right
        else:
            child, sibling = parent.right, parent.left
        if child.get().flag:
            return sibling
        if sibling.get().flag:
            return child
        return None

    def _tag(self, cell: AtomicReference) -> None:
        while True:
            e = cell.get()
            if e.flag or e.tag:
                return
            tagged = Edge(e.child, False, True)
            if cell.compare_and_set(e, tagged):
                if self.frozen_edges is not None:
                    self.frozen_edges.append((cell, tagged))
                return

    def _swing(self, key: int, rec: SeekRecord, survivor: AtomicReference) -> bool:
        cell = rec.ancestor.child_cell(key)
        e = cell.get()
        if e.child is not rec.successor or e.flag or e.tag:
            return False
        s = survivor.get()
        return cell.compare_and_set(e, Edge(s.child, s.flag, False))

    def cleanup(self, key: int, rec: SeekRecord) -> bool:
        """Unlink the flagged leaf under ``rec.parent`` and the tagged path
        from ``rec.successor`` down to it with one CAS on the ancestor."""
        survivor = self._survivor_cell(key, rec)
        if survivor is None:
            return False
        self._tag(survivor)
        return self._swing(key, rec, survivor)

    # single atomic steps, used by the local-consistency stepper

    def flag_step(self, node: NodeHandle) -> bool:
        rec = self.ds_seek(node.key)
        if rec.leaf.node is not node:
            return False
        cell = rec.parent.child_cell(node.key)
        e = cell.get()
        return e.child is rec.leaf and not e.flag and not e.tag and self._flag(cell, e)

    def tag_step(self, node: NodeHandle) -> bool:
        rec = self.ds_seek(node.key)
        if rec.leaf.node is not node:
            return False
        survivor = self._survivor_cell(node.key, rec)
        if survivor is None:
            return False
        e = survivor.get()
        if e.flag or e.tag:
            return False
        self._tag(survivor)
        return True

    def swing_step(self, node: NodeHandle) -> bool:
        rec = self.ds_seek(node.key)
        if rec.leaf.node is not node:
            return False
        survivor = self._survivor_cell(node.key, rec)
        if survivor is None:
            return False
        s = survivor.get()
        if not (s.flag or s.tag):
            return False
        return self._swing(node.key, rec, survivor)

    # -- traversal ------------------------------------------------------

    def sequential_cursor(self) -> TreeCursor:
        return TreeCursor([self.S.left])

    def leaves(self) -> list[Leaf]:
        out: list[Leaf] = []
        stack = [self.S.left.get().child]
        while stack:
            n = stack.pop()
            if isinstance(n, Internal):
                stack.append(n.right.get().child)
                stack.append(n.left.get().child)
            elif _is_real(n):
                out.append(n)
        return out

    def keys(self) -> list[int]:
        return [leaf.key for leaf in self.leaves() if not leaf.node.marked]

    def audit(self) -> list[int]:
        """Check a quiescent tree; return its keys in order."""
        if self.root.left.get().child is not self.S:
            raise AuditError("root sentinel lost its left child")
        if not isinstance(self.root.right.get().child, Leaf):
            raise AuditError("root sentinel right child is not a leaf")
        if self.S.right.get().child.key != INF1:
            raise AuditError("inf1 sentinel leaf moved")
        keys: list[int] = []

        def walk(n: TreeNode, lo: float, hi: float) -> None:
            if isinstance(n, Leaf):
                if not lo <= n.key < hi:
                    raise AuditError(f"leaf {n.key} outside routing range [{lo}, {hi})")
                if _is_real(n):
                    if n.node.marked:
                        raise AuditError(f"marked leaf {n.key} still reachable")
                    keys.append(n.key)
                return
            for cell in (n.left, n.right):
                e = cell.get()
                if e.flag or e.tag:
                    raise AuditError(f"pending flag/tag under internal {n.key}")
                if e.child is None:
                    raise AuditError(f"internal {n.key} missing a child")
            walk(n.left.get().child, lo, n.key)
            walk(n.right.get().child, n.key, hi)

        walk(self.S.left.get().child, float("-inf"), INF1)
        if keys != sorted(set(keys)):
            raise AuditError(f"leaf keys not strictly increasing: {keys}")
        if self.frozen_edges is not None:
            for cell, edge in self.frozen_edges:
                if cell.get() is not edge:
                    raise AuditError(f"frozen edge changed: {edge} -> {cell.get()}")
        return keys

    # -- construction helpers ------------------------------------------

    @classmethod
    def from_shape(cls, shape, keys) -> "UBST":
        """Build a tree directly from a shape.

        ``shape`` is ``None`` for a leaf or ``(left, right)`` for an internal
        node and must have ``len(keys) + 1`` leaves; keys go to the leaves in
        order and the rightmost leaf is the inf0 sentinel.  Routing keys are
        the minimum key of the right subtree.
        """
        keys = sorted(keys)
        tree = cls()
        leaves = iter([Leaf(NodeHandle(k)) for k in keys] + [tree.S.left.get().child])

        def build(s):
            if s is None:
                leaf = next(leaves, None)
                if leaf is None:
                    raise ValueError("shape has more leaves than keys + 1")
                return leaf, leaf.key
            left, lo = build(s[0])
            right, rmin = build(s[1])
            return Internal(rmin, left, right), lo

        node, _ = build(shape)
        rest = list(leaves)
        if rest:
            raise ValueError("shape has fewer leaves than keys + 1")
        tree.S.left = AtomicReference(Edge(node))
        return tree

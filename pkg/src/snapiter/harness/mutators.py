"""Shipped mutators of both backends and their exhaustive enumeration.

Every atomic step a set operation can take on a quiescent structure is
offered to :func:`check_local_consistency` on every structure within the
bound.  For the tree that is every external BST shape with up to ``bound``
keys, with deletions parked at each intermediate stage (marked, flagged,
tagged) and chains of pending deletions so cleanup meets tagged paths.
For the hash set it is every bucket count up to ``bound`` with stable and
mid-resize layouts and every subset of initialized buckets.

``rotation_step`` is not shipped: it rotates in place and is the kind of
step that breaks local consistency.
"""
from __future__ import annotations

import itertools
from dataclasses import dataclass, field
from functools import lru_cache
from typing import Callable, Iterator, Optional

from snapiter.atomics import AtomicReference
from snapiter.core import NodeHandle
from snapiter.hashset import FSet, HashSet, bucket_of
from snapiter.harness.views import LocalVerdict, MutatorStep, check_local_consistency
from snapiter.ubst import UBST, Edge, Internal, Leaf


# -- tree mutators ------------------------------------------------------

def _leaf_node(tree: UBST, key: int) -> Optional[NodeHandle]:
    rec = tree.ds_seek(key)
    return rec.leaf.node if rec.leaf.key == key else None


def ubst_insert_step(key: int) -> MutatorStep:
    def apply(tree):
        n = tree.ds_insert(key)
        return None if n is None else [n.identity]
    return MutatorStep(f"ubst.insert-cas({key})", apply)


def _ubst_node_step(kind: str, key: int, fn: Callable[[UBST, NodeHandle], bool],
                    owns: bool = False) -> MutatorStep:
    def apply(tree):
        n = _leaf_node(tree, key)
        if n is None or not fn(tree, n):
            return None
        return [n.identity] if owns else []
    return MutatorStep(f"ubst.{kind}({key})", apply)


# Only marking may take a node out of a view, so it is the only tree step
# whose change set is non-empty.  Flag, tag and cleanup act on nodes that
# are already marked and are checked against an empty change set.

def ubst_mark_step(key: int) -> MutatorStep:
    return _ubst_node_step("mark", key, lambda t, n: n.mark(), owns=True)


def ubst_flag_step(key: int) -> MutatorStep:
    return _ubst_node_step("flag", key, lambda t, n: n.marked and t.flag_step(n))


def ubst_tag_step(key: int) -> MutatorStep:
    return _ubst_node_step("tag", key, lambda t, n: t.tag_step(n))


def ubst_cleanup_step(key: int) -> MutatorStep:
    return _ubst_node_step("cleanup-cas", key, lambda t, n: t.swing_step(n))


def _parent_cell(tree: UBST, target: Internal) -> Optional[AtomicReference]:
    stack = [tree.S.left]
    while stack:
        cell = stack.pop()
        child = cell.get().child
        if child is target:
            return cell
        if isinstance(child, Internal):
            stack.extend((child.left, child.right))
    return None


def rotation_step(routing_key: int) -> MutatorStep:
    """Right rotation at the internal node with ``routing_key``, in place.

    Not an operation of either backend: it rewires three edges as one step
    and leaves no path from the rotated node to its old left-left subtree.
    """
    def apply(tree):
        x = None
        stack = [tree.S.left.get().child]
        while stack:
            n = stack.pop()
            if isinstance(n, Internal):
                if n.key == routing_key:
                    x = n
                    break
                stack.extend((n.left.get().child, n.right.get().child))
        if x is None or not isinstance(x.left.get().child, Internal):
            return None
        cell = _parent_cell(tree, x)
        left = x.left.get().child
        x.left.set(Edge(left.right.get().child))
        left.right.set(Edge(x))
        cell.set(Edge(left))
        return []
    return MutatorStep(f"rotate-right({routing_key})", apply, frozenset(), shipped=False)


@lru_cache(maxsize=None)
def shapes(n_leaves: int) -> tuple:
    """All full binary tree shapes with ``n_leaves`` leaves."""
    if n_leaves == 1:
        return (None,)
    out = []
    for k in range(1, n_leaves):
        for left in shapes(k):
            for right in shapes(n_leaves - k):
                out.append((left, right))
    return tuple(out)


def _survivor_keys(tree: UBST, key: int) -> list[int]:
    """Real keys below the edge that survives deleting ``key``."""
    rec = tree.ds_seek(key)
    cell = tree._survivor_cell(key, rec)
    if cell is None:
        return []
    out = []
    stack = [cell.get().child]
    while stack:
        n = stack.pop()
        if isinstance(n, Internal):
            stack.extend((n.left.get().child, n.right.get().child))
        elif n.key < 2**63:
            out.append(n.key)
    return out


def _park_deletion(tree: UBST, key: int, stage: int) -> bool:
    """Run the first ``stage`` steps (mark, flag, tag) of deleting ``key``."""
    n = _leaf_node(tree, key)
    if n is None:
        return False
    steps = [n.mark, lambda: tree.flag_step(n), lambda: tree.tag_step(n)]
    return all(s() for s in steps[:stage])


@dataclass
class Scenario:
    label: str
    build: Callable[[], object]
    steps: list = field(default_factory=list)


def default_chain_depth(n_keys: int) -> int:
    """Longest chain of parked deletions explored for trees of ``n_keys``."""
    if n_keys <= 5:
        return 3
    if n_keys <= 7:
        return 2
    return 1


def ubst_scenarios(bound: int, chain_depth: Optional[int] = None) -> Iterator[Scenario]:
    for n in range(0, bound + 1):
        depth = default_chain_depth(n) if chain_depth is None else chain_depth
        keys = [2 * i for i in range(n)]
        for shape in shapes(n + 1):
            def base(shape=shape, keys=keys):
                return UBST.from_shape(shape, keys)

            steps = [ubst_insert_step(g) for g in range(-1, 2 * n + 1, 2)]
            steps += [ubst_mark_step(k) for k in keys]
            yield Scenario(f"shape={shape}", base, steps)

            chains = [[k] for k in keys]
            while chains:
                chain = chains.pop()
                *parked, last = chain

                def build_stage(stage, shape=shape, keys=keys, parked=tuple(parked), last=last):
                    t = UBST.from_shape(shape, keys)
                    for k in parked:
                        if not _park_deletion(t, k, 3):
                            return None
                    if not _park_deletion(t, last, stage):
                        return None
                    return t

                for stage, step in ((1, ubst_flag_step(last)), (2, ubst_tag_step(last)),
                                    (3, ubst_cleanup_step(last))):
                    yield Scenario(f"shape={shape} pending={chain} stage={stage}",
                                   lambda b=build_stage, s=stage: b(s), [step])
                if len(chain) < depth:
                    t = build_stage(3)
                    if t is not None:
                        for k in _survivor_keys(t, last):
                            chains.append(chain + [k])


# -- hash set mutators --------------------------------------------------

def hs_insert_step(key: int) -> MutatorStep:
    def apply(hs):
        t = hs.head.get()
        if t.buckets[bucket_of(key, t.size)].get() is None:
            return None  # would fill the bucket first: a different step
        n = hs.ds_insert(key)
        return None if n is None else [n.identity]
    return MutatorStep(f"hs.insert-cas({key})", apply)


def _hs_node(hs: HashSet, key: int) -> Optional[NodeHandle]:
    return hs.seek(key)


def hs_mark_step(key: int) -> MutatorStep:
    def apply(h):
        n = _hs_node(h, key)
        return [n.identity] if n is not None and n.mark() else None
    return MutatorStep(f"hs.mark({key})", apply)


def hs_delete_step(key: int) -> MutatorStep:
    """Bucket CAS dropping an already marked node; change set is empty
    because the node has already left every view."""
    def apply(h):
        n = _hs_node(h, key)
        if n is None or not n.marked:
            return None
        t = h.head.get()
        i = bucket_of(key, t.size)
        b = t.buckets[i].get()
        if b is None or b.frozen:
            return None
        rest = tuple(x for x in b.nodes if x is not n)
        return [] if t.buckets[i].compare_and_set(b, FSet(rest)) else None
    return MutatorStep(f"hs.delete-cas({key})", apply)


def hs_freeze_step(j: int) -> MutatorStep:
    def apply(h):
        s = h.head.get().pred.get()
        return [] if s is not None and h.freeze_step(s, j) else None
    return MutatorStep(f"hs.freeze(pred[{j}])", apply)


def hs_install_step(i: int) -> MutatorStep:
    def apply(h):
        return [] if h.install_step(h.head.get(), i) else None
    return MutatorStep(f"hs.init-bucket-cas({i})", apply)


def hs_clear_pred_step() -> MutatorStep:
    def apply(h):
        t = h.head.get()
        if t.pred.get() is None or any(b.get() is None for b in t.buckets):
            return None
        t.pred.set(None)
        return []
    return MutatorStep("hs.clear-pred", apply)


def hs_head_swing_step(grow: bool) -> MutatorStep:
    def apply(h):
        t = h.head.get()
        if t.pred.get() is not None or any(b.get() is None for b in t.buckets):
            return None
        return [] if h.resize(grow) else None
    return MutatorStep(f"hs.head-swing({'grow' if grow else 'shrink'})", apply)


def _sizes(bound: int) -> list[int]:
    out, s = [], 1
    while s <= bound:
        out.append(s)
        s *= 2
    return out


def hs_key_sets(max_keys: int) -> list[tuple]:
    sets = [tuple(range(m)) for m in (0, 1, 2, 3, 5, 8, 12) if m <= max_keys]
    # one crowded bucket at every size: multiples of 8 share their low bits
    sets.append(tuple(8 * i for i in range(min(6, max_keys))))
    sets.append(tuple(range(max_keys - 1, -1, -1)))
    return sets


def hs_scenarios(bound: int, max_keys: int = 12) -> Iterator[Scenario]:
    sizes = _sizes(bound)
    big = 10**6  # no automatic resize inside a single step
    key_sets = hs_key_sets(max_keys)
    for size in sizes:
        for keys in key_sets:
            def base(size=size, keys=keys):
                return HashSet.from_layout(size, keys, threshold=big)

            absent = [k for k in range(max_keys + 4) if k not in keys][:6]
            steps = [hs_insert_step(k) for k in absent]
            steps += [hs_mark_step(k) for k in keys]
            steps += [hs_head_swing_step(True)]
            if size > 1:
                steps.append(hs_head_swing_step(False))
            yield Scenario(f"size={size} keys={keys}", base, steps)

            for k in keys:
                def marked(size=size, keys=keys, k=k):
                    h = HashSet.from_layout(size, keys, threshold=big)
                    h.seek(k).mark()
                    return h
                yield Scenario(f"size={size} keys={keys} marked={k}", marked,
                               [hs_delete_step(k)])

    pairs = [(2 * s, s) for s in sizes if 2 * s <= bound] + [(s // 2, s) for s in sizes if s > 1]
    for head_size, pred_size in pairs:
        for keys in key_sets[-3:]:
            absent = [k for k in range(max_keys + 4) if k not in keys][:4]
            for r in range(head_size + 1):
                for init in itertools.combinations(range(head_size), r):
                    def layout(head_size=head_size, pred_size=pred_size, keys=keys,
                               init=init, freeze=()):
                        return HashSet.from_layout(head_size, keys, pred_size=pred_size,
                                                   initialized=init, freeze=freeze,
                                                   threshold=big)

                    label = f"head={head_size} pred={pred_size} keys={keys} init={init}"
                    steps = [hs_freeze_step(j) for j in range(pred_size)]
                    steps += [hs_insert_step(k) for k in absent]
                    steps.append(hs_clear_pred_step())
                    yield Scenario(label, layout, steps)

                    for i in range(head_size):
                        if i in init:
                            continue
                        if head_size > pred_size:
                            src = (i % pred_size,)
                        else:
                            src = (i, i + head_size)
                        yield Scenario(
                            label + f" frozen={src}",
                            lambda layout=layout, src=src: layout(freeze=src),
                            [hs_install_step(i)],
                        )


# -- driver -------------------------------------------------------------

@dataclass
class LocalReport:
    structure: str
    structures: int = 0
    checked: int = 0
    skipped: int = 0
    failures: list = field(default_factory=list)
    multi_write: list = field(default_factory=list)

    @property
    def ok(self) -> bool:
        return not self.failures and not self.multi_write


def check_scenarios(name: str, scenarios) -> LocalReport:
    rep = LocalReport(name)
    for sc in scenarios:
        structure = sc.build()
        if structure is None:
            continue
        rep.structures += 1
        for step in sc.steps:
            v: LocalVerdict = check_local_consistency(structure, step)
            if v.ok is None:
                rep.skipped += 1
                continue
            rep.checked += 1
            if not v.ok:
                rep.failures.append((sc.label, v))
            elif step.shipped and v.writes != 1:
                rep.multi_write.append((sc.label, step.name, v.writes))
    return rep


def check_local(structure: str, bound: int) -> LocalReport:
    if structure == "ubst":
        return check_scenarios("ubst", ubst_scenarios(bound))
    if structure == "hashset":
        return check_scenarios("hashset", hs_scenarios(bound))
    raise ValueError(f"unknown structure {structure!r}")


def rotation_demo_tree() -> UBST:
    """Root routing 6 whose left child routes {1,2 | 3,4}."""
    shape = (((None, None), (None, None)), ((None, None), None))
    return UBST.from_shape(shape, [1, 2, 3, 4, 6, 8])

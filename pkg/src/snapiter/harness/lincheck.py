"""Linearizability checking for small set histories.

A history is a list of events ``{thread, op, phase, value, seq}`` with
``phase`` one of ``invoke``, ``respond`` or ``internal``.  Invocations carry
the key (``None`` for iterate); responses carry the boolean result or the
snapshot's key list.  Internal events (mark, report, collect, deactivate)
are checked for well-formedness and otherwise ignored: the verdict is
whether some total order of the operations respects real-time precedence
and the sequential semantics of a set with a snapshot operation.
"""
from __future__ import annotations

import itertools
import json
import random
import sys
import threading
from dataclasses import dataclass, field
from typing import Iterable, Optional

from snapiter.core import ContractViolation
from snapiter.harness.workload import make_set

OPS = ("insert", "delete", "contains", "iterate")


@dataclass
class Event:
    thread: int
    op: str
    phase: str
    value: object
    seq: int

    def to_dict(self) -> dict:
        return {"thread": self.thread, "op": self.op, "phase": self.phase,
                "value": self.value, "seq": self.seq}


@dataclass
class History:
    events: list
    initial: tuple = ()

    def to_json(self, expected: Optional[bool] = None) -> str:
        d = {"initial": sorted(self.initial), "events": [e.to_dict() for e in self.events]}
        if expected is not None:
            d["expected"] = expected
        return json.dumps(d)

    @classmethod
    def from_dict(cls, d: dict) -> "History":
        events = [Event(e["thread"], e["op"], e["phase"], e.get("value"), e["seq"])
                  for e in d["events"]]
        return cls(events, tuple(d.get("initial", ())))


@dataclass(frozen=True)
class Operation:
    thread: int
    op: str
    arg: Optional[int]
    result: object
    invoked: int
    responded: int


def operations(h: History) -> list[Operation]:
    """Pair invocations with responses; raise ContractViolation if malformed."""
    open_ops: dict[int, Event] = {}
    out: list[Operation] = []
    seqs = set()
    for e in sorted(h.events, key=lambda e: e.seq):
        if e.seq in seqs:
            raise ContractViolation(f"duplicate sequence number {e.seq}")
        seqs.add(e.seq)
        if e.phase == "invoke":
            if e.op not in OPS:
                raise ContractViolation(f"unknown operation {e.op!r}")
            if e.thread in open_ops:
                raise ContractViolation(f"thread {e.thread} invoked {e.op} with an operation open")
            open_ops[e.thread] = e
        elif e.phase == "respond":
            inv = open_ops.pop(e.thread, None)
            if inv is None or inv.op != e.op:
                raise ContractViolation(f"response to {e.op} on thread {e.thread} without invocation")
            result = tuple(sorted(e.value)) if e.op == "iterate" else bool(e.value)
            out.append(Operation(e.thread, e.op, inv.value, result, inv.seq, e.seq))
        elif e.phase == "internal":
            if e.thread not in open_ops:
                raise ContractViolation(f"internal event {e.op} outside an operation")
        else:
            raise ContractViolation(f"unknown phase {e.phase!r}")
    if open_ops:
        raise ContractViolation(f"operations never responded: {sorted(open_ops)}")
    return out


def _apply(state: frozenset, op: Operation):
    k = op.arg
    if op.op == "insert":
        return k not in state, state | {k}
    if op.op == "delete":
        return k in state, state - {k}
    if op.op == "contains":
        return k in state, state
    return tuple(sorted(state)), state


def check_linearizable(h: History) -> bool:
    """Depth-first search over real-time-minimal operations, memoised on
    (done set, abstract state)."""
    ops = operations(h)
    n = len(ops)
    full = (1 << n) - 1
    seen = set()

    def search(done: int, state: frozenset) -> bool:
        if done == full:
            return True
        if (done, state) in seen:
            return False
        seen.add((done, state))
        pending = [i for i in range(n) if not done >> i & 1]
        horizon = min(ops[i].responded for i in pending)
        for i in pending:
            op = ops[i]
            if op.invoked > horizon:
                continue
            result, nxt = _apply(state, op)
            if result == op.result and search(done | 1 << i, nxt):
                return True
        return False

    return search(0, frozenset(h.initial))


def check_linearizable_naive(h: History) -> bool:
    """Reference: try every permutation."""
    ops = operations(h)
    for order in itertools.permutations(ops):
        ok = True
        for a, b in itertools.combinations(order, 2):
            if b.responded < a.invoked:
                ok = False
                break
        if not ok:
            continue
        state = frozenset(h.initial)
        for op in order:
            result, state = _apply(state, op)
            if result != op.result:
                ok = False
                break
        if ok:
            return True
    return False


def random_history(rng: random.Random, max_ops: int = 6, keys: int = 3,
                   threads: int = 3, corrupt: float = 0.35) -> History:
    """A random concurrent history, linearizable before ``corrupt`` applies.

    Operations are linearized at random moments inside their spans; then,
    with probability ``corrupt``, one result is altered, which may or may
    not break linearizability.
    """
    n_ops = rng.randint(1, max_ops)
    initial = frozenset(k for k in range(keys) if rng.random() < 0.4)
    per_thread: dict[int, list] = {t: [] for t in range(threads)}
    for _ in range(n_ops):
        op = rng.choice(OPS)
        arg = None if op == "iterate" else rng.randrange(keys)
        per_thread[rng.randrange(threads)].append([op, arg])
    queue = {t: list(v) for t, v in per_thread.items() if v}
    state = initial
    events: list[Event] = []
    running: dict[int, list] = {}  # thread -> [op, arg, result or None]
    seq = itertools.count()

    def linearize(t: int) -> None:
        nonlocal state
        entry = running[t]
        if len(entry) == 2:
            result, state = _apply(state, Operation(t, entry[0], entry[1], None, 0, 0))
            entry.append(result)

    while queue or running:
        choices = [("inv", t) for t in queue if t not in running]
        choices += [("resp", t) for t in running]
        choices += [("lin", t) for t in running if len(running[t]) == 2]
        kind, t = rng.choice(choices)
        if kind == "inv":
            op, arg = queue[t].pop(0)
            if not queue[t]:
                del queue[t]
            running[t] = [op, arg]
            events.append(Event(t, op, "invoke", arg, next(seq)))
        elif kind == "lin":
            linearize(t)
        else:
            linearize(t)
            op, arg, result = running.pop(t)
            value = list(result) if op == "iterate" else result
            events.append(Event(t, op, "respond", value, next(seq)))
    if rng.random() < corrupt:
        responses = [e for e in events if e.phase == "respond"]
        e = rng.choice(responses)
        if e.op == "iterate":
            snap = set(e.value) ^ {rng.randrange(keys)}
            e.value = sorted(snap)
        else:
            e.value = not e.value
    return History(events, tuple(sorted(initial)))


def generate_corpus(n: int, max_ops: int = 6, seed: int = 0) -> list[tuple[History, bool]]:
    """Histories labelled by the permutation oracle."""
    rng = random.Random(seed)
    out = []
    for _ in range(n):
        h = random_history(rng, max_ops)
        out.append((h, check_linearizable_naive(h)))
    return out


def write_corpus(path: str, corpus: Iterable[tuple[History, bool]]) -> None:
    with open(path, "w") as fh:
        for h, expected in corpus:
            fh.write(h.to_json(expected) + "\n")


def read_corpus(path: str) -> list[tuple[History, Optional[bool]]]:
    out = []
    with open(path) as fh:
        for line in fh:
            line = line.strip()
            if not line:
                continue
            d = json.loads(line)
            out.append((History.from_dict(d), d.get("expected")))
    return out


class Recorder:
    """Append-only event log with a global sequence counter."""

    def __init__(self) -> None:
        self._seq = itertools.count()
        self._events: list[Event] = []
        self._local = threading.local()

    def bind(self, thread: int) -> None:
        self._local.thread = thread

    def record(self, op: str, phase: str, value) -> None:
        self._events.append(Event(self._local.thread, op, phase, value, next(self._seq)))

    def tracer(self, event: str, **payload) -> None:
        if getattr(self._local, "thread", None) is None:
            return
        node = payload.get("node")
        self.record(event, "internal", None if node is None else node.key)

    def call(self, fn, op: str, arg=None):
        self.record(op, "invoke", arg)
        result = fn() if arg is None else fn(arg)
        self.record(op, "respond", list(result) if op == "iterate" else result)
        return result

    def history(self, initial=()) -> History:
        return History(sorted(self._events, key=lambda e: e.seq), tuple(sorted(initial)))


def capture_history(structure: str, seed: int, threads: int = 3, max_ops: int = 16,
                    keys: int = 4, interval: float = 1e-6) -> History:
    """Run a few threads against a fresh set and record what they saw."""
    rng = random.Random(seed)
    s = make_set(structure, threads + 1)
    initial = [k for k in range(keys) if rng.random() < 0.5]
    for k in initial:
        s.insert(k)
    s.registry.release()
    rec = Recorder()
    s.registry.tracer = rec.tracer
    per = max(1, max_ops // threads)
    plans = []
    for _ in range(threads):
        plan = []
        for _ in range(per):
            op = rng.choices(OPS, weights=(3, 3, 2, 2))[0]
            plan.append((op, None if op == "iterate" else rng.randrange(keys)))
        plans.append(plan)
    fns = {"insert": s.insert, "delete": s.delete, "contains": s.contains, "iterate": s.iterate}
    start = threading.Barrier(threads)

    def worker(t: int) -> None:
        rec.bind(t)
        start.wait()
        for op, arg in plans[t]:
            rec.call(fns[op], op, arg)
        s.registry.release()

    ths = [threading.Thread(target=worker, args=(t,)) for t in range(threads)]
    old = sys.getswitchinterval()
    sys.setswitchinterval(interval)
    try:
        for t in ths:
            t.start()
        for t in ths:
            t.join()
    finally:
        sys.setswitchinterval(old)
    return rec.history(initial)

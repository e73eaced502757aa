"""Views of a paused sequential cursor and the local-consistency check.

A *position* is a pause point of the cursor: the number of traversal steps
it has taken.  The view at a position is the set of unmarked node
identities the cursor would still yield if it resumed alone.  A mutator is
locally consistent when, for every position, applying it while the cursor
is paused changes that view by nodes of its change set only.

The stepper applies each mutator with the atomic-write journal on and rolls
it back afterwards, so one structure serves every position.
"""
from __future__ import annotations

from dataclasses import dataclass, field
from typing import Any, Callable, Iterable, Optional

from snapiter.atomics import recording, rollback
from snapiter.core import ContractViolation


@dataclass(frozen=True)
class View:
    remaining: frozenset


@dataclass
class MutatorStep:
    """One atomic step of a set operation.

    ``apply(structure)`` performs the step and returns the identities of the
    nodes its operation modifies (the node it creates or marks), or ``None``
    when the step does not apply to this structure.  Those identities join
    ``change_set`` for the check.
    """

    name: str
    apply: Callable[[Any], Optional[Iterable[int]]]
    change_set: frozenset = frozenset()
    shipped: bool = True


@dataclass
class LocalVerdict:
    step: str
    ok: Optional[bool]  # None: step not applicable
    positions: int = 0
    writes: int = 0
    position: Optional[int] = None
    where: str = ""
    offending: frozenset = field(default_factory=frozenset)
    offending_keys: tuple = ()

    def __str__(self) -> str:
        if self.ok is None:
            return f"{self.step}: skipped (not applicable)"
        if self.ok:
            return f"{self.step}: pass over {self.positions} positions"
        return (f"{self.step}: FAIL at position {self.position} ({self.where}), "
                f"view changed by keys {list(self.offending_keys)}")


def _drain(cursor, keys: Optional[dict] = None) -> set:
    out = set()
    while not cursor.done:
        n = cursor.step()
        if n is not None:
            out.add(n.identity)
            if keys is not None:
                keys[n.identity] = n.key
    return out


def compute_view(structure, position: Optional[int] = None) -> View:
    """Remaining unmarked nodes after the cursor has yielded ``position``.

    ``position`` is a node identity, or ``None`` for the start.
    """
    cursor = structure.sequential_cursor()
    if position is not None:
        while True:
            if cursor.done:
                raise ContractViolation(f"node #{position} is not reachable by the cursor")
            n = cursor.step()
            if n is not None and n.identity == position:
                break
    return View(frozenset(_drain(cursor)))


def check_local_consistency(structure, step: MutatorStep) -> LocalVerdict:
    base = structure.sequential_cursor()
    probe = base.clone()
    yielded: list[tuple[int, int]] = []
    keys: dict[int, int] = {}
    n_steps = 0
    while not probe.done:
        n = probe.step()
        n_steps += 1
        if n is not None:
            yielded.append((n_steps, n.identity))
            keys[n.identity] = n.key

    verdict = LocalVerdict(step.name, True, positions=n_steps + 1)
    cursor = base
    for pos in range(n_steps + 1):
        before = {ident for s, ident in yielded if s > pos}
        paused = cursor.clone()
        with recording() as journal:
            created = step.apply(structure)
        if created is None:
            rollback(journal)
            return LocalVerdict(step.name, None)
        verdict.writes = max(verdict.writes, len(journal))
        try:
            after = _drain(paused, keys)
        finally:
            rollback(journal)
        bad = (before ^ after) - step.change_set - set(created)
        if bad:
            verdict.ok = False
            verdict.position = pos
            verdict.where = cursor.describe()
            verdict.offending = frozenset(bad)
            verdict.offending_keys = tuple(sorted(keys[i] for i in bad))
            return verdict
        if pos < n_steps:
            cursor.step()
    return verdict

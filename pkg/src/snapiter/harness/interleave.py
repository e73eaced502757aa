"""Deterministic interleaving of real threads.

CPython runs one thread at a time, so two threads only collide on a CAS
when the interpreter happens to preempt one of them between its read and
its CAS.  To study contention the way parallel hardware produces it, the
scheduler lets exactly one thread run between consecutive hook calls and
picks the next runner with a seeded RNG.  Given the same seed and the same
code path, the schedule is reproducible.
"""
from __future__ import annotations

import random
import threading
from typing import Callable, Sequence


class SeededScheduler:
    def __init__(self, seed: int) -> None:
        self.rng = random.Random(seed)
        self.cv = threading.Condition()
        self.current = -1
        self.alive: list[int] = []
        self.switches = 0
        self._local = threading.local()

    def hook(self) -> None:
        me = getattr(self._local, "index", None)
        if me is None:
            return
        with self.cv:
            self.current = self.rng.choice(self.alive)
            self.switches += 1
            self.cv.notify_all()
            while self.current != me:
                self.cv.wait()

    def run(self, fns: Sequence[Callable[[], None]]) -> None:
        errors: list[BaseException] = []

        def wrap(i: int, fn: Callable[[], None]) -> None:
            self._local.index = i
            with self.cv:
                while self.current != i:
                    self.cv.wait()
            try:
                fn()
            except BaseException as exc:  # re-raised in the caller
                errors.append(exc)
            finally:
                with self.cv:
                    self.alive.remove(i)
                    if self.alive:
                        self.current = self.rng.choice(self.alive)
                    self.cv.notify_all()

        self.alive = list(range(len(fns)))
        threads = [threading.Thread(target=wrap, args=(i, fn)) for i, fn in enumerate(fns)]
        for t in threads:
            t.start()
        with self.cv:
            self.current = self.rng.choice(self.alive)
            self.cv.notify_all()
        for t in threads:
            t.join()
        if errors:
            raise errors[0]

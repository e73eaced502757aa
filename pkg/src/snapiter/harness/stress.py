"""Global-consistency stress: iterators must always see the untouched keys."""
from __future__ import annotations

import sys
import threading
import time
from contextlib import contextmanager
from dataclasses import dataclass, field

from snapiter.harness.workload import CONTAINS, DELETE, INSERT, WorkloadConfig, make_set, op_stream


@contextmanager
def switch_interval(seconds):
    """Temporarily force more frequent thread switches."""
    if seconds is None:
        yield
        return
    old = sys.getswitchinterval()
    sys.setswitchinterval(seconds)
    try:
        yield
    finally:
        sys.setswitchinterval(old)


@dataclass
class StressResult:
    structure: str
    seed: int
    snapshots: int = 0
    violations: int = 0
    stray_keys: int = 0
    updater_ops: int = 0
    elapsed: float = 0.0
    errors: list = field(default_factory=list)
    audit_ok: bool = True

    @property
    def ok(self) -> bool:
        return self.violations == 0 and self.stray_keys == 0 and not self.errors and self.audit_ok


def global_consistency_stress(
    config: WorkloadConfig,
    cold_range: tuple[int, int] = (1, 100),
    hot_range: tuple[int, int] = (200, 300),
    interval: float = 1e-4,
) -> StressResult:
    """Preload the cold keys, churn the hot keys, and count snapshots that
    miss a cold key.  Ranges are inclusive."""
    cold_lo, cold_hi = cold_range
    hot_lo, hot_hi = hot_range
    if cold_lo > cold_hi or hot_lo > hot_hi:
        raise ValueError("empty key range")
    if not (cold_hi < hot_lo or hot_hi < cold_lo):
        raise ValueError("cold and hot ranges overlap")

    s = make_set(config.structure, max(config.updaters, 1) + 1)
    cold = set(range(cold_lo, cold_hi + 1))
    for k in sorted(cold):
        s.insert(k)
    s.registry.release()
    allowed = cold | set(range(hot_lo, hot_hi + 1))
    res = StressResult(config.structure, config.seed)
    stop = threading.Event()
    counts = [0] * config.updaters
    lock = threading.Lock()

    def updater(i: int) -> None:
        stream = op_stream(config, i, hot_lo, hot_hi)
        fns = {INSERT: s.insert, DELETE: s.delete, CONTAINS: s.contains}
        j = 0
        try:
            while not stop.is_set():
                op, k = stream[j % len(stream)]
                fns[op](k)
                j += 1
        except Exception as exc:  # surfaced through res.errors
            with lock:
                res.errors.append(repr(exc))
        finally:
            counts[i] = j
            s.registry.release()

    def iterator() -> None:
        try:
            while not stop.is_set():
                snap = s.iterate()
                keys = set(snap)
                with lock:
                    res.snapshots += 1
                    if not cold <= keys:
                        res.violations += 1
                    if not keys <= allowed:
                        res.stray_keys += 1
        except Exception as exc:
            with lock:
                res.errors.append(repr(exc))

    threads = [threading.Thread(target=updater, args=(i,)) for i in range(config.updaters)]
    threads += [threading.Thread(target=iterator) for _ in range(config.iterators)]
    with switch_interval(interval):
        t0 = time.perf_counter()
        for t in threads:
            t.start()
        time.sleep(config.seconds)
        stop.set()
        for t in threads:
            t.join()
        res.elapsed = time.perf_counter() - t0
    res.updater_ops = sum(counts)
    try:
        keys = s.adapter.audit()
        res.audit_ok = cold <= set(keys) <= allowed
    except AssertionError as exc:
        res.audit_ok = False
        res.errors.append(repr(exc))
    return res

"""Updater/iterator throughput benchmark.

Each run has two phases over identically preloaded sets: WOI (updaters
only) and WI (updaters plus iterators).  Threads warm up, then a fixed
window is measured.  Slowdown is WOI throughput over WI throughput.
"""
from __future__ import annotations

import csv
import io
import threading
import time
from dataclasses import dataclass, field, replace

from snapiter.harness.interleave import SeededScheduler
from snapiter.harness.stress import switch_interval
from snapiter.harness.workload import (
    CONTAINS,
    DELETE,
    INSERT,
    WorkloadConfig,
    make_set,
    op_stream,
    preload_keys,
)


@dataclass
class PhaseResult:
    updater_ops: list
    iterator_ops: list
    window: float
    snapshot_cas_failures: int = 0
    snapshots: list = field(default_factory=list)

    @property
    def throughput(self) -> float:
        return sum(self.updater_ops) / self.window

    @property
    def iterator_throughput(self) -> float:
        return sum(self.iterator_ops) / self.window


def prepared_set(config: WorkloadConfig):
    s = make_set(config.structure, max(config.updaters, 1) + 1, config.opt_sorted_append)
    for k in preload_keys(config):
        s.insert(k)
    s.registry.release()
    return s


def run_phase(config: WorkloadConfig, iterators: int, keep_snapshots: bool = False,
              interval=None) -> PhaseResult:
    s = prepared_set(config)
    streams = [op_stream(config, i) for i in range(config.updaters)]
    up = [0] * config.updaters
    it = [0] * iterators
    snaps: list = []
    stop = threading.Event()

    def updater(i: int) -> None:
        fns = (s.insert, s.delete, s.contains)
        stream = streams[i]
        n = len(stream)
        j = 0
        while not stop.is_set():
            op, k = stream[j % n]
            fns[op](k)
            j += 1
            up[i] = j
        s.registry.release()

    def iterator(i: int) -> None:
        while not stop.is_set():
            snap = s.iterate()
            if keep_snapshots:
                snaps.append(snap)
            it[i] += 1

    threads = [threading.Thread(target=updater, args=(i,), daemon=True)
               for i in range(config.updaters)]
    threads += [threading.Thread(target=iterator, args=(i,), daemon=True)
                for i in range(iterators)]
    with switch_interval(interval):
        for t in threads:
            t.start()
        time.sleep(config.warmup)
        u0, i0 = list(up), list(it)
        failures0 = s.registry.stats.snapshot_cas_failures.get()
        t0 = time.perf_counter()
        time.sleep(config.seconds)
        u1, i1 = list(up), list(it)
        window = time.perf_counter() - t0
        failures = s.registry.stats.snapshot_cas_failures.get() - failures0
        stop.set()
        for t in threads:
            t.join()
    return PhaseResult([b - a for a, b in zip(u0, u1)], [b - a for a, b in zip(i0, i1)],
                       window, failures, snaps)


def run_benchmark(config: WorkloadConfig) -> dict:
    config.validate()
    woi = run_phase(config, 0)
    wi = run_phase(config, config.iterators)
    slowdown = woi.throughput / wi.throughput if wi.throughput else float("inf")
    return {
        "structure": config.structure,
        "config": config.as_dict(),
        "throughput_woi": woi.throughput,
        "throughput_wi": wi.throughput,
        "slowdown": slowdown,
        "iterator_ops": sum(wi.iterator_ops),
        "iterator_throughput": wi.iterator_throughput,
        "snapshot_cas_failures": wi.snapshot_cas_failures,
        "per_thread": {
            "woi": {"updaters": woi.updater_ops},
            "wi": {"updaters": wi.updater_ops, "iterators": wi.iterator_ops},
        },
    }


def sweep(config: WorkloadConfig, updater_counts=range(1, 10)) -> list[dict]:
    return [run_benchmark(replace(config, updaters=u)) for u in updater_counts]


CSV_FIELDS = ("structure", "updaters", "iterators", "range_bits", "mix", "seed",
              "opt_sorted_append", "throughput_woi", "throughput_wi", "slowdown",
              "iterator_ops", "iterator_throughput", "snapshot_cas_failures")


def to_csv(reports: list[dict]) -> str:
    buf = io.StringIO()
    w = csv.DictWriter(buf, fieldnames=CSV_FIELDS)
    w.writeheader()
    for r in reports:
        row = {k: r[k] for k in CSV_FIELDS if k in r}
        for k in ("updaters", "iterators", "range_bits", "mix", "seed", "opt_sorted_append"):
            row[k] = r["config"][k]
        w.writerow(row)
    return buf.getvalue()


@dataclass
class SortedAppendTrial:
    snapshots: list
    snapshot_cas_failures: int
    switches: int


def sorted_append_trial(config: WorkloadConfig, iterations: int = 3) -> SortedAppendTrial:
    """Iterators only, over the seeded preload, under a seeded interleaving.

    Each of ``config.iterators`` threads runs ``iterations`` iterates.  With
    no updaters every snapshot must equal the preload, so runs with and
    without sorted append are directly comparable.
    """
    s = prepared_set(config)
    sched = SeededScheduler(config.seed)
    s.registry.hook = sched.hook
    snaps: list = []

    def iterator() -> None:
        for _ in range(iterations):
            snaps.append(s.iterate())

    sched.run([iterator] * config.iterators)
    return SortedAppendTrial(snaps, s.registry.stats.snapshot_cas_failures.get(), sched.switches)

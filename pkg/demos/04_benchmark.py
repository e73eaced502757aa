# # Throughput with and without iterators
#
# Each run measures updater throughput twice over the same preloaded set:
# without iterators (WOI) and with them (WI).  On a machine with fewer
# cores than threads the iterators take CPU time away from the updaters,
# so the slowdown here is larger than it would be on a many-core box.

import numpy as np

from snapiter.harness.bench import sorted_append_trial, sweep, to_csv
from snapiter.harness.workload import WorkloadConfig

cfg = WorkloadConfig("ubst", iterators=3, range_bits=12, seconds=0.5, warmup=0.1)
reports = sweep(cfg, range(1, 5))
print(to_csv(reports))

slowdown = np.array([r["slowdown"] for r in reports])
print("slowdown by updater count:", np.round(slowdown, 2))

# ## Sorted append
#
# With sorted append an iterator that finds a larger key already at the
# tail of the shared list skips its node instead of racing to append it.
# A seeded scheduler interleaves the iterator threads at every shared
# access, so both runs see the same schedule pattern.

base = WorkloadConfig("ubst", iterators=3, range_bits=10, seed=1)
plain = sorted_append_trial(base)
opt = sorted_append_trial(WorkloadConfig("ubst", iterators=3, range_bits=10, seed=1,
                                         opt_sorted_append=True))
print("same snapshots:", plain.snapshots == opt.snapshots)
print("CAS failures:", plain.snapshot_cas_failures, "->", opt.snapshot_cas_failures)

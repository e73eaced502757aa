# # Checking recorded histories
#
# A history lists invoke/respond events in real-time order.  The checker
# looks for an order of the operations that respects real time and the
# sequential behaviour of a set.  The naive permutation oracle agrees with
# it on small histories.

import random

from snapiter.harness import lincheck as lc

ok = lc.History([
    lc.Event(0, "insert", "invoke", 5, 0),
    lc.Event(1, "iterate", "invoke", None, 1),
    lc.Event(1, "iterate", "respond", [], 2),
    lc.Event(0, "insert", "respond", True, 3),
])
late = lc.History([
    lc.Event(0, "insert", "invoke", 5, 0),
    lc.Event(0, "insert", "respond", True, 1),
    lc.Event(1, "iterate", "invoke", None, 2),
    lc.Event(1, "iterate", "respond", [], 3),
])
print("overlapping iterate may miss the insert:", lc.check_linearizable(ok))
print("iterate after insert must see it:", lc.check_linearizable(late))

rng = random.Random(0)
hs = [lc.random_history(rng) for _ in range(300)]
agree = sum(lc.check_linearizable(h) == lc.check_linearizable_naive(h) for h in hs)
print(f"agreement with the permutation oracle: {agree}/300")

# Live histories: three threads race on a tiny key space and record what
# they observed, including iterate snapshots.

for structure in ("ubst", "hashset"):
    good = sum(lc.check_linearizable(lc.capture_history(structure, seed)) for seed in range(100))
    print(f"{structure}: {good}/100 captured histories linearizable")

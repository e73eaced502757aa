# # A concurrent set with snapshots
#
# Both backends plug into the same ConcurrentSet wrapper.  Updates and
# lookups behave like a normal set; iterate() returns a consistent,
# sorted snapshot even while other threads keep writing.

import threading

from snapiter import ConcurrentSet, HashSet, UBST

tree = ConcurrentSet(UBST())
table = ConcurrentSet(HashSet())

for s in (tree, table):
    for k in (42, 7, 19, 3):
        s.insert(k)
    s.delete(19)
    print(type(s.adapter).__name__, s.iterate(), 7 in s, 19 in s)

# ## Snapshots under churn
#
# Keys 1..50 are never touched.  Four threads hammer keys 100..120 while
# the main thread takes snapshots.  Every snapshot must contain all of
# 1..50, whatever else it sees.

s = ConcurrentSet(UBST())
for k in range(1, 51):
    s.insert(k)

stop = threading.Event()


def churn(seed):
    k = 100 + seed
    while not stop.is_set():
        s.insert(k)
        s.delete(k)
        k = 100 + (k * 7 + 3) % 21
    s.registry.release()


workers = [threading.Thread(target=churn, args=(i,)) for i in range(4)]
for w in workers:
    w.start()

stable = set(range(1, 51))
sizes = []
for _ in range(200):
    snap = s.iterate()
    assert stable <= set(snap)
    sizes.append(len(snap))

stop.set()
for w in workers:
    w.join()

print("snapshots taken:", len(sizes))
print("hot keys seen per snapshot: min", min(sizes) - 50, "max", max(sizes) - 50)

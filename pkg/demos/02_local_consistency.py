# # Why an in-place rotation breaks iteration
#
# A mutator is safe for the iterator when, whatever point a paused
# traversal has reached, the step changes the traversal's remaining view
# only by the node the step itself inserts or removes.
#
# The stepper below pauses the tree cursor at every point, applies one
# step, drains the cursor, then rolls the step back.

from snapiter.harness.mutators import (
    check_local,
    rotation_demo_tree,
    rotation_step,
    ubst_insert_step,
    ubst_mark_step,
)
from snapiter.harness.views import check_local_consistency

tree = rotation_demo_tree()
print("keys:", tree.audit())

for step in (ubst_insert_step(5), ubst_mark_step(3)):
    print(check_local_consistency(tree, step))

# Once the cursor has read the root (routing 6), a right rotation lifts
# the subtree holding 1 and 2 above it.  The cursor only descends from
# nodes it has already read, so it never reaches 1 or 2.

print(check_local_consistency(tree, rotation_step(6)))

# ## Exhaustive check
#
# Every shipped step on every tree shape with up to 5 keys, including
# half-finished deletions.

report = check_local("ubst", 5)
print(f"{report.structures} structures, {report.checked} steps, "
      f"{len(report.failures)} failures")

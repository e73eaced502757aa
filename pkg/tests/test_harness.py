import json
import random

import pytest

from snapiter import ContractViolation, UBST
from snapiter.harness import lincheck as lc
from snapiter.harness.bench import run_benchmark, sorted_append_trial, to_csv
from snapiter.harness.interleave import SeededScheduler
from snapiter.harness.mutators import (
    check_local,
    rotation_demo_tree,
    hs_scenarios,
    rotation_step,
    shapes,
    ubst_cleanup_step,
    ubst_insert_step,
    ubst_scenarios,
    ubst_tag_step,
)
from snapiter.harness.stress import global_consistency_stress
from snapiter.harness.views import MutatorStep, check_local_consistency, compute_view
from snapiter.harness.workload import WorkloadConfig, make_set, op_stream, preload_keys

# -- views ----------------------------------------------------------------


def tree_279():
    t = UBST()
    return t, {k: t.ds_insert(k) for k in (2, 7, 9)}


def test_view_at_start():
    t, n = tree_279()
    assert compute_view(t).remaining == {x.identity for x in n.values()}


def test_view_after_yielding_a_node():
    t, n = tree_279()
    assert compute_view(t, n[7].identity).remaining == {n[9].identity}


def test_view_all_marked():
    t, n = tree_279()
    for x in n.values():
        x.mark()
    assert compute_view(t).remaining == frozenset()


def test_view_unreachable_position():
    t, _ = tree_279()
    with pytest.raises(ContractViolation):
        compute_view(t, -1)


def test_insert_step_on_four_leaf_tree_passes():
    t = UBST.from_shape(((None, None), (None, None)), [2, 4, 6])
    v = check_local_consistency(t, ubst_insert_step(5))
    assert v.ok and v.writes == 1
    assert v.positions > 1


def test_cleanup_step_on_deep_tagged_path_passes():
    from tests.test_ubst import tagged_chain_tree

    t, _, _ = tagged_chain_tree()
    assert check_local_consistency(t, ubst_tag_step(3)).ok
    t.tag_step(t.seek(3))
    v = check_local_consistency(t, ubst_cleanup_step(3))
    assert v.ok and v.writes == 1


def test_step_that_does_not_apply_is_skipped():
    t = UBST.from_shape((None, None), [1])
    v = check_local_consistency(t, ubst_insert_step(1))
    assert v.ok is None


def test_rotation_fails_at_the_root_position():
    v = check_local_consistency(rotation_demo_tree(), rotation_step(6))
    assert v.ok is False
    assert v.where == "internal(routing=6)"
    assert v.offending_keys == (1, 2)


def test_stepper_leaves_structure_unchanged():
    t = rotation_demo_tree()
    before = t.audit()
    check_local_consistency(t, rotation_step(6))
    assert t.audit() == before


def test_unjournaled_change_set_masks_nothing_else():
    t, n = tree_279()
    marks = MutatorStep("mark-two", lambda s: (n[2].mark(), n[9].mark()) and [n[2].identity])
    v = check_local_consistency(t, marks)
    assert v.ok is False and v.offending_keys == (9,)


def test_shape_counts_are_catalan():
    assert [len(shapes(k)) for k in range(1, 7)] == [1, 1, 2, 5, 14, 42]


@pytest.mark.parametrize("name", ["ubst", "hashset"])
def test_check_local_small_bound(name):
    rep = check_local(name, 4)
    assert rep.ok and rep.checked > 0


def test_scenarios_are_nonempty():
    assert sum(1 for _ in ubst_scenarios(2)) > 3
    assert sum(1 for _ in hs_scenarios(2)) > 3


# -- workload -------------------------------------------------------------


@pytest.mark.parametrize("kw", [
    {"structure": "skiplist"},
    {"mix": "10-10-10"},
    {"mix": (50, 50, 10)},
    {"updaters": -1},
    {"seconds": 0},
    {"range_bits": 0},
])
def test_config_validation(kw):
    with pytest.raises(ValueError):
        WorkloadConfig(**kw)


def test_streams_and_preload_are_seeded():
    a = WorkloadConfig(seed=3, range_bits=8)
    b = WorkloadConfig(seed=3, range_bits=8)
    assert op_stream(a, 1) == op_stream(b, 1)
    assert op_stream(a, 0) != op_stream(a, 1)
    assert preload_keys(a) == preload_keys(b)
    pre = preload_keys(a)
    assert len(pre) == len(set(pre)) == 257 // 2
    assert all(0 <= k <= 256 for k in pre)


def test_op_stream_respects_bounds_and_mix():
    cfg = WorkloadConfig(mix="50-50-0", stream_length=2000)
    ops = op_stream(cfg, 0, 200, 300)
    assert all(200 <= k <= 300 for _, k in ops)
    assert {op for op, _ in ops} == {0, 1}


# -- stress ---------------------------------------------------------------


def test_stress_short_run(structure):
    cfg = WorkloadConfig(structure, updaters=4, iterators=2, seconds=1.0)
    r = global_consistency_stress(cfg)
    assert r.ok and r.snapshots > 10 and r.updater_ops > 0


def test_stress_without_updaters_sees_preload(structure):
    cfg = WorkloadConfig(structure, updaters=0, iterators=1, seconds=0.2)
    r = global_consistency_stress(cfg, (1, 50), (100, 110))
    assert r.ok and r.snapshots > 0


def test_insert_only_hot_updaters_leave_cold_keys_alone(structure):
    s = make_set(structure, 4)
    for k in range(1, 101):
        s.insert(k)
    for i in range(100):
        s.insert(200 + i % 101)
        assert set(range(1, 101)) <= set(s.iterate())


@pytest.mark.parametrize("cold,hot", [((1, 100), (50, 150)), ((5, 1), (10, 20))])
def test_stress_rejects_bad_ranges(cold, hot):
    with pytest.raises(ValueError):
        global_consistency_stress(WorkloadConfig(seconds=0.1), cold, hot)


# -- lincheck -------------------------------------------------------------


def hist(*events, initial=()):
    return lc.History([lc.Event(t, op, ph, v, i) for i, (t, op, ph, v) in enumerate(events)],
                      initial)


def test_lincheck_sequential():
    h = hist((0, "insert", "invoke", 5), (0, "insert", "respond", True),
             (0, "contains", "invoke", 5), (0, "contains", "respond", True))
    assert lc.check_linearizable(h)


def test_lincheck_overlapping_iterate_may_precede_insert():
    h = hist((0, "insert", "invoke", 5), (1, "iterate", "invoke", None),
             (1, "iterate", "respond", []), (0, "insert", "respond", True))
    assert lc.check_linearizable(h)


def test_lincheck_real_time_order_is_enforced():
    h = hist((0, "insert", "invoke", 5), (0, "insert", "respond", True),
             (1, "iterate", "invoke", None), (1, "iterate", "respond", []))
    assert not lc.check_linearizable(h)
    assert not lc.check_linearizable_naive(h)


@pytest.mark.parametrize("events", [
    [(0, "insert", "respond", True)],
    [(0, "insert", "invoke", 1)],
    [(0, "insert", "invoke", 1), (0, "delete", "invoke", 1)],
    [(0, "pop", "invoke", None), (0, "pop", "respond", None)],
    [(0, "insert", "begin", 1)],
])
def test_lincheck_malformed(events):
    with pytest.raises(ContractViolation):
        lc.check_linearizable(hist(*events))


def test_lincheck_agrees_with_naive_oracle():
    rng = random.Random(11)
    verdicts = []
    for _ in range(300):
        h = lc.random_history(rng)
        verdicts.append(lc.check_linearizable(h))
        assert verdicts[-1] == lc.check_linearizable_naive(h)
    assert 0 < sum(verdicts) < len(verdicts)


def test_corpus_round_trip(tmp_path):
    corpus = lc.generate_corpus(20, seed=4)
    path = tmp_path / "c.jsonl"
    lc.write_corpus(str(path), corpus)
    back = lc.read_corpus(str(path))
    assert [e for _, e in back] == [e for _, e in corpus]
    first = json.loads(path.read_text().splitlines()[0])
    assert set(first["events"][0]) == {"thread", "op", "phase", "value", "seq"}


def test_captured_histories_are_linearizable(structure):
    for seed in range(30):
        h = lc.capture_history(structure, seed)
        assert lc.check_linearizable(h)


# -- bench & scheduling ---------------------------------------------------


def test_benchmark_report_fields():
    cfg = WorkloadConfig("hashset", updaters=2, iterators=1, seconds=0.2, warmup=0.05,
                         range_bits=8)
    r = run_benchmark(cfg)
    assert r["throughput_woi"] > 0 and r["throughput_wi"] > 0
    assert r["slowdown"] == pytest.approx(r["throughput_woi"] / r["throughput_wi"])
    assert len(r["per_thread"]["wi"]["iterators"]) == 1
    lines = to_csv([r]).splitlines()
    assert lines[0].startswith("structure,updaters") and len(lines) == 2


def test_seeded_scheduler_is_deterministic():
    def trace(seed):
        sched = SeededScheduler(seed)
        out = []

        def worker(name):
            def run():
                for i in range(20):
                    out.append((name, i))
                    sched.hook()
            return run

        sched.run([worker(c) for c in "abc"])
        return out

    assert trace(1) == trace(1)
    assert trace(1) != trace(2)
    assert sorted(trace(3)) == sorted((c, i) for c in "abc" for i in range(20))


def test_sorted_append_trial_deterministic():
    cfg = WorkloadConfig("ubst", iterators=3, range_bits=6, seed=2)
    a, b = sorted_append_trial(cfg), sorted_append_trial(cfg)
    assert a.snapshot_cas_failures == b.snapshot_cas_failures
    pre = tuple(sorted(preload_keys(cfg)))
    assert all(s == pre for s in a.snapshots) and len(a.snapshots) == 9

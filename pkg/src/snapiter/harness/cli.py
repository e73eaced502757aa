"""Command-line entry point: ``snapiter <subcommand> ...``."""
from __future__ import annotations

import argparse
import json
import sys
import time
from dataclasses import replace
from typing import Optional, Sequence

from snapiter.harness.workload import MIXES, STRUCTURES, WorkloadConfig


def _range(text: str) -> tuple[int, int]:
    try:
        lo, hi = (int(x) for x in text.split(":"))
    except ValueError:
        raise argparse.ArgumentTypeError(f"expected LO:HI, got {text!r}") from None
    if lo > hi:
        raise argparse.ArgumentTypeError(f"empty range {text!r}")
    return lo, hi


def _positive(kind):
    def parse(text: str):
        v = kind(text)
        if v <= 0:
            raise argparse.ArgumentTypeError(f"must be positive, got {text!r}")
        return v
    return parse


def _non_negative(text: str) -> int:
    v = int(text)
    if v < 0:
        raise argparse.ArgumentTypeError(f"must be non-negative, got {text!r}")
    return v


def build_parser() -> argparse.ArgumentParser:
    p = argparse.ArgumentParser(prog="snapiter", description="Snapshot-iterator harness.")
    sub = p.add_subparsers(dest="command", required=True)

    b = sub.add_parser("bench", help="updater/iterator throughput benchmark")
    b.add_argument("--structure", choices=STRUCTURES, required=True)
    b.add_argument("--updaters", type=_non_negative, default=4)
    b.add_argument("--sweep", type=_range, metavar="LO:HI",
                   help="run once per updater count in LO..HI (overrides --updaters)")
    b.add_argument("--iterators", type=_non_negative, default=3)
    b.add_argument("--range", dest="range_bits", type=int, choices=(12, 14, 16), default=14)
    b.add_argument("--mix", choices=sorted(MIXES), default="25-25-50")
    b.add_argument("--seconds", type=_positive(float), default=2.0)
    b.add_argument("--warmup", type=_non_negative_float, default=0.5)
    b.add_argument("--seed", type=int, default=0)
    b.add_argument("--sorted-append", action="store_true")
    b.add_argument("--out", help="write the JSON report here (default: stdout)")
    b.add_argument("--csv", help="also write a CSV summary")

    s = sub.add_parser("stress-global", help="cold/hot key global-consistency stress")
    s.add_argument("--structure", choices=STRUCTURES, required=True)
    s.add_argument("--cold", type=_range, default=(1, 100))
    s.add_argument("--hot", type=_range, default=(200, 300))
    s.add_argument("--updaters", type=_non_negative, default=4)
    s.add_argument("--iterators", type=_positive(int), default=2)
    s.add_argument("--seconds", type=_positive(float), default=10.0)
    s.add_argument("--seed", type=int, default=0)
    s.add_argument("--seeds", type=_positive(int), default=1,
                   help="repeat with seeds seed..seed+N-1")

    c = sub.add_parser("check-local", help="exhaustive local-consistency check of mutators")
    c.add_argument("--structure", choices=STRUCTURES, required=True)
    c.add_argument("--exhaustive-bound", type=_positive(int), required=True)
    c.add_argument("--show-rotation", action="store_true",
                   help="also run the unshipped tree rotation and print its counterexample")

    lc = sub.add_parser("lincheck", help="check a corpus of histories")
    lc.add_argument("--corpus", required=True)
    gen = lc.add_mutually_exclusive_group()
    gen.add_argument("--generate", type=_positive(int), metavar="N",
                     help="first write N random labelled histories to the corpus file")
    gen.add_argument("--capture", type=_positive(int), metavar="N",
                     help="first record N live histories to the corpus file")
    lc.add_argument("--structure", choices=STRUCTURES, default="ubst")
    lc.add_argument("--seed", type=int, default=0)
    return p


def _non_negative_float(text: str) -> float:
    v = float(text)
    if v < 0:
        raise argparse.ArgumentTypeError(f"must be non-negative, got {text!r}")
    return v


def _config(args, **kw) -> WorkloadConfig:
    try:
        return WorkloadConfig(**kw)
    except ValueError as exc:
        args._parser.error(str(exc))
        raise  # unreachable


def cmd_bench(args) -> int:
    from snapiter.harness.bench import run_benchmark, to_csv

    cfg = _config(args, structure=args.structure, updaters=args.updaters,
                  iterators=args.iterators, seconds=args.seconds, warmup=args.warmup,
                  range_bits=args.range_bits, mix=args.mix, seed=args.seed,
                  opt_sorted_append=args.sorted_append)
    counts = range(args.sweep[0], args.sweep[1] + 1) if args.sweep else [cfg.updaters]
    reports = []
    for u in counts:
        r = run_benchmark(replace(cfg, updaters=u))
        reports.append(r)
        print(f"{r['structure']} updaters={u}: woi={r['throughput_woi']:.0f}/s "
              f"wi={r['throughput_wi']:.0f}/s slowdown={r['slowdown']:.2f}", file=sys.stderr)
    payload = reports[0] if len(reports) == 1 else reports
    text = json.dumps(payload, indent=2)
    if args.out:
        with open(args.out, "w") as fh:
            fh.write(text + "\n")
    else:
        print(text)
    if args.csv:
        with open(args.csv, "w", newline="") as fh:
            fh.write(to_csv(reports))
    return 0


def cmd_stress(args) -> int:
    from snapiter.harness.stress import global_consistency_stress

    bad = 0
    for seed in range(args.seed, args.seed + args.seeds):
        cfg = _config(args, structure=args.structure, updaters=args.updaters,
                      iterators=args.iterators, seconds=args.seconds, seed=seed)
        try:
            r = global_consistency_stress(cfg, args.cold, args.hot)
        except ValueError as exc:
            args._parser.error(str(exc))
        print(json.dumps({"structure": r.structure, "seed": seed, "snapshots": r.snapshots,
                          "violations": r.violations, "stray_keys": r.stray_keys,
                          "updater_ops": r.updater_ops, "audit_ok": r.audit_ok,
                          "errors": r.errors}))
        bad += not r.ok
    return 1 if bad else 0


def cmd_check_local(args) -> int:
    from snapiter.harness.mutators import check_local, rotation_demo_tree, rotation_step
    from snapiter.harness.views import check_local_consistency

    t0 = time.perf_counter()
    rep = check_local(args.structure, args.exhaustive_bound)
    dt = time.perf_counter() - t0
    print(f"{rep.structure}: {rep.structures} structures, {rep.checked} steps checked, "
          f"{rep.skipped} not applicable, {len(rep.failures)} failures, "
          f"{len(rep.multi_write)} multi-write steps ({dt:.1f}s)")
    for label, verdict in rep.failures[:20]:
        print(f"  {label}: {verdict}")
    for label, name, writes in rep.multi_write[:20]:
        print(f"  {label}: {name} performed {writes} writes")
    if args.show_rotation:
        print(f"unshipped: {check_local_consistency(rotation_demo_tree(), rotation_step(6))}")
    return 0 if rep.ok else 1


def cmd_lincheck(args) -> int:
    from snapiter.harness import lincheck as lc

    if args.generate:
        lc.write_corpus(args.corpus, lc.generate_corpus(args.generate, seed=args.seed))
    elif args.capture:
        hs = [lc.capture_history(args.structure, args.seed + i) for i in range(args.capture)]
        lc.write_corpus(args.corpus, [(h, True) for h in hs])
    try:
        corpus = lc.read_corpus(args.corpus)
    except (OSError, ValueError, KeyError) as exc:
        args._parser.error(f"cannot read corpus: {exc}")
    mismatches = 0
    linearizable = 0
    for i, (h, expected) in enumerate(corpus):
        verdict = lc.check_linearizable(h)
        linearizable += verdict
        # unlabelled histories are expected to be linearizable
        want = True if expected is None else expected
        if verdict != want:
            mismatches += 1
            print(f"history {i}: verdict {verdict}, expected {want}")
    print(f"{len(corpus)} histories, {linearizable} linearizable, {mismatches} mismatches")
    return 1 if mismatches else 0


COMMANDS = {"bench": cmd_bench, "stress-global": cmd_stress,
            "check-local": cmd_check_local, "lincheck": cmd_lincheck}


def main(argv: Optional[Sequence[str]] = None) -> int:
    parser = build_parser()
    args = parser.parse_args(argv)
    args._parser = parser
    return COMMANDS[args.command](args)


if __name__ == "__main__":
    sys.exit(main())

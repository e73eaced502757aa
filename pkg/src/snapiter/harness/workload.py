"""Workload configuration and deterministic op streams."""
from __future__ import annotations

from dataclasses import asdict, dataclass

import numpy as np

from snapiter.framework import ConcurrentSet
from snapiter.hashset import HashSet
from snapiter.snapcollector import Registry
from snapiter.ubst import UBST

STRUCTURES = ("ubst", "hashset")
MIXES = {"25-25-50": (25, 25, 50), "50-50-0": (50, 50, 0)}

INSERT, DELETE, CONTAINS = 0, 1, 2


@dataclass
class WorkloadConfig:
    structure: str = "ubst"
    updaters: int = 4
    iterators: int = 3
    seconds: float = 2.0
    warmup: float = 0.5
    range_bits: int = 14
    mix: tuple = (25, 25, 50)
    seed: int = 0
    opt_sorted_append: bool = False
    stream_length: int = 1 << 15

    def __post_init__(self) -> None:
        if isinstance(self.mix, str):
            if self.mix not in MIXES:
                raise ValueError(f"unknown mix {self.mix!r}; choose from {sorted(MIXES)}")
            self.mix = MIXES[self.mix]
        self.mix = tuple(int(m) for m in self.mix)
        self.validate()

    def validate(self) -> None:
        if self.structure not in STRUCTURES:
            raise ValueError(f"unknown structure {self.structure!r}")
        if len(self.mix) != 3 or sum(self.mix) != 100 or min(self.mix) < 0:
            raise ValueError(f"mix must be three non-negative percentages summing to 100, got {self.mix}")
        if self.updaters < 0 or self.iterators < 0:
            raise ValueError("thread counts must be non-negative")
        if self.seconds <= 0 or self.warmup < 0:
            raise ValueError("durations must be positive")
        if not 1 <= self.range_bits <= 62:
            raise ValueError("range_bits must be in [1, 62]")

    @property
    def key_max(self) -> int:
        return 1 << self.range_bits

    def as_dict(self) -> dict:
        d = asdict(self)
        d["mix"] = "-".join(str(m) for m in self.mix)
        return d


def make_adapter(structure: str):
    if structure == "ubst":
        return UBST()
    if structure == "hashset":
        return HashSet()
    raise ValueError(f"unknown structure {structure!r}")


def make_set(structure: str, max_threads: int = 64, sorted_append=None) -> ConcurrentSet:
    return ConcurrentSet(make_adapter(structure), Registry(max_threads), sorted_append)


def preload_keys(config: WorkloadConfig) -> list[int]:
    """Half the key range, drawn without replacement from the seed."""
    rng = np.random.default_rng([config.seed, 0xC0FFEE])
    n = config.key_max + 1
    return rng.choice(n, size=n // 2, replace=False).tolist()


def op_stream(config: WorkloadConfig, updater: int, lo: int = 0, hi=None) -> list[tuple[int, int]]:
    """Fixed (op, key) sequence for one updater; keys uniform in [lo, hi]."""
    hi = config.key_max if hi is None else hi
    rng = np.random.default_rng([config.seed, updater])
    p = np.asarray(config.mix, dtype=float) / 100.0
    ops = rng.choice(3, size=config.stream_length, p=p)
    keys = rng.integers(lo, hi + 1, size=config.stream_length)
    return list(zip(ops.tolist(), keys.tolist()))

"""Block interval models.

``slots`` is the default jitter model: 12 s slots, each independently missed
with probability ``miss_prob`` and at most ``max_missed`` in a row, so intervals
take the values 12, 24 or 36 s. With miss_prob = 0.1384 the expected interval
is 13.89 s.
"""

from __future__ import annotations

import random
from dataclasses import dataclass

SLOT_SECONDS = 12.0
DEFAULT_MISS_PROB = 0.1384


@dataclass(frozen=True)
class IntervalModel:
    kind: str = "fixed"  # fixed | slots | uniform
    base: float = SLOT_SECONDS
    miss_prob: float = DEFAULT_MISS_PROB
    max_missed: int = 2
    upper: float = 36.0

    def __post_init__(self):
        if self.kind not in ("fixed", "slots", "uniform"):
            raise ValueError(f"unknown interval model {self.kind!r}")

    @property
    def min_interval(self) -> float:
        return self.base

    @property
    def max_interval(self) -> float:
        if self.kind == "fixed":
            return self.base
        if self.kind == "slots":
            return self.base * (1 + self.max_missed)
        return self.upper

    def mean_interval(self) -> float:
        if self.kind == "fixed":
            return self.base
        if self.kind == "uniform":
            return (self.base + self.upper) / 2
        q, k = self.miss_prob, self.max_missed
        probs = [q**i * (1 - q) for i in range(k)] + [q**k]
        return sum(self.base * (1 + i) * p for i, p in enumerate(probs))

    def sampler(self, seed: int) -> IntervalSampler:
        return IntervalSampler(self, random.Random(seed))


class IntervalSampler:
    def __init__(self, model: IntervalModel, rng: random.Random):
        self.model = model
        self.rng = rng

    def next(self) -> float:
        m = self.model
        if m.kind == "fixed":
            return m.base
        if m.kind == "uniform":
            return self.rng.uniform(m.base, m.upper)
        missed = 0
        while missed < m.max_missed and self.rng.random() < m.miss_prob:
            missed += 1
        return m.base * (1 + missed)


FIXED = IntervalModel("fixed")
JITTER = IntervalModel("slots")

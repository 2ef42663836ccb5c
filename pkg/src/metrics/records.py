"""Per-position evaluation records: the gold token and the model's next-token distribution."""

from __future__ import annotations

from dataclasses import dataclass
from typing import Sequence

import numpy as np

from src.transforms.distribution import Distribution


@dataclass(frozen=True, eq=False)
class TokenEvalRecord:
    gold: int
    dist: Distribution

    def __post_init__(self) -> None:
        if not 0 <= self.gold < self.dist.vocab_size:
            raise ValueError(f"Gold id {self.gold} out of range [0, {self.dist.vocab_size})")

    @property
    def p_gold(self) -> float:
        return self.dist.prob(self.gold)


def require_records(records: Sequence[TokenEvalRecord]) -> None:
    if len(records) == 0:
        raise ValueError("At least one evaluation record is required")


def gold_probs(records: Sequence[TokenEvalRecord]) -> np.ndarray:
    require_records(records)
    return np.array([r.p_gold for r in records], dtype=np.float64)


def vocab_size_of(records: Sequence[TokenEvalRecord]) -> int:
    require_records(records)
    sizes = {r.dist.vocab_size for r in records}
    if len(sizes) != 1:
        raise ValueError(f"Records mix vocabulary sizes: {sorted(sizes)}")
    return sizes.pop()

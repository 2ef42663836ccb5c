"""Decoding strategies – map a score vector to the next-token distribution."""

from __future__ import annotations

from dataclasses import dataclass
from typing import Any, Sequence

import numpy as np

from src.catalog.decoding_catalog import check_param, default_param, strategy_entry
from src.transforms.distribution import Distribution, EntmaxParams, as_scores
from src.transforms.entmax import argmax_distribution, entmax, softmax
from src.transforms.truncation import nucleus_truncate, topk_truncate

STRATEGIES = ("greedy", "softmax", "temperature", "topk", "nucleus", "entmax")
MAX_SEED = 2**64 - 1


@dataclass(frozen=True)
class DecoderConfig:
    """A decoding strategy, its scalar parameter and generation settings.

    ``param`` is tau for temperature, k for topk, P for nucleus and alpha for
    entmax; greedy and softmax ignore it.
    """

    strategy: str
    param: float | None = None
    max_len: int = 50
    seed: int = 0

    def __post_init__(self) -> None:
        if self.strategy not in STRATEGIES:
            raise ValueError(f"Unknown strategy: {self.strategy} (expected one of {', '.join(STRATEGIES)})")
        if self.strategy in ("greedy", "softmax"):
            object.__setattr__(self, "param", None)
        else:
            check_param(self.strategy, self.param)
        if self.max_len < 1:
            raise ValueError(f"max_len must be >= 1, got {self.max_len}")
        if not 0 <= self.seed <= MAX_SEED:
            raise ValueError(f"seed must be an unsigned 64-bit integer, got {self.seed}")

    @classmethod
    def from_catalog(
        cls,
        strategy: str,
        param: float | None = None,
        max_len: int = 50,
        seed: int = 0,
        catalog_path: str | None = None,
    ) -> "DecoderConfig":
        """Fill a missing parameter with the catalog default for *strategy*."""
        if param is None:
            param = default_param(strategy, catalog_path)
        return cls(strategy, param, max_len, seed)

    @property
    def label(self) -> str:
        entry = strategy_entry(self.strategy)
        if self.param is None:
            return entry["label"]
        return f"{entry['label']} ({entry['param']}={self.param:g})"

    def to_dict(self) -> dict[str, Any]:
        return {"strategy": self.strategy, "param": self.param, "max_len": self.max_len, "seed": self.seed}


def next_token_distribution(z: Sequence[float] | np.ndarray, config: DecoderConfig) -> Distribution:
    """Post-transform next-token distribution for *config*.

    Top-k and nucleus truncate the plain softmax (temperature 1).
    """
    scores = as_scores(z)
    strategy = config.strategy
    if strategy == "greedy":
        return argmax_distribution(scores)
    if strategy == "softmax":
        return softmax(scores, 1.0)
    if strategy == "temperature":
        return softmax(scores, float(config.param))
    if strategy == "topk":
        return topk_truncate(softmax(scores, 1.0), min(int(config.param), scores.size))
    if strategy == "nucleus":
        return nucleus_truncate(softmax(scores, 1.0), float(config.param))
    return entmax(scores, EntmaxParams(alpha=float(config.param)))

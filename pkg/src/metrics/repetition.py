"""Repetition (rep / wrep), diversity (distinct-n) and support-size statistics."""

from __future__ import annotations

from collections import Counter
from dataclasses import dataclass
from typing import Iterable, Sequence

import numpy as np

from src.metrics.records import TokenEvalRecord, require_records

DEFAULT_WINDOWS = (16, 32, 128, 512)


@dataclass(frozen=True)
class RepetitionResult:
    rep: dict[int, float]
    wrep: dict[int, float]

    @property
    def rep_mean(self) -> float:
        return float(np.mean(list(self.rep.values())))

    @property
    def wrep_mean(self) -> float:
        return float(np.mean(list(self.wrep.values())))


def repetition_metrics(
    gold: Sequence[int],
    predicted: Sequence[int],
    windows: Sequence[int] = DEFAULT_WINDOWS,
) -> RepetitionResult:
    """rep_l: share of positions whose prediction occurs among the previous l gold tokens.

    wrep_l counts the same positions except those whose gold token also occurs in
    that window. Early positions use whatever shorter window is available.
    """
    gold = list(gold)
    predicted = list(predicted)
    if len(gold) != len(predicted):
        raise ValueError(f"Length mismatch: {len(gold)} gold vs {len(predicted)} predicted tokens")
    if any(w < 1 for w in windows):
        raise ValueError(f"Windows must be positive, got {list(windows)}")
    rep: dict[int, float] = {}
    wrep: dict[int, float] = {}
    total = len(gold)
    for l in windows:
        n_rep = n_wrep = 0
        for t in range(total):
            window = set(gold[max(0, t - l) : t])
            if predicted[t] in window:
                n_rep += 1
                if gold[t] not in window:
                    n_wrep += 1
        rep[l] = n_rep / total if total else 0.0
        wrep[l] = n_wrep / total if total else 0.0
    return RepetitionResult(rep, wrep)


def _ngrams(tokens: Sequence[int], n: int) -> Iterable[tuple[int, ...]]:
    return zip(*(tokens[i:] for i in range(n)))


def distinct_n(tokens: Sequence[int], n: int) -> float:
    """Distinct n-grams divided by the number of tokens."""
    if n < 1:
        raise ValueError(f"n must be >= 1, got {n}")
    tokens = list(tokens)
    if len(tokens) < n:
        return 0.0
    return len(set(_ngrams(tokens, n))) / len(tokens)


def corpus_distinct_n(sequences: Iterable[Sequence[int]], n: int) -> float:
    """Micro-averaged distinct-n over many generations (per-sequence n-grams, summed counts)."""
    if n < 1:
        raise ValueError(f"n must be >= 1, got {n}")
    n_tokens = n_distinct = 0
    for seq in sequences:
        seq = list(seq)
        n_tokens += len(seq)
        n_distinct += len(set(_ngrams(seq, n)))
    return n_distinct / n_tokens if n_tokens else 0.0


def unique_tokens(sequences: Iterable[Sequence[int]]) -> int:
    return len({t for seq in sequences for t in seq})


def word_f1(predicted: Sequence[int], reference: Sequence[int]) -> float:
    """Bag-of-tokens F1 between a prediction and a reference."""
    common = Counter(predicted) & Counter(reference)
    overlap = sum(common.values())
    if overlap == 0:
        return 0.0
    precision = overlap / len(predicted)
    recall = overlap / len(reference)
    return 2 * precision * recall / (precision + recall)


def summarize_support_sizes(sizes: Sequence[int]) -> dict[str, float]:
    """Mean, median, population standard deviation, min and max of support sizes."""
    if len(sizes) == 0:
        raise ValueError("At least one support size is required")
    arr = np.asarray(sizes, dtype=np.float64)
    return {
        "mean": float(arr.mean()),
        "median": float(np.median(arr)),
        "sd": float(arr.std(ddof=0)),
        "min": float(arr.min()),
        "max": float(arr.max()),
    }


def support_statistics(records: Sequence[TokenEvalRecord]) -> dict[str, float]:
    require_records(records)
    return summarize_support_sizes([r.dist.size for r in records])

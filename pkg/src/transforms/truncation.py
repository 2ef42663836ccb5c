"""Truncation transforms – top-k and nucleus (top-P) with renormalization."""

from __future__ import annotations

import numpy as np

from src.transforms.distribution import Distribution


def topk_truncate(p: Distribution, k: int) -> Distribution:
    """Keep the *k* most probable tokens (ties to the lower id) and renormalize."""
    if k < 1:
        raise ValueError(f"k must be >= 1, got {k}")
    if k > p.vocab_size:
        raise ValueError(f"k must be <= vocabulary size {p.vocab_size}, got {k}")
    if k >= p.size:
        return p
    ids, _ = p.ranked()
    return p.restrict(ids[:k])


def nucleus_truncate(p: Distribution, top_p: float) -> Distribution:
    """Keep the smallest most-probable prefix whose mass reaches *top_p*.

    The token whose cumulative probability crosses the threshold is kept.
    """
    if not 0 < top_p <= 1:
        raise ValueError(f"top_p must lie in (0, 1], got {top_p}")
    if top_p == 1:
        return p
    ids, probs = p.ranked()
    cumulative = np.cumsum(probs)
    cutoff = int(np.searchsorted(cumulative, top_p, side="left")) + 1
    return p.restrict(ids[: min(cutoff, ids.size)])

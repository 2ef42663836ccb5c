"""Bounded metrics for sparse distributions: sparsemax score and Jensen-Shannon divergence.

All divergences are in nats.
"""

from __future__ import annotations

import math
from typing import Sequence

import numpy as np
from scipy.special import entr, rel_entr

from src.metrics.records import TokenEvalRecord, require_records
from src.transforms.distribution import Distribution
from src.transforms.entmax import tsallis_entropy

LN2 = math.log(2.0)


def sparsemax_score_term(dist: Distribution, gold: int) -> float:
    """p(gold) + Gini entropy of *dist*; in [0, 1]."""
    return dist.prob(gold) + tsallis_entropy(dist, 2.0)


def sparsemax_score(records: Sequence[TokenEvalRecord]) -> float:
    require_records(records)
    return math.fsum(sparsemax_score_term(r.dist, r.gold) for r in records) / len(records)


def patrick_fischer_check(dist: Distribution, gold: int) -> float:
    """1 - ½‖p - e_gold‖², which equals the per-token sparsemax score."""
    diff = dist.dense()
    diff[gold] -= 1.0
    return 1.0 - 0.5 * float(diff @ diff)


def bernoulli_entropy(p: float) -> float:
    return float(entr(p) + entr(1.0 - p))


def js_to_onehot(p_gold: float) -> float:
    """JS(p, e_gold) from the gold probability alone: H_b((1 + p) / 2) - ½ H_b(p)."""
    if not 0.0 <= p_gold <= 1.0:
        raise ValueError(f"p_gold must lie in [0, 1], got {p_gold}")
    return bernoulli_entropy((1.0 + p_gold) / 2.0) - 0.5 * bernoulli_entropy(p_gold)


def js_score(records: Sequence[TokenEvalRecord]) -> float:
    """Mean JS divergence between each model distribution and its one-hot gold."""
    require_records(records)
    return math.fsum(js_to_onehot(r.p_gold) for r in records) / len(records)


def _dense(dist: Distribution | np.ndarray) -> np.ndarray:
    return dist.dense() if isinstance(dist, Distribution) else np.asarray(dist, dtype=np.float64)


def js_divergence(p: Distribution | np.ndarray, q: Distribution | np.ndarray) -> float:
    """Pairwise JS by direct mixture KL: ½KL(p‖m) + ½KL(q‖m)."""
    pd, qd = _dense(p), _dense(q)
    if pd.shape != qd.shape:
        raise ValueError(f"Vocabulary mismatch: {pd.size} vs {qd.size}")
    m = 0.5 * (pd + qd)
    return 0.5 * float(rel_entr(pd, m).sum()) + 0.5 * float(rel_entr(qd, m).sum())


def js_mutual_information(p: Distribution | np.ndarray, q: Distribution | np.ndarray) -> float:
    """JS as H(B) - H(B | X) where a fair coin B picks p or q and X is drawn from it."""
    pd, qd = _dense(p), _dense(q)
    if pd.shape != qd.shape:
        raise ValueError(f"Vocabulary mismatch: {pd.size} vs {qd.size}")
    m = 0.5 * (pd + qd)
    with np.errstate(divide="ignore", invalid="ignore"):
        posterior = np.where(m > 0, 0.5 * pd / m, 0.5)
    conditional = float(np.sum(m * (entr(posterior) + entr(1.0 - posterior))))
    return LN2 - conditional


def generalized_js(dists: Sequence[Distribution]) -> float:
    """(1/K) Σ_k KL(p^k ‖ m) with m the mean of the K distributions."""
    if len(dists) < 2:
        raise ValueError(f"generalized JS needs at least two distributions, got {len(dists)}")
    sizes = {d.vocab_size for d in dists}
    if len(sizes) != 1:
        raise ValueError(f"Vocabulary mismatch: {sorted(sizes)}")
    stack = np.stack([d.dense() for d in dists])
    m = stack.mean(axis=0)
    return float(rel_entr(stack, m).sum(axis=1).mean())


def rank_disagreements(positions: Sequence[Sequence[Distribution]]) -> list[tuple[int, float]]:
    """Positions ordered by how much K models disagree (generalized JS, descending)."""
    scored = [(i, generalized_js(dists)) for i, dists in enumerate(positions)]
    return sorted(scored, key=lambda item: (-item[1], item[0]))

"""Perplexity, epsilon-perplexity and the convex search for the best epsilon.

epsilon-perplexity smooths every gold probability additively and renormalizes:

    eps_ppl = exp(-mean_t log((p_t + eps) / (1 + eps * V)))

With lambda = eps * V / (1 + eps * V) the mean log-loss becomes

    F(lambda) = -mean_t log(a_t * lambda + b_t),   a_t = 1/V - p_t,  b_t = p_t,

which is convex on [0, 1]; the best epsilon comes from minimizing F there.
"""

from __future__ import annotations

import logging
import math
from dataclasses import dataclass
from typing import Sequence

import numpy as np

from src.metrics.records import TokenEvalRecord, gold_probs, vocab_size_of

logger = logging.getLogger(__name__)

STEP_SIZE = 0.1
MAX_ITERS = 10_000
UPDATE_TOL = 1e-10


@dataclass(frozen=True)
class OptimalEpsilon:
    eps_star: float
    lambda_star: float
    objective: float

    @property
    def eps_ppl(self) -> float:
        """epsilon-perplexity at the optimum (finite even when eps_star is infinite)."""
        return math.exp(self.objective)


def _mean_neg_log(values: np.ndarray) -> float:
    if np.any(values <= 0):
        return math.inf
    return -math.fsum(np.log(values)) / values.size


def perplexity(records: Sequence[TokenEvalRecord]) -> float:
    """exp of the mean negative log gold probability; +inf if any gold token has zero mass."""
    probs = gold_probs(records)
    nll = _mean_neg_log(probs)
    return math.inf if math.isinf(nll) else math.exp(nll)


def epsilon_perplexity(records: Sequence[TokenEvalRecord], epsilon: float) -> float:
    if not epsilon >= 0:
        raise ValueError(f"epsilon must be >= 0, got {epsilon}")
    if math.isinf(epsilon):
        return float(vocab_size_of(records))
    probs = gold_probs(records)
    vocab_size = vocab_size_of(records)
    nll = _mean_neg_log((probs + epsilon) / (1.0 + epsilon * vocab_size))
    return math.inf if math.isinf(nll) else math.exp(nll)


def smoothing_objective(lam: float, p: np.ndarray, vocab_size: int) -> float:
    """F(lambda), the mean negative log-likelihood of the lambda-smoothed gold probabilities."""
    a = 1.0 / vocab_size - p
    return _mean_neg_log(a * lam + p)


def _objective_slope(lam: float, a: np.ndarray, b: np.ndarray) -> float:
    with np.errstate(divide="ignore"):
        return float(-np.mean(a / (a * lam + b)))


def lambda_to_epsilon(lam: float, vocab_size: int) -> float:
    if lam >= 1.0:
        return math.inf
    return lam / (vocab_size * (1.0 - lam))


def optimal_epsilon(records: Sequence[TokenEvalRecord], step_size: float = STEP_SIZE) -> OptimalEpsilon:
    """epsilon minimizing the epsilon-perplexity of *records*.

    Projected gradient on lambda from 0.5, halving the step whenever it would
    increase F; stops when an update moves lambda by less than 1e-10. The
    boundaries are settled first from the sign of F' there.
    """
    p = gold_probs(records)
    vocab_size = vocab_size_of(records)
    a = 1.0 / vocab_size - p
    b = p

    def result(lam: float) -> OptimalEpsilon:
        return OptimalEpsilon(lambda_to_epsilon(lam, vocab_size), lam, smoothing_objective(lam, p, vocab_size))

    if _objective_slope(1.0, a, b) <= 0:
        return result(1.0)
    if np.all(b > 0) and _objective_slope(0.0, a, b) >= 0:
        return result(0.0)

    lam = 0.5
    f_lam = smoothing_objective(lam, p, vocab_size)
    for it in range(MAX_ITERS):
        grad = _objective_slope(lam, a, b)
        step = step_size
        while True:
            cand = min(1.0, max(0.0, lam - step * grad))
            f_cand = smoothing_objective(cand, p, vocab_size)
            if f_cand <= f_lam or step < 1e-300:
                break
            step *= 0.5
        moved = abs(cand - lam)
        lam, f_lam = cand, f_cand
        if moved < UPDATE_TOL:
            logger.debug("optimal epsilon converged after %d iterations (lambda=%.10f)", it + 1, lam)
            break
    else:
        logger.warning("optimal epsilon hit the iteration cap; lambda=%.10f", lam)
    return result(lam)

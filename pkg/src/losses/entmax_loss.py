"""Entmax losses (Fenchel-Young family) with analytic gradients.

    loss(z, x) = (p - e_x)·z + H_alpha(p),    p = entmax(z, alpha)
    grad       = p - e_x

alpha = 1 recovers the negative log-likelihood and alpha = 2 the sparsemax loss.
For alpha > 1 the loss is zero exactly when z_x beats every other score by at
least 1 / (alpha - 1).
"""

from __future__ import annotations

import math
from dataclasses import dataclass
from typing import Sequence

import numpy as np

from src.transforms.distribution import EntmaxParams, as_scores
from src.transforms.entmax import entmax, tsallis_entropy


@dataclass(frozen=True, eq=False)
class LossValue:
    value: float
    grad: np.ndarray
    # Before clamping at zero; can dip a rounding error below it.
    unclamped: float = 0.0


def _check_target(x: int, vocab_size: int) -> None:
    if not 0 <= x < vocab_size:
        raise ValueError(f"Target id {x} out of range [0, {vocab_size})")


def entmax_loss(
    z: Sequence[float] | np.ndarray,
    x: int,
    alpha: float = 1.5,
    params: EntmaxParams | None = None,
) -> LossValue:
    """alpha-entmax loss of scores *z* against gold token *x*."""
    scores = as_scores(z)
    _check_target(x, scores.size)
    params = params or EntmaxParams(alpha=alpha)
    if params.alpha != alpha:
        params = EntmaxParams(alpha=alpha, tol=params.tol, max_iters=params.max_iters)

    p = entmax(scores, params)
    grad = p.dense()
    grad[x] -= 1.0
    # (p - e_x) sums to zero, so shifting z by its max leaves the inner product unchanged.
    shifted = scores - scores.max()
    value = float(grad @ shifted) + tsallis_entropy(p, alpha)
    return LossValue(max(value, 0.0), grad, value)


def sparsemax_loss(z: Sequence[float] | np.ndarray, x: int) -> LossValue:
    return entmax_loss(z, x, alpha=2.0)


def corpus_loss(
    model_scores: Sequence[Sequence[float] | np.ndarray],
    targets: Sequence[int],
    alpha: float = 1.5,
    params: EntmaxParams | None = None,
) -> float:
    """Sum of per-position entmax losses (compensated summation)."""
    if len(model_scores) != len(targets):
        raise ValueError(f"Length mismatch: {len(model_scores)} score vectors vs {len(targets)} targets")
    return math.fsum(entmax_loss(z, x, alpha, params).value for z, x in zip(model_scores, targets))


def relative_error(a: np.ndarray, b: np.ndarray, floor: float = 1e-6) -> np.ndarray:
    """Elementwise |a - b| / max(|a| + |b|, floor)."""
    a = np.asarray(a, dtype=np.float64)
    b = np.asarray(b, dtype=np.float64)
    return np.abs(a - b) / np.maximum(np.abs(a) + np.abs(b), floor)


def loss_gradient_check(
    z: Sequence[float] | np.ndarray,
    x: int,
    alpha: float,
    h: float = 1e-5,
    params: EntmaxParams | None = None,
) -> float:
    """Max relative error between central differences of the loss and its analytic gradient."""
    scores = as_scores(z)
    analytic = entmax_loss(scores, x, alpha, params).grad
    numeric = np.empty_like(scores)
    for i in range(scores.size):
        step = np.zeros_like(scores)
        step[i] = h
        up = entmax_loss(scores + step, x, alpha, params).value
        down = entmax_loss(scores - step, x, alpha, params).value
        numeric[i] = (up - down) / (2 * h)
    return float(relative_error(numeric, analytic).max())

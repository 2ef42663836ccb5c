"""Score-to-probability transforms: softmax, sparsemax and alpha-entmax.

alpha-entmax maps scores z to

    argmax_p  p·z + H_alpha(p)   over the simplex,

with H_alpha the Tsallis entropy. alpha = 1 is softmax, alpha = 2 is
sparsemax and alpha -> inf approaches argmax. For alpha > 1 the solution is
p_i = [(alpha - 1) z_i - tau]_+ ** (1 / (alpha - 1)), and tau is found by
bisection on the normalization residual.
"""

from __future__ import annotations

import logging
from typing import Sequence

import numpy as np
from scipy.special import entr, softmax as _softmax

from src.transforms.distribution import ZERO_THRESHOLD, Distribution, EntmaxParams, as_scores

logger = logging.getLogger(__name__)


class EntmaxConvergenceError(RuntimeError):
    """Bisection for the entmax threshold did not reach the residual tolerance."""

    def __init__(self, iterations: int, residual: float, alpha: float):
        self.iterations = iterations
        self.residual = residual
        self.alpha = alpha
        super().__init__(
            f"entmax bisection (alpha={alpha}) did not converge after {iterations} "
            f"iterations; normalization residual {residual:.3e}"
        )


def softmax(z: Sequence[float] | np.ndarray, temperature: float = 1.0) -> Distribution:
    """Softmax of ``z / temperature`` (max-subtracted for stability).

    The support is full except where ``exp`` underflows: an entry more than
    about 745 nats below the maximum gets probability 0.0 and is left out.
    """
    if not temperature > 0:
        raise ValueError(f"temperature must be > 0, got {temperature}")
    scores = as_scores(z)
    return Distribution.from_dense(_softmax(scores / temperature), threshold=0.0)


def argmax_distribution(z: Sequence[float] | np.ndarray) -> Distribution:
    """One-hot distribution at the highest score; ties go to the lowest id."""
    scores = as_scores(z)
    return Distribution.one_hot(int(np.argmax(scores)), scores.size)


def tsallis_entropy(p: Distribution | Sequence[float] | np.ndarray, alpha: float) -> float:
    """Tsallis alpha-entropy; Shannon (nats) at alpha = 1, Gini at alpha = 2."""
    if not alpha >= 1:
        raise ValueError(f"alpha must be >= 1, got {alpha}")
    probs = p.probs if isinstance(p, Distribution) else np.asarray(p, dtype=np.float64)
    if alpha == 1:
        return float(entr(probs).sum())
    return float((probs - probs**alpha).sum() / (alpha * (alpha - 1)))


def sparsemax_rows(scores: np.ndarray) -> np.ndarray:
    """Row-wise sort-and-threshold projection of a 2-D score array onto the simplex."""
    u = np.sort(scores, axis=1)[:, ::-1]
    cssv = np.cumsum(u, axis=1) - 1.0
    ind = np.arange(1, scores.shape[1] + 1)
    rho = np.count_nonzero(u - cssv / ind > 0, axis=1)
    theta = cssv[np.arange(scores.shape[0]), rho - 1] / rho
    return np.maximum(scores - theta[:, np.newaxis], 0.0)


def sparsemax(z: Sequence[float] | np.ndarray) -> Distribution:
    """Exact Euclidean projection of ``z`` onto the probability simplex."""
    scores = as_scores(z)
    return Distribution.from_dense(sparsemax_rows(scores[np.newaxis, :])[0], threshold=0.0)


def entmax_bisect_rows(
    scores: np.ndarray,
    alpha: float,
    tol: float = 1e-8,
    max_iters: int = 100,
) -> np.ndarray:
    """Row-wise alpha-entmax (alpha > 1) of a 2-D score array by bisection on tau.

    The bracket [(alpha - 1) max(z) - 1, (alpha - 1) max(z)] always contains the
    root: the top entry alone has mass 1 at the lower end and nothing has mass at
    the upper end. Entries below ``ZERO_THRESHOLD`` become exact zeros and every
    row is renormalized.
    """
    if not alpha > 1:
        raise ValueError(f"bisection needs alpha > 1, got {alpha}")
    x = (alpha - 1.0) * np.asarray(scores, dtype=np.float64)
    n_rows = x.shape[0]
    power = 1.0 / (alpha - 1.0)

    tau_hi = x.max(axis=1)
    tau_lo = tau_hi - 1.0
    out = np.zeros_like(x)
    residual = np.full(n_rows, np.inf)
    pending = np.ones(n_rows, dtype=bool)

    iterations = 0
    for iterations in range(1, max_iters + 1):
        rows = np.flatnonzero(pending)
        tau_m = 0.5 * (tau_lo[rows] + tau_hi[rows])
        p_m = np.clip(x[rows] - tau_m[:, np.newaxis], 0.0, None) ** power
        f_m = p_m.sum(axis=1) - 1.0
        residual[rows] = np.abs(f_m)

        above = f_m >= 0
        tau_lo[rows] = np.where(above, tau_m, tau_lo[rows])
        tau_hi[rows] = np.where(above, tau_hi[rows], tau_m)

        done = np.abs(f_m) < tol
        out[rows[done]] = p_m[done]
        pending[rows[done]] = False
        if not pending.any():
            break

    if pending.any():
        worst = float(residual[pending].max())
        logger.debug("entmax bisection stalled on %d rows, residual %.3e", int(pending.sum()), worst)
        raise EntmaxConvergenceError(iterations, worst, alpha)

    out[out < ZERO_THRESHOLD] = 0.0
    return out / out.sum(axis=1, keepdims=True)


def entmax_rows(scores: np.ndarray, params: EntmaxParams) -> np.ndarray:
    """Dense row-wise entmax of a 2-D score array (softmax when alpha = 1)."""
    scores = np.asarray(scores, dtype=np.float64)
    if params.alpha == 1:
        return _softmax(scores, axis=1)
    return entmax_bisect_rows(scores, params.alpha, params.tol, params.max_iters)


def entmax(z: Sequence[float] | np.ndarray, params: EntmaxParams | None = None) -> Distribution:
    """alpha-entmax of a score vector as a (possibly sparse) distribution."""
    params = params or EntmaxParams()
    scores = as_scores(z)
    if params.alpha == 1:
        return softmax(scores, 1.0)
    dense = entmax_bisect_rows(scores[np.newaxis, :], params.alpha, params.tol, params.max_iters)[0]
    return Distribution.from_dense(dense)


def entmax15(z: Sequence[float] | np.ndarray) -> Distribution:
    return entmax(z, EntmaxParams(alpha=1.5))

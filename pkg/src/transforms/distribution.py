"""Score vectors and (possibly sparse) categorical distributions."""

from __future__ import annotations

from dataclasses import dataclass
from typing import Sequence

import numpy as np

# Probabilities below this are treated as exact zeros and dropped from the support.
ZERO_THRESHOLD = 1e-12
SUM_TOLERANCE = 1e-9


def as_scores(z: Sequence[float] | np.ndarray) -> np.ndarray:
    """Validate a score vector and return it as a float64 array."""
    arr = np.asarray(z, dtype=np.float64)
    if arr.ndim != 1:
        raise ValueError(f"Score vector must be one-dimensional, got shape {arr.shape}")
    if arr.size < 1:
        raise ValueError("Score vector must have at least one entry")
    if not np.all(np.isfinite(arr)):
        raise ValueError("Score vector contains non-finite entries")
    return arr


@dataclass(frozen=True, eq=False)
class Distribution:
    """Categorical distribution stored by its support.

    ``support`` holds strictly increasing token ids and ``probs`` the strictly
    positive mass of each; tokens outside the support have probability zero.
    """

    support: np.ndarray
    probs: np.ndarray
    vocab_size: int

    def __post_init__(self) -> None:
        support = np.asarray(self.support, dtype=np.int64)
        probs = np.asarray(self.probs, dtype=np.float64)
        object.__setattr__(self, "support", support)
        object.__setattr__(self, "probs", probs)
        if self.vocab_size < 1:
            raise ValueError(f"vocab_size must be >= 1, got {self.vocab_size}")
        if support.ndim != 1 or support.shape != probs.shape:
            raise ValueError("support and probs must be 1-D arrays of equal length")
        if support.size == 0:
            raise ValueError("Distribution support is empty")
        if np.any(np.diff(support) <= 0):
            raise ValueError("Support ids must be unique and strictly increasing")
        if support[0] < 0 or support[-1] >= self.vocab_size:
            raise ValueError(f"Support ids must lie in [0, {self.vocab_size})")
        if not np.all(probs > 0):
            raise ValueError("Probabilities on the support must be strictly positive")
        total = float(probs.sum())
        if abs(total - 1.0) > SUM_TOLERANCE:
            raise ValueError(f"Probabilities sum to {total}, not 1")

    @classmethod
    def from_dense(cls, p: Sequence[float] | np.ndarray, threshold: float = ZERO_THRESHOLD) -> "Distribution":
        """Build a distribution from a dense vector, dropping tiny entries and renormalizing."""
        dense = np.asarray(p, dtype=np.float64)
        if dense.ndim != 1 or dense.size == 0:
            raise ValueError("Dense probability vector must be 1-D and non-empty")
        if not np.all(np.isfinite(dense)) or np.any(dense < 0):
            raise ValueError("Dense probability vector must be finite and non-negative")
        keep = dense > 0
        if threshold > 0:
            keep &= dense >= threshold
        support = np.flatnonzero(keep)
        if support.size == 0:
            raise ValueError("Dense probability vector has no mass above the zero threshold")
        probs = dense[support]
        return cls(support, probs / probs.sum(), dense.size)

    @classmethod
    def one_hot(cls, token_id: int, vocab_size: int) -> "Distribution":
        return cls(np.array([token_id]), np.array([1.0]), vocab_size)

    @classmethod
    def uniform(cls, vocab_size: int) -> "Distribution":
        return cls(np.arange(vocab_size), np.full(vocab_size, 1.0 / vocab_size), vocab_size)

    @property
    def size(self) -> int:
        """Number of tokens with non-zero probability."""
        return int(self.support.size)

    def dense(self) -> np.ndarray:
        out = np.zeros(self.vocab_size, dtype=np.float64)
        out[self.support] = self.probs
        return out

    def prob(self, token_id: int) -> float:
        if not 0 <= token_id < self.vocab_size:
            raise ValueError(f"Token id {token_id} out of range [0, {self.vocab_size})")
        i = int(np.searchsorted(self.support, token_id))
        if i < self.support.size and self.support[i] == token_id:
            return float(self.probs[i])
        return 0.0

    def ranked(self) -> tuple[np.ndarray, np.ndarray]:
        """Support ids and probabilities by descending probability, ties to the lower id."""
        order = np.lexsort((self.support, -self.probs))
        return self.support[order], self.probs[order]

    def restrict(self, token_ids: np.ndarray) -> "Distribution":
        """Keep only *token_ids* (a subset of the support) and renormalize."""
        keep = np.sort(np.asarray(token_ids, dtype=np.int64))
        idx = np.searchsorted(self.support, keep)
        probs = self.probs[idx]
        return Distribution(keep, probs / probs.sum(), self.vocab_size)


@dataclass(frozen=True)
class EntmaxParams:
    alpha: float = 1.5
    tol: float = 1e-8
    max_iters: int = 100

    def __post_init__(self) -> None:
        if not self.alpha >= 1:
            raise ValueError(f"alpha must be >= 1, got {self.alpha}")
        if not self.tol > 0:
            raise ValueError(f"tol must be > 0, got {self.tol}")
        if self.max_iters < 1:
            raise ValueError(f"max_iters must be >= 1, got {self.max_iters}")

"""Feedforward n-gram language model (embeddings -> tanh hidden layer -> scores).

    x = concat(E[c_1], ..., E[c_C])      (C * d)
    a = x @ W1 + b1,  h = tanh(a)        (hidden)
    z = h @ W2 + b2                      (V scores)

Gradients are backpropagated by hand; at the score layer the entmax-loss
gradient is p - e_gold.
"""

from __future__ import annotations

import math
from dataclasses import dataclass
from typing import Sequence

import numpy as np
from scipy.special import entr

from src.data.tokens import Vocabulary
from src.sampling.generation import make_rng, pad_context
from src.transforms.distribution import EntmaxParams
from src.transforms.entmax import entmax_rows

PARAM_NAMES = ("E", "W1", "b1", "W2", "b2")
INIT_SCALE = 0.05


@dataclass(frozen=True, eq=False)
class ModelParams:
    vocab: Vocabulary
    context_window: int
    embed_dim: int
    hidden_dim: int
    E: np.ndarray
    W1: np.ndarray
    b1: np.ndarray
    W2: np.ndarray
    b2: np.ndarray

    def __post_init__(self) -> None:
        if min(self.context_window, self.embed_dim, self.hidden_dim) < 1:
            raise ValueError("context_window, embed_dim and hidden_dim must be positive")
        for name, shape in self.shapes().items():
            arr = getattr(self, name)
            if arr.shape != shape:
                raise ValueError(f"{name} has shape {arr.shape}, expected {shape}")
            if not np.all(np.isfinite(arr)):
                raise ValueError(f"{name} contains non-finite weights")

    def shapes(self) -> dict[str, tuple[int, ...]]:
        v, c, d, h = len(self.vocab), self.context_window, self.embed_dim, self.hidden_dim
        return {"E": (v, d), "W1": (c * d, h), "b1": (h,), "W2": (h, v), "b2": (v,)}

    def arrays(self) -> dict[str, np.ndarray]:
        return {name: getattr(self, name) for name in PARAM_NAMES}

    def with_arrays(self, arrays: dict[str, np.ndarray]) -> "ModelParams":
        return ModelParams(
            self.vocab, self.context_window, self.embed_dim, self.hidden_dim,
            *(np.array(arrays[name], dtype=np.float64) for name in PARAM_NAMES),
        )

    # Generation protocol.
    @property
    def vocab_size(self) -> int:
        return len(self.vocab)

    @property
    def start_id(self) -> int:
        return self.vocab.start_id

    @property
    def eos_id(self) -> int:
        return self.vocab.stop_id

    def scores(self, context: Sequence[int]) -> np.ndarray:
        return forward(self, context)


def init_params(vocab: Vocabulary, context_window: int, embed_dim: int, hidden_dim: int, seed: int) -> ModelParams:
    """Uniform [-0.05, 0.05] initialization from the seeded generator."""
    rng = make_rng(seed)
    v, c, d, h = len(vocab), context_window, embed_dim, hidden_dim
    shapes = {"E": (v, d), "W1": (c * d, h), "b1": (h,), "W2": (h, v), "b2": (v,)}
    arrays = {name: rng.uniform(-INIT_SCALE, INIT_SCALE, size=shapes[name]) for name in PARAM_NAMES}
    return ModelParams(vocab, c, d, h, *(arrays[name] for name in PARAM_NAMES))


def zero_params(vocab: Vocabulary, context_window: int, embed_dim: int, hidden_dim: int) -> ModelParams:
    v, c, d, h = len(vocab), context_window, embed_dim, hidden_dim
    return ModelParams(
        vocab, c, d, h,
        np.zeros((v, d)), np.zeros((c * d, h)), np.zeros(h), np.zeros((h, v)), np.zeros(v),
    )


def _check_contexts(params: ModelParams, contexts: np.ndarray) -> np.ndarray:
    contexts = np.asarray(contexts, dtype=np.int64)
    if contexts.ndim != 2 or contexts.shape[1] != params.context_window:
        raise ValueError(f"Contexts must have shape (n, {params.context_window}), got {contexts.shape}")
    if contexts.size and (contexts.min() < 0 or contexts.max() >= params.vocab_size):
        raise ValueError(f"Context token id out of vocabulary of size {params.vocab_size}")
    return contexts


def _forward_batch(params: ModelParams, contexts: np.ndarray) -> tuple[np.ndarray, np.ndarray, np.ndarray]:
    x = params.E[contexts].reshape(contexts.shape[0], -1)
    hidden = np.tanh(x @ params.W1 + params.b1)
    return x, hidden, hidden @ params.W2 + params.b2


def forward_batch(params: ModelParams, contexts: np.ndarray) -> np.ndarray:
    """Score matrix (n, V) for n contexts of exactly C token ids each."""
    return _forward_batch(params, _check_contexts(params, contexts))[2]


def forward(params: ModelParams, context: Sequence[int]) -> np.ndarray:
    """Score vector for one context, left-padded with <s> (or cut) to the model window."""
    window = pad_context(list(context), params.context_window, params.start_id)
    return forward_batch(params, np.array([window]))[0]


def context_windows(ids: Sequence[int], window: int, start_id: int) -> np.ndarray:
    """Context for predicting each position of *ids*: the preceding tokens, left-padded."""
    ids = list(ids)
    return np.array([pad_context(ids[:t], window, start_id) for t in range(len(ids))], dtype=np.int64).reshape(
        len(ids), window
    )


def _row_losses(z: np.ndarray, p: np.ndarray, golds: np.ndarray, alpha: float) -> tuple[np.ndarray, np.ndarray]:
    g = p.copy()
    g[np.arange(golds.size), golds] -= 1.0
    shifted = z - z.max(axis=1, keepdims=True)
    if alpha == 1:
        entropy = entr(p).sum(axis=1)
    else:
        entropy = (p - p**alpha).sum(axis=1) / (alpha * (alpha - 1))
    return np.maximum((g * shifted).sum(axis=1) + entropy, 0.0), g


def loss_and_grads(
    params: ModelParams,
    contexts: np.ndarray,
    golds: Sequence[int],
    alpha: float,
    entmax_params: EntmaxParams | None = None,
) -> tuple[float, dict[str, np.ndarray]]:
    """Mean entmax loss over the batch and its gradient for every parameter array."""
    contexts = _check_contexts(params, contexts)
    golds = np.asarray(golds, dtype=np.int64)
    if golds.shape != (contexts.shape[0],):
        raise ValueError(f"Expected {contexts.shape[0]} gold ids, got {golds.shape}")
    if golds.size and (golds.min() < 0 or golds.max() >= params.vocab_size):
        raise ValueError(f"Gold token id out of vocabulary of size {params.vocab_size}")
    ep = entmax_params or EntmaxParams(alpha=alpha)
    if ep.alpha != alpha:
        ep = EntmaxParams(alpha=alpha, tol=ep.tol, max_iters=ep.max_iters)

    n = contexts.shape[0]
    x, hidden, z = _forward_batch(params, contexts)
    p = entmax_rows(z, ep)
    losses, dz = _row_losses(z, p, golds, alpha)
    dz /= n

    d_hidden = dz @ params.W2.T
    da = d_hidden * (1.0 - hidden**2)
    dx = (da @ params.W1.T).reshape(n, params.context_window, params.embed_dim)
    d_embed = np.zeros_like(params.E)
    np.add.at(d_embed, contexts, dx)
    grads = {
        "E": d_embed,
        "W1": x.T @ da,
        "b1": da.sum(axis=0),
        "W2": hidden.T @ dz,
        "b2": dz.sum(axis=0),
    }
    return float(losses.mean()), grads


def mean_loss(
    params: ModelParams,
    contexts: np.ndarray,
    golds: Sequence[int],
    alpha: float,
    entmax_params: EntmaxParams | None = None,
) -> float:
    """Mean entmax loss without the backward pass."""
    contexts = _check_contexts(params, contexts)
    golds = np.asarray(golds, dtype=np.int64)
    ep = entmax_params or EntmaxParams(alpha=alpha)
    z = _forward_batch(params, contexts)[2]
    with np.errstate(all="ignore"):
        if not np.all(np.isfinite(z)):
            return math.inf
        losses, _ = _row_losses(z, entmax_rows(z, ep), golds, alpha)
    return float(losses.mean())

"""Seeded categorical sampling and autoregressive generation."""

from __future__ import annotations

import logging
from dataclasses import dataclass
from typing import Protocol, Sequence

import numpy as np

from src.data.tokens import TokenSequence, from_ids
from src.sampling.decoders import DecoderConfig, next_token_distribution
from src.transforms.distribution import Distribution

logger = logging.getLogger(__name__)


class LanguageModel(Protocol):
    """What generation needs from a model."""

    @property
    def vocab_size(self) -> int: ...

    @property
    def context_window(self) -> int: ...

    @property
    def start_id(self) -> int: ...

    @property
    def eos_id(self) -> int: ...

    def scores(self, context: Sequence[int]) -> np.ndarray: ...


@dataclass(frozen=True)
class GeneratedSequence:
    tokens: TokenSequence
    support_sizes: tuple[int, ...]


def make_rng(seed: int) -> np.random.Generator:
    """Portable seeded generator: the same seed gives the same stream on every platform."""
    return np.random.Generator(np.random.PCG64(seed))


def sample(p: Distribution, rng: np.random.Generator) -> int:
    """Inverse-CDF draw over the support in id order."""
    cdf = np.cumsum(p.probs)
    u = rng.random() * cdf[-1]
    i = int(np.searchsorted(cdf, u, side="right"))
    return int(p.support[min(i, p.size - 1)])


def pad_context(history: Sequence[int], window: int, start_id: int) -> list[int]:
    """Last *window* tokens of *history*, left-padded with the start token."""
    tail = list(history[-window:]) if window else []
    return [start_id] * (window - len(tail)) + tail


def generate(model: LanguageModel, context: TokenSequence, config: DecoderConfig) -> GeneratedSequence:
    """Decode up to ``config.max_len`` tokens after *context*, stopping at end-of-sequence.

    Contexts longer than the model window are truncated from the left. The
    end-of-sequence token is emitted as the last token when drawn.
    """
    if len(context.vocab) != model.vocab_size:
        raise ValueError(
            f"Context vocabulary size {len(context.vocab)} does not match model vocabulary {model.vocab_size}"
        )
    if len(context) > model.context_window:
        logger.debug("context of %d tokens truncated to window %d", len(context), model.context_window)

    rng = make_rng(config.seed)
    history = list(context.ids)
    emitted: list[int] = []
    sizes: list[int] = []
    for _ in range(config.max_len):
        z = model.scores(pad_context(history, model.context_window, model.start_id))
        dist = next_token_distribution(z, config)
        token = sample(dist, rng)
        emitted.append(token)
        sizes.append(dist.size)
        history.append(token)
        if token == model.eos_id:
            break
    return GeneratedSequence(from_ids(emitted, context.vocab), tuple(sizes))

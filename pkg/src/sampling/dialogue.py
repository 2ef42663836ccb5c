"""Self-play dialogue: two agents backed by the same model take turns.

A conversation starts from an opening utterance. Each agent answers with up
to ``utterance_len`` tokens, conditioned on everything said so far (turns
separated by end-of-sequence). The conversation ends when

    an answer overlaps the previous utterance by ``overlap_threshold`` or more,
    an agent answers with nothing, or
    ``max_utterances`` utterances (opening included) have been said.
"""

from __future__ import annotations

import dataclasses
import logging
import math
from collections import Counter
from dataclasses import dataclass
from typing import Sequence

from src.data.tokens import TokenSequence, from_ids
from src.metrics.repetition import corpus_distinct_n, unique_tokens
from src.sampling.decoders import DecoderConfig
from src.sampling.generation import LanguageModel, generate, make_rng

logger = logging.getLogger(__name__)

STOP_REASONS = ("overlap", "empty", "max_utterances")


def utterance_overlap(a: Sequence[int], b: Sequence[int]) -> float:
    """Shared tokens (with multiplicity) over the length of the longer utterance."""
    longest = max(len(a), len(b))
    if longest == 0:
        return 0.0
    return sum((Counter(a) & Counter(b)).values()) / longest


@dataclass(frozen=True)
class DialogueResult:
    opening: tuple[int, ...]
    utterances: tuple[tuple[int, ...], ...]
    stop_reason: str

    def __post_init__(self) -> None:
        if self.stop_reason not in STOP_REASONS:
            raise ValueError(f"Unknown stop reason: {self.stop_reason}")

    @property
    def length(self) -> int:
        """Utterances in the conversation, the opening included."""
        return 1 + len(self.utterances)


def simulate_dialogue(
    model: LanguageModel,
    opening: TokenSequence,
    config: DecoderConfig,
    max_utterances: int = 20,
    overlap_threshold: float = 0.8,
    utterance_len: int = 20,
) -> DialogueResult:
    """Let two copies of *model* talk, starting from *opening*, until a stop rule fires."""
    if len(opening) == 0:
        raise ValueError("Dialogue opening must contain at least one token")
    if max_utterances < 1:
        raise ValueError(f"max_utterances must be >= 1, got {max_utterances}")
    if not 0 < overlap_threshold <= 1:
        raise ValueError(f"overlap_threshold must be in (0, 1], got {overlap_threshold}")
    if utterance_len < 1:
        raise ValueError(f"utterance_len must be >= 1, got {utterance_len}")

    turn_seeds = make_rng(config.seed).integers(2**63, size=max_utterances)
    previous = tuple(opening.ids)
    history = list(previous) + [model.eos_id]
    utterances: list[tuple[int, ...]] = []
    stop_reason = "max_utterances"
    while 1 + len(utterances) < max_utterances:
        turn = dataclasses.replace(config, max_len=utterance_len, seed=int(turn_seeds[len(utterances)]))
        emitted = list(generate(model, from_ids(history, opening.vocab), turn).tokens.ids)
        if emitted and emitted[-1] == model.eos_id:
            emitted.pop()
        if not emitted:
            stop_reason = "empty"
            break
        utterance = tuple(emitted)
        utterances.append(utterance)
        history.extend(utterance)
        history.append(model.eos_id)
        if utterance_overlap(utterance, previous) >= overlap_threshold:
            stop_reason = "overlap"
            break
        previous = utterance

    logger.debug("dialogue stopped after %d utterances (%s)", 1 + len(utterances), stop_reason)
    return DialogueResult(tuple(opening.ids), tuple(utterances), stop_reason)


def dialogue_statistics(results: Sequence[DialogueResult]) -> dict[str, float]:
    """Mean length, unique words and distinct-1 / distinct-2 of the generated utterances.

    Distinct-n counts the n-grams of each conversation's generated turns read
    back to back; openings are left out of every count but the length.
    """
    if not results:
        raise ValueError("No dialogues to summarize")
    conversations = [[t for u in r.utterances for t in u] for r in results]
    return {
        "length": math.fsum(r.length for r in results) / len(results),
        "unique_words": unique_tokens(conversations),
        "distinct_1": corpus_distinct_n(conversations, 1),
        "distinct_2": corpus_distinct_n(conversations, 2),
    }

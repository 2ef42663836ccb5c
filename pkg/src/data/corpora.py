"""Seeded synthetic corpora for training and checking the tiny language model."""

from __future__ import annotations

from src.data.tokens import TokenSequence
from src.sampling.generation import make_rng

# head token -> (continuations, probabilities)
AMBIGUOUS_RULES: dict[str, tuple[tuple[str, ...], tuple[float, ...]]] = {
    "a": (("b",), (1.0,)),
    "x": (("c", "d", "e", "f"), (0.25, 0.25, 0.25, 0.25)),
    "y": (("g", "h", "i"), (0.7, 0.2, 0.1)),
}
DETERMINISTIC_HEADS = ("a",)
UNIFORM_HEADS = ("x",)


def alternating_corpus(n_tokens: int) -> str:
    """Alternating "a b a b ..." text of *n_tokens* tokens."""
    return " ".join("a" if i % 2 == 0 else "b" for i in range(n_tokens))


def ambiguous_corpus(n_segments: int, seed: int = 0) -> str:
    """Two-token segments "head continuation" with heads drawn uniformly.

    After "a" the next token is always "b"; after "x" it is one of four tokens
    with equal probability; after "y" it is "g", "h" or "i" with probabilities
    0.7, 0.2 and 0.1.
    """
    if n_segments < 1:
        raise ValueError(f"n_segments must be >= 1, got {n_segments}")
    rng = make_rng(seed)
    heads = sorted(AMBIGUOUS_RULES)
    tokens: list[str] = []
    for _ in range(n_segments):
        head = heads[int(rng.integers(len(heads)))]
        choices, probs = AMBIGUOUS_RULES[head]
        tokens.append(head)
        tokens.append(choices[int(rng.choice(len(choices), p=probs))])
    return " ".join(tokens)


def split_corpus(corpus: TokenSequence, held_out_fraction: float = 0.2) -> tuple[TokenSequence, TokenSequence]:
    """Leading training slice and trailing held-out slice."""
    if not 0 < held_out_fraction < 1:
        raise ValueError(f"held_out_fraction must lie in (0, 1), got {held_out_fraction}")
    cut = int(round(len(corpus) * (1 - held_out_fraction)))
    return (
        TokenSequence(corpus.ids[:cut], corpus.vocab),
        TokenSequence(corpus.ids[cut:], corpus.vocab),
    )

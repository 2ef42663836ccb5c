"""Vocabularies, token sequences and the whitespace / per-character tokenizers."""

from __future__ import annotations

from dataclasses import dataclass, field
from typing import Iterable, Sequence

START = "<s>"
STOP = "</s>"
UNK = "<unk>"
RESERVED = (START, STOP, UNK)
TOKENIZER_MODES = ("whitespace", "char")


def split_text(text: str, mode: str) -> list[str]:
    if mode == "whitespace":
        return text.split()
    if mode == "char":
        return [c for c in text if c != "\n"]
    raise ValueError(f"Unknown tokenizer mode: {mode} (expected one of {', '.join(TOKENIZER_MODES)})")


@dataclass(frozen=True)
class Vocabulary:
    """Token table; ids 0, 1, 2 are always <s>, </s> and <unk>."""

    tokens: tuple[str, ...]
    mode: str = "whitespace"
    _index: dict[str, int] = field(init=False, repr=False, compare=False)

    def __post_init__(self) -> None:
        if tuple(self.tokens[: len(RESERVED)]) != RESERVED:
            raise ValueError(f"Vocabulary must start with {RESERVED}")
        if len(set(self.tokens)) != len(self.tokens):
            raise ValueError("Vocabulary tokens must be unique")
        if self.mode not in TOKENIZER_MODES:
            raise ValueError(f"Unknown tokenizer mode: {self.mode}")
        object.__setattr__(self, "_index", {t: i for i, t in enumerate(self.tokens)})

    @classmethod
    def build(cls, text: str, mode: str = "whitespace") -> "Vocabulary":
        """Vocabulary of *text* in first-occurrence order after the reserved tokens."""
        seen: dict[str, None] = {}
        for tok in split_text(text, mode):
            if tok not in RESERVED:
                seen.setdefault(tok, None)
        return cls(RESERVED + tuple(seen), mode)

    def __len__(self) -> int:
        return len(self.tokens)

    @property
    def start_id(self) -> int:
        return 0

    @property
    def stop_id(self) -> int:
        return 1

    @property
    def unk_id(self) -> int:
        return 2

    def id_of(self, token: str) -> int:
        return self._index.get(token, self.unk_id)

    def token_of(self, token_id: int) -> str:
        if not 0 <= token_id < len(self.tokens):
            raise ValueError(f"Token id {token_id} out of vocabulary of size {len(self.tokens)}")
        return self.tokens[token_id]


@dataclass(frozen=True)
class TokenSequence:
    ids: tuple[int, ...]
    vocab: Vocabulary

    def __post_init__(self) -> None:
        size = len(self.vocab)
        for i in self.ids:
            if not 0 <= i < size:
                raise ValueError(f"Token id {i} out of vocabulary of size {size}")

    def __len__(self) -> int:
        return len(self.ids)

    def __iter__(self):
        return iter(self.ids)

    def text(self) -> str:
        sep = "" if self.vocab.mode == "char" else " "
        return sep.join(self.vocab.token_of(i) for i in self.ids)


def tokenize(text: str, vocab: Vocabulary) -> TokenSequence:
    """Map *text* to ids; unknown tokens become <unk>."""
    return TokenSequence(tuple(vocab.id_of(t) for t in split_text(text, vocab.mode)), vocab)


def from_ids(ids: Iterable[int], vocab: Vocabulary) -> TokenSequence:
    return TokenSequence(tuple(int(i) for i in ids), vocab)


def sequence_of(tokens: Sequence[str], vocab: Vocabulary) -> TokenSequence:
    return TokenSequence(tuple(vocab.id_of(t) for t in tokens), vocab)

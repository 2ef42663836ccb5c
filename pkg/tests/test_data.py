"""Tests for tokenization and the synthetic corpora."""

from collections import Counter

import pytest
from src.data.corpora import AMBIGUOUS_RULES, alternating_corpus, ambiguous_corpus, split_corpus
from src.data.tokens import RESERVED, TokenSequence, Vocabulary, from_ids, sequence_of, tokenize


def test_reserved_ids():
    vocab = Vocabulary.build("hello world hello")
    assert vocab.tokens[:3] == RESERVED
    assert (vocab.start_id, vocab.stop_id, vocab.unk_id) == (0, 1, 2)
    assert vocab.tokens[3:] == ("hello", "world")


def test_unknown_token_maps_to_unk():
    vocab = Vocabulary.build("a b")
    assert tokenize("a z b", vocab).ids == (3, 2, 4)


def test_char_mode_round_trip():
    vocab = Vocabulary.build("abba\ncab", mode="char")
    seq = tokenize("cab", vocab)
    assert seq.text() == "cab"
    assert len(vocab) == 3 + 3


def test_whitespace_text():
    vocab = Vocabulary.build("the cat sat")
    assert sequence_of(["cat", "sat"], vocab).text() == "cat sat"
    assert from_ids([3, 4], vocab).text() == "the cat"


def test_invalid_vocabulary():
    with pytest.raises(ValueError, match="must start with"):
        Vocabulary(("a", "b"))
    with pytest.raises(ValueError, match="Unknown tokenizer mode"):
        Vocabulary.build("a", mode="bpe")


def test_sequence_rejects_out_of_range_ids():
    vocab = Vocabulary.build("a")
    with pytest.raises(ValueError, match="out of vocabulary"):
        TokenSequence((0, 9), vocab)


def test_alternating_corpus():
    assert alternating_corpus(5) == "a b a b a"


def test_ambiguous_corpus_follows_rules():
    tokens = ambiguous_corpus(3000, seed=1).split()
    assert len(tokens) == 6000
    heads = tokens[0::2]
    follow = Counter(zip(heads, tokens[1::2]))
    for (head, nxt), _ in follow.items():
        assert nxt in AMBIGUOUS_RULES[head][0]
    y_total = sum(n for (h, _), n in follow.items() if h == "y")
    assert follow[("y", "g")] / y_total == pytest.approx(0.7, abs=0.05)


def test_ambiguous_corpus_is_seeded():
    assert ambiguous_corpus(50, seed=3) == ambiguous_corpus(50, seed=3)
    assert ambiguous_corpus(50, seed=3) != ambiguous_corpus(50, seed=4)


def test_split_corpus():
    vocab = Vocabulary.build("a b c d e")
    seq = tokenize("a b c d e a b c d e", vocab)
    train, held_out = split_corpus(seq, 0.2)
    assert len(train) == 8 and len(held_out) == 2
    assert train.ids + held_out.ids == seq.ids
    with pytest.raises(ValueError, match="held_out_fraction"):
        split_corpus(seq, 1.0)

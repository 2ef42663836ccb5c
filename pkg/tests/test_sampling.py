"""Tests for decoding strategies, seeded sampling and generation."""

import numpy as np
import pytest
from scipy.stats import chisquare
from src.data.tokens import Vocabulary, tokenize
from src.sampling.decoders import STRATEGIES, DecoderConfig, next_token_distribution
from src.sampling.dialogue import (
    STOP_REASONS,
    DialogueResult,
    dialogue_statistics,
    simulate_dialogue,
    utterance_overlap,
)
from src.sampling.generation import generate, make_rng, pad_context, sample
from src.tinylm.model import init_params
from src.transforms.distribution import Distribution

VOCAB = Vocabulary.build("the cat sat on a mat")


class FixedModel:
    """Always puts a large score on one token."""

    def __init__(self, token: int, vocab_size: int, context_window: int = 2):
        self.token = token
        self.vocab_size = vocab_size
        self.context_window = context_window
        self.start_id = 0
        self.eos_id = 1
        self.contexts = []

    def scores(self, context):
        self.contexts.append(list(context))
        z = np.zeros(self.vocab_size)
        z[self.token] = 10.0
        return z


# ------------------------------------------------------------------
# DecoderConfig
# ------------------------------------------------------------------


def test_config_validation():
    with pytest.raises(ValueError, match="Unknown strategy"):
        DecoderConfig("beam", 4)
    with pytest.raises(ValueError, match="alpha"):
        DecoderConfig("entmax", 0.5)
    with pytest.raises(ValueError, match="top_p"):
        DecoderConfig("nucleus", 1.2)
    with pytest.raises(ValueError, match="top_k"):
        DecoderConfig("topk", 0)
    with pytest.raises(ValueError, match="seed"):
        DecoderConfig("greedy", seed=-1)


def test_config_from_catalog_fills_default():
    assert DecoderConfig.from_catalog("nucleus").param == 0.95
    assert DecoderConfig.from_catalog("entmax", 1.2).param == 1.2
    assert DecoderConfig("greedy", 3.0).param is None


def test_config_label():
    assert DecoderConfig("temperature", 0.9).label == "Softmax-t (temperature=0.9)"
    assert DecoderConfig("greedy").label == "Greedy"


# ------------------------------------------------------------------
# next_token_distribution
# ------------------------------------------------------------------


def test_greedy_is_argmax():
    p = next_token_distribution([3, 1, 0], DecoderConfig("greedy"))
    assert list(p.support) == [0]


def test_nucleus_on_uniform_scores():
    p = next_token_distribution([0, 0, 0, 0], DecoderConfig("nucleus", 0.5))
    assert list(p.support) == [0, 1]
    np.testing.assert_allclose(p.probs, [0.5, 0.5])


def test_entmax_beyond_margin_is_one_hot():
    p = next_token_distribution([5, 0, 0], DecoderConfig("entmax", 1.5))
    assert list(p.support) == [0]


def test_topk_larger_than_vocab_is_clamped():
    p = next_token_distribution([0.0, 1.0], DecoderConfig("topk", 10))
    assert p.size == 2


def test_support_endpoints():
    rng = np.random.default_rng(0)
    for _ in range(100):
        z = rng.normal(size=50)
        assert next_token_distribution(z, DecoderConfig("greedy")).size == 1
        assert next_token_distribution(z, DecoderConfig("softmax")).size == 50


def test_emitted_token_in_support():
    rng = np.random.default_rng(1)
    draw = make_rng(2)
    configs = [DecoderConfig.from_catalog(s) for s in STRATEGIES]
    for _ in range(1000):
        z = rng.normal(size=30) * 3
        for config in configs:
            p = next_token_distribution(z, config)
            assert p.prob(sample(p, draw)) > 0


# ------------------------------------------------------------------
# sample
# ------------------------------------------------------------------


def test_sample_one_hot():
    rng = make_rng(0)
    p = Distribution.one_hot(3, 5)
    assert all(sample(p, rng) == 3 for _ in range(100))


def test_sample_fair_coin():
    rng = make_rng(42)
    p = Distribution.uniform(2)
    draws = np.array([sample(p, rng) for _ in range(100_000)])
    assert abs(draws.mean() - 0.5) <= 0.01


def test_sample_never_returns_zero_mass_token():
    rng = make_rng(7)
    p = Distribution(np.array([0, 2]), np.array([0.3, 0.7]), 3)
    draws = {sample(p, rng) for _ in range(100_000)}
    assert 1 not in draws


def test_sample_chi_square():
    rng = np.random.default_rng(3)
    for i in range(20):
        v = int(rng.integers(2, 12))
        p = Distribution.from_dense(rng.dirichlet(np.ones(v)))
        draw = make_rng(1000 + i)
        counts = np.bincount([sample(p, draw) for _ in range(100_000)], minlength=v)
        expected = p.dense() * counts.sum()
        assert chisquare(counts, expected).pvalue > 1e-3


def test_same_seed_same_stream():
    a = make_rng(123).random(10)
    b = make_rng(123).random(10)
    np.testing.assert_array_equal(a, b)


# ------------------------------------------------------------------
# generate
# ------------------------------------------------------------------


def test_pad_context():
    assert pad_context([5], 3, 0) == [0, 0, 5]
    assert pad_context([4, 5, 6, 7], 2, 0) == [6, 7]


def test_fixed_model_chain():
    model = FixedModel(token=4, vocab_size=len(VOCAB))
    out = generate(model, tokenize("the", VOCAB), DecoderConfig("entmax", 1.5, max_len=3))
    assert list(out.tokens.ids) == [4, 4, 4]
    assert out.support_sizes == (1, 1, 1)


def test_context_truncated_to_window():
    model = FixedModel(token=4, vocab_size=len(VOCAB), context_window=2)
    generate(model, tokenize("the cat sat on", VOCAB), DecoderConfig("greedy", max_len=1))
    on, sat = VOCAB.id_of("on"), VOCAB.id_of("sat")
    assert model.contexts[0] == [sat, on]


def test_stops_at_end_of_sequence():
    model = FixedModel(token=1, vocab_size=len(VOCAB))
    out = generate(model, tokenize("the", VOCAB), DecoderConfig("greedy", max_len=10))
    assert list(out.tokens.ids) == [1]


def test_vocabulary_mismatch():
    model = FixedModel(token=4, vocab_size=len(VOCAB) + 1)
    with pytest.raises(ValueError, match="does not match"):
        generate(model, tokenize("the", VOCAB), DecoderConfig("greedy"))


@pytest.fixture(scope="module")
def random_model():
    return init_params(VOCAB, 3, 8, 16, seed=11)


def test_generation_is_deterministic(random_model):
    config = DecoderConfig("entmax", 1.5, max_len=20, seed=5)
    a = generate(random_model, tokenize("the cat", VOCAB), config)
    b = generate(random_model, tokenize("the cat", VOCAB), config)
    assert a == b


def test_greedy_ignores_seed(random_model):
    a = generate(random_model, tokenize("the", VOCAB), DecoderConfig("greedy", max_len=10, seed=1))
    b = generate(random_model, tokenize("the", VOCAB), DecoderConfig("greedy", max_len=10, seed=2))
    assert a.tokens.ids == b.tokens.ids


def test_nucleus_full_mass_equals_softmax(random_model):
    context = tokenize("a mat", VOCAB)
    a = generate(random_model, context, DecoderConfig("nucleus", 1.0, max_len=20, seed=9))
    b = generate(random_model, context, DecoderConfig("softmax", max_len=20, seed=9))
    assert a == b


# ------------------------------------------------------------------
# dialogue self-play
# ------------------------------------------------------------------


class SuccessorModel:
    """Answers with the word after the last word it saw, cycling through the vocabulary."""

    def __init__(self, vocab):
        self.vocab_size = len(vocab)
        self.context_window = 2
        self.start_id = vocab.start_id
        self.eos_id = vocab.stop_id
        self.first_word = 3

    def scores(self, context):
        words = [t for t in context if t >= self.first_word]
        n_words = self.vocab_size - self.first_word
        nxt = self.first_word if not words else self.first_word + (words[-1] - self.first_word + 1) % n_words
        z = np.zeros(self.vocab_size)
        z[nxt] = 10.0
        return z


def test_utterance_overlap():
    assert utterance_overlap([1, 2, 3, 4, 5], [1, 2, 3, 4, 9]) == 0.8
    assert utterance_overlap([4, 4, 4], [4, 4, 4]) == 1.0
    assert utterance_overlap([4, 4], [4, 5, 6, 7]) == 0.25
    assert utterance_overlap([], []) == 0.0


def test_dialogue_stops_on_repeated_answer():
    model = FixedModel(token=4, vocab_size=len(VOCAB))
    result = simulate_dialogue(model, tokenize("the cat", VOCAB), DecoderConfig("greedy"), utterance_len=3)
    assert result.utterances == ((4, 4, 4), (4, 4, 4))
    assert result.stop_reason == "overlap"
    assert result.length == 3


def test_dialogue_stops_on_empty_answer():
    model = FixedModel(token=VOCAB.stop_id, vocab_size=len(VOCAB))
    result = simulate_dialogue(model, tokenize("the cat", VOCAB), DecoderConfig("entmax", 1.5))
    assert result.utterances == ()
    assert result.stop_reason == "empty"
    assert result.length == 1


def test_dialogue_stops_at_utterance_limit():
    vocab = Vocabulary.build(" ".join(f"w{i}" for i in range(60)))
    model = SuccessorModel(vocab)
    result = simulate_dialogue(model, tokenize("w0 w1", vocab), DecoderConfig("greedy"), utterance_len=5)
    assert result.stop_reason == "max_utterances"
    assert result.length == 20
    assert all(len(u) == 5 for u in result.utterances)
    assert result.utterances[0] == tuple(vocab.id_of(f"w{i}") for i in range(2, 7))
    short = simulate_dialogue(model, tokenize("w0", vocab), DecoderConfig("greedy"), max_utterances=1)
    assert short.length == 1
    assert short.stop_reason == "max_utterances"


def test_dialogue_overlap_threshold_is_inclusive():
    model = FixedModel(token=4, vocab_size=len(VOCAB))
    # The opening shares 4 of the 5 tokens of the first answer.
    opening = tokenize("cat cat cat cat the", VOCAB)
    assert opening.ids[0] == 4
    result = simulate_dialogue(model, opening, DecoderConfig("greedy"), utterance_len=5, overlap_threshold=0.8)
    assert result.stop_reason == "overlap"
    assert result.length == 2


def test_dialogue_is_deterministic(random_model):
    config = DecoderConfig("entmax", 1.5, seed=3)
    a = simulate_dialogue(random_model, tokenize("the cat", VOCAB), config, utterance_len=6)
    b = simulate_dialogue(random_model, tokenize("the cat", VOCAB), config, utterance_len=6)
    assert a == b
    assert a.stop_reason in STOP_REASONS
    assert 1 <= a.length <= 20


def test_dialogue_validation():
    model = FixedModel(token=4, vocab_size=len(VOCAB))
    with pytest.raises(ValueError, match="at least one token"):
        simulate_dialogue(model, tokenize("", VOCAB), DecoderConfig("greedy"))
    with pytest.raises(ValueError, match="overlap_threshold"):
        simulate_dialogue(model, tokenize("the", VOCAB), DecoderConfig("greedy"), overlap_threshold=0.0)
    with pytest.raises(ValueError, match="max_utterances"):
        simulate_dialogue(model, tokenize("the", VOCAB), DecoderConfig("greedy"), max_utterances=0)


def test_dialogue_statistics():
    results = [
        DialogueResult((3,), ((4, 5), (4, 5)), "overlap"),
        DialogueResult((3,), (), "empty"),
    ]
    stats = dialogue_statistics(results)
    assert stats["length"] == 2.0
    assert stats["unique_words"] == 2
    assert stats["distinct_1"] == 0.5
    assert stats["distinct_2"] == 0.5
    with pytest.raises(ValueError, match="No dialogues"):
        dialogue_statistics([])

"""Tests for the entmax loss family."""

import math

import numpy as np
import pytest
from scipy.special import log_softmax
from src.losses.entmax_loss import corpus_loss, entmax_loss, loss_gradient_check, relative_error, sparsemax_loss
from src.transforms.distribution import EntmaxParams
from src.transforms.entmax import entmax


def test_nll_closed_form():
    loss = entmax_loss([0, 0], 0, alpha=1.0)
    assert loss.value == pytest.approx(math.log(2))
    np.testing.assert_allclose(loss.grad, [-0.5, 0.5])


def test_sparsemax_loss_closed_form():
    loss = sparsemax_loss([0, 0], 0)
    assert loss.value == pytest.approx(0.25)
    np.testing.assert_allclose(loss.grad, [-0.5, 0.5])


def test_zero_loss_beyond_margin():
    loss = entmax_loss([5, 0], 0, alpha=1.5)
    assert loss.value == 0.0
    np.testing.assert_array_equal(loss.grad, [0.0, 0.0])


def test_target_out_of_range():
    with pytest.raises(ValueError, match="out of range"):
        entmax_loss([0, 0], 2)


def test_alpha1_matches_negative_log_softmax():
    rng = np.random.default_rng(0)
    for _ in range(100):
        z = rng.normal(size=20) * 2
        x = int(rng.integers(20))
        assert entmax_loss(z, x, alpha=1.0).value == pytest.approx(-log_softmax(z)[x], abs=1e-6)


def test_gradient_sums_to_zero():
    rng = np.random.default_rng(1)
    for alpha in (1.0, 1.5, 2.0):
        loss = entmax_loss(rng.normal(size=10), 3, alpha=alpha)
        assert abs(loss.grad.sum()) <= 1e-9


def test_gradient_check():
    rng = np.random.default_rng(10)
    errors = []
    for i in range(200):
        alpha = (1.0, 1.3, 1.5, 2.0)[i % 4]
        v = (5, 50)[(i // 4) % 2]
        z = rng.normal(size=v)
        x = int(rng.integers(v))
        errors.append(loss_gradient_check(z, x, alpha, params=EntmaxParams(alpha=alpha, tol=1e-12)))
    assert len(errors) == 200
    assert max(errors) <= 1e-4


@pytest.mark.parametrize("alpha", [1.2, 1.5, 2.0])
def test_separation_margin(alpha):
    rng = np.random.default_rng(int(alpha * 100))
    gap = 1.0 / (alpha - 1.0) + 1e-3
    for _ in range(1000):
        v = int(rng.integers(2, 20))
        z = rng.normal(size=v)
        x = int(rng.integers(v))
        z[x] = np.delete(z, x).max() + gap
        assert entmax_loss(z, x, alpha).value <= 1e-8
        p = entmax(z, EntmaxParams(alpha))
        assert list(p.support) == [x]


def test_loss_is_convex():
    rng = np.random.default_rng(2)
    for _ in range(1000):
        z1, z2 = rng.normal(size=(2, 8)) * 2
        x = int(rng.integers(8))
        mid = entmax_loss((z1 + z2) / 2, x).value
        assert mid <= (entmax_loss(z1, x).value + entmax_loss(z2, x).value) / 2 + 1e-9


def test_non_negative():
    rng = np.random.default_rng(3)
    for alpha in (1.0, 1.5, 2.0, 3.0):
        for _ in range(200):
            z = rng.normal(size=6) * 5
            loss = entmax_loss(z, int(rng.integers(6)), alpha)
            assert loss.unclamped >= -1e-12
            assert loss.value == max(loss.unclamped, 0.0)


def test_clamp_only_touches_rounding_noise():
    loss = entmax_loss([5, 0], 0, alpha=1.5)
    assert loss.value == 0.0
    assert abs(loss.unclamped) <= 1e-12
    loss = entmax_loss([0, 0], 0, alpha=2.0)
    assert loss.unclamped == loss.value == pytest.approx(0.25)


def test_corpus_loss():
    assert corpus_loss([], []) == 0.0
    assert corpus_loss([[0, 0], [0, 0]], [0, 1], alpha=2.0) == pytest.approx(0.5)
    rng = np.random.default_rng(4)
    scores = rng.normal(size=(16, 7))
    targets = [int(t) for t in rng.integers(7, size=16)]
    individual = sum(entmax_loss(z, x).value for z, x in zip(scores, targets))
    assert corpus_loss(scores, targets) == pytest.approx(individual, abs=1e-9)


def test_corpus_loss_length_mismatch():
    with pytest.raises(ValueError, match="Length mismatch"):
        corpus_loss([[0, 0]], [0, 1])


def test_relative_error_floor():
    assert relative_error(np.array([0.0]), np.array([1e-9]))[0] == pytest.approx(1e-3)

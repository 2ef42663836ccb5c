"""Mini-batch gradient descent on the entmax loss, plus an end-to-end gradient check."""

from __future__ import annotations

import logging
import math
from dataclasses import dataclass
from typing import Sequence

import numpy as np

from src.data.tokens import TokenSequence
from src.losses.entmax_loss import relative_error
from src.sampling.generation import make_rng
from src.tinylm.model import PARAM_NAMES, ModelParams, context_windows, init_params, loss_and_grads, mean_loss
from src.transforms.distribution import EntmaxParams

logger = logging.getLogger(__name__)


class TrainingDivergedError(RuntimeError):
    def __init__(self, epoch: int, batch_index: int, loss: float):
        self.epoch = epoch
        self.batch_index = batch_index
        self.loss = loss
        super().__init__(f"non-finite training loss {loss} at epoch {epoch}, batch {batch_index}")


@dataclass(frozen=True)
class TrainConfig:
    alpha: float = 1.5
    learning_rate: float = 0.1
    epochs: int = 30
    seed: int = 0
    batch_size: int = 16
    context_window: int = 3
    embed_dim: int = 16
    hidden_dim: int = 32

    def __post_init__(self) -> None:
        if not self.alpha >= 1:
            raise ValueError(f"alpha must be >= 1, got {self.alpha}")
        if not self.learning_rate >= 0:
            raise ValueError(f"learning_rate must be >= 0, got {self.learning_rate}")
        for name in ("epochs", "batch_size", "context_window", "embed_dim", "hidden_dim"):
            if getattr(self, name) < 1:
                raise ValueError(f"{name} must be >= 1, got {getattr(self, name)}")
        if not 0 <= self.seed <= 2**64 - 1:
            raise ValueError(f"seed must be an unsigned 64-bit integer, got {self.seed}")


@dataclass(frozen=True, eq=False)
class TrainResult:
    params: ModelParams
    epoch_losses: tuple[float, ...]
    step_losses: tuple[float, ...]
    learning_rates: tuple[float, ...] = ()


def train_with_history(
    corpus: TokenSequence,
    config: TrainConfig,
    initial: ModelParams | None = None,
) -> TrainResult:
    """Fit a model to *corpus*; also returns per-epoch and per-step batch losses.

    After every epoch the loss is measured on the whole corpus. An epoch that
    raises it is rolled back and the learning rate halved, so
    ``epoch_losses`` (the corpus loss of the kept parameters) never goes up.
    ``learning_rates`` holds the rate each epoch ran with.
    """
    if len(corpus) <= config.context_window:
        raise ValueError(
            f"Corpus of {len(corpus)} tokens is too short for context window {config.context_window}"
        )
    params = initial or init_params(
        corpus.vocab, config.context_window, config.embed_dim, config.hidden_dim, config.seed
    )
    if params.vocab_size != len(corpus.vocab):
        raise ValueError("Initial parameters and corpus use different vocabularies")

    contexts = context_windows(corpus.ids, params.context_window, params.start_id)
    golds = np.asarray(corpus.ids, dtype=np.int64)
    rng = make_rng(config.seed)
    arrays = {name: arr.copy() for name, arr in params.arrays().items()}
    n = golds.size

    best_loss = math.inf
    best_arrays = {name: arr.copy() for name, arr in arrays.items()}
    learning_rate = config.learning_rate

    epoch_losses: list[float] = []
    step_losses: list[float] = []
    learning_rates: list[float] = []
    for epoch in range(config.epochs):
        order = rng.permutation(n)
        learning_rates.append(learning_rate)
        batch_index = 0
        for batch_index, start in enumerate(range(0, n, config.batch_size)):
            idx = order[start : start + config.batch_size]
            current = params.with_arrays(arrays)
            loss, grads = loss_and_grads(current, contexts[idx], golds[idx], config.alpha)
            if not math.isfinite(loss) or not all(np.all(np.isfinite(g)) for g in grads.values()):
                raise TrainingDivergedError(epoch, batch_index, loss)
            for name in PARAM_NAMES:
                arrays[name] -= learning_rate * grads[name]
            if not all(np.all(np.isfinite(arrays[name])) for name in PARAM_NAMES):
                raise TrainingDivergedError(epoch, batch_index, loss)
            step_losses.append(loss)

        corpus_loss = mean_loss(params.with_arrays(arrays), contexts, golds, config.alpha)
        if not math.isfinite(corpus_loss):
            raise TrainingDivergedError(epoch, batch_index, corpus_loss)
        if corpus_loss <= best_loss:
            best_loss = corpus_loss
            best_arrays = {name: arr.copy() for name, arr in arrays.items()}
        else:
            logger.info(
                "epoch %d raised the loss to %.6f (best %.6f); rolling back, learning rate %g -> %g",
                epoch + 1, corpus_loss, best_loss, learning_rate, learning_rate / 2,
            )
            arrays = {name: arr.copy() for name, arr in best_arrays.items()}
            learning_rate /= 2
        epoch_losses.append(best_loss)
        logger.info("epoch %d/%d  corpus loss %.6f", epoch + 1, config.epochs, best_loss)

    return TrainResult(
        params.with_arrays(best_arrays), tuple(epoch_losses), tuple(step_losses), tuple(learning_rates)
    )


def train(corpus: TokenSequence, config: TrainConfig) -> ModelParams:
    return train_with_history(corpus, config).params


def finite_diff_check(
    params: ModelParams,
    context: Sequence[int],
    gold: int,
    alpha: float,
    n_params: int = 50,
    h: float = 1e-5,
    seed: int = 0,
    entmax_params: EntmaxParams | None = None,
) -> float:
    """Max relative error of backpropagated gradients against central differences.

    Checks *n_params* parameter entries drawn at random across all arrays.
    Bisection runs to a 1e-12 residual unless *entmax_params* says otherwise.
    """
    ep = entmax_params or EntmaxParams(alpha=alpha, tol=1e-12)
    contexts = context_windows(list(context) + [gold], params.context_window, params.start_id)[-1:]
    golds = [gold]
    _, grads = loss_and_grads(params, contexts, golds, alpha, ep)

    rng = make_rng(seed)
    sizes = np.array([getattr(params, name).size for name in PARAM_NAMES])
    flat_choices = rng.choice(int(sizes.sum()), size=min(n_params, int(sizes.sum())), replace=False)
    offsets = np.concatenate([[0], np.cumsum(sizes)])

    numeric: list[float] = []
    analytic: list[float] = []
    for flat in flat_choices:
        k = int(np.searchsorted(offsets, flat, side="right")) - 1
        name = PARAM_NAMES[k]
        pos = np.unravel_index(int(flat - offsets[k]), getattr(params, name).shape)
        values = []
        for sign in (1.0, -1.0):
            arrays = {n: a.copy() for n, a in params.arrays().items()}
            arrays[name][pos] += sign * h
            loss, _ = loss_and_grads(params.with_arrays(arrays), contexts, golds, alpha, ep)
            values.append(loss)
        numeric.append((values[0] - values[1]) / (2 * h))
        analytic.append(float(grads[name][pos]))
    return float(relative_error(np.array(numeric), np.array(analytic)).max())

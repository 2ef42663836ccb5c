"""Command-line argument parsing – turn argv into resolved command settings."""

from __future__ import annotations

import argparse

from src.catalog.decoding_catalog import (
    default_param,
    dialogue_defaults,
    eval_defaults,
    model_defaults,
    train_defaults,
)
from src.data.tokens import TOKENIZER_MODES
from src.sampling.decoders import STRATEGIES, DecoderConfig
from src.tinylm.train import TrainConfig

# strategy -> argparse destination of its scalar parameter
PARAM_FLAGS = {"temperature": "temperature", "topk": "top_k", "nucleus": "top_p", "entmax": "alpha"}


def _int_list(text: str) -> list[int]:
    try:
        return [int(v) for v in text.split(",") if v.strip()]
    except ValueError as exc:
        raise argparse.ArgumentTypeError(f"expected comma-separated integers, got {text!r}") from exc


def _float_list(text: str) -> list[float]:
    try:
        return [float(v) for v in text.split(",") if v.strip()]
    except ValueError as exc:
        raise argparse.ArgumentTypeError(f"expected comma-separated numbers, got {text!r}") from exc


def _add_decoder_flags(p: argparse.ArgumentParser) -> None:
    p.add_argument("--strategy", choices=STRATEGIES, default="entmax")
    p.add_argument("--alpha", type=float, default=None, help="entmax alpha (>= 1)")
    p.add_argument("--top-k", dest="top_k", type=int, default=None, help="top-k cutoff (>= 1)")
    p.add_argument("--top-p", dest="top_p", type=float, default=None, help="nucleus mass in (0, 1]")
    p.add_argument("--temperature", type=float, default=None, help="softmax temperature (> 0)")
    p.add_argument("--seed", type=int, default=0)


def build_parser() -> argparse.ArgumentParser:
    model = model_defaults()
    training = train_defaults()
    evaluation = eval_defaults()
    dialogue = dialogue_defaults()

    parser = argparse.ArgumentParser(
        prog="sparse-decoding",
        description="Sparse probability transforms, entmax sampling and metrics for truncated language models.",
    )
    parser.add_argument("--verbose", action="store_true", help="debug logging on stderr")
    sub = parser.add_subparsers(dest="command", required=True)

    p = sub.add_parser("train", help="train a tiny language model with an entmax loss")
    p.add_argument("corpus", help="UTF-8 text corpus")
    p.add_argument("--tokenizer", choices=TOKENIZER_MODES, default="whitespace")
    p.add_argument("--alpha", type=float, default=training["alpha"], help="loss alpha (1 = NLL)")
    p.add_argument("--learning-rate", dest="learning_rate", type=float, default=training["learning_rate"])
    p.add_argument("--epochs", type=int, default=training["epochs"])
    p.add_argument("--batch-size", dest="batch_size", type=int, default=training["batch_size"])
    p.add_argument("--context-window", dest="context_window", type=int, default=model["context_window"])
    p.add_argument("--embed-dim", dest="embed_dim", type=int, default=model["embed_dim"])
    p.add_argument("--hidden-dim", dest="hidden_dim", type=int, default=model["hidden_dim"])
    p.add_argument("--seed", type=int, default=training["seed"])
    p.add_argument("--out", required=True, help="checkpoint path")

    p = sub.add_parser("generate", help="decode a continuation of a prompt")
    p.add_argument("checkpoint")
    p.add_argument("--prompt", default="")
    _add_decoder_flags(p)
    p.add_argument("--max-len", dest="max_len", type=int, default=50)
    p.add_argument("--out", default=None, help="support-size sidecar (YAML)")

    p = sub.add_parser("eval", help="metrics report for a logit record file or a checkpoint on a corpus")
    src = p.add_mutually_exclusive_group(required=True)
    src.add_argument("--records", help="logit record file (JSON lines)")
    src.add_argument("--checkpoint")
    p.add_argument("--corpus", help="corpus evaluated with --checkpoint")
    p.add_argument("--vocab-size", dest="vocab_size", type=int, default=None, help="expected vocabulary size")
    _add_decoder_flags(p)
    p.add_argument("--windows", type=_int_list, default=list(evaluation["windows"]))
    p.add_argument("--out", required=True, help="report path (YAML)")

    p = sub.add_parser("sweep", help="metrics for a grid of decoding parameters (CSV)")
    p.add_argument("checkpoint")
    p.add_argument("corpus")
    p.add_argument("--strategy", choices=STRATEGIES, default="entmax")
    p.add_argument("--grid", type=_float_list, default=None, help="comma-separated parameter values")
    p.add_argument("--seed", type=int, default=0)
    p.add_argument("--windows", type=_int_list, default=list(evaluation["windows"]))
    p.add_argument("--out", required=True, help="CSV path")

    p = sub.add_parser("curves", help="single-token eps-ppl / sp / JS curves (CSV)")
    p.add_argument("--epsilon", type=_float_list, default=list(evaluation["curve_epsilons"]))
    p.add_argument("--grid", dest="grid_size", type=int, default=evaluation["curve_grid_size"], help="grid size")
    p.add_argument("--vocab-size", dest="vocab_size", type=int, default=evaluation["curve_vocab_size"])
    p.add_argument("--chart", default=None, help="also render a chart (.html or .json)")
    p.add_argument("--out", required=True, help="CSV path")

    p = sub.add_parser("logits", help="dump model scores on a corpus as a logit record file")
    p.add_argument("checkpoint")
    p.add_argument("corpus")
    p.add_argument("--out", required=True, help="logit record file path")

    p = sub.add_parser("dialogue", help="self-play conversations between two agents of one model")
    p.add_argument("checkpoint")
    p.add_argument("--prompt", dest="prompts", action="append", default=[], help="opening utterance (repeatable)")
    p.add_argument("--openings", default=None, help="file with one opening utterance per line")
    _add_decoder_flags(p)
    p.add_argument("--max-utterances", dest="max_utterances", type=int, default=dialogue["max_utterances"])
    p.add_argument("--overlap", dest="overlap_threshold", type=float, default=dialogue["overlap_threshold"])
    p.add_argument("--utterance-len", dest="utterance_len", type=int, default=dialogue["utterance_len"])
    p.add_argument("--out", required=True, help="conversations and summary (YAML)")

    p = sub.add_parser("strategies", help="list catalog strategies, optionally filtered by keywords")
    p.add_argument("query", nargs="?", default=None)

    return parser


def decoder_from_args(args: argparse.Namespace) -> DecoderConfig:
    """DecoderConfig from the strategy flags, with catalog defaults for a missing parameter."""
    dest = PARAM_FLAGS.get(args.strategy)
    param = getattr(args, dest) if dest else None
    if dest and param is None:
        param = default_param(args.strategy)
    return DecoderConfig(args.strategy, param, getattr(args, "max_len", 50), args.seed)


def train_config_from_args(args: argparse.Namespace) -> TrainConfig:
    return TrainConfig(
        alpha=args.alpha,
        learning_rate=args.learning_rate,
        epochs=args.epochs,
        seed=args.seed,
        batch_size=args.batch_size,
        context_window=args.context_window,
        embed_dim=args.embed_dim,
        hidden_dim=args.hidden_dim,
    )

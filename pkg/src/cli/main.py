"""Entry point: ``python -m src.cli <command> ...``.

Exit codes: 0 success, 1 runtime or I/O failure, 2 usage or validation error.
"""

from __future__ import annotations

import logging
import sys
from typing import Sequence

from src.cli.parser import build_parser, decoder_from_args, train_config_from_args
from src.cli.pipeline import (
    run_curves,
    run_dialogue,
    run_eval,
    run_generate,
    run_logits,
    run_strategies,
    run_sweep,
    run_train,
)

logger = logging.getLogger(__name__)


def _dispatch(args) -> dict:
    if args.command == "train":
        return run_train(args.corpus, args.tokenizer, train_config_from_args(args), args.out)
    if args.command == "generate":
        return run_generate(args.checkpoint, args.prompt, decoder_from_args(args), args.out)
    if args.command == "eval":
        return run_eval(
            decoder_from_args(args),
            args.windows,
            args.out,
            records_path=args.records,
            checkpoint=args.checkpoint,
            corpus_path=args.corpus,
            vocab_size=args.vocab_size,
        )
    if args.command == "sweep":
        return run_sweep(args.checkpoint, args.corpus, args.strategy, args.grid, args.out, args.seed, args.windows)
    if args.command == "curves":
        return run_curves(args.epsilon, args.grid_size, args.vocab_size, args.out, args.chart)
    if args.command == "dialogue":
        return run_dialogue(
            args.checkpoint,
            decoder_from_args(args),
            args.out,
            prompts=args.prompts,
            openings_path=args.openings,
            max_utterances=args.max_utterances,
            overlap_threshold=args.overlap_threshold,
            utterance_len=args.utterance_len,
        )
    if args.command == "strategies":
        return run_strategies(args.query)
    return run_logits(args.checkpoint, args.corpus, args.out)


def main(argv: Sequence[str] | None = None) -> int:
    parser = build_parser()
    try:
        args = parser.parse_args(argv)
    except SystemExit as exc:
        return 0 if exc.code is None else int(exc.code)

    logging.basicConfig(
        level=logging.DEBUG if args.verbose else logging.INFO,
        format="%(levelname)s %(name)s: %(message)s",
        stream=sys.stderr,
    )
    try:
        result = _dispatch(args)
    except ValueError as exc:
        print(f"error: {exc}", file=sys.stderr)
        return 2
    except (RuntimeError, OSError) as exc:
        print(f"error: {exc}", file=sys.stderr)
        return 1

    if args.command == "generate":
        print(result["text"])
    elif args.command == "strategies":
        for row in result["strategies"]:
            param = f"{row['param']}={row['default']}" if row["param"] else "-"
            print(f"{row['name']:<12} {param:<16} {row['description']}")
    else:
        logger.info("%s: %s", args.command, result["status"])
    return 0


if __name__ == "__main__":
    sys.exit(main())

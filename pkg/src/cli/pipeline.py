"""Command pipeline – runs each CLI command and writes its outputs plus a run manifest.

Flow: read inputs → build records / train / decode → compute metrics →
      write output file → MAKE_RUN_MANIFEST (<out>.manifest.yaml)
"""

from __future__ import annotations

import dataclasses
import hashlib
import json
import logging
from typing import Any, Iterable, Sequence

import numpy as np
import pandas as pd
import yaml

from src.catalog.decoding_catalog import catalog_search, strategy_entry, strategy_names, sweep_grid
from src.data.tokens import TokenSequence, Vocabulary, from_ids, tokenize
from src.metrics.curves import CURVE_COLUMNS, curves_chart, metric_curves, probability_grid
from src.metrics.records import TokenEvalRecord, require_records
from src.metrics.repetition import DEFAULT_WINDOWS, summarize_support_sizes
from src.metrics.report import DEFAULT_DISTINCT_NS, MetricsReport, evaluate_records, write_report
from src.sampling.decoders import DecoderConfig, next_token_distribution
from src.sampling.dialogue import dialogue_statistics, simulate_dialogue
from src.sampling.generation import generate, make_rng, sample
from src.tinylm.checkpoint import load_checkpoint, save_checkpoint
from src.tinylm.model import ModelParams, context_windows, forward_batch
from src.tinylm.train import TrainConfig, train_with_history
from src.transforms.distribution import as_scores

logger = logging.getLogger(__name__)

TOOL_VERSION = "0.1.0"
MANIFEST_SUFFIX = ".manifest.yaml"


def file_digest(path: str) -> str:
    h = hashlib.sha256()
    with open(path, "rb") as f:
        for chunk in iter(lambda: f.read(1 << 16), b""):
            h.update(chunk)
    return h.hexdigest()


def make_run_manifest(
    command: str,
    config: dict[str, Any],
    seed: int | None,
    inputs: dict[str, str],
) -> dict[str, Any]:
    """MAKE_RUN_MANIFEST – everything needed to replay a command; no timestamps."""
    return {
        "command": command,
        "tool_version": TOOL_VERSION,
        "seed": seed,
        "config": {k: _plain(v) for k, v in config.items()},
        "inputs": {name: {"path": path, "sha256": file_digest(path)} for name, path in sorted(inputs.items())},
    }


def _plain(value: Any) -> Any:
    if isinstance(value, (list, tuple)):
        return [_plain(v) for v in value]
    if isinstance(value, np.generic):
        return value.item()
    return value


def manifest_path(out: str) -> str:
    return out + MANIFEST_SUFFIX


def write_manifest(manifest: dict[str, Any], out: str) -> str:
    path = manifest_path(out)
    with open(path, "w", encoding="utf-8", newline="\n") as f:
        f.write(yaml.safe_dump(manifest, sort_keys=False, default_flow_style=False, allow_unicode=True))
    return path


def _read_text(path: str) -> str:
    with open(path, "r", encoding="utf-8") as f:
        return f.read()


def _write_csv(rows: Sequence[dict[str, Any]], columns: Sequence[str], path: str) -> None:
    pd.DataFrame(list(rows), columns=list(columns)).to_csv(path, index=False, lineterminator="\n")


# ------------------------------------------------------------------
# Evaluation records
# ------------------------------------------------------------------


def model_scores(params: ModelParams, corpus: TokenSequence) -> np.ndarray:
    """Score matrix (n, V): row t scores the prediction of corpus token t."""
    if len(corpus) == 0:
        raise ValueError("Corpus contains no tokens")
    return forward_batch(params, context_windows(corpus.ids, params.context_window, params.start_id))


def read_logit_records(path: str) -> tuple[list[int], np.ndarray]:
    """Parse a logit record file: one JSON object {"gold": id, "scores": [...]} per line."""
    golds: list[int] = []
    rows: list[np.ndarray] = []
    with open(path, "r", encoding="utf-8") as f:
        for lineno, line in enumerate(f, start=1):
            if not line.strip():
                continue
            try:
                obj = json.loads(line)
                gold = obj["gold"]
                scores = as_scores(obj["scores"])
            except (json.JSONDecodeError, KeyError, TypeError) as exc:
                raise ValueError(f"{path}:{lineno}: malformed logit record ({exc})") from exc
            except ValueError as exc:
                raise ValueError(f"{path}:{lineno}: {exc}") from exc
            if not isinstance(gold, int) or isinstance(gold, bool):
                raise ValueError(f"{path}:{lineno}: gold must be an integer, got {gold!r}")
            if rows and scores.size != rows[0].size:
                raise ValueError(f"{path}:{lineno}: expected {rows[0].size} scores, got {scores.size}")
            golds.append(gold)
            rows.append(scores)
    if not rows:
        raise ValueError(f"{path}: no logit records")
    return golds, np.vstack(rows)


def write_logit_records(golds: Sequence[int], scores: np.ndarray, path: str) -> None:
    with open(path, "w", encoding="utf-8", newline="\n") as f:
        for gold, row in zip(golds, scores):
            f.write(json.dumps({"gold": int(gold), "scores": [float(v) for v in row]}) + "\n")


def build_records(golds: Sequence[int], scores: np.ndarray, config: DecoderConfig) -> list[TokenEvalRecord]:
    return [TokenEvalRecord(int(g), next_token_distribution(z, config)) for g, z in zip(golds, scores)]


def sample_predictions(records: Sequence[TokenEvalRecord], seed: int) -> list[int]:
    """One draw per position from its post-transform distribution, in position order."""
    rng = make_rng(seed)
    return [sample(r.dist, rng) for r in records]


def evaluate_scores(
    golds: Sequence[int],
    scores: np.ndarray,
    config: DecoderConfig,
    windows: Sequence[int],
    distinct_ns: Sequence[int] = DEFAULT_DISTINCT_NS,
) -> MetricsReport:
    records = build_records(golds, scores, config)
    require_records(records)
    return evaluate_records(
        records,
        predicted=sample_predictions(records, config.seed),
        windows=windows,
        strategy=config.strategy,
        param=config.param,
        distinct_ns=distinct_ns,
    )


def _checkpoint_corpus(checkpoint: str, corpus_path: str) -> tuple[ModelParams, TokenSequence]:
    params = load_checkpoint(checkpoint)
    return params, tokenize(_read_text(corpus_path), params.vocab)


# ------------------------------------------------------------------
# Commands
# ------------------------------------------------------------------


def run_train(corpus_path: str, tokenizer: str, config: TrainConfig, out: str) -> dict[str, Any]:
    """Train on a text corpus and write a checkpoint plus manifest."""
    text = _read_text(corpus_path)
    vocab = Vocabulary.build(text, tokenizer)
    corpus = tokenize(text, vocab)
    logger.info("training on %d tokens, vocabulary %d, alpha %g", len(corpus), len(vocab), config.alpha)
    result = train_with_history(corpus, config)
    digest = save_checkpoint(result.params, out)
    run_config = {"tokenizer": tokenizer, **{k: getattr(config, k) for k in config.__dataclass_fields__}}
    manifest = make_run_manifest("train", run_config, config.seed, {"corpus": corpus_path})
    manifest["outputs"] = {"checkpoint": {"path": out, "sha256": digest}}
    write_manifest(manifest, out)
    return {
        "status": "success",
        "checkpoint": out,
        "sha256": digest,
        "vocab_size": len(vocab),
        "n_tokens": len(corpus),
        "epoch_losses": list(result.epoch_losses),
        "learning_rates": list(result.learning_rates),
    }


def run_generate(checkpoint: str, prompt: str, config: DecoderConfig, out: str | None = None) -> dict[str, Any]:
    """Decode a continuation of *prompt*; optionally write a support-size sidecar."""
    params = load_checkpoint(checkpoint)
    context = tokenize(prompt, params.vocab)
    generated = generate(params, context, config)
    result = {
        "status": "success",
        "strategy": config.label,
        "tokens": [params.vocab.token_of(i) for i in generated.tokens.ids],
        "text": generated.tokens.text(),
        "support_sizes": list(generated.support_sizes),
        "support_stats": summarize_support_sizes(generated.support_sizes),
    }
    if out:
        sidecar = {k: result[k] for k in ("tokens", "text", "support_sizes", "support_stats")}
        with open(out, "w", encoding="utf-8", newline="\n") as f:
            f.write(yaml.safe_dump(sidecar, sort_keys=False, default_flow_style=False, allow_unicode=True))
        config_dict = {**config.to_dict(), "prompt": prompt}
        write_manifest(make_run_manifest("generate", config_dict, config.seed, {"checkpoint": checkpoint}), out)
    return result


def run_logits(checkpoint: str, corpus_path: str, out: str) -> dict[str, Any]:
    """Dump per-position model scores on a corpus as a logit record file."""
    params, corpus = _checkpoint_corpus(checkpoint, corpus_path)
    scores = model_scores(params, corpus)
    write_logit_records(corpus.ids, scores, out)
    write_manifest(
        make_run_manifest("logits", {}, None, {"checkpoint": checkpoint, "corpus": corpus_path}), out
    )
    return {"status": "success", "records": out, "n_tokens": len(corpus), "vocab_size": params.vocab_size}


def run_eval(
    config: DecoderConfig,
    windows: Sequence[int],
    out: str,
    records_path: str | None = None,
    checkpoint: str | None = None,
    corpus_path: str | None = None,
    vocab_size: int | None = None,
) -> dict[str, Any]:
    """Metrics report for a logit record file or a checkpoint evaluated on a corpus."""
    if (records_path is None) == (checkpoint is None):
        raise ValueError("Exactly one of a logit record file or a checkpoint is required")
    if records_path is not None:
        golds, scores = read_logit_records(records_path)
        inputs = {"records": records_path}
    else:
        if corpus_path is None:
            raise ValueError("A corpus is required when evaluating a checkpoint")
        params, corpus = _checkpoint_corpus(checkpoint, corpus_path)
        golds, scores = list(corpus.ids), model_scores(params, corpus)
        inputs = {"checkpoint": checkpoint, "corpus": corpus_path}
    if vocab_size is not None and scores.shape[1] != vocab_size:
        raise ValueError(f"Vocabulary size mismatch: input has {scores.shape[1]}, expected {vocab_size}")

    report = evaluate_scores(golds, scores, config, windows)
    write_report(report, out)
    run_config = {**config.to_dict(), "windows": list(windows)}
    write_manifest(make_run_manifest("eval", run_config, config.seed, inputs), out)
    logger.info("eval %s: sp %.4f  js %.4f  eps-ppl %.4f", config.label, report.sp, report.js, report.eps_ppl)
    return {"status": "success", "report": out, "metrics": report.to_dict()}


def run_sweep(
    checkpoint: str,
    corpus_path: str,
    strategy: str,
    grid: Iterable[float] | None,
    out: str,
    seed: int = 0,
    windows: Sequence[int] = DEFAULT_WINDOWS,
) -> dict[str, Any]:
    """One CSV row of report scalars per grid value of *strategy*'s parameter."""
    values: list[float | None]
    if grid is None:
        values = list(sweep_grid(strategy)) or [None]
    else:
        values = list(grid)
        if not values:
            raise ValueError("Sweep grid is empty")
    if strategy == "topk":
        values = [int(v) if v is not None and float(v) == int(v) else v for v in values]
    configs = [DecoderConfig(strategy, v, seed=seed) for v in values]

    params, corpus = _checkpoint_corpus(checkpoint, corpus_path)
    scores = model_scores(params, corpus)
    rows: list[dict[str, Any]] = []
    for i, config in enumerate(configs, start=1):
        report = evaluate_scores(corpus.ids, scores, config, windows)
        rows.append({"strategy": strategy, "param": config.param, **report.scalars()})
        logger.info("sweep %d/%d  %s", i, len(configs), config.label)

    columns = list(rows[0])
    _write_csv(rows, columns, out)
    run_config = {"strategy": strategy, "grid": [c.param for c in configs], "windows": list(windows)}
    write_manifest(make_run_manifest("sweep", run_config, seed, {"checkpoint": checkpoint, "corpus": corpus_path}), out)
    return {"status": "success", "csv": out, "rows": rows}


def run_curves(
    epsilons: Sequence[float],
    grid_size: int,
    vocab_size: int,
    out: str,
    chart: str | None = None,
) -> dict[str, Any]:
    """Single-token eps-ppl / sp / JS curves as CSV, optionally rendered as a chart."""
    rows = metric_curves(probability_grid(grid_size), epsilons, vocab_size)
    _write_csv(rows, CURVE_COLUMNS, out)
    if chart:
        curves_chart(rows).save(chart)
    run_config = {"epsilons": list(epsilons), "grid_size": grid_size, "vocab_size": vocab_size}
    write_manifest(make_run_manifest("curves", run_config, None, {}), out)
    return {"status": "success", "csv": out, "chart": chart, "n_rows": len(rows)}


def run_dialogue(
    checkpoint: str,
    config: DecoderConfig,
    out: str,
    prompts: Sequence[str] = (),
    openings_path: str | None = None,
    max_utterances: int = 20,
    overlap_threshold: float = 0.8,
    utterance_len: int = 20,
) -> dict[str, Any]:
    """Self-play conversations from each opening plus their length and diversity summary (YAML)."""
    params = load_checkpoint(checkpoint)
    openings = list(prompts)
    inputs = {"checkpoint": checkpoint}
    if openings_path is not None:
        openings += [line.strip() for line in _read_text(openings_path).splitlines() if line.strip()]
        inputs["openings"] = openings_path
    if not openings:
        raise ValueError("At least one dialogue opening is required")

    seeds = make_rng(config.seed).integers(2**63, size=len(openings))
    results = []
    for i, (opening, seed) in enumerate(zip(openings, seeds), start=1):
        conversation = dataclasses.replace(config, seed=int(seed))
        result = simulate_dialogue(
            params, tokenize(opening, params.vocab), conversation, max_utterances, overlap_threshold, utterance_len
        )
        results.append(result)
        logger.info("dialogue %d/%d  %d utterances (%s)", i, len(openings), result.length, result.stop_reason)

    summary = dialogue_statistics(results)
    conversations = [
        {
            "opening": from_ids(r.opening, params.vocab).text(),
            "utterances": [from_ids(u, params.vocab).text() for u in r.utterances],
            "length": r.length,
            "stop_reason": r.stop_reason,
        }
        for r in results
    ]
    with open(out, "w", encoding="utf-8", newline="\n") as f:
        f.write(
            yaml.safe_dump(
                {"summary": summary, "conversations": conversations},
                sort_keys=False,
                default_flow_style=False,
                allow_unicode=True,
            )
        )
    run_config = {
        **config.to_dict(),
        "max_utterances": max_utterances,
        "overlap_threshold": overlap_threshold,
        "utterance_len": utterance_len,
        "prompts": openings[: len(prompts)],
    }
    write_manifest(make_run_manifest("dialogue", run_config, config.seed, inputs), out)
    logger.info("dialogue %s: mean length %.2f  distinct-2 %.4f", config.label, summary["length"], summary["distinct_2"])
    return {"status": "success", "dialogues": out, "summary": summary}


def run_strategies(query: str | None = None) -> dict[str, Any]:
    """Catalog lookup: every strategy, or those matching *query*."""
    entries = catalog_search(query) if query else [strategy_entry(name) for name in strategy_names()]
    rows = [
        {
            "name": e["name"],
            "param": e.get("param"),
            "default": e.get("default"),
            "grid": list(e.get("grid", [])),
            "description": e.get("description", ""),
        }
        for e in entries
    ]
    return {"status": "success", "strategies": rows}

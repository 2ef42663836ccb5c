"""Corpus-level metrics report and its YAML serialization."""

from __future__ import annotations

from dataclasses import dataclass, field
from typing import Any, Sequence

import yaml

from src.metrics.perplexity import optimal_epsilon, perplexity
from src.metrics.records import TokenEvalRecord, require_records
from src.metrics.repetition import DEFAULT_WINDOWS, distinct_n, repetition_metrics, support_statistics
from src.metrics.scores import js_score, sparsemax_score

DEFAULT_DISTINCT_NS = (1, 2, 3, 4)


@dataclass
class MetricsReport:
    strategy: str
    param: float | None
    n_tokens: int
    sp: float
    js: float
    ppl: float
    eps_ppl: float
    eps_star: float
    lambda_star: float
    rep: dict[int, float] = field(default_factory=dict)
    wrep: dict[int, float] = field(default_factory=dict)
    rep_mean: float = 0.0
    wrep_mean: float = 0.0
    distinct: dict[int, float] = field(default_factory=dict)
    support_stats: dict[str, float] = field(default_factory=dict)

    def to_dict(self) -> dict[str, Any]:
        # Key order here is the on-disk order.
        return {
            "strategy": self.strategy,
            "param": self.param,
            "n_tokens": self.n_tokens,
            "sp": self.sp,
            "js": self.js,
            "ppl": self.ppl,
            "eps_ppl": self.eps_ppl,
            "eps_star": self.eps_star,
            "lambda_star": self.lambda_star,
            "rep": {int(k): float(v) for k, v in sorted(self.rep.items())},
            "wrep": {int(k): float(v) for k, v in sorted(self.wrep.items())},
            "rep_mean": self.rep_mean,
            "wrep_mean": self.wrep_mean,
            "distinct": {int(k): float(v) for k, v in sorted(self.distinct.items())},
            "support_stats": {k: float(self.support_stats[k]) for k in ("mean", "median", "sd", "min", "max")},
        }

    @classmethod
    def from_dict(cls, data: dict[str, Any]) -> "MetricsReport":
        return cls(
            strategy=data["strategy"],
            param=data["param"],
            n_tokens=int(data["n_tokens"]),
            sp=float(data["sp"]),
            js=float(data["js"]),
            ppl=float(data["ppl"]),
            eps_ppl=float(data["eps_ppl"]),
            eps_star=float(data["eps_star"]),
            lambda_star=float(data["lambda_star"]),
            rep={int(k): float(v) for k, v in data["rep"].items()},
            wrep={int(k): float(v) for k, v in data["wrep"].items()},
            rep_mean=float(data["rep_mean"]),
            wrep_mean=float(data["wrep_mean"]),
            distinct={int(k): float(v) for k, v in data["distinct"].items()},
            support_stats={k: float(v) for k, v in data["support_stats"].items()},
        )

    def scalars(self) -> dict[str, float]:
        """Flat scalar view used for sweep CSV rows."""
        row: dict[str, float] = {
            "sp": self.sp,
            "js": self.js,
            "ppl": self.ppl,
            "eps_ppl": self.eps_ppl,
            "eps_star": self.eps_star,
            "rep": self.rep_mean,
            "wrep": self.wrep_mean,
        }
        for n, v in sorted(self.distinct.items()):
            row[f"distinct_{n}"] = v
        for k in ("mean", "median", "sd", "min", "max"):
            row[f"support_{k}"] = self.support_stats[k]
        return row


def dump_report(report: MetricsReport) -> str:
    return yaml.safe_dump(report.to_dict(), sort_keys=False, default_flow_style=False)


def load_report(text: str) -> MetricsReport:
    return MetricsReport.from_dict(yaml.safe_load(text))


def write_report(report: MetricsReport, path: str) -> None:
    with open(path, "w", encoding="utf-8", newline="\n") as f:
        f.write(dump_report(report))


def read_report(path: str) -> MetricsReport:
    with open(path, "r", encoding="utf-8") as f:
        return load_report(f.read())


def _mode(record: TokenEvalRecord) -> int:
    ids, _ = record.dist.ranked()
    return int(ids[0])


def evaluate_records(
    records: Sequence[TokenEvalRecord],
    predicted: Sequence[int] | None = None,
    windows: Sequence[int] = DEFAULT_WINDOWS,
    distinct_ns: Sequence[int] = DEFAULT_DISTINCT_NS,
    strategy: str = "",
    param: float | None = None,
) -> MetricsReport:
    """Every corpus metric for *records*.

    *predicted* is the decoded token per position used by rep / wrep / distinct-n;
    it defaults to each distribution's most probable token.
    """
    require_records(records)
    gold = [r.gold for r in records]
    predicted = [_mode(r) for r in records] if predicted is None else list(predicted)
    if len(predicted) != len(records):
        raise ValueError(f"Length mismatch: {len(records)} records vs {len(predicted)} predicted tokens")
    best = optimal_epsilon(records)
    repetition = repetition_metrics(gold, predicted, windows)
    return MetricsReport(
        strategy=strategy,
        param=param,
        n_tokens=len(records),
        sp=sparsemax_score(records),
        js=js_score(records),
        ppl=perplexity(records),
        eps_ppl=best.eps_ppl,
        eps_star=best.eps_star,
        lambda_star=best.lambda_star,
        rep=repetition.rep,
        wrep=repetition.wrep,
        rep_mean=repetition.rep_mean,
        wrep_mean=repetition.wrep_mean,
        distinct={n: distinct_n(predicted, n) for n in distinct_ns},
        support_stats=support_statistics(records),
    )

"""Single-token metric curves for comparing epsilon-perplexity, sparsemax score and JS.

The model distribution puts p on the gold token and spreads 1 - p evenly over
the other V - 1 tokens.
"""

from __future__ import annotations

import math
from typing import Any, Sequence

import altair as alt
import numpy as np
import pandas as pd

from src.metrics.scores import js_to_onehot

CURVE_COLUMNS = ("p", "epsilon", "eps_ppl", "sp", "js")


def probability_grid(size: int) -> list[float]:
    if size < 2:
        raise ValueError(f"grid size must be >= 2, got {size}")
    return [float(v) for v in np.linspace(0.0, 1.0, size)]


def single_token_eps_ppl(p: float, epsilon: float, vocab_size: int) -> float:
    if p + epsilon == 0:
        return math.inf
    return (1.0 + epsilon * vocab_size) / (p + epsilon)


def single_token_sp(p: float, vocab_size: int) -> float:
    rest = (1.0 - p) ** 2 / (vocab_size - 1) if vocab_size > 1 else 0.0
    return p + 0.5 * (1.0 - p * p - rest)


def metric_curves(
    grid: Sequence[float],
    epsilons: Sequence[float],
    vocab_size: int = 50000,
) -> list[dict[str, float]]:
    """One row per (p, epsilon) with the single-token eps-ppl, sp and JS."""
    if vocab_size < 2:
        raise ValueError(f"vocab_size must be >= 2, got {vocab_size}")
    if any(not 0.0 <= p <= 1.0 for p in grid):
        raise ValueError("grid values must lie in [0, 1]")
    if any(not e >= 0 for e in epsilons):
        raise ValueError("epsilons must be >= 0")
    rows: list[dict[str, float]] = []
    for p in grid:
        sp = single_token_sp(p, vocab_size)
        js = js_to_onehot(p)
        for eps in epsilons:
            rows.append(
                {
                    "p": float(p),
                    "epsilon": float(eps),
                    "eps_ppl": single_token_eps_ppl(p, eps, vocab_size),
                    "sp": sp,
                    "js": js,
                }
            )
    return rows


def curves_chart(rows: Sequence[dict[str, Any]]) -> alt.VConcatChart:
    """eps-ppl per epsilon (top) and sp / JS (bottom) against the gold probability."""
    df = pd.DataFrame(list(rows), columns=list(CURVE_COLUMNS))
    finite = df[np.isfinite(df["eps_ppl"])]
    ppl = (
        alt.Chart(finite)
        .mark_line()
        .encode(
            x=alt.X("p:Q", title="p(gold)"),
            y=alt.Y("eps_ppl:Q", title="eps-perplexity", scale=alt.Scale(type="log")),
            color=alt.Color("epsilon:N"),
        )
    )
    bounded = df.drop_duplicates("p").melt(id_vars=["p"], value_vars=["sp", "js"], var_name="metric")
    scores = (
        alt.Chart(bounded)
        .mark_line()
        .encode(
            x=alt.X("p:Q", title="p(gold)"),
            y=alt.Y("value:Q"),
            color=alt.Color("metric:N"),
        )
    )
    return alt.vconcat(ppl, scores)

"""Decoding catalog – YAML-based registry of decoding strategies, parameter ranges and defaults."""

from __future__ import annotations

import copy
import os
from functools import lru_cache
from typing import Any

import yaml

_CATALOG_PATH = os.path.join(os.path.dirname(__file__), "..", "..", "data", "decoding_catalog.yaml")


@lru_cache(maxsize=8)
def _read_catalog(path: str) -> dict[str, Any]:
    with open(path, "r", encoding="utf-8") as f:
        return yaml.safe_load(f)


def _load_catalog(path: str | None = None) -> dict[str, Any]:
    return _read_catalog(os.path.abspath(path or _CATALOG_PATH))


def catalog_search(query: str, catalog_path: str | None = None) -> list[dict[str, Any]]:
    """Return strategies relevant to *query*.

    Simple keyword match against strategy names, labels, descriptions and parameter names.
    """
    catalog = _load_catalog(catalog_path)
    tokens = query.lower().split()
    results: list[dict[str, Any]] = []
    for entry in catalog.get("strategies", []):
        text = " ".join(
            [
                entry.get("name", ""),
                entry.get("label", ""),
                entry.get("description", ""),
                entry.get("param") or "",
            ]
        ).lower()
        if any(t in text for t in tokens):
            results.append(copy.deepcopy(entry))
    return results


def strategy_names(catalog_path: str | None = None) -> list[str]:
    return [s["name"] for s in _load_catalog(catalog_path).get("strategies", [])]


def strategy_entry(strategy: str, catalog_path: str | None = None) -> dict[str, Any]:
    for entry in _load_catalog(catalog_path).get("strategies", []):
        if entry["name"] == strategy:
            return copy.deepcopy(entry)
    raise ValueError(f"Unknown strategy: {strategy}")


def default_param(strategy: str, catalog_path: str | None = None) -> float | None:
    return strategy_entry(strategy, catalog_path).get("default")


def sweep_grid(strategy: str, catalog_path: str | None = None) -> list[float]:
    return list(strategy_entry(strategy, catalog_path).get("grid", []))


def check_param(strategy: str, value: float | None, catalog_path: str | None = None) -> None:
    """Raise ``ValueError`` when *value* lies outside the catalog range of *strategy*."""
    entry = strategy_entry(strategy, catalog_path)
    name = entry.get("param")
    if name is None:
        return
    if value is None:
        raise ValueError(f"Strategy {strategy} requires a {name} value")
    bounds = entry.get("range", {})
    if bounds.get("integer") and float(value) != int(value):
        raise ValueError(f"{name} must be an integer, got {value}")
    lo = bounds.get("min")
    if lo is not None:
        if value < lo or (value == lo and not bounds.get("min_inclusive", True)):
            op = ">=" if bounds.get("min_inclusive", True) else ">"
            raise ValueError(f"{name} must be {op} {lo}, got {value}")
    hi = bounds.get("max")
    if hi is not None:
        if value > hi or (value == hi and not bounds.get("max_inclusive", True)):
            op = "<=" if bounds.get("max_inclusive", True) else "<"
            raise ValueError(f"{name} must be {op} {hi}, got {value}")


def eval_defaults(catalog_path: str | None = None) -> dict[str, Any]:
    return dict(_load_catalog(catalog_path).get("evaluation", {}))


def model_defaults(catalog_path: str | None = None) -> dict[str, Any]:
    return dict(_load_catalog(catalog_path).get("model", {}))


def train_defaults(catalog_path: str | None = None) -> dict[str, Any]:
    return dict(_load_catalog(catalog_path).get("training", {}))


def dialogue_defaults(catalog_path: str | None = None) -> dict[str, Any]:
    return dict(_load_catalog(catalog_path).get("dialogue", {}))

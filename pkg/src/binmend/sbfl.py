"""Suspiciousness scoring: candidate screening and the five SBFL metrics.

Screening keeps functions that are plausible detour targets (big enough to
hold a trampoline, application code rather than runtime library, locally
defined). Scoring turns spectrum counts into per-metric suspiciousness.
dstar2 can be +infinity; the sentinel is preserved here and substituted
only at rank-aggregation time.
"""

from __future__ import annotations

import json
import math
from dataclasses import dataclass
from typing import Iterable

from .errors import (
    EmptyQualifiedSet,
    InputError,
    NoFailingTests,
    UnknownMetric,
)
from .spectra import CoverageMatrix, FunctionRecord, SpectrumCounts, counts_for

METRICS = ("tarantula", "ochiai", "op2", "barinel", "dstar2")


@dataclass(frozen=True)
class ScreeningConfig:
    min_size_bytes: int = 45
    cull_library: bool = True
    require_local: bool = True

    def __post_init__(self) -> None:
        if self.min_size_bytes < 0:
            raise ValueError("min_size_bytes must be >= 0")


def screen(functions: Iterable[FunctionRecord], config: ScreeningConfig | None = None) -> set[str]:
    """Names of functions that qualify as localization candidates."""
    cfg = config or ScreeningConfig()
    out: set[str] = set()
    for f in functions:
        if f.size_bytes < cfg.min_size_bytes:
            continue
        if cfg.cull_library and f.is_library:
            continue
        if cfg.require_local and not f.is_local:
            continue
        out.add(f.name)
    return out


def _tarantula(c: SpectrumCounts) -> float:
    if c.ef == 0:
        return 0.0
    failed = c.ef / (c.ef + c.nf)
    total_pass = c.ep + c.np
    passed = c.ep / total_pass if total_pass else 0.0
    return failed / (failed + passed)


def _ochiai(c: SpectrumCounts) -> float:
    if c.ef == 0:
        return 0.0
    return c.ef / math.sqrt((c.ef + c.nf) * (c.ef + c.ep))


def _op2(c: SpectrumCounts) -> float:
    return c.ef - c.ep / (c.ep + c.np + 1)


def _barinel(c: SpectrumCounts) -> float:
    if c.ef + c.ep == 0:
        return 0.0
    return 1.0 - c.ep / (c.ep + c.ef)


def _dstar2(c: SpectrumCounts) -> float:
    if c.ef == 0:
        return 0.0
    denom = c.ep + c.nf
    if denom == 0:
        return math.inf
    return c.ef * c.ef / denom


_FORMULAS = {
    "tarantula": _tarantula,
    "ochiai": _ochiai,
    "op2": _op2,
    "barinel": _barinel,
    "dstar2": _dstar2,
}


def suspiciousness(metric: str, c: SpectrumCounts) -> float:
    """Score one function's spectrum counts under one metric."""
    try:
        formula = _FORMULAS[metric]
    except KeyError:
        raise UnknownMetric(f"no metric named {metric!r}") from None
    if c.ef + c.nf == 0:
        raise NoFailingTests("suite has no failing tests")
    return formula(c)


@dataclass(frozen=True)
class ScoreTable:
    """Five raw scores per qualified function, metric order fixed."""

    metric_order: tuple[str, ...]
    scores: dict[str, dict[str, float]]

    def score(self, function: str, metric: str) -> float:
        return self.scores[function][metric]

    def functions(self) -> list[str]:
        return sorted(self.scores)


def score_table(matrix: CoverageMatrix, qualified: Iterable[str]) -> ScoreTable:
    """Score every qualified function under all five metrics."""
    names = sorted(set(qualified))
    if not names:
        raise EmptyQualifiedSet("no qualified functions to score")
    if matrix.failing == 0:
        raise NoFailingTests("suite has no failing tests")
    scores: dict[str, dict[str, float]] = {}
    for name in names:
        c = counts_for(matrix, name)
        scores[name] = {m: suspiciousness(m, c) for m in METRICS}
    return ScoreTable(metric_order=METRICS, scores=scores)


def table_to_json(table: ScoreTable) -> str:
    doc = {
        "metric_order": list(table.metric_order),
        "scores": {
            fn: {m: ("inf" if math.isinf(v) else v) for m, v in row.items()}
            for fn, row in sorted(table.scores.items())
        },
    }
    return json.dumps(doc, indent=2) + "\n"


def table_from_json(text: str) -> ScoreTable:
    try:
        doc = json.loads(text)
        order = tuple(doc["metric_order"])
        scores = {
            fn: {m: (math.inf if v == "inf" else float(v)) for m, v in row.items()}
            for fn, row in doc["scores"].items()
        }
    except (json.JSONDecodeError, KeyError, TypeError, ValueError) as exc:
        raise InputError(f"score-table JSON: {exc}") from exc
    return ScoreTable(metric_order=order, scores=scores)

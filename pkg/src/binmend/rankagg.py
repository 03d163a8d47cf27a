"""Rank aggregation: fold five per-metric orderings into one top-K list.

The aggregator is a weighted Borda count: a function's aggregate weight is
the sum of its scores across metric rows (0 where a row omits it), and the
final order is by aggregate weight descending with ties broken by name.
This is deterministic by construction; no stochastic search is involved.
"""

from __future__ import annotations

import json
import math
from dataclasses import dataclass
from typing import Sequence

from .errors import (
    InputError,
    InvalidFraction,
    NoQualifiedFunctions,
    ShapeMismatch,
    UnsortedRow,
)
from .sbfl import METRICS, ScreeningConfig, score_table, screen
from .spectra import CoverageMatrix

DEFAULT_FRACTION = 0.35


@dataclass(frozen=True)
class RankedList:
    """Top-k functions by aggregate weight, most suspicious first."""

    entries: tuple[tuple[str, float], ...]
    k: int
    fraction: float = DEFAULT_FRACTION


def select_k(n: int, fraction: float = DEFAULT_FRACTION) -> int:
    """Candidate-list length for n qualified functions: top fraction, min 1."""
    if not 0.0 < fraction <= 1.0:
        raise InvalidFraction(f"fraction {fraction!r} outside (0, 1]")
    if n < 0:
        raise ValueError("negative function count")
    if n == 0:
        return 0
    return max(1, math.floor(fraction * n))


def aggregate(
    name_matrix: Sequence[Sequence[str]],
    weight_matrix: Sequence[Sequence[float]],
    k: int,
) -> RankedList:
    """Weighted Borda aggregation of congruent name/weight matrices.

    Row m of both matrices describes metric m: names in score order, and
    the scores themselves, descending. Functions missing from a row simply
    contribute nothing for that metric.
    """
    if len(name_matrix) != len(weight_matrix):
        raise ShapeMismatch(
            f"{len(name_matrix)} name rows vs {len(weight_matrix)} weight rows"
        )
    contributions: dict[str, list[float]] = {}
    for row, (names, weights) in enumerate(zip(name_matrix, weight_matrix)):
        if len(names) != len(weights):
            raise ShapeMismatch(
                f"row {row}: {len(names)} names vs {len(weights)} weights"
            )
        if len(set(names)) != len(names):
            raise ShapeMismatch(f"row {row}: duplicate names")
        for w, nxt in zip(weights, weights[1:]):
            if nxt > w:
                raise UnsortedRow(f"row {row}: weights not descending")
        for name, w in zip(names, weights):
            if not math.isfinite(w):
                raise ValueError(
                    f"row {row}: non-finite weight for {name!r}; "
                    "substitute sentinels before aggregating"
                )
            contributions.setdefault(name, []).append(w)
    # fsum: exactly-rounded sums, so row order cannot perturb the output
    totals = {name: math.fsum(ws) for name, ws in contributions.items()}
    ranked = sorted(totals.items(), key=lambda kv: (-kv[1], kv[0]))
    return RankedList(entries=tuple(ranked[: max(k, 0)]), k=k)


def substitute_infinities(weights: Sequence[float]) -> list[float]:
    """Replace +inf scores by (largest finite score) + 1.0.

    Keeps "most suspicious" status without inventing a magnitude; when a
    column is all-infinite the substitute is 1.0.
    """
    finite = [w for w in weights if math.isfinite(w)]
    sub = (max(finite) if finite else 0.0) + 1.0
    return [sub if math.isinf(w) else w for w in weights]


def cgfl(
    matrix: CoverageMatrix,
    config: ScreeningConfig | None = None,
    fraction: float = DEFAULT_FRACTION,
) -> RankedList:
    """Screen, score, and aggregate a coverage matrix into the top-k list."""
    qualified = screen(matrix.functions, config)
    if not qualified:
        raise NoQualifiedFunctions("screening removed every function")
    table = score_table(matrix, qualified)
    name_rows: list[list[str]] = []
    weight_rows: list[list[float]] = []
    for metric in METRICS:
        weights = {fn: table.score(fn, metric) for fn in sorted(qualified)}
        subbed = dict(zip(weights, substitute_infinities(list(weights.values()))))
        ordered = sorted(subbed, key=lambda fn: (-subbed[fn], fn))
        name_rows.append(ordered)
        weight_rows.append([subbed[fn] for fn in ordered])
    k = select_k(len(qualified), fraction)
    ranked = aggregate(name_rows, weight_rows, k)
    return RankedList(entries=ranked.entries, k=k, fraction=fraction)


def ranked_to_json(ranked: RankedList) -> str:
    doc = {
        "k": ranked.k,
        "fraction": ranked.fraction,
        "ranked": [{"name": n, "weight": w} for n, w in ranked.entries],
    }
    return json.dumps(doc, indent=2) + "\n"


def ranked_from_json(text: str) -> RankedList:
    try:
        doc = json.loads(text)
        entries = tuple((e["name"], float(e["weight"])) for e in doc["ranked"])
        return RankedList(entries=entries, k=int(doc["k"]),
                          fraction=float(doc["fraction"]))
    except (json.JSONDecodeError, KeyError, TypeError, ValueError) as exc:
        raise InputError(f"ranked-list JSON: {exc}") from exc

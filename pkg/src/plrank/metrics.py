"""Ranking quality measures: NDCG@K and the cascade metric ERR.

Gains are exponential, G(r) = 2^r - 1, with the usual log2 position discount.
ERR follows the cascade model: a document with grade g stops the scan with
probability (2^g - 1) / 2^g_max.
"""

from __future__ import annotations

import math
from dataclasses import dataclass
from typing import Sequence

import numpy as np

from .data import Dataset
from .errors import ValidationError

DEGENERATE_POLICIES = ("zero", "one", "skip")


def dcg_at_k(grades_in_rank_order: Sequence[int], k: int) -> float:
    """Discounted cumulative gain of the first min(k, n) positions."""
    if k < 1:
        raise ValidationError(f"cutoff k must be >= 1, got {k}")
    total = 0.0
    for pos, grade in enumerate(grades_in_rank_order[:k], start=1):
        total += (2.0 ** grade - 1.0) / math.log2(pos + 1)
    return total


def ndcg_at_k(
    grades_in_model_order: Sequence[int],
    k: int,
    degenerate_policy: str = "zero",
) -> float | None:
    """NDCG@K of a grade list given in model-ranked order.

    Queries whose ideal DCG is zero (all grades zero) are resolved by
    ``degenerate_policy``: "zero" and "one" return that constant, "skip"
    returns None so callers can drop the query from averages.
    """
    if degenerate_policy not in DEGENERATE_POLICIES:
        raise ValidationError(f"unknown degenerate policy {degenerate_policy!r}")
    ideal = dcg_at_k(sorted(grades_in_model_order, reverse=True), k)
    if ideal == 0.0:
        if degenerate_policy == "zero":
            return 0.0
        if degenerate_policy == "one":
            return 1.0
        return None
    return dcg_at_k(grades_in_model_order, k) / ideal


def err(grades_in_model_order: Sequence[int], g_max: int) -> float:
    """Expected reciprocal rank under the cascade user model."""
    if g_max < 1:
        raise ValidationError(f"g_max must be >= 1, got {g_max}")
    norm = 2.0 ** g_max
    total = 0.0
    not_stopped = 1.0
    for pos, grade in enumerate(grades_in_model_order, start=1):
        if grade > g_max:
            raise ValidationError(f"grade {grade} exceeds g_max {g_max}")
        stop = (2.0 ** grade - 1.0) / norm
        total += not_stopped * stop / pos
        not_stopped *= 1.0 - stop
    return total


@dataclass
class EvalReport:
    ndcg_at: dict[int, float]
    err: float
    degenerate_query_count: int
    query_count: int

    def format_text(self, include_err: bool = True) -> str:
        rows = [("queries", str(self.query_count)),
                ("degenerate queries", str(self.degenerate_query_count))]
        for k in sorted(self.ndcg_at):
            rows.append((f"NDCG@{k}", f"{self.ndcg_at[k]:.6f}"))
        if include_err:
            rows.append(("ERR", f"{self.err:.6f}"))
        width = max(len(name) for name, _ in rows)
        return "\n".join(f"{name:<{width}} : {value}" for name, value in rows)

    def format_keyvalues(self, include_err: bool = True) -> str:
        parts = [f"queries={self.query_count}",
                 f"degenerate={self.degenerate_query_count}"]
        parts += [f"ndcg@{k}={self.ndcg_at[k]!r}" for k in sorted(self.ndcg_at)]
        if include_err:
            parts.append(f"err={self.err!r}")
        return "\n".join(parts)


def rank_order(scores: np.ndarray) -> np.ndarray:
    """Indices that sort scores descending, ties by ascending original index."""
    scores = np.asarray(scores, dtype=np.float64)
    return np.lexsort((np.arange(scores.size), -scores))


def evaluate(
    dataset: Dataset,
    scores: Sequence[float],
    cutoffs: Sequence[int] = (1, 3, 10),
    g_max: int | None = None,
    degenerate_policy: str = "zero",
) -> EvalReport:
    """Score every query and average the metrics across queries.

    ``scores`` is a flat per-document array aligned with the dataset's
    original line order (one entry per document ordinal).
    """
    scores = np.asarray(scores, dtype=np.float64)
    if scores.shape != (dataset.num_documents,):
        raise ValidationError(
            f"got {scores.size} scores for {dataset.num_documents} documents"
        )
    if g_max is None:
        g_max = max(dataset.max_grade, 1)

    ndcg_values: dict[int, list[float]] = {k: [] for k in cutoffs}
    err_values: list[float] = []
    degenerate = 0
    for group in dataset.groups:
        rel = group.relevances()
        order = rank_order(scores[group.doc_ids])
        ranked = rel[order].tolist()
        if not any(ranked):
            degenerate += 1
        for k in cutoffs:
            value = ndcg_at_k(ranked, k, degenerate_policy)
            if value is not None:
                ndcg_values[k].append(value)
        err_values.append(err(ranked, g_max))

    ndcg_means = {
        k: (float(np.mean(vals)) if vals else 0.0) for k, vals in ndcg_values.items()
    }
    err_mean = float(np.mean(err_values)) if err_values else 0.0
    return EvalReport(
        ndcg_at=ndcg_means,
        err=err_mean,
        degenerate_query_count=degenerate,
        query_count=len(dataset.groups),
    )

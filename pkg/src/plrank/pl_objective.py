"""Plackett-Luce likelihood, its functional gradient, and leaf Newton steps.

The log-likelihood of one query is the sum over its stored contexts of
log p(champion | context), where p is a softmax over the member scores.
Its derivative with respect to one document's score is

    (number of contexts won by the document) - sum over containing contexts
    of p(document | context)

which is the regression target for the next boosted tree. Leaf values are
then set by a one-dimensional Newton step on the likelihood restricted to a
shared offset of the leaf's documents.
"""

from __future__ import annotations

from dataclasses import dataclass, field
from typing import Iterable, Sequence

import numpy as np

from .errors import ValidationError
from .permutation import ContextSet, PermutationSet

# Raw Newton steps blow up as contexts become near-deterministic (curvature
# tends to 0); bound the per-leaf score movement like standard boosted trees.
MAX_LEAF_OUTPUT = 10.0
CURVATURE_EPS = 1e-12


def _softmax(values: np.ndarray) -> np.ndarray:
    shifted = values - values.max()
    exps = np.exp(shifted)
    return exps / exps.sum()


def conditional_probs(scores: np.ndarray, context: ContextSet) -> np.ndarray:
    """p(d | context) for every member, aligned with ``member_indices``."""
    scores = np.asarray(scores, dtype=np.float64)
    if not np.all(np.isfinite(scores)):
        raise ValidationError("scores must be finite")
    members = np.asarray(context.member_indices, dtype=np.intp)
    return _softmax(scores[members])


@dataclass
class PLWorkspace:
    """Per-query scores and the conditional probabilities of every context."""

    scores: np.ndarray
    probs_per_context: list[np.ndarray]


def build_workspace(scores: np.ndarray, pset: PermutationSet) -> PLWorkspace:
    scores = np.asarray(scores, dtype=np.float64)
    probs = [
        _softmax(scores[np.asarray(ctx.member_indices, dtype=np.intp)])
        for ctx in pset.contexts
    ]
    return PLWorkspace(scores=scores, probs_per_context=probs)


def log_likelihood(scores: np.ndarray, pset: PermutationSet) -> float:
    """Summed log p(champion | context); computed via log-sum-exp, always <= 0."""
    scores = np.asarray(scores, dtype=np.float64)
    total = 0.0
    for ctx in pset.contexts:
        member_scores = scores[np.asarray(ctx.member_indices, dtype=np.intp)]
        high = member_scores.max()
        total += scores[ctx.champion_index] - high - np.log(
            np.exp(member_scores - high).sum()
        )
    return float(total)


def pseudo_response(scores: np.ndarray, pset: PermutationSet) -> np.ndarray:
    """Ascent-direction gradient of the log-likelihood per document score."""
    scores = np.asarray(scores, dtype=np.float64)
    return response_from_workspace(build_workspace(scores, pset), pset)


def response_from_workspace(workspace: PLWorkspace, pset: PermutationSet) -> np.ndarray:
    resp = np.zeros(workspace.scores.shape[0], dtype=np.float64)
    for ctx, probs in zip(pset.contexts, workspace.probs_per_context):
        members = np.asarray(ctx.member_indices, dtype=np.intp)
        resp[members] -= probs
        resp[ctx.champion_index] += 1.0
    return resp


@dataclass
class QueryContexts:
    """Bundle tying a query's contexts to global document ids.

    ``doc_ids[i]`` is the global ordinal of the query-local document ``i``;
    member arrays and champions are cached for the training hot loop.
    """

    doc_ids: np.ndarray
    pset: PermutationSet
    members: list[np.ndarray] = field(default_factory=list)
    champions: np.ndarray = field(default_factory=lambda: np.zeros(0, dtype=np.intp))
    workspace: PLWorkspace | None = None

    @classmethod
    def create(cls, doc_ids: Sequence[int], pset: PermutationSet) -> "QueryContexts":
        return cls(
            doc_ids=np.asarray(doc_ids, dtype=np.intp),
            pset=pset,
            members=[
                np.asarray(ctx.member_indices, dtype=np.intp) for ctx in pset.contexts
            ],
            champions=np.array(
                [ctx.champion_index for ctx in pset.contexts], dtype=np.intp
            ),
        )

    def refresh(self, all_scores: np.ndarray) -> np.ndarray:
        """Recompute the workspace from global scores; returns local scores."""
        local = all_scores[self.doc_ids]
        self.workspace = PLWorkspace(
            scores=local,
            probs_per_context=[_softmax(local[mem]) for mem in self.members],
        )
        return local


def leaf_newton_stats(
    leaf_docs: Iterable[int], queries: Sequence[QueryContexts]
) -> tuple[float, float]:
    """First and second derivative at 0 of the likelihood in the leaf offset.

    ``leaf_docs`` holds global document ids; every query must carry a
    workspace built against the current scores.
    """
    leaf = set(int(d) for d in leaf_docs)
    if not leaf:
        raise ValidationError("leaf must contain at least one document")
    lprime = 0.0
    ldouble = 0.0
    for query in queries:
        if query.workspace is None:
            raise ValidationError("query workspace not built")
        doc_ids = query.doc_ids
        for ctx, members, probs in zip(
            query.pset.contexts, query.members, query.workspace.probs_per_context
        ):
            in_leaf = np.fromiter(
                (int(doc_ids[m]) in leaf for m in members), dtype=bool, count=len(members)
            )
            mass = float(probs[in_leaf].sum())
            if int(doc_ids[ctx.champion_index]) in leaf:
                lprime += 1.0
            lprime -= mass
            ldouble += mass * (mass - 1.0)
    return lprime, ldouble


def leaf_newton_value(
    leaf_docs: Iterable[int], queries: Sequence[QueryContexts]
) -> float:
    """Newton ratio L'(0)/L''(0); 0.0 when the direction is flat."""
    lprime, ldouble = leaf_newton_stats(leaf_docs, queries)
    if abs(ldouble) < CURVATURE_EPS:
        return 0.0
    return lprime / ldouble


def newton_leaf_outputs(
    assign: np.ndarray,
    n_leaves: int,
    queries: Sequence[QueryContexts],
    responses: np.ndarray,
) -> np.ndarray:
    """Applied output -L'(0)/L''(0) for every leaf of a fitted tree.

    ``assign`` maps a global document id to its leaf position. The curvature
    is never positive, so the applied output moves the likelihood uphill; its
    magnitude is clamped to :data:`MAX_LEAF_OUTPUT`.
    """
    grad = np.bincount(assign, weights=responses, minlength=n_leaves)
    curv = np.zeros(n_leaves, dtype=np.float64)
    for query in queries:
        leaf_of = assign[query.doc_ids]
        for members, probs in zip(query.members, query.workspace.probs_per_context):
            mass = np.bincount(leaf_of[members], weights=probs, minlength=n_leaves)
            curv += mass * (mass - 1.0)
    with np.errstate(divide="ignore", invalid="ignore"):
        out = -grad / curv
    out[np.abs(curv) < CURVATURE_EPS] = 0.0
    return np.clip(out, -MAX_LEAF_OUTPUT, MAX_LEAF_OUTPUT)

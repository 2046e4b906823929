"""Sampling of top-K ground-truth permutations with compressed storage.

Relevance grades tie frequently, so many ground-truth permutations are
consistent with the grades. Each sampled permutation is materialized as the
sequence of context sets it induces (the not-yet-placed documents at every
position, with the document placed there as champion). Context sets repeat
heavily across samples; they are stored deduplicated by member set, so adding
a permutation often adds only a term or two.
"""

from __future__ import annotations

from dataclasses import dataclass

import numpy as np

from .data import QueryGroup
from .errors import ValidationError


@dataclass(frozen=True)
class ContextSet:
    """Softmax normalization pool at one rank position.

    ``member_indices`` are the query-local indices of documents still
    unplaced; ``champion_index`` is the one the ground truth puts first.
    """

    member_indices: tuple[int, ...]
    champion_index: int


@dataclass
class PermutationSet:
    """Deduplicated context sets of all sampled permutations for one query."""

    contexts: list[ContextSet]
    k: int
    raw_term_count: int
    objective_count: int


def sample_permutation(relevances: np.ndarray, rng: np.random.Generator) -> np.ndarray:
    """One ground-truth permutation: shuffle, then stable-sort by grade.

    The shuffle followed by a stable descending sort draws uniformly among
    the orderings consistent with the grades.
    """
    n = relevances.shape[0]
    order = rng.permutation(n)
    return order[np.argsort(-relevances[order], kind="stable")]


def build_permutations(
    group: QueryGroup,
    k: int,
    num_objectives: int,
    rng: np.random.Generator,
) -> PermutationSet:
    """Sample ``num_objectives`` top-K permutations and store their contexts.

    Contexts with a single member are dropped (their conditional probability
    is identically 1), and duplicates across samples are kept once: the
    normalization pool is what costs storage and computation, so identity is
    the member set, with the champion taken from the first occurrence.
    """
    if k < 1:
        raise ValidationError(f"top-K cutoff must be >= 1, got {k}")
    if num_objectives < 1:
        raise ValidationError(f"objective count must be >= 1, got {num_objectives}")

    relevances = group.relevances()
    n = relevances.shape[0]
    contexts: list[ContextSet] = []
    seen: set[frozenset[int]] = set()
    raw_terms = 0
    for _ in range(num_objectives):
        perm = sample_permutation(relevances, rng)
        for j in range(min(k, n)):
            members = perm[j:]
            if members.size < 2:
                break
            raw_terms += 1
            key = frozenset(int(i) for i in members)
            if key in seen:
                continue
            seen.add(key)
            contexts.append(
                ContextSet(
                    member_indices=tuple(sorted(int(i) for i in members)),
                    champion_index=int(perm[j]),
                )
            )
    return PermutationSet(
        contexts=contexts,
        k=k,
        raw_term_count=raw_terms,
        objective_count=num_objectives,
    )


def compression_ratio(pset: PermutationSet) -> tuple[float, float]:
    """Fraction of terms kept after dedup and the equivalent objective count."""
    if pset.raw_term_count == 0:
        return 1.0, 0.0
    ratio = len(pset.contexts) / pset.raw_term_count
    return ratio, pset.objective_count * ratio

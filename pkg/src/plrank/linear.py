"""Linear ListMLE: the listwise likelihood with linear scores and a Gaussian prior.

Scores are w . h(d). The objective sums log p(champion | context) over the
sampled top-K ground-truth contexts of every query and subtracts the ridge
term w'w / 2; it is smooth and concave, so a quasi-Newton ascent from w = 0
finds the global optimum.
"""

from __future__ import annotations

from dataclasses import dataclass
from typing import Callable

import numpy as np
from scipy.optimize import minimize

from .data import Dataset, dense_features
from .errors import ConfigError
from .permutation import PermutationSet, build_permutations

GRADIENT_TOL = 1e-6


@dataclass
class LinearModel:
    weights: np.ndarray

    def predict_matrix(self, X: np.ndarray) -> np.ndarray:
        return np.asarray(X, dtype=np.float64)[:, : self.weights.size] @ self.weights


def _query_terms(
    dataset: Dataset, k: int, objectives: int, seed: int, width: int
) -> list[tuple[np.ndarray, PermutationSet]]:
    terms = []
    for group in dataset.groups:
        rng = np.random.default_rng([seed, group.query_id])
        pset = build_permutations(group, k, objectives, rng)
        if pset.contexts:
            terms.append((dense_features(group, width), pset))
    return terms


def _objective_and_gradient(
    weights: np.ndarray, terms: list[tuple[np.ndarray, PermutationSet]]
) -> tuple[float, np.ndarray]:
    objective = 0.0
    gradient = np.zeros_like(weights)
    for X, pset in terms:
        scores = X @ weights
        for ctx in pset.contexts:
            members = np.asarray(ctx.member_indices, dtype=np.intp)
            member_scores = scores[members]
            high = member_scores.max()
            exps = np.exp(member_scores - high)
            total = exps.sum()
            objective += scores[ctx.champion_index] - high - np.log(total)
            probs = exps / total
            gradient += X[ctx.champion_index] - probs @ X[members]
    objective -= 0.5 * float(weights @ weights)
    gradient -= weights
    return objective, gradient


def linear_objective_and_gradient(
    weights: np.ndarray,
    dataset: Dataset,
    k: int = 10,
    objectives: int = 1,
    seed: int = 42,
) -> tuple[float, np.ndarray]:
    """Penalized log-likelihood and its gradient at ``weights``.

    Permutation sampling is re-derived from the seed, so repeated calls see
    the same ground-truth contexts.
    """
    weights = np.asarray(weights, dtype=np.float64)
    if weights.size < dataset.max_feature_index:
        raise ConfigError(
            f"weight vector of length {weights.size} cannot cover "
            f"{dataset.max_feature_index} features"
        )
    terms = _query_terms(dataset, k, objectives, seed, weights.size)
    return _objective_and_gradient(weights, terms)


def train_linear(
    dataset: Dataset,
    k: int = 10,
    objectives: int = 1,
    iterations: int = 100,
    seed: int = 42,
    on_iteration: Callable[[str], None] | None = None,
) -> LinearModel:
    """Maximize the penalized likelihood from w = 0 with L-BFGS-B.

    Stops at the iteration cap or when the projected gradient drops below
    :data:`GRADIENT_TOL`. Queries without ranking information (single
    document) contribute only the prior, which keeps their pull at w = 0.
    """
    if iterations < 1:
        raise ConfigError(f"iteration cap must be >= 1, got {iterations}")
    width = dataset.max_feature_index
    if width == 0:
        return LinearModel(weights=np.zeros(0, dtype=np.float64))
    terms = _query_terms(dataset, k, objectives, seed, width)

    def negated(w: np.ndarray) -> tuple[float, np.ndarray]:
        obj, grad = _objective_and_gradient(w, terms)
        return -obj, -grad

    count = [0]

    def callback(w: np.ndarray) -> None:
        count[0] += 1
        if on_iteration is not None:
            obj, _ = _objective_and_gradient(w, terms)
            on_iteration(f"iter={count[0]} objective={obj:.6f}")

    result = minimize(
        negated,
        np.zeros(width, dtype=np.float64),
        jac=True,
        method="L-BFGS-B",
        callback=callback,
        options={"maxiter": iterations, "gtol": GRADIENT_TOL, "maxcor": 10},
    )
    return LinearModel(weights=np.asarray(result.x, dtype=np.float64))

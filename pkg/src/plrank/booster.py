"""Gradient boosting driver for the likelihood ranker and the MART baselines.

One iteration computes the loss-specific pseudo-responses over all documents,
fits one regression tree to them, sets its leaf outputs (Newton values for
the likelihood loss, mean responses for the square losses), and advances the
per-document scores by the learning rate times the tree output.
"""

from __future__ import annotations

import copy
from dataclasses import dataclass, field
from typing import Callable

import numpy as np

from . import pl_objective
from .data import Dataset, dense_features
from .errors import ConfigError, ValidationError
from .metrics import dcg_at_k, evaluate
from .permutation import build_permutations
from .pl_objective import QueryContexts, newton_leaf_outputs, response_from_workspace
from .tree import (
    Ensemble,
    RegressionTree,
    apply_tree,
    fit_tree,
    predict_ensemble_matrix,
)

TREE_LOSSES = ("plrank", "mart1", "mart2", "cmart1")


@dataclass
class TrainConfig:
    loss: str = "plrank"
    trees: int = 1000
    leaves: int = 30
    learning_rate: float = 0.1
    top_k: int = 10
    objectives: int = 1
    seed: int = 42
    min_leaf_docs: int = 1
    histogram_bins: int = 0  # 0 = exact threshold search
    init_model: Ensemble | None = None

    def validate(self) -> None:
        if self.loss not in TREE_LOSSES:
            raise ConfigError(f"unknown loss {self.loss!r}")
        if self.trees < 1:
            raise ConfigError(f"tree count must be >= 1, got {self.trees}")
        if self.leaves < 2:
            raise ConfigError(f"leaf count must be >= 2, got {self.leaves}")
        if not 0.0 < self.learning_rate <= 1.0:
            raise ConfigError(
                f"learning rate must be in (0, 1], got {self.learning_rate}"
            )
        if self.top_k < 1:
            raise ConfigError(f"top-K must be >= 1, got {self.top_k}")
        if self.objectives < 1:
            raise ConfigError(f"objective count must be >= 1, got {self.objectives}")
        if self.min_leaf_docs < 1:
            raise ConfigError(f"min leaf docs must be >= 1, got {self.min_leaf_docs}")
        if self.histogram_bins < 0 or self.histogram_bins == 1:
            raise ConfigError(
                f"histogram bins must be 0 (exact) or >= 2, got {self.histogram_bins}"
            )


@dataclass
class TrainTrace:
    objective_name: str  # "loglik" or "sse"
    initial_objective: float
    top_k: int
    objectives: list[float] = field(default_factory=list)
    valid_ndcg: list[float] | None = None

    def iteration_line(self, i: int) -> str:
        line = f"iter={i} objective={self.objectives[i - 1]:.6f}"
        if self.valid_ndcg is not None:
            line += f" valid_ndcg@{self.top_k}={self.valid_ndcg[i - 1]:.6f}"
        return line

    def iteration_lines(self) -> list[str]:
        return [self.iteration_line(i) for i in range(1, len(self.objectives) + 1)]


def gain(relevance: np.ndarray | int) -> np.ndarray | float:
    return 2.0**relevance - 1.0


def mart_response(
    scores: np.ndarray,
    grades: np.ndarray,
    variant: str,
    query_norm: float = 1.0,
) -> np.ndarray:
    """Negative square-loss gradient (the residual) for one query.

    mart2 targets the raw grades, mart1 the exponential gains, and cmart1 the
    gains scaled by ``query_norm`` (the DCG of the query's ground-truth
    permutation). A zero norm means an all-zero-gain query: targets are 0.
    """
    scores = np.asarray(scores, dtype=np.float64)
    grades = np.asarray(grades)
    if variant == "mart2":
        target = grades.astype(np.float64)
    elif variant == "mart1":
        target = gain(grades)
    elif variant == "cmart1":
        target = gain(grades) / query_norm if query_norm > 0.0 else np.zeros(len(grades))
    else:
        raise ValidationError(f"unknown square-loss variant {variant!r}")
    return target - scores


def _feature_matrix(dataset: Dataset, width: int) -> np.ndarray:
    X = np.zeros((dataset.num_documents, width), dtype=np.float64)
    for group in dataset.groups:
        X[group.doc_ids] = dense_features(group, width)
    return X


def _rescaled_copy(tree: RegressionTree, factor: float) -> RegressionTree:
    clone = copy.deepcopy(tree)
    for leaf in clone.leaves():
        leaf.output *= factor
    return clone


def train(
    dataset: Dataset,
    config: TrainConfig,
    valid_dataset: Dataset | None = None,
    on_iteration: Callable[[str], None] | None = None,
) -> tuple[Ensemble, TrainTrace]:
    """Run the boosting loop and return the ensemble plus its trace.

    Ground-truth permutations are sampled once up front and frozen; the
    objective would otherwise change mid-run. With ``valid_dataset`` given,
    each trace entry also carries validation NDCG at the configured cutoff.
    """
    config.validate()
    if not dataset.groups:
        raise ConfigError("training dataset has no queries")

    width = dataset.max_feature_index
    if config.init_model is not None:
        width = max(width, config.init_model.num_features)
    X = _feature_matrix(dataset, width)
    n_docs = X.shape[0]

    if config.init_model is not None:
        scores = predict_ensemble_matrix(config.init_model, X)
    else:
        scores = np.zeros(n_docs, dtype=np.float64)

    if config.loss == "plrank":
        queries = []
        for group in dataset.groups:
            rng = np.random.default_rng([config.seed, group.query_id])
            pset = build_permutations(group, config.top_k, config.objectives, rng)
            if pset.contexts:
                queries.append(QueryContexts.create(group.doc_ids, pset))
        if not queries:
            raise ConfigError(
                "likelihood loss needs at least one query with 2+ documents"
            )

        def objective() -> float:
            return sum(
                pl_objective.log_likelihood(scores[q.doc_ids], q.pset) for q in queries
            )

        trace = TrainTrace("loglik", objective(), config.top_k)
    else:
        grades_of: list[np.ndarray] = []
        norms: list[float] = []
        for group in dataset.groups:
            rel = group.relevances()
            grades_of.append(rel)
            norms.append(dcg_at_k(sorted(rel.tolist(), reverse=True), len(rel)))
        targets = np.zeros(n_docs, dtype=np.float64)
        for group, rel, norm in zip(dataset.groups, grades_of, norms):
            targets[group.doc_ids] = mart_response(
                np.zeros(len(rel)), rel, config.loss, norm
            )

        def objective() -> float:
            return float(np.sum((targets - scores) ** 2))

        trace = TrainTrace("sse", objective(), config.top_k)

    valid_scores = None
    valid_X = None
    if valid_dataset is not None:
        trace.valid_ndcg = []
        # Extra validation columns are harmless: trees only route on columns
        # seen during training.
        valid_X = _feature_matrix(
            valid_dataset, max(width, valid_dataset.max_feature_index)
        )
        valid_scores = np.zeros(valid_X.shape[0], dtype=np.float64)
        if config.init_model is not None:
            valid_scores = predict_ensemble_matrix(config.init_model, valid_X)

    new_trees: list[RegressionTree] = []
    for it in range(1, config.trees + 1):
        if config.loss == "plrank":
            responses = np.zeros(n_docs, dtype=np.float64)
            for q in queries:
                q.refresh(scores)
                responses[q.doc_ids] = response_from_workspace(q.workspace, q.pset)
        else:
            responses = targets - scores

        tree = fit_tree(
            X, responses, config.leaves, config.min_leaf_docs, config.histogram_bins
        )
        leaves = tree.leaves()
        assign = apply_tree(tree, X)
        if config.loss == "plrank":
            outputs = newton_leaf_outputs(assign, len(leaves), queries, responses)
            for leaf, value in zip(leaves, outputs):
                leaf.output = float(value)
        else:
            outputs = np.array([leaf.output for leaf in leaves], dtype=np.float64)

        scores = scores + config.learning_rate * outputs[assign]
        new_trees.append(tree)
        trace.objectives.append(objective())

        if valid_scores is not None:
            step = outputs[apply_tree(tree, valid_X)]
            valid_scores = valid_scores + config.learning_rate * step
            report = evaluate(valid_dataset, valid_scores, [config.top_k])
            trace.valid_ndcg.append(report.ndcg_at[config.top_k])
        if on_iteration is not None:
            on_iteration(trace.iteration_line(it))

    trees = list(new_trees)
    init_score = 0.0
    if config.init_model is not None:
        factor = config.init_model.learning_rate / config.learning_rate
        trees = [_rescaled_copy(t, factor) for t in config.init_model.trees] + trees
        init_score = config.init_model.init_score

    ensemble = Ensemble(
        trees=trees,
        learning_rate=config.learning_rate,
        init_score=init_score,
        loss=config.loss,
        top_k=config.top_k,
        num_features=width,
    )
    return ensemble, trace

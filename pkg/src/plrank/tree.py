"""Best-first regression trees and the boosted ensemble container.

Trees grow leaf-wise under a leaf budget: at every step the growable leaf
whose best split removes the most squared error is split, so small budgets
spend their leaves where they matter. Candidate thresholds are midpoints
between consecutive distinct sorted feature values by default; an optional
uniform-histogram mode trades exactness for speed.
"""

from __future__ import annotations

import math
from dataclasses import dataclass, field

import numpy as np

from .errors import ValidationError

# Gains at or below this are treated as no reduction (guards float dust on
# constant responses).
_GAIN_EPS = 1e-12


@dataclass
class Leaf:
    output: float
    doc_count: int


@dataclass
class Split:
    feature: int  # 0-based dense column
    threshold: float
    left: "Leaf | Split"
    right: "Leaf | Split"


Node = Leaf | Split


@dataclass
class RegressionTree:
    root: Node
    leaf_count: int

    def leaves(self) -> list[Leaf]:
        """Leaves in preorder; the order used by apply_tree and the model file."""
        out: list[Leaf] = []
        stack: list[Node] = [self.root]
        while stack:
            node = stack.pop()
            if isinstance(node, Leaf):
                out.append(node)
            else:
                stack.append(node.right)
                stack.append(node.left)
        return out


@dataclass
class Ensemble:
    trees: list[RegressionTree] = field(default_factory=list)
    learning_rate: float = 0.1
    init_score: float = 0.0
    loss: str = "plrank"
    top_k: int = 10
    num_features: int = 0


def _exact_candidates(
    values: np.ndarray, ysub: np.ndarray, total: float, min_leaf_docs: int
) -> tuple[np.ndarray, np.ndarray, np.ndarray] | None:
    """Gains at midpoints between consecutive distinct sorted values."""
    n = values.size
    order = np.argsort(values, kind="stable")
    v = values[order]
    left_cnt = np.arange(1, n, dtype=np.float64)
    right_cnt = n - left_cnt
    left_sum = np.cumsum(ysub[order])[:-1]
    right_sum = total - left_sum
    gains = left_sum**2 / left_cnt + right_sum**2 / right_cnt - total * total / n
    valid = (
        (v[1:] != v[:-1])
        & (left_cnt >= min_leaf_docs)
        & (right_cnt >= min_leaf_docs)
    )
    if not valid.any():
        return None
    return gains, valid, 0.5 * (v[:-1] + v[1:])


def _binned_candidates(
    values: np.ndarray, ysub: np.ndarray, total: float, min_leaf_docs: int, bins: int
) -> tuple[np.ndarray, np.ndarray, np.ndarray] | None:
    """Gains at uniform-histogram boundaries.

    The reported threshold is the largest value in the left bins, so routing
    by ``value <= threshold`` reproduces the histogram partition exactly.
    """
    n = values.size
    lo = values.min()
    hi = values.max()
    if lo == hi:
        return None
    bin_idx = np.minimum(
        ((values - lo) * (bins / (hi - lo))).astype(np.int64), bins - 1
    )
    counts = np.bincount(bin_idx, minlength=bins)
    sums = np.bincount(bin_idx, weights=ysub, minlength=bins)
    bin_max = np.full(bins, -np.inf)
    np.maximum.at(bin_max, bin_idx, values)
    left_cnt = np.cumsum(counts)[:-1].astype(np.float64)
    right_cnt = n - left_cnt
    left_sum = np.cumsum(sums)[:-1]
    right_sum = total - left_sum
    valid = (left_cnt >= min_leaf_docs) & (right_cnt >= min_leaf_docs)
    if not valid.any():
        return None
    with np.errstate(divide="ignore", invalid="ignore"):
        gains = (
            left_sum**2 / left_cnt + right_sum**2 / right_cnt - total * total / n
        )
    return gains, valid, np.maximum.accumulate(bin_max)[:-1]


def _best_split(
    X: np.ndarray,
    y: np.ndarray,
    idx: np.ndarray,
    min_leaf_docs: int,
    bins: int = 0,
) -> tuple[float, int, float] | None:
    """Strongest (gain, feature, threshold) for the documents in ``idx``.

    Gain is the squared-error reduction. Ties resolve to the lowest feature
    index, then the lowest threshold, so results do not depend on search
    order.
    """
    n = idx.size
    if n < 2 * min_leaf_docs:
        return None
    ysub = y[idx]
    if ysub.max() == ysub.min():
        return None
    total = ysub.sum()
    best: tuple[float, int, float] | None = None
    for feat in range(X.shape[1]):
        values = X[idx, feat]
        if bins:
            found = _binned_candidates(values, ysub, total, min_leaf_docs, bins)
        else:
            found = _exact_candidates(values, ysub, total, min_leaf_docs)
        if found is None:
            continue
        gains, valid, thresholds = found
        gains = np.where(valid, gains, -np.inf)
        pos = int(np.argmax(gains))  # first max = lowest threshold
        gain = float(gains[pos])
        if gain <= _GAIN_EPS:
            continue
        if best is None or gain > best[0]:
            best = (gain, feat, float(thresholds[pos]))
    return best


@dataclass
class _Growable:
    order: int  # creation order, the tie-break across leaves
    leaf: Leaf
    idx: np.ndarray
    split: tuple[float, int, float] | None
    attach: "Split | None"  # parent node; None means root
    side: str = ""


def fit_tree(
    features: np.ndarray,
    responses: np.ndarray,
    leaf_limit: int,
    min_leaf_docs: int = 1,
    bins: int = 0,
) -> RegressionTree:
    """Fit an L-leaf tree to per-document responses by squared-error splits.

    Provisional leaf outputs are mean responses; the likelihood booster
    overwrites them with Newton values afterwards. ``bins > 0`` switches the
    candidate search from exact threshold enumeration to a uniform histogram
    with that many bins (a speed knob for wide data, off by default).
    """
    X = np.asarray(features, dtype=np.float64)
    y = np.asarray(responses, dtype=np.float64)
    if leaf_limit < 2:
        raise ValidationError(f"leaf limit must be >= 2, got {leaf_limit}")
    if min_leaf_docs < 1:
        raise ValidationError(f"min_leaf_docs must be >= 1, got {min_leaf_docs}")
    if bins < 0 or bins == 1:
        raise ValidationError(f"bins must be 0 (exact) or >= 2, got {bins}")
    if X.ndim != 2 or y.ndim != 1 or X.shape[0] != y.shape[0]:
        raise ValidationError("features and responses must align")
    if X.shape[0] < 2:
        raise ValidationError("need at least 2 documents to fit a tree")

    def make_growable(idx: np.ndarray, order: int, attach: Split | None, side: str):
        leaf = Leaf(output=float(y[idx].mean()), doc_count=int(idx.size))
        if attach is not None:
            setattr(attach, side, leaf)
        return _Growable(
            order=order,
            leaf=leaf,
            idx=idx,
            split=_best_split(X, y, idx, min_leaf_docs, bins),
            attach=attach,
            side=side,
        )

    counter = 0
    root_entry = make_growable(np.arange(X.shape[0]), counter, None, "")
    root: Node = root_entry.leaf
    frontier = [root_entry] if root_entry.split is not None else []
    leaf_count = 1

    while leaf_count < leaf_limit and frontier:
        pick = min(range(len(frontier)), key=lambda i: (-frontier[i].split[0], frontier[i].order))
        entry = frontier.pop(pick)
        gain, feat, threshold = entry.split
        node = Split(feature=feat, threshold=threshold, left=entry.leaf, right=entry.leaf)
        if entry.attach is None:
            root = node
        else:
            setattr(entry.attach, entry.side, node)
        mask = X[entry.idx, feat] <= threshold
        for side, sub in (("left", entry.idx[mask]), ("right", entry.idx[~mask])):
            counter += 1
            child = make_growable(sub, counter, node, side)
            if child.split is not None:
                frontier.append(child)
        leaf_count += 1

    return RegressionTree(root=root, leaf_count=leaf_count)


def apply_tree(tree: RegressionTree, X: np.ndarray) -> np.ndarray:
    """Leaf position (index into ``tree.leaves()``) for every row of X.

    Explicit stack in preorder, mirroring :meth:`RegressionTree.leaves`;
    recursion would cap the tree depth.
    """
    X = np.asarray(X, dtype=np.float64)
    out = np.zeros(X.shape[0], dtype=np.intp)
    next_leaf = 0
    stack: list[tuple[Node, np.ndarray]] = [(tree.root, np.arange(X.shape[0]))]
    while stack:
        node, rows = stack.pop()
        if isinstance(node, Leaf):
            out[rows] = next_leaf
            next_leaf += 1
            continue
        mask = X[rows, node.feature] <= node.threshold
        stack.append((node.right, rows[~mask]))
        stack.append((node.left, rows[mask]))
    return out


def predict_tree(tree: RegressionTree, features_row: np.ndarray) -> float:
    """Output of the unique leaf the row routes to (value <= threshold goes left)."""
    row = np.asarray(features_row, dtype=np.float64)
    node = tree.root
    while isinstance(node, Split):
        value = float(row[node.feature])
        if math.isnan(value):
            raise ValidationError(f"NaN in routed feature column {node.feature}")
        node = node.left if value <= node.threshold else node.right
    return node.output


def predict_ensemble(ensemble: Ensemble, features_row: np.ndarray) -> float:
    score = ensemble.init_score
    for tree in ensemble.trees:
        score += ensemble.learning_rate * predict_tree(tree, features_row)
    return score


def predict_tree_matrix(tree: RegressionTree, X: np.ndarray) -> np.ndarray:
    leaves = tree.leaves()
    outputs = np.array([leaf.output for leaf in leaves], dtype=np.float64)
    return outputs[apply_tree(tree, X)]


def predict_ensemble_matrix(ensemble: Ensemble, X: np.ndarray) -> np.ndarray:
    """Vectorized ensemble prediction; accumulates tree by tree like training."""
    X = np.asarray(X, dtype=np.float64)
    scores = np.full(X.shape[0], ensemble.init_score, dtype=np.float64)
    for tree in ensemble.trees:
        scores += ensemble.learning_rate * predict_tree_matrix(tree, X)
    return scores


def tree_sse(tree: RegressionTree, X: np.ndarray, y: np.ndarray) -> float:
    return float(np.sum((np.asarray(y) - predict_tree_matrix(tree, X)) ** 2))

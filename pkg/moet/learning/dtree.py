import logging
from dataclasses import dataclass
from typing import Optional, Tuple

import numpy as np

from moet.config import DEFAULT_SMOOTHING_EPS, MIN_SPLIT_GAIN, Criterion
from moet.learning.core import class_weight_fractions, smooth
from moet.models.datasets import ClassDistribution, WeightedDataset
from moet.models.errors import DegenerateWeightError
from moet.models.trees import InternalNode, LeafNode, TreeFitConfig, TreeNode

logger = logging.getLogger(__name__)


@dataclass(frozen=True)
class SplitCandidate:
    """
    Class representation of the best split of a node.

    Attributes:
        feature: Index of the feature tested.
        threshold: Midpoint between two consecutive distinct feature values.
        gain: Decrease in weighted impurity achieved by the split.
    """

    feature: int
    threshold: float
    gain: float


def _impurity_rows(class_weights: np.ndarray, totals: np.ndarray, criterion: Criterion) -> np.ndarray:
    fractions = class_weights / totals[:, None]
    if criterion == Criterion.ENTROPY:
        with np.errstate(divide="ignore", invalid="ignore"):
            terms = np.where(fractions > 0, fractions * np.log2(fractions), 0.0)
        return -terms.sum(axis=1)
    return 1.0 - np.sum(fractions * fractions, axis=1)


def _midpoint(low: float, high: float) -> float:
    mid = 0.5 * (low + high)
    # adjacent floats can round the midpoint up onto `high`
    return mid if mid < high else low


def best_split(
    data: WeightedDataset,
    indices=None,
    criterion: Criterion = Criterion.GINI,
) -> Optional[SplitCandidate]:
    """
    Find the axis-aligned split minimizing the weighted child impurity.

    Child impurities are computed from unsmoothed weighted class fractions and
    combined in proportion to the child weight sums. Ties go to the lowest
    feature index, then the lowest threshold.

    Args:
        data: The dataset.
        indices: Indices of the instances at the node; all instances if omitted.
        criterion: Impurity measure.

    Returns:
        The best split, or None if no split lowers impurity by more than MIN_SPLIT_GAIN.
    """
    if indices is None:
        indices = np.arange(len(data))
    indices = np.asarray(indices, dtype=np.int64)
    indices = indices[data.weights[indices] > 0]
    if len(indices) < 2:
        return None

    labels = data.labels[indices]
    weights = data.weights[indices]
    one_hot = np.zeros((len(indices), data.num_classes))
    one_hot[np.arange(len(indices)), labels] = weights
    parent_weights = one_hot.sum(axis=0)
    total = parent_weights.sum()
    parent = _impurity_rows(parent_weights[None, :], np.array([total]), criterion)[0]

    best: Optional[SplitCandidate] = None
    for feature in range(data.num_features):
        values = data.features[indices, feature]
        order = np.argsort(values, kind="stable")
        sorted_values = values[order]
        boundaries = np.nonzero(sorted_values[1:] > sorted_values[:-1])[0]
        if len(boundaries) == 0:
            continue

        cumulative = np.cumsum(one_hot[order], axis=0)
        left = cumulative[boundaries]
        right = parent_weights[None, :] - left
        left_total = left.sum(axis=1)
        right_total = total - left_total
        children = (
            left_total * _impurity_rows(left, left_total, criterion)
            + right_total * _impurity_rows(right, right_total, criterion)
        ) / total
        gains = parent - children

        top = gains.max()
        position = int(np.nonzero(gains >= top - MIN_SPLIT_GAIN)[0][0])
        gain = float(gains[position])
        if best is None or gain > best.gain + MIN_SPLIT_GAIN:
            boundary = boundaries[position]
            threshold = _midpoint(float(sorted_values[boundary]), float(sorted_values[boundary + 1]))
            best = SplitCandidate(feature, threshold, gain)

    if best is None or not best.gain > MIN_SPLIT_GAIN:
        return None
    return best


def fit_tree(
    data: WeightedDataset,
    cfg: TreeFitConfig,
    smoothing_eps: float = DEFAULT_SMOOTHING_EPS,
) -> TreeNode:
    """
    Fit a decision tree by greedy recursive partitioning.

    Instances with zero weight are dropped first. A node becomes a leaf when it
    reaches `cfg.max_depth`, is pure, carries less than `cfg.min_weight_split`
    weight, or has no split with positive gain. Leaves hold the smoothed
    weighted class distribution of their instances.

    Args:
        data: The training data.
        cfg: Stopping rules and impurity measure.
        smoothing_eps: Additive smoothing of leaf distributions.

    Returns:
        The root of the fitted tree.

    Raises:
        DegenerateWeightError: If the data carries no positive weight.
    """
    total = data.total_weight
    if not total > 0:
        raise DegenerateWeightError(total)

    def build(indices: np.ndarray, depth: int) -> TreeNode:
        fractions = class_weight_fractions(data.labels[indices], data.weights[indices], data.num_classes)
        leaf = LeafNode(ClassDistribution(tuple(smooth(fractions, smoothing_eps))))
        if (
            depth >= cfg.max_depth
            or np.count_nonzero(fractions) <= 1
            or data.weights[indices].sum() < cfg.min_weight_split
        ):
            return leaf
        split = best_split(data, indices, cfg.criterion)
        if split is None:
            return leaf
        goes_left = data.features[indices, split.feature] <= split.threshold
        return InternalNode(
            feature=split.feature,
            threshold=split.threshold,
            left=build(indices[goes_left], depth + 1),
            right=build(indices[~goes_left], depth + 1),
        )

    root = build(np.nonzero(data.weights > 0)[0], 0)
    logger.debug("Fitted tree with (depth, nodes) = %s on %d instances", tree_stats(root), len(data))
    return root


def predict_proba(tree: TreeNode, x) -> ClassDistribution:
    """
    Class distribution of the leaf reached by `x`; values equal to a threshold go left.
    """
    node = tree
    while isinstance(node, InternalNode):
        node = node.left if x[node.feature] <= node.threshold else node.right
    return node.dist


def predict_proba_batch(tree: TreeNode, features: np.ndarray) -> np.ndarray:
    """
    Leaf distributions for every row of an N x F array.

    Returns:
        N x C array whose row i equals `predict_proba(tree, features[i])`.
    """
    features = np.atleast_2d(np.asarray(features, dtype=float))
    out = None

    def descend(node: TreeNode, rows: np.ndarray):
        nonlocal out
        if isinstance(node, LeafNode):
            if out is None:
                out = np.zeros((len(features), node.dist.num_classes))
            out[rows] = node.dist.as_array()
            return
        goes_left = features[rows, node.feature] <= node.threshold
        descend(node.left, rows[goes_left])
        descend(node.right, rows[~goes_left])

    descend(tree, np.arange(len(features)))
    return out


def tree_stats(tree: TreeNode) -> Tuple[int, int]:
    """
    Depth and node count; a single leaf is (0, 1).
    """
    if isinstance(tree, LeafNode):
        return 0, 1
    left_depth, left_nodes = tree_stats(tree.left)
    right_depth, right_nodes = tree_stats(tree.right)
    return 1 + max(left_depth, right_depth), 1 + left_nodes + right_nodes

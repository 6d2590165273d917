from typing import Sequence, Union

import numpy as np

from moet.config import DEFAULT_SMOOTHING_EPS, Criterion
from moet.models.datasets import ClassDistribution, WeightedDataset
from moet.models.errors import DegenerateWeightError

DistributionLike = Union[ClassDistribution, np.ndarray, Sequence[float]]


def _as_probs(dist: DistributionLike) -> np.ndarray:
    if isinstance(dist, ClassDistribution):
        return dist.as_array()
    return np.asarray(dist, dtype=float)


def class_weight_fractions(labels: np.ndarray, weights: np.ndarray, num_classes: int) -> np.ndarray:
    """
    Unsmoothed weighted class fractions of a set of instances.

    Args:
        labels: Class index of every instance.
        weights: Weight of every instance.
        num_classes: Number of classes C.

    Returns:
        Length-C array of weight fractions.

    Raises:
        DegenerateWeightError: If the weights do not sum to a positive value.
    """
    totals = np.bincount(labels, weights=weights, minlength=num_classes).astype(float)
    total = totals.sum()
    if not total > 0:
        raise DegenerateWeightError(float(total))
    return totals / total


def smooth(fractions: np.ndarray, smoothing_eps: float = DEFAULT_SMOOTHING_EPS) -> np.ndarray:
    """
    Add `smoothing_eps` to every class and renormalize.
    """
    fractions = np.asarray(fractions, dtype=float)
    return (fractions + smoothing_eps) / (1.0 + len(fractions) * smoothing_eps)


def weighted_class_distribution(
    data: WeightedDataset,
    indices=None,
    smoothing_eps: float = DEFAULT_SMOOTHING_EPS,
) -> ClassDistribution:
    """
    Weighted class estimate of a set of instances.

    Class fractions are weight sums, then additively smoothed so no class has
    zero probability.

    Args:
        data: The dataset.
        indices: Indices of the instances to use; all instances if omitted.
        smoothing_eps: Additive per-class smoothing.

    Returns:
        The smoothed class distribution.

    Raises:
        DegenerateWeightError: If the selected instances carry no weight.
    """
    if indices is None:
        indices = np.arange(len(data))
    indices = np.asarray(indices, dtype=np.int64)
    fractions = class_weight_fractions(data.labels[indices], data.weights[indices], data.num_classes)
    return ClassDistribution(tuple(smooth(fractions, smoothing_eps)))


def gini_index(dist: DistributionLike) -> float:
    """
    Gini impurity 1 - sum(p^2).
    """
    probs = _as_probs(dist)
    return float(1.0 - np.dot(probs, probs))


def entropy_index(dist: DistributionLike) -> float:
    """
    Shannon entropy in bits; zero-probability classes contribute nothing.
    """
    probs = _as_probs(dist)
    nonzero = probs[probs > 0]
    return float(-np.sum(nonzero * np.log2(nonzero)))


def impurity(dist: DistributionLike, criterion: Criterion = Criterion.GINI) -> float:
    if criterion == Criterion.ENTROPY:
        return entropy_index(dist)
    return gini_index(dist)


def argmax_class(dist: DistributionLike) -> int:
    """
    Most probable class; the lowest index wins ties.
    """
    return int(np.argmax(_as_probs(dist)))

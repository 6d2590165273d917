from dataclasses import dataclass
from typing import Union

from dataclasses_json import dataclass_json

from moet.config import DEFAULT_MIN_WEIGHT_SPLIT, Criterion
from moet.models.datasets import ClassDistribution
from moet.models.errors import ConfigError


@dataclass(frozen=True)
class LeafNode:
    """
    Class representation of a tree leaf.

    Attributes:
        dist: Smoothed weighted class distribution of the instances reaching the leaf.
    """

    dist: ClassDistribution


@dataclass(frozen=True)
class InternalNode:
    """
    Class representation of an axis-aligned split.

    Instances with `x[feature] <= threshold` go to `left`, all others to `right`.

    Attributes:
        feature: Index of the feature tested.
        threshold: Split value.
        left: Subtree for feature values at or below the threshold.
        right: Subtree for feature values above the threshold.
    """

    feature: int
    threshold: float
    left: "TreeNode"
    right: "TreeNode"


TreeNode = Union[InternalNode, LeafNode]
""" A decision tree, identified with its root node. """


@dataclass_json
@dataclass(frozen=True)
class TreeFitConfig:
    """
    Class representation of the stopping rules of the tree learner.

    Attributes:
        max_depth: Maximum depth; 0 yields a single leaf.
        min_weight_split: Nodes with less total weight are not split.
        criterion: Impurity measure used to score splits.
    """

    max_depth: int
    min_weight_split: float = DEFAULT_MIN_WEIGHT_SPLIT
    criterion: Criterion = Criterion.GINI

    def __post_init__(self):
        if self.max_depth < 0:
            raise ConfigError(f"max_depth must be >= 0, got {self.max_depth}.")
        if not self.min_weight_split > 0:
            raise ConfigError(f"min_weight_split must be > 0, got {self.min_weight_split}.")
        object.__setattr__(self, "criterion", Criterion(self.criterion))

from dataclasses import dataclass
from typing import List, Sequence, Tuple

import numpy as np

from moet.models.errors import ConfigError


@dataclass(frozen=True)
class WeightedExample:
    """
    Class representation of one labeled instance with a responsibility weight.

    Attributes:
        features: Feature vector in environment units.
        label: Class index.
        weight: Non-negative instance weight.
    """

    features: Tuple[float, ...]
    label: int
    weight: float = 1.0


@dataclass(frozen=True)
class WeightedDataset:
    """
    Class representation of a labeled, instance-weighted dataset.

    The dataset is stored column-wise as numpy arrays; `examples` gives the row view.

    Attributes:
        features: N x F array of finite feature values.
        labels: Length-N array of class indices in [0, num_classes).
        weights: Length-N array of non-negative weights.
        num_classes: Number of classes C.
    """

    features: np.ndarray
    labels: np.ndarray
    weights: np.ndarray
    num_classes: int

    def __post_init__(self):
        features = np.asarray(self.features, dtype=float)
        if features.ndim == 1:
            features = features.reshape(-1, 1)
        labels = np.asarray(self.labels, dtype=np.int64).reshape(-1)
        weights = np.asarray(self.weights, dtype=float).reshape(-1)

        if features.ndim != 2:
            raise ConfigError("Features must be a 2-D array.")
        if not (len(features) == len(labels) == len(weights)):
            raise ConfigError("Features, labels and weights must have the same length.")
        if self.num_classes < 1:
            raise ConfigError("A dataset needs at least one class.")
        if not np.all(np.isfinite(features)):
            raise ConfigError("Features must be finite.")
        if len(labels) and (labels.min() < 0 or labels.max() >= self.num_classes):
            raise ConfigError(f"Labels must lie in [0, {self.num_classes}).")
        if np.any(weights < 0) or not np.all(np.isfinite(weights)):
            raise ConfigError("Weights must be finite and non-negative.")

        object.__setattr__(self, "features", features)
        object.__setattr__(self, "labels", labels)
        object.__setattr__(self, "weights", weights)

    @classmethod
    def from_examples(cls, examples: Sequence[WeightedExample], num_classes: int) -> "WeightedDataset":
        """
        Build a dataset from a sequence of examples.

        Args:
            examples: The examples; all must have the same number of features.
            num_classes: Number of classes C.

        Returns:
            The dataset.
        """
        if not examples:
            raise ConfigError("Cannot build a dataset from zero examples.")
        num_features = len(examples[0].features)
        if any(len(e.features) != num_features for e in examples):
            raise ConfigError("All examples must share the same number of features.")
        return cls(
            features=np.array([e.features for e in examples], dtype=float),
            labels=np.array([e.label for e in examples], dtype=np.int64),
            weights=np.array([e.weight for e in examples], dtype=float),
            num_classes=num_classes,
        )

    @classmethod
    def unweighted(cls, features, labels, num_classes: int) -> "WeightedDataset":
        """
        Build a dataset where every instance has weight 1.
        """
        labels = np.asarray(labels)
        return cls(features, labels, np.ones(len(labels)), num_classes)

    def with_weights(self, weights) -> "WeightedDataset":
        """
        Return the same instances under new weights.
        """
        return WeightedDataset(self.features, self.labels, weights, self.num_classes)

    @property
    def num_features(self) -> int:
        return self.features.shape[1]

    @property
    def total_weight(self) -> float:
        return float(self.weights.sum())

    @property
    def examples(self) -> List[WeightedExample]:
        return [
            WeightedExample(tuple(float(v) for v in row), int(label), float(weight))
            for row, label, weight in zip(self.features, self.labels, self.weights)
        ]

    def __len__(self) -> int:
        return len(self.labels)


@dataclass(frozen=True)
class ClassDistribution:
    """
    Class representation of a probability distribution over C classes.

    Attributes:
        probs: One probability per class; entries lie in [0, 1] and sum to 1.
    """

    probs: Tuple[float, ...]

    def __post_init__(self):
        probs = tuple(float(p) for p in self.probs)
        if not probs:
            raise ConfigError("A class distribution needs at least one class.")
        if any(p < 0.0 or p > 1.0 or p != p for p in probs):
            raise ConfigError(f"Class probabilities must lie in [0, 1], got {probs}.")
        if abs(sum(probs) - 1.0) > 1e-9:
            raise ConfigError(f"Class probabilities must sum to 1, got {sum(probs)!r}.")
        object.__setattr__(self, "probs", probs)

    @property
    def num_classes(self) -> int:
        return len(self.probs)

    def as_array(self) -> np.ndarray:
        return np.array(self.probs, dtype=float)

from dataclasses import dataclass

import numpy as np

from moet.models.errors import ConfigError


@dataclass(frozen=True)
class GatingParams:
    """
    Class representation of a softmax linear gate.

    Row j holds the coefficients of expert j over the bias-augmented feature
    vector (x_1, ..., x_F, 1); the last column is the bias.

    Attributes:
        coefficients: E x (F + 1) array of finite reals.
    """

    coefficients: np.ndarray

    def __post_init__(self):
        coefficients = np.array(self.coefficients, dtype=float)
        if coefficients.ndim != 2 or coefficients.shape[0] < 1 or coefficients.shape[1] < 1:
            raise ConfigError("Gate coefficients must be an E x (F + 1) array with E >= 1.")
        if not np.all(np.isfinite(coefficients)):
            raise ConfigError("Gate coefficients must be finite.")
        coefficients.setflags(write=False)
        object.__setattr__(self, "coefficients", coefficients)

    @classmethod
    def zeros(cls, num_experts: int, num_features: int) -> "GatingParams":
        return cls(np.zeros((num_experts, num_features + 1)))

    @property
    def num_experts(self) -> int:
        return self.coefficients.shape[0]

    @property
    def num_features(self) -> int:
        return self.coefficients.shape[1] - 1


@dataclass(frozen=True)
class Responsibilities:
    """
    Class representation of the posterior expert assignment of every instance.

    Attributes:
        values: N x E array; each row is a distribution over experts.
    """

    values: np.ndarray

    def __post_init__(self):
        values = np.array(self.values, dtype=float)
        if values.ndim != 2:
            raise ConfigError("Responsibilities must be an N x E array.")
        if np.any(values < 0) or np.any(values > 1 + 1e-12):
            raise ConfigError("Responsibilities must lie in [0, 1].")
        if len(values) and np.max(np.abs(values.sum(axis=1) - 1.0)) > 1e-9:
            raise ConfigError("Every responsibility row must sum to 1.")
        values.setflags(write=False)
        object.__setattr__(self, "values", values)

from dataclasses import dataclass, field, replace
from typing import List, Tuple

import numpy as np
from dataclasses_json import dataclass_json

from moet.config import (
    DEFAULT_EPOCHS,
    DEFAULT_EXPERT_MAX_DEPTH,
    DEFAULT_GRADIENT_STEPS_PER_EPOCH,
    DEFAULT_LEARNING_RATE,
    DEFAULT_LR_DECAY,
    DEFAULT_NUM_EXPERTS,
    DEFAULT_SMOOTHING_EPS,
    Criterion,
    InferenceMode,
)
from moet.models.errors import ConfigError
from moet.models.gating import GatingParams
from moet.models.trees import TreeNode


@dataclass_json
@dataclass(frozen=True)
class MoetConfig:
    """
    Class representation of the MoËT training hyperparameters.

    Attributes:
        num_experts: Number of expert trees E.
        epochs: Number of EM epochs N_E.
        expert_max_depth: Maximum depth of each expert tree.
        learning_rate: Initial gate learning rate.
        lr_decay: Factor applied to the learning rate after every epoch; 1 disables decay.
        gradient_steps_per_epoch: Gate ascent steps per epoch; 1 reproduces the single-step algorithm.
        smoothing_eps: Additive smoothing of class distributions.
        seed: Seed for gate initialization.
        criterion: Impurity measure used by the expert trees.
    """

    num_experts: int = DEFAULT_NUM_EXPERTS
    epochs: int = DEFAULT_EPOCHS
    expert_max_depth: int = DEFAULT_EXPERT_MAX_DEPTH
    learning_rate: float = DEFAULT_LEARNING_RATE
    lr_decay: float = DEFAULT_LR_DECAY
    gradient_steps_per_epoch: int = DEFAULT_GRADIENT_STEPS_PER_EPOCH
    smoothing_eps: float = DEFAULT_SMOOTHING_EPS
    seed: int = 0
    criterion: Criterion = Criterion.GINI

    def __post_init__(self):
        if self.num_experts < 1:
            raise ConfigError(f"num_experts must be >= 1, got {self.num_experts}.")
        if self.epochs < 1:
            raise ConfigError(f"epochs must be >= 1, got {self.epochs}.")
        if self.expert_max_depth < 0:
            raise ConfigError(f"expert_max_depth must be >= 0, got {self.expert_max_depth}.")
        if not self.learning_rate > 0:
            raise ConfigError(f"learning_rate must be > 0, got {self.learning_rate}.")
        if not 0 < self.lr_decay <= 1:
            raise ConfigError(f"lr_decay must lie in (0, 1], got {self.lr_decay}.")
        if self.gradient_steps_per_epoch < 1:
            raise ConfigError(
                f"gradient_steps_per_epoch must be >= 1, got {self.gradient_steps_per_epoch}."
            )
        if not self.smoothing_eps > 0:
            raise ConfigError(f"smoothing_eps must be > 0, got {self.smoothing_eps}.")
        if self.seed < 0:
            raise ConfigError(f"seed must be unsigned, got {self.seed}.")
        object.__setattr__(self, "criterion", Criterion(self.criterion))


@dataclass(frozen=True)
class MoetModel:
    """
    Class representation of a trained mixture of expert trees.

    The gate is kept in raw feature space: `feature_mean` and `feature_std` are
    the standardization constants the gate was trained under and are only
    needed to resume training.

    Attributes:
        gate: Gate coefficients over raw, bias-augmented features.
        experts: One decision tree per expert.
        feature_mean: Per-feature mean used for standardization.
        feature_std: Per-feature standard deviation used for standardization.
        num_classes: Number of classes C.
        mode: Inference semantics the model is meant to be used with.
    """

    gate: GatingParams
    experts: Tuple[TreeNode, ...]
    feature_mean: np.ndarray
    feature_std: np.ndarray
    num_classes: int
    mode: InferenceMode = InferenceMode.HARD

    def __post_init__(self):
        experts = tuple(self.experts)
        if len(experts) != self.gate.num_experts:
            raise ConfigError(
                f"Model has {len(experts)} experts but the gate has {self.gate.num_experts} rows."
            )
        mean = np.array(self.feature_mean, dtype=float).reshape(-1)
        std = np.array(self.feature_std, dtype=float).reshape(-1)
        if len(mean) != self.gate.num_features or len(std) != self.gate.num_features:
            raise ConfigError("Standardization constants must have one entry per feature.")
        if self.num_classes < 2:
            raise ConfigError(f"A model needs at least two classes, got {self.num_classes}.")
        mean.setflags(write=False)
        std.setflags(write=False)
        object.__setattr__(self, "experts", experts)
        object.__setattr__(self, "feature_mean", mean)
        object.__setattr__(self, "feature_std", std)
        object.__setattr__(self, "mode", InferenceMode(self.mode))

    @property
    def num_experts(self) -> int:
        return len(self.experts)

    @property
    def num_features(self) -> int:
        return self.gate.num_features

    def with_mode(self, mode: InferenceMode) -> "MoetModel":
        """
        Return the same parameters under another inference mode.
        """
        return replace(self, mode=InferenceMode(mode))


@dataclass_json
@dataclass
class TrainReport:
    """
    Class representation of the per-epoch training trace.

    Attributes:
        gating_objective: Weighted gate log-likelihood after each epoch's gate steps.
        expert_log_likelihood: Weighted expert log-likelihood after each epoch's tree fits.
        training_fidelity: Fraction of training instances the final model labels correctly.
    """

    gating_objective: List[float] = field(default_factory=list)
    expert_log_likelihood: List[float] = field(default_factory=list)
    training_fidelity: float = 0.0

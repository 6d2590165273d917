from dataclasses import dataclass
from typing import List, Optional

import numpy as np
from dataclasses_json import dataclass_json

from moet.models.errors import ConfigError
from moet.models.moet_model import MoetModel


@dataclass(frozen=True)
class AggregatedDataset:
    """
    Class representation of the teacher-labeled states collected by DAgger.

    Attributes:
        states: N x F array of visited states.
        actions: Length-N array of teacher actions.
        importances: Length-N array of Q-gap importances I(s) >= 0.
    """

    states: np.ndarray
    actions: np.ndarray
    importances: np.ndarray

    def __post_init__(self):
        states = np.asarray(self.states, dtype=float)
        actions = np.asarray(self.actions, dtype=np.int64).reshape(-1)
        importances = np.asarray(self.importances, dtype=float).reshape(-1)
        if states.ndim != 2 or not (len(states) == len(actions) == len(importances)):
            raise ConfigError("Aggregated states, actions and importances must have matching lengths.")
        if np.any(importances < 0):
            raise ConfigError("Importances must be non-negative.")
        object.__setattr__(self, "states", states)
        object.__setattr__(self, "actions", actions)
        object.__setattr__(self, "importances", importances)

    @classmethod
    def empty(cls, num_features: int) -> "AggregatedDataset":
        return cls(np.zeros((0, num_features)), np.zeros(0), np.zeros(0))

    def extend(self, other: "AggregatedDataset") -> "AggregatedDataset":
        return AggregatedDataset(
            np.vstack([self.states, other.states]),
            np.concatenate([self.actions, other.actions]),
            np.concatenate([self.importances, other.importances]),
        )

    def subset(self, indices) -> "AggregatedDataset":
        return AggregatedDataset(
            self.states[indices], self.actions[indices], self.importances[indices]
        )

    def __len__(self) -> int:
        return len(self.actions)


@dataclass_json
@dataclass
class EvalResult:
    """
    Class representation of a policy evaluation.

    Attributes:
        mean_reward: Mean cumulative reward per episode.
        fidelity: Fraction of student-visited states where student and teacher agree.
        episodes: Number of episodes rolled out.
        depth: Reported model depth.
        nodes: Reported model node count.
        iteration: DAgger iteration that produced the student, if any.
    """

    mean_reward: float
    fidelity: float
    episodes: int
    depth: int = 0
    nodes: int = 0
    iteration: Optional[int] = None

    def __post_init__(self):
        if not 0.0 <= self.fidelity <= 1.0:
            raise ConfigError(f"Fidelity must lie in [0, 1], got {self.fidelity}.")


@dataclass_json
@dataclass(frozen=True)
class ScoredModel:
    """
    Class representation of a model's position in reward/fidelity space.

    Attributes:
        reward: Mean reward of the model.
        fidelity: Fidelity of the model.
        model_id: Identifier of the model.
    """

    reward: float
    fidelity: float
    model_id: str


@dataclass_json
@dataclass
class LedgerRow:
    """
    Class representation of one row of the CSV results ledger.

    Attributes:
        env: Environment name.
        learner: Learner kind.
        E: Configured number of experts (1 for trees).
        depth: Configured maximum tree or expert depth.
        iteration: DAgger iteration of the reported student.
        reward: Mean evaluation reward.
        fidelity: Evaluation fidelity.
        nodes: Reported node count.
        depth_actual: Reported depth of the trained model.
        seed: Run seed.
    """

    env: str
    learner: str
    E: int
    depth: int
    iteration: int
    reward: float
    fidelity: float
    nodes: int
    depth_actual: int
    seed: int


@dataclass
class DaggerResult:
    """
    Class representation of the outcome of an imitation run.

    Attributes:
        best_model: Student with the highest mean reward, ties broken by fidelity.
        best_result: Evaluation of the best student.
        results: Evaluation of every iteration's student, in order.
        dataset: Final aggregated dataset.
    """

    best_model: MoetModel
    best_result: EvalResult
    results: List[EvalResult]
    dataset: AggregatedDataset

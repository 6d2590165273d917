from dataclasses import dataclass, field
from typing import Any, Dict

from moet.config import (
    DEFAULT_ANGLE_LIMIT,
    DEFAULT_DAGGER_ITERATIONS,
    DEFAULT_EVAL_EPISODES,
    DEFAULT_MAX_SAMPLES,
    DEFAULT_ROLLOUTS_PER_ITERATION,
    DEFAULT_S0_BOUND,
    DEFAULT_SOLVER_TIMEOUT,
    DEFAULT_T_MAX,
    EnvName,
    LearnerKind,
    QEstimateOptions,
)
from moet.models.errors import ConfigError
from moet.models.moet_model import MoetConfig
from moet.models.trees import TreeFitConfig


@dataclass(frozen=True)
class DaggerConfig:
    """
    Class representation of the imitation loop settings.

    Attributes:
        iterations: Number of DAgger iterations.
        max_samples: Cap on the aggregated dataset size.
        rollouts_per_iteration: Episodes sampled per iteration.
        eval_episodes: Episodes used to score every iteration's student.
        q_options: Monte-Carlo Q-value options for scripted teachers.
    """

    iterations: int = DEFAULT_DAGGER_ITERATIONS
    max_samples: int = DEFAULT_MAX_SAMPLES
    rollouts_per_iteration: int = DEFAULT_ROLLOUTS_PER_ITERATION
    eval_episodes: int = DEFAULT_EVAL_EPISODES
    q_options: QEstimateOptions = field(default_factory=dict)

    def __post_init__(self):
        for name in ("iterations", "max_samples", "rollouts_per_iteration", "eval_episodes"):
            if getattr(self, name) < 1:
                raise ConfigError(f"dagger {name} must be >= 1, got {getattr(self, name)}.")


@dataclass(frozen=True)
class VerifyConfig:
    """
    Class representation of the bounded safety query settings.

    Attributes:
        t_max: Number of steps checked.
        y_0: Bound on the pole angle.
        s0_bound: Half-width of the initial-state box on every feature.
        timeout: Seconds the solver may run.
    """

    t_max: int = DEFAULT_T_MAX
    y_0: float = DEFAULT_ANGLE_LIMIT
    s0_bound: float = DEFAULT_S0_BOUND
    timeout: float = DEFAULT_SOLVER_TIMEOUT

    def __post_init__(self):
        if self.t_max < 1:
            raise ConfigError(f"verify t_max must be >= 1, got {self.t_max}.")
        if self.y_0 < 0 or self.s0_bound < 0:
            raise ConfigError("verify y_0 and s0_bound must be non-negative.")
        if not self.timeout > 0:
            raise ConfigError(f"verify timeout must be positive, got {self.timeout}.")


@dataclass(frozen=True)
class RunConfig:
    """
    Class representation of a complete training run.

    Attributes:
        env: Environment to distill on.
        env_overrides: Field overrides applied to the environment's spec.
        learner: Student learner kind.
        moet: MoËT hyperparameters; ignored by the tree learner.
        tree: Tree stopping rules; used by the tree learner.
        dagger: Imitation loop settings.
        verify: Safety query settings.
        seed: Run seed.
        out_dir: Directory run outputs are written to.
    """

    env: EnvName = EnvName.GRIDWORLD
    env_overrides: Dict[str, Any] = field(default_factory=dict)
    learner: LearnerKind = LearnerKind.MOET_HARD
    moet: MoetConfig = field(default_factory=MoetConfig)
    tree: TreeFitConfig = field(default_factory=lambda: TreeFitConfig(max_depth=3))
    dagger: DaggerConfig = field(default_factory=DaggerConfig)
    verify: VerifyConfig = field(default_factory=VerifyConfig)
    seed: int = 0
    out_dir: str = "out"

    def __post_init__(self):
        try:
            object.__setattr__(self, "env", EnvName(self.env))
            object.__setattr__(self, "learner", LearnerKind(self.learner))
        except ValueError as exc:
            raise ConfigError(str(exc)) from exc
        if self.seed < 0:
            raise ConfigError(f"seed must be unsigned, got {self.seed}.")

    @property
    def num_experts(self) -> int:
        return 1 if self.learner == LearnerKind.VIPER_TREE else self.moet.num_experts

    @property
    def max_depth(self) -> int:
        if self.learner == LearnerKind.VIPER_TREE:
            return self.tree.max_depth
        return self.moet.expert_max_depth

from enum import Enum
from typing import TypedDict

from typing_extensions import NotRequired


class Criterion(str, Enum):
    """
    Enum representing the impurity measures supported by the tree learner.
    """

    GINI = "gini"
    ENTROPY = "entropy"


class InferenceMode(str, Enum):
    """
    Enum representing how a trained model combines its experts.

    SOFT mixes expert class distributions with the gate probabilities,
    HARD only consults the expert with the highest gate score.
    """

    SOFT = "soft"
    HARD = "hard"


class LearnerKind(str, Enum):
    """
    Enum representing the student learners available to the imitation loop.
    """

    VIPER_TREE = "viper-tree"
    MOET = "moet"
    MOET_HARD = "moet-hard"


class EnvName(str, Enum):
    """
    Enum representing the built-in environments.
    """

    GRIDWORLD = "gridworld"
    CARTPOLE = "cartpole"
    MOUNTAINCAR = "mountaincar"


class MoetConfigOverrides(TypedDict):
    """
    Overrides to apply on top of the default MoËT training configuration.

    Attributes:
        num_experts: Number of expert trees.
        epochs: Number of EM epochs.
        expert_max_depth: Maximum depth of every expert tree.
        learning_rate: Gate learning rate.
        lr_decay: Factor the learning rate is multiplied by after each epoch.
        gradient_steps_per_epoch: Gate ascent steps taken per epoch.
        smoothing_eps: Additive smoothing of leaf class distributions.
        seed: Seed for gate initialization.
    """

    num_experts: NotRequired[int]
    epochs: NotRequired[int]
    expert_max_depth: NotRequired[int]
    learning_rate: NotRequired[float]
    lr_decay: NotRequired[float]
    gradient_steps_per_epoch: NotRequired[int]
    smoothing_eps: NotRequired[float]
    seed: NotRequired[int]


class QEstimateOptions(TypedDict):
    """
    Options for Monte-Carlo estimation of teacher Q-values.

    Attributes:
        num_rollouts: Rollouts averaged per (state, action) pair.
        horizon: Steps simulated after the first action.
        discount: Per-step discount factor.
        rollout_noise: Half-width of the uniform jitter added to the start state of each rollout.
        exploration: Probability that a continuation step takes a uniformly random action.
    """

    num_rollouts: NotRequired[int]
    horizon: NotRequired[int]
    discount: NotRequired[float]
    rollout_noise: NotRequired[float]
    exploration: NotRequired[float]


DEFAULT_SMOOTHING_EPS = 1e-6
""" Additive per-class smoothing applied to leaf and global class distributions. """

DEFAULT_MIN_WEIGHT_SPLIT = 1e-9
""" Nodes whose total instance weight falls below this value are not split. """

MIN_SPLIT_GAIN = 1e-12
""" A split is executed only if it lowers impurity by more than this amount. """

DEFAULT_NUM_EXPERTS = 2
DEFAULT_EPOCHS = 300
DEFAULT_EXPERT_MAX_DEPTH = 0
DEFAULT_LEARNING_RATE = 1.0
""" Gate step size on the mean log-likelihood of the standardized features. """

DEFAULT_LR_DECAY = 1.0
""" Per-epoch learning-rate factor; 0.97 reproduces the decaying schedule. """

DEFAULT_GRADIENT_STEPS_PER_EPOCH = 20

GATE_INIT_STD = 0.01
""" Standard deviation of the normal distribution gate coefficients are drawn from. """

LOG_FLOOR = -690.7755278982137
""" log(1e-300), the floor applied to gate log-probabilities in the gating objective. """

DEGENERATE_EXPERT_FRACTION = 1e-6
""" An expert whose total responsibility is below this fraction of N keeps its previous tree. """

DEFAULT_DAGGER_ITERATIONS = 40
DEFAULT_MAX_SAMPLES = 200_000
DEFAULT_ROLLOUTS_PER_ITERATION = 10
DEFAULT_EVAL_EPISODES = 100

DEFAULT_Q_OPTIONS: QEstimateOptions = {
    "num_rollouts": 8,
    "horizon": 50,
    "discount": 0.99,
    "rollout_noise": 0.0,
    "exploration": 0.0,
}
""" Default Monte-Carlo Q-value options for scripted teachers. """

CARTPOLE_Q_OPTIONS: QEstimateOptions = {"exploration": 0.9}
""" CartPole defaults layered over DEFAULT_Q_OPTIONS; caller options take precedence. """

CARTPOLE_TEACHER_WEIGHTS = (0.1, 0.3, 0.8, 1.0)
""" Weights of the scripted CartPole controller over (x, x_dot, theta, theta_dot); pushes right iff the dot product is positive. """

DEFAULT_T_MAX = 10
DEFAULT_ANGLE_LIMIT = 0.2094395
""" 12 degrees in radians. """

DEFAULT_S0_BOUND = 0.05
""" Half-width of the CartPole initial-state box on every feature. """

DEFAULT_SOLVER_COMMAND = "z3 -smt2"
""" The solver invoked when neither a flag nor the environment names one. """

SOLVER_COMMAND_ENV_VAR = "MOET_SOLVER_CMD"
""" Environment variable holding the default solver command. """

DEFAULT_SOLVER_TIMEOUT = 600
""" Seconds the solver process may run before it is killed. """

REEVAL_SEED_OFFSET = 10_000
""" Offset added to the evaluation seed when Pareto models are re-evaluated. """

MODEL_FORMAT_VERSION = 1
""" Version written to, and required from, the header of model files. """

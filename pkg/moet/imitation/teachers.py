from typing import Callable, Optional

import numpy as np

from moet.config import CARTPOLE_Q_OPTIONS, CARTPOLE_TEACHER_WEIGHTS, DEFAULT_Q_OPTIONS, QEstimateOptions
from moet.envs.cartpole import PUSH_LEFT, PUSH_RIGHT, CartPole
from moet.envs.environment import Environment
from moet.envs.gridworld import Gridworld, exit_distances, gridworld_optimal_policy, gridworld_q_values
from moet.envs.mountaincar import MountainCar
from moet.envs.mountaincar import PUSH_LEFT as CAR_LEFT
from moet.envs.mountaincar import PUSH_RIGHT as CAR_RIGHT
from moet.models.envs import CartPoleSpec, GridworldSpec, MountainCarSpec
from moet.models.errors import ConfigError

BatchPolicy = Callable[[np.ndarray], np.ndarray]


class TeacherPolicy:
    """
    Base class for teachers: a policy together with its action values.
    """

    def act(self, values) -> int:
        return int(self.act_batch(np.atleast_2d(values))[0])

    def act_batch(self, values: np.ndarray) -> np.ndarray:
        raise NotImplementedError

    def q_values(self, values) -> np.ndarray:
        return self.q_values_batch(np.atleast_2d(values))[0]

    def q_values_batch(self, values: np.ndarray) -> np.ndarray:
        raise NotImplementedError

    def __call__(self, values) -> int:
        return self.act(values)


def importance(teacher: TeacherPolicy, values) -> float:
    """
    Q-gap importance I(s) = max_a Q(s, a) - min_a Q(s, a).
    """
    q = teacher.q_values(values)
    return float(q.max() - q.min())


def importance_batch(teacher: TeacherPolicy, values: np.ndarray) -> np.ndarray:
    q = teacher.q_values_batch(np.atleast_2d(values))
    return q.max(axis=1) - q.min(axis=1)


def _state_rng(seed: int, row: np.ndarray) -> np.random.Generator:
    return np.random.default_rng([seed, *np.ascontiguousarray(row, dtype=np.float64).view(np.uint32).tolist()])


def estimate_q_values(
    env: Environment,
    policy: BatchPolicy,
    values: np.ndarray,
    options: Optional[QEstimateOptions] = None,
    seed: int = 0,
) -> np.ndarray:
    """
    Monte-Carlo estimate of Q(s, a) under a continuation policy.

    Each rollout takes action a first, then follows `policy` for `horizon`
    discounted steps or until the environment terminates; with probability
    `exploration` a continuation step takes a uniformly random action instead.
    The start-state jitter and the exploration draws of a state come from a
    generator seeded by `seed` and the state itself, and all actions share them.
    With deterministic dynamics, no jitter and no exploration a single rollout
    is exact, so only one is run.

    Args:
        env: Environment whose `step_batch` simulates the rollouts.
        policy: Continuation policy over N x F arrays.
        values: N x F array of start states.
        options: Rollout count, horizon, discount, start-state jitter and exploration.
        seed: Seed combined with every state.

    Returns:
        N x A array of estimated action values.
    """
    opts: QEstimateOptions = {**DEFAULT_Q_OPTIONS, **(options or {})}
    values = np.atleast_2d(np.asarray(values, dtype=float))
    num_states, num_features = values.shape
    noise, exploration, horizon = opts["rollout_noise"], opts["exploration"], opts["horizon"]
    randomized = noise > 0 or exploration > 0
    num_rollouts = opts["num_rollouts"] if randomized or not env.deterministic else 1

    jitter = np.zeros((num_states, num_rollouts, num_features))
    explore = np.zeros((num_states, num_rollouts, horizon), dtype=bool)
    random_actions = np.zeros((num_states, num_rollouts, horizon), dtype=int)
    if randomized:
        for i, row in enumerate(values):
            rng = _state_rng(seed, row)
            jitter[i] = rng.uniform(-noise, noise, size=(num_rollouts, num_features))
            explore[i] = rng.random((num_rollouts, horizon)) < exploration
            random_actions[i] = rng.integers(env.num_actions, size=(num_rollouts, horizon))
    starts = np.repeat(values, num_rollouts, axis=0) + jitter.reshape(-1, num_features)
    explore = explore.reshape(-1, horizon)
    random_actions = random_actions.reshape(-1, horizon)

    q = np.zeros((num_states, env.num_actions))
    for action in range(env.num_actions):
        current, reward, done = env.step_batch(starts, np.full(len(starts), action))
        total = reward.copy()
        alive = ~done
        discount = 1.0
        for t in range(horizon):
            if not alive.any():
                break
            discount *= opts["discount"]
            actions = np.where(explore[:, t], random_actions[:, t], policy(current))
            current, reward, done = env.step_batch(current, actions)
            total += discount * reward * alive
            alive &= ~done
        q[:, action] = total.reshape(num_states, num_rollouts).mean(axis=1)
    return q


class GridworldTeacher(TeacherPolicy):
    """
    Shortest-path teacher with exact action values.
    """

    def __init__(self, spec: GridworldSpec):
        self.spec = spec
        self.distances = exit_distances(spec)
        self.policy = gridworld_optimal_policy(spec)

    def act_batch(self, values: np.ndarray) -> np.ndarray:
        return np.array([self.policy[(int(x), int(y))] for x, y in np.atleast_2d(values)])

    def q_values_batch(self, values: np.ndarray) -> np.ndarray:
        return np.array(
            [gridworld_q_values(self.spec, self.distances, (int(x), int(y))) for x, y in np.atleast_2d(values)]
        )


class ScriptedTeacher(TeacherPolicy):
    """
    Teacher given by a closed-form controller; action values come from Monte-Carlo rollouts.

    Attributes:
        env: Environment used to simulate the rollouts.
        controller: Vectorized controller.
        q_options: Monte-Carlo options.
        seed: Seed for the rollout jitter.
    """

    def __init__(
        self,
        env: Environment,
        controller: BatchPolicy,
        q_options: Optional[QEstimateOptions] = None,
        seed: int = 0,
    ):
        self.env = env
        self.controller = controller
        self.q_options = q_options
        self.seed = seed

    def act_batch(self, values: np.ndarray) -> np.ndarray:
        return self.controller(np.atleast_2d(values))

    def q_values_batch(self, values: np.ndarray) -> np.ndarray:
        return estimate_q_values(self.env, self.controller, values, self.q_options, self.seed)


def gridworld_teacher(spec: GridworldSpec) -> GridworldTeacher:
    """
    Optimal Gridworld teacher.

    Raises:
        UnreachableCellError: If some free cell cannot reach a door.
    """
    return GridworldTeacher(spec)


def cartpole_teacher(
    spec: CartPoleSpec,
    q_options: Optional[QEstimateOptions] = None,
    weights=CARTPOLE_TEACHER_WEIGHTS,
) -> ScriptedTeacher:
    """
    Affine CartPole controller that pushes right iff `weights` . s > 0.

    Action values use CARTPOLE_Q_OPTIONS unless `q_options` overrides them.
    """
    weights = np.asarray(weights, dtype=float)

    def controller(values: np.ndarray) -> np.ndarray:
        return np.where(values @ weights > 0, PUSH_RIGHT, PUSH_LEFT)

    return ScriptedTeacher(CartPole(spec), controller, {**CARTPOLE_Q_OPTIONS, **(q_options or {})})


def mountaincar_teacher(spec: MountainCarSpec, q_options: Optional[QEstimateOptions] = None) -> ScriptedTeacher:
    """
    Energy-pumping controller that pushes in the direction of the velocity.
    """

    def controller(values: np.ndarray) -> np.ndarray:
        return np.where(values[:, 1] >= 0, CAR_RIGHT, CAR_LEFT)

    return ScriptedTeacher(MountainCar(spec), controller, q_options)


def make_teacher(env: Environment, q_options: Optional[QEstimateOptions] = None) -> TeacherPolicy:
    """
    Default teacher of a built-in environment.
    """
    if isinstance(env, Gridworld):
        return gridworld_teacher(env.spec)
    if isinstance(env, CartPole):
        return cartpole_teacher(env.spec, q_options)
    if isinstance(env, MountainCar):
        return mountaincar_teacher(env.spec, q_options)
    raise ConfigError(f"No default teacher for {type(env).__name__}.")

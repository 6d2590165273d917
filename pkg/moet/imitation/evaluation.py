from typing import Callable, List, Optional, Sequence, Tuple, Union

import numpy as np

from moet.envs.environment import Environment
from moet.envs.rollout import Policy, rollout
from moet.imitation.teachers import TeacherPolicy
from moet.learning.trainer import model_stats, predict, predict_batch
from moet.models.errors import ConfigError
from moet.models.imitation import EvalResult, ScoredModel
from moet.models.moet_model import MoetModel

Student = Union[MoetModel, TeacherPolicy, Policy]


def as_policy(student: Student) -> Policy:
    """
    Turn a model, teacher or plain callable into a single-state policy.
    """
    if isinstance(student, MoetModel):
        return lambda values: predict(student, values)
    return student


def as_batch_policy(student: Student) -> Callable[[np.ndarray], np.ndarray]:
    if isinstance(student, MoetModel):
        return lambda values: predict_batch(student, values)
    if isinstance(student, TeacherPolicy):
        return student.act_batch
    return lambda values: np.array([student(row) for row in np.atleast_2d(values)])


def evaluate_policy(
    env: Environment,
    student: Student,
    teacher: TeacherPolicy,
    episodes: int,
    seed: int,
    iteration: Optional[int] = None,
) -> EvalResult:
    """
    Roll out a student and measure its reward and its agreement with the teacher.

    Episode k starts from the state drawn with seed (seed, k). Fidelity is the
    fraction of states visited by the student where it acts like the teacher.

    Args:
        env: The environment.
        student: The policy under evaluation.
        teacher: The reference policy.
        episodes: Number of episodes.
        seed: Base seed.
        iteration: DAgger iteration recorded in the result.

    Returns:
        The evaluation.
    """
    if episodes < 1:
        raise ConfigError(f"episodes must be >= 1, got {episodes}.")
    policy = as_policy(student)
    rewards = []
    visited = []
    taken = []
    for episode in range(episodes):
        transitions, total = rollout(env, policy, [seed, episode])
        rewards.append(total)
        visited.extend(t.state.values for t in transitions)
        taken.extend(t.action for t in transitions)

    if visited:
        agreement = teacher.act_batch(np.array(visited)) == np.array(taken)
        fidelity = float(np.mean(agreement))
    else:
        fidelity = 1.0
    depth, nodes = model_stats(student) if isinstance(student, MoetModel) else (0, 0)
    return EvalResult(
        mean_reward=float(np.mean(rewards)),
        fidelity=fidelity,
        episodes=episodes,
        depth=depth,
        nodes=nodes,
        iteration=iteration,
    )


def pareto_front(results: Sequence[ScoredModel]) -> List[ScoredModel]:
    """
    Models not dominated in (reward, fidelity) by any other model.

    A model is dominated if another one is at least as good in both metrics
    and strictly better in one. Input order is preserved.
    """
    if not results:
        raise ConfigError("pareto_front needs at least one result.")
    points = np.array([(r.reward, r.fidelity) for r in results], dtype=float)
    front = []
    for i, result in enumerate(results):
        at_least = np.all(points >= points[i], axis=1)
        better = np.any(points > points[i], axis=1)
        if not np.any(at_least & better):
            front.append(result)
    return front


def policy_slice(
    policy: Student,
    x_feature: int,
    y_feature: int,
    x_range: Tuple[float, float],
    y_range: Tuple[float, float],
    resolution: int,
    base_state: Sequence[float],
) -> Tuple[np.ndarray, np.ndarray, np.ndarray]:
    """
    Actions of a policy over a grid of two features, all other features fixed.

    Args:
        policy: The policy.
        x_feature: Feature varied along the columns.
        y_feature: Feature varied along the rows.
        x_range: (low, high) of the column feature.
        y_range: (low, high) of the row feature.
        resolution: Grid points per axis.
        base_state: Values of the features that stay fixed.

    Returns:
        Column values, row values and the resolution x resolution action grid.
    """
    if resolution < 2:
        raise ConfigError(f"resolution must be >= 2, got {resolution}.")
    xs = np.linspace(x_range[0], x_range[1], resolution)
    ys = np.linspace(y_range[0], y_range[1], resolution)
    grid_x, grid_y = np.meshgrid(xs, ys)
    states = np.tile(np.asarray(base_state, dtype=float), (grid_x.size, 1))
    states[:, x_feature] = grid_x.ravel()
    states[:, y_feature] = grid_y.ravel()
    actions = as_batch_policy(policy)(states)
    return xs, ys, np.asarray(actions).reshape(grid_x.shape)

import logging
from typing import Callable, Optional

import numpy as np

from moet.config import (
    DEFAULT_DAGGER_ITERATIONS,
    DEFAULT_EVAL_EPISODES,
    DEFAULT_MAX_SAMPLES,
    DEFAULT_ROLLOUTS_PER_ITERATION,
    InferenceMode,
    LearnerKind,
)
from moet.envs.environment import Environment
from moet.envs.rollout import rollout
from moet.imitation.evaluation import as_policy, evaluate_policy
from moet.imitation.teachers import TeacherPolicy, importance_batch
from moet.learning.dtree import fit_tree
from moet.learning.trainer import train_moet, tree_model
from moet.models.datasets import WeightedDataset
from moet.models.errors import ConfigError
from moet.models.imitation import AggregatedDataset, DaggerResult
from moet.models.moet_model import MoetConfig, MoetModel
from moet.models.trees import TreeFitConfig

logger = logging.getLogger(__name__)

StudentLearner = Callable[[WeightedDataset], MoetModel]
""" Fits a student model on a teacher-labeled dataset. """


def make_learner(
    kind: LearnerKind,
    moet_cfg: Optional[MoetConfig] = None,
    tree_cfg: Optional[TreeFitConfig] = None,
) -> StudentLearner:
    """
    Student learner for a learner kind.

    Args:
        kind: viper-tree fits a single tree, moet and moet-hard train a mixture
            and differ only in the inference mode of the result.
        moet_cfg: Mixture hyperparameters.
        tree_cfg: Tree stopping rules for viper-tree.

    Returns:
        The learner.
    """
    try:
        kind = LearnerKind(kind)
    except ValueError as exc:
        raise ConfigError(f"Unknown learner {kind!r}.") from exc
    if kind == LearnerKind.VIPER_TREE:
        cfg = tree_cfg or TreeFitConfig(max_depth=3)

        def learn_tree(data: WeightedDataset) -> MoetModel:
            return tree_model(fit_tree(data, cfg), data.num_features, data.num_classes)

        return learn_tree

    cfg = moet_cfg or MoetConfig()
    mode = InferenceMode.SOFT if kind == LearnerKind.MOET else InferenceMode.HARD

    def learn_moet(data: WeightedDataset) -> MoetModel:
        return train_moet(data, cfg, mode)[0]

    return learn_moet


def _importance_resample(dataset: AggregatedDataset, rng: np.random.Generator) -> np.ndarray:
    weights = dataset.importances
    total = weights.sum()
    probabilities = weights / total if total > 0 else None
    return rng.choice(len(dataset), size=len(dataset), replace=True, p=probabilities)


def dagger_train(
    env: Environment,
    teacher: TeacherPolicy,
    learner: StudentLearner,
    iterations: int = DEFAULT_DAGGER_ITERATIONS,
    max_samples: int = DEFAULT_MAX_SAMPLES,
    seed: int = 0,
    rollouts_per_iteration: int = DEFAULT_ROLLOUTS_PER_ITERATION,
    eval_episodes: int = DEFAULT_EVAL_EPISODES,
) -> DaggerResult:
    """
    Distill a teacher into a student with importance-weighted DAgger.

    The first iteration samples trajectories with the teacher, later ones with
    the previous student. Every visited state is labeled by the teacher and
    added to the dataset, which is down-sampled uniformly once it exceeds
    `max_samples`. Each student is trained on a resample of the dataset drawn
    with replacement in proportion to the teacher's Q-gap importance.

    Args:
        env: The environment.
        teacher: Policy supplying labels and importances.
        learner: Fits a student on a labeled dataset.
        iterations: Number of iterations.
        max_samples: Cap on the aggregated dataset size.
        seed: Seed for trajectories, resampling and evaluation.
        rollouts_per_iteration: Episodes sampled per iteration.
        eval_episodes: Episodes used to evaluate each student.

    Returns:
        The best student, the evaluation of every iteration and the final dataset.
    """
    if iterations < 1 or max_samples < 1:
        raise ConfigError("iterations and max_samples must be >= 1.")
    rng = np.random.default_rng(seed)
    dataset = AggregatedDataset.empty(env.num_features)
    sampler = as_policy(teacher)
    results = []
    best_model, best_result = None, None

    for iteration in range(1, iterations + 1):
        visited = []
        for episode in range(rollouts_per_iteration):
            transitions, _ = rollout(env, sampler, [seed, iteration, episode])
            visited.extend(t.state.values for t in transitions)
        states = np.array(visited, dtype=float).reshape(-1, env.num_features)
        dataset = dataset.extend(
            AggregatedDataset(states, teacher.act_batch(states), importance_batch(teacher, states))
        )
        if len(dataset) > max_samples:
            logger.debug("Down-sampling %d aggregated states to %d", len(dataset), max_samples)
            keep = np.sort(rng.choice(len(dataset), size=max_samples, replace=False))
            dataset = dataset.subset(keep)

        sample = _importance_resample(dataset, rng)
        data = WeightedDataset.unweighted(dataset.states[sample], dataset.actions[sample], env.num_actions)
        student = learner(data)
        result = evaluate_policy(env, student, teacher, eval_episodes, seed, iteration=iteration)
        results.append(result)
        logger.info(
            "Iteration %d: reward %.4f, fidelity %.4f, %d states",
            iteration,
            result.mean_reward,
            result.fidelity,
            len(dataset),
        )

        if best_result is None or (result.mean_reward, result.fidelity) > (
            best_result.mean_reward,
            best_result.fidelity,
        ):
            best_model, best_result = student, result
        sampler = as_policy(student)

    return DaggerResult(best_model, best_result, results, dataset)
